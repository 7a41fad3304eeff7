//! Vector fields, decomposable multivector fields and the integrability algorithm.

mod chart;
mod constraints;
mod field;
mod integrability;

pub use chart::ChartSpec;
pub use constraints::{Constraint, ConstraintSet, Membership, Provenance, Reducer};
pub(crate) use field::same_chart;
pub use field::{lie_bracket, DecomposableMVF, VectorField};
pub use integrability::{
    integrability_algorithm, involutivity_defect, transversality_check, BranchNode, BranchTree, BranchVerdict,
    IntegrabilityConfig, InvolutivityDefect, TransversalityReport,
};
