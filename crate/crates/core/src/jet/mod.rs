//! Connections, jet fields, contact forms and sections.

mod fields;
mod forms;
mod sections;

pub use fields::{
    curvature_e, curvature_j1, jetfield_to_mvf, mvf_to_jetfield, sopde_check, sopde_integrability_conditions,
    ConnectionE, CurvatureJ1, JetFieldJ1, SopdeConditions, SopdeReport,
};
pub use forms::{contact_forms, AdaptedForm};
pub use sections::{
    connection_section_residual, holonomy_check, integral_section_residual, prolong_section, prolong_vector_field,
    JetSection, Section, SectionResidual,
};
