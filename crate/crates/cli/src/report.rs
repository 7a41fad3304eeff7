//! Machine-readable command reports.

use multijet_core::Confidence;
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_POSITIVE: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_INPUT: i32 = 64;

/// Settings echoed in every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlagEcho {
    pub seed: u64,
    pub depth: usize,
    pub pivot: String,
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub file: String,
    pub flags: FlagEcho,
    pub verdict: String,
    pub exit_code: i32,
    /// `proven` or `numeric`.
    pub confidence: String,
    pub assumptions: Vec<String>,
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
    /// Human-readable lines for `--output text`.
    #[serde(skip)]
    pub summary: Vec<String>,
}

pub fn confidence_label(c: Confidence) -> &'static str {
    match c {
        Confidence::Exact => "proven",
        Confidence::Numeric => "numeric",
    }
}

impl Report {
    /// Report for a file that could not be read.
    pub fn input_failure(command: String, file: String, flags: FlagEcho, message: String) -> Report {
        Report {
            schema_version: SCHEMA_VERSION,
            command,
            file,
            flags,
            verdict: "InputError".into(),
            exit_code: EXIT_INPUT,
            confidence: confidence_label(Confidence::Exact).into(),
            assumptions: Vec::new(),
            result: Value::Null,
            error: Some(ErrorInfo {
                kind: "InputError".into(),
                message,
                line: None,
            }),
            summary: Vec::new(),
        }
    }

    pub fn render_text(&self) -> String {
        let mut out = format!("{} {}\n", self.command, self.file);
        out.push_str(&format!(
            "verdict: {} (exit {}, confidence {})\n",
            self.verdict, self.exit_code, self.confidence
        ));
        if let Some(e) = &self.error {
            match e.line {
                Some(l) => out.push_str(&format!("error: {}:{}: {}\n", self.file, l, e.message)),
                None => out.push_str(&format!("error: {}: {}\n", self.file, e.message)),
            }
        }
        for line in &self.summary {
            out.push_str("  ");
            out.push_str(line);
            out.push('\n');
        }
        for a in &self.assumptions {
            out.push_str(&format!("  assumption: {a}\n"));
        }
        out
    }
}
