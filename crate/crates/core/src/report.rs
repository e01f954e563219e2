use serde::{Deserialize, Serialize};

/// Grid, degree and seed a check was run with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportContext {
    pub nx: usize,
    pub ny: usize,
    pub degree: i32,
    pub seed: u64,
}

/// One checked identity: measured defect against its tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub identity: String,
    pub tag: String,
    pub defect: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Symbolic factor the compared quantities carry on both sides (e.g. `i/pi`).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub prefactor: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
    pub context: ReportContext,
}

impl VerificationReport {
    pub fn new(
        identity: impl Into<String>,
        tag: impl Into<String>,
        defect: f64,
        tolerance: f64,
        context: ReportContext,
    ) -> Self {
        assert!(tolerance >= 0.0, "tolerance must be nonnegative");
        // NaN defects fail.
        let defect = if defect.is_nan() { f64::INFINITY } else { defect.abs() };
        VerificationReport {
            identity: identity.into(),
            tag: tag.into(),
            defect,
            tolerance,
            pass: defect <= tolerance,
            prefactor: None,
            note: None,
            context,
        }
    }

    pub fn with_prefactor(mut self, p: impl Into<String>) -> Self {
        self.prefactor = Some(p.into());
        self
    }

    pub fn with_note(mut self, n: impl Into<String>) -> Self {
        self.note = Some(n.into());
        self
    }
}
