use alloc::string::String;

/// Errors raised by instance validation and bound computations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("length mismatch in {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid distribution ({what}): {reason}")]
    InvalidDistribution { what: String, reason: String },
    #[error("{name} = {value} is outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("invalid generator: {0}")]
    InvalidGenerator(String),
    #[error("invalid transform: {0}")]
    InvalidTransform(String),
    #[error("transform value {value} at loss {loss} is outside [0, 1]")]
    TransformRange { loss: f64, value: f64 },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("transcript space has {count} transcripts, above the cap of {cap}")]
    TranscriptCap { count: u128, cap: usize },
    #[error("policy has no action distribution for reachable history `{0}`")]
    MissingPolicyRow(String),
    #[error("candidate reference list is empty")]
    NoCandidates,
    #[error("expected a {expected} report, got {got}")]
    WrongReportKind {
        expected: &'static str,
        got: &'static str,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::Domain {
            name,
            value,
            domain: "[0, 1]",
        })
    }
}
