//! Verification instruments: exact privacy audits, distortion sweeps and
//! communication-cost tables.

mod comm;
mod distortion;
mod privacy;
mod render;

use thiserror::Error;

pub use comm::{comm_report, CommRow, FieldRule, MRule};
pub use distortion::{distortion_experiment, DistortionReport};
pub use privacy::{
    all_sequences, audit_all, audit_privacy_alice, audit_privacy_bob, audit_privacy_charlie, AuditConfig, AuditTarget,
    Conditioning, PrivacyReport, Verdict, DEFAULT_AUDIT_BUDGET,
};
pub use render::{comm_csv, comm_text, distortion_csv, distortion_text, privacy_text, to_json};

use crate::engine::EngineError;
use crate::sampling::SamplingError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("enumeration needs {required} steps, over the budget of {budget}; try a smaller n, m, alphabet or field")]
    BudgetExceeded { required: String, budget: u64 },
    #[error("no input variants to compare")]
    NoVariants,
    #[error("randomness depth varies between runs; exact audit requires a fixed draw schedule")]
    VariableDepth,
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}
