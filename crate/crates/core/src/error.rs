use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("vector norm {0:e} is below the degenerate threshold")]
    DegenerateNorm(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value encountered: {0}")]
    NonFiniteValue(String),
    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },
    #[error("batch of {0} pairs is too small, need at least 2")]
    BatchTooSmall(usize),
    #[error("batch sits on a hinge kink or argmax tie")]
    TieAtKink,
    #[error("step {step} is outside a run of {total_steps} steps")]
    StepOutOfRange { step: u64, total_steps: u64 },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("pair batch size {0} is odd")]
    OddBatch(usize),
    #[error("need {needed} subjects, dataset has {available}")]
    TooFewSubjects { needed: usize, available: usize },
    #[error("score set is empty")]
    EmptyScores,
    #[error("bad fold count k={k} for {num_subjects} subjects")]
    BadK { k: usize, num_subjects: usize },
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
