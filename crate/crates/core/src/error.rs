use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no arms to select from")]
    NoArms,
    #[error("arm index {index} out of range for {len} arms")]
    ArmOutOfRange { index: usize, len: usize },
    #[error("expected {expected} rewards, got {got}")]
    RewardLengthMismatch { expected: usize, got: usize },
    #[error("invalid reward {0}: rewards are +1 or -1")]
    InvalidReward(i32),
    #[error("step index must be at least 1")]
    ZeroStep,
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("AUC undefined: need at least one faulty and one clean module")]
    DegenerateLabels,
    #[error("target AUC {0} outside [0.5, 1.0]")]
    TargetOutOfRange(f64),
    #[error("target AUC {target} not reachable within {tolerance}; best achievable is {best}")]
    InfeasibleTarget { target: f64, best: f64, tolerance: f64 },
    #[error("model `{model}` does not match the module universe: {detail}")]
    ModelMismatch { model: String, detail: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("score at position {0} is not finite")]
    NonFiniteScore(usize),
    #[error("unknown module `{0}`")]
    UnknownModule(String),
    #[error("module `{0}` has already been tested")]
    AlreadyTested(String),
    #[error("session is completed")]
    SessionCompleted,
    #[error("partial-feedback session has no pending recommendation to credit")]
    NoPendingRecommendation,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
