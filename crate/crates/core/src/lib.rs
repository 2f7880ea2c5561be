//! Dynamic selection among fault-prediction models during software testing.
//!
//! Each prediction model is an arm of a bandit. As modules are tested one by
//! one, the outcome of each test tells us whether *every* model's prediction
//! for that module was right, so all arms are rewarded at every step
//! (full-information feedback). A selection policy decides which model's
//! priority list picks the next module to test.
//!
//! - [`bandit`]: arm statistics, rewards, and the epsilon-greedy, UCB1,
//!   Thompson sampling and A/B selection rules.
//! - [`synth`]: artificial datasets and models with controlled AUC.
//! - [`sim`]: the test-execution loop and repeated experiments.
//! - [`eval`]: AUC, aggregation and summary tables.
//! - [`session`]: the same loop driven interactively by a tester.
//! - [`export`]: CSV trial logs.
//!
//! Real-valued quantities are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`.

pub mod bandit;
pub mod error;
pub mod eval;
pub mod export;
pub mod scalar;
pub mod session;
pub mod sim;
pub mod synth;

pub use bandit::{ArmState, FaultLabel, Faultiness, Feedback, PolicyConfig, PolicyKind, PolicyState};
pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Model = synth::PredictionModel<f64>;
pub type Fixture = synth::Fixture<f64>;
pub type Run = sim::RunResult<f64>;
pub type Step = sim::TrialStep<f64>;
pub type Summary = eval::ExperimentSummary<f64>;
pub type Session = session::AdvisorSession<f64>;
pub type Outcome = session::OutcomeReport<f64>;

pub type Model32 = synth::PredictionModel<f32>;
pub type Summary32 = eval::ExperimentSummary<f32>;
