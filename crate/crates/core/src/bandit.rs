//! Arm bookkeeping and the selection rules.
//!
//! Rewards are always `+1` (prediction matched the test outcome) or `-1`.
//! An arm's running statistics double as a Beta-Bernoulli posterior: a `+1`
//! counts as a success and a `-1` as a failure.
//!
//! Two feedback regimes are supported. Under [`Feedback::PartialFeedback`]
//! only the played arm observes its reward, as in a classic bandit. Under
//! [`Feedback::FullInformation`] every arm observes its own reward at every
//! step, which is possible whenever all arms' answers for the tested item are
//! known in advance.
//!
//! Ties are broken towards the lowest arm index in every rule, and an arm that
//! has never been rewarded has average `0`.

use std::fmt;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A model's binary verdict for one module.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FaultLabel {
    /// Fault-prone.
    FP,
    /// Not fault-prone.
    NFP,
}

impl FaultLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            FaultLabel::FP => "FP",
            FaultLabel::NFP => "NFP",
        }
    }

    /// Score used when a label is fed to a ranking metric: FP = 1, NFP = 0.
    pub fn score<T: Scalar>(self) -> T {
        match self {
            FaultLabel::FP => T::one(),
            FaultLabel::NFP => T::zero(),
        }
    }
}

impl fmt::Display for FaultLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ground-truth outcome of testing a module.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Faultiness {
    Faulty,
    Clean,
}

impl Faultiness {
    pub fn from_faulty(faulty: bool) -> Self {
        if faulty {
            Faultiness::Faulty
        } else {
            Faultiness::Clean
        }
    }

    pub fn is_faulty(self) -> bool {
        self == Faultiness::Faulty
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Faultiness::Faulty => "faulty",
            Faultiness::Clean => "clean",
        }
    }
}

impl fmt::Display for Faultiness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `+1` when the prediction agrees with the test outcome, `-1` otherwise.
pub fn reward_of(prediction: FaultLabel, actual: Faultiness) -> i32 {
    match (prediction, actual) {
        (FaultLabel::FP, Faultiness::Faulty) | (FaultLabel::NFP, Faultiness::Clean) => 1,
        _ => -1,
    }
}

/// Running reward statistics for one arm.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmState {
    pub pulls: u64,
    pub cumulative_reward: i64,
    pub ts_successes: u64,
    pub ts_failures: u64,
}

impl ArmState {
    /// Records one `±1` observation.
    pub fn observe(&mut self, reward: i32) -> Result<()> {
        check_reward(reward)?;
        self.pulls += 1;
        self.cumulative_reward += i64::from(reward);
        if reward > 0 {
            self.ts_successes += 1;
        } else {
            self.ts_failures += 1;
        }
        Ok(())
    }

    pub fn average_reward<T: Scalar>(&self) -> T {
        average_reward(self)
    }
}

fn check_reward(reward: i32) -> Result<()> {
    if reward == 1 || reward == -1 {
        Ok(())
    } else {
        Err(Error::InvalidReward(reward))
    }
}

/// Mean observed reward; `0` for an arm that has never been rewarded.
pub fn average_reward<T: Scalar>(arm: &ArmState) -> T {
    if arm.pulls == 0 {
        T::zero()
    } else {
        T::from_int(arm.cumulative_reward) / T::from_count(arm.pulls as usize)
    }
}

/// Classic bandit update: only `chosen` observes `reward`.
pub fn update_partial(arms: &mut [ArmState], chosen: usize, reward: i32) -> Result<()> {
    let len = arms.len();
    let arm = arms
        .get_mut(chosen)
        .ok_or(Error::ArmOutOfRange { index: chosen, len })?;
    arm.observe(reward)
}

/// Full-information update: arm `i` observes `rewards[i]`.
///
/// The slice is validated before any arm is touched, so an error leaves
/// `arms` unchanged.
pub fn update_full(arms: &mut [ArmState], rewards: &[i32]) -> Result<()> {
    if arms.len() != rewards.len() {
        return Err(Error::RewardLengthMismatch {
            expected: arms.len(),
            got: rewards.len(),
        });
    }
    rewards.iter().try_for_each(|&r| check_reward(r))?;
    for (arm, &r) in arms.iter_mut().zip(rewards) {
        arm.observe(r)?;
    }
    Ok(())
}

fn argmax_by<T: Scalar>(values: impl Iterator<Item = T>) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, v) in values.enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Index of the highest average reward, lowest index on ties.
pub fn argmax_average<T: Scalar>(arms: &[ArmState]) -> Result<usize> {
    argmax_by(arms.iter().map(average_reward::<T>)).ok_or(Error::NoArms)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if (0.0..=1.0).contains(&epsilon) {
        Ok(())
    } else {
        Err(Error::InvalidPolicy(format!("epsilon {epsilon} outside [0, 1]")))
    }
}

/// With probability `epsilon` a uniformly random arm, otherwise the greedy arm.
///
/// With `epsilon == 0` no randomness is drawn.
pub fn select_epsilon_greedy<T: Scalar, R: Rng + ?Sized>(
    arms: &[ArmState],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    check_epsilon(epsilon)?;
    if arms.is_empty() {
        return Err(Error::NoArms);
    }
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return Ok(rng.random_range(0..arms.len()));
    }
    argmax_average::<T>(arms)
}

/// UCB1 upper bound `average + sqrt(2 ln t / pulls)`; infinite for an unpulled arm.
pub fn ucb_index<T: Scalar>(arm: &ArmState, t: u64) -> T {
    if arm.pulls == 0 {
        return T::infinity();
    }
    let two = T::one() + T::one();
    let bonus = (two * T::from_count(t as usize).ln() / T::from_count(arm.pulls as usize)).sqrt();
    average_reward::<T>(arm) + bonus
}

/// UCB1 selection at step `t` (1-based). Unpulled arms come first.
pub fn select_ucb<T: Scalar>(arms: &[ArmState], t: u64) -> Result<usize> {
    if t == 0 {
        return Err(Error::ZeroStep);
    }
    if arms.is_empty() {
        return Err(Error::NoArms);
    }
    if let Some(i) = arms.iter().position(|a| a.pulls == 0) {
        return Ok(i);
    }
    argmax_by(arms.iter().map(|a| ucb_index::<T>(a, t))).ok_or(Error::NoArms)
}

/// Beta-Bernoulli Thompson sampling with a uniform `Beta(1, 1)` prior.
///
/// Posterior draws are taken in `f64` regardless of the crate's scalar type.
pub fn select_thompson<R: Rng + ?Sized>(arms: &[ArmState], rng: &mut R) -> Result<usize> {
    if arms.is_empty() {
        return Err(Error::NoArms);
    }
    let mut best = 0;
    let mut best_draw = f64::NEG_INFINITY;
    for (i, arm) in arms.iter().enumerate() {
        let posterior = Beta::new(arm.ts_successes as f64 + 1.0, arm.ts_failures as f64 + 1.0)
            .expect("Beta parameters are at least 1");
        let draw = posterior.sample(rng);
        if draw > best_draw {
            best = i;
            best_draw = draw;
        }
    }
    Ok(best)
}

/// A/B test: round-robin for `t <= exploration_steps`, then the committed arm.
///
/// `committed` is the greedy arm frozen at the end of exploration (see
/// [`PolicyState`]). When it is `None` past the exploration phase the current
/// greedy arm is returned.
pub fn select_ab_test<T: Scalar>(
    arms: &[ArmState],
    t: u64,
    exploration_steps: u64,
    committed: Option<usize>,
) -> Result<usize> {
    if t == 0 {
        return Err(Error::ZeroStep);
    }
    if arms.is_empty() {
        return Err(Error::NoArms);
    }
    if t <= exploration_steps {
        return Ok(((t - 1) % arms.len() as u64) as usize);
    }
    match committed {
        Some(i) if i < arms.len() => Ok(i),
        Some(i) => Err(Error::ArmOutOfRange {
            index: i,
            len: arms.len(),
        }),
        None => argmax_average::<T>(arms),
    }
}

/// Which arms observe a reward after each step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feedback {
    #[default]
    FullInformation,
    PartialFeedback,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyKind {
    EpsilonGreedy { epsilon: f64 },
    Ucb,
    ThompsonSampling,
    AbTest { exploration_steps: u64 },
}

impl PolicyKind {
    /// Short display name, also used as column/row key in reports.
    pub fn name(&self) -> String {
        match self {
            PolicyKind::EpsilonGreedy { epsilon } => format!("eps={epsilon}"),
            PolicyKind::Ucb => "UCB".to_string(),
            PolicyKind::ThompsonSampling => "TS".to_string(),
            PolicyKind::AbTest { exploration_steps } => format!("AB({exploration_steps})"),
        }
    }

    pub fn is_thompson(&self) -> bool {
        matches!(self, PolicyKind::ThompsonSampling)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Parses `eps:<e>`, `ucb`, `ts` or `ab:<steps>` (case-insensitive).
impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (head, arg) = match lower.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (lower.as_str(), None),
        };
        let bad = || Error::InvalidPolicy(format!("cannot parse policy `{s}`"));
        let kind = match (head, arg) {
            ("eps" | "epsilon" | "egreedy", Some(a)) => PolicyKind::EpsilonGreedy {
                epsilon: a.parse().map_err(|_| bad())?,
            },
            ("ucb" | "ucb1", None) => PolicyKind::Ucb,
            ("ts" | "thompson", None) => PolicyKind::ThompsonSampling,
            ("ab", Some(a)) => PolicyKind::AbTest {
                exploration_steps: a.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        if let PolicyKind::EpsilonGreedy { epsilon } = kind {
            check_epsilon(epsilon)?;
        }
        Ok(kind)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    #[serde(flatten)]
    pub kind: PolicyKind,
    #[serde(default)]
    pub feedback: Feedback,
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind, feedback: Feedback) -> Self {
        Self { kind, feedback }
    }

    pub fn full(kind: PolicyKind) -> Self {
        Self::new(kind, Feedback::FullInformation)
    }

    pub fn name(&self) -> String {
        match self.feedback {
            Feedback::FullInformation => self.kind.name(),
            Feedback::PartialFeedback => format!("{}/partial", self.kind.name()),
        }
    }

    pub fn validate(&self, num_arms: usize) -> Result<()> {
        if num_arms == 0 {
            return Err(Error::NoArms);
        }
        match self.kind {
            PolicyKind::EpsilonGreedy { epsilon } => check_epsilon(epsilon),
            PolicyKind::AbTest { exploration_steps } if exploration_steps < num_arms as u64 => {
                Err(Error::InvalidPolicy(format!(
                    "A/B exploration of {exploration_steps} steps cannot visit all {num_arms} arms"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// A policy together with the little state it carries across steps.
///
/// Only the A/B test is stateful: it freezes its greedy choice once the
/// exploration phase is over.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyState {
    pub config: PolicyConfig,
    pub committed: Option<usize>,
}

impl PolicyState {
    pub fn new(config: PolicyConfig, num_arms: usize) -> Result<Self> {
        config.validate(num_arms)?;
        Ok(Self {
            config,
            committed: None,
        })
    }

    /// Picks an arm for step `t` (1-based).
    pub fn select<T: Scalar, R: Rng + ?Sized>(&self, arms: &[ArmState], t: u64, rng: &mut R) -> Result<usize> {
        match self.config.kind {
            PolicyKind::EpsilonGreedy { epsilon } => select_epsilon_greedy::<T, R>(arms, epsilon, rng),
            PolicyKind::Ucb => select_ucb::<T>(arms, t),
            PolicyKind::ThompsonSampling => select_thompson(arms, rng),
            PolicyKind::AbTest { exploration_steps } => select_ab_test::<T>(arms, t, exploration_steps, self.committed),
        }
    }

    /// Applies step `t`'s rewards according to the feedback mode.
    ///
    /// `rewards[i]` is arm `i`'s reward; in partial mode only
    /// `rewards[chosen]` is used.
    pub fn apply_feedback<T: Scalar>(
        &mut self,
        arms: &mut [ArmState],
        chosen: usize,
        rewards: &[i32],
        t: u64,
    ) -> Result<()> {
        match self.config.feedback {
            Feedback::FullInformation => update_full(arms, rewards)?,
            Feedback::PartialFeedback => {
                let reward = *rewards.get(chosen).ok_or(Error::ArmOutOfRange {
                    index: chosen,
                    len: rewards.len(),
                })?;
                update_partial(arms, chosen, reward)?
            }
        }
        if let PolicyKind::AbTest { exploration_steps } = self.config.kind {
            if t == exploration_steps {
                self.committed = Some(argmax_average::<T>(arms)?);
            }
        }
        Ok(())
    }
}
