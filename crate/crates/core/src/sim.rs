//! The sequential test-execution loop and repeated experiments.
//!
//! At each step the policy picks a model, the tester takes that model's
//! highest-priority untested module, the module's true faultiness is
//! revealed, and every model (or only the chosen one, under partial
//! feedback) is rewarded for agreeing with the outcome. The label the chosen
//! model gave the tested module becomes the run's composite prediction for
//! it; the run is scored by the AUC of that composite vector.

use std::collections::HashSet;

use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandit::{average_reward, reward_of, ArmState, FaultLabel, Faultiness, PolicyConfig, PolicyState};
use crate::error::{Error, Result};
use crate::eval::{auc_from_labels, baseline_single_model, build_summary, ExperimentSummary};
use crate::scalar::Scalar;
use crate::synth::{derive_seed, generate_fixture, Dataset, PredictionModel};

/// Stream offset separating policy generators from dataset/model generators.
pub const POLICY_STREAM: u64 = 1 << 32;

/// Seed of policy `policy_index` in the iteration seeded with `iteration_seed`.
pub fn policy_seed(iteration_seed: u64, policy_index: usize) -> u64 {
    derive_seed(iteration_seed, POLICY_STREAM + policy_index as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrialStep<T> {
    /// 1-based.
    pub t: usize,
    pub chosen_arm: String,
    pub tested_module: String,
    pub used_prediction: FaultLabel,
    pub actual: Faultiness,
    /// Per arm; `None` for arms that observed nothing (partial feedback).
    pub rewards: Vec<Option<i32>>,
    pub post_averages: Vec<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RunResult<T> {
    pub policy: String,
    pub arm_ids: Vec<String>,
    pub steps: Vec<TrialStep<T>>,
    /// Module id to the label it was tested under, in dataset order.
    pub composite: IndexMap<String, FaultLabel>,
    pub composite_auc: T,
    pub final_arms: Vec<ArmState>,
}

/// First module in `model`'s priority order that is not in `tested`.
pub fn next_untested_module<'a, T>(model: &'a PredictionModel<T>, tested: &HashSet<String>) -> Option<&'a str> {
    model
        .priority_order
        .iter()
        .find(|id| !tested.contains(id.as_str()))
        .map(String::as_str)
}

/// Index-based view of the models over one dataset.
struct ArmTable {
    labels: Vec<Vec<FaultLabel>>,
    orders: Vec<Vec<usize>>,
}

impl ArmTable {
    fn new<T: Scalar>(dataset: &Dataset, models: &[PredictionModel<T>]) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::NoArms);
        }
        let mut labels = Vec::with_capacity(models.len());
        let mut orders = Vec::with_capacity(models.len());
        for m in models {
            m.check_covers(dataset)?;
            labels.push(dataset.ids().map(|id| m.predictions[id]).collect());
            orders.push(
                m.priority_order
                    .iter()
                    .map(|id| dataset.position(id).expect("covered"))
                    .collect(),
            );
        }
        Ok(Self { labels, orders })
    }
}

/// Runs one full pass over `dataset`, testing every module exactly once.
///
/// The policy's random draws come from a ChaCha8 generator seeded with `seed`.
pub fn run_simulation<T: Scalar>(
    dataset: &Dataset,
    models: &[PredictionModel<T>],
    policy: PolicyConfig,
    seed: u64,
) -> Result<RunResult<T>> {
    let table = ArmTable::new(dataset, models)?;
    let mut state = PolicyState::new(policy, models.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = dataset.n();
    let mut arms = vec![ArmState::default(); models.len()];
    let mut cursors = vec![0usize; models.len()];
    let mut tested = vec![false; n];
    let mut composite = vec![FaultLabel::NFP; n];
    let mut steps = Vec::with_capacity(n);

    for t in 1..=n {
        let chosen = state.select::<T, _>(&arms, t as u64, &mut rng)?;
        let order = &table.orders[chosen];
        while tested[order[cursors[chosen]]] {
            cursors[chosen] += 1;
        }
        let pos = order[cursors[chosen]];
        let actual = Faultiness::from_faulty(dataset.modules()[pos].actual_faulty);
        let rewards: Vec<i32> = table.labels.iter().map(|l| reward_of(l[pos], actual)).collect();
        state.apply_feedback::<T>(&mut arms, chosen, &rewards, t as u64)?;

        let used = table.labels[chosen][pos];
        composite[pos] = used;
        tested[pos] = true;
        let observed = match policy.feedback {
            crate::bandit::Feedback::FullInformation => rewards.iter().map(|&r| Some(r)).collect(),
            crate::bandit::Feedback::PartialFeedback => (0..rewards.len())
                .map(|i| (i == chosen).then_some(rewards[i]))
                .collect(),
        };
        steps.push(TrialStep {
            t,
            chosen_arm: models[chosen].model_id.clone(),
            tested_module: dataset.modules()[pos].id.clone(),
            used_prediction: used,
            actual,
            rewards: observed,
            post_averages: arms.iter().map(average_reward::<T>).collect(),
        });
    }

    let composite_auc = auc_from_labels(&composite, &dataset.faulty_mask())?;
    Ok(RunResult {
        policy: policy.name(),
        arm_ids: models.iter().map(|m| m.model_id.clone()).collect(),
        steps,
        composite: dataset.ids().map(str::to_string).zip(composite).collect(),
        composite_auc,
        final_arms: arms,
    })
}

/// One model set evaluated under several policies over repeated iterations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub model_set: String,
    pub n_modules: usize,
    pub n_faulty: usize,
    pub target_aucs: Vec<f64>,
    pub policies: Vec<PolicyConfig>,
    pub iterations: usize,
    pub base_seed: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    #[default]
    Serial,
    Parallel,
}

/// Every policy's run within one iteration, all on the same generated inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRuns<T> {
    /// 1-based.
    pub iteration: usize,
    pub seed: u64,
    pub baselines: Vec<T>,
    pub runs: Vec<RunResult<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutcome<T> {
    pub summary: ExperimentSummary<T>,
    /// Filled only when runs were kept.
    pub iterations: Vec<IterationRuns<T>>,
}

fn run_iteration<T: Scalar>(spec: &ExperimentSpec, targets: &[T], iteration: usize) -> Result<IterationRuns<T>> {
    let seed = spec.base_seed.wrapping_add(iteration as u64);
    let fixture = generate_fixture(spec.n_modules, spec.n_faulty, targets, seed)?;
    let baselines = fixture
        .models
        .iter()
        .map(|m| baseline_single_model(m, &fixture.dataset))
        .collect::<Result<Vec<_>>>()?;
    let runs = spec
        .policies
        .iter()
        .enumerate()
        .map(|(p, &policy)| run_simulation(&fixture.dataset, &fixture.models, policy, policy_seed(seed, p)))
        .collect::<Result<Vec<_>>>()?;
    Ok(IterationRuns {
        iteration,
        seed,
        baselines,
        runs,
    })
}

/// Repeats generation and simulation `spec.iterations` times.
///
/// Iteration `i` (1-based) uses seed `base_seed + i` for its dataset and
/// models (see [`generate_fixture`]); policy `p` in that iteration draws from
/// [`policy_seed`]`(base_seed + i, p)`. Serial and parallel execution
/// therefore produce identical results.
pub fn run_experiment<T: Scalar>(
    spec: &ExperimentSpec,
    execution: Execution,
    keep_runs: bool,
) -> Result<ExperimentOutcome<T>> {
    if spec.policies.is_empty() {
        return Err(Error::Empty("policies"));
    }
    if spec.iterations == 0 {
        return Err(Error::Empty("iterations"));
    }
    let mut names = HashSet::new();
    for p in &spec.policies {
        p.validate(spec.target_aucs.len().max(1))?;
        if !names.insert(p.name()) {
            return Err(Error::InvalidPolicy(format!("policy `{}` listed twice", p.name())));
        }
    }
    let targets: Vec<T> = spec.target_aucs.iter().map(|&t| T::from_f64_lossy(t)).collect();

    let iterations: Vec<IterationRuns<T>> = match execution {
        Execution::Serial => (1..=spec.iterations)
            .map(|i| run_iteration(spec, &targets, i))
            .collect::<Result<_>>()?,
        Execution::Parallel => (1..=spec.iterations)
            .into_par_iter()
            .map(|i| run_iteration(spec, &targets, i))
            .collect::<Result<_>>()?,
    };

    let mut policy_runs: IndexMap<String, Vec<T>> = spec
        .policies
        .iter()
        .map(|p| (p.name(), Vec::with_capacity(spec.iterations)))
        .collect();
    let model_ids: Vec<String> = (1..=targets.len()).map(|j| format!("model{j}")).collect();
    let mut baselines: IndexMap<String, Vec<T>> = model_ids
        .iter()
        .map(|id| (id.clone(), Vec::with_capacity(spec.iterations)))
        .collect();
    for it in &iterations {
        for (row, run) in policy_runs.values_mut().zip(&it.runs) {
            row.push(run.composite_auc);
        }
        for (row, &b) in baselines.values_mut().zip(&it.baselines) {
            row.push(b);
        }
    }
    let thompson = spec.policies.iter().find(|p| p.kind.is_thompson()).map(|p| p.name());
    let summary = build_summary(&spec.model_set, policy_runs, baselines, thompson.as_deref())?;
    Ok(ExperimentOutcome {
        summary,
        iterations: if keep_runs { iterations } else { Vec::new() },
    })
}
