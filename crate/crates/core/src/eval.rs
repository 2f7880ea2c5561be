//! AUC, aggregation over iterations and summary tables.

use std::fmt::Write as _;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::bandit::FaultLabel;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::synth::{binary_auc, Dataset, PredictionModel};

/// Probability that a random faulty module scores above a random clean one,
/// ties counted half.
///
/// Computed from the rank sum of the faulty modules with mid-ranks for ties,
/// in `O(n log n)`. The rank sum is accumulated in integers (as twice the
/// rank) so the only rounding is the final division.
pub fn auc_mann_whitney<T: Scalar>(scores: &[T], faulty: &[bool]) -> Result<T> {
    if scores.len() != faulty.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores for {} labels",
            scores.len(),
            faulty.len()
        )));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFiniteScore(i));
    }
    let n = scores.len();
    let n_pos = faulty.iter().filter(|&&f| f).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateLabels);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));

    let mut twice_rank_sum: u128 = 0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // 1-based positions start+1..=end share the mid-rank (start + 1 + end) / 2
        let twice_mid = (start + 1 + end) as u128;
        let positives = order[start..end].iter().filter(|&&i| faulty[i]).count() as u128;
        twice_rank_sum += twice_mid * positives;
        start = end;
    }
    let n_pos_wide = n_pos as u128;
    let twice_u = twice_rank_sum - n_pos_wide * (n_pos_wide + 1);
    let denom = 2 * n_pos_wide * n_neg as u128;
    Ok(T::from_u128(twice_u).expect("finite") / T::from_u128(denom).expect("finite"))
}

/// AUC of binary labels scored FP = 1, NFP = 0.
pub fn auc_from_labels<T: Scalar>(labels: &[FaultLabel], faulty: &[bool]) -> Result<T> {
    let scores: Vec<T> = labels.iter().map(|l| l.score::<T>()).collect();
    auc_mann_whitney(&scores, faulty)
}

pub fn aggregate_mean<T: Scalar>(values: &[T]) -> Result<T> {
    if values.is_empty() {
        return Err(Error::Empty("values to average"));
    }
    let sum = values.iter().fold(T::zero(), |acc, &v| acc + v);
    Ok(sum / T::from_count(values.len()))
}

/// AUC of always using one model, i.e. the model's own AUC.
pub fn baseline_single_model<T: Scalar>(model: &PredictionModel<T>, dataset: &Dataset) -> Result<T> {
    binary_auc(model, dataset)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Spread<T> {
    pub mean: T,
    pub min: T,
    pub max: T,
}

impl<T: Scalar> Spread<T> {
    pub fn of(values: &[T]) -> Result<Self> {
        let mean = aggregate_mean(values)?;
        let min = values.iter().copied().fold(T::infinity(), T::min);
        let max = values.iter().copied().fold(T::neg_infinity(), T::max);
        Ok(Self { mean, min, max })
    }
}

/// Per-policy and per-model AUCs for one model set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ExperimentSummary<T> {
    pub model_set: String,
    pub iterations: usize,
    /// Policy name to mean composite AUC.
    pub policy_auc: IndexMap<String, T>,
    /// Model id to mean AUC of using that model alone.
    pub baseline_auc: IndexMap<String, T>,
    pub policy_spread: IndexMap<String, Spread<T>>,
    pub baseline_spread: IndexMap<String, Spread<T>>,
    /// Policy name to its AUC in each iteration.
    pub per_iteration: IndexMap<String, Vec<T>>,
    pub baseline_per_iteration: IndexMap<String, Vec<T>>,
    /// Position (1 = best) of Thompson sampling's mean among the model means.
    pub ts_rank_among_models: Option<usize>,
    /// Thompson sampling ranks first or second against the individual models.
    pub ts_top_two: Option<bool>,
    /// Thompson sampling's mean is at least every other policy's mean.
    pub ts_best_policy: Option<bool>,
}

/// Assembles a summary from raw per-iteration AUCs.
///
/// `thompson` names the row of `policy_runs` holding Thompson sampling; the
/// ranking flags are `None` without it.
pub fn build_summary<T: Scalar>(
    model_set: &str,
    policy_runs: IndexMap<String, Vec<T>>,
    baselines: IndexMap<String, Vec<T>>,
    thompson: Option<&str>,
) -> Result<ExperimentSummary<T>> {
    if policy_runs.is_empty() {
        return Err(Error::Empty("policies"));
    }
    let iterations = policy_runs[0].len();
    if iterations == 0 {
        return Err(Error::Empty("iterations"));
    }
    for (name, row) in policy_runs.iter().chain(baselines.iter()) {
        if row.len() != iterations {
            return Err(Error::DimensionMismatch(format!(
                "`{name}` has {} iterations, expected {iterations}",
                row.len()
            )));
        }
    }
    if let Some(ts) = thompson {
        if !policy_runs.contains_key(ts) {
            return Err(Error::DimensionMismatch(format!("no policy row named `{ts}`")));
        }
    }

    let spreads = |rows: &IndexMap<String, Vec<T>>| -> Result<IndexMap<String, Spread<T>>> {
        rows.iter().map(|(k, v)| Ok((k.clone(), Spread::of(v)?))).collect()
    };
    let policy_spread = spreads(&policy_runs)?;
    let baseline_spread = spreads(&baselines)?;
    let policy_auc: IndexMap<String, T> = policy_spread.iter().map(|(k, s)| (k.clone(), s.mean)).collect();
    let baseline_auc: IndexMap<String, T> = baseline_spread.iter().map(|(k, s)| (k.clone(), s.mean)).collect();

    let ts_mean = thompson.map(|ts| policy_auc[ts]);
    let ts_rank_among_models = ts_mean
        .filter(|_| !baseline_auc.is_empty())
        .map(|m| 1 + baseline_auc.values().filter(|&&b| b > m).count());
    let ts_best_policy = ts_mean.map(|m| policy_auc.values().all(|&p| m >= p));

    Ok(ExperimentSummary {
        model_set: model_set.to_string(),
        iterations,
        policy_auc,
        baseline_auc,
        policy_spread,
        baseline_spread,
        per_iteration: policy_runs,
        baseline_per_iteration: baselines,
        ts_rank_among_models,
        ts_top_two: ts_rank_among_models.map(|r| r <= 2),
        ts_best_policy,
    })
}

type SpreadRow<T> = (&'static str, fn(&Spread<T>) -> T);

/// Aligned text rendering: one policy table and one model table.
pub fn render_table<T: Scalar>(summary: &ExperimentSummary<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Model set: {} ({} iteration{})",
        summary.model_set,
        summary.iterations,
        if summary.iterations == 1 { "" } else { "s" }
    );
    let table = |out: &mut String, label: &str, spreads: &IndexMap<String, Spread<T>>| {
        let width = spreads.keys().map(|k| k.len()).max().unwrap_or(0).max(6) + 2;
        let _ = write!(out, "{label:<10}");
        for name in spreads.keys() {
            let _ = write!(out, "{name:>width$}");
        }
        out.push('\n');
        let rows: [SpreadRow<T>; 3] = [("mean", |s| s.mean), ("min", |s| s.min), ("max", |s| s.max)];
        for (row, get) in rows {
            let _ = write!(out, "{row:<10}");
            for s in spreads.values() {
                let _ = write!(out, "{:>width$.2}", get(s));
            }
            out.push('\n');
        }
    };
    table(&mut out, "policy", &summary.policy_spread);
    if !summary.baseline_spread.is_empty() {
        out.push('\n');
        table(&mut out, "model", &summary.baseline_spread);
    }
    if let (Some(rank), Some(best)) = (summary.ts_rank_among_models, summary.ts_best_policy) {
        let _ = writeln!(
            out,
            "\nTS rank among models: {rank} (top two: {}); TS best policy: {}",
            if rank <= 2 { "yes" } else { "no" },
            if best { "yes" } else { "no" }
        );
    }
    out
}
