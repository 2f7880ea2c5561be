//! Artificial datasets and artificial prediction models.
//!
//! A generated model is a vector of binary FP/NFP labels whose true-positive
//! and true-negative counts are chosen so that its balanced accuracy
//! `(tpr + tnr) / 2` (which is the AUC of a binary scorer) lands on a target.
//! Labels are drawn by choosing exactly the required number of modules from
//! each class, so the achieved AUC does not depend on the seed.

use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bandit::FaultLabel;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Maximum distance between a model's target AUC and the AUC it is built with.
pub const RATE_TOLERANCE: f64 = 0.02;

/// SplitMix64 finaliser applied to `seed` combined with a stream index.
///
/// Every seeded component derives its own generator from this, so the
/// dataset, each model and each policy run draw from independent streams.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleRecord {
    pub id: String,
    pub actual_faulty: bool,
}

/// Ordered modules with hidden ground truth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DatasetRepr", into = "DatasetRepr")]
pub struct Dataset {
    modules: Vec<ModuleRecord>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct DatasetRepr {
    n: usize,
    k: usize,
    modules: Vec<ModuleRecord>,
}

impl TryFrom<DatasetRepr> for Dataset {
    type Error = Error;

    fn try_from(repr: DatasetRepr) -> Result<Self> {
        let dataset = Dataset::new(repr.modules)?;
        if dataset.n() != repr.n || dataset.k() != repr.k {
            return Err(Error::InvalidDataset(format!(
                "declared n={} k={} but modules give n={} k={}",
                repr.n,
                repr.k,
                dataset.n(),
                dataset.k()
            )));
        }
        Ok(dataset)
    }
}

impl From<Dataset> for DatasetRepr {
    fn from(d: Dataset) -> Self {
        DatasetRepr {
            n: d.n(),
            k: d.k(),
            modules: d.modules,
        }
    }
}

impl Dataset {
    pub fn new(modules: Vec<ModuleRecord>) -> Result<Self> {
        if modules.is_empty() {
            return Err(Error::InvalidDataset("no modules".into()));
        }
        let mut index = HashMap::with_capacity(modules.len());
        for (i, m) in modules.iter().enumerate() {
            if index.insert(m.id.clone(), i).is_some() {
                return Err(Error::InvalidDataset(format!("duplicate module id `{}`", m.id)));
            }
        }
        Ok(Self { modules, index })
    }

    pub fn modules(&self) -> &[ModuleRecord] {
        &self.modules
    }

    pub fn n(&self) -> usize {
        self.modules.len()
    }

    /// Number of faulty modules.
    pub fn k(&self) -> usize {
        self.modules.iter().filter(|m| m.actual_faulty).count()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.modules.iter().map(|m| m.id.as_str())
    }

    pub fn faulty_mask(&self) -> Vec<bool> {
        self.modules.iter().map(|m| m.actual_faulty).collect()
    }

    /// Both classes present, so AUC is defined.
    pub fn check_non_degenerate(&self) -> Result<()> {
        let k = self.k();
        if k == 0 || k == self.n() {
            Err(Error::DegenerateLabels)
        } else {
            Ok(())
        }
    }
}

/// `n` modules named `Test1.java` ... with a seeded uniform subset of exactly `k` faulty.
pub fn generate_dataset(n: usize, k: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidDataset("n must be at least 1".into()));
    }
    if k > n {
        return Err(Error::InvalidDataset(format!(
            "{k} faulty modules requested out of {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut faulty = vec![false; n];
    for i in sample(&mut rng, n, k) {
        faulty[i] = true;
    }
    let modules = faulty
        .into_iter()
        .enumerate()
        .map(|(i, actual_faulty)| ModuleRecord {
            id: format!("Test{}.java", i + 1),
            actual_faulty,
        })
        .collect();
    Dataset::new(modules)
}

/// Error rates realised on an integer grid: `tpr = true_positives / k`,
/// `tnr = true_negatives / n_clean`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rates<T> {
    pub tpr: T,
    pub tnr: T,
    pub true_positives: usize,
    pub true_negatives: usize,
}

impl<T: Scalar> Rates<T> {
    pub fn balanced_accuracy(&self) -> T {
        (self.tpr + self.tnr) * T::half()
    }
}

/// Grid point `(a/k, b/n_clean)` whose balanced accuracy is closest to
/// `target_auc`, preferring `tpr` and `tnr` as close to each other as
/// possible among equally close points.
///
/// Fails with [`Error::InfeasibleTarget`] (carrying the best reachable value)
/// when the closest point is further than [`RATE_TOLERANCE`].
pub fn solve_rates<T: Scalar>(target_auc: T, k: usize, n_clean: usize) -> Result<Rates<T>> {
    let target = target_auc.to_f64().unwrap_or(f64::NAN);
    if !(0.5..=1.0).contains(&target) {
        return Err(Error::TargetOutOfRange(target));
    }
    if k == 0 || n_clean == 0 {
        return Err(Error::DegenerateLabels);
    }
    // balanced = (a * n_clean + b * k) / (2 * k * n_clean)
    let den = T::from_count(2 * k * n_clean);
    let slack = T::epsilon() * T::from_count(8);
    let mut best: Option<(usize, usize, T, usize)> = None;
    for a in 0..=k {
        for b in 0..=n_clean {
            let num = T::from_count(a * n_clean + b * k);
            let err = (num / den - target_auc).abs();
            let imbalance = (a * n_clean).abs_diff(b * k);
            let better = match best {
                None => true,
                Some((_, _, best_err, best_imbalance)) => {
                    err < best_err - slack || (err <= best_err + slack && imbalance < best_imbalance)
                }
            };
            if better {
                best = Some((a, b, err, imbalance));
            }
        }
    }
    let (a, b, err, _) = best.expect("grid is non-empty");
    let rates = Rates {
        tpr: T::from_count(a) / T::from_count(k),
        tnr: T::from_count(b) / T::from_count(n_clean),
        true_positives: a,
        true_negatives: b,
    };
    if err.to_f64().unwrap_or(f64::INFINITY) > RATE_TOLERANCE {
        return Err(Error::InfeasibleTarget {
            target,
            best: rates.balanced_accuracy().to_f64().unwrap_or(f64::NAN),
            tolerance: RATE_TOLERANCE,
        });
    }
    Ok(rates)
}

/// One arm: a fixed label per module plus the order in which it would test them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PredictionModel<T> {
    pub model_id: String,
    /// Module id to label, in dataset order.
    pub predictions: IndexMap<String, FaultLabel>,
    /// FP modules first, then NFP modules, each group in dataset order.
    pub priority_order: Vec<String>,
    pub target_auc: T,
    pub achieved_auc: T,
    pub tpr: T,
    pub tnr: T,
}

/// Stable FP-first ordering of `ids`.
pub fn fp_first_order<'a>(ids: impl IntoIterator<Item = (&'a str, FaultLabel)> + Clone) -> Vec<String> {
    let pick = |want: FaultLabel| {
        ids.clone()
            .into_iter()
            .filter(move |&(_, l)| l == want)
            .map(|(id, _)| id.to_string())
    };
    pick(FaultLabel::FP).chain(pick(FaultLabel::NFP)).collect()
}

impl<T: Scalar> PredictionModel<T> {
    /// Builds a model from labels aligned with `dataset` order. When
    /// `target_auc` is `None` the achieved AUC is recorded as the target.
    pub fn from_labels(
        model_id: impl Into<String>,
        dataset: &Dataset,
        labels: &[FaultLabel],
        target_auc: Option<T>,
    ) -> Result<Self> {
        let model_id = model_id.into();
        if labels.len() != dataset.n() {
            return Err(Error::ModelMismatch {
                model: model_id,
                detail: format!("{} labels for {} modules", labels.len(), dataset.n()),
            });
        }
        let predictions: IndexMap<String, FaultLabel> =
            dataset.ids().map(str::to_string).zip(labels.iter().copied()).collect();
        let priority_order = fp_first_order(predictions.iter().map(|(id, &l)| (id.as_str(), l)));
        let mut model = Self {
            model_id,
            predictions,
            priority_order,
            target_auc: T::zero(),
            achieved_auc: T::zero(),
            tpr: T::zero(),
            tnr: T::zero(),
        };
        let (tpr, tnr) = class_rates(&model, dataset)?;
        model.tpr = tpr;
        model.tnr = tnr;
        model.achieved_auc = (tpr + tnr) * T::half();
        model.target_auc = target_auc.unwrap_or(model.achieved_auc);
        Ok(model)
    }

    pub fn label(&self, module_id: &str) -> Option<FaultLabel> {
        self.predictions.get(module_id).copied()
    }

    /// Checks that `priority_order` is the stable FP-first permutation of
    /// the prediction keys.
    pub fn validate(&self) -> Result<()> {
        let expected = fp_first_order(self.predictions.iter().map(|(id, &l)| (id.as_str(), l)));
        if expected != self.priority_order {
            return Err(Error::ModelMismatch {
                model: self.model_id.clone(),
                detail: "priority order is not the stable FP-first ordering of its predictions".into(),
            });
        }
        Ok(())
    }

    /// Checks that the model labels exactly the modules of `dataset`.
    pub fn check_covers(&self, dataset: &Dataset) -> Result<()> {
        let mismatch = |detail: String| Error::ModelMismatch {
            model: self.model_id.clone(),
            detail,
        };
        if self.predictions.len() != dataset.n() {
            return Err(mismatch(format!(
                "{} predictions for {} modules",
                self.predictions.len(),
                dataset.n()
            )));
        }
        if let Some(id) = dataset.ids().find(|id| !self.predictions.contains_key(*id)) {
            return Err(mismatch(format!("no prediction for module `{id}`")));
        }
        self.validate()
    }
}

fn class_rates<T: Scalar>(model: &PredictionModel<T>, dataset: &Dataset) -> Result<(T, T)> {
    dataset.check_non_degenerate()?;
    let (mut tp, mut tn) = (0usize, 0usize);
    for m in dataset.modules() {
        let label = model.label(&m.id).ok_or_else(|| Error::ModelMismatch {
            model: model.model_id.clone(),
            detail: format!("no prediction for module `{}`", m.id),
        })?;
        match (label, m.actual_faulty) {
            (FaultLabel::FP, true) => tp += 1,
            (FaultLabel::NFP, false) => tn += 1,
            _ => {}
        }
    }
    let k = dataset.k();
    Ok((
        T::from_count(tp) / T::from_count(k),
        T::from_count(tn) / T::from_count(dataset.n() - k),
    ))
}

/// AUC of a binary model: `(tpr + tnr) / 2`.
pub fn binary_auc<T: Scalar>(model: &PredictionModel<T>, dataset: &Dataset) -> Result<T> {
    let (tpr, tnr) = class_rates(model, dataset)?;
    Ok((tpr + tnr) * T::half())
}

/// Random model over `dataset` whose AUC is within [`RATE_TOLERANCE`] of `target_auc`.
pub fn generate_model_predictions<T: Scalar>(
    dataset: &Dataset,
    model_id: impl Into<String>,
    target_auc: T,
    seed: u64,
) -> Result<PredictionModel<T>> {
    dataset.check_non_degenerate()?;
    let k = dataset.k();
    let n_clean = dataset.n() - k;
    let rates = solve_rates(target_auc, k, n_clean)?;

    let (faulty, clean): (Vec<usize>, Vec<usize>) = (0..dataset.n()).partition(|&i| dataset.modules()[i].actual_faulty);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = vec![FaultLabel::NFP; dataset.n()];
    for j in sample(&mut rng, k, rates.true_positives) {
        labels[faulty[j]] = FaultLabel::FP;
    }
    for j in sample(&mut rng, n_clean, n_clean - rates.true_negatives) {
        labels[clean[j]] = FaultLabel::FP;
    }
    PredictionModel::from_labels(model_id, dataset, &labels, Some(target_auc))
}

/// A dataset together with the models evaluated on it; the on-disk fixture shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Fixture<T> {
    pub dataset: Dataset,
    pub models: Vec<PredictionModel<T>>,
}

impl<T: Scalar> Fixture<T> {
    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::Empty("models"));
        }
        let mut seen = HashSet::new();
        for m in &self.models {
            if !seen.insert(m.model_id.as_str()) {
                return Err(Error::ModelMismatch {
                    model: m.model_id.clone(),
                    detail: "duplicate model id".into(),
                });
            }
            m.check_covers(&self.dataset)?;
        }
        Ok(())
    }
}

/// Dataset of `n` modules with `k` faulty and one model per target AUC,
/// named `model1`, `model2`, ...
///
/// The dataset uses `derive_seed(seed, 0)` and model `j` (0-based) uses
/// `derive_seed(seed, j + 1)`.
pub fn generate_fixture<T: Scalar>(n: usize, k: usize, target_aucs: &[T], seed: u64) -> Result<Fixture<T>> {
    if target_aucs.is_empty() {
        return Err(Error::Empty("target AUCs"));
    }
    let dataset = generate_dataset(n, k, derive_seed(seed, 0))?;
    let models = target_aucs
        .iter()
        .enumerate()
        .map(|(j, &target)| {
            generate_model_predictions(
                &dataset,
                format!("model{}", j + 1),
                target,
                derive_seed(seed, j as u64 + 1),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Fixture { dataset, models })
}

/// The six-module worked example: `Test1.java`..`Test3.java` faulty,
/// model `A` flags Test1, Test5 and Test6, model `B` flags Test1..Test3.
pub fn worked_example_fixture<T: Scalar>() -> Fixture<T> {
    use FaultLabel::{FP, NFP};
    let modules = (1..=6)
        .map(|i| ModuleRecord {
            id: format!("Test{i}.java"),
            actual_faulty: i <= 3,
        })
        .collect();
    let dataset = Dataset::new(modules).expect("fixture ids are unique");
    let a = PredictionModel::from_labels("A", &dataset, &[FP, NFP, NFP, NFP, FP, FP], None).expect("fixture model A");
    let b = PredictionModel::from_labels("B", &dataset, &[FP, FP, FP, NFP, NFP, NFP], None).expect("fixture model B");
    Fixture {
        dataset,
        models: vec![a, b],
    }
}
