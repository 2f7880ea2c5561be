use std::path::PathBuf;

use anyhow::{bail, ensure, Context, Result};
use faultbandit_core::sim::ExperimentSpec;
use faultbandit_core::{Feedback, PolicyConfig, PolicyKind};
use serde::{Deserialize, Serialize};

pub const DEFAULT_MODEL_SETS: [(&str, [f64; 4]); 3] = [
    ("various-accuracy", [0.59, 0.70, 0.77, 0.80]),
    ("high-accuracy", [0.70, 0.78, 0.82, 0.88]),
    ("low-accuracy", [0.50, 0.53, 0.54, 0.59]),
];

pub fn default_policies() -> Vec<PolicyKind> {
    vec![
        PolicyKind::EpsilonGreedy { epsilon: 0.0 },
        PolicyKind::EpsilonGreedy { epsilon: 0.1 },
        PolicyKind::Ucb,
        PolicyKind::ThompsonSampling,
    ]
}

/// Everything `simulate` needs. Loaded from JSON; missing keys take defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_modules: usize,
    pub n_faulty: usize,
    /// One list of target AUCs per model set.
    pub model_target_aucs: Vec<Vec<f64>>,
    /// Names for the model sets; `set1`, `set2`, ... when empty.
    pub model_set_names: Vec<String>,
    pub policies: Vec<PolicyKind>,
    pub iterations: usize,
    pub base_seed: u64,
    pub feedback: Feedback,
    /// Output directory. Execution options are not written to `summary.json`.
    #[serde(skip_serializing)]
    pub output_dir: PathBuf,
    /// Write per-step CSV logs.
    #[serde(skip_serializing)]
    pub write_trials: bool,
    /// Run iterations on the rayon pool.
    #[serde(skip_serializing)]
    pub parallel: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_modules: 100,
            n_faulty: 15,
            model_target_aucs: DEFAULT_MODEL_SETS.iter().map(|(_, t)| t.to_vec()).collect(),
            model_set_names: DEFAULT_MODEL_SETS.iter().map(|(n, _)| n.to_string()).collect(),
            policies: default_policies(),
            iterations: 10,
            base_seed: 0,
            feedback: Feedback::FullInformation,
            output_dir: PathBuf::from("out"),
            write_trials: true,
            parallel: true,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.n_modules >= 2,
            "n_modules must be at least 2, got {}",
            self.n_modules
        );
        ensure!(
            self.n_faulty >= 1 && self.n_faulty < self.n_modules,
            "n_faulty must be between 1 and n_modules - 1 ({}), got {}",
            self.n_modules - 1,
            self.n_faulty
        );
        ensure!(self.iterations >= 1, "iterations must be positive");
        ensure!(!self.model_target_aucs.is_empty(), "at least one model set is required");
        ensure!(!self.policies.is_empty(), "at least one policy is required");
        if !self.model_set_names.is_empty() && self.model_set_names.len() != self.model_target_aucs.len() {
            bail!(
                "{} model set names for {} model sets",
                self.model_set_names.len(),
                self.model_target_aucs.len()
            );
        }
        for (i, set) in self.model_target_aucs.iter().enumerate() {
            ensure!(!set.is_empty(), "model set {} is empty", i + 1);
            for &t in set {
                ensure!((0.5..=1.0).contains(&t), "target AUC {t} outside [0.5, 1.0]");
            }
            for p in &self.policies {
                PolicyConfig::new(*p, self.feedback).validate(set.len())?;
            }
        }
        Ok(())
    }

    pub fn set_name(&self, index: usize) -> String {
        self.model_set_names
            .get(index)
            .cloned()
            .unwrap_or_else(|| format!("set{}", index + 1))
    }

    /// One experiment per model set, all sharing the base seed.
    pub fn specs(&self) -> Vec<ExperimentSpec> {
        self.model_target_aucs
            .iter()
            .enumerate()
            .map(|(i, targets)| ExperimentSpec {
                model_set: self.set_name(i),
                n_modules: self.n_modules,
                n_faulty: self.n_faulty,
                target_aucs: targets.clone(),
                policies: self
                    .policies
                    .iter()
                    .map(|&k| PolicyConfig::new(k, self.feedback))
                    .collect(),
                iterations: self.iterations,
                base_seed: self.base_seed,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_experiment_setup() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!((c.n_modules, c.n_faulty, c.iterations), (100, 15, 10));
        assert_eq!(c.model_target_aucs[1], [0.70, 0.78, 0.82, 0.88]);
        assert_eq!(c.policies.len(), 4);
        assert_eq!(c.specs().len(), 3);
    }

    #[test]
    fn rejects_bad_counts() {
        let c = ExperimentConfig {
            n_faulty: 200,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = ExperimentConfig {
            iterations: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = ExperimentConfig {
            policies: vec![PolicyKind::EpsilonGreedy { epsilon: 1.5 }],
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn partial_json_uses_defaults() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"iterations": 3, "policies": [{"kind": "ucb"}]}"#).unwrap();
        assert_eq!(c.iterations, 3);
        assert_eq!(c.policies, [PolicyKind::Ucb]);
        assert_eq!(c.n_modules, 100);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"iteratons": 3}"#).is_err());
    }

    #[test]
    fn unnamed_sets_get_numbered() {
        let c = ExperimentConfig {
            model_target_aucs: vec![vec![0.6], vec![0.7]],
            model_set_names: vec![],
            ..Default::default()
        };
        assert_eq!(c.set_name(1), "set2");
    }
}
