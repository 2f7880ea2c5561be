//! Live advisor sessions.
//!
//! A session holds only the models' predictions, never the ground truth.
//! Testers ask for a recommendation, test whatever module they choose, and
//! submit its outcome; every model is then rewarded against that outcome.

use indexmap::{IndexMap, IndexSet};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bandit::{average_reward, reward_of, ArmState, FaultLabel, Faultiness, Feedback, PolicyConfig, PolicyState};
use crate::error::{Error, Result};
use crate::eval::auc_from_labels;
use crate::scalar::Scalar;
use crate::synth::PredictionModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    Completed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recommendation {
    pub module_id: String,
    pub prediction: FaultLabel,
    pub model_id: String,
}

/// One submitted outcome, as recorded in the session log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SessionStep<T> {
    pub step: usize,
    pub module_id: String,
    pub actual: Faultiness,
    /// Model whose recommendation was outstanding when the outcome arrived.
    pub active_model: Option<String>,
    /// That model's label for the tested module.
    pub used_prediction: Option<FaultLabel>,
    /// Rewards by model id, for the models that observed one.
    pub rewards: IndexMap<String, i32>,
    pub averages: IndexMap<String, T>,
}

/// Response to a submitted outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct OutcomeReport<T> {
    pub module_id: String,
    pub rewards: IndexMap<String, i32>,
    pub averages: IndexMap<String, T>,
    pub status: SessionStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AdvisorSession<T> {
    pub session_id: String,
    models: Vec<PredictionModel<T>>,
    arms: Vec<ArmState>,
    tested: IndexSet<String>,
    policy: PolicyState,
    status: SessionStatus,
    pending: Option<(usize, Recommendation)>,
    log: Vec<SessionStep<T>>,
}

impl<T: Scalar> AdvisorSession<T> {
    /// Starts a session with zeroed arms. All models must label the same modules.
    pub fn create(models: Vec<PredictionModel<T>>, policy: PolicyConfig) -> Result<Self> {
        let first = models.first().ok_or(Error::NoArms)?;
        for m in &models {
            m.validate()?;
            let same = m.predictions.len() == first.predictions.len()
                && m.predictions.keys().all(|id| first.predictions.contains_key(id));
            if !same {
                return Err(Error::ModelMismatch {
                    model: m.model_id.clone(),
                    detail: format!("module set differs from model `{}`", first.model_id),
                });
            }
        }
        if first.predictions.is_empty() {
            return Err(Error::Empty("modules"));
        }
        let mut ids = std::collections::HashSet::new();
        if let Some(dup) = models.iter().find(|m| !ids.insert(m.model_id.as_str())) {
            return Err(Error::ModelMismatch {
                model: dup.model_id.clone(),
                detail: "duplicate model id".into(),
            });
        }
        let policy = PolicyState::new(policy, models.len())?;
        Ok(Self {
            session_id: uuid::Uuid::new_v4().to_string(),
            arms: vec![ArmState::default(); models.len()],
            models,
            tested: IndexSet::new(),
            policy,
            status: SessionStatus::Active,
            pending: None,
            log: Vec::new(),
        })
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    pub fn arms(&self) -> &[ArmState] {
        &self.arms
    }

    pub fn models(&self) -> &[PredictionModel<T>] {
        &self.models
    }

    /// Tested module ids in submission order.
    pub fn tested(&self) -> &IndexSet<String> {
        &self.tested
    }

    pub fn log(&self) -> &[SessionStep<T>] {
        &self.log
    }

    pub fn policy(&self) -> &PolicyConfig {
        &self.policy.config
    }

    pub fn averages(&self) -> IndexMap<String, T> {
        self.models
            .iter()
            .zip(&self.arms)
            .map(|(m, a)| (m.model_id.clone(), average_reward::<T>(a)))
            .collect()
    }

    /// Next module to test and the model it comes from.
    ///
    /// The recommendation stays fixed until an outcome is submitted, so
    /// asking twice gives the same answer. Arm statistics are never touched.
    pub fn recommend<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Recommendation> {
        if self.status == SessionStatus::Completed {
            return Err(Error::SessionCompleted);
        }
        if let Some((_, rec)) = &self.pending {
            return Ok(rec.clone());
        }
        let t = self.tested.len() as u64 + 1;
        let chosen = self.policy.select::<T, R>(&self.arms, t, rng)?;
        let model = &self.models[chosen];
        let module_id = model
            .priority_order
            .iter()
            .find(|id| !self.tested.contains(id.as_str()))
            .expect("active session has untested modules")
            .clone();
        let rec = Recommendation {
            prediction: model.predictions[&module_id],
            module_id,
            model_id: model.model_id.clone(),
        };
        self.pending = Some((chosen, rec.clone()));
        Ok(rec)
    }

    /// Records the outcome of testing `module_id`, which need not be the
    /// recommended module.
    ///
    /// Under full information every model is rewarded. Under partial
    /// feedback only the model of the outstanding recommendation is.
    pub fn submit_outcome(&mut self, module_id: &str, actual: Faultiness) -> Result<OutcomeReport<T>> {
        if self.status == SessionStatus::Completed {
            return Err(Error::SessionCompleted);
        }
        if !self.models[0].predictions.contains_key(module_id) {
            return Err(Error::UnknownModule(module_id.to_string()));
        }
        if self.tested.contains(module_id) {
            return Err(Error::AlreadyTested(module_id.to_string()));
        }
        let chosen = match (&self.pending, self.policy.config.feedback) {
            (Some((i, _)), _) => *i,
            (None, Feedback::FullInformation) => 0,
            (None, Feedback::PartialFeedback) => return Err(Error::NoPendingRecommendation),
        };
        let rewards: Vec<i32> = self
            .models
            .iter()
            .map(|m| reward_of(m.predictions[module_id], actual))
            .collect();
        let t = self.tested.len() as u64 + 1;
        self.policy.apply_feedback::<T>(&mut self.arms, chosen, &rewards, t)?;

        let observed: IndexMap<String, i32> = match self.policy.config.feedback {
            Feedback::FullInformation => self
                .models
                .iter()
                .zip(&rewards)
                .map(|(m, &r)| (m.model_id.clone(), r))
                .collect(),
            Feedback::PartialFeedback => [(self.models[chosen].model_id.clone(), rewards[chosen])].into(),
        };
        let active = self.pending.take().map(|(i, _)| i);
        self.tested.insert(module_id.to_string());
        if self.tested.len() == self.models[0].predictions.len() {
            self.status = SessionStatus::Completed;
        }
        let averages = self.averages();
        self.log.push(SessionStep {
            step: self.tested.len(),
            module_id: module_id.to_string(),
            actual,
            active_model: active.map(|i| self.models[i].model_id.clone()),
            used_prediction: active.map(|i| self.models[i].predictions[module_id]),
            rewards: observed.clone(),
            averages: averages.clone(),
        });
        Ok(OutcomeReport {
            module_id: module_id.to_string(),
            rewards: observed,
            averages,
            status: self.status,
        })
    }

    /// AUC of the labels modules were tested under, against the submitted
    /// outcomes. `None` until every tested module had an outstanding
    /// recommendation and both outcomes have been seen.
    pub fn composite_auc(&self) -> Option<T> {
        let labels: Option<Vec<FaultLabel>> = self.log.iter().map(|s| s.used_prediction).collect();
        let faulty: Vec<bool> = self.log.iter().map(|s| s.actual.is_faulty()).collect();
        auc_from_labels(&labels?, &faulty).ok()
    }
}
