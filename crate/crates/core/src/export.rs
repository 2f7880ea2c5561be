//! CSV trial logs.

use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sim::IterationRuns;

/// Header for a log over arms `arm_ids`.
pub fn trial_csv_header(arm_ids: &[String]) -> Vec<String> {
    let fixed = [
        "iteration",
        "step",
        "policy",
        "chosen_arm",
        "module_id",
        "prediction",
        "actual",
    ];
    fixed
        .iter()
        .map(|s| s.to_string())
        .chain(arm_ids.iter().map(|a| format!("reward_{a}")))
        .chain(arm_ids.iter().map(|a| format!("avg_{a}")))
        .collect()
}

/// Writes one row per step of every run. All runs must share the same arms.
///
/// Rewards an arm did not observe (partial feedback) are left empty.
pub fn write_trial_csv<W: Write, T: Scalar>(writer: W, iterations: &[IterationRuns<T>]) -> Result<()> {
    let arm_ids = match iterations.iter().flat_map(|it| &it.runs).next() {
        Some(run) => run.arm_ids.clone(),
        None => return Err(Error::Empty("runs")),
    };
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(trial_csv_header(&arm_ids))?;
    for it in iterations {
        for run in &it.runs {
            if run.arm_ids != arm_ids {
                return Err(Error::DimensionMismatch(format!(
                    "run `{}` has arms {:?}, expected {:?}",
                    run.policy, run.arm_ids, arm_ids
                )));
            }
            for step in &run.steps {
                let mut record = vec![
                    it.iteration.to_string(),
                    step.t.to_string(),
                    run.policy.clone(),
                    step.chosen_arm.clone(),
                    step.tested_module.clone(),
                    step.used_prediction.to_string(),
                    step.actual.to_string(),
                ];
                record.extend(
                    step.rewards
                        .iter()
                        .map(|r| r.map(|r| r.to_string()).unwrap_or_default()),
                );
                record.extend(step.post_averages.iter().map(|a| a.to_string()));
                out.write_record(&record)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}
