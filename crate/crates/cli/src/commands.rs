//! `simulate`, `generate` and `report`.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use faultbandit_core::eval::render_table;
use faultbandit_core::export::write_trial_csv;
use faultbandit_core::sim::{run_experiment, Execution};
use faultbandit_core::synth::{generate_fixture, worked_example_fixture};
use faultbandit_core::{Fixture, Summary};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

/// Contents of `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub config: ExperimentConfig,
    pub model_sets: Vec<Summary>,
}

#[derive(Debug)]
pub struct SimulateOutput {
    pub summaries: Vec<Summary>,
    pub files: Vec<PathBuf>,
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn render_summaries(summaries: &[Summary]) -> String {
    summaries.iter().map(render_table).collect::<Vec<_>>().join("\n")
}

/// Runs every model set and writes `trials_<set>.csv`, `summary.json` and
/// `summary.txt` under the configured output directory.
pub fn simulate(config: &ExperimentConfig) -> Result<SimulateOutput> {
    config.validate()?;
    let out_dir = &config.output_dir;
    fs::create_dir_all(out_dir).with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let execution = if config.parallel {
        Execution::Parallel
    } else {
        Execution::Serial
    };

    let mut summaries = Vec::new();
    let mut files = Vec::new();
    for spec in config.specs() {
        let outcome = run_experiment::<f64>(&spec, execution, config.write_trials)
            .with_context(|| format!("model set `{}`", spec.model_set))?;
        if config.write_trials {
            let path = out_dir.join(format!("trials_{}.csv", file_stem(&spec.model_set)));
            let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_trial_csv(BufWriter::new(file), &outcome.iterations)?;
            files.push(path);
        }
        summaries.push(outcome.summary);
    }

    let json_path = out_dir.join("summary.json");
    write_json(
        &json_path,
        &SummaryFile {
            config: config.clone(),
            model_sets: summaries.clone(),
        },
    )?;
    let text_path = out_dir.join("summary.txt");
    fs::write(&text_path, render_summaries(&summaries)).with_context(|| format!("writing {}", text_path.display()))?;
    files.push(json_path);
    files.push(text_path);
    Ok(SimulateOutput { summaries, files })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum BuiltinFixture {
    /// Six modules, Test1-3 faulty, models A and B.
    WorkedExample,
}

impl BuiltinFixture {
    pub fn build(self) -> Fixture {
        match self {
            BuiltinFixture::WorkedExample => worked_example_fixture(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GenerateRequest {
    pub n_modules: usize,
    pub n_faulty: usize,
    pub target_aucs: Vec<f64>,
    pub seed: u64,
    pub builtin: Option<BuiltinFixture>,
}

pub fn generate_fixture_for(req: &GenerateRequest) -> Result<Fixture> {
    if let Some(b) = req.builtin {
        return Ok(b.build());
    }
    ensure!(!req.target_aucs.is_empty(), "at least one target AUC is required");
    Ok(generate_fixture(
        req.n_modules,
        req.n_faulty,
        &req.target_aucs,
        req.seed,
    )?)
}

/// Writes a fixture (dataset plus models) as JSON to `out`.
pub fn generate(req: &GenerateRequest, out: &Path) -> Result<Fixture> {
    let fixture = generate_fixture_for(req)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    write_json(out, &fixture)?;
    Ok(fixture)
}

pub fn load_fixture(path: &Path) -> Result<Fixture> {
    let text = fs::read_to_string(path).with_context(|| format!("reading fixture {}", path.display()))?;
    let fixture: Fixture =
        serde_json::from_str(&text).with_context(|| format!("parsing fixture {}", path.display()))?;
    fixture.validate()?;
    Ok(fixture)
}

/// Reads `summary.json` (or a directory containing one) and renders its tables.
pub fn report(path: &Path) -> Result<String> {
    let path = if path.is_dir() {
        path.join("summary.json")
    } else {
        path.to_path_buf()
    };
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let file: SummaryFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(render_summaries(&file.model_sets))
}
