use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use faultbandit_core::{Feedback, PolicyKind};

use crate::commands::{BuiltinFixture, GenerateRequest};
use crate::config::ExperimentConfig;

#[derive(Debug, Parser)]
#[command(
    name = "faultbandit",
    version,
    about = "Bandit-driven selection of fault-prediction models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the synthetic experiment for every configured model set.
    Simulate(SimulateArgs),
    /// Write a dataset and model fixture as JSON.
    Generate(GenerateArgs),
    /// Serve advisor sessions over HTTP.
    Serve(ServeArgs),
    /// Print the tables of a previous `simulate` run.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON experiment config; flags below override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Comma-separated, e.g. `eps:0,eps:0.1,ucb,ts,ab:20`.
    #[arg(long, value_delimiter = ',')]
    pub policies: Option<Vec<PolicyKind>>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub n_modules: Option<usize>,
    #[arg(long)]
    pub n_faulty: Option<usize>,
    /// Only the chosen model observes its reward.
    #[arg(long)]
    pub partial: bool,
    /// Run iterations on one thread.
    #[arg(long)]
    pub serial: bool,
    /// Skip the per-step CSV logs.
    #[arg(long)]
    pub no_trials: bool,
}

impl SimulateArgs {
    pub fn to_config(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            c.base_seed = s;
        }
        if let Some(i) = self.iterations {
            c.iterations = i;
        }
        if let Some(p) = &self.policies {
            c.policies = p.clone();
        }
        if let Some(d) = &self.out_dir {
            c.output_dir = d.clone();
        }
        if let Some(n) = self.n_modules {
            c.n_modules = n;
        }
        if let Some(k) = self.n_faulty {
            c.n_faulty = k;
        }
        if self.partial {
            c.feedback = Feedback::PartialFeedback;
        }
        if self.serial {
            c.parallel = false;
        }
        if self.no_trials {
            c.write_trials = false;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 100)]
    pub n_modules: usize,
    #[arg(long, default_value_t = 15)]
    pub n_faulty: usize,
    /// Comma-separated target AUCs, one model each.
    #[arg(long, value_delimiter = ',', default_values_t = [0.59, 0.70, 0.77, 0.80])]
    pub targets: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Emit a built-in fixture instead of generating one.
    #[arg(long, value_enum)]
    pub fixture: Option<BuiltinFixture>,
    #[arg(long, default_value = "fixture.json")]
    pub out: PathBuf,
}

impl GenerateArgs {
    pub fn request(&self) -> GenerateRequest {
        GenerateRequest {
            n_modules: self.n_modules,
            n_faulty: self.n_faulty,
            target_aucs: self.targets.clone(),
            seed: self.seed,
            builtin: self.fixture,
        }
    }
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// `worked-example` or a path to a fixture written by `generate`.
    #[arg(long, default_value = "worked-example")]
    pub fixture: String,
    /// Default policy for new sessions.
    #[arg(long, default_value = "eps:0")]
    pub policy: PolicyKind,
    #[arg(long)]
    pub partial: bool,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: String,
    /// Seed for session random streams.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// `summary.json` or the directory holding it.
    #[arg(default_value = "out")]
    pub path: PathBuf,
}
