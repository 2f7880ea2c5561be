use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;
use faultbandit_cli::cli::{Cli, Command};
use faultbandit_cli::commands::{self, BuiltinFixture};
use faultbandit_cli::server::{self, AppState};
use faultbandit_core::{Feedback, PolicyConfig};

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let config = args.to_config()?;
            let out = commands::simulate(&config)?;
            print!("{}", commands::render_summaries(&out.summaries));
            for f in &out.files {
                eprintln!("wrote {}", f.display());
            }
        }
        Command::Generate(args) => {
            let fixture = commands::generate(&args.request(), &args.out)?;
            for m in &fixture.models {
                eprintln!(
                    "{}: target {:.2}, achieved {:.4}",
                    m.model_id, m.target_auc, m.achieved_auc
                );
            }
            eprintln!("wrote {}", args.out.display());
        }
        Command::Serve(args) => {
            let fixture = if args.fixture.eq_ignore_ascii_case("worked-example") {
                BuiltinFixture::WorkedExample.build()
            } else {
                commands::load_fixture(args.fixture.as_ref())?
            };
            let feedback = if args.partial {
                Feedback::PartialFeedback
            } else {
                Feedback::FullInformation
            };
            let policy = PolicyConfig::new(args.policy, feedback);
            policy.validate(fixture.models.len())?;
            let state = AppState::new(fixture.models, policy, args.seed);
            tokio::runtime::Runtime::new()?.block_on(server::serve(state, &args.bind))?;
        }
        Command::Report(args) => print!("{}", commands::report(&args.path)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
