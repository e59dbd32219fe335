use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dqip_core::cli::{run, run_suite, ExperimentConfig};
use dqip_core::compile::compile_corpus;
use dqip_core::dam::toy_protocols;
use dqip_core::error::{Error, Result};

#[derive(Parser)]
#[command(name = "dqip", version, about = "Distributed quantum interactive proof experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config and write `<name>.json` and `<name>.csv`.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config's `output`.
        #[arg(long, env = "DQIP_OUTPUT_DIR")]
        output: Option<PathBuf>,
    },
    /// Run the acceptance criteria and print one line per criterion.
    VerifySuite {
        /// Only these criterion ids.
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
    /// Protocols of the compile corpus.
    ListProtocols,
    /// Toy classical protocols with their exact values.
    ListDam,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            let body = serde_json::json!({"error": {"kind": e.kind(), "message": e.to_string()}});
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run { config, output } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = output
                .or_else(|| cfg.output.clone())
                .unwrap_or_else(|| PathBuf::from("results"));
            let report = run(&cfg)?;
            let (json, csv) = report.write(&dir)?;
            println!("{}", json.display());
            println!("{}", csv.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::VerifySuite { only } => {
            let results = run_suite(&only, |r| {
                println!(
                    "[{}] {:>2} {:<38} {} (target {}) {:.1}s",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.id,
                    r.name,
                    r.measured,
                    r.target,
                    r.seconds
                );
            });
            if results.is_empty() {
                return Err(Error::Config(format!("no criterion matches {only:?}")));
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            let seconds: f64 = results.iter().map(|r| r.seconds).sum();
            println!("{} passed, {failed} failed in {seconds:.1}s", results.len() - failed);
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::ListProtocols => {
            println!("{:<16} {:>5} {:>6} {:>12} {:>12}", "name", "turns", "qubits", "completeness", "soundness");
            for e in compile_corpus()? {
                println!(
                    "{:<16} {:>5} {:>6} {:>12.6} {:>12.6}",
                    e.name,
                    e.yes.num_turns(),
                    e.yes.total_qubits(),
                    e.completeness,
                    e.soundness
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ListDam => {
            println!("{:<16} {:>5} {:>4} {:>12} {:>12}", "name", "turns", "bits", "completeness", "soundness");
            for e in toy_protocols()? {
                println!(
                    "{:<16} {:>5} {:>4} {:>12.6} {:>12.6}",
                    e.protocol.name, e.protocol.turns, e.protocol.bits, e.completeness, e.soundness
                );
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
