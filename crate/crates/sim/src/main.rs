use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use nudge_sim::quiz::InteractiveResponder;
use nudge_sim::{haptics_quiz, run_http, run_inprocess, HttpOptions, Mode, ResponderScript, Scenario, ScriptedResponder};

#[derive(Parser)]
#[command(name = "sim", about = "Classroom feedback simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its report.
    Run {
        /// Scenario TOML file.
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        scenario: Option<PathBuf>,
        /// Bundled scenario by name (see `sim presets`).
        #[arg(long)]
        preset: Option<String>,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "inprocess")]
        mode: Mode,
        /// Server base URL for http mode.
        #[arg(long, default_value = "http://127.0.0.1:8080")]
        url: String,
        /// Compress the schedule by this factor in http mode.
        #[arg(long, default_value_t = 1.0)]
        time_scale: f64,
        /// Report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Haptics identification quiz.
    Quiz {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Responder TOML file, or `interactive`.
        #[arg(long)]
        responder: String,
    },
    /// List bundled scenarios, or print one.
    Presets { name: Option<String> },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run { scenario, preset, seed, mode, url, time_scale, out } => {
            let scenario = match (scenario, preset) {
                (Some(path), _) => Scenario::from_file(&path)?,
                (None, Some(name)) => Scenario::preset(&name).with_context(|| format!("no preset named {name}"))?,
                (None, None) => bail!("--scenario or --preset is required"),
            };
            let seed = seed.unwrap_or(scenario.seed);
            let report = match mode {
                Mode::Inprocess => run_inprocess(&scenario, seed)?,
                Mode::Http => run_http(&scenario, seed, &HttpOptions { base_url: url, time_scale })?,
            };
            eprintln!("{}", report.summary());
            match out {
                Some(path) => std::fs::write(&path, report.to_json() + "\n")
                    .with_context(|| format!("writing {}", path.display()))?,
                None => println!("{}", report.to_json()),
            }
        }
        Command::Quiz { seed, responder } => {
            let result = if responder == "interactive" {
                let stdin = std::io::stdin();
                let mut r = InteractiveResponder::new(stdin.lock(), std::io::stdout());
                haptics_quiz(seed, &mut r)
            } else {
                let script = ResponderScript::from_file(responder.as_ref())?;
                haptics_quiz(seed, &mut ScriptedResponder::new(script))
            };
            match result {
                Ok(m) => {
                    print!("{}", m.render());
                    println!("{}", serde_json::to_string(&m)?);
                }
                Err(aborted) => {
                    print!("{}", aborted.partial.render());
                    std::io::stdout().flush()?;
                    return Err(aborted.into());
                }
            }
        }
        Command::Presets { name: None } => {
            for name in Scenario::preset_names() {
                let s = Scenario::preset(name).expect("bundled");
                println!(
                    "{name:<10} enrolled={:<4} active={:<3} minutes={}",
                    s.enrollment,
                    s.active_count(),
                    s.duration_min
                );
            }
        }
        Command::Presets { name: Some(name) } => {
            print!("{}", Scenario::preset_toml(&name).with_context(|| format!("no preset named {name}"))?);
        }
    }
    Ok(())
}
