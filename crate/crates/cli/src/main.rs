use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use kgfw::scenario::{run, validate_config, Preset, RunError, ScenarioConfig};

#[derive(Parser)]
#[command(name = "kgfw", version, about = "Klein-Gordon wavepackets through supercritical barrier trains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its artifacts.
    Run(RunArgs),
    /// Print a preset as TOML.
    Preset { name: String },
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML scenario file; laid over the preset when both are given.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["fig1", "fig2", "fig3"])]
    preset: Option<String>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    n_points: Option<usize>,
    /// `section.key=value`, repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Check the config and exit.
    #[arg(long)]
    check: bool,
}

const EXIT_INVALID: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

fn load(args: &RunArgs) -> anyhow::Result<ScenarioConfig> {
    let preset = args.preset.as_deref().map(|p| Preset::parse(p).expect("clap restricts values"));
    let text = args
        .config
        .as_ref()
        .map(|p| std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display())))
        .transpose()?;
    let mut config = match (preset, text) {
        (Some(p), Some(t)) => ScenarioConfig::preset(p).merged_with_toml(&t)?,
        (Some(p), None) => ScenarioConfig::preset(p),
        (None, Some(t)) => ScenarioConfig::from_toml_str(&t)?,
        (None, None) => return Err(anyhow!("either --config or --preset is required")),
    };
    if let Some(n) = args.n_points {
        config.grid.n_points = n;
    }
    if let Some(dir) = &args.output_dir {
        config.run.output_dir = dir.clone();
    }
    for o in &args.overrides {
        config = config.with_override(o)?;
    }
    Ok(config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Preset { name } => match Preset::parse(&name) {
            Some(p) => {
                print!("{}", ScenarioConfig::preset(p).to_toml_string());
                ExitCode::SUCCESS
            }
            None => {
                eprintln!("error: unknown preset '{name}' (expected fig1, fig2 or fig3)");
                ExitCode::from(EXIT_INVALID)
            }
        },
        Command::Run(args) => {
            let config = match load(&args) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return ExitCode::from(EXIT_INVALID);
                }
            };
            if args.check {
                let violations = validate_config(&config);
                for v in &violations {
                    eprintln!("{v}");
                }
                return if violations.is_empty() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(EXIT_INVALID)
                };
            }
            match run(&config) {
                Ok(m) => {
                    log::info!(
                        "wrote {} files to {} in {:.1} s",
                        m.files.len(),
                        config.run.output_dir.display(),
                        m.timing.total_seconds
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(match e {
                        RunError::Invalid(_) => EXIT_INVALID,
                        RunError::Stage { .. } => EXIT_NUMERICAL,
                    })
                }
            }
        }
    }
}
