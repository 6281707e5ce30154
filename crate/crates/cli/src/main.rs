use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use readout_sim::{preset, run, CliError, ConfigError, Format, Scenario, ScenarioConfig};

/// Run a readout-chain simulation scenario and write its tables.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Args {
    /// TOML scenario configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Shipped preset to run instead of a config file.
    #[arg(long)]
    preset: Option<String>,

    /// Overrides the scenario named in the config.
    #[arg(long)]
    scenario: Option<Scenario>,

    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long)]
    format: Option<Format>,

    /// Only report errors.
    #[arg(long)]
    quiet: bool,

    /// List the shipped presets and exit.
    #[arg(long)]
    list_presets: bool,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("READOUT_SIM_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        CliError::Config(ConfigError::Invalid {
            key: "READOUT_SIM_THREADS".into(),
            message: format!("expected a positive integer, got `{v}`"),
        })
    })?;
    // Fails only if a pool already exists, which cannot happen this early.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn execute(args: Args) -> Result<(), CliError> {
    if args.list_presets {
        for (name, _) in readout_sim::config::PRESETS {
            println!("{name}");
        }
        return Ok(());
    }
    configure_threads()?;
    let mut loaded = match (&args.config, &args.preset) {
        (Some(path), _) => ScenarioConfig::load(path)?,
        (None, Some(name)) => preset(name)?,
        (None, None) => match args.scenario {
            Some(s) => ScenarioConfig::parse(&format!("scenario = \"{}\"\n", s.name()))?,
            None => {
                return Err(CliError::Config(ConfigError::Invalid {
                    key: "--config".into(),
                    message: "give --config, --preset or --scenario".into(),
                }))
            }
        },
    };
    let cfg = &mut loaded.config;
    if let Some(s) = args.scenario {
        cfg.scenario = s;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
        loaded.defaulted.retain(|k| k != "seed");
    }
    if let Some(dir) = args.out {
        cfg.output.dir = dir;
    }
    if let Some(f) = args.format {
        cfg.output.format = f;
    }
    cfg.validate()?;
    let bundle = run(&loaded)?;
    let written = bundle.emit(&loaded.config.output.dir, loaded.config.output.format)?;
    if !args.quiet {
        for w in bundle.metadata.get("warnings").and_then(|w| w.as_array()).into_iter().flatten() {
            eprintln!("warning: {}", w.as_str().unwrap_or_default());
        }
        if let Some(results) = bundle.metadata.get("results").and_then(|r| r.as_object()) {
            for (k, v) in results {
                println!("{k} = {v}");
            }
        }
        for p in written {
            println!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
