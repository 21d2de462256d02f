use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ecmodes_cli::{RunOptions, Scenario};

/// Emitter-centered mode simulations from a TOML run configuration.
#[derive(Debug, Parser)]
#[command(name = "ecmodes", version)]
struct Cli {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scenario to run instead of `run.scenario`.
    #[arg(long, value_parser = parse_scenario)]
    scenario_override: Option<Scenario>,
    /// Also write spectra.csv for propagating scenarios.
    #[arg(long)]
    dump_spectra: bool,
    /// off, error, warn, info, debug or trace.
    #[arg(long, default_value = "info")]
    log_level: log::LevelFilter,
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    Scenario::parse(s).ok_or_else(|| format!("unknown scenario `{s}` (spectra, wigner_weisskopf, driven)"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().filter_level(cli.log_level).format_timestamp(None).init();
    let options = RunOptions {
        config: cli.config,
        out: cli.out,
        scenario_override: cli.scenario_override,
        dump_spectra: cli.dump_spectra,
    };
    match ecmodes_cli::run(&options) {
        Ok((manifest, dir)) => {
            log::info!(
                "{} finished in {:.2} s; outputs in {}",
                manifest.scenario,
                manifest.wall_time_s,
                dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            if let Some(path) = ecmodes_cli::write_diagnostic(&options, &err) {
                eprintln!("diagnostic written to {}", path.display());
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
