//! Scenario execution and the run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ecmodes::drive::{propagate_driven, PulseShape};
use ecmodes::dynamics::{
    propagate, DiscretizedSystem, FieldProbe, Frame, ObservableSeries, PropagationOptions, Propagator,
    SingleExcitationState,
};
use ecmodes::greens::GreensProvider;
use ecmodes::grid::GridScheme;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{self, Built, DriveConfig, LoadedConfig, PropagatorChoice, RunConfig, Scenario};
use crate::error::CliError;
use crate::output;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const ERROR_FILE: &str = "error.txt";

/// Command-line choices layered over the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub scenario_override: Option<Scenario>,
    pub dump_spectra: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub omega_min_ev: f64,
    pub omega_max_ev: f64,
    pub nodes: usize,
    pub scheme: String,
    pub max_spacing_ev: f64,
    pub recurrence_time_fs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSummary {
    pub min_rank: usize,
    pub max_rank: usize,
    /// Number of grid nodes per kept rank.
    pub nodes_per_rank: BTreeMap<usize, usize>,
    pub hamiltonian_dimension: usize,
    /// Largest `‖g gᵀ − diag(G) S diag(G)‖_max` over the grid.
    pub max_gram_error: f64,
    /// Largest `‖V S Vᵀ − 1‖_max` over the grid.
    pub max_orthonormality_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationSummary {
    pub propagator: String,
    pub t_end_fs: f64,
    pub dt_fs: f64,
    pub steps: usize,
    pub samples: usize,
    pub max_norm_drift: f64,
    /// `lab`, or `displaced` when a classical drive was active: continuum
    /// densities then refer to the displaced frame.
    pub frame: String,
    pub rotating_wave_drive: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// SHA-256 of the canonical JSON form of the effective config.
    pub config_hash: String,
    pub config_path: String,
    pub scenario: String,
    pub grid: GridSummary,
    pub ranks: RankSummary,
    pub propagation: Option<PropagationSummary>,
    pub warnings: Vec<String>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
}

/// Hex SHA-256 of the config's canonical serialization.
pub fn config_hash(config: &RunConfig) -> String {
    let canonical = serde_json::to_string(config).expect("config serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// The config with command-line overrides applied.
pub fn effective_config(options: &RunOptions) -> Result<LoadedConfig, CliError> {
    let mut loaded = config::read(&options.config)?;
    if let Some(s) = options.scenario_override {
        loaded.config.run.scenario = s;
    }
    if options.dump_spectra {
        loaded.config.output.spectra = true;
    }
    let issues = config::validate(&loaded.config);
    if issues.is_empty() {
        Ok(loaded)
    } else {
        Err(CliError::Validation(issues))
    }
}

/// Where outputs go: `--out`, else `output.directory` from the config
/// (relative to the config file), else `out/<config stem>` in the working
/// directory.
pub fn output_dir(options: &RunOptions, loaded: Option<&LoadedConfig>) -> PathBuf {
    if let Some(out) = &options.out {
        return out.clone();
    }
    if let Some(dir) = loaded.and_then(|l| l.config.output.directory.as_deref().map(|d| l.resolve(d))) {
        return dir;
    }
    let stem = options.config.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    Path::new("out").join(stem)
}

/// Runs one config end to end and writes the manifest.
pub fn run(options: &RunOptions) -> Result<(RunManifest, PathBuf), CliError> {
    let start = Instant::now();
    let loaded = effective_config(options)?;
    let out_dir = output_dir(options, Some(&loaded));
    let manifest = execute(&loaded, &options.config, &out_dir, start)?;
    Ok((manifest, out_dir))
}

/// Runs a validated config, writing into `out_dir`.
pub fn execute(loaded: &LoadedConfig, config_path: &Path, out_dir: &Path, start: Instant) -> Result<RunManifest, CliError> {
    let c = &loaded.config;
    let built = config::build(loaded)?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let scenario = c.run.scenario;
    log::info!("assembling {} nodes for {} emitters", built.grid.len(), built.emitters.len());
    let system = DiscretizedSystem::assemble(&built.provider, &built.emitters, &built.grid, &built.orthogonalization)
        .map_err(|e| CliError::runtime("greens", e))?;
    log::info!("Hamiltonian dimension {}", system.dimension());

    let mut outputs = Vec::new();
    let mut warnings = Vec::new();
    if c.output.spectra || scenario == Scenario::Spectra {
        output::write_spectra(&out_dir.join("spectra.csv"), &system)?;
        outputs.push("spectra.csv".to_owned());
    }

    let propagation = match scenario {
        Scenario::Spectra => None,
        Scenario::WignerWeisskopf | Scenario::Driven => {
            let t_end = c.run.t_end_fs.expect("validated");
            warnings.extend(system.guard_warnings(&built.provider, t_end, kappa_estimate(&built.provider)));
            let series = propagate_scenario(c, &built, &system)?;
            output::write_populations(&out_dir.join("populations.csv"), &system, &series)?;
            outputs.push("populations.csv".to_owned());
            output::write_continuum(&out_dir.join("continuum.csv"), &system, &series)?;
            outputs.push("continuum.csv".to_owned());
            for (probe, o) in c.observation_points.iter().enumerate() {
                let name = format!("field_{}.csv", o.name);
                output::write_field(&out_dir.join(&name), &series, probe)?;
                outputs.push(name);
            }
            Some(PropagationSummary {
                propagator: match c.run.propagator {
                    PropagatorChoice::Rk4 => "rk4",
                    PropagatorChoice::Eigendecomposition => "eigendecomposition",
                }
                .to_owned(),
                t_end_fs: t_end,
                dt_fs: series.dt_fs,
                steps: series.steps,
                samples: c.run.samples,
                max_norm_drift: series.max_norm_drift(),
                frame: match series.frame {
                    Frame::Lab => "lab",
                    Frame::Displaced => "displaced",
                }
                .to_owned(),
                rotating_wave_drive: built.pulse.as_ref().filter(|_| scenario == Scenario::Driven).map(|p| p.uses_rwa()),
            })
        }
    };
    for w in &warnings {
        log::warn!("{w}");
    }

    let mut nodes_per_rank = BTreeMap::new();
    for r in system.rank_map() {
        *nodes_per_rank.entry(r).or_insert(0) += 1;
    }
    let bases = system.bases();
    let (a, b) = system.grid().window();
    outputs.push(MANIFEST_FILE.to_owned());
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        config_hash: config_hash(c),
        config_path: config_path.display().to_string(),
        scenario: scenario.to_string(),
        grid: GridSummary {
            omega_min_ev: a,
            omega_max_ev: b,
            nodes: system.grid().len(),
            scheme: match system.grid().scheme() {
                GridScheme::Uniform => "uniform",
                GridScheme::GaussLegendre => "gauss_legendre",
            }
            .to_owned(),
            max_spacing_ev: system.grid().max_spacing(),
            recurrence_time_fs: system.recurrence_time(),
        },
        ranks: RankSummary {
            min_rank: bases.iter().map(|b| b.rank).min().unwrap_or(0),
            max_rank: system.max_rank(),
            nodes_per_rank,
            hamiltonian_dimension: system.dimension(),
            max_gram_error: bases.iter().map(|b| b.gram_error()).fold(0.0, f64::max),
            max_orthonormality_error: bases.iter().map(|b| b.orthonormality_error()).fold(0.0, f64::max),
        },
        propagation,
        warnings,
        inputs: built.inputs.iter().map(|p| p.display().to_string()).collect(),
        outputs,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let path = out_dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(manifest)
}

fn kappa_estimate(provider: &GreensProvider) -> f64 {
    match provider {
        GreensProvider::Lorentzian(m) => m.terms().iter().map(|t| t.half_width).fold(0.0, f64::max),
        _ => 0.0,
    }
}

fn propagate_scenario(c: &RunConfig, built: &Built, system: &DiscretizedSystem) -> Result<ObservableSeries, CliError> {
    let t_end = c.run.t_end_fs.expect("validated");
    let driven = c.run.scenario == Scenario::Driven;
    let gaussian = match (&built.pulse, driven) {
        (Some(p), true) => match &p.shape {
            PulseShape::Gaussian { pulse, .. } => Some(*pulse),
            PulseShape::Sampled(_) => None,
        },
        _ => None,
    };
    let mut probes = Vec::with_capacity(built.observation_points.len());
    for (k, (&point, o)) in built.observation_points.iter().zip(&c.observation_points).enumerate() {
        let mut probe = FieldProbe::new(system, &built.provider, point)
            .map_err(|e| CliError::runtime(format!("observation_points[{k}]"), e))?;
        if let (Some(pulse), Some(DriveConfig::Gaussian { observation_amplitudes_vpm, .. })) = (gaussian, &c.drive) {
            if let Some(&amp) = observation_amplitudes_vpm.get(&o.name) {
                probe = probe.with_classical(pulse, amp);
            }
        }
        probes.push(probe);
    }
    let mut snapshots = if c.run.continuum_times_fs.is_empty() { vec![t_end] } else { c.run.continuum_times_fs.clone() };
    snapshots.sort_by(f64::total_cmp);
    snapshots.dedup();
    let mut options = PropagationOptions::new(t_end)
        .propagator(match c.run.propagator {
            PropagatorChoice::Rk4 => Propagator::Rk4,
            PropagatorChoice::Eigendecomposition => Propagator::Eigendecomposition,
        })
        .samples(c.run.samples)
        .snapshots(snapshots)
        .probes(probes);
    if let Some(dt) = c.run.dt_fs {
        options = options.dt(dt);
    }
    let initial = match &c.run.initial_emitter {
        Some(name) => {
            let i = built.emitters.iter().position(|e| e.name == *name).expect("validated");
            SingleExcitationState::excited(system, i).map_err(|e| CliError::runtime("run.initial_emitter", e))?
        }
        None => SingleExcitationState::ground_state(system),
    };
    log::info!("propagating to {t_end} fs");
    let result = match (&built.pulse, driven) {
        (Some(pulse), true) => propagate_driven(system, pulse, &initial, &options),
        _ => propagate(system, &initial, &options),
    };
    result.map_err(|e| {
        let context = match e {
            ecmodes::Error::StepSize { .. } => "run.dt_fs",
            _ => "run",
        };
        CliError::runtime(context, e)
    })
}
