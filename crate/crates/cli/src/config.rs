//! Run configuration: TOML grammar, validation and conversion into library
//! objects. See `docs/config.md` for the full grammar.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use ecmodes::drive::{ClassicalPulse, DriveMode, GaussianPulse, SampledField};
use ecmodes::greens::{GreensProvider, Interpolation, LorentzianModel, LorentzianTerm, PointSpec, TabulatedGreens};
use ecmodes::grid::{FrequencyGrid, GridScheme};
use ecmodes::modes::{Emitter, EmitterSet, Orthogonalization, OrthogonalizationMethod, DEFAULT_RANK_THRESHOLD};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Issue};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub emitters: Vec<EmitterConfig>,
    pub greens: GreensConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub orthogonalization: OrthogonalizationConfig,
    pub run: RunSection,
    #[serde(default)]
    pub drive: Option<DriveConfig>,
    #[serde(default)]
    pub observation_points: Vec<ObservationPointConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterConfig {
    pub name: String,
    /// Green's function point for lorentzian/tabulated data; defaults to
    /// `name`.
    #[serde(default)]
    pub point: Option<String>,
    #[serde(default)]
    pub position_nm: Option<[f64; 3]>,
    #[serde(default)]
    pub orientation: Option<[f64; 3]>,
    pub dipole_enm: f64,
    pub frequency_ev: f64,
}

impl EmitterConfig {
    pub fn point_name(&self) -> &str {
        self.point.as_deref().unwrap_or(&self.name)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GreensConfig {
    FreeSpace {
        #[serde(default = "one")]
        refractive_index: f64,
    },
    Lorentzian {
        points: Vec<String>,
        terms: Vec<TermConfig>,
    },
    Tabulated {
        file: PathBuf,
        #[serde(default)]
        interpolation: InterpolationChoice,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub center_ev: f64,
    pub half_width_ev: f64,
    /// Full symmetric amplitude matrix (1/m) over `greens.points`.
    #[serde(default)]
    pub amplitude: Option<Vec<Vec<f64>>>,
    /// Rank-one amplitude `u_a u_b`.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolationChoice {
    Linear,
    #[default]
    MonotoneCubic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub omega_min_ev: f64,
    pub omega_max_ev: f64,
    pub nodes: usize,
    #[serde(default)]
    pub scheme: SchemeChoice,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeChoice {
    #[default]
    Uniform,
    GaussLegendre,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrthogonalizationConfig {
    #[serde(default)]
    pub method: MethodChoice,
    #[serde(default = "default_rank_threshold")]
    pub rank_threshold: f64,
}

impl Default for OrthogonalizationConfig {
    fn default() -> Self {
        Self { method: MethodChoice::default(), rank_threshold: DEFAULT_RANK_THRESHOLD }
    }
}

fn default_rank_threshold() -> f64 {
    DEFAULT_RANK_THRESHOLD
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    #[default]
    Cholesky,
    Lowdin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Spectra,
    WignerWeisskopf,
    Driven,
}

impl Scenario {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "spectra" => Some(Self::Spectra),
            "wigner_weisskopf" => Some(Self::WignerWeisskopf),
            "driven" => Some(Self::Driven),
            _ => None,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Spectra => "spectra",
            Self::WignerWeisskopf => "wigner_weisskopf",
            Self::Driven => "driven",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagatorChoice {
    #[default]
    Rk4,
    Eigendecomposition,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub scenario: Scenario,
    #[serde(default)]
    pub t_end_fs: Option<f64>,
    #[serde(default)]
    pub dt_fs: Option<f64>,
    #[serde(default)]
    pub propagator: PropagatorChoice,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Emitter excited at t = 0; a driven run without it starts in the
    /// ground state.
    #[serde(default)]
    pub initial_emitter: Option<String>,
    /// Times at which continuum densities are written; default `[t_end_fs]`.
    #[serde(default)]
    pub continuum_times_fs: Vec<f64>,
}

fn default_samples() -> usize {
    ecmodes::dynamics::DEFAULT_SAMPLES
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveModeChoice {
    #[default]
    Auto,
    Rwa,
    FullCarrier,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriveConfig {
    Gaussian {
        carrier_ev: f64,
        center_fs: f64,
        width_fs: f64,
        #[serde(default)]
        phase_rad: f64,
        /// Peak projected field per emitter name, V/m; absent names get 0.
        amplitudes_vpm: BTreeMap<String, f64>,
        /// Classical field sample per observation point, V/m.
        #[serde(default)]
        observation_amplitudes_vpm: BTreeMap<String, f64>,
        #[serde(default)]
        mode: DriveModeChoice,
    },
    Sampled {
        file: PathBuf,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationPointConfig {
    pub name: String,
    #[serde(default)]
    pub position_nm: Option<[f64; 3]>,
    #[serde(default)]
    pub orientation: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Relative paths are taken from the config file's directory.
    #[serde(default)]
    pub directory: Option<PathBuf>,
    /// Also write `spectra.csv` for propagating scenarios.
    #[serde(default)]
    pub spectra: bool,
}

/// A parsed config plus the directory relative paths refer to.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

/// Reads and parses `path` without semantic validation.
pub fn read(path: &Path) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let config: RunConfig = toml::from_str(&text).map_err(|e| {
        let message = e.message().to_owned();
        let at = match e.span() {
            Some(span) => {
                let line = text[..span.start].matches('\n').count() + 1;
                format!(" (line {line})")
            }
            None => String::new(),
        };
        CliError::Validation(vec![Issue::new("<syntax>", format!("{message}{at}"))])
    })?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedConfig { config, base_dir })
}

/// Parses and validates; every problem found is reported, not only the first.
pub fn parse_and_validate(path: &Path) -> Result<LoadedConfig, CliError> {
    let loaded = read(path)?;
    let issues = validate(&loaded.config);
    if issues.is_empty() {
        Ok(loaded)
    } else {
        Err(CliError::Validation(issues))
    }
}

fn finite_positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

pub fn validate(c: &RunConfig) -> Vec<Issue> {
    let mut issues = Vec::new();
    let mut push = |path: String, msg: String| issues.push(Issue::new(path, msg));

    if c.emitters.is_empty() {
        push("emitters".into(), "at least one emitter is required".into());
    }
    let mut names = HashSet::new();
    for (i, e) in c.emitters.iter().enumerate() {
        let p = format!("emitters[{i}]");
        if e.name.is_empty() {
            push(format!("{p}.name"), "must not be empty".into());
        } else if !names.insert(e.name.as_str()) {
            push(format!("{p}.name"), format!("duplicate emitter name {:?}", e.name));
        }
        if !finite_positive(e.dipole_enm) {
            push(format!("{p}.dipole_enm"), format!("must be > 0 e·nm, got {}", e.dipole_enm));
        }
        if !finite_positive(e.frequency_ev) {
            push(format!("{p}.frequency_ev"), format!("must be > 0 eV, got {}", e.frequency_ev));
        }
    }
    let mut obs_names = HashSet::new();
    for (i, o) in c.observation_points.iter().enumerate() {
        let p = format!("observation_points[{i}].name");
        if o.name.is_empty() {
            push(p, "must not be empty".into());
        } else if !obs_names.insert(o.name.as_str()) {
            push(p, format!("duplicate observation point {:?}", o.name));
        } else if c.emitters.iter().any(|e| e.point_name() == o.name) {
            push(p, format!("{:?} is already an emitter point", o.name));
        }
    }

    match &c.greens {
        GreensConfig::FreeSpace { refractive_index } => {
            if !finite_positive(*refractive_index) {
                push("greens.refractive_index".into(), format!("must be > 0, got {refractive_index}"));
            }
            let located = c
                .emitters
                .iter()
                .enumerate()
                .map(|(i, e)| (format!("emitters[{i}]"), e.position_nm, e.orientation))
                .chain(
                    c.observation_points
                        .iter()
                        .enumerate()
                        .map(|(i, o)| (format!("observation_points[{i}]"), o.position_nm, o.orientation)),
                );
            for (p, pos, orient) in located {
                match pos {
                    None => push(format!("{p}.position_nm"), "required for free-space Green's functions".into()),
                    Some(r) if r.iter().any(|x| !x.is_finite()) => {
                        push(format!("{p}.position_nm"), "must be finite".into())
                    }
                    Some(_) => {}
                }
                match orient {
                    None => push(format!("{p}.orientation"), "required for free-space Green's functions".into()),
                    Some(n) => {
                        let norm = n.iter().map(|x| x * x).sum::<f64>().sqrt();
                        if (norm - 1.0).abs() > 1e-12 || norm.is_nan() {
                            push(format!("{p}.orientation"), format!("must be a unit vector within 1e-12, |n| = {norm}"));
                        }
                    }
                }
            }
            for (i, e) in c.emitters.iter().enumerate() {
                if e.point.is_some() {
                    push(format!("emitters[{i}].point"), "not used with free-space Green's functions".into());
                }
            }
        }
        GreensConfig::Lorentzian { points, terms } => {
            let mut seen = HashSet::new();
            for (k, n) in points.iter().enumerate() {
                if n.is_empty() || !seen.insert(n.as_str()) {
                    push(format!("greens.points[{k}]"), format!("empty or duplicate point name {n:?}"));
                }
            }
            if terms.is_empty() {
                push("greens.terms".into(), "at least one term is required".into());
            }
            let m = points.len();
            for (k, t) in terms.iter().enumerate() {
                let p = format!("greens.terms[{k}]");
                if !finite_positive(t.center_ev) {
                    push(format!("{p}.center_ev"), format!("must be > 0 eV, got {}", t.center_ev));
                }
                if !finite_positive(t.half_width_ev) {
                    push(format!("{p}.half_width_ev"), format!("must be > 0 eV, got {}", t.half_width_ev));
                }
                match (&t.amplitude, &t.weights) {
                    (Some(a), None) => {
                        if a.len() != m || a.iter().any(|r| r.len() != m) {
                            push(format!("{p}.amplitude"), format!("must be a {m}×{m} matrix over greens.points"));
                        } else if (0..m).any(|i| (0..m).any(|j| a[i][j] != a[j][i] || !a[i][j].is_finite())) {
                            push(format!("{p}.amplitude"), "must be finite and symmetric".into());
                        }
                    }
                    (None, Some(w)) => {
                        if w.len() != m || w.iter().any(|x| !x.is_finite()) {
                            push(format!("{p}.weights"), format!("must hold {m} finite values, one per greens.points entry"));
                        }
                    }
                    _ => push(p, "give exactly one of `amplitude` or `weights`".into()),
                }
            }
            for (i, e) in c.emitters.iter().enumerate() {
                if !points.iter().any(|n| n == e.point_name()) {
                    push(format!("emitters[{i}].point"), format!("{:?} is not listed in greens.points", e.point_name()));
                }
            }
            for (i, o) in c.observation_points.iter().enumerate() {
                if !points.contains(&o.name) {
                    push(format!("observation_points[{i}].name"), format!("{:?} is not listed in greens.points", o.name));
                }
            }
        }
        GreensConfig::Tabulated { .. } => {}
    }

    let g = &c.grid;
    if !(g.omega_min_ev > 0.0 && g.omega_min_ev < g.omega_max_ev && g.omega_max_ev.is_finite()) {
        push("grid.omega_min_ev".into(), format!(
            "need 0 < omega_min_ev < omega_max_ev, got [{}, {}]",
            g.omega_min_ev, g.omega_max_ev
        ));
    } else if !c.emitters.iter().any(|e| e.frequency_ev >= g.omega_min_ev && e.frequency_ev <= g.omega_max_ev) {
        push("grid".into(), "window excludes every emitter frequency".into());
    }
    if g.nodes < 2 {
        push("grid.nodes".into(), format!("must be ≥ 2, got {}", g.nodes));
    }
    let eps = c.orthogonalization.rank_threshold;
    if !(eps > 0.0 && eps < 1.0) {
        push("orthogonalization.rank_threshold".into(), format!("must lie in (0, 1), got {eps}"));
    }

    let r = &c.run;
    let propagating = r.scenario != Scenario::Spectra;
    if propagating {
        match r.t_end_fs {
            None => push("run.t_end_fs".into(), "required for propagating scenarios".into()),
            Some(t) if !finite_positive(t) => push("run.t_end_fs".into(), format!("must be > 0 fs, got {t}")),
            Some(_) => {}
        }
        if r.samples == 0 {
            push("run.samples".into(), "must be ≥ 1".into());
        }
        for (k, &t) in r.continuum_times_fs.iter().enumerate() {
            let end = r.t_end_fs.unwrap_or(f64::INFINITY);
            if !(t >= 0.0 && t <= end) {
                push(format!("run.continuum_times_fs[{k}]"), format!("must lie in [0, t_end_fs], got {t}"));
            }
        }
    }
    if let Some(dt) = r.dt_fs {
        if !finite_positive(dt) {
            push("run.dt_fs".into(), format!("must be > 0 fs, got {dt}"));
        }
    }
    match (&r.initial_emitter, r.scenario) {
        (None, Scenario::WignerWeisskopf) => {
            push("run.initial_emitter".into(), "required for the wigner_weisskopf scenario".into())
        }
        (Some(n), _) if !c.emitters.iter().any(|e| e.name == *n) => {
            push("run.initial_emitter".into(), format!("unknown emitter {n:?}"))
        }
        _ => {}
    }

    match (&c.drive, r.scenario) {
        (None, Scenario::Driven) => push("drive".into(), "required for the driven scenario".into()),
        (Some(_), Scenario::Driven) if r.propagator == PropagatorChoice::Eigendecomposition => {
            push("run.propagator".into(), "a driven run requires rk4".into())
        }
        _ => {}
    }
    if let Some(DriveConfig::Gaussian {
        carrier_ev,
        center_fs,
        width_fs,
        phase_rad,
        amplitudes_vpm,
        observation_amplitudes_vpm,
        ..
    }) = &c.drive
    {
        if !(*carrier_ev >= 0.0 && carrier_ev.is_finite()) {
            push("drive.carrier_ev".into(), format!("must be ≥ 0 eV, got {carrier_ev}"));
        }
        if !center_fs.is_finite() {
            push("drive.center_fs".into(), "must be finite".into());
        }
        if !finite_positive(*width_fs) {
            push("drive.width_fs".into(), format!("must be > 0 fs, got {width_fs}"));
        }
        if !phase_rad.is_finite() {
            push("drive.phase_rad".into(), "must be finite".into());
        }
        for (name, a) in amplitudes_vpm {
            let p = format!("drive.amplitudes_vpm.{name}");
            if !c.emitters.iter().any(|e| e.name == *name) {
                push(p, "unknown emitter".into());
            } else if !a.is_finite() {
                push(p, "must be finite".into());
            }
        }
        for (name, a) in observation_amplitudes_vpm {
            let p = format!("drive.observation_amplitudes_vpm.{name}");
            if !c.observation_points.iter().any(|o| o.name == *name) {
                push(p, "unknown observation point".into());
            } else if !a.is_finite() {
                push(p, "must be finite".into());
            }
        }
    }
    issues
}

/// Library objects built from a validated config.
#[derive(Debug, Clone)]
pub struct Built {
    pub provider: GreensProvider,
    pub emitters: EmitterSet,
    /// Provider indices of the observation points, in config order.
    pub observation_points: Vec<usize>,
    pub grid: FrequencyGrid,
    pub orthogonalization: Orthogonalization,
    pub pulse: Option<ClassicalPulse>,
    /// Data files read while building, for the manifest.
    pub inputs: Vec<PathBuf>,
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

/// Maps a file-loading error: I/O failures keep exit code 4, content
/// problems are validation errors on `key`.
fn load_error(key: &str, path: &Path, e: ecmodes::Error) -> CliError {
    match e {
        ecmodes::Error::Io(io) => CliError::io(path, io),
        other => CliError::invalid(key, format!("{}: {other}", path.display())),
    }
}

/// Builds the provider, emitters, grid and pulse, reading any referenced
/// data files.
pub fn build(loaded: &LoadedConfig) -> Result<Built, CliError> {
    let c = &loaded.config;
    let mut inputs = Vec::new();
    let provider = match &c.greens {
        GreensConfig::FreeSpace { refractive_index } => {
            let located = c
                .emitters
                .iter()
                .map(|e| (e.name.as_str(), e.position_nm, e.orientation))
                .chain(c.observation_points.iter().map(|o| (o.name.as_str(), o.position_nm, o.orientation)));
            let points = located
                .map(|(name, r, n)| PointSpec::new(name, r.unwrap_or_default(), n.unwrap_or_default()))
                .collect::<ecmodes::Result<Vec<_>>>()
                .map_err(|e| CliError::invalid("emitters", e.to_string()))?;
            GreensProvider::free_space(points, *refractive_index)
                .map_err(|e| CliError::invalid("greens.refractive_index", e.to_string()))?
        }
        GreensConfig::Lorentzian { points, terms } => {
            let m = points.len();
            let mut built = Vec::with_capacity(terms.len());
            for (k, t) in terms.iter().enumerate() {
                let term = match (&t.amplitude, &t.weights) {
                    (Some(a), _) => LorentzianTerm::new(
                        t.center_ev,
                        t.half_width_ev,
                        DMatrix::from_fn(m, m, |i, j| a[i][j]),
                    ),
                    (None, Some(w)) => LorentzianTerm::rank_one(t.center_ev, t.half_width_ev, w),
                    (None, None) => unreachable!("rejected by validation"),
                };
                built.push(term.map_err(|e| CliError::invalid(format!("greens.terms[{k}]"), e.to_string()))?);
            }
            let model = LorentzianModel::new(points.clone(), built)
                .map_err(|e| CliError::invalid("greens.terms", e.to_string()))?;
            GreensProvider::Lorentzian(model)
        }
        GreensConfig::Tabulated { file, interpolation } => {
            let path = loaded.resolve(file);
            let interpolation = match interpolation {
                InterpolationChoice::Linear => Interpolation::Linear,
                InterpolationChoice::MonotoneCubic => Interpolation::MonotoneCubic,
            };
            let table = TabulatedGreens::load(open(&path)?, interpolation)
                .map_err(|e| load_error("greens.file", &path, e))?;
            for w in table.warnings() {
                log::warn!("{}: {w}", path.display());
            }
            inputs.push(path);
            GreensProvider::Tabulated(table)
        }
    };

    let mut issues = Vec::new();
    let mut emitters = Vec::with_capacity(c.emitters.len());
    for (i, e) in c.emitters.iter().enumerate() {
        match provider.point_index(e.point_name()) {
            Some(p) => emitters.push(Emitter::new(e.name.clone(), p, e.dipole_enm, e.frequency_ev)),
            None => issues.push(Issue::new(
                format!("emitters[{i}].point"),
                format!("Green's function data has no point {:?}", e.point_name()),
            )),
        }
    }
    let mut observation_points = Vec::with_capacity(c.observation_points.len());
    for (i, o) in c.observation_points.iter().enumerate() {
        match provider.point_index(&o.name) {
            Some(p) => observation_points.push(p),
            None => issues.push(Issue::new(
                format!("observation_points[{i}].name"),
                format!("Green's function data has no point {:?}", o.name),
            )),
        }
    }
    if let Some((lo, hi)) = provider.frequency_range() {
        if c.grid.omega_min_ev < lo || c.grid.omega_max_ev > hi {
            issues.push(Issue::new(
                "grid",
                format!(
                    "window [{}, {}] eV exceeds the tabulated range [{lo}, {hi}] eV",
                    c.grid.omega_min_ev, c.grid.omega_max_ev
                ),
            ));
        }
    }
    if !issues.is_empty() {
        return Err(CliError::Validation(issues));
    }
    let emitters = EmitterSet::new(emitters).map_err(|e| CliError::invalid("emitters", e.to_string()))?;

    let scheme = match c.grid.scheme {
        SchemeChoice::Uniform => GridScheme::Uniform,
        SchemeChoice::GaussLegendre => GridScheme::GaussLegendre,
    };
    let grid = FrequencyGrid::build(c.grid.omega_min_ev, c.grid.omega_max_ev, c.grid.nodes, scheme)
        .map_err(|e| CliError::invalid("grid", e.to_string()))?;
    let method = match c.orthogonalization.method {
        MethodChoice::Cholesky => OrthogonalizationMethod::GramSchmidtCholesky,
        MethodChoice::Lowdin => OrthogonalizationMethod::Lowdin,
    };
    let orthogonalization = Orthogonalization::new(method, c.orthogonalization.rank_threshold)
        .map_err(|e| CliError::invalid("orthogonalization.rank_threshold", e.to_string()))?;

    let pulse = match &c.drive {
        None => None,
        Some(DriveConfig::Gaussian { carrier_ev, center_fs, width_fs, phase_rad, amplitudes_vpm, mode, .. }) => {
            let shape = GaussianPulse::new(*carrier_ev, *center_fs, *width_fs, *phase_rad)
                .map_err(|e| CliError::invalid("drive", e.to_string()))?;
            let amplitudes =
                c.emitters.iter().map(|e| amplitudes_vpm.get(&e.name).copied().unwrap_or(0.0)).collect();
            let mode = match mode {
                DriveModeChoice::Auto => DriveMode::Auto,
                DriveModeChoice::Rwa => DriveMode::Rwa,
                DriveModeChoice::FullCarrier => DriveMode::FullCarrier,
            };
            Some(ClassicalPulse::gaussian(shape, amplitudes).with_mode(mode))
        }
        Some(DriveConfig::Sampled { file }) => {
            let path = loaded.resolve(file);
            let raw = SampledField::load(open(&path)?).map_err(|e| load_error("drive.file", &path, e))?;
            let mut values = Vec::with_capacity(c.emitters.len());
            for e in &c.emitters {
                match raw.names.iter().position(|n| *n == e.name) {
                    Some(col) => values.push(raw.values[col].clone()),
                    None => values.push(vec![0.0; raw.times_fs.len()]),
                }
            }
            if let Some(extra) = raw.names.iter().find(|n| !c.emitters.iter().any(|e| e.name == **n)) {
                return Err(CliError::invalid(
                    "drive.file",
                    format!("{}: column e_field_vpm_{extra} names no emitter", path.display()),
                ));
            }
            let names = c.emitters.iter().map(|e| e.name.clone()).collect();
            let field = SampledField::new(names, raw.times_fs, values)
                .map_err(|e| CliError::invalid("drive.file", e.to_string()))?;
            inputs.push(path);
            Some(ClassicalPulse::sampled(field))
        }
    };

    Ok(Built { provider, emitters, observation_points, grid, orthogonalization, pulse, inputs })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[[emitters]]
name = "a"
dipole_enm = 0.1
frequency_ev = 2.0

[greens]
kind = "lorentzian"
points = ["a"]

[[greens.terms]]
center_ev = 2.0
half_width_ev = 0.1
weights = [1.0e6]

[grid]
omega_min_ev = 1.0
omega_max_ev = 3.0
nodes = 10

[run]
scenario = "wigner_weisskopf"
t_end_fs = 10.0
initial_emitter = "a"
"#;

    fn parse(text: &str) -> RunConfig {
        toml::from_str(text).unwrap()
    }

    fn paths(c: &RunConfig) -> Vec<String> {
        validate(c).into_iter().map(|i| i.path).collect()
    }

    #[test]
    fn minimal_config_is_valid_with_defaults() {
        let c = parse(MINIMAL);
        assert!(validate(&c).is_empty());
        assert_eq!(c.orthogonalization.method, MethodChoice::Cholesky);
        assert_eq!(c.orthogonalization.rank_threshold, DEFAULT_RANK_THRESHOLD);
        assert_eq!(c.run.samples, ecmodes::dynamics::DEFAULT_SAMPLES);
        assert_eq!(c.run.propagator, PropagatorChoice::Rk4);
        assert_eq!(c.emitters[0].point_name(), "a");
    }

    #[test]
    fn cross_references_must_resolve() {
        let mut c = parse(MINIMAL);
        c.emitters[0].point = Some("b".into());
        c.run.initial_emitter = Some("z".into());
        let p = paths(&c);
        assert!(p.contains(&"emitters[0].point".to_owned()));
        assert!(p.contains(&"run.initial_emitter".to_owned()));
    }

    #[test]
    fn ranges_are_checked() {
        let mut c = parse(MINIMAL);
        c.emitters[0].frequency_ev = 5.0;
        c.grid.nodes = 1;
        c.orthogonalization.rank_threshold = 1.5;
        c.run.t_end_fs = Some(-1.0);
        c.run.samples = 0;
        let p = paths(&c);
        for want in ["grid", "grid.nodes", "orthogonalization.rank_threshold", "run.t_end_fs", "run.samples"] {
            assert!(p.contains(&want.to_owned()), "{want} missing from {p:?}");
        }
    }

    #[test]
    fn spectra_needs_no_time_axis() {
        let mut c = parse(MINIMAL);
        c.run.scenario = Scenario::Spectra;
        c.run.t_end_fs = None;
        assert!(validate(&c).is_empty());
    }

    #[test]
    fn term_needs_exactly_one_amplitude_form() {
        let mut c = parse(MINIMAL);
        let GreensConfig::Lorentzian { terms, .. } = &mut c.greens else { unreachable!() };
        terms[0].amplitude = Some(vec![vec![1.0]]);
        assert_eq!(paths(&c), ["greens.terms[0]"]);
        let GreensConfig::Lorentzian { terms, .. } = &mut c.greens else { unreachable!() };
        terms[0].weights = None;
        terms[0].amplitude = Some(vec![vec![1.0, 2.0]]);
        assert_eq!(paths(&c), ["greens.terms[0].amplitude"]);
    }

    #[test]
    fn driven_scenario_requires_a_drive() {
        let mut c = parse(MINIMAL);
        c.run.scenario = Scenario::Driven;
        c.run.initial_emitter = None;
        assert_eq!(paths(&c), ["drive"]);
    }

    #[test]
    fn free_space_requires_geometry() {
        let text = MINIMAL.replace(
            "kind = \"lorentzian\"\npoints = [\"a\"]\n\n[[greens.terms]]\ncenter_ev = 2.0\nhalf_width_ev = 0.1\nweights = [1.0e6]",
            "kind = \"free_space\"",
        );
        let c = parse(&text);
        assert_eq!(paths(&c), ["emitters[0].position_nm", "emitters[0].orientation"]);
    }

    #[test]
    fn build_maps_names_to_points() {
        let loaded = LoadedConfig { config: parse(MINIMAL), base_dir: PathBuf::new() };
        let built = build(&loaded).unwrap();
        assert_eq!(built.emitters[0].point, 0);
        assert_eq!(built.grid.len(), 10);
        assert!(built.pulse.is_none());
    }
}
