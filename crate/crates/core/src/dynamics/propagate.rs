use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::{DiscretizedSystem, FieldProbe, SingleExcitationState};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::units;

/// Largest dimension accepted by the dense eigendecomposition propagator.
pub const MAX_EIGEN_DIMENSION: usize = 20_000;
/// A run aborts when `|‖c‖² − ‖c₀‖²|` exceeds this.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;
pub const DEFAULT_SAMPLES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Propagator {
    #[default]
    Rk4,
    /// Exact propagation through a dense eigendecomposition of H.
    Eigendecomposition,
}

#[derive(Debug, Clone)]
pub struct PropagationOptions {
    /// Absolute end time in fs.
    pub t_end_fs: f64,
    /// RK4 step; `None` picks [`DiscretizedSystem::default_dt`].
    pub dt_fs: Option<f64>,
    pub propagator: Propagator,
    /// Number of equal intervals between observable samples.
    pub samples: usize,
    /// Times (fs) at which the full state is stored.
    pub snapshot_times_fs: Vec<f64>,
    pub probes: Vec<FieldProbe>,
    pub execution: Execution,
}

impl PropagationOptions {
    pub fn new(t_end_fs: f64) -> Self {
        Self {
            t_end_fs,
            dt_fs: None,
            propagator: Propagator::Rk4,
            samples: DEFAULT_SAMPLES,
            snapshot_times_fs: Vec::new(),
            probes: Vec::new(),
            execution: Execution::default(),
        }
    }

    pub fn dt(mut self, dt_fs: f64) -> Self {
        self.dt_fs = Some(dt_fs);
        self
    }

    pub fn propagator(mut self, propagator: Propagator) -> Self {
        self.propagator = propagator;
        self
    }

    pub fn samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn snapshots(mut self, times_fs: Vec<f64>) -> Self {
        self.snapshot_times_fs = times_fs;
        self
    }

    pub fn probes(mut self, probes: Vec<FieldProbe>) -> Self {
        self.probes = probes;
        self
    }
}

/// Frame in which mode amplitudes are reported. Under a classical drive the
/// field is split off by a displacement, and field-mode observables refer to
/// the displaced frame: `⟨a⟩ = ⟨a'⟩ + α(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Lab,
    Displaced,
}

#[derive(Debug, Clone)]
pub struct ObservableSeries {
    pub times_fs: Vec<f64>,
    /// `populations[i][sample]`.
    pub populations: Vec<Vec<f64>>,
    pub norms: Vec<f64>,
    /// Ground-slot population, present for driven runs.
    pub ground_population: Option<Vec<f64>>,
    /// `fields[probe][sample]`, `E⁺·n_p` in V/m.
    pub fields: Vec<Vec<Complex64>>,
    pub snapshots: Vec<SingleExcitationState>,
    pub final_state: SingleExcitationState,
    pub frame: Frame,
    pub dt_fs: f64,
    pub steps: usize,
}

impl ObservableSeries {
    /// Largest `|‖c(t)‖² − ‖c(t₀)‖²|` over the samples.
    pub fn max_norm_drift(&self) -> f64 {
        let n0 = self.norms[0];
        self.norms.iter().map(|n| (n - n0).abs()).fold(0.0, f64::max)
    }

    pub fn intensities(&self, probe: usize) -> Vec<f64> {
        self.fields[probe].iter().map(|e| e.norm_sqr()).collect()
    }
}

/// Time-dependent coupling between the ground slot and each emitter:
/// `H[i, ground](t)` in eV, laboratory frame.
pub(crate) trait EmitterDrive: Sync {
    fn couplings(&self, t_fs: f64, out: &mut [Complex64]);
}

/// Propagates `state` under the undriven Hamiltonian.
pub fn propagate(
    system: &DiscretizedSystem,
    state: &SingleExcitationState,
    options: &PropagationOptions,
) -> Result<ObservableSeries> {
    run(system, state, options, None)
}

struct Stops {
    times: Vec<f64>,
    is_sample: Vec<bool>,
    snapshot: Vec<bool>,
}

fn stop_times(t0: f64, options: &PropagationOptions) -> Result<Stops> {
    let t_end = options.t_end_fs;
    if !(t_end > t0) || !t_end.is_finite() {
        return Err(Error::Invalid(format!("t_end ({t_end} fs) must exceed the start time ({t0} fs)")));
    }
    if options.samples == 0 {
        return Err(Error::Invalid("at least one sample interval is required".into()));
    }
    let mut entries: Vec<(f64, bool, bool)> = (0..=options.samples)
        .map(|m| {
            let t = if m == options.samples {
                t_end
            } else {
                t0 + (t_end - t0) * m as f64 / options.samples as f64
            };
            (t, true, false)
        })
        .collect();
    for &t in &options.snapshot_times_fs {
        if !(t >= t0 && t <= t_end) {
            return Err(Error::Invalid(format!(
                "snapshot time {t} fs lies outside [{t0}, {t_end}] fs"
            )));
        }
        match entries.iter_mut().find(|e| e.0 == t) {
            Some(e) => e.2 = true,
            None => entries.push((t, false, true)),
        }
    }
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(Stops {
        times: entries.iter().map(|e| e.0).collect(),
        is_sample: entries.iter().map(|e| e.1).collect(),
        snapshot: entries.iter().map(|e| e.2).collect(),
    })
}

struct Recorder<'a> {
    system: &'a DiscretizedSystem,
    probes: &'a [FieldProbe],
    series: ObservableSeries,
    driven: bool,
}

impl<'a> Recorder<'a> {
    fn new(system: &'a DiscretizedSystem, options: &'a PropagationOptions, initial: &SingleExcitationState, driven: bool) -> Self {
        let n = system.emitter_count();
        Self {
            system,
            probes: &options.probes,
            series: ObservableSeries {
                times_fs: Vec::new(),
                populations: vec![Vec::new(); n],
                norms: Vec::new(),
                ground_population: driven.then(Vec::new),
                fields: vec![Vec::new(); options.probes.len()],
                snapshots: Vec::new(),
                final_state: initial.clone(),
                frame: if driven { Frame::Displaced } else { Frame::Lab },
                dt_fs: 0.0,
                steps: 0,
            },
            driven,
        }
    }

    /// `y` holds amplitudes in a frame rotating at `shift` for the excited
    /// slots; the ground slot (if any) is last and not rotated.
    fn record(&mut self, t: f64, y: &[Complex64], shift: f64, sample: bool, snapshot: bool) {
        let d = self.system.dimension();
        if sample {
            let s = &mut self.series;
            s.times_fs.push(t);
            for (i, p) in s.populations.iter_mut().enumerate() {
                p.push(y[i].norm_sqr());
            }
            s.norms.push(y.iter().map(|a| a.norm_sqr()).sum());
            if let Some(g) = s.ground_population.as_mut() {
                g.push(y[d].norm_sqr());
            }
            let phase = lab_phase(t, shift);
            for (probe, out) in self.probes.iter().zip(s.fields.iter_mut()) {
                out.push(probe.quantum_field(&y[..d]) * phase + probe.classical_field(t));
            }
        }
        if snapshot {
            let state = lab_state(d, self.driven, t, y, shift);
            self.series.snapshots.push(state);
        }
    }

}

/// Converts rotating-frame amplitudes back to the laboratory frame.
fn lab_state(d: usize, driven: bool, t: f64, y: &[Complex64], shift: f64) -> SingleExcitationState {
    let phase = lab_phase(t, shift);
    SingleExcitationState {
        amplitudes: y[..d].iter().map(|a| a * phase).collect(),
        ground: driven.then(|| y[d]),
        time_fs: t,
    }
}

fn lab_phase(t: f64, shift: f64) -> Complex64 {
    Complex64::from_polar(1.0, -units::rate_per_fs(shift) * t)
}

pub(crate) fn run(
    system: &DiscretizedSystem,
    state: &SingleExcitationState,
    options: &PropagationOptions,
    drive: Option<&dyn EmitterDrive>,
) -> Result<ObservableSeries> {
    let d = system.dimension();
    if state.amplitudes.len() != d {
        return Err(Error::Invalid(format!(
            "state has {} amplitudes, system dimension is {d}",
            state.amplitudes.len()
        )));
    }
    let stops = stop_times(state.time_fs, options)?;
    let driven = drive.is_some();
    match options.propagator {
        Propagator::Rk4 => rk4(system, state, options, &stops, drive),
        Propagator::Eigendecomposition => {
            if driven {
                return Err(Error::Invalid(
                    "eigendecomposition cannot propagate a time-dependent drive; use RK4".into(),
                ));
            }
            if d > MAX_EIGEN_DIMENSION {
                return Err(Error::Invalid(format!(
                    "dimension {d} exceeds the eigendecomposition limit {MAX_EIGEN_DIMENSION}"
                )));
            }
            eigen(system, state, options, &stops)
        }
    }
}

fn rk4(
    system: &DiscretizedSystem,
    state: &SingleExcitationState,
    options: &PropagationOptions,
    stops: &Stops,
    drive: Option<&dyn EmitterDrive>,
) -> Result<ObservableSeries> {
    let d = system.dimension();
    let n = system.emitter_count();
    let dt = options.dt_fs.unwrap_or_else(|| system.default_dt());
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Invalid(format!("dt must be positive, got {dt}")));
    }
    // Rotating frame at the mean emitter frequency; populations are unchanged.
    let shift = system.emitters().iter().map(|e| e.frequency).sum::<f64>() / n as f64;
    let t0 = state.time_fs;
    let driven = drive.is_some();
    let len = if driven { d + 1 } else { d };

    let mut y: Vec<Complex64> = Vec::with_capacity(len);
    let phase0 = lab_phase(t0, shift).conj();
    y.extend(state.amplitudes.iter().map(|a| a * phase0));
    if driven {
        y.push(state.ground.unwrap_or_default());
    }
    let norm0: f64 = y.iter().map(|a| a.norm_sqr()).sum();

    let mut rec = Recorder::new(system, options, state, driven);
    let mut k1 = vec![Complex64::default(); len];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();
    let mut drive_buf = vec![Complex64::default(); n];
    let minus_i = Complex64::new(0.0, -1.0);
    let to_rate = 1.0 / units::HBAR_EV_FS;

    let deriv = |t: f64, y: &[Complex64], out: &mut [Complex64], buf: &mut [Complex64]| {
        system.apply(&y[..d], &mut out[..d], shift, options.execution);
        if let Some(drive) = drive {
            drive.couplings(t, buf);
            let rot = Complex64::from_polar(1.0, units::rate_per_fs(shift) * t);
            let g = y[d];
            let mut acc = Complex64::default();
            for i in 0..n {
                let h = buf[i] * rot;
                out[i] += h * g;
                acc += h.conj() * y[i];
            }
            out[d] = acc;
        }
        let f = minus_i * to_rate;
        for o in out.iter_mut() {
            *o *= f;
        }
    };

    let mut t = t0;
    let mut steps = 0usize;
    let mut h_used: f64 = 0.0;
    rec.record(t, &y, shift, stops.is_sample[0], stops.snapshot[0]);
    for (idx, &target) in stops.times.iter().enumerate().skip(1) {
        let span = target - t;
        if span > 0.0 {
            let nsteps = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
            let h = span / nsteps as f64;
            h_used = h_used.max(h);
            for step in 0..nsteps {
                let ts = t + h * step as f64;
                deriv(ts, &y, &mut k1, &mut drive_buf);
                for j in 0..len {
                    tmp[j] = y[j] + k1[j] * (0.5 * h);
                }
                deriv(ts + 0.5 * h, &tmp, &mut k2, &mut drive_buf);
                for j in 0..len {
                    tmp[j] = y[j] + k2[j] * (0.5 * h);
                }
                deriv(ts + 0.5 * h, &tmp, &mut k3, &mut drive_buf);
                for j in 0..len {
                    tmp[j] = y[j] + k3[j] * h;
                }
                deriv(ts + h, &tmp, &mut k4, &mut drive_buf);
                let h6 = h / 6.0;
                for j in 0..len {
                    y[j] += (k1[j] + (k2[j] + k3[j]) * 2.0 + k4[j]) * h6;
                }
            }
            steps += nsteps;
        }
        t = target;
        let norm: f64 = y.iter().map(|a| a.norm_sqr()).sum();
        let drift = (norm - norm0).abs();
        if drift > NORM_DRIFT_LIMIT {
            return Err(Error::StepSize { drift, limit: NORM_DRIFT_LIMIT, time_fs: t });
        }
        rec.record(t, &y, shift, stops.is_sample[idx], stops.snapshot[idx]);
    }
    let mut series = rec.series;
    series.final_state = lab_state(d, driven, t, &y, shift);
    series.dt_fs = h_used;
    series.steps = steps;
    Ok(series)
}

fn eigen(
    system: &DiscretizedSystem,
    state: &SingleExcitationState,
    options: &PropagationOptions,
    stops: &Stops,
) -> Result<ObservableSeries> {
    let d = system.dimension();
    let eig = SymmetricEigen::new(system.hamiltonian_dense());
    let u: &DMatrix<f64> = &eig.eigenvectors;
    let re = DVector::from_iterator(d, state.amplitudes.iter().map(|a| a.re));
    let im = DVector::from_iterator(d, state.amplitudes.iter().map(|a| a.im));
    let proj_re = u.tr_mul(&re);
    let proj_im = u.tr_mul(&im);
    let t0 = state.time_fs;
    let mut rec = Recorder::new(system, options, state, false);
    let mut last = state.clone();
    for (idx, &t) in stops.times.iter().enumerate() {
        let tau = units::rate_per_fs(1.0) * (t - t0);
        // c(t) = U e^{-iΛτ} Uᵀ c0
        let mut rot_re = DVector::zeros(d);
        let mut rot_im = DVector::zeros(d);
        for k in 0..d {
            let (s, c) = (eig.eigenvalues[k] * tau).sin_cos();
            let a = Complex64::new(proj_re[k], proj_im[k]) * Complex64::new(c, -s);
            rot_re[k] = a.re;
            rot_im[k] = a.im;
        }
        let c_re = u * rot_re;
        let c_im = u * rot_im;
        let y: Vec<Complex64> = (0..d).map(|k| Complex64::new(c_re[k], c_im[k])).collect();
        rec.record(t, &y, 0.0, stops.is_sample[idx], stops.snapshot[idx]);
        last = SingleExcitationState { amplitudes: y, ground: None, time_fs: t };
    }
    let mut series = rec.series;
    let drift = series.max_norm_drift();
    if drift > NORM_DRIFT_LIMIT {
        return Err(Error::StepSize { drift, limit: NORM_DRIFT_LIMIT, time_fs: options.t_end_fs });
    }
    series.final_state = last;
    Ok(series)
}
