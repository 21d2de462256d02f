//! Classical driving of the emitters.
//!
//! An incoming coherent pulse is removed from the quantized field by a
//! time-dependent displacement. What remains is a classical field
//! `E_cl,i(t)` acting on each emitter, taken at the emitter position after
//! propagation through the structure, so it is an input here. Mode
//! observables computed from a driven run refer to the displaced frame
//! ([`Frame::Displaced`]); the classical part of the field at an observation
//! point is restored by [`FieldProbe::with_classical`](crate::dynamics::FieldProbe::with_classical),
//! which adds its positive-frequency sample to `E⁺` before squaring.
//!
//! The ground state `|0⟩` enters as one extra basis slot and couples to
//! emitter `i` through `⟨e_i|H|0⟩ = −μ_i E_cl,i(t)`. Under the rotating-wave
//! approximation only the positive-frequency part `E⁺` is kept.

use std::f64::consts::PI;
use std::io::BufRead;

use num_complex::Complex64;

use crate::dynamics::{self, DiscretizedSystem, EmitterDrive, ObservableSeries, PropagationOptions, Propagator, SingleExcitationState};
use crate::error::{Error, Result};
use crate::modes::EmitterSet;
use crate::units;

pub use crate::dynamics::Frame;

/// Carrier must exceed this multiple of the envelope bandwidth `ħ/σ` for
/// [`DriveMode::Auto`] to select the rotating-wave form.
pub const RWA_CARRIER_RATIO: f64 = 10.0;

/// `E(t) = A · exp(−(t − t_c)²/(2σ²)) · cos(ω_L (t − t_c)/ħ + φ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPulse {
    pub carrier_ev: f64,
    pub center_fs: f64,
    /// Standard deviation σ of the field envelope.
    pub width_fs: f64,
    pub phase: f64,
}

impl GaussianPulse {
    pub fn new(carrier_ev: f64, center_fs: f64, width_fs: f64, phase: f64) -> Result<Self> {
        if !(width_fs > 0.0 && width_fs.is_finite()) {
            return Err(Error::Invalid(format!("pulse width must be positive, got {width_fs} fs")));
        }
        if !(carrier_ev >= 0.0 && carrier_ev.is_finite()) || !center_fs.is_finite() || !phase.is_finite() {
            return Err(Error::Invalid("pulse carrier, center and phase must be finite (carrier ≥ 0)".into()));
        }
        Ok(Self { carrier_ev, center_fs, width_fs, phase })
    }

    pub fn envelope(&self, t_fs: f64) -> f64 {
        let x = (t_fs - self.center_fs) / self.width_fs;
        (-0.5 * x * x).exp()
    }

    fn phase_at(&self, t_fs: f64) -> f64 {
        units::rate_per_fs(self.carrier_ev) * (t_fs - self.center_fs) + self.phase
    }

    /// Real field for peak amplitude `amplitude`.
    pub fn field(&self, t_fs: f64, amplitude: f64) -> f64 {
        amplitude * self.envelope(t_fs) * self.phase_at(t_fs).cos()
    }

    /// Positive-frequency part `(A/2)·env·e^{−i(ω_L (t − t_c)/ħ + φ)}`.
    pub fn positive_frequency(&self, t_fs: f64, amplitude: f64) -> Complex64 {
        Complex64::from_polar(0.5 * amplitude * self.envelope(t_fs), -self.phase_at(t_fs))
    }

    /// Envelope bandwidth `ħ/σ` in eV.
    pub fn bandwidth_ev(&self) -> f64 {
        units::HBAR_EV_FS / self.width_fs
    }

    /// Peak amplitude (V/m) whose resonant rotating-wave pulse area
    /// `∫ μ E_env(t) dt / ħ` equals `area` for dipole `dipole` (e·nm).
    pub fn amplitude_for_area(&self, area: f64, dipole: f64) -> f64 {
        area * units::HBAR_EV_FS / (units::dipole_energy(dipole, 1.0) * self.width_fs * (2.0 * PI).sqrt())
    }
}

/// Real field samples `E_cl,i(t)` per emitter on a common time axis;
/// linear in between and zero outside the sampled interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub names: Vec<String>,
    pub times_fs: Vec<f64>,
    /// `values[i][m]` in V/m.
    pub values: Vec<Vec<f64>>,
}

impl SampledField {
    pub fn new(names: Vec<String>, times_fs: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if times_fs.len() < 2 {
            return Err(Error::Invalid("a sampled pulse needs at least two time points".into()));
        }
        if times_fs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("pulse sample times must increase strictly".into()));
        }
        if values.len() != names.len() || values.iter().any(|v| v.len() != times_fs.len()) {
            return Err(Error::Invalid("one sample column per name, each as long as the time axis".into()));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("pulse samples must be finite".into()));
        }
        Ok(Self { names, times_fs, values })
    }

    /// Reads `t_fs,e_field_vpm_<name>,...`; `#` starts a comment line.
    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let mut names: Option<Vec<String>> = None;
        let mut times = Vec::new();
        let mut values: Vec<Vec<f64>> = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            let Some(cols) = names.as_ref() else {
                if fields[0] != "t_fs" {
                    return Err(Error::Parse { line: lineno, message: "header must start with t_fs".into() });
                }
                let mut parsed = Vec::new();
                for f in &fields[1..] {
                    match f.strip_prefix("e_field_vpm_") {
                        Some(n) if !n.is_empty() => parsed.push(n.to_owned()),
                        _ => {
                            return Err(Error::Parse {
                                line: lineno,
                                message: format!("column `{f}` is not of the form e_field_vpm_<name>"),
                            })
                        }
                    }
                }
                if parsed.is_empty() {
                    return Err(Error::Parse { line: lineno, message: "no field columns".into() });
                }
                values = vec![Vec::new(); parsed.len()];
                names = Some(parsed);
                continue;
            };
            if fields.len() != cols.len() + 1 {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected {} fields, found {}", cols.len() + 1, fields.len()),
                });
            }
            let mut row = Vec::with_capacity(fields.len());
            for f in &fields {
                let v: f64 = f.parse().map_err(|_| Error::Parse { line: lineno, message: format!("`{f}` is not a number") })?;
                if !v.is_finite() {
                    return Err(Error::Parse { line: lineno, message: format!("non-finite value `{f}`") });
                }
                row.push(v);
            }
            if let Some(&last) = times.last() {
                if !(row[0] > last) {
                    return Err(Error::Parse { line: lineno, message: "t_fs must increase strictly".into() });
                }
            }
            times.push(row[0]);
            for (col, v) in values.iter_mut().zip(&row[1..]) {
                col.push(*v);
            }
        }
        let names = names.ok_or(Error::Parse { line: 0, message: "missing header".into() })?;
        Self::new(names, times, values)
    }

    pub fn field(&self, column: usize, t_fs: f64) -> f64 {
        let t = &self.times_fs;
        if t_fs < t[0] || t_fs > t[t.len() - 1] {
            return 0.0;
        }
        let k = t.partition_point(|&x| x <= t_fs).clamp(1, t.len() - 1);
        let v = &self.values[column];
        let s = (t_fs - t[k - 1]) / (t[k] - t[k - 1]);
        v[k - 1] + s * (v[k] - v[k - 1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriveMode {
    /// Rotating-wave form when the carrier exceeds
    /// [`RWA_CARRIER_RATIO`] times the envelope bandwidth, full carrier
    /// otherwise.
    #[default]
    Auto,
    Rwa,
    FullCarrier,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PulseShape {
    /// Same envelope and carrier at every emitter, per-emitter peak
    /// amplitude in V/m.
    Gaussian { pulse: GaussianPulse, amplitudes: Vec<f64> },
    /// Arbitrary real field per emitter. Always coupled with the full
    /// field; columns follow emitter order.
    Sampled(SampledField),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalPulse {
    pub shape: PulseShape,
    pub mode: DriveMode,
}

impl ClassicalPulse {
    pub fn gaussian(pulse: GaussianPulse, amplitudes: Vec<f64>) -> Self {
        Self { shape: PulseShape::Gaussian { pulse, amplitudes }, mode: DriveMode::Auto }
    }

    pub fn sampled(field: SampledField) -> Self {
        Self { shape: PulseShape::Sampled(field), mode: DriveMode::FullCarrier }
    }

    pub fn with_mode(mut self, mode: DriveMode) -> Self {
        self.mode = mode;
        self
    }

    /// Whether the rotating-wave form is in effect.
    pub fn uses_rwa(&self) -> bool {
        match (&self.shape, self.mode) {
            (PulseShape::Sampled(_), _) => false,
            (_, DriveMode::Rwa) => true,
            (_, DriveMode::FullCarrier) => false,
            (PulseShape::Gaussian { pulse, .. }, DriveMode::Auto) => {
                pulse.carrier_ev > RWA_CARRIER_RATIO * pulse.bandwidth_ev()
            }
        }
    }

    fn check(&self, emitters: &EmitterSet) -> Result<()> {
        let n = match &self.shape {
            PulseShape::Gaussian { amplitudes, .. } => {
                if amplitudes.iter().any(|a| !a.is_finite()) {
                    return Err(Error::Invalid("pulse amplitudes must be finite".into()));
                }
                amplitudes.len()
            }
            PulseShape::Sampled(s) => {
                if self.mode == DriveMode::Rwa {
                    return Err(Error::Invalid("sampled pulses are real fields; the rotating-wave form needs a parametric carrier".into()));
                }
                s.values.len()
            }
        };
        if n != emitters.len() {
            return Err(Error::Invalid(format!("pulse defines {n} emitter fields, system has {} emitters", emitters.len())));
        }
        Ok(())
    }
}

/// `⟨e_i|H|0⟩(t)` in eV for every emitter.
pub fn drive_term(pulse: &ClassicalPulse, emitters: &EmitterSet, t_fs: f64) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); emitters.len()];
    Evaluator { pulse, emitters, rwa: pulse.uses_rwa() }.couplings(t_fs, &mut out);
    out
}

struct Evaluator<'a> {
    pulse: &'a ClassicalPulse,
    emitters: &'a EmitterSet,
    rwa: bool,
}

impl EmitterDrive for Evaluator<'_> {
    fn couplings(&self, t_fs: f64, out: &mut [Complex64]) {
        match &self.pulse.shape {
            PulseShape::Gaussian { pulse, amplitudes } => {
                for ((o, e), &a) in out.iter_mut().zip(self.emitters.iter()).zip(amplitudes) {
                    let field = if self.rwa {
                        pulse.positive_frequency(t_fs, a)
                    } else {
                        Complex64::new(pulse.field(t_fs, a), 0.0)
                    };
                    *o = -field * units::dipole_energy(e.dipole, 1.0);
                }
            }
            PulseShape::Sampled(s) => {
                for (i, (o, e)) in out.iter_mut().zip(self.emitters.iter()).enumerate() {
                    *o = Complex64::new(-units::dipole_energy(e.dipole, s.field(i, t_fs)), 0.0);
                }
            }
        }
    }
}

/// Propagates `state` under the undriven Hamiltonian plus the classical
/// drive. A missing ground slot is added with zero amplitude. Only RK4 is
/// accepted.
pub fn propagate_driven(
    system: &DiscretizedSystem,
    pulse: &ClassicalPulse,
    state: &SingleExcitationState,
    options: &PropagationOptions,
) -> Result<ObservableSeries> {
    if options.propagator != Propagator::Rk4 {
        return Err(Error::Invalid("a time-dependent drive requires the RK4 propagator".into()));
    }
    pulse.check(system.emitters())?;
    let state = state.clone().with_ground_slot();
    let eval = Evaluator { pulse, emitters: system.emitters(), rwa: pulse.uses_rwa() };
    dynamics::run(system, &state, options, Some(&eval))
}
