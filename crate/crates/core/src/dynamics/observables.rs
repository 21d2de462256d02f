use num_complex::Complex64;

use super::{DiscretizedSystem, SingleExcitationState};
use crate::drive::GaussianPulse;
use crate::error::{Error, Result};
use crate::greens::GreensProvider;
use crate::units;

/// `⟨C_j†(ω_k) C_j(ω_k)⟩` per unit frequency on the grid nodes, 1/eV.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumDensity {
    pub omegas: Vec<f64>,
    /// `density[j][k]`; zero where continuum `j` was dropped at node `k`.
    pub density: Vec<Vec<f64>>,
}

impl ContinuumDensity {
    /// Sum over continua at each node. Unlike the per-continuum values this
    /// does not depend on the orthogonalization choice.
    pub fn total(&self) -> Vec<f64> {
        (0..self.omegas.len()).map(|k| self.density.iter().map(|d| d[k]).sum()).collect()
    }
}

/// Continuum population densities `|c_{j,k}|² / Δ_k`.
pub fn continuum_population_density(
    state: &SingleExcitationState,
    system: &DiscretizedSystem,
) -> ContinuumDensity {
    let nodes = system.grid().nodes();
    let weights = system.grid().weights();
    let mut density = vec![vec![0.0; nodes.len()]; system.max_rank()];
    for k in 0..nodes.len() {
        for (j, slot) in system.node_slots(k).enumerate() {
            density[j][k] = state.amplitudes[slot].norm_sqr() / weights[k];
        }
    }
    ContinuumDensity { omegas: nodes.to_vec(), density }
}

/// Linear map from the state to the positive-frequency field `E⁺·n_p`
/// (V/m) at an observation point.
///
/// For the mode slot of continuum `i` at node `k` the coefficient is
/// `sqrt(Δ_k) Σ_j V_ij(ω_k) 𝓔_j(r_p, ω_k)` with
/// `𝓔_j(r, ω) = ħω²/(πε₀c²) · n_p·Im G(r, r_j, ω)·n_j / G_j(ω)`.
#[derive(Debug, Clone)]
pub struct FieldProbe {
    pub point: usize,
    pub name: String,
    coefficients: Vec<f64>,
    classical: Option<(GaussianPulse, f64)>,
}

impl FieldProbe {
    pub fn new(system: &DiscretizedSystem, provider: &GreensProvider, point: usize) -> Result<Self> {
        let count = provider.point_count();
        if point >= count {
            return Err(Error::UnknownPoint { index: point, count });
        }
        let name = provider.point_name(point).unwrap_or_default().to_owned();
        let emitters = system.emitters();
        for e in emitters.iter() {
            if !provider.has_pair(point, e.point) {
                return Err(Error::Invalid(format!(
                    "no Green's function data between observation point {name} and emitter {}",
                    e.name
                )));
            }
        }
        let n = system.emitter_count();
        let mut coefficients = vec![0.0; system.dimension()];
        for (k, basis) in system.bases().iter().enumerate() {
            if basis.rank == 0 {
                continue;
            }
            let omega = basis.omega;
            let scale = units::FIELD_PER_COUPLING * units::coupling_prefactor(omega);
            let mut mode_fields = vec![0.0; n];
            for (j, e) in emitters.iter().enumerate() {
                if basis.active[j] {
                    let img = provider.projected_im_g(point, e.point, omega)?;
                    mode_fields[j] = scale * img / basis.couplings[j];
                }
            }
            let root = system.grid().weights()[k].sqrt();
            for (i, slot) in system.node_slots(k).enumerate() {
                let e_i: f64 = (0..n).map(|j| basis.v[(i, j)] * mode_fields[j]).sum();
                coefficients[slot] = root * e_i;
            }
        }
        Ok(Self { point, name, coefficients, classical: None })
    }

    /// Adds a classical field sample at the probe point: its positive-
    /// frequency part is added to the quantum `E⁺` before squaring.
    pub fn with_classical(mut self, pulse: GaussianPulse, amplitude_vpm: f64) -> Self {
        self.classical = Some((pulse, amplitude_vpm));
        self
    }

    /// Coefficient of every basis slot (zero on emitters).
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `E⁺·n_p` in V/m. Amplitudes must be in the laboratory frame.
    pub fn field(&self, state: &SingleExcitationState) -> Complex64 {
        self.quantum_field(&state.amplitudes) + self.classical_field(state.time_fs)
    }

    pub(crate) fn quantum_field(&self, amplitudes: &[Complex64]) -> Complex64 {
        self.coefficients.iter().zip(amplitudes).map(|(c, a)| a * c).sum()
    }

    pub(crate) fn classical_field(&self, time_fs: f64) -> Complex64 {
        match &self.classical {
            Some((pulse, amp)) => pulse.positive_frequency(time_fs, *amp),
            None => Complex64::default(),
        }
    }
}

/// `E⁺·n_p` at the probe point for `state`.
pub fn reconstruct_field(state: &SingleExcitationState, probe: &FieldProbe) -> Complex64 {
    probe.field(state)
}

/// Least-squares slope of `−ln P(t)` over samples with `t` in
/// `[t_from, t_to]`, converted to an energy (eV): the fitted `Γ` of
/// `P ∝ e^{−Γt/ħ}`.
pub fn fitted_decay_rate(times_fs: &[f64], populations: &[f64], t_from: f64, t_to: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = times_fs
        .iter()
        .zip(populations)
        .filter(|(t, p)| **t >= t_from && **t <= t_to && **p > 0.0)
        .map(|(&t, &p)| (t, p.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    (sxx > 0.0).then(|| units::energy_from_rate(-sxy / sxx))
}
