use num_complex::Complex64;

use super::DiscretizedSystem;
use crate::error::{Error, Result};

/// Amplitudes over the single-excitation basis of a [`DiscretizedSystem`],
/// optionally augmented with the global ground state (needed only when a
/// classical drive can remove or add the excitation).
#[derive(Debug, Clone, PartialEq)]
pub struct SingleExcitationState {
    /// Emitters first, then mode slots in system order.
    pub amplitudes: Vec<Complex64>,
    pub ground: Option<Complex64>,
    pub time_fs: f64,
}

impl SingleExcitationState {
    pub fn zeros(system: &DiscretizedSystem) -> Self {
        Self { amplitudes: vec![Complex64::default(); system.dimension()], ground: None, time_fs: 0.0 }
    }

    /// `σ_i⁺|0⟩`: emitter `index` excited, everything else empty.
    pub fn excited(system: &DiscretizedSystem, index: usize) -> Result<Self> {
        if index >= system.emitter_count() {
            return Err(Error::Invalid(format!(
                "emitter index {index} out of range (N = {})",
                system.emitter_count()
            )));
        }
        let mut s = Self::zeros(system);
        s.amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// Normalized superposition `Σ_i a_i σ_i⁺|0⟩` of emitter excitations.
    pub fn emitter_superposition(system: &DiscretizedSystem, weights: &[Complex64]) -> Result<Self> {
        if weights.len() != system.emitter_count() {
            return Err(Error::Invalid("one weight per emitter is required".into()));
        }
        let norm = weights.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Invalid("superposition weights are all zero".into()));
        }
        let mut s = Self::zeros(system);
        for (a, w) in s.amplitudes.iter_mut().zip(weights) {
            *a = w / norm;
        }
        Ok(s)
    }

    /// The global ground state (requires the ground slot).
    pub fn ground_state(system: &DiscretizedSystem) -> Self {
        let mut s = Self::zeros(system);
        s.ground = Some(Complex64::new(1.0, 0.0));
        s
    }

    pub fn with_ground_slot(mut self) -> Self {
        self.ground.get_or_insert(Complex64::default());
        self
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>()
            + self.ground.map_or(0.0, |g| g.norm_sqr())
    }

    pub fn emitter_population(&self, i: usize) -> f64 {
        self.amplitudes[i].norm_sqr()
    }
}
