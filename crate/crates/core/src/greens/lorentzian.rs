use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// One resonance of a parametric Green's function model.
///
/// The projected imaginary part contributed by the term is
///
/// ```text
/// Im G_ab(ω) = A_ab · (ω₀/ω)² · κ² / ((ω − ω₀)² + κ²)
/// ```
///
/// The `(ω₀/ω)²` factor cancels the `ω²` in the spectral density, so that
/// `J(ω)` of an emitter coupled to a single term is an exact Lorentzian of
/// half-width `κ`. At `ω = ω₀` the value is `A_ab`.
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzianTerm {
    pub center: f64,
    pub half_width: f64,
    pub amplitude: DMatrix<f64>,
}

impl LorentzianTerm {
    pub fn new(center: f64, half_width: f64, amplitude: DMatrix<f64>) -> Result<Self> {
        if !(center > 0.0 && center.is_finite()) {
            return Err(Error::Invalid(format!("resonance center must be > 0, got {center}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Invalid(format!("half-width must be > 0, got {half_width}")));
        }
        if !amplitude.is_square() {
            return Err(Error::Invalid("amplitude matrix must be square".into()));
        }
        let n = amplitude.nrows();
        for a in 0..n {
            for b in 0..a {
                let (x, y) = (amplitude[(a, b)], amplitude[(b, a)]);
                if (x - y).abs() > 1e-12 * x.abs().max(y.abs()).max(1.0) {
                    return Err(Error::Invalid(format!(
                        "amplitude matrix is not symmetric at ({a}, {b})"
                    )));
                }
            }
        }
        Ok(Self { center, half_width, amplitude })
    }

    /// Rank-one term `A = u uᵀ`, positive semidefinite by construction.
    pub fn rank_one(center: f64, half_width: f64, weights: &[f64]) -> Result<Self> {
        let u = nalgebra::DVector::from_column_slice(weights);
        Self::new(center, half_width, &u * u.transpose())
    }

    pub fn profile(&self, omega: f64) -> f64 {
        let detuning = omega - self.center;
        let k2 = self.half_width * self.half_width;
        let scale = self.center / omega;
        scale * scale * k2 / (detuning * detuning + k2)
    }
}

/// Sum of Lorentzian resonances over a fixed set of named points.
#[derive(Debug, Clone)]
pub struct LorentzianModel {
    names: Vec<String>,
    terms: Vec<LorentzianTerm>,
}

impl LorentzianModel {
    pub fn new(names: Vec<String>, terms: Vec<LorentzianTerm>) -> Result<Self> {
        for (t, term) in terms.iter().enumerate() {
            if term.amplitude.nrows() != names.len() {
                return Err(Error::Invalid(format!(
                    "term {t} has a {0}x{0} amplitude matrix for {1} points",
                    term.amplitude.nrows(),
                    names.len()
                )));
            }
        }
        Ok(Self { names, terms })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn terms(&self) -> &[LorentzianTerm] {
        &self.terms
    }

    pub(crate) fn evaluate(&self, a: usize, b: usize, omega: f64) -> f64 {
        self.terms.iter().map(|t| t.amplitude[(a, b)] * t.profile(omega)).sum()
    }
}
