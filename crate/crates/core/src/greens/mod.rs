//! Projected imaginary parts of the dyadic Green's function between
//! registered points.
//!
//! Every provider answers `M_ab(ω) = n_a·Im G(r_a, r_b, ω)·n_b` in 1/m for
//! point indices `a`, `b`. Providers are immutable and `Sync`; evaluations
//! are pure.

mod free_space;
mod interp;
mod lorentzian;
mod tabulated;

use nalgebra::DMatrix;

pub use free_space::{free_space_im_g, Vec3, SERIES_THRESHOLD};
pub use interp::Interpolation;
pub use lorentzian::{LorentzianModel, LorentzianTerm};
pub use tabulated::{TabulatedGreens, PSD_TOLERANCE};

use crate::error::{Error, Result};

/// A named point with a dipole/field orientation. Positions in nm.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSpec {
    pub name: String,
    pub position: Vec3,
    pub orientation: Vec3,
}

impl PointSpec {
    pub fn new(name: impl Into<String>, position: Vec3, orientation: Vec3) -> Result<Self> {
        let name = name.into();
        let norm = orientation.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!(
                "orientation of point {name} must be a unit vector (|n| = {norm})"
            )));
        }
        if position.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("position of point {name} is not finite")));
        }
        Ok(Self { name, position, orientation })
    }
}

#[derive(Debug, Clone)]
pub enum GreensProvider {
    /// Homogeneous medium with the given (real) refractive index.
    FreeSpace { points: Vec<PointSpec>, refractive_index: f64 },
    Lorentzian(LorentzianModel),
    Tabulated(TabulatedGreens),
}

impl GreensProvider {
    pub fn free_space(points: Vec<PointSpec>, refractive_index: f64) -> Result<Self> {
        if !(refractive_index > 0.0 && refractive_index.is_finite()) {
            return Err(Error::Invalid(format!(
                "refractive index must be positive, got {refractive_index}"
            )));
        }
        Ok(Self::FreeSpace { points, refractive_index })
    }

    pub fn point_count(&self) -> usize {
        match self {
            Self::FreeSpace { points, .. } => points.len(),
            Self::Lorentzian(m) => m.names().len(),
            Self::Tabulated(t) => t.names().len(),
        }
    }

    pub fn point_name(&self, index: usize) -> Option<&str> {
        match self {
            Self::FreeSpace { points, .. } => points.get(index).map(|p| p.name.as_str()),
            Self::Lorentzian(m) => m.names().get(index).map(String::as_str),
            Self::Tabulated(t) => t.names().get(index).map(String::as_str),
        }
    }

    pub fn point_index(&self, name: &str) -> Option<usize> {
        (0..self.point_count()).find(|&i| self.point_name(i) == Some(name))
    }

    /// Frequency interval the provider can answer, if bounded.
    pub fn frequency_range(&self) -> Option<(f64, f64)> {
        match self {
            Self::Tabulated(t) => Some(t.range()),
            _ => None,
        }
    }

    /// Whether data for the pair is available (tabulated files may omit
    /// pairs between observation points).
    pub fn has_pair(&self, a: usize, b: usize) -> bool {
        let n = self.point_count();
        match self {
            Self::Tabulated(t) => t.has_pair(a, b),
            _ => a < n && b < n,
        }
    }

    /// Projected `n_a·Im G(r_a, r_b, ω)·n_b` in 1/m.
    pub fn projected_im_g(&self, a: usize, b: usize, omega: f64) -> Result<f64> {
        let count = self.point_count();
        for index in [a, b] {
            if index >= count {
                return Err(Error::UnknownPoint { index, count });
            }
        }
        if !(omega > 0.0) {
            return Err(Error::Invalid(format!("frequency must be positive, got {omega}")));
        }
        match self {
            Self::FreeSpace { points, refractive_index } => {
                let (p, q) = (&points[a], &points[b]);
                Ok(free_space_im_g(
                    &p.position,
                    &q.position,
                    &p.orientation,
                    &q.orientation,
                    omega,
                    *refractive_index,
                ))
            }
            Self::Lorentzian(m) => Ok(m.evaluate(a, b, omega)),
            Self::Tabulated(t) => t.evaluate(a, b, omega),
        }
    }

    /// `M_ab(ω)` over the listed points.
    pub fn matrix(&self, points: &[usize], omega: f64) -> Result<DMatrix<f64>> {
        let n = points.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.projected_im_g(points[i], points[j], omega)?;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(m)
    }
}
