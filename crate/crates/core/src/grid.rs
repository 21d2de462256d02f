//! Frequency discretization of the photon continua.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GridScheme {
    /// Midpoint rule: `n` equal cells, one node at each cell center.
    #[default]
    Uniform,
    GaussLegendre,
}

/// Nodes `ω_k` (eV, strictly increasing) and weights `Δ_k` (eV).
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    scheme: GridScheme,
    window: (f64, f64),
}

impl FrequencyGrid {
    pub fn build(omega_min: f64, omega_max: f64, n_nodes: usize, scheme: GridScheme) -> Result<Self> {
        if !(omega_min > 0.0 && omega_min < omega_max && omega_max.is_finite()) {
            return Err(Error::Invalid(format!(
                "grid window must satisfy 0 < omega_min < omega_max, got [{omega_min}, {omega_max}]"
            )));
        }
        if n_nodes < 2 {
            return Err(Error::Invalid(format!("grid needs at least 2 nodes, got {n_nodes}")));
        }
        let width = omega_max - omega_min;
        let (nodes, weights) = match scheme {
            GridScheme::Uniform => {
                let step = width / n_nodes as f64;
                let nodes = (0..n_nodes).map(|k| omega_min + (k as f64 + 0.5) * step).collect();
                (nodes, vec![step; n_nodes])
            }
            GridScheme::GaussLegendre => {
                let (x, w) = gauss_legendre(n_nodes);
                let half = 0.5 * width;
                let mid = 0.5 * (omega_min + omega_max);
                (x.iter().map(|t| mid + half * t).collect(), w.iter().map(|v| half * v).collect())
            }
        };
        Ok(Self { nodes, weights, scheme, window: (omega_min, omega_max) })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scheme(&self) -> GridScheme {
        self.scheme
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Approximates `∫ f(ω) dω` over the window.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&w, &d)| d * f(w)).sum()
    }

    /// Largest local node spacing, in eV. Sets the earliest revival time
    /// `2πħ/Δω` of the discretized continuum.
    pub fn max_spacing(&self) -> f64 {
        match self.scheme {
            GridScheme::Uniform => self.weights[0],
            GridScheme::GaussLegendre => self
                .nodes
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(0.0, f64::max),
        }
    }

    /// Fails when none of `frequencies` lies inside the grid window.
    pub fn require_covers(&self, frequencies: &[f64]) -> Result<()> {
        let (lo, hi) = self.window;
        if frequencies.iter().any(|&w| w >= lo && w <= hi) {
            Ok(())
        } else {
            Err(Error::Invalid(format!(
                "grid window [{lo}, {hi}] eV excludes every emitter frequency"
            )))
        }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut t = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, t);
            dp = d;
            let step = p / d;
            t -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, t);
        if d != 0.0 {
            dp = d;
        }
        let weight = 2.0 / ((1.0 - t * t) * dp * dp);
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, t: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = t;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, d)
}
