//! Shared helpers for the CLI test targets: CSV reading, scenario paths and
//! independent physics oracles in SI units.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

pub const E_CHARGE: f64 = 1.602_176_634e-19;
pub const EPS0: f64 = 8.854_187_812_8e-12;
pub const C_LIGHT: f64 = 299_792_458.0;
pub const HBAR_EV_S: f64 = 6.582_119_569e-16;
pub const HBAR_J_S: f64 = HBAR_EV_S * E_CHARGE;
pub const HBAR_EV_FS: f64 = HBAR_EV_S * 1e15;

pub fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

pub fn scenario(name: &str) -> PathBuf {
    scenarios_dir().join(name)
}

pub struct Csv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Csv {
    pub fn read(path: &Path) -> Self {
        let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        let header = lines.next().expect("header").split(',').map(String::from).collect();
        let rows = lines
            .map(|l| l.split(',').map(|f| f.parse().unwrap_or_else(|_| panic!("bad number {f}"))).collect())
            .collect();
        Self { header, rows }
    }

    pub fn column(&self, name: &str) -> Vec<f64> {
        let k = self
            .header
            .iter()
            .position(|h| h == name)
            .unwrap_or_else(|| panic!("no column {name} in {:?}", self.header));
        self.rows.iter().map(|r| r[k]).collect()
    }
}

/// Angular frequency (rad/s) of a photon energy in eV.
pub fn omega_si(ev: f64) -> f64 {
    ev / HBAR_EV_S
}

/// Spectral density in eV from SI quantities:
/// `J = μ² ω² Im G / (π ε₀ c²)`, converted from joules.
pub fn spectral_density_ev(dipole_enm: f64, omega_ev: f64, im_g: f64) -> f64 {
    let mu = dipole_enm * E_CHARGE * 1e-9;
    let w = omega_si(omega_ev);
    mu * mu * w * w * im_g / (PI * EPS0 * C_LIGHT * C_LIGHT) / E_CHARGE
}

/// Peak coupling `g` (eV) of a Lorentzian term of amplitude `a` (1/m).
pub fn lorentzian_coupling(dipole_enm: f64, center_ev: f64, half_width_ev: f64, a: f64) -> f64 {
    (PI * half_width_ev * spectral_density_ev(dipole_enm, center_ev, a)).sqrt()
}

/// Free-space vacuum decay rate `ω³μ²/(3π ε₀ ħ c³)` in 1/fs.
pub fn free_space_rate_per_fs(dipole_enm: f64, omega_ev: f64) -> f64 {
    let mu = dipole_enm * E_CHARGE * 1e-9;
    let w = omega_si(omega_ev);
    w.powi(3) * mu * mu / (3.0 * PI * EPS0 * HBAR_J_S * C_LIGHT.powi(3)) * 1e-15
}

/// `|c(t)|²` for an emitter resonant with a Lorentzian bath of peak coupling
/// `g` and half-width `kappa` (both eV).
pub fn damped_rabi_population(g: f64, kappa: f64, t_fs: f64) -> f64 {
    let (g, k) = (g / HBAR_EV_FS, kappa / HBAR_EV_FS);
    let disc = g * g - k * k / 4.0;
    let decay = (-k * t_fs / 2.0).exp();
    let c = if disc > 0.0 {
        let w = disc.sqrt();
        decay * ((w * t_fs).cos() + k / (2.0 * w) * (w * t_fs).sin())
    } else {
        let w = (-disc).sqrt();
        decay * ((w * t_fs).cosh() + k / (2.0 * w) * (w * t_fs).sinh())
    };
    c * c
}

/// `n_a·Im G(r_a, r_b)·n_b` in 1/m for free space, from the complex dyadic
/// `G = e^{ikR}/(4πR)[(1 + i/x − 1/x²) I + (3/x² − 3i/x − 1) R̂R̂]`.
pub fn free_space_im_g(ra: [f64; 3], rb: [f64; 3], na: [f64; 3], nb: [f64; 3], omega_ev: f64) -> f64 {
    let k = omega_si(omega_ev) / C_LIGHT;
    let d: Vec<f64> = (0..3).map(|i| (rb[i] - ra[i]) * 1e-9).collect();
    let r = d.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nn: f64 = (0..3).map(|i| na[i] * nb[i]).sum();
    if r == 0.0 {
        return nn * k / (6.0 * PI);
    }
    let ar: f64 = (0..3).map(|i| na[i] * d[i] / r).sum();
    let br: f64 = (0..3).map(|i| nb[i] * d[i] / r).sum();
    let x = k * r;
    // Complex arithmetic by hand: (p + iq) e^{ix} / (4πR), imaginary part.
    let p = nn * (1.0 - 1.0 / (x * x)) + ar * br * (3.0 / (x * x) - 1.0);
    let q = nn / x - 3.0 * ar * br / x;
    (p * x.sin() + q * x.cos()) / (4.0 * PI * r)
}

/// Least-squares slope of `−ln P` against `t` over `[t0, t1]`, 1/fs.
pub fn fitted_rate(times: &[f64], pops: &[f64], t0: f64, t1: f64) -> f64 {
    let pts: Vec<(f64, f64)> =
        times.iter().zip(pops).filter(|(t, _)| **t >= t0 && **t <= t1).map(|(&t, &p)| (t, -p.ln())).collect();
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    sxy / sxx
}
