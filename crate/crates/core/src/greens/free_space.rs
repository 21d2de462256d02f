//! Homogeneous-medium dyadic Green's function, imaginary part.
//!
//! With `x = kR` and `R̂` the unit separation vector,
//!
//! ```text
//! Im G(r, r', ω) = k/(4π) · [ (j0(x) − j1(x)/x) · 1 + j2(x) · R̂R̂ ]
//! ```
//!
//! which is finite at `R = 0` where it reduces to `k/(6π) · 1`.

use std::f64::consts::PI;

use crate::units;

/// Below this value of `kR` the spherical Bessel combinations are summed as
/// power series. The closed forms lose `~45/x⁴` ulps in `j2` from
/// cancellation, so the switch sits where both routes agree to ~1e-14.
pub const SERIES_THRESHOLD: f64 = 1.0;

pub type Vec3 = [f64; 3];

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `j_n(x) / x^n` as a power series, valid (to machine precision) for small x.
fn reduced_bessel_series(order: u32, x: f64) -> f64 {
    let y = -0.5 * x * x;
    // (2n+1)!!
    let mut dfact = 1.0;
    for m in (1..=2 * order + 1).step_by(2) {
        dfact *= m as f64;
    }
    let mut term = 1.0 / dfact;
    let mut sum = term;
    for k in 1..60 {
        let kf = k as f64;
        term *= y / (kf * (2.0 * (order as f64 + kf) + 1.0));
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// Returns `(j0 − j1/x, j2)` at `x = kR ≥ 0`.
pub(crate) fn radial_factors(x: f64) -> (f64, f64) {
    if x < SERIES_THRESHOLD {
        let j0 = reduced_bessel_series(0, x);
        let j1_over_x = reduced_bessel_series(1, x);
        let j2 = x * x * reduced_bessel_series(2, x);
        (j0 - j1_over_x, j2)
    } else {
        let (s, c) = x.sin_cos();
        let j0 = s / x;
        let j1 = s / (x * x) - c / x;
        let j2 = (3.0 / (x * x * x) - 1.0 / x) * s - 3.0 * c / (x * x);
        (j0 - j1 / x, j2)
    }
}

/// Projected `n·Im G(r, r', ω)·n'` in 1/m for a homogeneous medium with real
/// refractive index `refractive_index`. Positions are in nm, `omega_ev` in eV.
pub fn free_space_im_g(
    r: &Vec3,
    r_prime: &Vec3,
    n: &Vec3,
    n_prime: &Vec3,
    omega_ev: f64,
    refractive_index: f64,
) -> f64 {
    let k_nm = units::wavenumber_per_nm(omega_ev, refractive_index);
    let sep = [r[0] - r_prime[0], r[1] - r_prime[1], r[2] - r_prime[2]];
    let dist = dot(&sep, &sep).sqrt();
    let x = k_nm * dist;
    let (transverse, longitudinal) = radial_factors(x);
    let mut value = transverse * dot(n, n_prime);
    if dist > 0.0 {
        value += longitudinal * dot(n, &sep) * dot(n_prime, &sep) / (dist * dist);
    }
    // k/(4π), with k converted from 1/nm to 1/m.
    k_nm * 1e9 / (4.0 * PI) * value
}
