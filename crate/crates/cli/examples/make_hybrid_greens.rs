//! Writes `scenarios/hybrid_synthetic_greens.csv`: a SYNTHETIC tabulated
//! Green's function for two emitters (`e1`, `e2`) and an observation point
//! (`p3`). It is a mixture of rank-one Lorentzian resonances (a sharp
//! whispering-gallery-like mode shared by both emitters, two weaker sharp
//! satellites and a broad plasmon-like resonance) on top of the free-space
//! background. It only imitates the qualitative shape of hybrid
//! cavity-antenna data; it is not solver output.
//!
//! Usage: `cargo run -p ecmodes-cli --example make_hybrid_greens [-- <path>]`

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};

use ecmodes::greens::{free_space_im_g, Interpolation, TabulatedGreens, Vec3};
use ecmodes::units::coupling_prefactor;

const OMEGA_MIN: f64 = 1.4;
const OMEGA_MAX: f64 = 2.6;
const STEPS_PER_EV: f64 = 2000.0;
const DIPOLES: [f64; 2] = [0.1, 3.0];

struct Resonance {
    center: f64,
    half_width: f64,
    /// Per-point weights; the amplitude matrix is `u uᵀ`.
    weights: [f64; 3],
}

/// Weight giving emitter `i` the peak coupling `g` (eV) to a resonance.
fn weight_for_coupling(g: f64, center: f64, half_width: f64, dipole: f64) -> f64 {
    (g * g / (PI * half_width * dipole * dipole * coupling_prefactor(center))).sqrt()
}

fn resonances() -> Vec<Resonance> {
    let w = |g: f64, c: f64, k: f64, i: usize| weight_for_coupling(g, c, k, DIPOLES[i]);
    let (c0, k0) = (2.0, 0.0025);
    let (cp, kp) = (2.2, 0.15);
    vec![
        Resonance { center: c0, half_width: k0, weights: [w(0.01, c0, k0, 0), w(0.01, c0, k0, 1), 1.2e6] },
        Resonance { center: 1.9, half_width: 0.004, weights: [w(0.004, 1.9, 0.004, 0), -w(0.004, 1.9, 0.004, 1), 4.0e5] },
        Resonance { center: 2.1, half_width: 0.004, weights: [-w(0.004, 2.1, 0.004, 0), w(0.004, 2.1, 0.004, 1), 6.0e5] },
        Resonance { center: cp, half_width: kp, weights: [w(0.004, cp, kp, 0), w(0.07, cp, kp, 1), 2.0e4] },
    ]
}

const POSITIONS: [Vec3; 3] = [[-1000.0, 0.0, 0.0], [1000.0, 0.0, 0.0], [0.0, 0.0, 200.0]];
const ORIENTATION: Vec3 = [0.0, 0.0, 1.0];

fn im_g(res: &[Resonance], a: usize, b: usize, omega: f64) -> f64 {
    let background = free_space_im_g(&POSITIONS[a], &POSITIONS[b], &ORIENTATION, &ORIENTATION, omega, 1.0);
    let peaks: f64 = res
        .iter()
        .map(|r| {
            let d = omega - r.center;
            let k2 = r.half_width * r.half_width;
            r.weights[a] * r.weights[b] * (r.center / omega).powi(2) * k2 / (d * d + k2)
        })
        .sum();
    background + peaks
}

fn main() -> std::io::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "scenarios/hybrid_synthetic_greens.csv".into());
    let res = resonances();
    let n = ((OMEGA_MAX - OMEGA_MIN) * STEPS_PER_EV).round() as usize + 1;
    let first = (OMEGA_MIN * STEPS_PER_EV).round();
    let omegas: Vec<f64> = (0..n).map(|k| (first + k as f64) / STEPS_PER_EV).collect();
    let pairs = vec![(0, 0), (0, 1), (1, 1), (0, 2), (1, 2), (2, 2)];
    let values = pairs.iter().map(|&(a, b)| omegas.iter().map(|&w| im_g(&res, a, b, w)).collect()).collect();
    let names = ["e1", "e2", "p3"].map(String::from).to_vec();
    let table = TabulatedGreens::from_samples(names, pairs, omegas, values, Interpolation::MonotoneCubic)
        .map_err(std::io::Error::other)?;
    let mut out = BufWriter::new(File::create(&path)?);
    writeln!(out, "# SYNTHETIC data: Lorentzian mixture plus free-space background, not solver output.")?;
    writeln!(out, "# Generated by crates/cli/examples/make_hybrid_greens.rs; columns are n_a.Im G.n_b in 1/m.")?;
    table.write_csv(&mut out)?;
    out.flush()?;
    eprintln!("wrote {path}");
    Ok(())
}
