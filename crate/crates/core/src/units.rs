//! Unit conventions.
//!
//! Energies and frequencies are in eV (ħ = 1 internally), times in fs,
//! positions in nm, transition dipoles in e·nm and projected Green's
//! function values in 1/m. Every physical constant used by the crate lives
//! here.

use std::f64::consts::PI;

/// ħ in eV·fs.
pub const HBAR_EV_FS: f64 = 0.658_211_956_9;
/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Vacuum permittivity in F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
/// Elementary charge in C (also J per eV).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

const HBAR_EV_S: f64 = HBAR_EV_FS * 1e-15;
const METERS_PER_NM: f64 = 1e-9;

/// Angular frequency in rad/s for a photon energy in eV.
pub fn angular_frequency(omega_ev: f64) -> f64 {
    omega_ev / HBAR_EV_S
}

/// Wavenumber n·ω/c in 1/nm.
pub fn wavenumber_per_nm(omega_ev: f64, refractive_index: f64) -> f64 {
    refractive_index * angular_frequency(omega_ev) / SPEED_OF_LIGHT * METERS_PER_NM
}

/// Factor `ħω²/(πε₀c²)` expressed so that `μ² · factor · Im G` is the
/// spectral density J(ω) in eV, with μ in e·nm and Im G in 1/m.
///
/// The bright-mode normalization is `G_i = sqrt(factor · Im G_ii)` in
/// eV^{1/2}/(e·nm); the coupling energy scale is then `μ_i G_i`.
pub fn coupling_prefactor(omega_ev: f64) -> f64 {
    let omega = angular_frequency(omega_ev);
    ELEMENTARY_CHARGE * METERS_PER_NM * METERS_PER_NM * omega * omega
        / (PI * VACUUM_PERMITTIVITY * SPEED_OF_LIGHT * SPEED_OF_LIGHT)
}

/// Converts an electric-field mode amplitude expressed per e·nm of dipole
/// (i.e. the natural unit of `G_i`) into V/m.
pub const FIELD_PER_COUPLING: f64 = 1.0 / METERS_PER_NM;

/// Interaction energy μ·E in eV for μ in e·nm and E in V/m.
pub fn dipole_energy(dipole_enm: f64, field_vpm: f64) -> f64 {
    dipole_enm * field_vpm * METERS_PER_NM
}

/// Converts an energy in eV to an angular rate in 1/fs.
pub fn rate_per_fs(energy_ev: f64) -> f64 {
    energy_ev / HBAR_EV_FS
}

/// Converts an angular rate in 1/fs to an energy in eV.
pub fn energy_from_rate(rate_per_fs: f64) -> f64 {
    rate_per_fs * HBAR_EV_FS
}
