use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::greens::GreensProvider;
use crate::grid::FrequencyGrid;
use crate::modes::{EmitterSet, ModeBasis, Orthogonalization};
use crate::par::{self, Execution};
use crate::units;

/// Below this many mode slots the Hamiltonian product stays on one thread.
const PARALLEL_APPLY_MIN_MODES: usize = 32_768;
const APPLY_CHUNK: usize = 8_192;

/// The single-excitation RWA Hamiltonian on a discretized frequency grid.
///
/// Basis order: the N emitter excitations, then for every grid node `k` the
/// `M_k` continuum modes `C_j(ω_k)`, `j = 0..M_k`. A mode slot carries the
/// amplitude `c_{j,k} = sqrt(Δ_k) · C_j(ω_k)`, and couples to emitter `i`
/// with `−μ_i g_ij(ω_k) sqrt(Δ_k)` (eV). Dark modes never appear.
#[derive(Debug, Clone)]
pub struct DiscretizedSystem {
    emitters: EmitterSet,
    grid: FrequencyGrid,
    orthogonalization: Orthogonalization,
    bases: Vec<ModeBasis>,
    /// Mode slots of node k are `node_offsets[k]..node_offsets[k + 1]`.
    node_offsets: Vec<usize>,
    mode_energy: Vec<f64>,
    mode_node: Vec<usize>,
    mode_continuum: Vec<usize>,
    /// Row-major N × n_modes coupling block.
    coupling: Vec<f64>,
}

impl DiscretizedSystem {
    /// Assembles the Hamiltonian, building the mode basis at every node.
    pub fn assemble(
        provider: &GreensProvider,
        emitters: &EmitterSet,
        grid: &FrequencyGrid,
        orthogonalization: &Orthogonalization,
    ) -> Result<Self> {
        Self::assemble_with(provider, emitters, grid, orthogonalization, Execution::default())
    }

    pub fn assemble_with(
        provider: &GreensProvider,
        emitters: &EmitterSet,
        grid: &FrequencyGrid,
        orthogonalization: &Orthogonalization,
        execution: Execution,
    ) -> Result<Self> {
        emitters.check_against(provider)?;
        let freqs: Vec<f64> = emitters.iter().map(|e| e.frequency).collect();
        grid.require_covers(&freqs)?;
        if let Some((lo, hi)) = provider.frequency_range() {
            let (a, b) = (grid.nodes()[0], *grid.nodes().last().unwrap());
            if a < lo || b > hi {
                return Err(Error::Invalid(format!(
                    "grid nodes [{a}, {b}] eV exceed the Green's function data range [{lo}, {hi}] eV"
                )));
            }
        }
        let bases = par::map_indexed(grid.len(), execution, |k| {
            ModeBasis::build(provider, emitters, grid.nodes()[k], orthogonalization)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_bases(emitters.clone(), grid.clone(), *orthogonalization, bases))
    }

    /// Assembles from precomputed per-node mode bases.
    pub fn from_bases(
        emitters: EmitterSet,
        grid: FrequencyGrid,
        orthogonalization: Orthogonalization,
        bases: Vec<ModeBasis>,
    ) -> Self {
        assert_eq!(bases.len(), grid.len(), "one mode basis per grid node");
        let n = emitters.len();
        let mut node_offsets = Vec::with_capacity(grid.len() + 1);
        node_offsets.push(0);
        for b in &bases {
            node_offsets.push(node_offsets.last().unwrap() + b.rank);
        }
        let n_modes = *node_offsets.last().unwrap();
        let mut mode_energy = Vec::with_capacity(n_modes);
        let mut mode_node = Vec::with_capacity(n_modes);
        let mut mode_continuum = Vec::with_capacity(n_modes);
        let mut coupling = vec![0.0; n * n_modes];
        for (k, b) in bases.iter().enumerate() {
            let root = grid.weights()[k].sqrt();
            for j in 0..b.rank {
                let s = node_offsets[k] + j;
                mode_energy.push(grid.nodes()[k]);
                mode_node.push(k);
                mode_continuum.push(j);
                for (i, e) in emitters.iter().enumerate() {
                    coupling[i * n_modes + s] = -e.dipole * b.g[(i, j)] * root;
                }
            }
        }
        Self {
            emitters,
            grid,
            orthogonalization,
            bases,
            node_offsets,
            mode_energy,
            mode_node,
            mode_continuum,
            coupling,
        }
    }

    pub fn emitters(&self) -> &EmitterSet {
        &self.emitters
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn orthogonalization(&self) -> &Orthogonalization {
        &self.orthogonalization
    }

    pub fn bases(&self) -> &[ModeBasis] {
        &self.bases
    }

    pub fn emitter_count(&self) -> usize {
        self.emitters.len()
    }

    pub fn mode_count(&self) -> usize {
        self.mode_energy.len()
    }

    /// `D = N + Σ_k M_k`.
    pub fn dimension(&self) -> usize {
        self.emitter_count() + self.mode_count()
    }

    /// Largest number of continua kept at any node.
    pub fn max_rank(&self) -> usize {
        self.bases.iter().map(|b| b.rank).max().unwrap_or(0)
    }

    /// Kept rank per node.
    pub fn rank_map(&self) -> Vec<usize> {
        self.bases.iter().map(|b| b.rank).collect()
    }

    pub fn node_slots(&self, k: usize) -> std::ops::Range<usize> {
        let n = self.emitter_count();
        n + self.node_offsets[k]..n + self.node_offsets[k + 1]
    }

    /// `(node k, continuum j)` of a mode slot (index into the full basis).
    pub fn slot_mode(&self, slot: usize) -> Option<(usize, usize)> {
        let s = slot.checked_sub(self.emitter_count())?;
        Some((*self.mode_node.get(s)?, self.mode_continuum[s]))
    }

    /// Coupling between emitter `i` and mode slot `s` (counted among modes).
    pub fn coupling(&self, i: usize, mode: usize) -> f64 {
        self.coupling[i * self.mode_count() + mode]
    }

    /// Largest diagonal energy, in eV.
    pub fn max_energy(&self) -> f64 {
        let e = self.emitters.iter().map(|e| e.frequency).fold(0.0, f64::max);
        self.mode_energy.iter().copied().fold(e, f64::max)
    }

    /// Default RK4 step `0.02 · 2πħ/ω_max` in fs.
    pub fn default_dt(&self) -> f64 {
        0.02 * 2.0 * PI * units::HBAR_EV_FS / self.max_energy()
    }

    /// Earliest revival time `2πħ/Δω_max` of the discretized continuum, fs.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * PI * units::HBAR_EV_FS / self.grid.max_spacing()
    }

    pub fn hamiltonian_dense(&self) -> DMatrix<f64> {
        let n = self.emitter_count();
        let d = self.dimension();
        let nm = self.mode_count();
        let mut h = DMatrix::zeros(d, d);
        for (i, e) in self.emitters.iter().enumerate() {
            h[(i, i)] = e.frequency;
        }
        for s in 0..nm {
            h[(n + s, n + s)] = self.mode_energy[s];
            for i in 0..n {
                let c = self.coupling[i * nm + s];
                h[(i, n + s)] = c;
                h[(n + s, i)] = c;
            }
        }
        h
    }

    /// `out = (H − shift) · y` over the D single-excitation slots.
    pub fn apply(&self, y: &[Complex64], out: &mut [Complex64], shift: f64, execution: Execution) {
        let n = self.emitter_count();
        let nm = self.mode_count();
        let (ye, ym) = y.split_at(n);
        let (oe, om) = out[..n + nm].split_at_mut(n);
        for (i, e) in self.emitters.iter().enumerate() {
            let row = &self.coupling[i * nm..(i + 1) * nm];
            let mut acc = ye[i] * (e.frequency - shift);
            for (c, a) in row.iter().zip(ym) {
                acc += a * c;
            }
            oe[i] = acc;
        }
        let exec = if nm >= PARALLEL_APPLY_MIN_MODES { execution } else { Execution::Sequential };
        par::for_each_chunk_mut(om, APPLY_CHUNK, exec, |start, chunk| {
            for (off, o) in chunk.iter_mut().enumerate() {
                let s = start + off;
                let mut acc = ym[s] * (self.mode_energy[s] - shift);
                for (i, yi) in ye.iter().enumerate() {
                    acc += yi * self.coupling[i * nm + s];
                }
                *o = acc;
            }
        });
    }

    /// Weak-coupling decay energy `2π J_i(ω_e,i)` (eV) from the nearest node
    /// basis, used for grid guards.
    pub fn estimated_decay(&self, provider: &GreensProvider, i: usize) -> Result<f64> {
        let w = self.emitters[i].frequency;
        Ok(2.0 * PI * crate::modes::spectral_density(provider, &self.emitters, i, w)?)
    }

    /// Advisory checks on the discretization; returns human-readable
    /// warnings. The window should extend `20 · max(Γ, κ)` beyond the
    /// emitter frequencies and the continuum revival time should exceed
    /// twice `t_end`.
    pub fn guard_warnings(&self, provider: &GreensProvider, t_end_fs: f64, kappa_est: f64) -> Vec<String> {
        let mut out = Vec::new();
        let mut width = kappa_est.max(0.0);
        for i in 0..self.emitter_count() {
            match self.estimated_decay(provider, i) {
                Ok(g) => width = width.max(g),
                Err(e) => out.push(format!("could not estimate decay of emitter {i}: {e}")),
            }
        }
        let lo = self.emitters.iter().map(|e| e.frequency).fold(f64::INFINITY, f64::min) - 20.0 * width;
        let hi = self.emitters.iter().map(|e| e.frequency).fold(0.0, f64::max) + 20.0 * width;
        let (a, b) = self.grid.window();
        if a > lo || b < hi {
            out.push(format!(
                "grid window [{a}, {b}] eV does not cover [{lo:.6}, {hi:.6}] eV (emitter frequencies ± 20 linewidths)"
            ));
        }
        let rec = self.recurrence_time();
        if rec < 2.0 * t_end_fs {
            out.push(format!(
                "continuum revival time {rec:.1} fs is shorter than twice t_end = {t_end_fs} fs; refine the grid"
            ));
        }
        out
    }
}
