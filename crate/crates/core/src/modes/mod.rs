//! Emitter-centered (bright) mode structure at a single frequency.
//!
//! For emitters `i` with dipole moments `μ_i` along `n_i`, the bright mode of
//! emitter `i` is normalized by
//!
//! ```text
//! G_i(ω) = sqrt( ħω²/(πε₀c²) · n_i·Im G(r_i, r_i, ω)·n_i )
//! ```
//!
//! and two bright modes overlap by
//! `S_ij = ħω²/(πε₀c²) · n_i·Im G(r_i, r_j, ω)·n_j / (G_i G_j)`. An
//! orthonormal set `C = V B` is then built, and emitter `i` couples to
//! continuum `j` with strength `μ_i g_ij`, `g_ij = G_i W_ij`.

mod orthogonalize;

use nalgebra::DMatrix;

pub use orthogonalize::{
    orthogonalize, Orthogonalization, OrthogonalizationMethod, Orthogonalized,
    DEFAULT_RANK_THRESHOLD, NEGATIVE_EIGENVALUE_CLIP,
};

use crate::error::{Error, Result};
use crate::greens::GreensProvider;
use crate::units;

/// Negative diagonal `Im G_ii` down to `-DIAGONAL_CLIP · max_k |Im G_kk|`
/// is read as solver noise and clipped to zero.
pub const DIAGONAL_CLIP: f64 = 1e-6;

/// A two-level emitter attached to a registered provider point.
#[derive(Debug, Clone, PartialEq)]
pub struct Emitter {
    pub name: String,
    /// Index of the emitter's point in the Green's function provider.
    pub point: usize,
    /// Transition dipole in e·nm. Zero decouples the emitter from the field
    /// while leaving its bright mode in the basis.
    pub dipole: f64,
    /// Transition frequency in eV.
    pub frequency: f64,
}

impl Emitter {
    pub fn new(name: impl Into<String>, point: usize, dipole: f64, frequency: f64) -> Self {
        Self { name: name.into(), point, dipole, frequency }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmitterSet {
    emitters: Vec<Emitter>,
}

impl EmitterSet {
    pub fn new(emitters: Vec<Emitter>) -> Result<Self> {
        if emitters.is_empty() {
            return Err(Error::Invalid("at least one emitter is required".into()));
        }
        for (i, e) in emitters.iter().enumerate() {
            if !(e.dipole >= 0.0 && e.dipole.is_finite()) {
                return Err(Error::Invalid(format!("emitter {}: dipole must be >= 0", e.name)));
            }
            if !(e.frequency > 0.0 && e.frequency.is_finite()) {
                return Err(Error::Invalid(format!("emitter {}: frequency must be > 0", e.name)));
            }
            if emitters[..i].iter().any(|o| o.name == e.name) {
                return Err(Error::Invalid(format!("duplicate emitter name {}", e.name)));
            }
        }
        Ok(Self { emitters })
    }

    pub fn len(&self) -> usize {
        self.emitters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.emitters.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Emitter> {
        self.emitters.iter()
    }

    pub fn points(&self) -> Vec<usize> {
        self.emitters.iter().map(|e| e.point).collect()
    }

    /// Checks that every emitter refers to a point the provider knows.
    pub fn check_against(&self, provider: &GreensProvider) -> Result<()> {
        let count = provider.point_count();
        for e in &self.emitters {
            if e.point >= count {
                return Err(Error::UnknownPoint { index: e.point, count });
            }
        }
        Ok(())
    }
}

impl std::ops::Index<usize> for EmitterSet {
    type Output = Emitter;
    fn index(&self, i: usize) -> &Emitter {
        &self.emitters[i]
    }
}

fn clip_diagonal(value: f64, scale: f64, name: &str, omega: f64) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -DIAGONAL_CLIP * scale {
        Ok(0.0)
    } else {
        Err(Error::DataConsistency(format!(
            "Im G at emitter {name} is {value:e} at {omega} eV (strongly negative)"
        )))
    }
}

fn diagonal_scale(provider: &GreensProvider, emitters: &EmitterSet, omega: f64) -> Result<f64> {
    let mut scale = 0.0f64;
    for e in emitters.iter() {
        scale = scale.max(provider.projected_im_g(e.point, e.point, omega)?.abs());
    }
    Ok(scale)
}

/// Bright-mode normalization `G_i(ω)` in eV^{1/2} per e·nm.
pub fn coupling_normalization(
    provider: &GreensProvider,
    emitters: &EmitterSet,
    i: usize,
    omega: f64,
) -> Result<f64> {
    let e = &emitters[i];
    let img = provider.projected_im_g(e.point, e.point, omega)?;
    let scale = diagonal_scale(provider, emitters, omega)?;
    let img = clip_diagonal(img, scale, &e.name, omega)?;
    Ok((units::coupling_prefactor(omega) * img).sqrt())
}

/// `J = (μ G)²` in eV for a dipole in e·nm and a normalization `G`.
pub fn spectral_density_from(dipole: f64, coupling: f64) -> f64 {
    let x = dipole * coupling;
    x * x
}

/// Spectral density `J_i(ω)` in eV. The weak-coupling decay rate of emitter
/// `i` is `2π J_i(ω_e,i)` (an energy; divide by ħ for a rate).
pub fn spectral_density(
    provider: &GreensProvider,
    emitters: &EmitterSet,
    i: usize,
    omega: f64,
) -> Result<f64> {
    let g = coupling_normalization(provider, emitters, i, omega)?;
    Ok(spectral_density_from(emitters[i].dipole, g))
}

/// Overlap data for the emitters at one frequency.
#[derive(Debug, Clone)]
pub struct Overlap {
    /// N×N, unit diagonal. Rows and columns of inactive emitters are those of
    /// the identity.
    pub s: DMatrix<f64>,
    /// `G_i(ω)` for every emitter.
    pub couplings: Vec<f64>,
    /// Emitters with `G_i > 0`; the rest are decoupled at this frequency.
    pub active: Vec<bool>,
}

/// Builds `G_i(ω)` and the overlap matrix `S(ω)`.
pub fn overlap_matrix(
    provider: &GreensProvider,
    emitters: &EmitterSet,
    omega: f64,
) -> Result<Overlap> {
    let n = emitters.len();
    let points = emitters.points();
    let m = provider.matrix(&points, omega)?;
    let scale = (0..n).fold(0.0f64, |a, i| a.max(m[(i, i)].abs()));
    let mut diag = Vec::with_capacity(n);
    for (i, e) in emitters.iter().enumerate() {
        diag.push(clip_diagonal(m[(i, i)], scale, &e.name, omega)?);
    }
    let prefactor = units::coupling_prefactor(omega);
    let couplings: Vec<f64> = diag.iter().map(|d| (prefactor * d).sqrt()).collect();
    let active: Vec<bool> = couplings.iter().map(|&g| g > 0.0).collect();

    let mut s = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if !active[i] {
                // Cauchy-Schwarz at the clip level bounds the off-diagonal.
                let bound = (DIAGONAL_CLIP * scale * diag[j]).sqrt();
                if m[(i, j)].abs() > bound {
                    return Err(Error::DataConsistency(format!(
                        "emitter {} has vanishing Im G_ii but Im G_ij = {:e} with emitter {} at {omega} eV",
                        emitters[i].name,
                        m[(i, j)],
                        emitters[j].name
                    )));
                }
                continue;
            }
            if active[j] {
                s[(i, j)] = prefactor * m[(i, j)] / (couplings[i] * couplings[j]);
            }
        }
    }
    Ok(Overlap { s, couplings, active })
}

/// `g_ij = G_i W_ij`.
pub fn coupling_matrix(couplings: &[f64], w: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(couplings.len(), w.nrows(), "coupling vector and W disagree in N");
    let mut g = w.clone();
    for (i, &gi) in couplings.iter().enumerate() {
        g.row_mut(i).scale_mut(gi);
    }
    g
}

/// Full emitter-centered mode structure at one frequency.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    pub omega: f64,
    /// `G_i(ω)`, eV^{1/2} per e·nm.
    pub couplings: Vec<f64>,
    pub overlap: DMatrix<f64>,
    pub active: Vec<bool>,
    /// M×N.
    pub v: DMatrix<f64>,
    /// N×M.
    pub w: DMatrix<f64>,
    /// N×M, `g_ij = G_i W_ij`.
    pub g: DMatrix<f64>,
    pub rank: usize,
    /// Eigenvalues of the active overlap block whose directions were dropped.
    pub dropped: Vec<f64>,
}

impl ModeBasis {
    pub fn build(
        provider: &GreensProvider,
        emitters: &EmitterSet,
        omega: f64,
        orthogonalization: &Orthogonalization,
    ) -> Result<Self> {
        let Overlap { s, couplings, active } = overlap_matrix(provider, emitters, omega)?;
        let n = emitters.len();
        let idx: Vec<usize> = (0..n).filter(|&i| active[i]).collect();
        let sub = DMatrix::from_fn(idx.len(), idx.len(), |a, b| s[(idx[a], idx[b])]);
        let o = orthogonalize(&sub, orthogonalization)?;
        let rank = o.rank;
        let mut v = DMatrix::zeros(rank, n);
        let mut w = DMatrix::zeros(n, rank);
        for (a, &i) in idx.iter().enumerate() {
            v.set_column(i, &o.v.column(a));
            w.set_row(i, &o.w.row(a));
        }
        let g = coupling_matrix(&couplings, &w);
        Ok(Self { omega, couplings, overlap: s, active, v, w, g, rank, dropped: o.dropped })
    }

    /// `J_i(ω)` in eV.
    pub fn spectral_density(&self, emitters: &EmitterSet, i: usize) -> f64 {
        spectral_density_from(emitters[i].dipole, self.couplings[i])
    }

    /// `max |V S Vᵀ − 1|` over the active block.
    pub fn orthonormality_error(&self) -> f64 {
        let vsv = &self.v * &self.overlap * self.v.transpose();
        let id = DMatrix::<f64>::identity(self.rank, self.rank);
        max_abs(&(vsv - id))
    }

    /// `max |g gᵀ − diag(G) S diag(G)|`; basis independent.
    pub fn gram_error(&self) -> f64 {
        max_abs(&(&self.g * self.g.transpose() - self.coupling_gram()))
    }

    /// `diag(G) S diag(G)`, the basis-independent coupling Gram matrix.
    pub fn coupling_gram(&self) -> DMatrix<f64> {
        let n = self.couplings.len();
        DMatrix::from_fn(n, n, |i, j| {
            if self.active[i] && self.active[j] {
                self.couplings[i] * self.overlap[(i, j)] * self.couplings[j]
            } else {
                0.0
            }
        })
    }
}

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::{LorentzianModel, LorentzianTerm, PointSpec};

    fn free_pair(sep: f64) -> (GreensProvider, EmitterSet) {
        let z = [0.0, 0.0, 1.0];
        let pts = vec![
            PointSpec::new("a", [0.0; 3], z).unwrap(),
            PointSpec::new("b", [sep, 0.0, 0.0], z).unwrap(),
        ];
        let p = GreensProvider::free_space(pts, 1.0).unwrap();
        let e = EmitterSet::new(vec![Emitter::new("a", 0, 0.1, 2.0), Emitter::new("b", 1, 3.0, 2.0)])
            .unwrap();
        (p, e)
    }

    fn lorentz(amplitude: DMatrix<f64>) -> GreensProvider {
        let n = amplitude.nrows();
        let names = (0..n).map(|i| format!("p{i}")).collect();
        let t = LorentzianTerm::new(2.0, 0.1, amplitude).unwrap();
        GreensProvider::Lorentzian(LorentzianModel::new(names, vec![t]).unwrap())
    }

    #[test]
    fn zero_kernel_zero_coupling() {
        let p = lorentz(DMatrix::zeros(1, 1));
        let e = EmitterSet::new(vec![Emitter::new("a", 0, 0.1, 2.0)]).unwrap();
        assert_eq!(coupling_normalization(&p, &e, 0, 2.0).unwrap(), 0.0);
        assert_eq!(spectral_density(&p, &e, 0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn doubling_dipole_quadruples_density() {
        let (p, _) = free_pair(10.0);
        let e1 = EmitterSet::new(vec![Emitter::new("a", 0, 0.1, 2.0)]).unwrap();
        let e2 = EmitterSet::new(vec![Emitter::new("a", 0, 0.2, 2.0)]).unwrap();
        let j1 = spectral_density(&p, &e1, 0, 2.0).unwrap();
        let j2 = spectral_density(&p, &e2, 0, 2.0).unwrap();
        assert!((j2 / j1 - 4.0).abs() < 1e-14);
    }

    #[test]
    fn single_emitter_overlap_is_one() {
        let (p, _) = free_pair(10.0);
        let e = EmitterSet::new(vec![Emitter::new("a", 0, 0.1, 2.0)]).unwrap();
        let o = overlap_matrix(&p, &e, 2.0).unwrap();
        assert_eq!(o.s, DMatrix::identity(1, 1));
        let b = ModeBasis::build(&p, &e, 2.0, &Orthogonalization::cholesky()).unwrap();
        assert_eq!(b.g[(0, 0)], b.couplings[0]);
    }

    #[test]
    fn coincident_emitters_fully_overlap() {
        let (p, _) = free_pair(0.0);
        let e = EmitterSet::new(vec![Emitter::new("a", 0, 0.1, 2.0), Emitter::new("b", 1, 0.1, 2.0)])
            .unwrap();
        let o = overlap_matrix(&p, &e, 2.0).unwrap();
        assert!((o.s[(0, 1)] - 1.0).abs() < 1e-10);
        let b = ModeBasis::build(&p, &e, 2.0, &Orthogonalization::lowdin()).unwrap();
        assert_eq!(b.rank, 1);
    }

    #[test]
    fn decoupled_emitter_is_excluded() {
        let a = DMatrix::from_row_slice(2, 2, &[1e9, 0.0, 0.0, 0.0]);
        let p = lorentz(a);
        let e = EmitterSet::new(vec![Emitter::new("a", 0, 0.1, 2.0), Emitter::new("b", 1, 0.1, 2.0)])
            .unwrap();
        let b = ModeBasis::build(&p, &e, 2.0, &Orthogonalization::cholesky()).unwrap();
        assert_eq!(b.active, vec![true, false]);
        assert_eq!(b.rank, 1);
        assert_eq!(b.g[(1, 0)], 0.0);
        assert!(b.gram_error() < 1e-10 * b.couplings[0].powi(2));
    }

    #[test]
    fn vanishing_diagonal_with_offdiagonal_is_inconsistent() {
        let a = DMatrix::from_row_slice(2, 2, &[1e9, 1e7, 1e7, 0.0]);
        let p = lorentz(a);
        let e = EmitterSet::new(vec![Emitter::new("a", 0, 0.1, 2.0), Emitter::new("b", 1, 0.1, 2.0)])
            .unwrap();
        assert!(matches!(overlap_matrix(&p, &e, 2.0), Err(Error::DataConsistency(_))));
    }

    #[test]
    fn strongly_negative_diagonal_is_inconsistent() {
        let p = lorentz(DMatrix::from_element(1, 1, -1.0));
        let e = EmitterSet::new(vec![Emitter::new("a", 0, 0.1, 2.0)]).unwrap();
        assert!(matches!(coupling_normalization(&p, &e, 0, 2.0), Err(Error::DataConsistency(_))));
    }

    #[test]
    fn identity_overlap_gives_diagonal_coupling() {
        let a = DMatrix::from_row_slice(2, 2, &[4e9, 0.0, 0.0, 1e9]);
        let p = lorentz(a);
        let e = EmitterSet::new(vec![Emitter::new("a", 0, 0.1, 2.0), Emitter::new("b", 1, 0.1, 2.0)])
            .unwrap();
        for cfg in [Orthogonalization::cholesky(), Orthogonalization::lowdin()] {
            let b = ModeBasis::build(&p, &e, 2.0, &cfg).unwrap();
            assert_eq!(b.g[(0, 1)], 0.0);
            assert_eq!(b.g[(1, 0)], 0.0);
            assert_eq!(b.g[(0, 0)], b.couplings[0]);
            assert!((b.couplings[0] / b.couplings[1] - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn invariants_on_free_space_pair() {
        let (p, e) = free_pair(30.0);
        for k in 0..50 {
            let omega = 0.5 + 0.11 * k as f64;
            let ch = ModeBasis::build(&p, &e, omega, &Orthogonalization::cholesky()).unwrap();
            let lo = ModeBasis::build(&p, &e, omega, &Orthogonalization::lowdin()).unwrap();
            for b in [&ch, &lo] {
                assert!(b.orthonormality_error() <= 1e-10);
                let scale = max_abs(&b.coupling_gram());
                assert!(b.gram_error() <= 1e-10 * scale);
            }
            assert_eq!(ch.g[(0, 1)], 0.0);
            assert!(max_abs(&(&lo.v - lo.v.transpose())) <= 1e-12);
            assert!(max_abs(&(ch.coupling_gram() - lo.coupling_gram())) <= 1e-12 * max_abs(&ch.coupling_gram()));
        }
    }

    #[test]
    fn rejects_bad_emitters() {
        assert!(EmitterSet::new(vec![]).is_err());
        assert!(EmitterSet::new(vec![Emitter::new("a", 0, -0.1, 2.0)]).is_err());
        assert!(EmitterSet::new(vec![Emitter::new("a", 0, 0.1, 0.0)]).is_err());
        assert!(EmitterSet::new(vec![Emitter::new("a", 0, 0.1, 2.0), Emitter::new("a", 1, 0.1, 2.0)])
            .is_err());
    }
}
