//! Orthonormalization of the emitter-centered modes at one frequency.
//!
//! Given the overlap `S`, produce `V` (M×N) and `W` (N×M) with
//! `V S Vᵀ = 1_M`, `V W = 1_M` and `W Wᵀ = S` on the kept subspace, where
//! `M` is the numerical rank of `S`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalues of `S` in `[-NEGATIVE_EIGENVALUE_CLIP, 0)` are treated as
/// noise and clipped to zero; anything below is rejected.
pub const NEGATIVE_EIGENVALUE_CLIP: f64 = 1e-6;
pub const DEFAULT_RANK_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrthogonalizationMethod {
    /// `S = L Lᵀ`, `V = L⁻¹`: emitter i couples only to continua 1..=i.
    GramSchmidtCholesky,
    /// `V = S^{-1/2}`: the symmetric, minimal-change choice.
    Lowdin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orthogonalization {
    pub method: OrthogonalizationMethod,
    /// Eigenvalues of `S` at or below `rank_threshold · λ_max` are dropped.
    pub rank_threshold: f64,
}

impl Orthogonalization {
    pub fn new(method: OrthogonalizationMethod, rank_threshold: f64) -> Result<Self> {
        if !(rank_threshold > 0.0 && rank_threshold < 1.0) {
            return Err(Error::Invalid(format!(
                "rank threshold must lie in (0, 1), got {rank_threshold}"
            )));
        }
        Ok(Self { method, rank_threshold })
    }

    pub fn cholesky() -> Self {
        Self { method: OrthogonalizationMethod::GramSchmidtCholesky, rank_threshold: DEFAULT_RANK_THRESHOLD }
    }

    pub fn lowdin() -> Self {
        Self { method: OrthogonalizationMethod::Lowdin, rank_threshold: DEFAULT_RANK_THRESHOLD }
    }
}

impl Default for Orthogonalization {
    fn default() -> Self {
        Self::cholesky()
    }
}

#[derive(Debug, Clone)]
pub struct Orthogonalized {
    /// M×N transformation from bright modes to orthonormal modes.
    pub v: DMatrix<f64>,
    /// N×M right-inverse of `v`.
    pub w: DMatrix<f64>,
    pub rank: usize,
    /// Eigenvalues of `S` whose directions were dropped (before clipping).
    pub dropped: Vec<f64>,
}

/// Orthonormalizes the modes with overlap `s` (symmetric, unit diagonal).
pub fn orthogonalize(s: &DMatrix<f64>, config: &Orthogonalization) -> Result<Orthogonalized> {
    let n = s.nrows();
    if n == 0 {
        return Ok(Orthogonalized {
            v: DMatrix::zeros(0, 0),
            w: DMatrix::zeros(0, 0),
            rank: 0,
            dropped: Vec::new(),
        });
    }
    let eig = SymmetricEigen::new(s.clone());
    let lambda_max = eig.eigenvalues.max();
    let lambda_min = eig.eigenvalues.min();
    if lambda_min < -NEGATIVE_EIGENVALUE_CLIP {
        return Err(Error::DataConsistency(format!(
            "overlap matrix has eigenvalue {lambda_min:e} below -{NEGATIVE_EIGENVALUE_CLIP:e}"
        )));
    }
    let cutoff = config.rank_threshold * lambda_max;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let kept: Vec<usize> = order.iter().copied().filter(|&k| eig.eigenvalues[k] > cutoff).collect();
    let dropped: Vec<f64> =
        order.iter().filter(|&&k| eig.eigenvalues[k] <= cutoff).map(|&k| eig.eigenvalues[k]).collect();
    let rank = kept.len();

    let full_rank = rank == n;
    match config.method {
        OrthogonalizationMethod::Lowdin => {
            let mut u = DMatrix::zeros(n, rank);
            for (c, &k) in kept.iter().enumerate() {
                let mut col: DVector<f64> = eig.eigenvectors.column(k).into_owned();
                fix_sign(&mut col);
                u.set_column(c, &col);
            }
            let lam: Vec<f64> = kept.iter().map(|&k| eig.eigenvalues[k]).collect();
            let inv_sqrt = DMatrix::from_diagonal(&DVector::from_iterator(rank, lam.iter().map(|l| 1.0 / l.sqrt())));
            let sqrt = DMatrix::from_diagonal(&DVector::from_iterator(rank, lam.iter().map(|l| l.sqrt())));
            if full_rank {
                let v = &u * &inv_sqrt * u.transpose();
                let w = &u * &sqrt * u.transpose();
                Ok(Orthogonalized { v: symmetrize(v), w: symmetrize(w), rank, dropped })
            } else {
                // Canonical orthonormalization on the retained eigenspace.
                let v = &inv_sqrt * u.transpose();
                let w = &u * &sqrt;
                Ok(Orthogonalized { v, w, rank, dropped })
            }
        }
        OrthogonalizationMethod::GramSchmidtCholesky => {
            if full_rank {
                let l = cholesky(s).ok_or_else(|| {
                    Error::DataConsistency("overlap matrix is not positive definite".into())
                })?;
                let v = lower_triangular_inverse(&l);
                return Ok(Orthogonalized { v, w: l, rank, dropped });
            }
            let mut filtered = DMatrix::zeros(n, n);
            for &k in &kept {
                let col = eig.eigenvectors.column(k);
                filtered += eig.eigenvalues[k] * col * col.transpose();
            }
            let (l, v) = reduced_cholesky(&filtered, rank, lambda_max * config.rank_threshold * 1e-3);
            Ok(Orthogonalized { v, w: l, rank, dropped })
        }
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

// Deterministic sign: largest-magnitude component positive.
fn fix_sign(col: &mut DVector<f64>) {
    let mut best = 0;
    for i in 0..col.len() {
        if col[i].abs() > col[best].abs() + 1e-12 {
            best = i;
        }
    }
    if col[best] < 0.0 {
        col.neg_mut();
    }
}

/// Plain Cholesky `S = L Lᵀ`; `None` if a pivot is not positive.
/// Entries above the diagonal are exactly zero.
pub(crate) fn cholesky(s: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = s.nrows();
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = s[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut v = s[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / djj;
        }
    }
    Some(l)
}

/// Inverse of a lower-triangular matrix by forward substitution; stays
/// exactly lower triangular.
pub(crate) fn lower_triangular_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut inv = DMatrix::zeros(n, n);
    for c in 0..n {
        inv[(c, c)] = 1.0 / l[(c, c)];
        for i in c + 1..n {
            let mut acc = 0.0;
            for k in c..i {
                acc += l[(i, k)] * inv[(k, c)];
            }
            inv[(i, c)] = -acc / l[(i, i)];
        }
    }
    inv
}

/// Cholesky factorization of a rank-deficient `S` (already eigenvalue
/// filtered to rank `rank`). Columns are taken in emitter order and a column
/// is skipped when its Gram-Schmidt residual falls below `tol`, so a kept
/// continuum is never coupled to an earlier emitter than the one that
/// introduced it. Returns `(L, V)` with `L` N×M and `V` M×N.
fn reduced_cholesky(s: &DMatrix<f64>, rank: usize, tol: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = s.nrows();
    let mut kept = in_order_pivots(s, tol);
    let in_order = kept.len() == rank;
    if !in_order {
        kept = greedy_pivots(s, rank);
        kept.sort_unstable();
    }
    let skk = DMatrix::from_fn(rank, rank, |i, j| s[(kept[i], kept[j])]);
    // The kept block is positive definite by construction of the pivots.
    let lk = cholesky(&skk).unwrap_or_else(|| {
        let eig = SymmetricEigen::new(skk.clone());
        let floor = eig.eigenvalues.max() * f64::EPSILON * rank as f64;
        let fixed = &skk + DMatrix::identity(rank, rank) * floor;
        cholesky(&fixed).expect("regularized kept block must factor")
    });
    let lk_inv = lower_triangular_inverse(&lk);

    let mut l = DMatrix::zeros(n, rank);
    for r in 0..n {
        if let Some(pos) = kept.iter().position(|&k| k == r) {
            for c in 0..=pos {
                l[(r, c)] = lk[(pos, c)];
            }
            continue;
        }
        // Row r = S_{r,K'} L_{K'}^{-T} with K' the pivots preceding r.
        let upto = if in_order { kept.iter().take_while(|&&k| k < r).count() } else { rank };
        for c in 0..upto {
            let mut acc = 0.0;
            for m in c..upto {
                acc += s[(r, kept[m])] * lk_inv[(m, c)];
            }
            l[(r, c)] = acc;
        }
    }
    let mut v = DMatrix::zeros(rank, n);
    for (c, &k) in kept.iter().enumerate() {
        for row in 0..rank {
            v[(row, k)] = lk_inv[(row, c)];
        }
    }
    (l, v)
}

fn in_order_pivots(s: &DMatrix<f64>, tol: f64) -> Vec<usize> {
    let n = s.nrows();
    // Partial Cholesky columns for accepted pivots.
    let mut cols: Vec<DVector<f64>> = Vec::new();
    let mut kept = Vec::new();
    for j in 0..n {
        let mut residual = s[(j, j)];
        for c in &cols {
            residual -= c[j] * c[j];
        }
        if residual <= tol {
            continue;
        }
        let d = residual.sqrt();
        let mut col = DVector::zeros(n);
        for i in 0..n {
            let mut v = s[(i, j)];
            for c in &cols {
                v -= c[i] * c[j];
            }
            col[i] = v / d;
        }
        cols.push(col);
        kept.push(j);
    }
    kept
}

fn greedy_pivots(s: &DMatrix<f64>, rank: usize) -> Vec<usize> {
    let n = s.nrows();
    let mut residual: Vec<f64> = (0..n).map(|i| s[(i, i)]).collect();
    let mut cols: Vec<DVector<f64>> = Vec::new();
    let mut kept = Vec::new();
    for _ in 0..rank {
        let j = (0..n)
            .filter(|i| !kept.contains(i))
            .max_by(|&a, &b| residual[a].total_cmp(&residual[b]))
            .unwrap();
        let d = residual[j].max(f64::MIN_POSITIVE).sqrt();
        let mut col = DVector::zeros(n);
        for i in 0..n {
            let mut v = s[(i, j)];
            for c in &cols {
                v -= c[i] * c[j];
            }
            col[i] = v / d;
            residual[i] -= col[i] * col[i];
        }
        cols.push(col);
        kept.push(j);
    }
    kept
}
