use ecmodes::greens::{GreensProvider, LorentzianModel, LorentzianTerm, PointSpec};
use ecmodes::modes::{orthogonalize, Emitter, EmitterSet, ModeBasis, Orthogonalization};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

fn unit(v: [f64; 3]) -> Option<[f64; 3]> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    (n > 1e-3).then(|| [v[0] / n, v[1] / n, v[2] / n])
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

prop_compose! {
    fn free_space_points(max: usize)(
        raw in prop::collection::vec(
            (prop::array::uniform3(-200.0f64..200.0), prop::array::uniform3(-1.0f64..1.0)),
            2..=max,
        )
    ) -> Vec<PointSpec> {
        raw.into_iter()
            .enumerate()
            .map(|(i, (r, n))| {
                let n = unit(n).unwrap_or([0.0, 0.0, 1.0]);
                PointSpec::new(format!("p{i}"), r, n).unwrap()
            })
            .collect()
    }
}

prop_compose! {
    /// `S = D^{-1/2} A D^{-1/2}` for a random SPD `A = B Bᵀ + δ·1`.
    fn unit_diagonal_spd(n: usize)(
        b in prop::collection::vec(-1.0f64..1.0, n * n),
        delta in 0.05f64..1.0,
    ) -> DMatrix<f64> {
        let b = DMatrix::from_vec(n, n, b);
        let a = &b * b.transpose() + DMatrix::identity(n, n) * delta;
        let d: Vec<f64> = (0..n).map(|i| a[(i, i)].sqrt()).collect();
        DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { a[(i, j)] / (d[i] * d[j]) })
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn free_space_matrix_is_symmetric_and_psd(points in free_space_points(6), w in 0.5f64..6.0) {
        let n = points.len();
        let p = GreensProvider::free_space(points, 1.0).unwrap();
        let idx: Vec<usize> = (0..n).collect();
        let m = p.matrix(&idx, w).unwrap();
        for a in 0..n {
            for b in 0..n {
                let x = p.projected_im_g(a, b, w).unwrap();
                let y = p.projected_im_g(b, a, w).unwrap();
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
        }
        let eig = SymmetricEigen::new(m.clone()).eigenvalues;
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(min >= -1e-9 * m.trace(), "min eigenvalue {min}");
    }

    #[test]
    fn lorentzian_matrix_is_symmetric_and_psd(
        weights in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 1..4),
        centers in prop::collection::vec(1.0f64..3.0, 3),
        w in 0.5f64..4.0,
    ) {
        let terms: Vec<LorentzianTerm> = weights
            .iter()
            .zip(&centers)
            .map(|(u, &c)| LorentzianTerm::rank_one(c, 0.05, u).unwrap())
            .collect();
        let p = GreensProvider::Lorentzian(
            LorentzianModel::new(vec!["a".into(), "b".into(), "c".into()], terms).unwrap(),
        );
        let m = p.matrix(&[0, 1, 2], w).unwrap();
        prop_assert_eq!(m.clone(), m.transpose());
        let eig = SymmetricEigen::new(m.clone()).eigenvalues;
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(min >= -1e-9 * m.trace().max(f64::MIN_POSITIVE));
    }

    #[test]
    fn cholesky_identities_on_random_overlaps(s in (2usize..7).prop_flat_map(unit_diagonal_spd)) {
        let o = orthogonalize(&s, &Orthogonalization::cholesky()).unwrap();
        let n = s.nrows();
        prop_assert_eq!(o.rank, n);
        let vsv = &o.v * &s * o.v.transpose();
        prop_assert!(max_abs(&(vsv - DMatrix::identity(n, n))) <= 1e-10);
        prop_assert!(max_abs(&(&o.v * &o.w - DMatrix::identity(n, n))) <= 1e-10);
        for i in 0..n {
            for j in i + 1..n {
                prop_assert_eq!(o.w[(i, j)], 0.0);
                prop_assert_eq!(o.v[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn lowdin_is_symmetric(s in (2usize..7).prop_flat_map(unit_diagonal_spd)) {
        let o = orthogonalize(&s, &Orthogonalization::lowdin()).unwrap();
        let n = s.nrows();
        prop_assert!(max_abs(&(&o.v - o.v.transpose())) <= 1e-12);
        let vsv = &o.v * &s * o.v.transpose();
        prop_assert!(max_abs(&(vsv - DMatrix::identity(n, n))) <= 1e-10);
        prop_assert!(SymmetricEigen::new(o.v.clone()).eigenvalues.iter().all(|&l| l > 0.0));
    }

    #[test]
    fn overlap_eigenvalues_within_cauchy_schwarz(points in free_space_points(5), w in 0.5f64..6.0) {
        let n = points.len();
        let p = GreensProvider::free_space(points, 1.0).unwrap();
        let e = EmitterSet::new((0..n).map(|i| Emitter::new(format!("e{i}"), i, 0.1, 2.0)).collect()).unwrap();
        let b = ModeBasis::build(&p, &e, w, &Orthogonalization::cholesky()).unwrap();
        for i in 0..n {
            prop_assert_eq!(b.overlap[(i, i)], 1.0);
            for j in 0..n {
                prop_assert!(b.overlap[(i, j)].abs() <= 1.0 + 1e-10);
            }
        }
        let eig = SymmetricEigen::new(b.overlap.clone()).eigenvalues;
        for l in eig.iter() {
            prop_assert!(*l >= -1e-9 && *l <= n as f64 + 1e-9);
        }
    }

    #[test]
    fn coupling_gram_is_method_independent(points in free_space_points(5), w in 0.5f64..6.0) {
        let n = points.len();
        let p = GreensProvider::free_space(points, 1.0).unwrap();
        let e = EmitterSet::new((0..n).map(|i| Emitter::new(format!("e{i}"), i, 0.1, 2.0)).collect()).unwrap();
        let c = ModeBasis::build(&p, &e, w, &Orthogonalization::cholesky()).unwrap();
        let l = ModeBasis::build(&p, &e, w, &Orthogonalization::lowdin()).unwrap();
        let scale = c.couplings.iter().fold(0.0f64, |a, g| a.max(g * g));
        prop_assert!(max_abs(&(c.coupling_gram() - l.coupling_gram())) <= 1e-12 * scale);
        // Well-separated spectra only: the identities need the dropped
        // eigenvalues to be far below the kept ones.
        let eig = SymmetricEigen::new(c.overlap.clone()).eigenvalues;
        let lmin = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(lmin > 1e-6);
        for b in [&c, &l] {
            prop_assert!(b.gram_error() <= 1e-10 * scale);
            prop_assert!(b.orthonormality_error() <= 1e-10);
        }
    }
}
