use std::sync::Arc;

use approx::assert_relative_eq;
use lightcone::linalg::{jacobi_svd, null_partner, rank, signature, GramSpace, Subspace};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;

fn diag_gram(plus: usize, minus: usize, zero: usize) -> DMatrix<f64> {
    let mut d = DVector::zeros(plus + minus + zero);
    for i in 0..plus {
        d[i] = 1.0;
    }
    for i in plus..plus + minus {
        d[i] = -1.0;
    }
    DMatrix::from_diagonal(&d)
}

/// Well-conditioned invertible matrix from raw entries: identity plus a small perturbation.
fn well_conditioned(n: usize, raw: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| raw[i * n + j] * 0.3 / n as f64 + if i == j { 1.0 } else { 0.0 })
}

fn sizes() -> impl Strategy<Value = (usize, usize, usize)> {
    (0usize..4, 0usize..4, 0usize..3).prop_filter("nonempty", |(p, m, z)| p + m + z > 0)
}

/// Oracle rank: eigenvalues of `AᵀA` above `tol²·max`.
fn eig_rank(a: &DMatrix<f64>, tol: f64) -> usize {
    let ata = a.transpose() * a;
    let eig = SymmetricEigen::new(ata);
    let top = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    eig.eigenvalues.iter().filter(|v| **v > tol * tol * top && **v > 0.0).count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sylvester_inertia_is_invariant(
        (plus, minus, zero) in sizes(),
        raw in prop::collection::vec(-1.0f64..1.0, 100),
    ) {
        let n = plus + minus + zero;
        let p = well_conditioned(n, &raw);
        let g = p.transpose() * diag_gram(plus, minus, zero) * &p;
        let sig = signature(&g, 1e-8).unwrap();
        prop_assert_eq!(sig.as_tuple(), (plus, minus, zero));
    }

    #[test]
    fn radical_of_planted_null_directions(
        k in 1usize..4,
        raw in prop::collection::vec(-1.0f64..1.0, 64),
    ) {
        // split signature (k, k): e_i + f_i are mutually orthogonal null vectors
        let n = 2 * k;
        let mut g = DMatrix::zeros(n, n);
        for i in 0..k {
            g[(i, i)] = 1.0;
            g[(k + i, k + i)] = -1.0;
        }
        let space = Arc::new(GramSpace::new(g.clone()).unwrap());
        // a mixed basis of span{e_i + f_i}, which is totally null
        let mut basis = DMatrix::zeros(n, k);
        for i in 0..k {
            basis[(i, i)] = 1.0;
            basis[(k + i, i)] = 1.0;
        }
        let mix = well_conditioned(k, &raw);
        let sub = Subspace::new(space.clone(), &basis * mix, 1e-8).unwrap();
        let rad = sub.radical(1e-8);
        prop_assert_eq!(rad.dim(), k);
        // oracle: radical vectors are orthogonal to the whole subspace
        let cross = rad.basis().transpose() * &g * sub.basis();
        prop_assert!(cross.amax() < 1e-10);
    }

    #[test]
    fn orthogonal_projection_is_idempotent(
        (plus, minus) in (1usize..4, 0usize..3),
        dim in 1usize..3,
        raw in prop::collection::vec(-1.0f64..1.0, 64),
        xs in prop::collection::vec(-2.0f64..2.0, 8),
    ) {
        let n = plus + minus;
        let dim = dim.min(plus);
        let space = Arc::new(GramSpace::new(diag_gram(plus, minus, 0)).unwrap());
        // positive axes tilted slightly toward a time-like axis
        let mut basis = DMatrix::zeros(n, dim);
        for i in 0..dim {
            basis[(i, i)] = 1.0;
            if minus > 0 {
                basis[(n - 1, i)] = 0.3 * raw[i];
            }
        }
        let sub = Subspace::new(space.clone(), basis, 1e-8).unwrap();
        prop_assume!(sub.is_nondegenerate(1e-8));
        let p = sub.projector(1e-8).unwrap();
        prop_assert!((&p * &p - &p).amax() < 1e-10);
        let x = DVector::from_iterator(n, xs.iter().copied().take(n).chain(std::iter::repeat(0.5)).take(n));
        let r = &x - &p * &x;
        let cross = sub.basis().transpose() * space.gram() * r;
        prop_assert!(cross.amax() < 1e-10);
    }

    #[test]
    fn null_partner_pairings(
        m in 1usize..6,
        raw in prop::collection::vec(-1.0f64..1.0, 8),
    ) {
        // Minkowski space of dim m + 2, δ = e_0 + e_last, avoid = span of some spatial axes
        let n = m + 2;
        let space = Arc::new(GramSpace::minkowski(n));
        let mut delta = DVector::zeros(n);
        delta[0] = 1.0;
        delta[n - 1] = 1.0;
        delta *= 1.0 + raw[0].abs();
        let avoid_dim = ((raw[1].abs() * m as f64) as usize).min(m);
        let mut avoid = DMatrix::zeros(n, avoid_dim);
        for i in 0..avoid_dim {
            avoid[(1 + i, i)] = 1.0;
        }
        let avoid = Subspace::new(space.clone(), avoid, 1e-8).unwrap();
        let zeta = null_partner(&delta, &space, &avoid, 1e-8).unwrap();
        prop_assert!((space.inner(&delta, &zeta) - 1.0).abs() < 1e-12);
        prop_assert!(space.norm_sq(&zeta).abs() < 1e-12);
        let cross = avoid.basis().transpose() * space.gram() * &zeta;
        prop_assert!(cross.amax() < 1e-12);
    }

    #[test]
    fn jacobi_svd_matches_eigen_oracle(
        (r, c) in (1usize..7, 1usize..7),
        k in 1usize..4,
        raw in prop::collection::vec(-1.0f64..1.0, 120),
    ) {
        // rank ≤ k product, stressing nearly dependent columns
        let a = DMatrix::from_fn(r, k, |i, j| raw[i * 4 + j]);
        let b = DMatrix::from_fn(k, c, |i, j| raw[60 + i * 7 + j]);
        let m = a * b;
        let (av, sigma, v) = jacobi_svd(&m);
        prop_assert!((&av * v.transpose() - &m).amax() < 1e-12 * (1.0 + m.amax()));
        let eig = SymmetricEigen::new(m.transpose() * &m);
        let mut want: Vec<f64> = eig.eigenvalues.iter().map(|v| v.max(0.0).sqrt()).collect();
        let mut got: Vec<f64> = sigma.iter().copied().collect();
        want.sort_by(|x, y| y.partial_cmp(x).unwrap());
        got.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() < 1e-7 * (1.0 + want[0]));
        }
        prop_assert_eq!(rank(&m, 1e-8), eig_rank(&m, 1e-6));
    }
}

#[test]
fn gram_space_sum_and_negation() {
    let a = GramSpace::minkowski(3);
    let b = a.direct_sum(&a.negated());
    assert_eq!(b.signature().as_tuple(), (3, 3, 0));
    let x = DVector::from_vec(vec![1.0, 2.0, 3.0, 1.0, 2.0, 3.0]);
    assert_relative_eq!(b.norm_sq(&x), 0.0);
}

#[test]
fn indefinite_signature_rejects_asymmetric_input() {
    let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
    assert_eq!(signature(&m, 1e-8).unwrap_err().code(), "NONSYMMETRIC");
}
