//! Linear algebra over real inner-product spaces of arbitrary signature.
//!
//! A [`GramSpace`] is `R^dim` equipped with a symmetric (possibly indefinite,
//! possibly degenerate) Gram matrix. A [`Subspace`] is a list of basis columns
//! inside such a space. Bases are never orthonormalized with respect to the
//! indefinite form: every computation goes through restricted Gram matrices,
//! so null vectors are handled like any other vector. Column spaces extracted
//! by [`Subspace::span`] are Euclidean-orthonormal, which is harmless.
//!
//! Rank decisions all use one relative threshold, [`RANK_TOL`] times the
//! largest singular value (or eigenvalue magnitude) of the matrix at hand.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{GeomError, Result};

/// Default relative threshold for rank and signature decisions.
pub const RANK_TOL: f64 = 1e-8;

/// Absolute floor below which a singular value is always treated as zero.
const ABS_FLOOR: f64 = 1e-13;

/// Sign counts of the eigenvalues of a Gram matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Signature {
    pub plus: usize,
    pub minus: usize,
    pub zero: usize,
}

impl Signature {
    pub fn as_tuple(&self) -> (usize, usize, usize) {
        (self.plus, self.minus, self.zero)
    }

    pub fn dim(&self) -> usize {
        self.plus + self.minus + self.zero
    }

    pub fn is_positive_definite(&self) -> bool {
        self.minus == 0 && self.zero == 0
    }

    /// Exactly one negative direction and no radical.
    pub fn is_lorentzian(&self) -> bool {
        self.minus == 1 && self.zero == 0
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Symmetry defect `max|G - G^T| / max(1, max|G|)`.
pub fn symmetry_defect(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / max_abs(m).max(1.0)
}

/// Eigenvalue sign counts of a symmetric matrix under the relative tolerance.
pub fn signature(gram: &DMatrix<f64>, tol: f64) -> Result<Signature> {
    if gram.nrows() != gram.ncols() {
        return Err(GeomError::DimensionMismatch(format!(
            "Gram matrix is {}x{}",
            gram.nrows(),
            gram.ncols()
        )));
    }
    let defect = symmetry_defect(gram);
    if defect > tol.max(1e-12) {
        return Err(GeomError::Nonsymmetric(defect));
    }
    let n = gram.nrows();
    if n == 0 {
        return Ok(Signature { plus: 0, minus: 0, zero: 0 });
    }
    let sym = (gram + gram.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym).eigenvalues;
    let scale = eig.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let cut = (tol * scale).max(ABS_FLOOR);
    let mut sig = Signature { plus: 0, minus: 0, zero: 0 };
    for &e in eig.iter() {
        if e > cut {
            sig.plus += 1;
        } else if e < -cut {
            sig.minus += 1;
        } else {
            sig.zero += 1;
        }
    }
    Ok(sig)
}

/// One-sided Jacobi SVD: returns `(A V, σ, V)` with `V` orthogonal and the
/// columns of `A V` mutually orthogonal with norms `σ`.
///
/// Used instead of the bidiagonal SVD because the latter loses accuracy on
/// nearly rank-deficient inputs, which is exactly where ranks get decided.
pub fn jacobi_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let c = a.ncols();
    let mut w = a.clone();
    let mut v = DMatrix::identity(c, c);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..c {
            for q in (p + 1)..c {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dot(&w.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for m in [&mut w, &mut v] {
                    for r in 0..m.nrows() {
                        let (x, y) = (m[(r, p)], m[(r, q)]);
                        m[(r, p)] = cs * x - sn * y;
                        m[(r, q)] = sn * x + cs * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma = DVector::from_iterator(c, w.column_iter().map(|col| col.norm()));
    (w, sigma, v)
}

/// Singular values (unordered).
pub fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    if m.nrows() < m.ncols() {
        jacobi_svd(&m.transpose()).1
    } else {
        jacobi_svd(m).1
    }
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    singular_values(m).iter().fold(0.0_f64, |a, v| a.max(*v))
}

/// Euclidean-orthonormal basis of the column span of `m`.
pub fn column_space(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let rows = m.nrows();
    if m.ncols() == 0 || rows == 0 {
        return DMatrix::zeros(rows, 0);
    }
    // columns of the left factor: either normalized columns of A V, or V for Aᵀ
    let (basis, sigma) = if m.ncols() <= rows {
        let (w, sigma, _) = jacobi_svd(m);
        (w, sigma)
    } else {
        let (_, sigma, v) = jacobi_svd(&m.transpose());
        (v, sigma)
    };
    let smax = sigma.iter().fold(0.0_f64, |a, v| a.max(*v));
    let cut = (tol * smax).max(ABS_FLOOR);
    let mut keep: Vec<usize> = (0..sigma.len()).filter(|&k| sigma[k] > cut).collect();
    keep.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).unwrap());
    let normalize = m.ncols() <= rows;
    let mut out = DMatrix::zeros(rows, keep.len());
    for (c, &k) in keep.iter().enumerate() {
        let col = basis.column(k);
        if normalize {
            out.set_column(c, &(col / sigma[k]));
        } else {
            out.set_column(c, &col);
        }
    }
    out
}

/// Euclidean-orthonormal basis of `{x : m x = 0}`.
pub fn null_space(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let cols = m.ncols();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return DMatrix::identity(cols, cols);
    }
    let (_, sigma, v) = jacobi_svd(m);
    let smax = sigma.iter().fold(0.0_f64, |a, v| a.max(*v));
    let cut = (tol * smax).max(ABS_FLOOR);
    let null: Vec<usize> = (0..cols).filter(|&k| sigma[k] <= cut).collect();
    let mut out = DMatrix::zeros(cols, null.len());
    for (c, &k) in null.iter().enumerate() {
        out.set_column(c, &v.column(k));
    }
    out
}

/// Numerical rank under the relative singular-value threshold.
pub fn rank(m: &DMatrix<f64>, tol: f64) -> usize {
    column_space(m, tol).ncols()
}

/// Horizontal concatenation of column blocks with equal row counts.
pub fn hstack(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut c0 = 0;
    for b in blocks {
        out.view_mut((0, c0), (rows, b.ncols())).copy_from(*b);
        c0 += b.ncols();
    }
    out
}

/// `R^dim` with a symmetric bilinear form.
#[derive(Debug, Clone, PartialEq)]
pub struct GramSpace {
    gram: DMatrix<f64>,
    signature: Signature,
}

impl GramSpace {
    pub fn new(gram: DMatrix<f64>) -> Result<Self> {
        Self::with_tol(gram, RANK_TOL)
    }

    pub fn with_tol(gram: DMatrix<f64>, tol: f64) -> Result<Self> {
        let signature = signature(&gram, tol)?;
        let gram = (&gram + gram.transpose()) * 0.5;
        Ok(Self { gram, signature })
    }

    pub fn euclidean(dim: usize) -> Self {
        Self {
            gram: DMatrix::identity(dim, dim),
            signature: Signature { plus: dim, minus: 0, zero: 0 },
        }
    }

    /// `diag(1, ..., 1, -1)` of size `dim`.
    pub fn minkowski(dim: usize) -> Self {
        assert!(dim >= 1, "Minkowski space needs at least one dimension");
        let mut gram = DMatrix::identity(dim, dim);
        gram[(dim - 1, dim - 1)] = -1.0;
        Self {
            gram,
            signature: Signature { plus: dim - 1, minus: 1, zero: 0 },
        }
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * &self.gram * y)[(0, 0)]
    }

    pub fn norm_sq(&self, x: &DVector<f64>) -> f64 {
        self.inner(x, x)
    }

    /// Largest absolute Gram entry, used to make tolerances relative.
    pub fn scale(&self) -> f64 {
        max_abs(&self.gram).max(f64::MIN_POSITIVE)
    }

    /// `self ⊕ other` with block-diagonal Gram.
    pub fn direct_sum(&self, other: &GramSpace) -> GramSpace {
        let (a, b) = (self.dim(), other.dim());
        let mut gram = DMatrix::zeros(a + b, a + b);
        gram.view_mut((0, 0), (a, a)).copy_from(&self.gram);
        gram.view_mut((a, a), (b, b)).copy_from(&other.gram);
        let s1 = self.signature;
        let s2 = other.signature;
        GramSpace {
            gram,
            signature: Signature {
                plus: s1.plus + s2.plus,
                minus: s1.minus + s2.minus,
                zero: s1.zero + s2.zero,
            },
        }
    }

    /// The same space with the form multiplied by `-1`.
    pub fn negated(&self) -> GramSpace {
        GramSpace {
            gram: -&self.gram,
            signature: Signature {
                plus: self.signature.minus,
                minus: self.signature.plus,
                zero: self.signature.zero,
            },
        }
    }

    /// Re-express the form in a new basis given by the columns of `p`: `P^T G P`.
    pub fn congruent(&self, p: &DMatrix<f64>) -> Result<GramSpace> {
        GramSpace::new(p.transpose() * &self.gram * p)
    }
}

/// A linear subspace of a [`GramSpace`], stored as basis columns.
#[derive(Debug, Clone)]
pub struct Subspace {
    ambient: Arc<GramSpace>,
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Wraps an explicit basis, rejecting dependent columns.
    pub fn new(ambient: Arc<GramSpace>, basis: DMatrix<f64>, tol: f64) -> Result<Self> {
        if basis.nrows() != ambient.dim() {
            return Err(GeomError::DimensionMismatch(format!(
                "basis vectors have length {}, ambient dimension is {}",
                basis.nrows(),
                ambient.dim()
            )));
        }
        if rank(&basis, tol) != basis.ncols() {
            return Err(GeomError::DependentBasis);
        }
        Ok(Self { ambient, basis })
    }

    /// Span of arbitrary (possibly dependent) columns.
    pub fn span(ambient: Arc<GramSpace>, vectors: &DMatrix<f64>, tol: f64) -> Self {
        assert_eq!(vectors.nrows(), ambient.dim(), "span: vector length mismatch");
        let basis = column_space(vectors, tol);
        Self { ambient, basis }
    }

    pub fn from_vectors(ambient: Arc<GramSpace>, vectors: &[DVector<f64>], tol: f64) -> Self {
        let d = ambient.dim();
        let mut m = DMatrix::zeros(d, vectors.len());
        for (k, v) in vectors.iter().enumerate() {
            m.set_column(k, v);
        }
        Self::span(ambient, &m, tol)
    }

    pub fn zero(ambient: Arc<GramSpace>) -> Self {
        let d = ambient.dim();
        Self { ambient, basis: DMatrix::zeros(d, 0) }
    }

    pub fn whole(ambient: Arc<GramSpace>) -> Self {
        let d = ambient.dim();
        Self { ambient, basis: DMatrix::identity(d, d) }
    }

    pub fn ambient(&self) -> &Arc<GramSpace> {
        &self.ambient
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn vector(&self, k: usize) -> DVector<f64> {
        self.basis.column(k).into_owned()
    }

    /// `B^T G B`.
    pub fn restricted_gram(&self) -> DMatrix<f64> {
        self.basis.transpose() * self.ambient.gram() * &self.basis
    }

    /// `S ∩ S^⊥`, from the null space of the restricted Gram matrix.
    pub fn radical(&self, tol: f64) -> Subspace {
        let k = self.dim();
        if k == 0 {
            return self.clone();
        }
        let m = self.restricted_gram();
        let m = (&m + m.transpose()) * 0.5;
        let bnorm = spectral_norm(&self.basis);
        let gnorm = spectral_norm(self.ambient.gram());
        let scale = (gnorm * bnorm * bnorm).max(f64::MIN_POSITIVE);
        let eig = SymmetricEigen::new(m);
        let cut = (tol * scale).max(ABS_FLOOR);
        let keep: Vec<usize> = (0..k).filter(|&i| eig.eigenvalues[i].abs() <= cut).collect();
        let mut coeffs = DMatrix::zeros(k, keep.len());
        for (c, &i) in keep.iter().enumerate() {
            coeffs.set_column(c, &eig.eigenvectors.column(i));
        }
        Subspace { ambient: self.ambient.clone(), basis: &self.basis * coeffs }
    }

    /// The zero subspace counts as nondegenerate.
    pub fn is_nondegenerate(&self, tol: f64) -> bool {
        self.radical(tol).dim() == 0
    }

    /// `{x : <x, s> = 0 for all s in S}`.
    pub fn orthogonal_complement(&self, tol: f64) -> Subspace {
        let d = self.ambient.dim();
        if self.dim() == 0 {
            return Subspace::whole(self.ambient.clone());
        }
        let a = self.basis.transpose() * self.ambient.gram();
        let basis = if max_abs(&a) <= ABS_FLOOR {
            DMatrix::identity(d, d)
        } else {
            null_space(&a, tol)
        };
        Subspace { ambient: self.ambient.clone(), basis }
    }

    /// `S + T` inside the same ambient space.
    pub fn sum(&self, other: &Subspace, tol: f64) -> Subspace {
        let stacked = hstack(&[&self.basis, &other.basis]);
        Subspace::span(self.ambient.clone(), &stacked, tol)
    }

    /// Euclidean distance test for membership.
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        let scale = x.norm().max(1.0);
        if self.dim() == 0 {
            return x.norm() <= tol * scale;
        }
        let coeffs = self.basis.transpose() * x;
        let resid = x - &self.basis * coeffs;
        resid.norm() <= tol * scale
    }

    /// The component in `S` of the unique splitting `x = p + q`, `q ⟂ S`.
    ///
    /// Fails with `DegenerateSubspace` when `S ∩ S^⊥ ≠ {0}`: no such splitting
    /// exists and callers must pair against an explicit null partner instead.
    pub fn project_onto(&self, x: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
        if self.dim() == 0 {
            return Ok(DVector::zeros(self.ambient.dim()));
        }
        let rad = self.radical(tol).dim();
        if rad > 0 {
            return Err(GeomError::DegenerateSubspace(rad));
        }
        let m = self.restricted_gram();
        let rhs = self.basis.transpose() * self.ambient.gram() * x;
        let c = m
            .lu()
            .solve(&rhs)
            .ok_or(GeomError::DegenerateSubspace(0))?;
        Ok(&self.basis * c)
    }

    /// Projector matrix onto a nondegenerate subspace (`P x = project_onto(x)`).
    pub fn projector(&self, tol: f64) -> Result<DMatrix<f64>> {
        let d = self.ambient.dim();
        if self.dim() == 0 {
            return Ok(DMatrix::zeros(d, d));
        }
        let rad = self.radical(tol).dim();
        if rad > 0 {
            return Err(GeomError::DegenerateSubspace(rad));
        }
        let m = self.restricted_gram();
        let inv = m.try_inverse().ok_or(GeomError::DegenerateSubspace(0))?;
        Ok(&self.basis * inv * self.basis.transpose() * self.ambient.gram())
    }
}

/// A null vector `ζ` with `<δ, ζ> = 1` orthogonal to `avoid`.
///
/// `δ` must itself be null and orthogonal to `avoid`. The partner is taken as
/// `y - ½<y,y>δ` where `y` is the minimum-norm vector of `avoid^⊥` pairing
/// to one with `δ`.
pub fn null_partner(
    delta: &DVector<f64>,
    space: &Arc<GramSpace>,
    avoid: &Subspace,
    tol: f64,
) -> Result<DVector<f64>> {
    if delta.len() != space.dim() {
        return Err(GeomError::DimensionMismatch("delta length".into()));
    }
    let dnorm = delta.norm();
    if dnorm == 0.0 {
        return Err(GeomError::NoPartner("delta is zero".into()));
    }
    let self_pair = space.norm_sq(delta);
    if self_pair.abs() > tol * space.scale() * dnorm * dnorm {
        return Err(GeomError::NoPartner(format!(
            "delta is not light-like (<delta,delta> = {self_pair:.3e})"
        )));
    }
    let complement = avoid.orthogonal_complement(tol);
    let b = complement.basis();
    let coeffs = b.transpose() * space.gram() * delta;
    let pairing = coeffs.norm_squared();
    if pairing <= tol * space.scale() * dnorm * dnorm {
        return Err(GeomError::NoPartner(
            "delta pairs trivially with the complement of the avoided subspace".into(),
        ));
    }
    let y = (b * coeffs) / pairing;
    let yy = space.norm_sq(&y);
    Ok(&y - delta * (0.5 * yy / space.inner(delta, &y)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hyperbolic_plane() -> Arc<GramSpace> {
        Arc::new(GramSpace::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap())
    }

    #[test]
    fn signature_basic_cases() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        assert_eq!(signature(&d, RANK_TOL).unwrap().as_tuple(), (1, 1, 0));
        assert_eq!(hyperbolic_plane().signature().as_tuple(), (1, 1, 0));
        for m in 1..8 {
            let sig = GramSpace::minkowski(m + 2).signature();
            assert_eq!(sig.as_tuple(), (m + 1, 1, 0));
            let g = GramSpace::minkowski(m + 2);
            assert_eq!(signature(g.gram(), RANK_TOL).unwrap(), sig);
        }
    }

    #[test]
    fn signature_rejects_nonsymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(signature(&m, RANK_TOL), Err(GeomError::Nonsymmetric(_))));
    }

    #[test]
    fn radical_of_null_line_is_itself() {
        let space = Arc::new(GramSpace::minkowski(3));
        let delta = DVector::from_vec(vec![1.0, 0.0, 1.0]);
        let s = Subspace::from_vectors(space, &[delta], RANK_TOL);
        assert_eq!(s.radical(RANK_TOL).dim(), 1);
    }

    #[test]
    fn radical_of_euclidean_line_is_zero() {
        let space = Arc::new(GramSpace::euclidean(3));
        let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let s = Subspace::from_vectors(space, &[e1], RANK_TOL);
        assert_eq!(s.radical(RANK_TOL).dim(), 0);
        assert!(s.is_nondegenerate(RANK_TOL));
    }

    #[test]
    fn radical_of_null_plus_spacelike() {
        // S = span{δ, e}: restricted Gram [[0,0],[0,1]] has null space span{(1,0)},
        // so the radical is span{δ}.
        let space = Arc::new(GramSpace::minkowski(4));
        let delta = DVector::from_vec(vec![1.0, 0.0, 0.0, 1.0]);
        let e = DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]);
        let s = Subspace::from_vectors(space.clone(), &[delta.clone(), e], RANK_TOL);
        let rad = s.radical(RANK_TOL);
        assert_eq!(rad.dim(), 1);
        let r = rad.vector(0);
        let cos = (r.dot(&delta) / (r.norm() * delta.norm())).abs();
        assert_abs_diff_eq!(cos, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn complement_of_whole_space_is_zero() {
        let space = Arc::new(GramSpace::minkowski(5));
        assert_eq!(Subspace::whole(space).orthogonal_complement(RANK_TOL).dim(), 0);
    }

    #[test]
    fn complement_of_null_line_contains_it() {
        let space = Arc::new(GramSpace::minkowski(4));
        let delta = DVector::from_vec(vec![0.0, 1.0, 0.0, 1.0]);
        let s = Subspace::from_vectors(space, &[delta.clone()], RANK_TOL);
        let c = s.orthogonal_complement(RANK_TOL);
        assert_eq!(c.dim(), 3);
        assert!(c.contains(&delta, 1e-10));
    }

    #[test]
    fn complement_in_split_space_pairs_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![1., 1., 1., 1., -1., -1., -1., -1.]));
        let space = Arc::new(GramSpace::new(g).unwrap());
        let v = DMatrix::from_fn(8, 3, |_, _| rng.gen_range(-1.0..1.0));
        let s = Subspace::span(space.clone(), &v, RANK_TOL);
        let c = s.orthogonal_complement(RANK_TOL);
        assert_eq!(c.dim(), 5);
        let pairs = s.basis().transpose() * space.gram() * c.basis();
        assert!(pairs.amax() < 1e-12);
    }

    #[test]
    fn null_partner_hyperbolic() {
        let space = Arc::new(GramSpace::new(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]))).unwrap());
        let delta = DVector::from_vec(vec![1.0, 1.0]);
        let zeta = null_partner(&delta, &space, &Subspace::zero(space.clone()), RANK_TOL).unwrap();
        assert_abs_diff_eq!(zeta[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(zeta[1], -0.5, epsilon = 1e-15);
    }

    #[test]
    fn null_partner_avoiding_spacelike_plane() {
        let space = Arc::new(GramSpace::minkowski(4));
        let delta = DVector::from_vec(vec![1.0, 0.0, 0.0, 1.0]);
        let avoid = Subspace::from_vectors(
            space.clone(),
            &[DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]), DVector::from_vec(vec![0.0, 1.0, 1.0, 0.0])],
            RANK_TOL,
        );
        let zeta = null_partner(&delta, &space, &avoid, RANK_TOL).unwrap();
        assert!(space.norm_sq(&zeta).abs() <= 1e-12);
        assert!((space.inner(&delta, &zeta) - 1.0).abs() <= 1e-12);
        for k in 0..avoid.dim() {
            assert!(space.inner(&avoid.vector(k), &zeta).abs() <= 1e-12);
        }
    }

    #[test]
    fn null_partner_rejects_spacelike() {
        let space = Arc::new(GramSpace::minkowski(3));
        let delta = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let err = null_partner(&delta, &space, &Subspace::zero(space.clone()), RANK_TOL).unwrap_err();
        assert_eq!(err.code(), "NO_PARTNER");
    }

    #[test]
    fn projection_cases() {
        let space = Arc::new(GramSpace::minkowski(4));
        let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let t = DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0]);
        let s = Subspace::from_vectors(space.clone(), &[e1.clone(), t], RANK_TOL);
        let x = DVector::from_vec(vec![0.3, 0.0, 0.0, -2.0]);
        assert!((s.project_onto(&x, RANK_TOL).unwrap() - &x).norm() < 1e-14);
        let y = DVector::from_vec(vec![0.0, 1.0, 2.0, 0.0]);
        assert!(s.project_onto(&y, RANK_TOL).unwrap().norm() < 1e-14);
        let null = Subspace::from_vectors(space, &[DVector::from_vec(vec![1.0, 0.0, 0.0, 1.0])], RANK_TOL);
        assert_eq!(null.project_onto(&x, RANK_TOL).unwrap_err().code(), "DEGENERATE_SUBSPACE");
    }

    #[test]
    fn zero_subspace_is_nondegenerate() {
        let space = Arc::new(GramSpace::minkowski(3));
        assert!(Subspace::zero(space).is_nondegenerate(RANK_TOL));
    }

    #[test]
    fn dependent_basis_rejected() {
        let space = Arc::new(GramSpace::euclidean(3));
        let b = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(Subspace::new(space, b, RANK_TOL), Err(GeomError::DependentBasis)));
    }

    #[test]
    fn column_space_of_nearly_rank_one_block() {
        // a case where the bidiagonal SVD returns a visibly wrong left factor
        let m = DMatrix::from_row_slice(4, 2, &[
            -0.44394746392369616, 0.4383499401982625,
            0.09220132840649524, -0.09103880543877424,
            0.2202402437194801, -0.21746333859061603,
            -0.5022427735277787, 0.4959102317988487,
        ]);
        let cs = column_space(&m, 1e-8);
        assert_eq!(cs.ncols(), 1);
        let col = m.column(0) / m.column(0).norm();
        let u = cs.column(0);
        assert!((u.dot(&col).abs() - 1.0).abs() < 1e-14);
        let (w, sigma, v) = jacobi_svd(&m);
        assert!((&w - &m * &v).amax() < 1e-14);
        assert!((v.transpose() * &v - DMatrix::<f64>::identity(2, 2)).amax() < 1e-14);
        assert!(sigma.min() < 1e-14);
    }
}
