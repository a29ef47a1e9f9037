//! Vector-valued bilinear forms `V × V -> W` over an indefinite target, and
//! the J-coupled construction `β(X,Y) = (α(X,Y), α(X,JY))`.

mod structure;
mod synth;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::linalg::{null_space, GramSpace, Subspace};
use crate::Tolerances;

pub use structure::{structure_decompose, CaseTag, StructureReport};
pub use synth::{synth_flat, PlantedStructure, SynthSpec};

/// `J ∈ End(R^n)` with `J² = −I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexStructure {
    matrix: DMatrix<f64>,
}

impl ComplexStructure {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n || n % 2 != 0 {
            return Err(GeomError::DimensionMismatch(format!(
                "complex structure must be square of even size, got {}x{}",
                n,
                matrix.ncols()
            )));
        }
        let defect = (&matrix * &matrix + DMatrix::identity(n, n)).amax();
        if defect > 1e-12 * matrix.amax().powi(2).max(1.0) {
            return Err(GeomError::InvalidComplexStructure(defect));
        }
        Ok(Self { matrix })
    }

    /// Coordinates `(x₁, y₁, x₂, y₂, ...)` with `J ∂x_k = ∂y_k`.
    pub fn standard(n: usize) -> Self {
        assert!(n % 2 == 0, "standard complex structure needs even dimension");
        let mut matrix = DMatrix::zeros(n, n);
        for k in 0..n / 2 {
            matrix[(2 * k + 1, 2 * k)] = 1.0;
            matrix[(2 * k, 2 * k + 1)] = -1.0;
        }
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn direct_sum(&self, other: &ComplexStructure) -> ComplexStructure {
        let (a, b) = (self.dim(), other.dim());
        let mut matrix = DMatrix::zeros(a + b, a + b);
        matrix.view_mut((0, 0), (a, a)).copy_from(&self.matrix);
        matrix.view_mut((a, a), (b, b)).copy_from(&other.matrix);
        ComplexStructure { matrix }
    }

    /// `M⁻¹ J M`: the same structure written in the basis given by the columns of `M`.
    pub fn conjugate(&self, m: &DMatrix<f64>) -> Result<ComplexStructure> {
        let inv = m.clone().try_inverse().ok_or(GeomError::DependentBasis)?;
        ComplexStructure::new(inv * &self.matrix * m)
    }

    /// Relative failure of `J` to be orthogonal for the metric `g`.
    pub fn orthogonality_defect(&self, g: &DMatrix<f64>) -> f64 {
        (self.matrix.transpose() * g * &self.matrix - g).amax() / g.amax()
    }
}

/// `β(e_i, e_j)` stored as target coordinates, flattened as `i * n + j`.
#[derive(Debug, Clone)]
pub struct BilinearFormTensor {
    domain_dim: usize,
    target: Arc<GramSpace>,
    coeffs: Vec<DVector<f64>>,
}

impl BilinearFormTensor {
    pub fn new(domain_dim: usize, target: Arc<GramSpace>, coeffs: Vec<DVector<f64>>) -> Result<Self> {
        if coeffs.len() != domain_dim * domain_dim {
            return Err(GeomError::DimensionMismatch(format!(
                "expected {} coefficient vectors, got {}",
                domain_dim * domain_dim,
                coeffs.len()
            )));
        }
        if let Some(bad) = coeffs.iter().find(|c| c.len() != target.dim()) {
            return Err(GeomError::DimensionMismatch(format!(
                "coefficient vector of length {} in a target of dimension {}",
                bad.len(),
                target.dim()
            )));
        }
        if coeffs.iter().any(|c| c.iter().any(|v| !v.is_finite())) {
            return Err(GeomError::DimensionMismatch("non-finite coefficient".into()));
        }
        Ok(Self { domain_dim, target, coeffs })
    }

    pub fn zero(domain_dim: usize, target: Arc<GramSpace>) -> Self {
        let w = target.dim();
        Self { domain_dim, target, coeffs: vec![DVector::zeros(w); domain_dim * domain_dim] }
    }

    /// Builds `β(e_i, e_j) = f(i, j)`.
    pub fn from_fn(domain_dim: usize, target: Arc<GramSpace>, f: impl Fn(usize, usize) -> DVector<f64>) -> Self {
        let mut coeffs = Vec::with_capacity(domain_dim * domain_dim);
        for i in 0..domain_dim {
            for j in 0..domain_dim {
                coeffs.push(f(i, j));
            }
        }
        Self { domain_dim, target, coeffs }
    }

    pub fn domain_dim(&self) -> usize {
        self.domain_dim
    }

    pub fn target(&self) -> &Arc<GramSpace> {
        &self.target
    }

    pub fn target_dim(&self) -> usize {
        self.target.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> &DVector<f64> {
        &self.coeffs[i * self.domain_dim + j]
    }

    pub fn coeffs(&self) -> &[DVector<f64>] {
        &self.coeffs
    }

    /// `β(X, Y)` for arbitrary vectors.
    pub fn apply(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.target_dim());
        for i in 0..self.domain_dim {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..self.domain_dim {
                if y[j] != 0.0 {
                    out.axpy(x[i] * y[j], self.get(i, j), 1.0);
                }
            }
        }
        out
    }

    /// Largest coefficient norm.
    pub fn max_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// The `w × n²` matrix whose columns are the `β(e_i, e_j)`.
    pub fn unfolded(&self) -> DMatrix<f64> {
        let w = self.target_dim();
        DMatrix::from_fn(w, self.coeffs.len(), |a, c| self.coeffs[c][a])
    }

    /// `β(M e_i, M e_j)`: the form in the basis given by the columns of `M`.
    pub fn change_domain_basis(&self, m: &DMatrix<f64>) -> BilinearFormTensor {
        let cols: Vec<DVector<f64>> = m.column_iter().map(|c| c.into_owned()).collect();
        Self::from_fn(m.ncols(), self.target.clone(), |i, j| self.apply(&cols[i], &cols[j]))
    }

    /// Re-expresses values in the target basis given by the columns of `P`
    /// (coefficients `P⁻¹ c`, Gram `Pᵀ G P`).
    pub fn change_target_basis(&self, p: &DMatrix<f64>) -> Result<BilinearFormTensor> {
        let inv = p.clone().try_inverse().ok_or(GeomError::DependentBasis)?;
        let target = Arc::new(self.target.congruent(p)?);
        Ok(Self {
            domain_dim: self.domain_dim,
            target,
            coeffs: self.coeffs.iter().map(|c| &inv * c).collect(),
        })
    }

    /// Applies a linear map `U -> U'` to every value.
    pub fn map_values(&self, target: Arc<GramSpace>, m: &DMatrix<f64>) -> BilinearFormTensor {
        Self { domain_dim: self.domain_dim, target, coeffs: self.coeffs.iter().map(|c| m * c).collect() }
    }

    pub fn add(&self, other: &BilinearFormTensor) -> BilinearFormTensor {
        assert_eq!(self.domain_dim, other.domain_dim);
        Self {
            domain_dim: self.domain_dim,
            target: self.target.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }

    /// `max ‖β(e_i,e_j) − β(e_j,e_i)‖ / max(1, ‖β‖)`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.domain_dim;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).norm());
            }
        }
        worst / self.max_norm().max(1.0)
    }

    /// `(α + αᵀ)/2` when the asymmetry is within `tol`.
    pub fn symmetrized(&self, tol: f64) -> Result<BilinearFormTensor> {
        let defect = self.symmetry_defect();
        if defect > tol {
            return Err(GeomError::NonsymmetricAlpha(defect));
        }
        let n = self.domain_dim;
        Ok(Self::from_fn(n, self.target.clone(), |i, j| (self.get(i, j) + self.get(j, i)) * 0.5))
    }

    /// `α(X, JY)`.
    pub fn precompose_j(&self, j: &ComplexStructure) -> BilinearFormTensor {
        let n = self.domain_dim;
        let jm = j.matrix();
        Self::from_fn(n, self.target.clone(), |a, b| {
            let mut out = DVector::zeros(self.target_dim());
            for k in 0..n {
                if jm[(k, b)] != 0.0 {
                    out.axpy(jm[(k, b)], self.get(a, k), 1.0);
                }
            }
            out
        })
    }

    /// All pairings `⟨β(e_i,e_j), β(e_k,e_l)⟩` as an `n² × n²` matrix.
    pub fn pairings(&self) -> DMatrix<f64> {
        let c = self.unfolded();
        c.transpose() * self.target.gram() * c
    }

    fn pairing_scale(&self) -> f64 {
        let m = self.max_norm();
        (m * m * self.target.scale()).max(1.0)
    }
}

/// Max over basis 4-tuples of `|⟨β(X,Y),β(Z,T)⟩ − ⟨β(X,T),β(Z,Y)⟩|`,
/// normalized by `max(1, ‖β‖²)`.
pub fn flatness_defect(beta: &BilinearFormTensor) -> f64 {
    let n = beta.domain_dim;
    let n2 = n * n;
    let p = beta.pairings();
    let mut worst = 0.0_f64;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                for t in 0..n {
                    let v = p[(x * n + y, z * n + t)] - p[(x * n + t, z * n + y)];
                    worst = worst.max(v.abs());
                }
            }
        }
    }
    debug_assert_eq!(p.nrows(), n2);
    worst / beta.pairing_scale()
}

/// Max over all pairings `|⟨β(X,Y),β(Z,T)⟩|`, normalized like [`flatness_defect`].
pub fn nullity_defect(beta: &BilinearFormTensor) -> f64 {
    beta.pairings().amax() / beta.pairing_scale()
}

/// `S(β)` (span of the values, inside the target) and `N(β)` (right kernel,
/// inside a Euclidean copy of `V`).
pub fn span_and_kernel(beta: &BilinearFormTensor, tol: f64) -> (Subspace, Subspace) {
    let n = beta.domain_dim;
    let w = beta.target_dim();
    let s = Subspace::span(beta.target.clone(), &beta.unfolded(), tol);
    // rows (i, a), columns j: Y ↦ β(·, Y)
    let m = DMatrix::from_fn(n * w, n, |r, j| beta.get(r / w, j)[r % w]);
    let v = Arc::new(GramSpace::euclidean(n));
    let kernel = if m.amax() == 0.0 {
        Subspace::whole(v)
    } else {
        Subspace::new(v, null_space(&m, tol), tol).expect("null space basis is orthonormal")
    };
    (s, kernel)
}

/// `β(X,Y) = (α(X,Y), α(X,JY))` into `U ⊕ U` with the form `G_U ⊕ (−G_U)`.
pub fn j_couple(alpha: &BilinearFormTensor, j: &ComplexStructure, sym_tol: f64) -> Result<BilinearFormTensor> {
    if j.dim() != alpha.domain_dim {
        return Err(GeomError::DimensionMismatch(format!(
            "J acts on R^{}, form is defined on R^{}",
            j.dim(),
            alpha.domain_dim
        )));
    }
    let alpha = alpha.symmetrized(sym_tol)?;
    let target = Arc::new(alpha.target.direct_sum(&alpha.target.negated()));
    let rotated = alpha.precompose_j(j);
    let coeffs = alpha
        .coeffs
        .iter()
        .zip(&rotated.coeffs)
        .map(|(a, b)| {
            let mut c = DVector::zeros(2 * a.len());
            c.rows_mut(0, a.len()).copy_from(a);
            c.rows_mut(a.len(), b.len()).copy_from(b);
            c
        })
        .collect();
    Ok(BilinearFormTensor { domain_dim: alpha.domain_dim, target, coeffs })
}

/// Outcome of checking the bound `dim N(β) ≥ n − 2p` for nondegenerate `S(β)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostumRecord {
    pub applicable: bool,
    pub n: usize,
    pub p: usize,
    pub dim_n: usize,
    pub bound: i64,
    pub nondegenerate: bool,
    pub satisfied: bool,
}

pub fn costum_verify(alpha: &BilinearFormTensor, j: &ComplexStructure, tol: &Tolerances) -> Result<CostumRecord> {
    let n = alpha.domain_dim;
    let p = alpha.target_dim();
    let bound = n as i64 - 2 * p as i64;
    let applicable = 2 * p < n && (1..=5).contains(&p);
    let mut rec = CostumRecord { applicable, n, p, dim_n: 0, bound, nondegenerate: false, satisfied: false };
    let beta = j_couple(alpha, j, tol.sym)?;
    let (s, kernel) = span_and_kernel(&beta, tol.rank);
    rec.dim_n = kernel.dim();
    rec.nondegenerate = s.is_nondegenerate(tol.rank);
    if !applicable {
        return Ok(rec);
    }
    let flat = flatness_defect(&beta);
    if flat > tol.flat {
        return Err(GeomError::NotFlat(flat));
    }
    rec.satisfied = !rec.nondegenerate || rec.dim_n as i64 >= bound;
    Ok(rec)
}
