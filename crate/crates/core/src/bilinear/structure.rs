use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{flatness_defect, j_couple, span_and_kernel, BilinearFormTensor, ComplexStructure};
use crate::error::{GeomError, Result};
use crate::linalg::{null_partner, GramSpace, Subspace};
use crate::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseTag {
    #[serde(rename = "NONDEG_L")]
    NondegL,
    #[serde(rename = "DEG_L")]
    DegL,
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseTag::NondegL => "NONDEG_L",
            CaseTag::DegL => "DEG_L",
        })
    }
}

/// Decomposition of the target of a symmetric `α` whose J-coupling is flat.
#[derive(Debug, Clone)]
pub struct StructureReport {
    pub s: usize,
    pub case_tag: CaseTag,
    /// Projection of the radical of `S(β)` on the first factor.
    pub l_basis: Subspace,
    /// `span{δ, ζ}` (DEG_L), zero otherwise.
    pub u0_basis: Subspace,
    /// Space-like part of `L` (DEG_L) or `L` itself (NONDEG_L); orthonormal columns.
    pub u1_basis: Subspace,
    pub u2_basis: Subspace,
    pub delta: Option<DVector<f64>>,
    pub zeta: Option<DVector<f64>>,
    pub alpha1_symmetry_defect: f64,
    pub delta_orthogonality_defect: f64,
    /// `dim N(α₂) ∩ J N(α₂)`.
    pub dim_delta: usize,
    /// `n − 2(p − s)`.
    pub delta_bound: i64,
    pub dim_n_beta: usize,
    pub residuals: BTreeMap<String, f64>,
}

fn nonzero(v: &DVector<f64>) -> bool {
    v.amax() > 0.0
}

/// Unit Euclidean norm, first non-negligible coordinate positive.
fn canonical_direction(v: &DVector<f64>) -> DVector<f64> {
    let u = v / v.norm();
    let lead = u.iter().copied().find(|c| c.abs() > 1e-9).unwrap_or(1.0);
    if lead < 0.0 {
        -u
    } else {
        u
    }
}

fn exchange_defect(alpha: &BilinearFormTensor, j: &ComplexStructure, scale: f64) -> f64 {
    let rot = alpha.precompose_j(j);
    let n = alpha.domain_dim();
    let mut worst = 0.0_f64;
    for a in 0..n {
        for b in 0..n {
            // α(e_a, J e_b) against α(J e_a, e_b) = α(e_b, J e_a)
            worst = worst.max((rot.get(a, b) - rot.get(b, a)).norm());
        }
    }
    worst / scale
}

fn delta_dimension(alpha2: &BilinearFormTensor, j: &ComplexStructure, tol: &Tolerances, scale: f64) -> Result<usize> {
    let n = alpha2.domain_dim();
    if alpha2.max_norm() <= tol.rank * scale {
        return Ok(n);
    }
    let beta2 = j_couple(alpha2, j, tol.sym)?;
    Ok(span_and_kernel(&beta2, tol.rank).1.dim())
}

/// Splits `U` along the radical of `S(β)` for `β = (α, α∘(1,J))`.
///
/// `zeta_hint` is a null vector expected to pair nontrivially with `δ`
/// (the position vector in the light-cone pipeline); when usable it becomes
/// `ζ` and fixes the scale of `δ` through `⟨δ, ζ⟩ = 1`.
pub fn structure_decompose(
    alpha: &BilinearFormTensor,
    j: &ComplexStructure,
    zeta_hint: Option<&DVector<f64>>,
    tol: &Tolerances,
) -> Result<StructureReport> {
    let n = alpha.domain_dim();
    let p = alpha.target_dim();
    let u_space = alpha.target().clone();
    let sig = u_space.signature();
    if !(sig.is_positive_definite() || sig.is_lorentzian()) {
        return Err(GeomError::BadSignature(sig.as_tuple()));
    }
    let sym_defect = alpha.symmetry_defect();
    let alpha = alpha.symmetrized(tol.sym)?;
    let beta = j_couple(&alpha, j, tol.sym)?;
    let flat = flatness_defect(&beta);
    if flat > tol.flat {
        return Err(GeomError::NotFlat(flat));
    }
    let (s_beta, n_beta) = span_and_kernel(&beta, tol.rank);
    let nullity_bound = n as i64 - 2 * p as i64 - 1;
    if n_beta.dim() as i64 > nullity_bound {
        return Err(GeomError::NullityTooLarge { dim: n_beta.dim(), bound: nullity_bound });
    }
    let radical = s_beta.radical(tol.rank);
    let s = radical.dim();
    if s == 0 {
        return Err(GeomError::EmptyRadical);
    }
    if s % 2 == 1 {
        return Err(GeomError::OddRadical(s));
    }
    let first = radical.basis().rows(0, p).into_owned();
    let l = Subspace::span(u_space.clone(), &first, tol.rank);
    let rad_l = l.radical(tol.rank);
    let alpha_scale = alpha.max_norm().max(1.0);
    let delta_bound = n as i64 - 2 * (p as i64 - s as i64);

    let mut residuals = BTreeMap::new();
    residuals.insert("flatness".to_string(), flat);
    residuals.insert("input_asymmetry".to_string(), sym_defect);

    let zero = Subspace::zero(u_space.clone());
    let report = if rad_l.dim() == 0 {
        if l.dim() != s {
            return Err(GeomError::AssertionFailed(format!("nondegenerate L has dim {} but s = {s}", l.dim())));
        }
        let lsig = crate::linalg::signature(&l.restricted_gram(), tol.rank)?;
        if lsig.plus != s {
            return Err(GeomError::AssertionFailed(format!(
                "nondegenerate L is not positive definite (signature {:?})",
                lsig.as_tuple()
            )));
        }
        let u1 = orthonormal_positive_part(&l, tol)?;
        let u2 = l.orthogonal_complement(tol.rank);
        let alpha1 = alpha.map_values(u_space.clone(), &u1.projector(tol.rank)?);
        let alpha2 = alpha.map_values(u_space.clone(), &u2.projector(tol.rank)?);
        let a1 = exchange_defect(&alpha1, j, alpha_scale);
        let dim_delta = delta_dimension(&alpha2, j, tol, alpha_scale)?;
        residuals.insert("alpha1_exchange".to_string(), a1);
        StructureReport {
            s,
            case_tag: CaseTag::NondegL,
            l_basis: l,
            u0_basis: zero,
            u1_basis: u1,
            u2_basis: u2,
            delta: None,
            zeta: None,
            alpha1_symmetry_defect: a1,
            delta_orthogonality_defect: 0.0,
            dim_delta,
            delta_bound,
            dim_n_beta: n_beta.dim(),
            residuals,
        }
    } else {
        if rad_l.dim() > 1 {
            return Err(GeomError::AssertionFailed(format!(
                "radical of L has dimension {} in a Lorentzian space",
                rad_l.dim()
            )));
        }
        let raw = rad_l.vector(0);
        let mut u1_vecs = positive_part_vectors(&l, tol)?;
        if u1_vecs.len() + 2 != s {
            return Err(GeomError::AssertionFailed(format!(
                "space-like part of L has dim {} but s = {s}",
                u1_vecs.len()
            )));
        }
        let (delta, zeta) = match zeta_hint.filter(|h| usable_hint(h, &raw, &u_space, tol)) {
            Some(h) => {
                let delta = &raw / u_space.inner(h, &raw);
                for u in u1_vecs.iter_mut() {
                    let c = u_space.inner(u, h);
                    *u -= &delta * c;
                }
                (delta, h.clone())
            }
            None => {
                let delta = canonical_direction(&raw);
                let u1 = Subspace::from_vectors(u_space.clone(), &u1_vecs, tol.rank);
                let zeta = null_partner(&delta, &u_space, &u1, tol.rank)?;
                (delta, zeta)
            }
        };
        // keep the orthonormal columns; `from_vectors` would re-base them
        let u1 = columns_subspace(&u_space, &u1_vecs, tol)?;
        let u0 = Subspace::from_vectors(u_space.clone(), &[delta.clone(), zeta.clone()], tol.rank);
        let u2 = u0.sum(&u1, tol.rank).orthogonal_complement(tol.rank);
        if u2.dim() + s != p {
            return Err(GeomError::AssertionFailed(format!("U2 has dim {} but p - s = {}", u2.dim(), p - s)));
        }
        let alpha1 = alpha.map_values(u_space.clone(), &u1.projector(tol.rank)?);
        let alpha2 = alpha.map_values(u_space.clone(), &u2.projector(tol.rank)?);
        let a1 = exchange_defect(&alpha1, j, alpha_scale);
        let dnorm = delta.norm();
        let gd = u_space.gram() * &delta;
        let ortho = alpha.coeffs().iter().map(|c| c.dot(&gd).abs()).fold(0.0, f64::max) / (alpha_scale * dnorm);
        let dim_delta = delta_dimension(&alpha2, j, tol, alpha_scale)?;
        residuals.insert("alpha1_exchange".to_string(), a1);
        residuals.insert("delta_orthogonality".to_string(), ortho);
        residuals.insert("delta_null".to_string(), u_space.norm_sq(&delta).abs() / (dnorm * dnorm));
        residuals.insert("delta_zeta".to_string(), (u_space.inner(&delta, &zeta) - 1.0).abs());
        residuals.insert("zeta_null".to_string(), u_space.norm_sq(&zeta).abs() / zeta.norm_squared());
        StructureReport {
            s,
            case_tag: CaseTag::DegL,
            l_basis: l,
            u0_basis: u0,
            u1_basis: u1,
            u2_basis: u2,
            delta: Some(delta),
            zeta: Some(zeta),
            alpha1_symmetry_defect: a1,
            delta_orthogonality_defect: ortho,
            dim_delta,
            delta_bound,
            dim_n_beta: n_beta.dim(),
            residuals,
        }
    };
    if (report.dim_delta as i64) < delta_bound {
        return Err(GeomError::AssertionFailed(format!(
            "dim Delta = {} is below n - 2(p - s) = {delta_bound}",
            report.dim_delta
        )));
    }
    Ok(report)
}

fn usable_hint(h: &DVector<f64>, delta: &DVector<f64>, space: &GramSpace, tol: &Tolerances) -> bool {
    let hn = h.norm();
    if !nonzero(h) {
        return false;
    }
    let scale = space.scale() * hn;
    space.norm_sq(h).abs() <= tol.rank.sqrt() * scale * hn && space.inner(h, delta).abs() > tol.rank.sqrt() * scale * delta.norm()
}

/// Orthonormal (for the ambient form) vectors spanning the positive part of
/// the restricted Gram of `l`. Fails if `l` carries negative directions.
fn positive_part_vectors(l: &Subspace, tol: &Tolerances) -> Result<Vec<DVector<f64>>> {
    let m = l.restricted_gram();
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);
    let cut = tol.rank * l.ambient().scale();
    let mut out = Vec::new();
    let mut order: Vec<usize> = (0..l.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    for i in order {
        let mu = eig.eigenvalues[i];
        if mu < -cut {
            return Err(GeomError::AssertionFailed(format!("L contains a time-like direction ({mu:.3e})")));
        }
        if mu > cut {
            out.push(l.basis() * eig.eigenvectors.column(i) / mu.sqrt());
        }
    }
    Ok(out)
}

fn orthonormal_positive_part(l: &Subspace, tol: &Tolerances) -> Result<Subspace> {
    columns_subspace(l.ambient(), &positive_part_vectors(l, tol)?, tol)
}

fn columns_subspace(space: &Arc<GramSpace>, vecs: &[DVector<f64>], tol: &Tolerances) -> Result<Subspace> {
    let mut m = DMatrix::zeros(space.dim(), vecs.len());
    for (k, v) in vecs.iter().enumerate() {
        m.set_column(k, v);
    }
    Subspace::new(space.clone(), m, tol.rank)
}

impl StructureReport {
    /// Orthonormal vectors spanning `U₁`.
    pub fn u1_vectors(&self) -> Vec<DVector<f64>> {
        (0..self.u1_basis.dim()).map(|k| self.u1_basis.vector(k)).collect()
    }

    pub fn target(&self) -> &Arc<GramSpace> {
        self.l_basis.ambient()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_form_violates_nullity_hypothesis() {
        let target = Arc::new(GramSpace::minkowski(3));
        let alpha = BilinearFormTensor::zero(8, target);
        let err = structure_decompose(&alpha, &ComplexStructure::standard(8), None, &Tolerances::default()).unwrap_err();
        assert_eq!(err.code(), "NULLITY_TOO_LARGE");
    }

    #[test]
    fn split_signature_rejected() {
        let gram = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, -1.0, -1.0]));
        let target = Arc::new(GramSpace::new(gram).unwrap());
        let alpha = BilinearFormTensor::zero(10, target);
        let err = structure_decompose(&alpha, &ComplexStructure::standard(10), None, &Tolerances::default()).unwrap_err();
        assert_eq!(err.code(), "BAD_SIGNATURE");
    }

    #[test]
    fn canonical_direction_sign() {
        let v = DVector::from_vec(vec![0.0, -2.0, 1.0]);
        let c = canonical_direction(&v);
        assert!(c[1] > 0.0);
        assert!((c.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn u1_is_orthonormal_with_and_without_hint() {
        use crate::bilinear::{synth_flat, SynthSpec};
        let (alpha, j, planted) = synth_flat(&SynthSpec::deg_l(12, 5, 4, 10, 9)).unwrap();
        let zeta = planted.zeta.unwrap();
        for hint in [None, Some(&zeta)] {
            let r = structure_decompose(&alpha, &j, hint, &Tolerances::default()).unwrap();
            let u = r.u1_vectors();
            assert_eq!(u.len(), 2);
            let g = r.target();
            for a in 0..2 {
                for b in 0..2 {
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((g.inner(&u[a], &u[b]) - want).abs() < 1e-10);
                }
            }
        }
    }
}
