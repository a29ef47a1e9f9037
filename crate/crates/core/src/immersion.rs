//! Jets of parametrized immersion patches and the extrinsic data built from
//! them: pullback metric, second fundamental form, shape operators, conformal
//! factor and the Gauss-equation curvature tensor.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::bilinear::ComplexStructure;
use crate::error::{GeomError, Result};
use crate::expr::MapExpr;
use crate::jet::Jet;
use crate::linalg::{null_space, GramSpace, RANK_TOL};

/// Axis-aligned box in chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "domain bounds must have equal length");
        Self { lo, hi }
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| {
                let slack = 1e-12 * (1.0 + a.abs().max(b.abs()));
                *v >= a - slack && *v <= b + slack
            })
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Maps `t ∈ [0,1]^d` affinely onto the box.
    pub fn at(&self, t: &[f64]) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(t)
            .map(|((a, b), s)| a + (b - a) * s)
            .collect()
    }

    /// Product of two boxes.
    pub fn product(&self, other: &Domain) -> Domain {
        let mut lo = self.lo.clone();
        lo.extend_from_slice(&other.lo);
        let mut hi = self.hi.clone();
        hi.extend_from_slice(&other.hi);
        Domain { lo, hi }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmbientKind {
    Euclidean,
    /// `diag(1, ..., 1, -1)`.
    Lorentzian,
}

/// A parametrized patch `domain ⊂ R^d -> ambient`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartPatch {
    pub domain: Domain,
    pub ambient: AmbientKind,
    pub map: MapExpr,
}

/// Value and derivatives of a patch at one point.
#[derive(Debug, Clone)]
pub struct PatchJet {
    pub point: Vec<f64>,
    pub value: DVector<f64>,
    /// Columns `∂_i f`.
    pub tangent: DMatrix<f64>,
    /// `∂_i ∂_j f`, flattened as `i * d + j`.
    pub second: Vec<DVector<f64>>,
    /// `∂_i ∂_j ∂_k f`, flattened as `(i * d + j) * d + k`; empty below order 3.
    pub third: Vec<DVector<f64>>,
}

impl ChartPatch {
    pub fn new(domain: Domain, ambient: AmbientKind, map: MapExpr) -> Self {
        Self { domain, ambient, map }
    }

    pub fn chart_dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.map.output_dim()
    }

    pub fn codim(&self) -> usize {
        self.ambient_dim().saturating_sub(self.chart_dim())
    }

    pub fn ambient_space(&self) -> Arc<GramSpace> {
        let n = self.ambient_dim();
        Arc::new(match self.ambient {
            AmbientKind::Euclidean => GramSpace::euclidean(n),
            AmbientKind::Lorentzian => GramSpace::minkowski(n),
        })
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if self.domain.contains(x) {
            Ok(())
        } else {
            Err(GeomError::OutOfDomain(x.to_vec()))
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.check_point(x)?;
        Ok(DVector::from_vec(self.map.eval(x)))
    }

    /// Jet of order `order` (1 to 3) at `x`.
    pub fn jet(&self, x: &[f64], order: u8) -> Result<PatchJet> {
        self.check_point(x)?;
        let d = self.chart_dim();
        let comps = self.map.eval_jets(&Jet::seed(x, order));
        let big_d = comps.len();
        let value = DVector::from_iterator(big_d, comps.iter().map(Jet::value));
        let mut tangent = DMatrix::zeros(big_d, d);
        if order >= 1 {
            for (a, c) in comps.iter().enumerate() {
                for i in 0..d {
                    tangent[(a, i)] = c.d1(i);
                }
            }
        }
        let mut second = Vec::new();
        if order >= 2 {
            for i in 0..d {
                for j in 0..d {
                    second.push(DVector::from_iterator(big_d, comps.iter().map(|c| c.d2(i, j))));
                }
            }
        }
        let mut third = Vec::new();
        if order >= 3 {
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        third.push(DVector::from_iterator(big_d, comps.iter().map(|c| c.d3(i, j, k))));
                    }
                }
            }
        }
        Ok(PatchJet { point: x.to_vec(), value, tangent, second, third })
    }
}

/// `G_ij = <∂_i f, ∂_j f>` in the ambient metric.
pub fn metric_at(patch: &ChartPatch, x: &[f64]) -> Result<DMatrix<f64>> {
    let jet = patch.jet(x, 1)?;
    let space = patch.ambient_space();
    Ok(jet.tangent.transpose() * space.gram() * &jet.tangent)
}

/// Reference metric given as the pullback metric of a designated patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMetric {
    pub patch: ChartPatch,
}

impl ReferenceMetric {
    pub fn new(patch: ChartPatch) -> Self {
        Self { patch }
    }

    pub fn metric_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        metric_at(&self.patch, x)
    }
}

/// A chart with a constant complex structure and the Kaehler reference metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KaehlerChart {
    pub j: ComplexStructure,
    pub reference: ReferenceMetric,
}

impl KaehlerChart {
    /// `‖J^T G J − G‖ / ‖G‖` at `x` (zero when `J` is orthogonal).
    pub fn orthogonality_defect(&self, x: &[f64]) -> Result<f64> {
        let g = self.reference.metric_at(x)?;
        let j = self.j.matrix();
        Ok((j.transpose() * &g * j - &g).amax() / g.amax())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalFactor {
    pub lambda: f64,
    pub defect: f64,
}

/// `λ = (tr(G_ref⁻¹ G_f)/d)^{1/2}` and the relative deviation of `G_f` from `λ² G_ref`.
pub fn conformal_factor(
    patch: &ChartPatch,
    reference: &ReferenceMetric,
    x: &[f64],
    tol: f64,
) -> Result<ConformalFactor> {
    let gf = metric_at(patch, x)?;
    let gr = reference.metric_at(x)?;
    let d = gf.nrows() as f64;
    let inv = gr.clone().try_inverse().ok_or(GeomError::TangentDegenerate)?;
    let lam2 = (inv * &gf).trace() / d;
    if lam2 <= 0.0 || !lam2.is_finite() {
        return Err(GeomError::NotConformal(f64::INFINITY));
    }
    let defect = (&gf - gr * lam2).norm() / gf.norm();
    if defect > tol {
        return Err(GeomError::NotConformal(defect));
    }
    Ok(ConformalFactor { lambda: lam2.sqrt(), defect })
}

/// Second fundamental form and frames at one point.
#[derive(Debug, Clone)]
pub struct SffData {
    pub point: Vec<f64>,
    pub position: DVector<f64>,
    pub ambient: Arc<GramSpace>,
    pub tangent: DMatrix<f64>,
    pub metric: DMatrix<f64>,
    pub metric_inv: DMatrix<f64>,
    /// Columns span the normal space; restricted Gram is `normal_gram`.
    pub normal_frame: DMatrix<f64>,
    /// `diag(±1)`, positive entries first.
    pub normal_gram: DMatrix<f64>,
    /// Normal-frame coefficients of `α(e_i, e_j)`, flattened as `i * d + j`.
    pub alpha: Vec<DVector<f64>>,
}

impl SffData {
    pub fn dim(&self) -> usize {
        self.metric.nrows()
    }

    pub fn codim(&self) -> usize {
        self.normal_frame.ncols()
    }

    pub fn normal_space(&self) -> Arc<GramSpace> {
        Arc::new(GramSpace::new(self.normal_gram.clone()).expect("normal Gram is diagonal"))
    }

    pub fn alpha_coeffs(&self, i: usize, j: usize) -> &DVector<f64> {
        &self.alpha[i * self.dim() + j]
    }

    pub fn alpha_ambient(&self, i: usize, j: usize) -> DVector<f64> {
        &self.normal_frame * self.alpha_coeffs(i, j)
    }

    /// Normal-frame coefficients of a normal ambient vector.
    pub fn to_normal_coords(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.normal_gram * self.normal_frame.transpose() * self.ambient.gram() * y
    }

    pub fn to_ambient(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.normal_frame * c
    }

    /// Component of an ambient vector orthogonal to the normal space.
    pub fn tangential_residual(&self, y: &DVector<f64>) -> f64 {
        (self.tangent.transpose() * self.ambient.gram() * y).amax()
    }

    /// Matrix of `A_ξ` in chart coordinates, `ξ` given by normal coefficients.
    pub fn shape_operator(&self, xi: &DVector<f64>) -> DMatrix<f64> {
        let d = self.dim();
        let gx = &self.normal_gram * xi;
        let h = DMatrix::from_fn(d, d, |i, j| self.alpha_coeffs(i, j).dot(&gx));
        &self.metric_inv * h
    }

    pub fn shape_operator_ambient(&self, xi: &DVector<f64>) -> DMatrix<f64> {
        self.shape_operator(&self.to_normal_coords(xi))
    }

    /// Mean curvature vector `(1/d) tr_G α` in normal coefficients.
    pub fn mean_curvature(&self) -> DVector<f64> {
        let d = self.dim();
        let mut h = DVector::zeros(self.codim());
        for i in 0..d {
            for j in 0..d {
                h += self.alpha_coeffs(i, j) * self.metric_inv[(i, j)];
            }
        }
        h / d as f64
    }

    pub fn max_alpha_norm(&self) -> f64 {
        self.alpha.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn alpha_symmetry_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in (i + 1)..d {
                worst = worst.max((self.alpha_coeffs(i, j) - self.alpha_coeffs(j, i)).norm());
            }
        }
        worst / self.max_alpha_norm().max(1.0)
    }
}

/// Gauss formula: `α(e_i, e_j)` is the normal part of `∂_i ∂_j f`.
pub fn sff_at(patch: &ChartPatch, x: &[f64]) -> Result<SffData> {
    let jet = patch.jet(x, 2)?;
    sff_from_jet(&jet, patch.ambient_space())
}

pub fn sff_from_jet(jet: &PatchJet, ambient: Arc<GramSpace>) -> Result<SffData> {
    let d = jet.tangent.ncols();
    let big_d = jet.tangent.nrows();
    let eta = ambient.gram();
    let metric = jet.tangent.transpose() * eta * &jet.tangent;
    let chol = metric.clone().cholesky().ok_or(GeomError::TangentDegenerate)?;
    let metric_inv = chol.inverse();
    let a = jet.tangent.transpose() * eta;
    let n0 = null_space(&a, RANK_TOL);
    if n0.ncols() != big_d - d {
        return Err(GeomError::TangentDegenerate);
    }
    let k = n0.ncols();
    let (normal_frame, normal_gram) = if k == 0 {
        (DMatrix::zeros(big_d, 0), DMatrix::zeros(0, 0))
    } else {
        let m = n0.transpose() * eta * &n0;
        let m = (&m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(m);
        let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&p, &q| eig.eigenvalues[q].partial_cmp(&eig.eigenvalues[p]).unwrap());
        let mut frame = DMatrix::zeros(big_d, k);
        let mut gram = DMatrix::zeros(k, k);
        for (c, &idx) in order.iter().enumerate() {
            let mu = eig.eigenvalues[idx];
            if mu.abs() <= RANK_TOL * scale {
                return Err(GeomError::NormalDegenerate);
            }
            let col = &n0 * eig.eigenvectors.column(idx) / mu.abs().sqrt();
            frame.set_column(c, &col);
            gram[(c, c)] = mu.signum();
        }
        (frame, gram)
    };
    let project = &normal_gram * normal_frame.transpose() * eta;
    let alpha = jet.second.iter().map(|s| &project * s).collect();
    Ok(SffData {
        point: jet.point.clone(),
        position: jet.value.clone(),
        ambient,
        tangent: jet.tangent.clone(),
        metric,
        metric_inv,
        normal_frame,
        normal_gram,
        alpha,
    })
}

/// Fully covariant curvature tensor from the Gauss equation.
#[derive(Debug, Clone)]
pub struct Curvature {
    pub dim: usize,
    /// `R(e_i, e_j, e_k, e_l)`, flattened row-major.
    pub r: Vec<f64>,
    pub metric: DMatrix<f64>,
    pub flat_point: bool,
    pub norm: f64,
}

impl Curvature {
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let d = self.dim;
        self.r[((i * d + j) * d + k) * d + l]
    }

    /// Endomorphism `R(e_i, e_j)` as a matrix: `⟨R(e_i,e_j) e_k, e_l⟩ = R_ijkl`.
    pub fn endomorphism(&self, i: usize, j: usize, metric_inv: &DMatrix<f64>) -> DMatrix<f64> {
        let d = self.dim;
        let lowered = DMatrix::from_fn(d, d, |l, k| self.get(i, j, k, l));
        metric_inv * lowered
    }

    /// Largest violation of the four classical curvature symmetries.
    pub fn symmetry_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let r = self.get(i, j, k, l);
                        worst = worst
                            .max((r + self.get(j, i, k, l)).abs())
                            .max((r + self.get(i, j, l, k)).abs())
                            .max((r - self.get(k, l, i, j)).abs())
                            .max((r + self.get(j, k, i, l) + self.get(k, i, j, l)).abs());
                    }
                }
            }
        }
        worst / self.norm.max(1.0)
    }

    /// Sectional curvature of the plane spanned by `e_i`, `e_j`.
    pub fn sectional(&self, i: usize, j: usize) -> f64 {
        let g = &self.metric;
        let area = g[(i, i)] * g[(j, j)] - g[(i, j)] * g[(i, j)];
        self.get(i, j, j, i) / area
    }
}

/// `R(X,Y,Z,T) = ⟨α(X,T), α(Y,Z)⟩ − ⟨α(X,Z), α(Y,T)⟩` in the normal Gram.
///
/// A point is flagged flat when `max|R| ≤ flat_tol · max‖α‖²`.
pub fn curvature_at(sff: &SffData, flat_tol: f64) -> Curvature {
    let d = sff.dim();
    let g = &sff.normal_gram;
    let n2 = d * d;
    let mut pair = vec![0.0; n2 * n2];
    let lowered: Vec<DVector<f64>> = sff.alpha.iter().map(|a| g * a).collect();
    for p in 0..n2 {
        for q in 0..n2 {
            pair[p * n2 + q] = sff.alpha[p].dot(&lowered[q]);
        }
    }
    let idx = |i: usize, j: usize| i * d + j;
    let mut r = vec![0.0; n2 * n2];
    let mut norm = 0.0_f64;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let v = pair[idx(i, l) * n2 + idx(j, k)] - pair[idx(i, k) * n2 + idx(j, l)];
                    r[((i * d + j) * d + k) * d + l] = v;
                    norm = norm.max(v.abs());
                }
            }
        }
    }
    let a = sff.max_alpha_norm();
    Curvature {
        dim: d,
        r,
        metric: sff.metric.clone(),
        flat_point: norm <= flat_tol * (a * a).max(f64::MIN_POSITIVE),
        norm,
    }
}

/// `max_{i,j} ‖J R(e_i,e_j) − R(e_i,e_j) J‖ / max_{i,j} ‖R(e_i,e_j)‖`.
pub fn kaehler_curvature_check(r: &Curvature, j: &ComplexStructure) -> f64 {
    let d = r.dim;
    let inv = r
        .metric
        .clone()
        .try_inverse()
        .expect("curvature metric is positive definite");
    let jm = j.matrix();
    let mut worst = 0.0_f64;
    let mut scale = 0.0_f64;
    for a in 0..d {
        for b in 0..d {
            let e = r.endomorphism(a, b, &inv);
            scale = scale.max(e.norm());
            worst = worst.max((jm * &e - &e * jm).norm());
        }
    }
    if scale == 0.0 {
        0.0
    } else {
        worst / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use approx::assert_relative_eq;

    fn plane_patch() -> ChartPatch {
        let map = MapExpr::components(vec![
            Expr::coord(0) + Expr::coord(1) * 0.5,
            Expr::coord(1),
            Expr::coord(0) * 2.0 - Expr::coord(1),
        ]);
        ChartPatch::new(Domain::cube(2, -1.0, 1.0), AmbientKind::Euclidean, map)
    }

    #[test]
    fn identity_and_dilation_metrics() {
        let id = ChartPatch::new(Domain::cube(3, -1.0, 1.0), AmbientKind::Euclidean, MapExpr::identity(3));
        let g = metric_at(&id, &[0.1, 0.2, 0.3]).unwrap();
        assert!((g - DMatrix::<f64>::identity(3, 3)).amax() < 1e-15);
        let dil = ChartPatch::new(
            Domain::cube(3, -1.0, 1.0),
            AmbientKind::Euclidean,
            MapExpr::components((0..3).map(|i| Expr::coord(i) * 2.0).collect()),
        );
        let g = metric_at(&dil, &[0.1, 0.2, 0.3]).unwrap();
        assert!((g - DMatrix::<f64>::identity(3, 3) * 4.0).amax() < 1e-15);
    }

    #[test]
    fn out_of_domain_rejected() {
        let err = metric_at(&plane_patch(), &[2.0, 0.0]).unwrap_err();
        assert_eq!(err.code(), "OUT_OF_DOMAIN");
    }

    #[test]
    fn affine_plane_has_zero_sff() {
        let sff = sff_at(&plane_patch(), &[0.3, -0.4]).unwrap();
        assert_eq!(sff.codim(), 1);
        assert!(sff.max_alpha_norm() < 1e-15);
        let r = curvature_at(&sff, 1e-8);
        assert!(r.flat_point);
        assert_eq!(r.norm, 0.0);
    }

    #[test]
    fn cylinder_principal_curvatures() {
        // radius-r cylinder (r cos(u/r), r sin(u/r), t): unit speed, A has eigenvalues ±1/r, 0
        let r = 2.5;
        let u = Expr::coord(0) * (1.0 / r);
        let map = MapExpr::components(vec![u.clone().cos() * r, u.sin() * r, Expr::coord(1)]);
        let patch = ChartPatch::new(Domain::cube(2, -1.0, 1.0), AmbientKind::Euclidean, map);
        let sff = sff_at(&patch, &[0.3, 0.2]).unwrap();
        let a = sff.shape_operator(&DVector::from_element(1, 1.0));
        let eig = SymmetricEigen::new((&a + a.transpose()) * 0.5).eigenvalues;
        let mut e: Vec<f64> = eig.iter().map(|v| v.abs()).collect();
        e.sort_by(|p, q| p.partial_cmp(q).unwrap());
        assert_relative_eq!(e[0], 0.0, epsilon = 1e-13);
        assert_relative_eq!(e[1], 1.0 / r, epsilon = 1e-13);
    }

    #[test]
    fn sphere_sectional_curvature() {
        let r = 1.7;
        let (th, ph) = (Expr::coord(0), Expr::coord(1));
        let map = MapExpr::components(vec![
            th.clone().sin() * ph.clone().cos() * r,
            th.clone().sin() * ph.sin() * r,
            th.cos() * r,
        ]);
        let patch = ChartPatch::new(Domain::new(vec![0.3, -1.0], vec![2.5, 1.0]), AmbientKind::Euclidean, map);
        let sff = sff_at(&patch, &[1.1, 0.4]).unwrap();
        let curv = curvature_at(&sff, 1e-8);
        assert!(!curv.flat_point);
        assert_relative_eq!(curv.sectional(0, 1), 1.0 / (r * r), epsilon = 1e-12);
        assert!(curv.symmetry_defect() < 1e-12);
    }

    #[test]
    fn shape_operator_identity() {
        let map = MapExpr::components(vec![
            Expr::coord(0),
            Expr::coord(1),
            Expr::coord(0).pow(2.0) * 0.5 + Expr::coord(0) * Expr::coord(1) * 0.3 - Expr::coord(1).pow(3.0),
            Expr::coord(0).sin() * Expr::coord(1),
        ]);
        let patch = ChartPatch::new(Domain::cube(2, -1.0, 1.0), AmbientKind::Euclidean, map);
        let sff = sff_at(&patch, &[0.2, 0.5]).unwrap();
        let xi = DVector::from_vec(vec![0.7, -1.3]);
        let a = sff.shape_operator(&xi);
        let ga = &sff.metric * &a;
        for i in 0..2 {
            for j in 0..2 {
                let pairing = sff.alpha_coeffs(i, j).dot(&(&sff.normal_gram * &xi));
                assert_relative_eq!(ga[(j, i)], pairing, epsilon = 1e-13);
            }
        }
        assert!(sff.alpha_symmetry_defect() < 1e-14);
    }

    #[test]
    fn non_conformal_shear_rejected() {
        let id = ChartPatch::new(Domain::cube(2, -1.0, 1.0), AmbientKind::Euclidean, MapExpr::identity(2));
        let shear = ChartPatch::new(
            Domain::cube(2, -1.0, 1.0),
            AmbientKind::Euclidean,
            MapExpr::components(vec![Expr::coord(0) + Expr::coord(1) * 0.5, Expr::coord(1)]),
        );
        let reference = ReferenceMetric::new(id.clone());
        let ok = conformal_factor(&id, &reference, &[0.1, 0.1], 1e-9).unwrap();
        assert_eq!(ok.lambda, 1.0);
        assert_eq!(ok.defect, 0.0);
        let err = conformal_factor(&shear, &reference, &[0.1, 0.1], 1e-9).unwrap_err();
        assert_eq!(err.code(), "NOT_CONFORMAL");
    }
}
