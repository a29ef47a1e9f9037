//! The light-cone model: the umbilical embedding `Ψ` of Euclidean space into
//! the light cone of Lorentzian space, isometric representatives
//! `F = (1/λ) Ψ∘f` of conformal immersions, and the pointwise checks built on
//! them (radial part of the second fundamental form, the null normal field `δ`,
//! congruence of representatives, Gauss equation for the `δ`-free part).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bilinear::{structure_decompose, BilinearFormTensor, CaseTag, ComplexStructure, StructureReport};
use crate::error::{GeomError, Result};
use crate::expr::{Expr, MapExpr};
use crate::immersion::{
    conformal_factor, curvature_at, metric_at, sff_at, AmbientKind, ChartPatch, Domain, ReferenceMetric, SffData,
};
use crate::linalg::{null_partner, GramSpace, Subspace};
use crate::Tolerances;

/// Light-like `v, w` with `⟨v,w⟩ = 1` and an isometry `C: R^m -> {v,w}^⊥`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightConeTriple {
    pub m: usize,
    pub v: DVector<f64>,
    pub w: DVector<f64>,
    pub c: DMatrix<f64>,
}

/// Max entry of `Tᵀ η T − η` for `η = diag(1, ..., 1, −1)`.
pub fn lorentz_defect(t: &DMatrix<f64>) -> f64 {
    let eta = GramSpace::minkowski(t.nrows());
    (t.transpose() * eta.gram() * t - eta.gram()).amax()
}

/// Random Lorentz map of `L^dim` via the Cayley transform `(I − A)⁻¹(I + A)`
/// of `A = η S`, `S` antisymmetric with entries up to `scale`.
pub fn random_lorentz(dim: usize, seed: u64, scale: f64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eta = GramSpace::minkowski(dim);
    loop {
        let mut s = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in (i + 1)..dim {
                let v = rng.gen_range(-scale..scale);
                s[(i, j)] = v;
                s[(j, i)] = -v;
            }
        }
        let a = eta.gram() * s;
        let id = DMatrix::<f64>::identity(dim, dim);
        if let Some(inv) = (&id - &a).try_inverse() {
            let t = inv * (&id + &a);
            if lorentz_defect(&t) < 1e-12 * t.amax().powi(2).max(1.0) {
                return t;
            }
        }
    }
}

impl LightConeTriple {
    /// `v = (e₁ + e_{m+2})/√2`, `w = (e₁ − e_{m+2})/√2`, `C` onto coordinates `2..m+1`.
    pub fn canonical(m: usize) -> Self {
        let dim = m + 2;
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = DVector::zeros(dim);
        let mut w = DVector::zeros(dim);
        v[0] = r;
        v[dim - 1] = r;
        w[0] = r;
        w[dim - 1] = -r;
        let mut c = DMatrix::zeros(dim, m);
        for i in 0..m {
            c[(i + 1, i)] = 1.0;
        }
        Self { m, v, w, c }
    }

    pub fn new(v: DVector<f64>, w: DVector<f64>, c: DMatrix<f64>) -> Result<Self> {
        let m = c.ncols();
        if v.len() != m + 2 || w.len() != m + 2 || c.nrows() != m + 2 {
            return Err(GeomError::DimensionMismatch("triple: v, w and C must live in L^{m+2}".into()));
        }
        let t = Self { m, v, w, c };
        let d = t.defect();
        if d > 1e-12 * t.scale() {
            return Err(GeomError::BadParams(format!("not an admissible triple (defect {d:.3e})")));
        }
        Ok(t)
    }

    fn scale(&self) -> f64 {
        (self.v.amax() * self.w.amax()).max(self.c.amax().powi(2)).max(1.0)
    }

    pub fn ambient(&self) -> GramSpace {
        GramSpace::minkowski(self.m + 2)
    }

    /// Largest violation of the defining pairings.
    pub fn defect(&self) -> f64 {
        let g = self.ambient();
        let eta = g.gram();
        let mut worst = g.norm_sq(&self.v).abs().max(g.norm_sq(&self.w).abs()).max((g.inner(&self.v, &self.w) - 1.0).abs());
        let ctc = self.c.transpose() * eta * &self.c;
        worst = worst.max((ctc - DMatrix::<f64>::identity(self.m, self.m)).amax());
        worst = worst.max((self.c.transpose() * eta * &self.v).amax());
        worst.max((self.c.transpose() * eta * &self.w).amax())
    }

    /// `(Λv, Λw, ΛC)` for a Lorentz map `Λ`.
    pub fn transformed(&self, lambda: &DMatrix<f64>) -> Result<Self> {
        Self::new(lambda * &self.v, lambda * &self.w, lambda * &self.c)
    }

    /// `Ψ(x) = v + Cx − ½‖x‖² w`.
    pub fn psi_point(&self, x: &[f64]) -> DVector<f64> {
        let xv = DVector::from_column_slice(x);
        &self.v + &self.c * &xv - &self.w * (0.5 * xv.norm_squared())
    }

    /// The linear map `(y, l) ↦ (1/l)(v + Cy − ½‖y‖² w)` on `R^m × R_{>0}`,
    /// or `Ψ` itself when `scaled` is false.
    fn cone_map(&self, scaled: bool) -> MapExpr {
        let m = self.m;
        let y: Vec<Expr> = (0..m).map(Expr::coord).collect();
        let comps = (0..m + 2)
            .map(|a| {
                let mut terms = Vec::new();
                if self.v[a] != 0.0 {
                    terms.push(Expr::constant(self.v[a]));
                }
                for i in 0..m {
                    if self.c[(a, i)] != 0.0 {
                        terms.push(y[i].clone() * self.c[(a, i)]);
                    }
                }
                if self.w[a] != 0.0 {
                    terms.push(Expr::norm2(y.clone()) * (-0.5 * self.w[a]));
                }
                let num = if terms.is_empty() { Expr::constant(0.0) } else { Expr::sum(terms) };
                if scaled {
                    num / Expr::coord(m)
                } else {
                    num
                }
            })
            .collect();
        MapExpr::components(comps)
    }
}

/// `Ψ` as a patch over `domain ⊂ R^m`.
pub fn psi(triple: &LightConeTriple, domain: Domain) -> ChartPatch {
    assert_eq!(domain.dim(), triple.m, "psi: domain must be m-dimensional");
    ChartPatch::new(domain, AmbientKind::Lorentzian, triple.cone_map(false))
}

/// Isometric light-cone representative of a conformal immersion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightConeRep {
    /// `F = (1/λ) Ψ∘f`.
    pub patch: ChartPatch,
    pub source: ChartPatch,
    pub lambda: Expr,
    pub reference: ReferenceMetric,
    pub triple: LightConeTriple,
}

/// Builds `F = (1/λ) Ψ∘f` and checks at `check_points` that `f` is conformal
/// to `reference` with the supplied factor `λ`.
pub fn make_rep(
    source: &ChartPatch,
    lambda: &Expr,
    reference: &ReferenceMetric,
    triple: &LightConeTriple,
    check_points: &[Vec<f64>],
) -> Result<LightConeRep> {
    if source.ambient != AmbientKind::Euclidean || source.ambient_dim() != triple.m {
        return Err(GeomError::DimensionMismatch(format!(
            "source maps into R^{}, triple is built for R^{}",
            source.ambient_dim(),
            triple.m
        )));
    }
    let center = [source.domain.center()];
    let points: &[Vec<f64>] = if check_points.is_empty() { &center } else { check_points };
    for x in points {
        let cf = conformal_factor(source, reference, x, 1e-6)?;
        let given = lambda.eval(x);
        let rel = (cf.lambda - given).abs() / cf.lambda;
        if !(rel <= 1e-6) {
            return Err(GeomError::NotConformal(rel));
        }
    }
    let inner = MapExpr::concat(vec![source.map.clone(), MapExpr::components(vec![lambda.clone()])]);
    let map = MapExpr::compose(triple.cone_map(true), inner);
    Ok(LightConeRep {
        patch: ChartPatch::new(source.domain.clone(), AmbientKind::Lorentzian, map),
        source: source.clone(),
        lambda: lambda.clone(),
        reference: reference.clone(),
        triple: triple.clone(),
    })
}

impl LightConeRep {
    pub fn chart_dim(&self) -> usize {
        self.patch.chart_dim()
    }

    pub fn position(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.patch.value(x)
    }

    pub fn sff_at(&self, x: &[f64]) -> Result<SffData> {
        sff_at(&self.patch, x)
    }

    /// Relative deviation of the metric of `F` from the reference metric.
    pub fn metric_deviation(&self, x: &[f64]) -> Result<f64> {
        let gf = metric_at(&self.patch, x)?;
        let gr = self.reference.metric_at(x)?;
        Ok((&gf - &gr).amax() / gr.amax())
    }

    /// The same construction with another triple.
    pub fn with_triple(&self, triple: &LightConeTriple) -> Result<LightConeRep> {
        make_rep(&self.source, &self.lambda, &self.reference, triple, &[])
    }
}

/// The second fundamental form as a bilinear form into the normal space.
pub fn alpha_form(sff: &SffData) -> BilinearFormTensor {
    BilinearFormTensor::new(sff.dim(), sff.normal_space(), sff.alpha.clone()).expect("sff coefficients are consistent")
}

/// `max |⟨α(e_i,e_j), F⟩ + ⟨e_i,e_j⟩| / max|⟨e_i,e_j⟩|`.
pub fn sff_radial_defect(sff: &SffData) -> f64 {
    let d = sff.dim();
    let gf = sff.ambient.gram() * &sff.position;
    let mut worst = 0.0_f64;
    for i in 0..d {
        for j in 0..d {
            let pairing = sff.alpha_ambient(i, j).dot(&gf);
            worst = worst.max((pairing + sff.metric[(i, j)]).abs());
        }
    }
    worst / sff.metric.amax()
}

pub fn sff_radial_check(rep: &LightConeRep, x: &[f64]) -> Result<f64> {
    Ok(sff_radial_defect(&rep.sff_at(x)?))
}

/// `δ(x)` at one point together with the decomposition that produced it.
///
/// When the normal space is a Lorentzian plane `δ` is the other null line;
/// otherwise it is the radical direction of `L` from [`structure_decompose`]
/// with the position vector as null partner. Normalized by `⟨F, δ⟩ = 1`.
pub fn point_delta(
    sff: &SffData,
    j: &ComplexStructure,
    tol: &Tolerances,
) -> Result<(DVector<f64>, Option<StructureReport>)> {
    let f_n = sff.to_normal_coords(&sff.position);
    let space = sff.normal_space();
    if sff.codim() == 2 {
        let zeta = null_partner(&f_n, &space, &Subspace::zero(space.clone()), tol.rank)?;
        return Ok((sff.to_ambient(&zeta), None));
    }
    let report = structure_decompose(&alpha_form(sff), j, Some(&f_n), tol)?;
    if report.case_tag != CaseTag::DegL {
        return Err(GeomError::UnclassifiedPoint(format!("L is nondegenerate (s = {})", report.s)));
    }
    let delta = report.delta.clone().expect("DEG_L reports carry delta");
    let delta = &delta / space.inner(&delta, &f_n);
    Ok((sff.to_ambient(&delta), Some(report)))
}

/// Spread and quality of the pointwise `δ` field over a sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaScan {
    /// Present when the spread is within tolerance.
    pub delta: Option<DVector<f64>>,
    pub mean: DVector<f64>,
    /// `max ‖δ(x) − mean‖ / max(1, ‖mean‖)`.
    pub variance: f64,
    /// `max ‖A_δ‖` (entrywise).
    pub a_delta_defect: f64,
    /// `max |⟨δ, δ⟩|`.
    pub null_defect: f64,
    /// `max |⟨F, δ⟩ − 1|`.
    pub pairing_defect: f64,
    pub samples: usize,
}

/// Computes `δ(x)` at every sample; fails with `UNCLASSIFIED_POINT` if any
/// point does not decompose with a degenerate `L`.
pub fn delta_scan(rep: &LightConeRep, j: &ComplexStructure, points: &[Vec<f64>], tol: &Tolerances) -> Result<DeltaScan> {
    if points.is_empty() {
        return Err(GeomError::BadParams("no sample points".into()));
    }
    let eta = GramSpace::minkowski(rep.patch.ambient_dim());
    let per_point: Vec<(DVector<f64>, f64, f64, f64)> = points
        .par_iter()
        .map(|x| {
            let sff = rep.sff_at(x)?;
            let (delta, _) = point_delta(&sff, j, tol)
                .map_err(|e| GeomError::UnclassifiedPoint(format!("{x:?}: {e}")))?;
            let a = sff.shape_operator_ambient(&delta).amax();
            let null = eta.norm_sq(&delta).abs();
            let pair = (eta.inner(&delta, &sff.position) - 1.0).abs();
            Ok((delta, a, null, pair))
        })
        .collect::<Result<_>>()?;
    let k = per_point.len() as f64;
    let mean = per_point.iter().fold(DVector::zeros(eta.dim()), |acc, p| acc + &p.0) / k;
    let spread = per_point.iter().map(|p| (&p.0 - &mean).norm()).fold(0.0, f64::max);
    let variance = spread / mean.norm().max(1.0);
    Ok(DeltaScan {
        delta: (variance <= tol.var).then(|| mean.clone()),
        mean,
        variance,
        a_delta_defect: per_point.iter().map(|p| p.1).fold(0.0, f64::max),
        null_defect: per_point.iter().map(|p| p.2).fold(0.0, f64::max),
        pairing_defect: per_point.iter().map(|p| p.3).fold(0.0, f64::max),
        samples: per_point.len(),
    })
}

/// [`delta_scan`] with the verdict: `delta` is `None` when the field is not constant.
pub fn delta_detect(rep: &LightConeRep, j: &ComplexStructure, points: &[Vec<f64>], tol: &Tolerances) -> Result<DeltaScan> {
    delta_scan(rep, j, points, tol)
}

/// Frame `[F, ∂_i F, ζ₀, E_k]` at `x`: `ζ₀ = −H − ½⟨H,H⟩F` is the null normal
/// paired to `F`, the `E_k` orthonormalize the values of `α` projected to
/// `{F, ζ₀}^⊥` (lexicographic in `i ≤ j`), completed from the normal frame.
pub fn adapted_frame(patch: &ChartPatch, x: &[f64]) -> Result<DMatrix<f64>> {
    let sff = sff_at(patch, x)?;
    let eta = sff.ambient.clone();
    let big_d = eta.dim();
    let d = sff.dim();
    let f = sff.position.clone();
    let h = sff.to_ambient(&sff.mean_curvature());
    let hf = eta.inner(&h, &f);
    if (hf + 1.0).abs() > 1e-6 {
        return Err(GeomError::FrameDegenerate);
    }
    let zeta0 = -&h - &f * (0.5 * eta.norm_sq(&h));
    let to_l = |y: &DVector<f64>| y - &f * eta.inner(y, &zeta0) - &zeta0 * eta.inner(y, &f);
    let mut es: Vec<DVector<f64>> = Vec::new();
    let scale = sff.max_alpha_norm().max(1.0);
    let mut candidates: Vec<DVector<f64>> = Vec::new();
    for i in 0..d {
        for j in i..d {
            candidates.push(sff.alpha_ambient(i, j));
        }
    }
    let alpha_count = candidates.len();
    for k in 0..sff.codim() {
        candidates.push(sff.normal_frame.column(k).into_owned());
    }
    for (idx, c) in candidates.iter().enumerate() {
        if es.len() == big_d - d - 2 {
            break;
        }
        let mut y = to_l(c);
        for e in &es {
            y -= e * eta.inner(&y, e);
        }
        let n2 = eta.norm_sq(&y);
        let floor = if idx < alpha_count { 1e-8 * scale * scale } else { 1e-8 };
        if n2 > floor {
            es.push(y / n2.sqrt());
        }
    }
    if es.len() != big_d - d - 2 {
        return Err(GeomError::FrameDegenerate);
    }
    let mut frame = DMatrix::zeros(big_d, big_d);
    frame.set_column(0, &f);
    for i in 0..d {
        frame.set_column(1 + i, &sff.tangent.column(i));
    }
    frame.set_column(d + 1, &zeta0);
    for (k, e) in es.iter().enumerate() {
        frame.set_column(d + 2 + k, e);
    }
    Ok(frame)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CongruenceReport {
    /// `max ‖T F(x) − G(x)‖ / (1 + ‖G(x)‖)`.
    pub defect: f64,
    pub lorentz_defect: f64,
    pub metric_deviation: f64,
}

/// Transports the adapted frame of `F` at `base` onto that of `G` and
/// measures how well the resulting linear map carries `F` onto `G`.
pub fn congruence_defect(
    rep_f: &LightConeRep,
    rep_g: &LightConeRep,
    base: &[f64],
    samples: &[Vec<f64>],
) -> Result<CongruenceReport> {
    congruence_defect_patches(&rep_f.patch, &rep_g.patch, base, samples)
}

pub fn congruence_defect_patches(
    f: &ChartPatch,
    g: &ChartPatch,
    base: &[f64],
    samples: &[Vec<f64>],
) -> Result<CongruenceReport> {
    if f.ambient_dim() != g.ambient_dim() || f.chart_dim() != g.chart_dim() {
        return Err(GeomError::DimensionMismatch("representatives live in different spaces".into()));
    }
    let mut metric_deviation = 0.0_f64;
    for x in std::iter::once(&base.to_vec()).chain(samples.iter()) {
        let gf = metric_at(f, x)?;
        let gg = metric_at(g, x)?;
        metric_deviation = metric_deviation.max((&gf - &gg).amax() / gg.amax());
    }
    if metric_deviation > 1e-6 {
        return Err(GeomError::MetricMismatch(metric_deviation));
    }
    let bf = adapted_frame(f, base)?;
    let bg = adapted_frame(g, base)?;
    let inv = bf.try_inverse().ok_or(GeomError::FrameDegenerate)?;
    let t = bg * inv;
    let lorentz = lorentz_defect(&t);
    let defect = samples
        .par_iter()
        .map(|x| -> Result<f64> {
            let fx = f.value(x)?;
            let gx = g.value(x)?;
            Ok((&t * fx - &gx).norm() / (1.0 + gx.norm()))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(CongruenceReport { defect, lorentz_defect: lorentz, metric_deviation })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussCheck {
    /// Max deviation between the curvature from `α_L` and the curvature from `α^F`.
    pub defect: f64,
    /// `|tr α_L| / d` relative to `max(1, ‖α_L‖)`.
    pub mean_curvature_defect: f64,
    /// `max |⟨α^F, δ⟩|`.
    pub a_delta: f64,
}

/// `α_L(X,Y) = α^F(X,Y) − ⟨α^F(X,Y),F⟩δ − ⟨α^F(X,Y),δ⟩F`, the component in
/// `{δ, F}^⊥`, in ambient coordinates.
pub fn alpha_l(sff: &SffData, delta: &DVector<f64>) -> Vec<DVector<f64>> {
    let eta = &sff.ambient;
    let d = sff.dim();
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let a = sff.alpha_ambient(i, j);
            let along_delta = eta.inner(&a, &sff.position);
            let along_f = eta.inner(&a, delta);
            out.push(&a - delta * along_delta - &sff.position * along_f);
        }
    }
    out
}

pub fn gauss_check_alpha_l(rep: &LightConeRep, delta: &DVector<f64>, x: &[f64], flat_tol: f64) -> Result<GaussCheck> {
    let sff = rep.sff_at(x)?;
    gauss_check_from_sff(&sff, delta, flat_tol)
}

pub fn gauss_check_from_sff(sff: &SffData, delta: &DVector<f64>, flat_tol: f64) -> Result<GaussCheck> {
    let eta = &sff.ambient;
    let dn = delta.norm();
    if dn == 0.0 {
        return Err(GeomError::NoDelta("delta is zero".into()));
    }
    if eta.norm_sq(delta).abs() > 1e-6 * dn * dn {
        return Err(GeomError::NoDelta("delta is not light-like".into()));
    }
    if sff.tangential_residual(delta) > 1e-6 * dn * sff.tangent.amax() {
        return Err(GeomError::NoDelta("delta is not normal".into()));
    }
    if (eta.inner(delta, &sff.position) - 1.0).abs() > 1e-6 {
        return Err(GeomError::NoDelta("<F, delta> differs from 1".into()));
    }
    let d = sff.dim();
    let al = alpha_l(sff, delta);
    let gram = eta.gram();
    let n2 = d * d;
    let lowered: Vec<DVector<f64>> = al.iter().map(|a| gram * a).collect();
    let pair = |p: usize, q: usize| al[p].dot(&lowered[q]);
    let curv = curvature_at(sff, flat_tol);
    let mut worst = 0.0_f64;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let r = pair(i * d + l, j * d + k) - pair(i * d + k, j * d + l);
                    worst = worst.max((r - curv.get(i, j, k, l)).abs());
                }
            }
        }
    }
    debug_assert_eq!(al.len(), n2);
    let a_scale = sff.max_alpha_norm().max(1.0);
    let mut h = DVector::zeros(eta.dim());
    for i in 0..d {
        for j in 0..d {
            h += &al[i * d + j] * sff.metric_inv[(i, j)];
        }
    }
    h /= d as f64;
    let al_scale = al.iter().map(|a| eta.norm_sq(a).abs().sqrt()).fold(0.0, f64::max).max(1.0);
    let gd = gram * delta;
    let a_delta = (0..n2).map(|p| sff.alpha_ambient(p / d, p % d).dot(&gd).abs()).fold(0.0, f64::max);
    Ok(GaussCheck {
        defect: worst / (a_scale * a_scale),
        mean_curvature_defect: eta.norm_sq(&h).abs().sqrt() / al_scale,
        a_delta,
    })
}

/// A null `δ' = δ + εη − ½⟨·,·⟩F` with `η ∈ L` a unit vector, still paired
/// to `F` by 1; used as a non-parallel stand-in for `δ`.
pub fn perturbed_delta(sff: &SffData, delta: &DVector<f64>, eps: f64) -> Result<DVector<f64>> {
    let eta = &sff.ambient;
    let f = &sff.position;
    for k in 0..sff.codim() {
        let y = sff.normal_frame.column(k).into_owned();
        let y = &y - delta * eta.inner(&y, f) - f * eta.inner(&y, delta);
        let n2 = eta.norm_sq(&y);
        if n2 > 1e-6 {
            let shifted = delta + y * (eps / n2.sqrt());
            let c = 0.5 * eta.norm_sq(&shifted);
            return Ok(&shifted - f * c);
        }
    }
    Err(GeomError::NoDelta("normal space has no room beside span{F, delta}".into()))
}

/// Shared Lorentzian ambient of a representative.
pub fn ambient_of(rep: &LightConeRep) -> Arc<GramSpace> {
    rep.patch.ambient_space()
}
