//! Example conformal immersions of Kaehler manifolds with exact conformal
//! factors: cylinders over minimal surfaces, extrinsic products, holomorphic
//! graphs, their images under Moebius transformations, and a flat-annulus
//! pair used as a negative control.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bilinear::ComplexStructure;
use crate::error::{GeomError, Result};
use crate::expr::{Expr, MapExpr};
use crate::immersion::{AmbientKind, ChartPatch, Domain, KaehlerChart, ReferenceMetric};
use crate::lightcone::{make_rep, LightConeRep, LightConeTriple};

/// What the pipeline is expected to report for an example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedClass {
    pub classification: String,
    pub s: Option<usize>,
    pub dim_delta: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalleryExample {
    pub name: String,
    pub patch: ChartPatch,
    pub kaehler: KaehlerChart,
    /// Exact conformal factor against `kaehler.reference`.
    pub lambda: Expr,
    pub expected: Option<ExpectedClass>,
}

impl GalleryExample {
    pub fn chart_dim(&self) -> usize {
        self.patch.chart_dim()
    }

    /// Complex dimension.
    pub fn n(&self) -> usize {
        self.chart_dim() / 2
    }

    pub fn codim(&self) -> usize {
        self.patch.codim()
    }

    /// Seeded uniform points in the chart domain.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        sample_domain(&self.patch.domain, count, seed)
    }

    pub fn representative(&self, triple: &LightConeTriple) -> Result<LightConeRep> {
        let checks = self.sample_points(4, 0xC0FFEE);
        make_rep(&self.patch, &self.lambda, &self.kaehler.reference, triple, &checks)
    }

    pub fn canonical_representative(&self) -> Result<LightConeRep> {
        self.representative(&LightConeTriple::canonical(self.patch.ambient_dim()))
    }
}

pub fn sample_domain(domain: &Domain, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let t: Vec<f64> = (0..domain.dim()).map(|_| rng.gen_range(0.0..1.0)).collect();
            domain.at(&t)
        })
        .collect()
}

fn one() -> Expr {
    Expr::constant(1.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Const { value } if *value == 1.0)
}

/// Minimal surfaces in isothermal coordinates `(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceId {
    Catenoid,
    Enneper,
    Helicoid,
}

impl SurfaceId {
    fn map(self) -> Vec<Expr> {
        let (u, v) = (Expr::coord(0), Expr::coord(1));
        match self {
            SurfaceId::Catenoid => vec![
                v.clone().cosh() * u.clone().cos(),
                v.clone().cosh() * u.sin(),
                v,
            ],
            SurfaceId::Helicoid => vec![
                v.clone().sinh() * u.clone().cos(),
                v.sinh() * u.clone().sin(),
                u,
            ],
            SurfaceId::Enneper => vec![
                u.clone() - u.clone().pow(3.0) * (1.0 / 3.0) + u.clone() * v.clone().pow(2.0),
                v.clone() - v.clone().pow(3.0) * (1.0 / 3.0) + v.clone() * u.clone().pow(2.0),
                u.pow(2.0) - v.pow(2.0),
            ],
        }
    }

    fn domain(self) -> Domain {
        match self {
            SurfaceId::Helicoid => Domain::new(vec![-1.0, 0.3], vec![1.0, 1.3]),
            _ => Domain::cube(2, -1.0, 1.0),
        }
    }

    fn name(self) -> &'static str {
        match self {
            SurfaceId::Catenoid => "catenoid",
            SurfaceId::Enneper => "enneper",
            SurfaceId::Helicoid => "helicoid",
        }
    }
}

/// Builds an example that is its own Kaehler reference (`λ ≡ 1`).
fn isometric_example(name: String, patch: ChartPatch, j: ComplexStructure, expected: Option<ExpectedClass>) -> GalleryExample {
    GalleryExample {
        name,
        kaehler: KaehlerChart { j, reference: ReferenceMetric::new(patch.clone()) },
        patch,
        lambda: one(),
        expected,
    }
}

/// `(u, v, t) ↦ (S(u,v), t)` from `R^{2n}` into `R^{2n+1}`.
pub fn cylinder_hypersurface(surface: SurfaceId, n: usize) -> Result<GalleryExample> {
    if n == 0 {
        return Err(GeomError::BadParams("cylinder needs n >= 1".into()));
    }
    let mut comps = surface.map();
    for k in 0..2 * n - 2 {
        comps.push(Expr::coord(2 + k));
    }
    let domain = surface.domain().product(&Domain::cube(2 * n - 2, -1.0, 1.0));
    let patch = ChartPatch::new(domain, AmbientKind::Euclidean, MapExpr::components(comps));
    let expected = (n >= 4).then(|| ExpectedClass {
        classification: "CASE_I_REAL_KAEHLER".into(),
        s: Some(2),
        dim_delta: Some(2 * n - 2),
    });
    Ok(isometric_example(format!("{}-cyl-n{n}", surface.name()), patch, ComplexStructure::standard(2 * n), expected))
}

/// Extrinsic product of two isometric hypersurface examples.
pub fn product_pair(e1: &GalleryExample, e2: &GalleryExample) -> Result<GalleryExample> {
    for e in [e1, e2] {
        if e.codim() != 1 {
            return Err(GeomError::BadCodim(e.codim()));
        }
        if !is_one(&e.lambda) {
            return Err(GeomError::BadParams(format!("{} is not isometric to its reference", e.name)));
        }
    }
    let d1 = e1.chart_dim();
    let d2 = e2.chart_dim();
    let product = |a: &ChartPatch, b: &ChartPatch| {
        ChartPatch::new(
            a.domain.product(&b.domain),
            AmbientKind::Euclidean,
            MapExpr::concat(vec![a.map.clone(), b.map.clone().shifted(d1, d2)]),
        )
    };
    let patch = product(&e1.patch, &e2.patch);
    let reference = ReferenceMetric::new(product(&e1.kaehler.reference.patch, &e2.kaehler.reference.patch));
    let n = (d1 + d2) / 2;
    Ok(GalleryExample {
        name: format!("product({},{})", e1.name, e2.name),
        patch,
        kaehler: KaehlerChart { j: e1.kaehler.j.direct_sum(&e2.kaehler.j), reference },
        lambda: one(),
        expected: Some(ExpectedClass {
            classification: "CASE_I_REAL_KAEHLER".into(),
            s: Some(2),
            dim_delta: (n >= 1).then(|| 2 * n - 4),
        }),
    })
}

/// `c · z^powers` with complex `c = (re, im)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: [f64; 2],
    pub powers: Vec<u32>,
}

/// A holomorphic polynomial `φ: C^n -> C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoloPoly {
    pub n: usize,
    pub terms: Vec<Monomial>,
}

impl HoloPoly {
    pub fn sum_of_squares(n: usize) -> Self {
        Self {
            n,
            terms: (0..n)
                .map(|k| {
                    let mut powers = vec![0; n];
                    powers[k] = 2;
                    Monomial { coeff: [1.0, 0.0], powers }
                })
                .collect(),
        }
    }

    pub fn z1z2(n: usize) -> Self {
        assert!(n >= 2, "z1 z2 needs two variables");
        let mut powers = vec![0; n];
        powers[0] = 1;
        powers[1] = 1;
        Self { n, terms: vec![Monomial { coeff: [1.0, 0.0], powers }] }
    }

    pub fn zero(n: usize) -> Self {
        Self { n, terms: Vec::new() }
    }

    /// `(Re φ, Im φ)` in the real coordinates `(x₁, y₁, ..., x_n, y_n)`.
    fn real_parts(&self) -> (Expr, Expr) {
        type C = (Expr, Expr);
        fn mul(a: &C, b: &C) -> C {
            (
                a.0.clone() * b.0.clone() - a.1.clone() * b.1.clone(),
                a.0.clone() * b.1.clone() + a.1.clone() * b.0.clone(),
            )
        }
        let mut re = Vec::new();
        let mut im = Vec::new();
        for t in &self.terms {
            let mut acc: Option<C> = None;
            for (k, &p) in t.powers.iter().enumerate() {
                let z: C = (Expr::coord(2 * k), Expr::coord(2 * k + 1));
                for _ in 0..p {
                    acc = Some(match acc {
                        None => z.clone(),
                        Some(a) => mul(&a, &z),
                    });
                }
            }
            let [cr, ci] = t.coeff;
            match acc {
                None => {
                    re.push(Expr::constant(cr));
                    im.push(Expr::constant(ci));
                }
                Some((a, b)) => {
                    // (cr + i ci)(a + i b)
                    re.push(a.clone() * cr - b.clone() * ci);
                    im.push(a * ci + b * cr);
                }
            }
        }
        let total = |v: Vec<Expr>| if v.is_empty() { Expr::constant(0.0) } else { Expr::sum(v) };
        (total(re), total(im))
    }
}

/// `z ↦ (z, φ(z))` as a real patch `R^{2n} -> R^{2n+2}`.
pub fn holomorphic_graph(poly: &HoloPoly) -> Result<GalleryExample> {
    let n = poly.n;
    if n == 0 {
        return Err(GeomError::BadParams("holomorphic graph needs n >= 1".into()));
    }
    if let Some(t) = poly.terms.iter().find(|t| t.powers.len() != n) {
        return Err(GeomError::BadParams(format!("monomial {:?} does not have {n} exponents", t.powers)));
    }
    let mut comps: Vec<Expr> = (0..2 * n).map(Expr::coord).collect();
    let (re, im) = poly.real_parts();
    comps.push(re);
    comps.push(im);
    let patch = ChartPatch::new(Domain::cube(2 * n, -1.0, 1.0), AmbientKind::Euclidean, MapExpr::components(comps));
    let expected = (*poly == HoloPoly::sum_of_squares(n) && n >= 5).then(|| ExpectedClass {
        classification: "MINIMAL_S4".into(),
        s: Some(4),
        dim_delta: Some(2 * n),
    });
    Ok(isometric_example(format!("holo-graph-n{n}"), patch, ComplexStructure::standard(2 * n), expected))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MoebiusParams {
    Translation { b: Vec<f64> },
    /// Row-major orthogonal matrix.
    Orthogonal { q: Vec<Vec<f64>> },
    Dilation { a: f64 },
    Inversion { center: Vec<f64>, radius: f64 },
}

impl MoebiusParams {
    pub fn kind(&self) -> &'static str {
        match self {
            MoebiusParams::Translation { .. } => "translation",
            MoebiusParams::Orthogonal { .. } => "orthogonal",
            MoebiusParams::Dilation { .. } => "dilation",
            MoebiusParams::Inversion { .. } => "inversion",
        }
    }
}

/// A conformal map of `R^N` (in its own coordinates) with exact factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalMap {
    pub params: MoebiusParams,
    pub dim: usize,
    pub map: MapExpr,
    pub lambda: Expr,
}

pub fn moebius_map(params: MoebiusParams, dim: usize) -> Result<ConformalMap> {
    let x: Vec<Expr> = (0..dim).map(Expr::coord).collect();
    let bad = |m: String| Err(GeomError::BadParams(m));
    let (map, lambda) = match &params {
        MoebiusParams::Translation { b } => {
            if b.len() != dim {
                return bad(format!("translation vector has length {}, expected {dim}", b.len()));
            }
            (MapExpr::components(x.iter().zip(b).map(|(xi, bi)| xi.clone() + Expr::constant(*bi)).collect()), one())
        }
        MoebiusParams::Orthogonal { q } => {
            if q.len() != dim || q.iter().any(|r| r.len() != dim) {
                return bad(format!("orthogonal map must be {dim}x{dim}"));
            }
            let m = nalgebra::DMatrix::from_fn(dim, dim, |i, j| q[i][j]);
            let defect = (m.transpose() * &m - nalgebra::DMatrix::<f64>::identity(dim, dim)).amax();
            if defect > 1e-12 {
                return bad(format!("matrix is not orthogonal (defect {defect:.3e})"));
            }
            let comps = (0..dim)
                .map(|i| {
                    let terms: Vec<Expr> =
                        (0..dim).filter(|&j| q[i][j] != 0.0).map(|j| x[j].clone() * q[i][j]).collect();
                    if terms.is_empty() { Expr::constant(0.0) } else { Expr::sum(terms) }
                })
                .collect();
            (MapExpr::components(comps), one())
        }
        MoebiusParams::Dilation { a } => {
            if !(*a > 0.0 && a.is_finite()) {
                return bad(format!("dilation factor must be positive, got {a}"));
            }
            (MapExpr::components(x.iter().map(|xi| xi.clone() * *a).collect()), Expr::constant(*a))
        }
        MoebiusParams::Inversion { center, radius } => {
            if center.len() != dim || !(*radius > 0.0 && radius.is_finite()) {
                return bad("inversion needs a center in R^N and a positive radius".into());
            }
            let diff: Vec<Expr> = x.iter().zip(center).map(|(xi, ci)| xi.clone() - Expr::constant(*ci)).collect();
            let r2 = radius * radius;
            let dist2 = Expr::norm2(diff.clone());
            let comps = diff
                .iter()
                .zip(center)
                .map(|(di, ci)| Expr::constant(*ci) + di.clone() * r2 / dist2.clone())
                .collect();
            (MapExpr::components(comps), Expr::constant(r2) / dist2)
        }
    };
    Ok(ConformalMap { params, dim, map, lambda })
}

/// Sample points used to test that an example's image avoids a map's singularity.
fn probe_points(domain: &Domain) -> Vec<Vec<f64>> {
    let d = domain.dim();
    let mut pts = vec![domain.center()];
    if d <= 10 {
        for mask in 0..(1u32 << d) {
            let t: Vec<f64> = (0..d).map(|k| if mask >> k & 1 == 1 { 1.0 } else { 0.0 }).collect();
            pts.push(domain.at(&t));
        }
    }
    pts.extend(sample_domain(domain, 256, 0x5EED));
    pts
}

/// `h ∘ f` with `λ = (λ_h ∘ f) · λ_f`.
pub fn compose(h: &ConformalMap, e: &GalleryExample) -> Result<GalleryExample> {
    if h.dim != e.patch.ambient_dim() {
        return Err(GeomError::DimensionMismatch(format!(
            "map acts on R^{}, example lives in R^{}",
            h.dim,
            e.patch.ambient_dim()
        )));
    }
    if let MoebiusParams::Inversion { center, radius } = &h.params {
        let floor = 1e-3 * radius;
        for x in probe_points(&e.patch.domain) {
            let y = e.patch.map.eval(&x);
            let dist = y.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if dist < floor {
                return Err(GeomError::DomainViolation(format!(
                    "image point {y:?} lies within {dist:.3e} of the inversion center"
                )));
            }
        }
    }
    let lambda_h = Expr::compose(h.lambda.clone(), e.patch.map.component_exprs());
    let lambda = if is_one(&e.lambda) { lambda_h } else { lambda_h * e.lambda.clone() };
    let patch = ChartPatch::new(e.patch.domain.clone(), AmbientKind::Euclidean, MapExpr::compose(h.map.clone(), e.patch.map.clone()));
    Ok(GalleryExample {
        name: format!("{}({})", h.params.kind(), e.name),
        patch,
        kaehler: e.kaehler.clone(),
        lambda,
        expected: e.expected.clone(),
    })
}

/// Default inversion for `inv-` ids: unit sphere around `3 e₁`.
pub fn default_inversion(dim: usize) -> ConformalMap {
    let mut center = vec![0.0; dim];
    center[0] = 3.0;
    moebius_map(MoebiusParams::Inversion { center, radius: 1.0 }, dim).expect("valid default inversion")
}

/// One representative of each Moebius kind on `R^dim`, deterministic.
pub fn moebius_samples(dim: usize) -> Vec<ConformalMap> {
    let b: Vec<f64> = (0..dim).map(|k| 0.3 - 0.1 * k as f64).collect();
    // rotation by 0.7 rad in the (e₁, e_N) plane composed with a reflection of e₂
    let (c, s) = (0.7_f64.cos(), 0.7_f64.sin());
    let mut q = vec![vec![0.0; dim]; dim];
    for (i, row) in q.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    if dim >= 2 {
        q[0][0] = c;
        q[0][dim - 1] = -s;
        q[dim - 1][0] = s;
        q[dim - 1][dim - 1] = c;
    }
    if dim >= 3 {
        q[1][1] = -1.0;
    }
    vec![
        moebius_map(MoebiusParams::Translation { b }, dim).expect("valid translation"),
        moebius_map(MoebiusParams::Orthogonal { q }, dim).expect("valid rotation"),
        moebius_map(MoebiusParams::Dilation { a: 1.7 }, dim).expect("valid dilation"),
        default_inversion(dim),
    ]
}

/// `(ρ, θ) ↦ (e^ρ cos θ, e^ρ sin θ)` on the log-polar chart of an annulus.
pub fn identity_annulus() -> GalleryExample {
    let (rho, th) = (Expr::coord(0), Expr::coord(1));
    let map = MapExpr::components(vec![rho.clone().exp() * th.clone().cos(), rho.exp() * th.sin()]);
    let patch = ChartPatch::new(annulus_domain(), AmbientKind::Euclidean, map);
    isometric_example("identity-annulus".into(), patch, ComplexStructure::standard(2), None)
}

fn annulus_domain() -> Domain {
    Domain::new(vec![0.0, -1.0], vec![std::f64::consts::LN_2, 1.0])
}

/// `z ↦ z²` on the same chart, conformal to the identity annulus with `λ = 2e^ρ`.
pub fn z_squared_annulus() -> GalleryExample {
    let (rho, th) = (Expr::coord(0), Expr::coord(1));
    let r2 = (rho.clone() * 2.0).exp();
    let map = MapExpr::components(vec![r2.clone() * (th.clone() * 2.0).cos(), r2 * (th * 2.0).sin()]);
    let base = identity_annulus();
    GalleryExample {
        name: "z-squared-annulus".into(),
        patch: ChartPatch::new(annulus_domain(), AmbientKind::Euclidean, map),
        kaehler: base.kaehler,
        lambda: rho.exp() * 2.0,
        expected: None,
    }
}

/// Base example names accepted by [`by_id`], with their default `n`.
pub const BASES: &[(&str, Option<usize>)] = &[
    ("catenoid-cyl", Some(2)),
    ("enneper-cyl", Some(2)),
    ("helicoid-cyl", Some(2)),
    ("product-catenoid", Some(5)),
    ("holo-graph-sq", Some(5)),
    ("holo-graph-z1z2", Some(2)),
    ("plane", Some(2)),
    ("identity-annulus", None),
    ("z-squared-annulus", None),
];

/// Ids with their defaults spelled out, for listings.
pub fn list() -> Vec<String> {
    let mut out = Vec::new();
    for (base, n) in BASES {
        let id = match n {
            Some(n) => format!("{base}-n{n}"),
            None => base.to_string(),
        };
        out.push(id.clone());
        out.push(format!("inv-{id}"));
    }
    out
}

/// Resolves `[inv-]<base>[-n<k>]`.
pub fn by_id(id: &str) -> Result<GalleryExample> {
    let (inverted, rest) = match id.strip_prefix("inv-") {
        Some(r) => (true, r),
        None => (false, id),
    };
    let (base, n) = match rest.rfind("-n") {
        Some(pos) if rest[pos + 2..].parse::<usize>().is_ok() => {
            (&rest[..pos], Some(rest[pos + 2..].parse::<usize>().unwrap()))
        }
        _ => (rest, None),
    };
    let default_n = BASES
        .iter()
        .find(|(b, _)| *b == base)
        .ok_or_else(|| GeomError::BadParams(format!("unknown gallery id '{id}'")))?
        .1;
    if default_n.is_none() && n.is_some() {
        return Err(GeomError::BadParams(format!("'{base}' takes no dimension suffix")));
    }
    let n = n.or(default_n);
    let mut e = match (base, n) {
        ("catenoid-cyl", Some(n)) => cylinder_hypersurface(SurfaceId::Catenoid, n)?,
        ("enneper-cyl", Some(n)) => cylinder_hypersurface(SurfaceId::Enneper, n)?,
        ("helicoid-cyl", Some(n)) => cylinder_hypersurface(SurfaceId::Helicoid, n)?,
        ("product-catenoid", Some(n)) => {
            if n < 3 {
                return Err(GeomError::BadParams("product-catenoid needs n >= 3".into()));
            }
            product_pair(
                &cylinder_hypersurface(SurfaceId::Catenoid, 2)?,
                &cylinder_hypersurface(SurfaceId::Catenoid, n - 2)?,
            )?
        }
        ("holo-graph-sq", Some(n)) => holomorphic_graph(&HoloPoly::sum_of_squares(n))?,
        ("holo-graph-z1z2", Some(n)) => {
            if n < 2 {
                return Err(GeomError::BadParams("holo-graph-z1z2 needs n >= 2".into()));
            }
            holomorphic_graph(&HoloPoly::z1z2(n))?
        }
        ("plane", Some(n)) => holomorphic_graph(&HoloPoly::zero(n))?,
        ("identity-annulus", None) => identity_annulus(),
        ("z-squared-annulus", None) => z_squared_annulus(),
        _ => return Err(GeomError::BadParams(format!("unknown gallery id '{id}'"))),
    };
    e.name = rest.to_string();
    if inverted {
        e = compose(&default_inversion(e.patch.ambient_dim()), &e)?;
        e.name = id.to_string();
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::immersion::{conformal_factor, curvature_at, kaehler_curvature_check, metric_at, sff_at};

    fn check_lambda(e: &GalleryExample, count: usize) {
        for x in e.sample_points(count, 11) {
            let cf = conformal_factor(&e.patch, &e.kaehler.reference, &x, 1e-9).unwrap();
            let rel = (cf.lambda - e.lambda.eval(&x)).abs() / cf.lambda;
            assert!(rel < 1e-9, "{}: λ mismatch {rel:e}", e.name);
        }
    }

    #[test]
    fn inversion_factor_formula() {
        let h = moebius_map(MoebiusParams::Inversion { center: vec![0.0; 3], radius: 1.0 }, 3).unwrap();
        assert!((h.lambda.eval(&[2.0, 0.0, 0.0]) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn bad_params() {
        assert_eq!(moebius_map(MoebiusParams::Dilation { a: -1.0 }, 2).unwrap_err().code(), "BAD_PARAMS");
        let q = vec![vec![1.0, 0.1], vec![0.0, 1.0]];
        assert_eq!(moebius_map(MoebiusParams::Orthogonal { q }, 2).unwrap_err().code(), "BAD_PARAMS");
        let inv = MoebiusParams::Inversion { center: vec![0.0], radius: 1.0 };
        assert_eq!(moebius_map(inv, 2).unwrap_err().code(), "BAD_PARAMS");
    }

    #[test]
    fn stored_lambda_matches_for_every_base() {
        for id in list() {
            let e = by_id(&id).unwrap();
            check_lambda(&e, 20);
        }
    }

    #[test]
    fn moebius_images_keep_exact_lambda() {
        let e = by_id("catenoid-cyl-n2").unwrap();
        for h in moebius_samples(e.patch.ambient_dim()) {
            check_lambda(&compose(&h, &e).unwrap(), 20);
        }
    }

    #[test]
    fn two_inversions_with_common_center_give_a_dilation() {
        let c = vec![0.2, -0.1];
        let h1 = moebius_map(MoebiusParams::Inversion { center: c.clone(), radius: 1.0 }, 2).unwrap();
        let h2 = moebius_map(MoebiusParams::Inversion { center: c.clone(), radius: 2.0 }, 2).unwrap();
        let e = identity_annulus();
        let twice = compose(&h2, &compose(&h1, &e).unwrap()).unwrap();
        for x in e.sample_points(10, 3) {
            let y = e.patch.map.eval(&x);
            let z = twice.patch.map.eval(&x);
            for k in 0..2 {
                assert!((z[k] - (c[k] + 4.0 * (y[k] - c[k]))).abs() < 1e-12);
            }
            assert!((twice.lambda.eval(&x) - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn orthogonal_map_preserves_metric() {
        let e = by_id("enneper-cyl-n2").unwrap();
        let h = &moebius_samples(5)[1];
        let g = compose(h, &e).unwrap();
        let x = [0.3, -0.2, 0.5, 0.1];
        let diff = metric_at(&e.patch, &x).unwrap() - metric_at(&g.patch, &x).unwrap();
        assert!(diff.amax() < 1e-13);
    }

    #[test]
    fn inversion_centered_on_image_is_rejected() {
        let e = by_id("catenoid-cyl-n2").unwrap();
        let center = e.patch.map.eval(&e.patch.domain.center());
        let h = moebius_map(MoebiusParams::Inversion { center, radius: 1.0 }, 5).unwrap();
        assert_eq!(compose(&h, &e).unwrap_err().code(), "DOMAIN_VIOLATION");
    }

    #[test]
    fn product_rejects_codim_two() {
        let h = by_id("holo-graph-z1z2-n2").unwrap();
        let c = by_id("catenoid-cyl-n2").unwrap();
        assert_eq!(product_pair(&h, &c).unwrap_err().code(), "BAD_CODIM");
    }

    #[test]
    fn cylinder_is_kaehler_and_helicoid_has_no_flat_points() {
        let e = by_id("catenoid-cyl-n2").unwrap();
        for x in e.sample_points(10, 5) {
            let sff = sff_at(&e.patch, &x).unwrap();
            let r = curvature_at(&sff, 1e-8);
            assert!(kaehler_curvature_check(&r, &e.kaehler.j) < 1e-8);
            assert!(e.kaehler.orthogonality_defect(&x).unwrap() < 1e-12);
        }
        let h = by_id("helicoid-cyl-n4").unwrap();
        for x in h.sample_points(20, 6) {
            let r = curvature_at(&sff_at(&h.patch, &x).unwrap(), 1e-8);
            assert!(!r.flat_point);
        }
    }

    #[test]
    fn plane_is_flat_everywhere() {
        let e = by_id("plane-n2").unwrap();
        for x in e.sample_points(5, 1) {
            assert!(curvature_at(&sff_at(&e.patch, &x).unwrap(), 1e-8).flat_point);
        }
    }

    #[test]
    fn surface_request_n1() {
        let e = cylinder_hypersurface(SurfaceId::Catenoid, 1).unwrap();
        assert_eq!(e.chart_dim(), 2);
        assert!(e.expected.is_none());
    }

    #[test]
    fn ids_round_trip_and_are_deterministic() {
        assert_eq!(by_id("inv-catenoid-cyl-n4").unwrap(), by_id("inv-catenoid-cyl-n4").unwrap());
        assert!(by_id("torus").is_err());
        assert!(by_id("identity-annulus-n3").is_err());
        let e = by_id("inv-product-catenoid-n5").unwrap();
        assert_eq!(e.chart_dim(), 10);
        assert_eq!(e.patch.ambient_dim(), 12);
        let json = serde_json::to_string(&e).unwrap();
        let back: GalleryExample = serde_json::from_str(&json).unwrap();
        assert_eq!(back, e);
    }
}
