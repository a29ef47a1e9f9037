//! Point-wise decomposition of light-cone representatives and the resulting
//! case classification of a conformal Kaehler immersion.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bilinear::{flatness_defect, j_couple, nullity_defect, span_and_kernel, structure_decompose, CaseTag, ComplexStructure};
use crate::error::{GeomError, Result};
use crate::gallery::{self, GalleryExample};
use crate::immersion::{curvature_at, Domain, SffData};
use crate::lightcone::{alpha_form, gauss_check_from_sff, sff_radial_defect, LightConeRep};
use crate::linalg::GramSpace;
use crate::Tolerances;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn default_grid() -> usize {
    3
}

fn default_max_points() -> usize {
    512
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    /// Gallery id, e.g. `inv-catenoid-cyl`; `n` is appended when the id has no suffix.
    #[serde(default)]
    pub example: Option<String>,
    /// Alternative to `example`: a fully described patch.
    #[serde(default)]
    pub inline: Option<GalleryExample>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl AnalysisConfig {
    pub fn for_example(id: &str) -> Self {
        Self {
            example: Some(id.to_string()),
            inline: None,
            n: None,
            grid: default_grid(),
            tolerances: Tolerances::default(),
            seed: 0,
            max_points: default_max_points(),
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(GeomError::GenerationFailed(m.to_string()));
        if self.grid < 2 {
            return bad("grid must be at least 2");
        }
        if self.max_points == 0 {
            return bad("max_points must be positive");
        }
        let t = &self.tolerances;
        if ![t.rank, t.flat, t.var, t.sym].iter().all(|v| *v > 0.0 && v.is_finite()) {
            return bad("tolerances must be positive");
        }
        match (&self.example, &self.inline) {
            (Some(_), Some(_)) => bad("give either an example id or an inline patch, not both"),
            (None, None) => bad("no example id or inline patch"),
            _ => Ok(()),
        }
    }

    /// Resolves the example, folding `n` into the id.
    pub fn example(&self) -> Result<GalleryExample> {
        self.validate()?;
        let e = match (&self.example, &self.inline) {
            (Some(id), None) => {
                let id = match self.n {
                    Some(n) if has_dim_suffix(id) => {
                        if !id.ends_with(&format!("-n{n}")) {
                            return Err(GeomError::GenerationFailed(format!("id '{id}' conflicts with n = {n}")));
                        }
                        id.clone()
                    }
                    Some(n) => format!("{id}-n{n}"),
                    None => id.clone(),
                };
                gallery::by_id(&id).map_err(|e| GeomError::GenerationFailed(e.to_string()))?
            }
            (None, Some(inline)) => inline.clone(),
            _ => unreachable!("validated"),
        };
        if let Some(n) = self.n {
            if e.n() != n {
                return Err(GeomError::GenerationFailed(format!("example has n = {}, config asks for {n}", e.n())));
            }
        }
        Ok(e)
    }
}

fn has_dim_suffix(id: &str) -> bool {
    id.rfind("-n").is_some_and(|p| id[p + 2..].parse::<usize>().is_ok())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointResiduals {
    pub flat: f64,
    pub sff_radial: f64,
    pub alpha1_sym: f64,
    pub delta_orth: f64,
    /// `max |A_F + I|`.
    pub a_f: f64,
    /// `max |A_δ|`, zero when there is no `δ`.
    pub a_delta: f64,
    pub nullity: f64,
    /// `A_{ξ₁} = J A_{ξ₂}` defect on `U₁`; present only when `dim U₁ = 2`.
    pub xi_relation: Option<f64>,
    /// Mean curvature of the component of `α^F` orthogonal to `{F, δ}`.
    pub source_mean_curvature: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub coords: Vec<f64>,
    pub s: Option<usize>,
    pub case: Option<CaseTag>,
    pub dim_delta: Option<usize>,
    pub residuals: PointResiduals,
    /// Ambient coordinates, `⟨F, δ⟩ = 1`.
    pub delta: Option<Vec<f64>>,
    pub flat_point: bool,
    pub error: Option<String>,
}

impl PointRecord {
    fn failed(coords: &[f64], err: &GeomError, residuals: PointResiduals, flat_point: bool) -> Self {
        Self {
            coords: coords.to_vec(),
            s: None,
            case: None,
            dim_delta: None,
            residuals,
            delta: None,
            flat_point,
            error: Some(err.code().to_string()),
        }
    }

    pub fn is_classified(&self) -> bool {
        !self.flat_point && self.error.is_none()
    }

    /// What must agree between congruent immersions.
    pub fn signature(&self) -> (Option<usize>, Option<CaseTag>, Option<usize>, Option<String>) {
        (self.s, self.case, self.dim_delta, self.error.clone())
    }
}

fn xi_relation(sff: &SffData, j: &ComplexStructure, xi1: &DVector<f64>, xi2: &DVector<f64>) -> f64 {
    let a1 = sff.shape_operator(xi1);
    let ja2 = j.matrix() * sff.shape_operator(xi2);
    let scale = a1.amax().max(ja2.amax()).max(1.0);
    // the relation is invariant under rotations of the frame; only its orientation matters
    (&a1 - &ja2).amax().min((&a1 + &ja2).amax()) / scale
}

/// The full pipeline at one chart point. Errors are recorded, never raised.
pub fn analyze_point(rep: &LightConeRep, j: &ComplexStructure, x: &[f64], tol: &Tolerances) -> PointRecord {
    let mut res = PointResiduals::default();
    let sff = match rep.sff_at(x) {
        Ok(s) => s,
        Err(e) => return PointRecord::failed(x, &e, res, false),
    };
    res.sff_radial = sff_radial_defect(&sff);
    let identity = DMatrix::<f64>::identity(sff.dim(), sff.dim());
    res.a_f = (sff.shape_operator_ambient(&sff.position) + &identity).amax();
    if curvature_at(&sff, tol.flat).flat_point {
        return PointRecord {
            coords: x.to_vec(),
            s: None,
            case: None,
            dim_delta: None,
            residuals: res,
            delta: None,
            flat_point: true,
            error: None,
        };
    }
    let alpha = alpha_form(&sff);
    let beta = match j_couple(&alpha, j, tol.sym) {
        Ok(b) => b,
        Err(e) => return PointRecord::failed(x, &e, res, false),
    };
    res.flat = flatness_defect(&beta);
    res.nullity = nullity_defect(&beta);
    if res.flat > tol.flat {
        return PointRecord::failed(x, &GeomError::NotFlat(res.flat), res, false);
    }
    let (_, kernel) = span_and_kernel(&beta, tol.rank);
    if kernel.dim() > 0 {
        let err = GeomError::NullityTooLarge { dim: kernel.dim(), bound: 0 };
        return PointRecord::failed(x, &err, res, false);
    }
    let f_n = sff.to_normal_coords(&sff.position);
    let report = match structure_decompose(&alpha, j, Some(&f_n), tol) {
        Ok(r) => r,
        Err(e) => return PointRecord::failed(x, &e, res, false),
    };
    res.alpha1_sym = report.alpha1_symmetry_defect;
    res.delta_orth = report.delta_orthogonality_defect;
    let u1 = report.u1_vectors();
    if u1.len() == 2 {
        res.xi_relation = Some(xi_relation(&sff, j, &u1[0], &u1[1]));
    }
    let space = sff.normal_space();
    let delta = report.delta.as_ref().map(|d| {
        let d = d / space.inner(d, &f_n);
        sff.to_ambient(&d)
    });
    if let Some(d) = &delta {
        res.a_delta = sff.shape_operator_ambient(d).amax();
        match gauss_check_from_sff(&sff, d, tol.flat) {
            Ok(g) => res.source_mean_curvature = Some(g.mean_curvature_defect),
            Err(e) => return PointRecord::failed(x, &e, res, false),
        }
    }
    PointRecord {
        coords: x.to_vec(),
        s: Some(report.s),
        case: Some(report.case_tag),
        dim_delta: Some(report.dim_delta),
        residuals: res,
        delta: delta.map(|d| d.iter().copied().collect()),
        flat_point: false,
        error: None,
    }
}

/// Lexicographic tensor grid with `g` points per axis, capped at `max_points`
/// by picking one seeded index from each of `max_points` equal strata.
pub fn grid_points(domain: &Domain, g: usize, max_points: usize, seed: u64) -> Vec<Vec<f64>> {
    let d = domain.dim();
    let total = (g as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    let point = |mut idx: u128| {
        let mut t = vec![0.0; d];
        for k in (0..d).rev() {
            t[k] = (idx % g as u128) as f64 / (g - 1) as f64;
            idx /= g as u128;
        }
        domain.at(&t)
    };
    if total <= max_points as u128 {
        return (0..total).map(point).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = max_points as u128;
    (0..k)
        .map(|i| {
            let lo = i * total / k;
            let hi = (i + 1) * total / k;
            point(rng.gen_range(lo..hi))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Classification {
    CaseIRealKaehler,
    CaseIiComposition,
    MinimalS4,
    Mixed,
    Undetermined,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::CaseIRealKaehler => "CASE_I_REAL_KAEHLER",
            Classification::CaseIiComposition => "CASE_II_COMPOSITION",
            Classification::MinimalS4 => "MINIMAL_S4",
            Classification::Mixed => "MIXED",
            Classification::Undetermined => "UNDETERMINED",
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub total: usize,
    pub flat: usize,
    pub classified: usize,
    pub errors: BTreeMap<String, usize>,
    pub by_s: BTreeMap<String, usize>,
    pub by_case: BTreeMap<String, usize>,
    pub by_dim_delta: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MaxResiduals {
    pub flat: f64,
    pub sff_radial: f64,
    pub alpha1_sym: f64,
    pub delta_orth: f64,
    pub a_f: f64,
    pub a_delta: f64,
    pub nullity: f64,
    pub xi_relation: f64,
    pub source_mean_curvature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub classification: Classification,
    /// `max ‖δ(x) − mean‖ / max(1, ‖mean‖)` over classified points with a `δ`.
    pub delta_variance: Option<f64>,
    pub delta_mean: Option<Vec<f64>>,
    pub counts: Counts,
    pub max_residuals: MaxResiduals,
    /// False when `n` is below the range in which the classification theorems apply.
    pub in_theorem_range: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: AnalysisConfig,
    pub example: String,
    pub n: usize,
    pub codim: usize,
    pub points: Vec<PointRecord>,
    pub aggregate: Aggregate,
    pub version: String,
    pub timing_ms: u64,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs the pipeline over the configured grid.
pub fn analyze(config: &AnalysisConfig) -> Result<RunReport> {
    let start = Instant::now();
    let example = config.example()?;
    let rep = example
        .canonical_representative()
        .map_err(|e| GeomError::GenerationFailed(format!("representative: {e}")))?;
    let points = grid_points(&example.patch.domain, config.grid, config.max_points, config.seed);
    let records = analyze_points(&rep, &example.kaehler.j, &points, &config.tolerances);
    let aggregate = aggregate(&records, example.n(), example.codim(), &config.tolerances);
    Ok(RunReport {
        config: config.clone(),
        example: example.name.clone(),
        n: example.n(),
        codim: example.codim(),
        points: records,
        aggregate,
        version: VERSION.to_string(),
        timing_ms: start.elapsed().as_millis() as u64,
    })
}

pub fn analyze_points(rep: &LightConeRep, j: &ComplexStructure, points: &[Vec<f64>], tol: &Tolerances) -> Vec<PointRecord> {
    points.par_iter().map(|x| analyze_point(rep, j, x, tol)).collect()
}

const MIN_CLASSIFIED: usize = 10;

pub fn aggregate(records: &[PointRecord], n: usize, codim: usize, tol: &Tolerances) -> Aggregate {
    let mut counts = Counts { total: records.len(), ..Default::default() };
    let mut maxr = MaxResiduals::default();
    let bump = |m: &mut BTreeMap<String, usize>, k: String| *m.entry(k).or_insert(0) += 1;
    for r in records {
        if r.flat_point {
            counts.flat += 1;
            continue;
        }
        let res = &r.residuals;
        maxr.flat = maxr.flat.max(res.flat);
        maxr.sff_radial = maxr.sff_radial.max(res.sff_radial);
        maxr.a_f = maxr.a_f.max(res.a_f);
        maxr.nullity = maxr.nullity.max(res.nullity);
        if let Some(code) = &r.error {
            bump(&mut counts.errors, code.clone());
            continue;
        }
        counts.classified += 1;
        maxr.alpha1_sym = maxr.alpha1_sym.max(res.alpha1_sym);
        maxr.delta_orth = maxr.delta_orth.max(res.delta_orth);
        maxr.a_delta = maxr.a_delta.max(res.a_delta);
        maxr.xi_relation = maxr.xi_relation.max(res.xi_relation.unwrap_or(0.0));
        maxr.source_mean_curvature = maxr.source_mean_curvature.max(res.source_mean_curvature.unwrap_or(0.0));
        bump(&mut counts.by_s, r.s.map_or("none".into(), |s| s.to_string()));
        bump(&mut counts.by_case, r.case.map_or("none".into(), |c| c.to_string()));
        bump(&mut counts.by_dim_delta, r.dim_delta.map_or("none".into(), |d| d.to_string()));
    }

    let classified: Vec<&PointRecord> = records.iter().filter(|r| r.is_classified()).collect();
    let deltas: Vec<DVector<f64>> =
        classified.iter().filter_map(|r| r.delta.as_ref()).map(|d| DVector::from_column_slice(d)).collect();
    let (delta_variance, delta_mean) = if deltas.is_empty() {
        (None, None)
    } else {
        let mean = deltas.iter().fold(DVector::zeros(deltas[0].len()), |acc, d| acc + d) / deltas.len() as f64;
        let spread = deltas.iter().map(|d| (d - &mean).norm()).fold(0.0, f64::max);
        (Some(spread / mean.norm().max(1.0)), Some(mean.iter().copied().collect()))
    };

    let in_theorem_range = match codim {
        1 => n >= 4,
        2 => n >= 5,
        _ => false,
    };
    let mut notes = Vec::new();
    if !in_theorem_range {
        notes.push(format!("out of theorem range (n = {n}, codimension {codim})"));
    }

    let all = |pred: &dyn Fn(&PointRecord) -> bool| classified.iter().all(|r| pred(r));
    let deg_with_s = |s: usize| move |r: &PointRecord| r.s == Some(s) && r.case == Some(CaseTag::DegL);
    let classification = if classified.len() < MIN_CLASSIFIED {
        notes.push(format!("only {} classified non-flat points", classified.len()));
        Classification::Undetermined
    } else if !counts.errors.is_empty() {
        notes.push("some non-flat points failed to decompose".into());
        Classification::Mixed
    } else if all(&deg_with_s(2)) {
        let constant = delta_variance.is_some_and(|v| v <= tol.var);
        if !constant {
            Classification::CaseIiComposition
        } else if codim == 1 && !all(&|r: &PointRecord| r.dim_delta == Some(2 * n - 2)) {
            notes.push(format!("hypersurface with dim Delta different from {}", 2 * n - 2));
            Classification::Mixed
        } else if maxr.a_f > tol.flat || maxr.a_delta > tol.flat {
            notes.push("shape operators of F or delta off their expected values".into());
            Classification::Mixed
        } else {
            Classification::CaseIRealKaehler
        }
    } else if all(&deg_with_s(4)) {
        if maxr.nullity <= tol.flat && maxr.xi_relation <= tol.flat {
            Classification::MinimalS4
        } else {
            notes.push("s = 4 without the expected shape operator relation".into());
            Classification::Mixed
        }
    } else {
        Classification::Mixed
    };

    Aggregate { classification, delta_variance, delta_mean, counts, max_residuals: maxr, in_theorem_range, notes }
}

/// Minkowski space of the right size for a report's `δ` vectors.
pub fn delta_space(report: &RunReport) -> Option<GramSpace> {
    report.aggregate.delta_mean.as_ref().map(|d| GramSpace::minkowski(d.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_lexicographic_and_capped() {
        let d = Domain::cube(2, 0.0, 1.0);
        let pts = grid_points(&d, 3, 100, 0);
        assert_eq!(pts.len(), 9);
        assert_eq!(pts[1], vec![0.0, 0.5]);
        let d8 = Domain::cube(8, -1.0, 1.0);
        let sub = grid_points(&d8, 3, 200, 7);
        assert_eq!(sub.len(), 200);
        assert_eq!(sub, grid_points(&d8, 3, 200, 7));
        assert!(sub.iter().all(|p| p.iter().all(|c| [-1.0, 0.0, 1.0].contains(c))));
    }

    #[test]
    fn config_validation() {
        let mut c = AnalysisConfig::for_example("catenoid-cyl");
        c.grid = 1;
        assert_eq!(c.validate().unwrap_err().code(), "GENERATION_FAILED");
        let mut c = AnalysisConfig::for_example("catenoid-cyl-n2");
        c.n = Some(4);
        assert_eq!(c.example().unwrap_err().code(), "GENERATION_FAILED");
        let mut c = AnalysisConfig::for_example("catenoid-cyl");
        c.n = Some(4);
        assert_eq!(c.example().unwrap().n(), 4);
        assert_eq!(AnalysisConfig::for_example("nope").example().unwrap_err().code(), "GENERATION_FAILED");
    }

    #[test]
    fn low_dimension_is_undetermined() {
        let mut c = AnalysisConfig::for_example("catenoid-cyl-n2");
        c.max_points = 20;
        let r = analyze(&c).unwrap();
        assert_eq!(r.aggregate.classification, Classification::Undetermined);
        assert!(!r.aggregate.in_theorem_range);
        assert!(r.points.iter().all(|p| p.error.as_deref() == Some("NULLITY_TOO_LARGE")));
    }

    #[test]
    fn catenoid_cylinder_n4_is_case_one() {
        let mut c = AnalysisConfig::for_example("catenoid-cyl-n4");
        c.max_points = 40;
        let r = analyze(&c).unwrap();
        assert_eq!(r.aggregate.classification, Classification::CaseIRealKaehler, "{:?}", r.aggregate);
        assert!(r.points.iter().all(|p| p.s == Some(2) && p.dim_delta == Some(6)));
    }

    #[test]
    fn report_is_deterministic() {
        let mut c = AnalysisConfig::for_example("catenoid-cyl-n4");
        c.max_points = 12;
        c.seed = 3;
        let mut a = analyze(&c).unwrap();
        let mut b = analyze(&c).unwrap();
        a.timing_ms = 0;
        b.timing_ms = 0;
        assert_eq!(a.to_json(), b.to_json());
    }
}
