//! Named self-check suites bundling the module-level properties.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bilinear::{costum_verify, flatness_defect, j_couple, structure_decompose, synth_flat, CaseTag, SynthSpec};
use crate::error::{GeomError, Result};
use crate::gallery::{self, GalleryExample};
use crate::immersion::{curvature_at, Domain};
use crate::lightcone::{
    alpha_form, congruence_defect, delta_detect, psi, random_lorentz, sff_radial_defect, LightConeTriple,
};
use crate::Tolerances;

pub const SUITES: &[&str] = &["psi", "sff", "flatness", "costum", "roundtrip", "congruence", "delta"];

/// Examples whose representatives are checked point by point.
pub const CORE_EXAMPLES: &[&str] = &[
    "catenoid-cyl-n2",
    "catenoid-cyl-n4",
    "product-catenoid-n5",
    "holo-graph-sq-n5",
    "inv-catenoid-cyl-n2",
    "inv-catenoid-cyl-n4",
    "inv-product-catenoid-n5",
    "inv-holo-graph-sq-n5",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub metrics: BTreeMap<String, f64>,
    pub failures: Vec<String>,
}

struct Collector {
    metrics: BTreeMap<String, f64>,
    failures: Vec<String>,
}

impl Collector {
    fn new() -> Self {
        Self { metrics: BTreeMap::new(), failures: Vec::new() }
    }

    fn set(&mut self, key: &str, v: f64) {
        self.metrics.insert(key.to_string(), v);
    }

    fn max(&mut self, key: &str, v: f64) {
        let e = self.metrics.entry(key.to_string()).or_insert(0.0);
        *e = e.max(v);
    }

    fn at_most(&mut self, key: &str, limit: f64) {
        let v = self.metrics.get(key).copied().unwrap_or(f64::NAN);
        if !(v <= limit) {
            self.failures.push(format!("{key} = {v:.3e} exceeds {limit:.0e}"));
        }
    }

    fn at_least(&mut self, key: &str, limit: f64) {
        let v = self.metrics.get(key).copied().unwrap_or(f64::NAN);
        if !(v >= limit) {
            self.failures.push(format!("{key} = {v:.3e} is below {limit:.0e}"));
        }
    }

    fn fail(&mut self, msg: String) {
        self.failures.push(msg);
    }

    fn finish(self, suite: &str, seed: u64) -> SuiteReport {
        SuiteReport { suite: suite.to_string(), seed, passed: self.failures.is_empty(), metrics: self.metrics, failures: self.failures }
    }
}

pub fn verify_suite(name: &str, seed: u64) -> Result<SuiteReport> {
    let c = match name {
        "psi" => psi_suite(seed),
        "sff" => sff_suite(seed)?,
        "flatness" => flatness_suite(seed)?,
        "costum" => costum_suite(seed)?,
        "roundtrip" => roundtrip_suite(seed),
        "congruence" => congruence_suite(seed)?,
        "delta" => delta_suite(seed)?,
        _ => return Err(GeomError::UnknownSuite(name.to_string())),
    };
    Ok(c.finish(name, seed))
}

fn uniform_vec(rng: &mut ChaCha8Rng, len: usize, r: f64) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-r..r)).collect()
}

fn psi_suite(seed: u64) -> Collector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Collector::new();
    for key in ["psi_null", "psi_w", "alpha_psi", "psi_distance"] {
        c.set(key, 0.0);
    }
    for trial in 0..1000 {
        let m = rng.gen_range(1..=12);
        let canonical = LightConeTriple::canonical(m);
        let triple = if trial % 2 == 0 {
            canonical
        } else {
            canonical.transformed(&random_lorentz(m + 2, rng.gen(), 0.3)).expect("Lorentz image of a triple")
        };
        let g = triple.ambient();
        let x = uniform_vec(&mut rng, m, 2.0);
        let y = uniform_vec(&mut rng, m, 2.0);
        let big_x = DVector::from_vec(uniform_vec(&mut rng, m, 1.0));
        let big_y = DVector::from_vec(uniform_vec(&mut rng, m, 1.0));
        let px = triple.psi_point(&x);
        let py = triple.psi_point(&y);
        c.max("psi_null", g.norm_sq(&px).abs());
        c.max("psi_w", (g.inner(&px, &triple.w) - 1.0).abs());
        let d2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum();
        c.max("psi_distance", (g.inner(&px, &py) + 0.5 * d2).abs());
        let patch = psi(&triple, Domain::cube(m, -2.5, 2.5));
        match crate::immersion::sff_at(&patch, &x) {
            Ok(sff) => {
                let mut a = DVector::zeros(m + 2);
                for i in 0..m {
                    for j in 0..m {
                        a += sff.alpha_ambient(i, j) * (big_x[i] * big_y[j]);
                    }
                }
                let defect = (a + &triple.w * big_x.dot(&big_y)).norm();
                c.max("alpha_psi", defect);
            }
            Err(e) => c.fail(format!("sff of psi at {x:?}: {e}")),
        }
    }
    c.set("instances", 1000.0);
    c.at_most("psi_null", 1e-10);
    c.at_most("psi_w", 1e-10);
    c.at_most("alpha_psi", 1e-9);
    c.at_most("psi_distance", 1e-10);
    c
}

fn load(id: &str) -> Result<GalleryExample> {
    gallery::by_id(id)
}

fn sff_suite(seed: u64) -> Result<Collector> {
    let mut c = Collector::new();
    c.set("metric_deviation", 0.0);
    c.set("sff_radial", 0.0);
    for id in CORE_EXAMPLES {
        let e = load(id)?;
        let rep = e.canonical_representative()?;
        let pts = e.sample_points(200, seed);
        let worst = pts
            .par_iter()
            .map(|x| -> Result<(f64, f64)> {
                let sff = rep.sff_at(x)?;
                Ok((rep.metric_deviation(x)?, sff_radial_defect(&sff)))
            })
            .collect::<Result<Vec<_>>>()?;
        for (m, r) in worst {
            c.max("metric_deviation", m);
            c.max("sff_radial", r);
        }
    }
    c.at_most("metric_deviation", 1e-9);
    c.at_most("sff_radial", 1e-6);
    Ok(c)
}

fn flatness_suite(seed: u64) -> Result<Collector> {
    let tol = Tolerances::default();
    let mut c = Collector::new();
    c.set("flatness", 0.0);
    c.set("non_flat_points", 0.0);
    for id in gallery::list() {
        let e = load(&id)?;
        let rep = e.canonical_representative()?;
        let vals = e
            .sample_points(50, seed)
            .par_iter()
            .map(|x| -> Result<Option<f64>> {
                let sff = rep.sff_at(x)?;
                if curvature_at(&sff, tol.flat).flat_point {
                    return Ok(None);
                }
                let beta = j_couple(&alpha_form(&sff), &e.kaehler.j, tol.sym)?;
                Ok(Some(flatness_defect(&beta)))
            })
            .collect::<Result<Vec<_>>>()?;
        for v in vals.into_iter().flatten() {
            c.max("flatness", v);
            *c.metrics.get_mut("non_flat_points").unwrap() += 1.0;
        }
    }
    c.at_most("flatness", tol.flat);
    Ok(c)
}

/// Random admissible spec with nondegenerate `S(β)` in the range `p ≤ 5`, `2p < n ≤ 12`.
pub fn random_costum_spec(rng: &mut ChaCha8Rng) -> SynthSpec {
    let p = rng.gen_range(1..=5);
    let n_min = 2 * p + 2;
    let n = 2 * rng.gen_range(n_min / 2..=6);
    // kernel_dim ≥ n − 2p keeps the number of complex lines within p
    let lines = rng.gen_range(0..=p.min(n / 2));
    let minus = rng.gen_range(0..=1);
    SynthSpec::nondegenerate_span(n, p, n - 2 * lines, minus, rng.gen())
}

fn costum_suite(seed: u64) -> Result<Collector> {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs: Vec<SynthSpec> = (0..1000).map(|_| random_costum_spec(&mut rng)).collect();
    let records = specs
        .par_iter()
        .map(|spec| -> Result<_> {
            let (alpha, j, _) = synth_flat(spec)?;
            costum_verify(&alpha, &j, &tol)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut c = Collector::new();
    c.set("instances", records.len() as f64);
    c.set("violations", records.iter().filter(|r| !r.satisfied).count() as f64);
    c.set("degenerate_spans", records.iter().filter(|r| !r.nondegenerate).count() as f64);
    c.set("not_applicable", records.iter().filter(|r| !r.applicable).count() as f64);
    c.set("min_slack", records.iter().map(|r| r.dim_n as f64 - r.bound as f64).fold(f64::INFINITY, f64::min));
    c.at_most("violations", 0.0);
    c.at_most("degenerate_spans", 0.0);
    c.at_most("not_applicable", 0.0);
    Ok(c)
}

/// Random admissible spec for the decomposition round trip, cycling
/// through DEG_L with `s ∈ {2, 4}` and NONDEG_L.
pub fn random_roundtrip_spec(rng: &mut ChaCha8Rng, kind: usize) -> SynthSpec {
    loop {
        let (s, tag) = match kind % 4 {
            0 => (2, CaseTag::DegL),
            1 => (4, CaseTag::DegL),
            2 => (2, CaseTag::NondegL),
            _ => (4, CaseTag::NondegL),
        };
        let p: usize = rng.gen_range(s..=5);
        let n_min = 2 * p + 2;
        if n_min > 12 {
            continue;
        }
        let n = 2 * rng.gen_range(n_min / 2..=6);
        let minus = if tag == CaseTag::DegL { 1 } else { rng.gen_range(0..=1) };
        let room = match tag {
            CaseTag::DegL => p - s,
            CaseTag::NondegL => match (p - s).checked_sub(minus) {
                Some(r) => r,
                None => continue,
            },
        };
        let lines = rng.gen_range(0..=room.min(n / 2));
        let spec = SynthSpec { n, p, s, case_tag: Some(tag), kernel_dim: n - 2 * lines, minus, seed: rng.gen() };
        return spec;
    }
}

/// `min ‖â ∓ b̂‖` over unit directions.
pub fn direction_error(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let a = a / a.norm();
    let b = b / b.norm();
    (&a - &b).norm().min((&a + &b).norm())
}

fn roundtrip_suite(seed: u64) -> Collector {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs: Vec<SynthSpec> = (0..200).map(|k| random_roundtrip_spec(&mut rng, k)).collect();
    let outcomes: Vec<std::result::Result<(bool, bool, f64, f64, f64, bool), String>> = specs
        .par_iter()
        .map(|spec| {
            let (alpha, j, planted) = synth_flat(spec).map_err(|e| format!("{spec:?}: {e}"))?;
            let r = structure_decompose(&alpha, &j, None, &tol).map_err(|e| format!("{spec:?}: {e}"))?;
            let delta_err = match (&planted.delta, &r.delta) {
                (Some(a), Some(b)) => direction_error(a, b),
                (None, None) => 0.0,
                _ => f64::INFINITY,
            };
            Ok((
                Some(r.case_tag) == planted.case_tag,
                r.s == planted.s,
                delta_err,
                r.alpha1_symmetry_defect,
                r.delta_orthogonality_defect,
                r.dim_delta == planted.dim_delta && r.dim_delta as i64 >= r.delta_bound,
            ))
        })
        .collect();
    let mut c = Collector::new();
    c.set("instances", specs.len() as f64);
    for key in ["case_mismatch", "s_mismatch", "dim_delta_mismatch", "errors", "delta_direction", "alpha1_symmetry", "delta_orthogonality"] {
        c.set(key, 0.0);
    }
    for o in outcomes {
        match o {
            Err(msg) => {
                *c.metrics.get_mut("errors").unwrap() += 1.0;
                c.fail(msg);
            }
            Ok((case_ok, s_ok, de, a1, orth, dim_ok)) => {
                *c.metrics.get_mut("case_mismatch").unwrap() += f64::from(!case_ok);
                *c.metrics.get_mut("s_mismatch").unwrap() += f64::from(!s_ok);
                *c.metrics.get_mut("dim_delta_mismatch").unwrap() += f64::from(!dim_ok);
                c.max("delta_direction", de);
                c.max("alpha1_symmetry", a1);
                c.max("delta_orthogonality", orth);
            }
        }
    }
    c.at_most("case_mismatch", 0.0);
    c.at_most("s_mismatch", 0.0);
    c.at_most("dim_delta_mismatch", 0.0);
    c.at_most("delta_direction", 1e-6);
    c.at_most("alpha1_symmetry", 1e-8);
    c.at_most("delta_orthogonality", 1e-8);
    c
}

fn congruence_suite(seed: u64) -> Result<Collector> {
    let mut c = Collector::new();
    c.set("congruence", 0.0);
    c.set("triple_independence", 0.0);
    for id in ["catenoid-cyl-n2", "holo-graph-sq-n2"] {
        let f = load(id)?;
        let g = gallery::compose(&gallery::default_inversion(f.patch.ambient_dim()), &f)?;
        let rf = f.canonical_representative()?;
        let rg = g.canonical_representative()?;
        let samples = f.sample_points(50, seed);
        let report = congruence_defect(&rf, &rg, &f.patch.domain.center(), &samples)?;
        c.max("congruence", report.defect);
        c.max("congruence_lorentz", report.lorentz_defect);

        let lambda = random_lorentz(rf.patch.ambient_dim(), seed ^ 0x7A, 0.4);
        let moved = rf.with_triple(&rf.triple.transformed(&lambda)?)?;
        for x in &samples {
            let a = moved.position(x)?;
            let b = &lambda * rf.position(x)?;
            c.max("triple_independence", (&a - &b).norm() / (1.0 + b.norm()));
        }
    }
    let id = gallery::identity_annulus();
    let sq = gallery::z_squared_annulus();
    let samples = id.sample_points(50, seed);
    let neg = congruence_defect(&id.canonical_representative()?, &sq.canonical_representative()?, &id.patch.domain.center(), &samples)?;
    c.set("negative_control", neg.defect);
    c.at_most("congruence", 1e-6);
    c.at_most("triple_independence", 1e-8);
    c.at_least("negative_control", 0.1);
    Ok(c)
}

fn delta_suite(seed: u64) -> Result<Collector> {
    let tol = Tolerances::default();
    let mut c = Collector::new();
    let sq = gallery::z_squared_annulus();
    let scan = delta_detect(&sq.canonical_representative()?, &sq.kaehler.j, &sq.sample_points(50, seed), &tol)?;
    c.set("z_squared_variance", scan.variance);
    c.set("z_squared_detected", f64::from(scan.delta.is_some()));
    for id in ["identity-annulus", "inv-catenoid-cyl-n4"] {
        let e = load(id)?;
        let scan = delta_detect(&e.canonical_representative()?, &e.kaehler.j, &e.sample_points(50, seed), &tol)?;
        c.max("positive_variance", scan.variance);
        c.max("positive_a_delta", scan.a_delta_defect);
        if scan.delta.is_none() {
            c.fail(format!("{id}: no constant delta detected"));
        }
    }
    // the canonical triple of an isometric example has δ = w
    let e = load("identity-annulus")?;
    let scan = delta_detect(&e.canonical_representative()?, &e.kaehler.j, &e.sample_points(20, seed), &tol)?;
    let w = LightConeTriple::canonical(2).w;
    c.set("identity_delta_vs_w", (&scan.mean - &w).norm());
    c.at_most("z_squared_detected", 0.0);
    c.at_least("z_squared_variance", 10.0 * tol.var);
    c.at_most("positive_variance", tol.var);
    c.at_most("positive_a_delta", 1e-6);
    c.at_most("identity_delta_vs_w", 1e-8);
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite() {
        assert_eq!(verify_suite("nope", 0).unwrap_err().code(), "UNKNOWN_SUITE");
    }

    #[test]
    fn psi_suite_passes() {
        let r = verify_suite("psi", 1).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn random_specs_are_admissible() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for k in 0..200 {
            let s = random_roundtrip_spec(&mut rng, k);
            assert!(synth_flat(&s).is_ok(), "{s:?}");
            let s = random_costum_spec(&mut rng);
            assert!(synth_flat(&s).is_ok(), "{s:?}");
        }
    }
}
