//! Random flat J-coupled forms with a known decomposition.
//!
//! The form is assembled as `α = α₀ + α₁ + α₂` on an adapted basis of `U`:
//! `α₀ = a₀(X,Y) δ` with `δ` null, `α₁` the real and imaginary parts of a
//! complex-bilinear form (so its coupling is null), and `α₂` a sum of 2×2
//! blocks on distinct complex lines, each with its own orthonormal target.
//! Bases of `V` and `U` are then scrambled by random invertible maps.

use std::sync::Arc;

use nalgebra::{Complex, DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BilinearFormTensor, CaseTag, ComplexStructure};
use crate::error::{GeomError, Result};
use crate::linalg::GramSpace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub p: usize,
    /// Planted radical dimension; 0 gives a nondegenerate `S(β)`.
    pub s: usize,
    /// Required when `s > 0`.
    pub case_tag: Option<CaseTag>,
    /// `dim N(α₂) ∩ J N(α₂)`.
    pub kernel_dim: usize,
    /// Number of negative directions in `U`.
    #[serde(default)]
    pub minus: usize,
    pub seed: u64,
}

impl SynthSpec {
    pub fn deg_l(n: usize, p: usize, s: usize, kernel_dim: usize, seed: u64) -> Self {
        Self { n, p, s, case_tag: Some(CaseTag::DegL), kernel_dim, minus: 1, seed }
    }

    pub fn nondeg_l(n: usize, p: usize, s: usize, kernel_dim: usize, minus: usize, seed: u64) -> Self {
        Self { n, p, s, case_tag: Some(CaseTag::NondegL), kernel_dim, minus, seed }
    }

    pub fn nondegenerate_span(n: usize, p: usize, kernel_dim: usize, minus: usize, seed: u64) -> Self {
        Self { n, p, s: 0, case_tag: None, kernel_dim, minus, seed }
    }

    fn blocks(&self) -> Result<usize> {
        let bad = |msg: String| Err(GeomError::InconsistentSpec(msg));
        let Self { n, p, s, kernel_dim, minus, .. } = *self;
        if n == 0 || n % 2 == 1 {
            return bad(format!("n = {n} must be even and positive"));
        }
        if p == 0 || minus > p {
            return bad(format!("target dimension {p} with {minus} negative directions"));
        }
        if s % 2 == 1 {
            return bad(format!("s = {s} must be even"));
        }
        if kernel_dim > n || (n - kernel_dim) % 2 == 1 {
            return bad(format!("kernel_dim = {kernel_dim} must not exceed n and have the parity of n"));
        }
        let blocks = (n - kernel_dim) / 2;
        let room = match (s, self.case_tag) {
            (0, None) => p,
            (0, Some(_)) => return bad("s = 0 carries no case tag".into()),
            (_, None) => return bad("s > 0 needs a case tag".into()),
            (_, Some(tag)) => {
                if 2 * p >= n {
                    return bad(format!("need 2p < n, got p = {p}, n = {n}"));
                }
                match tag {
                    CaseTag::DegL => {
                        if minus != 1 || !(s == 2 || s == 4) || p < s {
                            return bad(format!("DEG_L needs a Lorentzian target, s in {{2,4}}, p >= s (p = {p}, s = {s})"));
                        }
                        p - s
                    }
                    CaseTag::NondegL => {
                        if minus > 1 || s + minus > p {
                            return bad(format!("NONDEG_L needs s + minus <= p with minus <= 1 (p = {p}, s = {s})"));
                        }
                        p - s - minus
                    }
                }
            }
        };
        if blocks > room {
            return bad(format!(
                "kernel_dim = {kernel_dim} needs {blocks} complex lines but only {room} targets are available"
            ));
        }
        Ok(blocks)
    }
}

/// What was planted, in the scrambled bases.
#[derive(Debug, Clone)]
pub struct PlantedStructure {
    pub s: usize,
    pub case_tag: Option<CaseTag>,
    pub delta: Option<DVector<f64>>,
    pub zeta: Option<DVector<f64>>,
    pub dim_delta: usize,
    /// Columns of `M` (new basis of `V` in old coordinates).
    pub domain_change: DMatrix<f64>,
    /// Columns of `P` (new basis of `U` in old coordinates).
    pub target_change: DMatrix<f64>,
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(-1.0..1.0)
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = uniform(rng);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Random invertible matrix with condition number at most `max_cond`.
fn random_gl(rng: &mut ChaCha8Rng, n: usize, max_cond: f64) -> DMatrix<f64> {
    loop {
        let m = DMatrix::from_fn(n, n, |i, j| uniform(rng) * 0.5 + if i == j { 1.0 } else { 0.0 });
        let sv = crate::linalg::singular_values(&m);
        if sv.min() > 0.0 && sv.max() / sv.min() <= max_cond {
            return m;
        }
    }
}

fn random_block(rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    loop {
        let a = random_symmetric(rng, 2);
        if a.determinant().abs() > 0.1 {
            return a;
        }
    }
}

/// Generates a symmetric `α` with flat J-coupling and a planted structure.
pub fn synth_flat(spec: &SynthSpec) -> Result<(BilinearFormTensor, ComplexStructure, PlantedStructure)> {
    let blocks = spec.blocks()?;
    let SynthSpec { n, p, s, minus, .. } = *spec;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut gram = DMatrix::identity(p, p);
    for k in 0..minus {
        gram[(p - 1 - k, p - 1 - k)] = -1.0;
    }
    let e = |k: usize| {
        let mut v = DVector::zeros(p);
        v[k] = 1.0;
        v
    };

    // adapted basis: (δ-side | U₁ | block targets)
    let (delta, zeta, u1, targets): (Option<DVector<f64>>, Option<DVector<f64>>, Vec<DVector<f64>>, Vec<DVector<f64>>) =
        match spec.case_tag {
            Some(CaseTag::DegL) => {
                let r = std::f64::consts::FRAC_1_SQRT_2;
                let d = (e(0) + e(p - 1)) * r;
                let z = (e(0) - e(p - 1)) * r;
                let u1 = (1..s - 1).map(e).collect();
                let u2 = (s - 1..p - 1).map(e).collect();
                (Some(d), Some(z), u1, u2)
            }
            Some(CaseTag::NondegL) => (None, None, (0..s).map(e).collect(), (s..p - minus).map(e).collect()),
            None => {
                let mut all: Vec<DVector<f64>> = (0..p).map(e).collect();
                all.shuffle(&mut rng);
                (None, None, Vec::new(), all)
            }
        };

    let mut coeffs = vec![DVector::<f64>::zeros(p); n * n];
    let half = n / 2;

    if let Some(d) = &delta {
        let a0 = random_symmetric(&mut rng, n);
        for i in 0..n {
            for j in 0..n {
                coeffs[i * n + j] += d * a0[(i, j)];
            }
        }
    }

    // z(e_{2k}) = ε_k, z(e_{2k+1}) = i ε_k
    let unit = |a: usize| if a % 2 == 0 { Complex::new(1.0, 0.0) } else { Complex::new(0.0, 1.0) };
    for c in 0..u1.len() / 2 {
        let mut b = DMatrix::<Complex<f64>>::zeros(half, half);
        for k in 0..half {
            for l in k..half {
                let v = Complex::new(uniform(&mut rng), uniform(&mut rng));
                b[(k, l)] = v;
                b[(l, k)] = v;
            }
        }
        for i in 0..n {
            for j in 0..n {
                let v = b[(i / 2, j / 2)] * unit(i) * unit(j);
                coeffs[i * n + j] += &u1[2 * c] * v.re + &u1[2 * c + 1] * v.im;
            }
        }
    }

    for (k, eta) in targets.iter().take(blocks).enumerate() {
        let a = random_block(&mut rng);
        for (x, i) in [2 * k, 2 * k + 1].into_iter().enumerate() {
            for (y, j) in [2 * k, 2 * k + 1].into_iter().enumerate() {
                coeffs[i * n + j] += eta * a[(x, y)];
            }
        }
    }

    let target = Arc::new(GramSpace::new(gram)?);
    let alpha = BilinearFormTensor::new(n, target, coeffs)?;
    let m = random_gl(&mut rng, n, 20.0);
    let pm = random_gl(&mut rng, p, 20.0);
    let pinv = pm.clone().try_inverse().ok_or(GeomError::GenerationFailed("target change".into()))?;
    let alpha = alpha.change_domain_basis(&m).change_target_basis(&pm)?;
    let j = ComplexStructure::standard(n).conjugate(&m)?;
    let planted = PlantedStructure {
        s,
        case_tag: spec.case_tag,
        delta: delta.map(|d| &pinv * d),
        zeta: zeta.map(|z| &pinv * z),
        dim_delta: n - 2 * blocks,
        domain_change: m,
        target_change: pm,
    };
    Ok((alpha, j, planted))
}
