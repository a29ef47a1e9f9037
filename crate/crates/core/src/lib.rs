//! Numerical toolkit for conformal immersions of Kaehler manifolds into
//! Euclidean space, studied through their isometric light-cone
//! representatives and the flat bilinear forms they induce.

pub mod bilinear;
pub mod classify;
pub mod error;
pub mod expr;
pub mod gallery;
pub mod immersion;
pub mod jet;
pub mod lightcone;
pub mod linalg;
pub mod verify;

pub use error::{GeomError, Result};

use serde::{Deserialize, Serialize};

/// Thresholds shared by the algebraic and geometric layers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative singular-value / eigenvalue cut for ranks and radicals.
    pub rank: f64,
    /// Normalized flatness defect accepted as flat.
    pub flat: f64,
    /// Spread of `δ` over the domain accepted as constant.
    pub var: f64,
    /// Asymmetry of `α` accepted (and removed by symmetrization).
    pub sym: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rank: 1e-8, flat: 1e-6, var: 1e-6, sym: 1e-8 }
    }
}
