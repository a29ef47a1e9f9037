//! Truncated multivariate Taylor arithmetic up to order three.
//!
//! A [`Jet`] carries the value of a scalar function together with its first,
//! second and third partial derivatives with respect to `dim` chart
//! coordinates. Derivative tensors are stored densely (`d`, `d²`, `d³`
//! entries). The order is chosen at seeding time; higher slots are left empty
//! when the order is lower, so order-2 evaluation costs nothing for third
//! derivatives.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    order: u8,
    dim: usize,
    value: f64,
    grad: Vec<f64>,
    hess: Vec<f64>,
    third: Vec<f64>,
}

impl Jet {
    pub fn constant(value: f64, dim: usize, order: u8) -> Self {
        assert!(order <= 3, "jets are truncated at order 3");
        let g = if order >= 1 { dim } else { 0 };
        let h = if order >= 2 { dim * dim } else { 0 };
        let t = if order >= 3 { dim * dim * dim } else { 0 };
        Self {
            order,
            dim,
            value,
            grad: vec![0.0; g],
            hess: vec![0.0; h],
            third: vec![0.0; t],
        }
    }

    /// The coordinate function `x_index` evaluated at `value`.
    pub fn variable(value: f64, index: usize, dim: usize, order: u8) -> Self {
        let mut j = Self::constant(value, dim, order);
        if order >= 1 {
            j.grad[index] = 1.0;
        }
        j
    }

    /// Seeds all coordinates of a point.
    pub fn seed(point: &[f64], order: u8) -> Vec<Jet> {
        let d = point.len();
        point
            .iter()
            .enumerate()
            .map(|(i, &x)| Jet::variable(x, i, d, order))
            .collect()
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn d1(&self, i: usize) -> f64 {
        self.grad[i]
    }

    pub fn d2(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim + j]
    }

    pub fn d3(&self, i: usize, j: usize, k: usize) -> f64 {
        self.third[(i * self.dim + j) * self.dim + k]
    }

    pub fn gradient(&self) -> &[f64] {
        &self.grad
    }

    fn check(&self, other: &Jet) {
        debug_assert_eq!(self.dim, other.dim, "jet dimension mismatch");
        debug_assert_eq!(self.order, other.order, "jet order mismatch");
    }

    pub fn scale(&self, c: f64) -> Jet {
        Jet {
            order: self.order,
            dim: self.dim,
            value: self.value * c,
            grad: self.grad.iter().map(|v| v * c).collect(),
            hess: self.hess.iter().map(|v| v * c).collect(),
            third: self.third.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add_const(&self, c: f64) -> Jet {
        let mut out = self.clone();
        out.value += c;
        out
    }

    fn zip(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        self.check(other);
        Jet {
            order: self.order,
            dim: self.dim,
            value: f(self.value, other.value),
            grad: self.grad.iter().zip(&other.grad).map(|(a, b)| f(*a, *b)).collect(),
            hess: self.hess.iter().zip(&other.hess).map(|(a, b)| f(*a, *b)).collect(),
            third: self.third.iter().zip(&other.third).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    pub fn mul_jet(&self, other: &Jet) -> Jet {
        self.check(other);
        let d = self.dim;
        let (u, v) = (self, other);
        let mut out = Jet::constant(u.value * v.value, d, self.order);
        if self.order >= 1 {
            for i in 0..d {
                out.grad[i] = u.grad[i] * v.value + u.value * v.grad[i];
            }
        }
        if self.order >= 2 {
            for i in 0..d {
                for j in 0..d {
                    let ij = i * d + j;
                    out.hess[ij] = u.hess[ij] * v.value
                        + u.grad[i] * v.grad[j]
                        + u.grad[j] * v.grad[i]
                        + u.value * v.hess[ij];
                }
            }
        }
        if self.order >= 3 {
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        let ijk = (i * d + j) * d + k;
                        out.third[ijk] = u.third[ijk] * v.value
                            + u.hess[i * d + j] * v.grad[k]
                            + u.hess[i * d + k] * v.grad[j]
                            + u.hess[j * d + k] * v.grad[i]
                            + u.grad[i] * v.hess[j * d + k]
                            + u.grad[j] * v.hess[i * d + k]
                            + u.grad[k] * v.hess[i * d + j]
                            + u.value * v.third[ijk];
                    }
                }
            }
        }
        out
    }

    /// Applies a scalar function given its value and first three derivatives
    /// at `self.value()` (Faà di Bruno up to order three).
    pub fn chain(&self, f0: f64, f1: f64, f2: f64, f3: f64) -> Jet {
        let d = self.dim;
        let u = self;
        let mut out = Jet::constant(f0, d, self.order);
        if self.order >= 1 {
            for i in 0..d {
                out.grad[i] = f1 * u.grad[i];
            }
        }
        if self.order >= 2 {
            for i in 0..d {
                for j in 0..d {
                    let ij = i * d + j;
                    out.hess[ij] = f2 * u.grad[i] * u.grad[j] + f1 * u.hess[ij];
                }
            }
        }
        if self.order >= 3 {
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        let ijk = (i * d + j) * d + k;
                        out.third[ijk] = f3 * u.grad[i] * u.grad[j] * u.grad[k]
                            + f2 * (u.hess[i * d + j] * u.grad[k]
                                + u.hess[i * d + k] * u.grad[j]
                                + u.hess[j * d + k] * u.grad[i])
                            + f1 * u.third[ijk];
                    }
                }
            }
        }
        out
    }

    pub fn recip(&self) -> Jet {
        let x = self.value;
        let r = 1.0 / x;
        self.chain(r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r)
    }

    pub fn div_jet(&self, other: &Jet) -> Jet {
        self.mul_jet(&other.recip())
    }

    pub fn exp(&self) -> Jet {
        let e = self.value.exp();
        self.chain(e, e, e, e)
    }

    pub fn ln(&self) -> Jet {
        let x = self.value;
        self.chain(x.ln(), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x))
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s, -c)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c, s)
    }

    pub fn sinh(&self) -> Jet {
        let (s, c) = (self.value.sinh(), self.value.cosh());
        self.chain(s, c, s, c)
    }

    pub fn cosh(&self) -> Jet {
        let (s, c) = (self.value.sinh(), self.value.cosh());
        self.chain(c, s, c, s)
    }

    /// `self^p` for a real exponent; integer exponents also accept negative bases.
    pub fn powf(&self, p: f64) -> Jet {
        let x = self.value;
        let pw = |e: f64| -> f64 {
            if e == 0.0 {
                1.0
            } else if e.fract() == 0.0 && e.abs() < i32::MAX as f64 {
                x.powi(e as i32)
            } else {
                x.powf(e)
            }
        };
        // Derivative coefficients vanish for small non-negative integer powers;
        // skip them so that 0^(negative) never appears.
        let f1 = if p == 0.0 { 0.0 } else { p * pw(p - 1.0) };
        let f2 = if p == 0.0 || p == 1.0 { 0.0 } else { p * (p - 1.0) * pw(p - 2.0) };
        let f3 = if p == 0.0 || p == 1.0 || p == 2.0 {
            0.0
        } else {
            p * (p - 1.0) * (p - 2.0) * pw(p - 3.0)
        };
        self.chain(pw(p), f1, f2, f3)
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.mul_jet(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}
