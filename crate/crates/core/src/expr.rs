//! Elementary-function expression trees for chart maps.
//!
//! Scalar expressions ([`Expr`]) are built from chart coordinates, constants,
//! arithmetic, `pow`, `exp`, `log`, `sin`, `cos`, `sinh`, `cosh`, squared norms
//! and composition. Vector-valued maps ([`MapExpr`]) are lists of components,
//! compositions of maps, or concatenations. Both serialize to JSON with an
//! explicit tag (`"op"` for scalars, `"kind"` for maps).
//!
//! Evaluation is always through [`Jet`] arithmetic, so one walk of the tree
//! yields values and derivatives together.

use std::ops;

use serde::{Deserialize, Serialize};

use crate::jet::Jet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Expr {
    Coord { index: usize },
    Const { value: f64 },
    Add { args: Vec<Expr> },
    Sub { lhs: Box<Expr>, rhs: Box<Expr> },
    Mul { args: Vec<Expr> },
    Div { num: Box<Expr>, den: Box<Expr> },
    Neg { arg: Box<Expr> },
    Pow { base: Box<Expr>, exponent: f64 },
    Exp { arg: Box<Expr> },
    Log { arg: Box<Expr> },
    Sin { arg: Box<Expr> },
    Cos { arg: Box<Expr> },
    Sinh { arg: Box<Expr> },
    Cosh { arg: Box<Expr> },
    /// Sum of squares of the arguments.
    Norm2 { args: Vec<Expr> },
    /// `outer(inner_1, ..., inner_k)`; `outer` is written in `k` coordinates.
    Compose { outer: Box<Expr>, inner: Vec<Expr> },
}

impl Expr {
    pub fn coord(index: usize) -> Expr {
        Expr::Coord { index }
    }

    pub fn constant(value: f64) -> Expr {
        Expr::Const { value }
    }

    pub fn sum(args: Vec<Expr>) -> Expr {
        match args.len() {
            0 => Expr::constant(0.0),
            1 => args.into_iter().next().unwrap(),
            _ => Expr::Add { args },
        }
    }

    pub fn product(args: Vec<Expr>) -> Expr {
        match args.len() {
            0 => Expr::constant(1.0),
            1 => args.into_iter().next().unwrap(),
            _ => Expr::Mul { args },
        }
    }

    pub fn pow(self, exponent: f64) -> Expr {
        Expr::Pow { base: Box::new(self), exponent }
    }

    pub fn exp(self) -> Expr {
        Expr::Exp { arg: Box::new(self) }
    }

    pub fn log(self) -> Expr {
        Expr::Log { arg: Box::new(self) }
    }

    pub fn sin(self) -> Expr {
        Expr::Sin { arg: Box::new(self) }
    }

    pub fn cos(self) -> Expr {
        Expr::Cos { arg: Box::new(self) }
    }

    pub fn sinh(self) -> Expr {
        Expr::Sinh { arg: Box::new(self) }
    }

    pub fn cosh(self) -> Expr {
        Expr::Cosh { arg: Box::new(self) }
    }

    pub fn norm2(args: Vec<Expr>) -> Expr {
        Expr::Norm2 { args }
    }

    pub fn compose(outer: Expr, inner: Vec<Expr>) -> Expr {
        Expr::Compose { outer: Box::new(outer), inner }
    }

    /// One past the largest coordinate index referenced (outside compositions'
    /// outer expressions, which live in their own coordinates).
    pub fn arity(&self) -> usize {
        match self {
            Expr::Coord { index } => index + 1,
            Expr::Const { .. } => 0,
            Expr::Add { args } | Expr::Mul { args } | Expr::Norm2 { args } => {
                args.iter().map(Expr::arity).max().unwrap_or(0)
            }
            Expr::Sub { lhs, rhs } => lhs.arity().max(rhs.arity()),
            Expr::Div { num, den } => num.arity().max(den.arity()),
            Expr::Neg { arg }
            | Expr::Exp { arg }
            | Expr::Log { arg }
            | Expr::Sin { arg }
            | Expr::Cos { arg }
            | Expr::Sinh { arg }
            | Expr::Cosh { arg } => arg.arity(),
            Expr::Pow { base, .. } => base.arity(),
            Expr::Compose { inner, .. } => inner.iter().map(Expr::arity).max().unwrap_or(0),
        }
    }

    pub fn eval_jet(&self, inputs: &[Jet]) -> Jet {
        let (dim, order) = inputs
            .first()
            .map(|j| (j.dim(), j.order()))
            .unwrap_or((0, 0));
        match self {
            Expr::Coord { index } => inputs[*index].clone(),
            Expr::Const { value } => Jet::constant(*value, dim, order),
            Expr::Add { args } => {
                let mut it = args.iter();
                let first = it.next().map_or(Jet::constant(0.0, dim, order), |a| a.eval_jet(inputs));
                it.fold(first, |acc, a| &acc + &a.eval_jet(inputs))
            }
            Expr::Sub { lhs, rhs } => &lhs.eval_jet(inputs) - &rhs.eval_jet(inputs),
            Expr::Mul { args } => {
                let mut acc = Jet::constant(1.0, dim, order);
                let mut scalar = 1.0;
                for a in args {
                    if let Expr::Const { value } = a {
                        scalar *= value;
                    } else {
                        acc = &acc * &a.eval_jet(inputs);
                    }
                }
                if scalar == 1.0 {
                    acc
                } else {
                    acc.scale(scalar)
                }
            }
            Expr::Div { num, den } => num.eval_jet(inputs).div_jet(&den.eval_jet(inputs)),
            Expr::Neg { arg } => -&arg.eval_jet(inputs),
            Expr::Pow { base, exponent } => base.eval_jet(inputs).powf(*exponent),
            Expr::Exp { arg } => arg.eval_jet(inputs).exp(),
            Expr::Log { arg } => arg.eval_jet(inputs).ln(),
            Expr::Sin { arg } => arg.eval_jet(inputs).sin(),
            Expr::Cos { arg } => arg.eval_jet(inputs).cos(),
            Expr::Sinh { arg } => arg.eval_jet(inputs).sinh(),
            Expr::Cosh { arg } => arg.eval_jet(inputs).cosh(),
            Expr::Norm2 { args } => {
                let mut acc = Jet::constant(0.0, dim, order);
                for a in args {
                    let j = a.eval_jet(inputs);
                    acc = &acc + &(&j * &j);
                }
                acc
            }
            Expr::Compose { outer, inner } => {
                let inner: Vec<Jet> = inner.iter().map(|e| e.eval_jet(inputs)).collect();
                outer.eval_jet(&inner)
            }
        }
    }

    /// Plain value at a point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_jet(&Jet::seed(x, 0)).value()
    }
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        match self {
            Expr::Add { mut args } => {
                args.push(rhs);
                Expr::Add { args }
            }
            lhs => Expr::Add { args: vec![lhs, rhs] },
        }
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Sub { lhs: Box::new(self), rhs: Box::new(rhs) }
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        match self {
            Expr::Mul { mut args } => {
                args.push(rhs);
                Expr::Mul { args }
            }
            lhs => Expr::Mul { args: vec![lhs, rhs] },
        }
    }
}

impl ops::Mul<f64> for Expr {
    type Output = Expr;
    fn mul(self, rhs: f64) -> Expr {
        Expr::Mul { args: vec![Expr::constant(rhs), self] }
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Div { num: Box::new(self), den: Box::new(rhs) }
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg { arg: Box::new(self) }
    }
}

/// A vector-valued map `R^d -> R^D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapExpr {
    Components { components: Vec<Expr> },
    /// `outer ∘ inner`.
    Compose { outer: Box<MapExpr>, inner: Box<MapExpr> },
    /// Outputs of every part stacked; all parts read the same inputs.
    Concat { parts: Vec<MapExpr> },
}

impl MapExpr {
    pub fn components(components: Vec<Expr>) -> MapExpr {
        MapExpr::Components { components }
    }

    pub fn identity(d: usize) -> MapExpr {
        MapExpr::components((0..d).map(Expr::coord).collect())
    }

    pub fn compose(outer: MapExpr, inner: MapExpr) -> MapExpr {
        MapExpr::Compose { outer: Box::new(outer), inner: Box::new(inner) }
    }

    pub fn concat(parts: Vec<MapExpr>) -> MapExpr {
        MapExpr::Concat { parts }
    }

    /// The same map reading its inputs from coordinates `offset..offset+arity`.
    pub fn shifted(self, offset: usize, arity: usize) -> MapExpr {
        if offset == 0 {
            return self;
        }
        let pick = MapExpr::components((0..arity).map(|i| Expr::coord(offset + i)).collect());
        MapExpr::compose(self, pick)
    }

    pub fn output_dim(&self) -> usize {
        match self {
            MapExpr::Components { components } => components.len(),
            MapExpr::Compose { outer, .. } => outer.output_dim(),
            MapExpr::Concat { parts } => parts.iter().map(MapExpr::output_dim).sum(),
        }
    }

    /// Number of input coordinates referenced.
    pub fn arity(&self) -> usize {
        match self {
            MapExpr::Components { components } => components.iter().map(Expr::arity).max().unwrap_or(0),
            MapExpr::Compose { inner, .. } => inner.arity(),
            MapExpr::Concat { parts } => parts.iter().map(MapExpr::arity).max().unwrap_or(0),
        }
    }

    pub fn eval_jets(&self, inputs: &[Jet]) -> Vec<Jet> {
        match self {
            MapExpr::Components { components } => components.iter().map(|c| c.eval_jet(inputs)).collect(),
            MapExpr::Compose { outer, inner } => {
                let mid = inner.eval_jets(inputs);
                outer.eval_jets(&mid)
            }
            MapExpr::Concat { parts } => parts.iter().flat_map(|p| p.eval_jets(inputs)).collect(),
        }
    }

    /// One scalar expression per output component.
    pub fn component_exprs(&self) -> Vec<Expr> {
        match self {
            MapExpr::Components { components } => components.clone(),
            MapExpr::Concat { parts } => parts.iter().flat_map(MapExpr::component_exprs).collect(),
            MapExpr::Compose { outer, inner } => {
                let inner = inner.component_exprs();
                outer
                    .component_exprs()
                    .into_iter()
                    .map(|o| Expr::compose(o, inner.clone()))
                    .collect()
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.eval_jets(&Jet::seed(x, 0)).iter().map(Jet::value).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn arithmetic_and_derivatives() {
        // f(x, y) = exp(x) * sin(y) / (1 + x^2)
        let x = Expr::coord(0);
        let y = Expr::coord(1);
        let f = (x.clone().exp() * y.sin()) / (Expr::constant(1.0) + x.pow(2.0));
        let p = [0.4, -1.1];
        let j = f.eval_jet(&Jet::seed(&p, 2));
        let (a, b) = (p[0], p[1]);
        let val = a.exp() * b.sin() / (1.0 + a * a);
        assert_relative_eq!(j.value(), val, epsilon = 1e-14);
        let dfdy = a.exp() * b.cos() / (1.0 + a * a);
        assert_relative_eq!(j.d1(1), dfdy, epsilon = 1e-14);
        assert_relative_eq!(j.d2(1, 1), -val, epsilon = 1e-14);
    }

    #[test]
    fn composition_matches_direct() {
        // outer(u, v) = u * v, inner = (x + y, x - y)  =>  x^2 - y^2
        let outer = Expr::coord(0) * Expr::coord(1);
        let inner = vec![Expr::coord(0) + Expr::coord(1), Expr::coord(0) - Expr::coord(1)];
        let f = Expr::compose(outer, inner);
        let j = f.eval_jet(&Jet::seed(&[0.3, 0.7], 2));
        assert_relative_eq!(j.value(), 0.09 - 0.49, epsilon = 1e-15);
        assert_relative_eq!(j.d2(0, 0), 2.0, epsilon = 1e-15);
        assert_relative_eq!(j.d2(1, 1), -2.0, epsilon = 1e-15);
        assert_relative_eq!(j.d2(0, 1), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn map_compose_and_concat() {
        let inner = MapExpr::components(vec![Expr::coord(0).cos(), Expr::coord(0).sin()]);
        let outer = MapExpr::components(vec![Expr::norm2(vec![Expr::coord(0), Expr::coord(1)])]);
        let m = MapExpr::concat(vec![MapExpr::compose(outer, inner.clone()), inner]);
        assert_eq!(m.output_dim(), 3);
        let v = m.eval(&[0.9]);
        assert_relative_eq!(v[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(v[1], 0.9_f64.cos(), epsilon = 1e-15);
    }

    #[test]
    fn shifted_reads_later_coordinates() {
        let m = MapExpr::components(vec![Expr::coord(0) * Expr::coord(1)]).shifted(2, 2);
        assert_eq!(m.arity(), 4);
        assert_relative_eq!(m.eval(&[9.0, 9.0, 2.0, 3.0])[0], 6.0);
    }

    #[test]
    fn json_shape() {
        let e = Expr::coord(0).sinh() * 2.0;
        let s = serde_json::to_string(&e).unwrap();
        assert!(s.contains("\"op\":\"mul\""));
        assert!(s.contains("\"op\":\"sinh\""));
        let back: Expr = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
        let m: MapExpr = serde_json::from_str(
            r#"{"kind":"components","components":[{"op":"coord","index":0},{"op":"const","value":1.5}]}"#,
        )
        .unwrap();
        assert_eq!(m.eval(&[0.25]), vec![0.25, 1.5]);
    }
}
