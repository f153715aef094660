//! Expression language for real-analytic functions of real chart coordinates.
//!
//! Variables are the `2n` real coordinates of a chart, ordered
//! `x1, y1, x2, y2, …` so that variable `2k` is `x_{k+1}` and `2k + 1` is
//! `y_{k+1}`. Constants are complex: Wirtinger derivatives introduce the
//! imaginary unit even when the input is real.
//!
//! Expressions are immutable, reference-counted DAGs. Derivatives and
//! substitutions reuse sub-trees, so repeated differentiation stays
//! polynomial in size; [`Tape`] flattens a set of roots (with structural
//! sharing) for fast repeated evaluation.

mod parse;
mod tape;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use parse::parse;
pub use tape::Tape;

pub type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            _ => None,
        }
    }

    pub(crate) fn apply(self, z: C64) -> Result<C64> {
        match self {
            Func::Sin => Ok(z.sin()),
            Func::Cos => Ok(z.cos()),
            Func::Exp => Ok(z.exp()),
            Func::Log => {
                if is_nonpositive_real(z) {
                    Err(Error::Domain(format!("log of non-positive value {}", z.re)))
                } else {
                    Ok(z.ln())
                }
            }
        }
    }
}

fn is_nonpositive_real(z: C64) -> bool {
    z.re <= 0.0 && z.im.abs() <= 1e-12 * (1.0 + z.re.abs())
}

#[derive(Debug)]
pub enum Node {
    Const(C64),
    Var(usize),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Neg(Expr),
    Pow(Expr, i32),
    Call(Func, Expr),
}

/// Shared handle to an expression node.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

/// Which Wirtinger operator: `∂/∂z_i` or `∂/∂z̄_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WirtingerKind {
    Holomorphic,
    Antiholomorphic,
}

/// A Wirtinger derivative slot; `index` is the 0-based complex coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WirtingerVar {
    pub index: usize,
    pub kind: WirtingerKind,
}

impl WirtingerVar {
    pub fn dz(index: usize) -> Self {
        WirtingerVar { index, kind: WirtingerKind::Holomorphic }
    }

    pub fn dzbar(index: usize) -> Self {
        WirtingerVar { index, kind: WirtingerKind::Antiholomorphic }
    }

    /// All `2n` slots of an `n`-dimensional chart.
    pub fn all(n: usize) -> Vec<WirtingerVar> {
        (0..n).flat_map(|i| [Self::dz(i), Self::dzbar(i)]).collect()
    }
}

pub fn x_var(k: usize) -> usize {
    2 * k
}

pub fn y_var(k: usize) -> usize {
    2 * k + 1
}

impl Expr {
    fn from_node(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn ptr(&self) -> *const Node {
        Arc::as_ptr(&self.0)
    }

    pub fn constant(c: C64) -> Expr {
        Expr::from_node(Node::Const(c))
    }

    pub fn real(v: f64) -> Expr {
        Expr::constant(C64::new(v, 0.0))
    }

    pub fn zero() -> Expr {
        Expr::real(0.0)
    }

    pub fn one() -> Expr {
        Expr::real(1.0)
    }

    pub fn imag_unit() -> Expr {
        Expr::constant(C64::new(0.0, 1.0))
    }

    pub fn var(index: usize) -> Expr {
        Expr::from_node(Node::Var(index))
    }

    /// `x_{k+1}` for 0-based complex coordinate `k`.
    pub fn x(k: usize) -> Expr {
        Expr::var(x_var(k))
    }

    pub fn y(k: usize) -> Expr {
        Expr::var(y_var(k))
    }

    /// The holomorphic coordinate `z_{k+1} = x_{k+1} + i y_{k+1}`.
    pub fn z(k: usize) -> Expr {
        Expr::x(k) + Expr::imag_unit() * Expr::y(k)
    }

    /// The antiholomorphic coordinate `z̄_{k+1}`.
    pub fn zbar(k: usize) -> Expr {
        Expr::x(k) - Expr::imag_unit() * Expr::y(k)
    }

    /// `|z|² = Σ (x_k² + y_k²)` over the first `n` complex coordinates.
    pub fn norm_sq(n: usize) -> Expr {
        (0..n).fold(Expr::zero(), |acc, k| acc + Expr::x(k).powi(2) + Expr::y(k).powi(2))
    }

    pub fn as_const(&self) -> Option<C64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(C64::new(0.0, 0.0))
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(C64::new(1.0, 0.0))
    }

    pub fn powi(&self, k: i32) -> Expr {
        if k == 0 {
            return Expr::one();
        }
        if k == 1 {
            return self.clone();
        }
        if let Some(c) = self.as_const() {
            if c != C64::new(0.0, 0.0) || k > 0 {
                return Expr::constant(c.powi(k));
            }
        }
        Expr::from_node(Node::Pow(self.clone(), k))
    }

    pub fn call(func: Func, arg: Expr) -> Expr {
        if let Some(c) = arg.as_const() {
            if let Ok(v) = func.apply(c) {
                return Expr::constant(v);
            }
        }
        Expr::from_node(Node::Call(func, arg))
    }

    pub fn sin(&self) -> Expr {
        Expr::call(Func::Sin, self.clone())
    }

    pub fn cos(&self) -> Expr {
        Expr::call(Func::Cos, self.clone())
    }

    pub fn exp(&self) -> Expr {
        Expr::call(Func::Exp, self.clone())
    }

    pub fn ln(&self) -> Expr {
        Expr::call(Func::Log, self.clone())
    }

    pub fn scale(&self, c: C64) -> Expr {
        Expr::constant(c) * self.clone()
    }

    /// Number of distinct nodes in the DAG.
    pub fn node_count(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.ptr()) {
                continue;
            }
            e.for_each_child(|c| stack.push(c.clone()));
        }
        seen.len()
    }

    fn for_each_child(&self, mut f: impl FnMut(&Expr)) {
        match self.node() {
            Node::Const(_) | Node::Var(_) => {}
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                f(a);
                f(b);
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => f(a),
        }
    }

    /// Variable indices that occur in the expression.
    pub fn free_vars(&self) -> BTreeSet<usize> {
        let mut seen = std::collections::HashSet::new();
        let mut vars = BTreeSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.ptr()) {
                continue;
            }
            if let Node::Var(v) = e.node() {
                vars.insert(*v);
            }
            e.for_each_child(|c| stack.push(c.clone()));
        }
        vars
    }

    pub fn is_constant(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Evaluate at a real point. Builds a throwaway tape; use [`Tape`]
    /// directly for repeated evaluation.
    pub fn eval(&self, point: &[f64]) -> Result<C64> {
        let tape = Tape::new(std::slice::from_ref(self));
        let mut out = [C64::new(0.0, 0.0)];
        tape.eval_into(point, &mut Vec::new(), &mut out)?;
        Ok(out[0])
    }

    /// Partial derivative with respect to real variable `var`.
    pub fn diff(&self, var: usize) -> Expr {
        let mut memo = HashMap::new();
        diff_rec(self, var, &mut memo)
    }

    /// Wirtinger derivative `∂_z = ½(∂_x − i∂_y)` or `∂_z̄ = ½(∂_x + i∂_y)`.
    pub fn wirtinger(&self, v: WirtingerVar) -> Expr {
        let dx = self.diff(x_var(v.index));
        let dy = self.diff(y_var(v.index));
        let half_i = match v.kind {
            WirtingerKind::Holomorphic => C64::new(0.0, -0.5),
            WirtingerKind::Antiholomorphic => C64::new(0.0, 0.5),
        };
        dx.scale(C64::new(0.5, 0.0)) + dy.scale(half_i)
    }

    /// Replace each variable `v` by `map[v]`. Every variable of `self`
    /// must be covered by `map`.
    pub fn substitute(&self, map: &[Expr]) -> Result<Expr> {
        if let Some(&max) = self.free_vars().iter().next_back() {
            if max >= map.len() {
                return Err(Error::DimensionMismatch { expected: max + 1, found: map.len() });
            }
        }
        let mut memo = HashMap::new();
        Ok(subst_rec(self, map, &mut memo))
    }

    /// Complex conjugate as a function of the (real) variables.
    ///
    /// Every supported function has real Taylor coefficients, so
    /// conjugation only touches constants.
    pub fn conj(&self) -> Expr {
        let mut memo = HashMap::new();
        conj_rec(self, &mut memo)
    }

    /// Real part `(e + ē)/2` as an expression.
    pub fn re(&self) -> Expr {
        (self.clone() + self.conj()).scale(C64::new(0.5, 0.0))
    }

    /// Imaginary part `(e − ē)/(2i)` as an expression.
    pub fn im(&self) -> Expr {
        (self.clone() - self.conj()).scale(C64::new(0.0, -0.5))
    }
}

fn diff_rec(e: &Expr, var: usize, memo: &mut HashMap<*const Node, Expr>) -> Expr {
    if let Some(d) = memo.get(&e.ptr()) {
        return d.clone();
    }
    let d = match e.node() {
        Node::Const(_) => Expr::zero(),
        Node::Var(v) => {
            if *v == var {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Add(a, b) => diff_rec(a, var, memo) + diff_rec(b, var, memo),
        Node::Sub(a, b) => diff_rec(a, var, memo) - diff_rec(b, var, memo),
        Node::Mul(a, b) => {
            let da = diff_rec(a, var, memo);
            let db = diff_rec(b, var, memo);
            da * b.clone() + a.clone() * db
        }
        Node::Div(a, b) => {
            let da = diff_rec(a, var, memo);
            let db = diff_rec(b, var, memo);
            if db.is_zero() {
                da / b.clone()
            } else {
                (da * b.clone() - a.clone() * db) / b.powi(2)
            }
        }
        Node::Neg(a) => -diff_rec(a, var, memo),
        Node::Pow(a, k) => {
            let da = diff_rec(a, var, memo);
            Expr::real(*k as f64) * a.powi(k - 1) * da
        }
        Node::Call(func, a) => {
            let da = diff_rec(a, var, memo);
            if da.is_zero() {
                Expr::zero()
            } else {
                match func {
                    Func::Sin => a.cos() * da,
                    Func::Cos => -(a.sin() * da),
                    Func::Exp => e.clone() * da,
                    Func::Log => da / a.clone(),
                }
            }
        }
    };
    memo.insert(e.ptr(), d.clone());
    d
}

fn subst_rec(e: &Expr, map: &[Expr], memo: &mut HashMap<*const Node, Expr>) -> Expr {
    if let Some(s) = memo.get(&e.ptr()) {
        return s.clone();
    }
    let s = match e.node() {
        Node::Const(_) => e.clone(),
        Node::Var(v) => map[*v].clone(),
        Node::Add(a, b) => subst_rec(a, map, memo) + subst_rec(b, map, memo),
        Node::Sub(a, b) => subst_rec(a, map, memo) - subst_rec(b, map, memo),
        Node::Mul(a, b) => subst_rec(a, map, memo) * subst_rec(b, map, memo),
        Node::Div(a, b) => subst_rec(a, map, memo) / subst_rec(b, map, memo),
        Node::Neg(a) => -subst_rec(a, map, memo),
        Node::Pow(a, k) => subst_rec(a, map, memo).powi(*k),
        Node::Call(f, a) => Expr::call(*f, subst_rec(a, map, memo)),
    };
    memo.insert(e.ptr(), s.clone());
    s
}

fn conj_rec(e: &Expr, memo: &mut HashMap<*const Node, Expr>) -> Expr {
    if let Some(s) = memo.get(&e.ptr()) {
        return s.clone();
    }
    let s = match e.node() {
        Node::Const(c) => {
            if c.im == 0.0 {
                e.clone()
            } else {
                Expr::constant(c.conj())
            }
        }
        Node::Var(_) => e.clone(),
        Node::Add(a, b) => conj_rec(a, memo) + conj_rec(b, memo),
        Node::Sub(a, b) => conj_rec(a, memo) - conj_rec(b, memo),
        Node::Mul(a, b) => conj_rec(a, memo) * conj_rec(b, memo),
        Node::Div(a, b) => conj_rec(a, memo) / conj_rec(b, memo),
        Node::Neg(a) => -conj_rec(a, memo),
        Node::Pow(a, k) => conj_rec(a, memo).powi(*k),
        Node::Call(f, a) => Expr::call(*f, conj_rec(a, memo)),
    };
    memo.insert(e.ptr(), s.clone());
    s
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a + b),
            _ if self.is_zero() => rhs,
            _ if rhs.is_zero() => self,
            _ => Expr::from_node(Node::Add(self, rhs)),
        }
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a - b),
            _ if rhs.is_zero() => self,
            _ if self.is_zero() => -rhs,
            _ => Expr::from_node(Node::Sub(self, rhs)),
        }
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a * b),
            _ if self.is_zero() || rhs.is_zero() => Expr::zero(),
            _ if self.is_one() => rhs,
            _ if rhs.is_one() => self,
            (None, Some(_)) => rhs * self,
            (Some(a), None) => {
                // fold c1 * (c2 * e)
                if let Node::Mul(inner_a, inner_b) = rhs.node() {
                    if let Some(b) = inner_a.as_const() {
                        return Expr::constant(a * b) * inner_b.clone();
                    }
                }
                if a == C64::new(-1.0, 0.0) {
                    return -rhs;
                }
                Expr::from_node(Node::Mul(self, rhs))
            }
            _ => Expr::from_node(Node::Mul(self, rhs)),
        }
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) if b != C64::new(0.0, 0.0) => Expr::constant(a / b),
            _ if rhs.is_one() => self,
            _ if self.is_zero() && !rhs.is_zero() => Expr::zero(),
            (None, Some(b)) if b != C64::new(0.0, 0.0) => Expr::constant(b.inv()) * self,
            _ => Expr::from_node(Node::Div(self, rhs)),
        }
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        if let Some(c) = self.as_const() {
            return Expr::constant(-c);
        }
        if let Node::Neg(inner) = self.node() {
            return inner.clone();
        }
        Expr::from_node(Node::Neg(self))
    }
}

fn var_name(v: usize) -> String {
    if v.is_multiple_of(2) {
        format!("x{}", v / 2 + 1)
    } else {
        format!("y{}", v / 2 + 1)
    }
}

fn fmt_real(v: f64) -> String {
    if v == std::f64::consts::PI {
        "pi".to_string()
    } else if v < 0.0 {
        format!("(-{:?})", -v)
    } else {
        format!("{v:?}")
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesised infix. Real-constant expressions re-parse to an
    /// equivalent tree; complex constants print as `(a+b*i)`, which the
    /// grammar does not accept.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => {
                if c.im == 0.0 {
                    write!(f, "{}", fmt_real(c.re))
                } else {
                    write!(f, "({:?}+{:?}*i)", c.re, c.im)
                }
            }
            Node::Var(v) => write!(f, "{}", var_name(*v)),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "({a} * {b})"),
            Node::Div(a, b) => write!(f, "({a} / {b})"),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Pow(a, k) => {
                if *k < 0 {
                    write!(f, "({a}^-{})", -k)
                } else {
                    write!(f, "({a}^{k})")
                }
            }
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn parse_and_eval_grammar_examples() {
        let e = parse("sin(2*pi*x1)", 1).unwrap();
        assert!((e.eval(&[0.25, 0.0]).unwrap() - c(1.0)).norm() < 1e-15);
        let e = parse("x1*x1 + y1*y1", 1).unwrap();
        assert!((e.eval(&[0.3, 0.4]).unwrap() - c(0.25)).norm() < 1e-15);
        assert_eq!(Expr::real(3.0).eval(&[9.0, 1.0]).unwrap(), c(3.0));
    }

    #[test]
    fn log_of_negative_is_domain_error() {
        let e = parse("log(x1)", 1).unwrap();
        assert!(matches!(e.eval(&[-1.0, 0.0]), Err(Error::Domain(_))));
        let e = parse("1/x1", 1).unwrap();
        assert!(matches!(e.eval(&[0.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn dzbar_of_z_vanishes() {
        let z = Expr::z(0);
        let d = z.wirtinger(WirtingerVar::dzbar(0));
        assert!(d.eval(&[0.7, -0.2]).unwrap().norm() < 1e-15);
        let d = z.wirtinger(WirtingerVar::dz(0));
        assert!((d.eval(&[0.7, -0.2]).unwrap() - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn laplacian_of_norm_is_one() {
        let e = parse("x1^2 + y1^2", 1).unwrap();
        let g = e.wirtinger(WirtingerVar::dzbar(0)).wirtinger(WirtingerVar::dz(0));
        assert_eq!(g.as_const(), Some(c(1.0)));
    }

    #[test]
    fn fubini_study_metric_at_origin_matches_finite_differences() {
        // oracle: ∂∂̄ = ¼Δ, central differences with h = 1e-4
        let phi = |x: f64, y: f64| (1.0 + x * x + y * y).ln();
        let h = 1e-4;
        let lap = (phi(h, 0.0) + phi(-h, 0.0) + phi(0.0, h) + phi(0.0, -h) - 4.0 * phi(0.0, 0.0))
            / (h * h);
        let fd = lap / 4.0;
        assert!((fd - 1.0).abs() < 1e-6);

        let e = parse("log(1 + x1^2 + y1^2)", 1).unwrap();
        let g = e.wirtinger(WirtingerVar::dz(0)).wirtinger(WirtingerVar::dzbar(0));
        let v = g.eval(&[0.0, 0.0]).unwrap();
        assert!((v - c(1.0)).norm() < 1e-14);
        assert!((v.re - fd).abs() < 1e-6);
    }

    #[test]
    fn substitute_shift_and_identity() {
        let e = Expr::x(0);
        let shifted = e.substitute(&[Expr::x(0) + Expr::real(2.5), Expr::y(0)]).unwrap();
        assert_eq!(shifted.eval(&[0.0, 0.0]).unwrap(), c(2.5));

        let e = parse("sin(x1)*exp(y1) + x1^3", 1).unwrap();
        let id = e.substitute(&[Expr::x(0), Expr::y(0)]).unwrap();
        let p = [0.3, -1.1];
        assert_eq!(e.eval(&p).unwrap(), id.eval(&p).unwrap());
        assert!(matches!(e.substitute(&[Expr::x(0)]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn quadratic_change_preserves_metric_at_origin() {
        // w = z + ½Γ z²  ⇔  z = w − ½Γ w² + O(w³); metric at the origin is
        // unchanged because the Jacobian there is the identity.
        let gamma = C64::new(0.3, -0.2);
        let w = Expr::z(0);
        let z_of_w = w.clone() - w.powi(2).scale(gamma * 0.5);
        let map = [z_of_w.re(), z_of_w.im()];
        let phi = parse("log(1 + x1^2 + y1^2)", 1).unwrap();
        let phi_w = phi.substitute(&map).unwrap();
        let g = |p: &Expr| {
            p.wirtinger(WirtingerVar::dz(0))
                .wirtinger(WirtingerVar::dzbar(0))
                .eval(&[0.0, 0.0])
                .unwrap()
        };
        let direct = g(&phi);
        assert!((g(&phi_w) - direct).norm() < 1e-14);
    }

    #[test]
    fn conj_and_real_imag_parts() {
        let z = Expr::z(0);
        let p = [0.4, 0.9];
        assert!((z.re().eval(&p).unwrap() - c(0.4)).norm() < 1e-15);
        assert!((z.im().eval(&p).unwrap() - c(0.9)).norm() < 1e-15);
        let w = (z.clone() * z.clone()).sin();
        assert!((w.conj().eval(&p).unwrap() - w.eval(&p).unwrap().conj()).norm() < 1e-14);
    }

    #[test]
    fn free_vars_and_folding() {
        let e = parse("sin(2*pi*x1) + 0*y2", 2).unwrap();
        assert_eq!(e.free_vars().into_iter().collect::<Vec<_>>(), vec![0]);
        let e = parse("2*3 + 4", 1).unwrap();
        assert_eq!(e.as_const(), Some(c(10.0)));
        assert_eq!(parse("pi", 1).unwrap().as_const(), Some(c(PI)));
    }
}
