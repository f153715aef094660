use std::collections::HashMap;

use super::{Expr, Func, Node, C64};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Op {
    Const(u64, u64),
    Var(usize),
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Neg(u32),
    Pow(u32, i32),
    Call(Func, u32),
}

/// A flattened, hash-consed evaluation program for several expressions.
///
/// Structurally equal sub-trees are stored once even when they were built
/// independently, which matters for curvature: the many fourth-order
/// derivatives of a potential share most of their structure.
#[derive(Debug, Clone)]
pub struct Tape {
    ops: Vec<Op>,
    outputs: Vec<u32>,
    arity: usize,
}

impl Tape {
    pub fn new(roots: &[Expr]) -> Tape {
        let mut b = Builder { ops: Vec::new(), intern: HashMap::new(), by_ptr: HashMap::new() };
        let outputs = roots.iter().map(|r| b.push(r)).collect();
        let arity = b
            .ops
            .iter()
            .filter_map(|op| match op {
                Op::Var(v) => Some(v + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0);
        Tape { ops: b.ops, outputs, arity }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Minimum point dimension accepted by [`Tape::eval_into`].
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, point: &[f64]) -> Result<Vec<C64>> {
        let mut out = vec![C64::new(0.0, 0.0); self.outputs.len()];
        self.eval_into(point, &mut Vec::new(), &mut out)?;
        Ok(out)
    }

    /// Evaluate all outputs, reusing `scratch` across calls.
    pub fn eval_into(&self, point: &[f64], scratch: &mut Vec<C64>, out: &mut [C64]) -> Result<()> {
        if point.len() < self.arity {
            return Err(Error::DimensionMismatch { expected: self.arity, found: point.len() });
        }
        if out.len() != self.outputs.len() {
            return Err(Error::DimensionMismatch { expected: self.outputs.len(), found: out.len() });
        }
        scratch.clear();
        scratch.reserve(self.ops.len());
        for op in &self.ops {
            let s = &*scratch;
            let v = match *op {
                Op::Const(re, im) => C64::new(f64::from_bits(re), f64::from_bits(im)),
                Op::Var(i) => C64::new(point[i], 0.0),
                Op::Add(a, b) => s[a as usize] + s[b as usize],
                Op::Sub(a, b) => s[a as usize] - s[b as usize],
                Op::Mul(a, b) => s[a as usize] * s[b as usize],
                Op::Div(a, b) => {
                    let d = s[b as usize];
                    if d == C64::new(0.0, 0.0) {
                        return Err(Error::Domain("division by zero".into()));
                    }
                    s[a as usize] / d
                }
                Op::Neg(a) => -s[a as usize],
                Op::Pow(a, k) => {
                    let base = s[a as usize];
                    if k < 0 && base == C64::new(0.0, 0.0) {
                        return Err(Error::Domain("division by zero".into()));
                    }
                    base.powi(k)
                }
                Op::Call(f, a) => f.apply(s[a as usize])?,
            };
            scratch.push(v);
        }
        for (o, &idx) in out.iter_mut().zip(&self.outputs) {
            let v = scratch[idx as usize];
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::Domain("non-finite value".into()));
            }
            *o = v;
        }
        Ok(())
    }
}

struct Builder {
    ops: Vec<Op>,
    intern: HashMap<Op, u32>,
    by_ptr: HashMap<*const Node, u32>,
}

impl Builder {
    fn emit(&mut self, op: Op) -> u32 {
        if let Some(&i) = self.intern.get(&op) {
            return i;
        }
        let i = self.ops.len() as u32;
        self.ops.push(op);
        self.intern.insert(op, i);
        i
    }

    fn push(&mut self, e: &Expr) -> u32 {
        if let Some(&i) = self.by_ptr.get(&e.ptr()) {
            return i;
        }
        // explicit stack: derivative DAGs can be deep
        let mut stack: Vec<(Expr, bool)> = vec![(e.clone(), false)];
        while let Some((cur, expanded)) = stack.pop() {
            if self.by_ptr.contains_key(&cur.ptr()) {
                continue;
            }
            if !expanded {
                stack.push((cur.clone(), true));
                cur.for_each_child(|c| {
                    if !self.by_ptr.contains_key(&c.ptr()) {
                        stack.push((c.clone(), false));
                    }
                });
                continue;
            }
            let id = |x: &Expr| self.by_ptr[&x.ptr()];
            let op = match cur.node() {
                Node::Const(c) => Op::Const(c.re.to_bits(), c.im.to_bits()),
                Node::Var(v) => Op::Var(*v),
                Node::Add(a, b) => {
                    let (a, b) = (id(a), id(b));
                    Op::Add(a.min(b), a.max(b))
                }
                Node::Sub(a, b) => Op::Sub(id(a), id(b)),
                Node::Mul(a, b) => {
                    let (a, b) = (id(a), id(b));
                    Op::Mul(a.min(b), a.max(b))
                }
                Node::Div(a, b) => Op::Div(id(a), id(b)),
                Node::Neg(a) => Op::Neg(id(a)),
                Node::Pow(a, k) => Op::Pow(id(a), *k),
                Node::Call(f, a) => Op::Call(*f, id(a)),
            };
            let i = self.emit(op);
            self.by_ptr.insert(cur.ptr(), i);
        }
        self.by_ptr[&e.ptr()]
    }
}
