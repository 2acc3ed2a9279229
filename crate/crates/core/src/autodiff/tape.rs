use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::rc::Rc;

use ndarray::{s, Array2, Axis};

use super::array::unbroadcast;
use super::params::ParamVector;
use super::{Activation, Field, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Neg(usize),
    Scale(usize, f64),
    AddConst(usize),
    Exp(usize),
    Ln(usize),
    Sin(usize),
    Cos(usize),
    Sqrt(usize),
    Powi(usize, i32),
    Erf(usize),
    Act(usize, Activation, u8),
    MatMul(usize, usize),
    Row(usize, usize),
    StackRows(Vec<usize>),
    SumRows(usize),
    SumAll(usize),
    SelectCols(usize, Vec<usize>),
}

struct Node {
    op: Op,
    value: Rc<Array2<f64>>,
}

/// Append-only record of array operations for reverse-mode differentiation.
///
/// A tape is confined to the thread that created it. Cloning a `Tape` clones
/// the handle, not the recording.
#[derive(Clone, Default)]
pub struct Tape(Rc<RefCell<Vec<Node>>>);

/// A node on a [`Tape`]: a dense array value plus its position in the graph.
#[derive(Clone)]
pub struct Var {
    tape: Tape,
    id: usize,
    value: Rc<Array2<f64>>,
}

impl std::fmt::Debug for Var {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Var").field("id", &self.id).field("value", &self.value).finish()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.0.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, op: Op, value: Array2<f64>) -> Var {
        let value = Rc::new(value);
        let mut nodes = self.0.borrow_mut();
        if cfg!(debug_assertions) {
            for p in parents(&op) {
                assert!(p < nodes.len(), "parent must precede node");
            }
        }
        nodes.push(Node { op, value: value.clone() });
        Var { tape: self.clone(), id: nodes.len() - 1, value }
    }

    /// Record a leaf (an input or parameter).
    pub fn var(&self, value: Array2<f64>) -> Var {
        self.push(Op::Leaf, value)
    }

    pub fn scalar(&self, x: f64) -> Var {
        self.var(Array2::from_elem((1, 1), x))
    }

    /// Reverse sweep from `output`; returns the adjoint of every leaf that
    /// `output` depends on (`None` for other nodes).
    pub fn gradients(&self, output: &Var) -> Result<Vec<Option<Array2<f64>>>> {
        assert!(Rc::ptr_eq(&self.0, &output.tape.0), "output belongs to a different tape");
        let (r, c) = output.value.dim();
        if (r, c) != (1, 1) {
            return Err(Error::NotScalar(output.id, r, c));
        }
        let nodes = self.0.borrow();
        let mut adj: Vec<Option<Array2<f64>>> = vec![None; output.id + 1];
        adj[output.id] = Some(Array2::ones((1, 1)));
        for id in (0..=output.id).rev() {
            let Some(g) = adj[id].take() else { continue };
            let node = &nodes[id];
            let val = |p: usize| -> &Array2<f64> { &nodes[p].value };
            let mut acc = |p: usize, contrib: Array2<f64>| {
                let contrib = unbroadcast(contrib, nodes[p].value.dim());
                adj[p] = Some(match adj[p].take() {
                    Some(a) => a + contrib,
                    None => contrib,
                });
            };
            match &node.op {
                Op::Leaf => adj[id] = Some(g),
                Op::Add(a, b) => {
                    acc(*a, g.clone());
                    acc(*b, g);
                }
                Op::Sub(a, b) => {
                    acc(*a, g.clone());
                    acc(*b, -g);
                }
                Op::Mul(a, b) => {
                    acc(*a, &g * val(*b));
                    acc(*b, &g * val(*a));
                }
                Op::Div(a, b) => {
                    let ga = &g / val(*b);
                    let gb = -(&ga * node.value.as_ref());
                    acc(*a, ga);
                    acc(*b, gb);
                }
                Op::Neg(a) => acc(*a, -g),
                Op::Scale(a, c) => acc(*a, g * *c),
                Op::AddConst(a) => acc(*a, g),
                Op::Exp(a) => acc(*a, g * node.value.as_ref()),
                Op::Ln(a) => acc(*a, g / val(*a)),
                Op::Sin(a) => acc(*a, g * &val(*a).cos()),
                Op::Cos(a) => acc(*a, -(g * &val(*a).sin())),
                Op::Sqrt(a) => acc(*a, g / &(node.value.as_ref() * 2.0)),
                Op::Powi(a, n) => {
                    let n = *n;
                    let d = val(*a).mapv(|x| n as f64 * x.powi(n - 1));
                    acc(*a, g * &d);
                }
                Op::Erf(a) => {
                    let d = val(*a).mapv(|x| std::f64::consts::FRAC_2_SQRT_PI * (-x * x).exp());
                    acc(*a, g * &d);
                }
                Op::Act(a, kind, order) => {
                    let d = val(*a).act(*kind, order + 1);
                    acc(*a, g * &d);
                }
                Op::MatMul(w, x) => {
                    acc(*w, g.dot(&val(*x).t()));
                    acc(*x, val(*w).t().dot(&g));
                }
                Op::Row(a, k) => {
                    let mut full = Array2::zeros(val(*a).dim());
                    full.row_mut(*k).assign(&g.index_axis(Axis(0), 0));
                    acc(*a, full);
                }
                Op::StackRows(parts) => {
                    let mut start = 0;
                    for &p in parts {
                        let rows = val(p).nrows();
                        acc(p, g.slice(s![start..start + rows, ..]).to_owned());
                        start += rows;
                    }
                }
                Op::SumRows(a) => {
                    let full = g.broadcast(val(*a).dim()).expect("row broadcast").to_owned();
                    acc(*a, full);
                }
                Op::SumAll(a) => acc(*a, Array2::from_elem(val(*a).dim(), g[[0, 0]])),
                Op::SelectCols(a, idx) => {
                    let mut full = Array2::zeros(val(*a).dim());
                    for (j, &col) in idx.iter().enumerate() {
                        let mut dst = full.column_mut(col);
                        dst += &g.column(j);
                    }
                    acc(*a, full);
                }
            }
        }
        Ok(adj)
    }
}

fn parents(op: &Op) -> Vec<usize> {
    match op {
        Op::Leaf => vec![],
        Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::Div(a, b) | Op::MatMul(a, b) => vec![*a, *b],
        Op::Neg(a)
        | Op::Scale(a, _)
        | Op::AddConst(a)
        | Op::Exp(a)
        | Op::Ln(a)
        | Op::Sin(a)
        | Op::Cos(a)
        | Op::Sqrt(a)
        | Op::Powi(a, _)
        | Op::Erf(a)
        | Op::Act(a, _, _)
        | Op::Row(a, _)
        | Op::SumRows(a)
        | Op::SumAll(a)
        | Op::SelectCols(a, _) => vec![*a],
        Op::StackRows(p) => p.clone(),
    }
}

impl Var {
    pub fn value(&self) -> &Array2<f64> {
        &self.value
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn tape(&self) -> &Tape {
        &self.tape
    }

    fn same_tape(&self, other: &Var) {
        assert!(Rc::ptr_eq(&self.tape.0, &other.tape.0), "variables live on different tapes");
    }

    fn unary(&self, op: Op, value: Array2<f64>) -> Var {
        self.tape.push(op, value)
    }

    /// First entry of the value; convenient for `1x1` results.
    pub fn item(&self) -> f64 {
        self.value[[0, 0]]
    }
}

macro_rules! binary {
    ($tr:ident, $method:ident, $variant:ident, $sym:tt) => {
        impl $tr for Var {
            type Output = Var;
            fn $method(self, rhs: Var) -> Var {
                self.same_tape(&rhs);
                let value = self.value.as_ref() $sym rhs.value.as_ref();
                self.tape.push(Op::$variant(self.id, rhs.id), value)
            }
        }
    };
}

binary!(Add, add, Add, +);
binary!(Sub, sub, Sub, -);
binary!(Mul, mul, Mul, *);
binary!(Div, div, Div, /);

impl Neg for Var {
    type Output = Var;
    fn neg(self) -> Var {
        let value = -self.value.as_ref();
        self.unary(Op::Neg(self.id), value)
    }
}

impl Field for Var {
    fn cst(&self, c: f64) -> Self {
        self.tape.scalar(c)
    }
    fn exp(&self) -> Self {
        self.unary(Op::Exp(self.id), self.value.exp())
    }
    fn ln(&self) -> Self {
        self.unary(Op::Ln(self.id), self.value.ln())
    }
    fn sin(&self) -> Self {
        self.unary(Op::Sin(self.id), self.value.sin())
    }
    fn cos(&self) -> Self {
        self.unary(Op::Cos(self.id), self.value.cos())
    }
    fn sqrt(&self) -> Self {
        self.unary(Op::Sqrt(self.id), self.value.sqrt())
    }
    fn powi(&self, n: i32) -> Self {
        match n {
            0 => self.tape.var(self.value.mapv(|_| 1.0)),
            1 => self.clone(),
            _ => self.unary(Op::Powi(self.id, n), self.value.powi(n)),
        }
    }
    fn erf(&self) -> Self {
        self.unary(Op::Erf(self.id), self.value.as_ref().erf())
    }
    fn act(&self, a: Activation, order: u8) -> Self {
        self.unary(Op::Act(self.id, a, order), self.value.act(a, order))
    }
    fn values(&self) -> Vec<f64> {
        self.value.iter().copied().collect()
    }
    fn scale(&self, c: f64) -> Self {
        self.unary(Op::Scale(self.id, c), self.value.as_ref() * c)
    }
    fn add_const(&self, c: f64) -> Self {
        self.unary(Op::AddConst(self.id), self.value.as_ref() + c)
    }
    fn square(&self) -> Self {
        self.powi(2)
    }
}

impl Tensor for Var {
    fn shape(&self) -> (usize, usize) {
        self.value.dim()
    }
    fn matmul(w: &Self, x: &Self) -> Self {
        w.same_tape(x);
        let value = w.value.dot(x.value.as_ref());
        w.tape.push(Op::MatMul(w.id, x.id), value)
    }
    fn row(&self, k: usize) -> Self {
        self.unary(Op::Row(self.id, k), Tensor::row(self.value.as_ref(), k))
    }
    fn stack_rows(parts: &[Self]) -> Self {
        let first = &parts[0];
        let arrays: Vec<Array2<f64>> = parts.iter().map(|p| p.value.as_ref().clone()).collect();
        let value = Array2::stack_rows(&arrays);
        first.tape.push(Op::StackRows(parts.iter().map(|p| p.id).collect()), value)
    }
    fn sum_rows(&self) -> Self {
        self.unary(Op::SumRows(self.id), self.value.as_ref().sum_rows())
    }
    fn sum_all(&self) -> Self {
        self.unary(Op::SumAll(self.id), self.value.as_ref().sum_all())
    }
    fn select_cols(&self, idx: &[usize]) -> Self {
        self.unary(Op::SelectCols(self.id, idx.to_vec()), self.value.as_ref().select_cols(idx))
    }
    fn lift(&self, a: Array2<f64>) -> Self {
        self.tape.var(a)
    }
}

/// Every block of a [`ParamVector`] recorded as a leaf on one tape.
pub struct BoundParams {
    vars: Vec<Var>,
}

impl BoundParams {
    pub fn bind(tape: &Tape, params: &ParamVector) -> Self {
        let vars = (0..params.layout().len()).map(|i| tape.var(params.block(i))).collect();
        BoundParams { vars }
    }

    pub fn get(&self, block: usize) -> &Var {
        &self.vars[block]
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }
}

/// Gradient of the scalar `output` with respect to the bound parameters,
/// flattened in the parameter layout order.
pub fn backward_grad(tape: &Tape, output: &Var, params: &BoundParams) -> Result<Vec<f64>> {
    let adj = tape.gradients(output)?;
    let mut grad = Vec::new();
    for v in &params.vars {
        match adj.get(v.id).and_then(|a| a.as_ref()) {
            Some(a) => grad.extend(a.iter().copied()),
            None => grad.extend(std::iter::repeat_n(0.0, v.value.len())),
        }
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn sum_of_squares_gradient() {
        let tape = Tape::new();
        let x = tape.var(array![[1.0, 2.0]]);
        let loss = x.square().sum_all();
        let adj = tape.gradients(&loss).unwrap();
        assert_eq!(adj[x.id()].as_ref().unwrap(), &array![[2.0, 4.0]]);
    }

    #[test]
    fn non_scalar_output_is_rejected() {
        let tape = Tape::new();
        let x = tape.var(array![[1.0, 2.0]]);
        assert!(matches!(tape.gradients(&x), Err(Error::NotScalar(_, 1, 2))));
    }

    #[test]
    fn repeated_backward_is_identical() {
        let tape = Tape::new();
        let w = tape.var(array![[0.3, -0.2], [0.5, 0.1]]);
        let x = tape.var(array![[1.0, 2.0, 3.0], [0.5, -1.0, 0.0]]);
        let y = Var::matmul(&w, &x).tanh().sum_all();
        let a = tape.gradients(&y).unwrap();
        let b = tape.gradients(&y).unwrap();
        assert_eq!(a[w.id()], b[w.id()]);
    }

    #[test]
    fn broadcast_bias_gradient_sums_columns() {
        let tape = Tape::new();
        let b = tape.var(array![[1.0], [2.0]]);
        let x = tape.var(Array2::zeros((2, 3)));
        let y = (x + b.clone()).sum_all();
        let adj = tape.gradients(&y).unwrap();
        assert_eq!(adj[b.id()].as_ref().unwrap(), &array![[3.0], [3.0]]);
    }
}
