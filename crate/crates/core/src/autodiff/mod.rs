//! Automatic differentiation.
//!
//! Two mechanisms cooperate:
//!
//! * [`Jet`] is a truncated second-order Taylor jet over a small set of seeded
//!   input directions (forward mode, nestable).
//! * [`Tape`]/[`Var`] record a reverse-mode graph over dense 2-D arrays, which
//!   is how parameter gradients are obtained.
//!
//! Everything downstream (networks, geometry kernels, losses) is written against
//! the [`Field`] trait so the same code runs on plain `f64`, on batched
//! `Array2<f64>` values, on tape variables, and on jets of any of those.

mod array;
mod graph;
mod jet;
mod params;
mod tape;

pub use graph::{forward_eval, Graph, NodeId, Prim};
pub use jet::Jet;
pub use params::{BlockInfo, BlockRole, ParamVector};
pub use tape::{backward_grad, BoundParams, Tape, Var};

use std::ops::{Add, Div, Mul, Neg, Sub};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Smooth activation primitives with closed-form derivatives of any order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    /// Exact erf-based GELU, `x * Phi(x)`.
    Gelu,
    Sigmoid,
    Softplus,
}

impl Activation {
    /// `order`-th derivative of the activation at `x`.
    pub fn eval(self, x: f64, order: u8) -> f64 {
        match self {
            Activation::Tanh => {
                let coeffs = tanh_poly(order);
                horner(&coeffs, x.tanh())
            }
            Activation::Sigmoid => {
                let coeffs = sigmoid_poly(order);
                horner(&coeffs, sigmoid(x))
            }
            Activation::Softplus => {
                if order == 0 {
                    softplus(x)
                } else {
                    horner(&sigmoid_poly(order - 1), sigmoid(x))
                }
            }
            Activation::Gelu => gelu_derivative(x, order),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Gelu => "gelu",
            Activation::Sigmoid => "sigmoid",
            Activation::Softplus => "softplus",
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp()
    } else {
        x.exp().ln_1p()
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Polynomial `P_k` with `d^k/dx^k tanh(x) = P_k(tanh x)`.
fn tanh_poly(order: u8) -> Vec<f64> {
    // P_{k+1}(t) = P_k'(t) (1 - t^2)
    chain_poly(vec![0.0, 1.0], order, &[1.0, 0.0, -1.0])
}

/// Polynomial `Q_k` with `d^k/dx^k sigmoid(x) = Q_k(sigmoid x)`.
fn sigmoid_poly(order: u8) -> Vec<f64> {
    // Q_{k+1}(s) = Q_k'(s) s (1 - s)
    chain_poly(vec![0.0, 1.0], order, &[0.0, 1.0, -1.0])
}

fn chain_poly(mut p: Vec<f64>, order: u8, inner: &[f64]) -> Vec<f64> {
    for _ in 0..order {
        let deriv: Vec<f64> = p.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect();
        let mut next = vec![0.0; deriv.len() + inner.len()];
        for (i, a) in deriv.iter().enumerate() {
            for (j, b) in inner.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        p = next;
    }
    p
}

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Probabilists' Hermite polynomial He_n.
fn hermite(n: u8, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, x);
    if n == 0 {
        return h0;
    }
    for k in 1..n {
        let h2 = x * h1 - k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// n-th derivative of the standard normal density.
fn normal_pdf_derivative(n: u8, x: f64) -> f64 {
    let pdf = FRAC_1_SQRT_2PI * (-0.5 * x * x).exp();
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    sign * hermite(n, x) * pdf
}

fn gelu_derivative(x: f64, order: u8) -> f64 {
    let cdf = 0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2));
    match order {
        0 => x * cdf,
        1 => cdf + x * normal_pdf_derivative(0, x),
        k => k as f64 * normal_pdf_derivative(k - 2, x) + x * normal_pdf_derivative(k - 1, x),
    }
}

/// Arithmetic needed by the networks, the geometry kernels and the losses.
///
/// Binary operators may broadcast a `1x1` operand (what [`Field::cst`]
/// produces for array-like implementations).
pub trait Field:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// A constant compatible with `self` (same tape, same jet directions).
    fn cst(&self, c: f64) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn powi(&self, n: i32) -> Self;
    fn erf(&self) -> Self;
    fn act(&self, a: Activation, order: u8) -> Self;
    /// Numeric values of the primal channel, flattened row-major.
    fn values(&self) -> Vec<f64>;

    fn square(&self) -> Self {
        self.clone() * self.clone()
    }

    fn scale(&self, c: f64) -> Self {
        self.clone() * self.cst(c)
    }

    fn add_const(&self, c: f64) -> Self {
        self.clone() + self.cst(c)
    }

    fn recip(&self) -> Self {
        self.cst(1.0) / self.clone()
    }

    fn tanh(&self) -> Self {
        self.act(Activation::Tanh, 0)
    }

    fn sigmoid(&self) -> Self {
        self.act(Activation::Sigmoid, 0)
    }

    fn softplus(&self) -> Self {
        self.act(Activation::Softplus, 0)
    }
}

impl Field for f64 {
    fn cst(&self, c: f64) -> Self {
        c
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn powi(&self, n: i32) -> Self {
        f64::powi(*self, n)
    }
    fn erf(&self) -> Self {
        libm::erf(*self)
    }
    fn act(&self, a: Activation, order: u8) -> Self {
        a.eval(*self, order)
    }
    fn values(&self) -> Vec<f64> {
        vec![*self]
    }
    fn scale(&self, c: f64) -> Self {
        self * c
    }
    fn add_const(&self, c: f64) -> Self {
        self + c
    }
}

/// Dense 2-D values: rows are features, columns are batch samples.
pub trait Tensor: Field {
    fn shape(&self) -> (usize, usize);
    /// `w * x` matrix product.
    fn matmul(w: &Self, x: &Self) -> Self;
    fn row(&self, k: usize) -> Self;
    fn stack_rows(parts: &[Self]) -> Self;
    /// Column sums, `r x c -> 1 x c`.
    fn sum_rows(&self) -> Self;
    /// Sum of every entry, `-> 1 x 1`.
    fn sum_all(&self) -> Self;
    fn select_cols(&self, idx: &[usize]) -> Self;
    /// Wrap a constant array in the same context as `self`.
    fn lift(&self, a: Array2<f64>) -> Self;

    fn mean_all(&self) -> Self {
        let (r, c) = self.shape();
        self.sum_all().scale(1.0 / (r * c) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        // five-point stencil
        (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
    }

    #[test]
    fn activation_derivatives_match_finite_differences() {
        for act in [Activation::Tanh, Activation::Gelu, Activation::Sigmoid, Activation::Softplus] {
            for &x in &[-2.3, -0.7, 0.0, 0.4, 1.9] {
                for order in 0..5u8 {
                    let expected = fd(|y| act.eval(y, order), x, 1e-3);
                    let got = act.eval(x, order + 1);
                    assert!(
                        (got - expected).abs() < 1e-8 * (1.0 + expected.abs()),
                        "{act:?} order {} at {x}: {got} vs {expected}",
                        order + 1
                    );
                }
            }
        }
    }

    #[test]
    fn gelu_closed_form_values() {
        assert_eq!(Activation::Gelu.eval(0.0, 0), 0.0);
        assert!((Activation::Gelu.eval(0.0, 1) - 0.5).abs() < 1e-15);
        assert!((Activation::Gelu.eval(0.0, 2) - 2.0 * FRAC_1_SQRT_2PI).abs() < 1e-15);
        assert!((Activation::Tanh.eval(0.5, 0) - 0.462_117_157_26).abs() < 1e-11);
    }
}
