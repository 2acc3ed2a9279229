//! Multilayer perceptrons, initialization, the optimizer, and checkpoints.

mod bundle;
mod optim;

pub use bundle::{Checkpoint, ModelBundle, NetRole, RngState};
pub use optim::{AdamW, AdamWConfig};

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Activation, BlockRole, BoundParams, Field, Jet, ParamVector, Tensor, Var};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Vanilla,
    Modified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpSpec {
    pub widths: Vec<usize>,
    pub activation: Activation,
    pub variant: Variant,
    pub input_dim: usize,
    pub output_dim: usize,
}

impl MlpSpec {
    pub fn new(input_dim: usize, widths: &[usize], output_dim: usize, activation: Activation) -> Self {
        MlpSpec { widths: widths.to_vec(), activation, variant: Variant::Vanilla, input_dim, output_dim }
    }

    pub fn modified(mut self) -> Self {
        self.variant = Variant::Modified;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.is_empty() || self.widths.contains(&0) {
            return Err(Error::Config(format!("hidden widths must be nonempty and positive, got {:?}", self.widths)));
        }
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::Config("network input and output dimensions must be positive".into()));
        }
        if !matches!(self.activation, Activation::Tanh | Activation::Gelu) {
            return Err(Error::Config(format!(
                "activation `{}` is not allowed for network trunks; use tanh or gelu",
                self.activation.name()
            )));
        }
        if self.variant == Variant::Modified && self.widths.iter().any(|&w| w != self.widths[0]) {
            return Err(Error::Config(format!("modified MLP needs equal hidden widths, got {:?}", self.widths)));
        }
        Ok(())
    }
}

/// Parses activation names for configuration files; `relu` is recognized so
/// that it can be rejected with a specific message.
pub fn parse_activation(name: &str) -> Result<Activation> {
    match name {
        "tanh" => Ok(Activation::Tanh),
        "gelu" => Ok(Activation::Gelu),
        "relu" => Err(Error::Config(
            "relu has zero second derivative almost everywhere and cannot drive curvature terms".into(),
        )),
        other => Err(Error::Unknown { kind: "activation", name: other.to_string() }),
    }
}

/// Source of parameter blocks in a given numeric representation.
pub trait Weights<T> {
    fn weight(&self, block: usize) -> T;
}

impl Weights<Var> for BoundParams {
    fn weight(&self, block: usize) -> Var {
        self.get(block).clone()
    }
}

/// Parameter blocks materialized as plain arrays (inference).
pub struct ArrayWeights(Vec<Array2<f64>>);

impl ArrayWeights {
    pub fn new(params: &ParamVector) -> Self {
        ArrayWeights((0..params.layout().len()).map(|i| params.block(i)).collect())
    }
}

impl Weights<Array2<f64>> for ArrayWeights {
    fn weight(&self, block: usize) -> Array2<f64> {
        self.0[block].clone()
    }
}

/// Values flowing through a network whose weights are `T`: either `T` itself
/// or jets over `T` carrying input derivatives.
pub trait Signal<T: Tensor>: Field {
    /// Apply a linear map to every component (value and derivatives).
    fn map_linear(&self, f: &dyn Fn(&T) -> T) -> Self;
    /// Add a constant to the value only.
    fn add_bias(&self, b: &T) -> Self;

    fn affine(&self, w: &T, b: &T) -> Self {
        self.map_linear(&|c| T::matmul(w, c)).add_bias(b)
    }

    /// Output coordinate `k` as a `1 x B` signal.
    fn output(&self, k: usize) -> Self {
        self.map_linear(&|c| c.row(k))
    }

    fn take_cols(&self, idx: &[usize]) -> Self {
        self.map_linear(&|c| c.select_cols(idx))
    }
}

impl<T: Tensor> Signal<T> for T {
    fn map_linear(&self, f: &dyn Fn(&T) -> T) -> Self {
        f(self)
    }
    fn add_bias(&self, b: &T) -> Self {
        self.clone() + b.clone()
    }
}

impl<T: Tensor, J: Signal<T>> Signal<T> for Jet<J> {
    fn map_linear(&self, f: &dyn Fn(&T) -> T) -> Self {
        self.map(|c| c.map_linear(f))
    }
    fn add_bias(&self, b: &T) -> Self {
        self.clone().with_value(self.value().add_bias(b))
    }
}

/// Indices of one affine layer's blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layer {
    pub weight: usize,
    pub bias: usize,
}

/// A network bound to its blocks in a shared [`ParamVector`].
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub name: String,
    pub spec: MlpSpec,
    /// Vanilla: one layer per hidden width. Modified: `W0`, then `W1..W(L-1)`.
    hidden: Vec<Layer>,
    gates: Option<(Layer, Layer)>,
    out: Layer,
}

fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-limit..limit))
}

impl Mlp {
    /// Append freshly initialized blocks (Glorot-uniform weights, zero biases).
    pub fn init(name: &str, spec: MlpSpec, params: &mut ParamVector, rng: &mut impl Rng) -> Result<Mlp> {
        spec.validate()?;
        let mut add = |layer: &str, rows: usize, cols: usize, rng: &mut dyn FnMut(usize, usize) -> Array2<f64>| {
            let weight = params.push(name, layer, BlockRole::Weight, rng(rows, cols));
            let bias = params.push(name, layer, BlockRole::Bias, Array2::zeros((rows, 1)));
            Layer { weight, bias }
        };
        let mut draw = |r: usize, c: usize| glorot(r, c, rng);
        let w = &spec.widths;
        let gates = match spec.variant {
            Variant::Vanilla => None,
            Variant::Modified => {
                Some((add("u_hat", w[0], spec.input_dim, &mut draw), add("u_tilde", w[0], spec.input_dim, &mut draw)))
            }
        };
        let mut hidden = Vec::with_capacity(w.len());
        for (i, &width) in w.iter().enumerate() {
            let fan_in = if i == 0 { spec.input_dim } else { w[i - 1] };
            hidden.push(add(&format!("hidden{i}"), width, fan_in, &mut draw));
        }
        let out = add("out", spec.output_dim, *w.last().unwrap(), &mut draw);
        Ok(Mlp { name: name.to_string(), spec, hidden, gates, out })
    }

    /// Locate the blocks of an existing network in `params` by name.
    pub fn attach(name: &str, spec: MlpSpec, params: &ParamVector) -> Result<Mlp> {
        spec.validate()?;
        let find = |layer: &str, rows: usize, cols: usize| -> Result<Layer> {
            let missing = || Error::Config(format!("parameter block {name}/{layer} missing"));
            let weight = params.find(name, layer, BlockRole::Weight).ok_or_else(missing)?;
            let bias = params.find(name, layer, BlockRole::Bias).ok_or_else(missing)?;
            let wi = &params.layout()[weight];
            let bi = &params.layout()[bias];
            if (wi.rows, wi.cols) != (rows, cols) || (bi.rows, bi.cols) != (rows, 1) {
                return Err(Error::Dimension(format!("block {name}/{layer} has the wrong shape")));
            }
            Ok(Layer { weight, bias })
        };
        let w = &spec.widths;
        let gates = match spec.variant {
            Variant::Vanilla => None,
            Variant::Modified => Some((find("u_hat", w[0], spec.input_dim)?, find("u_tilde", w[0], spec.input_dim)?)),
        };
        let mut hidden = Vec::new();
        for (i, &width) in w.iter().enumerate() {
            let fan_in = if i == 0 { spec.input_dim } else { w[i - 1] };
            hidden.push(find(&format!("hidden{i}"), width, fan_in)?);
        }
        let out = find("out", spec.output_dim, *w.last().unwrap())?;
        Ok(Mlp { name: name.to_string(), spec, hidden, gates, out })
    }

    pub fn hidden_layers(&self) -> usize {
        self.hidden.len()
    }

    /// Forward pass on a `input_dim x B` signal.
    pub fn forward<T: Tensor, X: Signal<T>>(&self, w: &impl Weights<T>, x: &X) -> Result<X> {
        self.forward_masked(w, x, None)
    }

    /// Forward pass with optional multiplicative masks after each hidden layer
    /// (inverted dropout: entries are `0` or `1/(1-p)`).
    pub fn forward_masked<T: Tensor, X: Signal<T>>(&self, w: &impl Weights<T>, x: &X, masks: Option<&[Option<T>]>) -> Result<X> {
        let first = |layer: Layer| x.affine(&w.weight(layer.weight), &w.weight(layer.bias));
        self.trunk(w, &first, masks)
    }

    /// Forward pass where the input is given as separate `1 x B` rows (one per
    /// input coordinate), which lets each coordinate carry its own jet seeds.
    pub fn forward_rows<T: Tensor, X: Signal<T>>(&self, w: &impl Weights<T>, rows: &[X]) -> Result<X> {
        if rows.len() != self.spec.input_dim {
            return Err(Error::Dimension(format!(
                "network `{}` expects {} inputs, got {}",
                self.name,
                self.spec.input_dim,
                rows.len()
            )));
        }
        let first = |layer: Layer| {
            let wt = w.weight(layer.weight);
            let mut acc: Option<X> = None;
            for (a, r) in rows.iter().enumerate() {
                let col = wt.select_cols(&[a]);
                let term = r.map_linear(&|c| T::matmul(&col, c));
                acc = Some(match acc {
                    Some(s) => s + term,
                    None => term,
                });
            }
            acc.unwrap().add_bias(&w.weight(layer.bias))
        };
        self.trunk(w, &first, None)
    }

    fn trunk<T: Tensor, X: Signal<T>>(
        &self,
        w: &impl Weights<T>,
        first: &dyn Fn(Layer) -> X,
        masks: Option<&[Option<T>]>,
    ) -> Result<X> {
        if let Some(m) = masks {
            if m.len() != self.hidden.len() {
                return Err(Error::Dimension(format!(
                    "{} dropout masks for {} hidden layers",
                    m.len(),
                    self.hidden.len()
                )));
            }
        }
        let act = self.spec.activation;
        let apply_mask = |z: X, i: usize| match masks.and_then(|m| m[i].as_ref()) {
            Some(mask) => z.map_linear(&|c| c.clone() * mask.clone()),
            None => z,
        };
        let mut z = apply_mask(first(self.hidden[0]).act(act, 0), 0);
        match self.gates {
            None => {
                for (i, layer) in self.hidden.iter().enumerate().skip(1) {
                    z = apply_mask(z.affine(&w.weight(layer.weight), &w.weight(layer.bias)).act(act, 0), i);
                }
            }
            Some((hat, tilde)) => {
                let zh = first(hat).act(act, 0);
                let zt = first(tilde).act(act, 0);
                for (i, layer) in self.hidden.iter().enumerate().skip(1) {
                    let gate = z.affine(&w.weight(layer.weight), &w.weight(layer.bias)).act(act, 0);
                    let mixed = (gate.cst(1.0) - gate.clone()) * zh.clone() + gate * zt.clone();
                    z = apply_mask(mixed, i);
                }
            }
        }
        Ok(z.affine(&w.weight(self.out.weight), &w.weight(self.out.bias)))
    }
}
