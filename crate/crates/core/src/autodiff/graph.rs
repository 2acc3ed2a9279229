use super::{Activation, Field, Jet};
use crate::error::{Error, Result};

pub type NodeId = usize;

/// Scalar primitives of an expression graph.
#[derive(Clone, Debug, PartialEq)]
pub enum Prim {
    Input(usize),
    Const(f64),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Div(NodeId, NodeId),
    Neg(NodeId),
    Exp(NodeId),
    Ln(NodeId),
    Sin(NodeId),
    Cos(NodeId),
    Tanh(NodeId),
    Erf(NodeId),
    Gelu(NodeId),
    Sqrt(NodeId),
    Powi(NodeId, i32),
    /// Not twice differentiable; rejected by [`forward_eval`].
    Relu(NodeId),
    /// Not twice differentiable; rejected by [`forward_eval`].
    Abs(NodeId),
}

impl Prim {
    fn name(&self) -> &'static str {
        match self {
            Prim::Input(_) => "input",
            Prim::Const(_) => "const",
            Prim::Add(..) => "add",
            Prim::Sub(..) => "sub",
            Prim::Mul(..) => "mul",
            Prim::Div(..) => "div",
            Prim::Neg(_) => "neg",
            Prim::Exp(_) => "exp",
            Prim::Ln(_) => "ln",
            Prim::Sin(_) => "sin",
            Prim::Cos(_) => "cos",
            Prim::Tanh(_) => "tanh",
            Prim::Erf(_) => "erf",
            Prim::Gelu(_) => "gelu",
            Prim::Sqrt(_) => "sqrt",
            Prim::Powi(..) => "powi",
            Prim::Relu(_) => "relu",
            Prim::Abs(_) => "abs",
        }
    }
}

/// A scalar computation graph in topological order.
#[derive(Clone, Debug, Default)]
pub struct Graph {
    nodes: Vec<Prim>,
    outputs: Vec<NodeId>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append a node; parents must already exist.
    pub fn push(&mut self, p: Prim) -> NodeId {
        let ok = |id: &NodeId| *id < self.nodes.len();
        let valid = match &p {
            Prim::Input(_) | Prim::Const(_) => true,
            Prim::Add(a, b) | Prim::Sub(a, b) | Prim::Mul(a, b) | Prim::Div(a, b) => ok(a) && ok(b),
            Prim::Neg(a)
            | Prim::Exp(a)
            | Prim::Ln(a)
            | Prim::Sin(a)
            | Prim::Cos(a)
            | Prim::Tanh(a)
            | Prim::Erf(a)
            | Prim::Gelu(a)
            | Prim::Sqrt(a)
            | Prim::Powi(a, _)
            | Prim::Relu(a)
            | Prim::Abs(a) => ok(a),
        };
        assert!(valid, "graph node references a later node");
        self.nodes.push(p);
        self.nodes.len() - 1
    }

    pub fn input(&mut self, k: usize) -> NodeId {
        self.push(Prim::Input(k))
    }

    pub fn constant(&mut self, c: f64) -> NodeId {
        self.push(Prim::Const(c))
    }

    pub fn output(&mut self, id: NodeId) {
        self.outputs.push(id);
    }

    pub fn nodes(&self) -> &[Prim] {
        &self.nodes
    }

    pub fn outputs(&self) -> &[NodeId] {
        &self.outputs
    }

    /// Plain `f64` evaluation (no domain checks, no derivative tracking).
    pub fn eval_plain(&self, inputs: &[f64]) -> Vec<f64> {
        let mut v: Vec<f64> = Vec::with_capacity(self.nodes.len());
        for p in &self.nodes {
            let x = match *p {
                Prim::Input(k) => inputs[k],
                Prim::Const(c) => c,
                Prim::Add(a, b) => v[a] + v[b],
                Prim::Sub(a, b) => v[a] - v[b],
                Prim::Mul(a, b) => v[a] * v[b],
                Prim::Div(a, b) => v[a] / v[b],
                Prim::Neg(a) => -v[a],
                Prim::Exp(a) => v[a].exp(),
                Prim::Ln(a) => v[a].ln(),
                Prim::Sin(a) => v[a].sin(),
                Prim::Cos(a) => v[a].cos(),
                Prim::Tanh(a) => Activation::Tanh.eval(v[a], 0),
                Prim::Erf(a) => libm::erf(v[a]),
                Prim::Gelu(a) => Activation::Gelu.eval(v[a], 0),
                Prim::Sqrt(a) => v[a].sqrt(),
                Prim::Powi(a, n) => v[a].powi(n),
                Prim::Relu(a) => v[a].max(0.0),
                Prim::Abs(a) => v[a].abs(),
            };
            v.push(x);
        }
        self.outputs.iter().map(|&o| v[o]).collect()
    }
}

/// Evaluate `graph` at `inputs`, seeding a derivative direction for each
/// input index in `seeds` (direction `k` is `seeds[k]`).
pub fn forward_eval(graph: &Graph, inputs: &[f64], seeds: &[usize]) -> Result<Vec<Jet<f64>>> {
    for (i, s) in seeds.iter().enumerate() {
        if seeds[..i].contains(s) {
            return Err(Error::Config(format!("seed direction {s} given twice")));
        }
        if *s >= inputs.len() {
            return Err(Error::Dimension(format!("seed {s} out of range for {} inputs", inputs.len())));
        }
    }
    let n = seeds.len();
    let mut v: Vec<Jet<f64>> = Vec::with_capacity(graph.nodes.len());
    for (id, p) in graph.nodes.iter().enumerate() {
        let domain = |op: &'static str, value: f64| Error::Domain { node: id, op, value };
        let x = match *p {
            Prim::Input(k) => {
                let x = *inputs
                    .get(k)
                    .ok_or_else(|| Error::Dimension(format!("input {k} missing (have {})", inputs.len())))?;
                match seeds.iter().position(|&s| s == k) {
                    Some(dir) => Jet::seed(x, dir, n, n),
                    None => Jet::constant(x, n, n),
                }
            }
            Prim::Const(c) => Jet::constant(c, n, n),
            Prim::Add(a, b) => v[a].clone() + v[b].clone(),
            Prim::Sub(a, b) => v[a].clone() - v[b].clone(),
            Prim::Mul(a, b) => v[a].clone() * v[b].clone(),
            Prim::Div(a, b) => {
                let d = *v[b].value();
                if d == 0.0 {
                    return Err(domain("division by", d));
                }
                v[a].clone() / v[b].clone()
            }
            Prim::Neg(a) => -v[a].clone(),
            Prim::Exp(a) => v[a].exp(),
            Prim::Ln(a) => {
                let x = *v[a].value();
                if x <= 0.0 {
                    return Err(domain("log", x));
                }
                v[a].ln()
            }
            Prim::Sin(a) => v[a].sin(),
            Prim::Cos(a) => v[a].cos(),
            Prim::Tanh(a) => v[a].tanh(),
            Prim::Erf(a) => v[a].erf(),
            Prim::Gelu(a) => v[a].act(Activation::Gelu, 0),
            Prim::Sqrt(a) => {
                let x = *v[a].value();
                if x < 0.0 || (x == 0.0 && n > 0) {
                    return Err(domain("sqrt", x));
                }
                v[a].sqrt()
            }
            Prim::Powi(a, k) => {
                let x = *v[a].value();
                if k < 0 && x == 0.0 {
                    return Err(domain("negative power of", x));
                }
                v[a].powi(k)
            }
            Prim::Relu(_) | Prim::Abs(_) => return Err(Error::UnsupportedPrimitive(p.name().to_string())),
        };
        v.push(x);
    }
    Ok(graph.outputs.iter().map(|&o| v[o].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_is_rejected_by_name() {
        let mut g = Graph::new();
        let x = g.input(0);
        let r = g.push(Prim::Relu(x));
        g.output(r);
        match forward_eval(&g, &[1.0], &[0]) {
            Err(Error::UnsupportedPrimitive(name)) => assert_eq!(name, "relu"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn log_of_negative_reports_node() {
        let mut g = Graph::new();
        let x = g.input(0);
        let l = g.push(Prim::Ln(x));
        g.output(l);
        match forward_eval(&g, &[-1.0], &[0]) {
            Err(Error::Domain { node, op, .. }) => {
                assert_eq!(node, l);
                assert_eq!(op, "log");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_seeds_are_rejected() {
        let mut g = Graph::new();
        let x = g.input(0);
        g.output(x);
        assert!(forward_eval(&g, &[1.0], &[0, 0]).is_err());
    }
}
