//! Regularizing perturbations used only while training.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseKind {
    /// `u + c u * xi`, element-wise.
    Chart,
    /// `M + c r xi` with `r` the current radius of the manifold.
    Manifold { radius: f64 },
}

fn normal(shape: (usize, usize), rng: &mut impl Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn(shape, || rng.sample(StandardNormal))
}

pub fn inject_noise(x: &Array2<f64>, kind: NoiseKind, c: f64, rng: &mut impl Rng) -> Array2<f64> {
    if c == 0.0 {
        return x.clone();
    }
    let xi = normal(x.dim(), rng);
    match kind {
        NoiseKind::Chart => x + &(x * &xi * c),
        NoiseKind::Manifold { radius } => x + &(xi * (c * radius)),
    }
}

/// Multiplicative chart-noise factors `1 + c xi`; `None` when `c = 0`.
pub fn chart_factors(shape: (usize, usize), c: f64, rng: &mut impl Rng) -> Option<Array2<f64>> {
    (c != 0.0).then(|| normal(shape, rng).mapv(|x| 1.0 + c * x))
}

/// Additive manifold noise `c r_j xi` with one radius per column; `None` when `c = 0`.
pub fn manifold_offsets(rows: usize, radius: &[f64], c: f64, rng: &mut impl Rng) -> Option<Array2<f64>> {
    if c == 0.0 {
        return None;
    }
    let mut xi = normal((rows, radius.len()), rng);
    for (mut col, r) in xi.columns_mut().into_iter().zip(radius) {
        col *= c * r;
    }
    Some(xi)
}

/// Inverted-dropout masks (`0` or `1/(1-p)`) for each hidden layer.
pub fn dropout_masks(widths: &[usize], rates: &[f64], batch: usize, rng: &mut impl Rng) -> Result<Vec<Option<Array2<f64>>>> {
    if rates.is_empty() {
        return Ok(vec![None; widths.len()]);
    }
    if rates.len() != widths.len() {
        return Err(Error::Config(format!("{} dropout rates for {} decoder layers", rates.len(), widths.len())));
    }
    widths
        .iter()
        .zip(rates)
        .map(|(&w, &p)| {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::Config(format!("dropout rate {p} outside [0, 1)")));
            }
            Ok((p > 0.0).then(|| {
                let keep = 1.0 / (1.0 - p);
                Array2::from_shape_simple_fn((w, batch), || if rng.random::<f64>() < p { 0.0 } else { keep })
            }))
        })
        .collect()
}
