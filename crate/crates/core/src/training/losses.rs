//! Per-sample loss terms. Every function returns a `1 x b` row (one value
//! per batch column) so that callers can sum, average, or inspect samples.

use std::f64::consts::PI;
use std::marker::PhantomData;

use crate::autodiff::{Jet, Tensor};
use crate::closed_forms::SorCurvature;
use crate::geometry::{
    condition_numbers, det, frobenius_sq, map_mat, metric_from_jacobian, metric_jet, report, Embedding, Mat,
    MetricField, SffReport, CONDITION_LIMIT,
};
use crate::error::{Error, Result};
use crate::nn::{Mlp, Signal, Weights};

/// An encoder network `(u, tau) -> R^d` seen as an [`Embedding`].
pub struct NetEmbedding<'a, T, W> {
    net: &'a Mlp,
    w: &'a W,
    _t: PhantomData<fn() -> T>,
}

impl<'a, T, W> NetEmbedding<'a, T, W> {
    pub fn new(net: &'a Mlp, w: &'a W) -> Self {
        NetEmbedding { net, w, _t: PhantomData }
    }
}

impl<T: Tensor, W: Weights<T>, X: Signal<T>> Embedding<X> for NetEmbedding<'_, T, W> {
    fn dim_in(&self) -> usize {
        self.net.spec.input_dim - 1
    }
    fn dim_out(&self) -> usize {
        self.net.spec.output_dim
    }
    fn eval(&self, u: &[X], t: &X) -> Vec<X> {
        let mut rows = u.to_vec();
        rows.push(t.clone());
        let y = self.net.forward_rows(self.w, &rows).expect("encoder input width checked at setup");
        (0..self.net.spec.output_dim).map(|k| y.output(k)).collect()
    }
}

/// Metric network: outputs the upper triangle of `g - I`, row by row.
pub struct NetMetric<'a, T, W> {
    net: &'a Mlp,
    w: &'a W,
    m: usize,
    _t: PhantomData<fn() -> T>,
}

impl<'a, T, W> NetMetric<'a, T, W> {
    pub fn new(net: &'a Mlp, w: &'a W) -> Result<Self> {
        let m = net.spec.input_dim - 1;
        if net.spec.output_dim != m * (m + 1) / 2 {
            return Err(Error::Dimension(format!(
                "metric network for m={m} needs {} outputs, has {}",
                m * (m + 1) / 2,
                net.spec.output_dim
            )));
        }
        Ok(NetMetric { net, w, m, _t: PhantomData })
    }
}

impl<T: Tensor, W: Weights<T>, X: Signal<T>> MetricField<X> for NetMetric<'_, T, W> {
    fn dim(&self) -> usize {
        self.m
    }
    fn eval(&self, u: &[X], t: &X) -> Mat<X> {
        let mut rows = u.to_vec();
        rows.push(t.clone());
        let y = self.net.forward_rows(self.w, &rows).expect("metric input width checked at setup");
        let mut g: Mat<Option<X>> = vec![vec![None; self.m]; self.m];
        let mut k = 0;
        for i in 0..self.m {
            for j in i..self.m {
                let mut v = y.output(k);
                if i == j {
                    v = v.add_const(1.0);
                }
                g[j][i] = Some(v.clone());
                g[i][j] = Some(v);
                k += 1;
            }
        }
        map_mat(&g, |x| x.clone().unwrap())
    }
}

/// `(1/N) sum_j (pred_j - target_j)^2` per column.
pub fn decoder_terms<B: Tensor>(pred: &B, target: &B) -> Result<B> {
    if pred.shape() != target.shape() {
        return Err(Error::Dimension(format!(
            "decoder output {:?} does not match snapshot {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let n = pred.shape().0;
    Ok((pred.clone() - target.clone()).square().sum_rows().scale(1.0 / n as f64))
}

/// Ricci-flow residual terms on the columns whose metric is invertible.
pub struct RicciTerms<B> {
    /// `(1/m^2) |d_t g + 2 Ric|_F^2`, one entry per kept column; `None` if all were skipped.
    pub per_sample: Option<B>,
    pub kept: Vec<usize>,
    /// Metric values on the kept columns.
    pub g: Mat<B>,
}

fn kept_columns(cond: &[f64], b: usize) -> Vec<usize> {
    (0..b).filter(|&j| cond[if cond.len() == 1 { 0 } else { j }] <= CONDITION_LIMIT).collect()
}

pub fn ricci_terms<B: Tensor, M: MetricField<Jet<B>> + ?Sized>(metric: &M, u: &[B], tau: &B) -> Result<RicciTerms<B>> {
    let b = tau.shape().1;
    let mut mj = metric_jet(metric, u, tau)?;
    let m = mj.dim();
    let kept = kept_columns(&condition_numbers(&mj.g), b);
    if kept.is_empty() {
        return Ok(RicciTerms { per_sample: None, kept, g: mj.g });
    }
    if kept.len() < b {
        mj = mj.map(|x| if x.shape().1 == b { x.select_cols(&kept) } else { x.clone() });
    }
    let rep = report(&mj)?;
    let per = frobenius_sq(&rep.residual).scale(1.0 / (m * m) as f64);
    Ok(RicciTerms { per_sample: Some(per), kept, g: mj.g })
}

/// `(1/m^2) |g - (JE)^T JE|_F^2`
pub fn metric_match_terms<B: Tensor>(g: &Mat<B>, je: &Mat<B>) -> B {
    let m = g.len();
    let diff: Mat<B> = g
        .iter()
        .zip(je)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.clone() - y.clone()).collect())
        .collect();
    frobenius_sq(&diff).scale(1.0 / (m * m) as f64)
}

/// Known-metric matching: `(1/m) sum_j (g_jj - |d_j E|^2)^2 + sum_{i<j} <d_i E, d_j E>`-mismatch squared.
pub fn fixed_metric_terms<B: Tensor>(target: &Mat<B>, je: &Mat<B>) -> B {
    let m = target.len();
    let mut diag: Option<B> = None;
    let mut off: Option<B> = None;
    for i in 0..m {
        for j in i..m {
            let d = (target[i][j].clone() - je[i][j].clone()).square();
            let slot = if i == j { &mut diag } else { &mut off };
            *slot = Some(match slot.take() {
                Some(s) => s + d,
                None => d,
            });
        }
    }
    let diag = diag.expect("metric has at least one entry").scale(1.0 / m as f64);
    match off {
        Some(o) => diag + o,
        None => diag,
    }
}

/// Torus symmetry terms: Gram matrix at `(u1, u2)` against `(u1 + delta, u2)`
/// and against `(u1, 2 pi - u2)`.
pub fn torus_symmetry_terms<B: Tensor, E: Embedding<Jet<B>> + ?Sized>(enc: &E, u: &[B], tau: &B, delta: &B) -> Result<B> {
    if u.len() != 2 {
        return Err(Error::Dimension("torus symmetry needs a 2-d chart".into()));
    }
    let base = metric_from_jacobian(enc, u, tau)?;
    let shifted = metric_from_jacobian(enc, &[u[0].clone() + delta.clone(), u[1].clone()], tau)?;
    let mirrored = metric_from_jacobian(enc, &[u[0].clone(), -u[1].clone() + u[1].cst(2.0 * PI)], tau)?;
    let diff = |a: &Mat<B>, b: &Mat<B>| -> B {
        let d: Mat<B> = a
            .iter()
            .zip(b)
            .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x.clone() - y.clone()).collect())
            .collect();
        frobenius_sq(&d)
    };
    Ok(diff(&base, &shifted) + diff(&base, &mirrored))
}

/// Surface-of-revolution residual terms:
/// `|dt g11 + 2 Ric11|^2 + |dt g22 + 2 Ric22|^2 + |2 Ric12|^2 + |2 Ric21|^2`.
pub fn sor_terms<B: Tensor>(c: &SorCurvature<B>) -> B {
    let two = |x: &B| x.scale(2.0);
    (c.dt_g[0][0].clone() + two(&c.ricci[0][0])).square()
        + (c.dt_g[1][1].clone() + two(&c.ricci[1][1])).square()
        + two(&c.ricci[0][1]).square()
        + two(&c.ricci[1][0]).square()
}

/// `sum_ij |d_t <d_i E, d_j E> + 2 sum_l (L_ij L^l_l - L_il L^l_j)|^2`
pub fn sff_terms<B: Tensor>(r: &SffReport<B>) -> B {
    frobenius_sq(&r.residual)
}

/// Columns where the encoder's tangent plane is non-degenerate, judged on
/// plain values (`|d1 E x d2 E|^2 = det (JE)^T JE`).
pub fn nondegenerate_columns<E: Embedding<Jet<ndarray::Array2<f64>>> + ?Sized>(
    enc: &E,
    u: &[ndarray::Array2<f64>],
    tau: &ndarray::Array2<f64>,
) -> Result<Vec<usize>> {
    let gram = metric_from_jacobian(enc, u, tau)?;
    let area2 = det(&gram);
    let b = tau.ncols();
    let limit = crate::geometry::TANGENT_LIMIT * crate::geometry::TANGENT_LIMIT;
    Ok((0..b).filter(|&j| area2[[0, if area2.ncols() == 1 { 0 } else { j }]] > limit).collect())
}
