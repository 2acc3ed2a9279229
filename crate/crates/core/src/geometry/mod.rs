//! Riemannian geometry kernels: metric jets, Christoffel symbols, curvature,
//! the Ricci-flow residual, coordinate changes and the second fundamental form.
//!
//! Matrices are `Vec<Vec<F>>` over any [`Field`], so the same code handles a
//! single point (`f64`), a batch of points (`1 x B` arrays or tape variables)
//! and jets of those.

mod conformance;
mod curvature;
mod sff;
mod transform;

pub use conformance::{run_suite, CheckResult, ConformanceReport, SUITES};
pub use curvature::{
    christoffel, christoffel_derivatives, geometry_at, report, ricci, ricci_flow_residual, riemann, GeometryReport,
};
pub use sff::{second_fundamental_form, SffReport, TANGENT_LIMIT};
pub use transform::{transform_metric, transform_ricci, JACOBIAN_LIMIT};

use crate::autodiff::{Field, Jet};
use crate::error::{Error, Result};

pub type Mat<F> = Vec<Vec<F>>;

/// Metrics with `||A||_F ||A^-1||_F` above this are treated as singular.
pub const CONDITION_LIMIT: f64 = 1e8;

/// A metric `g(u, t)` on an `m`-dimensional chart.
pub trait MetricField<F: Field> {
    fn dim(&self) -> usize;
    fn eval(&self, u: &[F], t: &F) -> Mat<F>;
}

/// A map `E(u, t)` from an `m`-dimensional chart into `R^d`.
pub trait Embedding<F: Field> {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn eval(&self, u: &[F], t: &F) -> Vec<F>;
}

/// Metric values and derivatives at one point (or one batch of points).
#[derive(Clone, Debug)]
pub struct MetricJet<F> {
    pub g: Mat<F>,
    /// `dg[i][j][k] = d_i g_jk`
    pub dg: Vec<Mat<F>>,
    /// `d2g[i][l][j][k] = d_i d_l g_jk`
    pub d2g: Vec<Vec<Mat<F>>>,
    /// `dt_g[j][k] = d_t g_jk`
    pub dt_g: Mat<F>,
}

impl<F: Field> MetricJet<F> {
    pub fn dim(&self) -> usize {
        self.g.len()
    }

    /// Restrict every component with `f` (e.g. column selection of a batch).
    pub fn map(&self, f: impl Fn(&F) -> F) -> Self {
        let m2 = |a: &Mat<F>| map_mat(a, &f);
        MetricJet {
            g: m2(&self.g),
            dg: self.dg.iter().map(m2).collect(),
            d2g: self.d2g.iter().map(|r| r.iter().map(m2).collect()).collect(),
            dt_g: m2(&self.dt_g),
        }
    }
}

pub fn map_mat<F, G>(a: &Mat<F>, f: impl Fn(&F) -> G) -> Mat<G> {
    a.iter().map(|r| r.iter().map(&f).collect()).collect()
}

/// `(M + M^T) / 2`
pub fn symmetrize<F: Field>(a: &Mat<F>) -> Mat<F> {
    let m = a.len();
    (0..m)
        .map(|i| {
            (0..m)
                .map(|j| if i == j { a[i][i].clone() } else { (a[i][j].clone() + a[j][i].clone()).scale(0.5) })
                .collect()
        })
        .collect()
}

/// Sum of `terms`; `like` supplies the zero when there are none.
pub(crate) fn total<F: Field>(like: &F, terms: impl IntoIterator<Item = F>) -> F {
    terms.into_iter().reduce(|a, b| a + b).unwrap_or_else(|| like.cst(0.0))
}

pub fn frobenius_sq<F: Field>(a: &Mat<F>) -> F {
    total(&a[0][0], a.iter().flatten().map(|x| x.square()))
}

pub fn matmul<F: Field>(a: &Mat<F>, b: &Mat<F>) -> Mat<F> {
    let (n, k, p) = (a.len(), b.len(), b[0].len());
    (0..n)
        .map(|i| (0..p).map(|j| total(&a[0][0], (0..k).map(|l| a[i][l].clone() * b[l][j].clone()))).collect())
        .collect()
}

pub fn transpose<F: Clone>(a: &Mat<F>) -> Mat<F> {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
}

fn minor<F: Clone>(a: &Mat<F>, row: usize, col: usize) -> Mat<F> {
    a.iter()
        .enumerate()
        .filter(|(i, _)| *i != row)
        .map(|(_, r)| r.iter().enumerate().filter(|(j, _)| *j != col).map(|(_, x)| x.clone()).collect())
        .collect()
}

/// Determinant by cofactor expansion (intended for `m <= 4`).
pub fn det<F: Field>(a: &Mat<F>) -> F {
    match a.len() {
        1 => a[0][0].clone(),
        2 => a[0][0].clone() * a[1][1].clone() - a[0][1].clone() * a[1][0].clone(),
        n => {
            let terms = (0..n).map(|j| {
                let t = a[0][j].clone() * det(&minor(a, 0, j));
                if j % 2 == 0 {
                    t
                } else {
                    -t
                }
            });
            total(&a[0][0], terms)
        }
    }
}

/// Inverse via the adjugate, without any conditioning check.
pub fn inverse_unchecked<F: Field>(a: &Mat<F>) -> Mat<F> {
    let n = a.len();
    let d = det(a);
    if n == 1 {
        return vec![vec![a[0][0].recip()]];
    }
    let inv_det = d.recip();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    // adj[i][j] = (-1)^(i+j) M_ji
                    let c = det(&minor(a, j, i));
                    let c = if (i + j) % 2 == 0 { c } else { -c };
                    c * inv_det.clone()
                })
                .collect()
        })
        .collect()
}

/// Per-sample condition numbers `||A||_F ||A^-1||_F` of a (possibly batched) matrix.
pub fn condition_numbers<F: Field>(a: &Mat<F>) -> Vec<f64> {
    let n = a.len();
    let vals: Vec<Vec<Vec<f64>>> = a.iter().map(|r| r.iter().map(|x| x.values()).collect()).collect();
    let cols = vals.iter().flatten().map(|v| v.len()).max().unwrap_or(1);
    (0..cols)
        .map(|c| {
            let m: Mat<f64> =
                (0..n).map(|i| (0..n).map(|j| { let v = &vals[i][j]; v[if v.len() == 1 { 0 } else { c }] }).collect()).collect();
            let d = det(&m);
            if d == 0.0 || !d.is_finite() {
                return f64::INFINITY;
            }
            let inv = inverse_unchecked(&m);
            let cond = frobenius_sq(&m).sqrt() * frobenius_sq(&inv).sqrt();
            if cond.is_finite() {
                cond
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

/// Inverse of a metric, rejecting ill-conditioned samples.
pub fn inverse<F: Field>(a: &Mat<F>) -> Result<Mat<F>> {
    if a.len() > 4 {
        return Err(Error::Dimension(format!("metrics of dimension {} are not supported (max 4)", a.len())));
    }
    let worst = condition_numbers(a).into_iter().fold(0.0, f64::max);
    if !(worst <= CONDITION_LIMIT) {
        return Err(Error::SingularMetric(worst));
    }
    Ok(inverse_unchecked(a))
}

/// Jets for `(u_1..u_m, t)`: second order in `u` only, or in `(u, t)` when
/// `full` is set.
pub fn seed_inputs<B: Field>(u: &[B], t: &B, full: bool) -> (Vec<Jet<B>>, Jet<B>) {
    let m = u.len();
    let n2 = if full { m + 1 } else { m };
    let uj = u.iter().enumerate().map(|(a, x)| Jet::seed(x.clone(), a, m + 1, n2)).collect();
    (uj, Jet::seed(t.clone(), m, m + 1, n2))
}

/// Evaluate `mf` with derivative tracking and collect the symmetrized
/// metric, its first and second chart derivatives, and its time derivative.
pub fn metric_jet<B: Field, M: MetricField<Jet<B>> + ?Sized>(mf: &M, u: &[B], t: &B) -> Result<MetricJet<B>> {
    let m = mf.dim();
    if u.len() != m {
        return Err(Error::Dimension(format!("metric expects {m} chart coordinates, got {}", u.len())));
    }
    let (uj, tj) = seed_inputs(u, t, false);
    let g = symmetrize(&mf.eval(&uj, &tj));
    Ok(metric_jet_from(&g, m))
}

/// Split a symmetrized matrix of jets (directions `u_1..u_m, t`) into a [`MetricJet`].
pub fn metric_jet_from<B: Field>(g: &Mat<Jet<B>>, m: usize) -> MetricJet<B> {
    let pick = |f: &dyn Fn(&Jet<B>) -> B| -> Mat<B> { map_mat(g, f) };
    MetricJet {
        g: pick(&|x| x.value().clone()),
        dg: (0..m).map(|i| pick(&|x| x.d1_or_zero(i))).collect(),
        d2g: (0..m).map(|i| (0..m).map(|l| pick(&|x| x.d2_or_zero(i, l))).collect()).collect(),
        dt_g: pick(&|x| x.d1_or_zero(m)),
    }
}

/// `(JE)^T (JE)`: inner products of the chart tangent vectors of `e`.
pub fn metric_from_jacobian<B: Field, E: Embedding<Jet<B>> + ?Sized>(e: &E, u: &[B], t: &B) -> Result<Mat<B>> {
    let m = e.dim_in();
    if u.len() != m {
        return Err(Error::Dimension(format!("embedding expects {m} chart coordinates, got {}", u.len())));
    }
    if e.dim_out() < m {
        return Err(Error::Dimension(format!("embedding dimension {} below chart dimension {m}", e.dim_out())));
    }
    let uj: Vec<Jet<B>> = u.iter().enumerate().map(|(a, x)| Jet::seed(x.clone(), a, m, 0)).collect();
    let tj = Jet::constant(t.clone(), m, 0);
    let x = e.eval(&uj, &tj);
    let tangents: Vec<Vec<B>> = (0..m).map(|i| x.iter().map(|c| c.d1_or_zero(i)).collect()).collect();
    Ok(gram(&tangents))
}

/// Matrix of pairwise inner products of `vectors`.
pub fn gram<F: Field>(vectors: &[Vec<F>]) -> Mat<F> {
    let m = vectors.len();
    let mut g: Mat<Option<F>> = vec![vec![None; m]; m];
    for i in 0..m {
        for j in i..m {
            let v = total(&vectors[i][0], vectors[i].iter().zip(&vectors[j]).map(|(a, b)| a.clone() * b.clone()));
            g[j][i] = Some(v.clone());
            g[i][j] = Some(v);
        }
    }
    map_mat(&g, |x| x.clone().unwrap())
}

/// The metric induced by an embedding, usable wherever a [`MetricField`] is.
pub struct GramMetric<E>(pub E);

impl<F: Field, E: Embedding<Jet<F>>> MetricField<F> for GramMetric<E> {
    fn dim(&self) -> usize {
        self.0.dim_in()
    }
    fn eval(&self, u: &[F], t: &F) -> Mat<F> {
        metric_from_jacobian(&self.0, u, t).expect("dimensions checked by caller")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Linear(Vec<Vec<f64>>);

    impl<F: Field> Embedding<F> for Linear {
        fn dim_in(&self) -> usize {
            self.0[0].len()
        }
        fn dim_out(&self) -> usize {
            self.0.len()
        }
        fn eval(&self, u: &[F], _t: &F) -> Vec<F> {
            self.0.iter().map(|r| total(&u[0], r.iter().zip(u).map(|(a, x)| x.scale(*a)))).collect()
        }
    }

    #[test]
    fn linear_map_gives_ata() {
        let a = vec![vec![1.0, 2.0], vec![0.5, -1.0], vec![3.0, 0.0]];
        let g = metric_from_jacobian(&Linear(a.clone()), &[0.3, -0.2], &0.0).unwrap();
        let ata = matmul(&transpose(&a), &a);
        for i in 0..2 {
            for j in 0..2 {
                assert!((g[i][j] - ata[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn inverse_of_3x3_and_4x4() {
        for n in [3usize, 4] {
            let a: Mat<f64> =
                (0..n).map(|i| (0..n).map(|j| if i == j { 4.0 + i as f64 } else { 0.3 * (i + 2 * j) as f64 }).collect()).collect();
            let p = matmul(&a, &inverse(&a).unwrap());
            for i in 0..n {
                for j in 0..n {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((p[i][j] - e).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn near_singular_metric_is_rejected() {
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0 + 1e-10]];
        assert!(matches!(inverse(&a), Err(Error::SingularMetric(_))));
    }
}
