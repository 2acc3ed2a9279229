use super::{gram, inverse, seed_inputs, total, Embedding, Mat};
use crate::autodiff::{Field, Jet};
use crate::error::{Error, Result};

/// Extrinsic curvature of a surface `E: R^2 x R -> R^3` at one point.
#[derive(Clone, Debug)]
pub struct SffReport<F> {
    /// Induced metric `<d_i E, d_j E>`.
    pub g: Mat<F>,
    pub g_inv: Mat<F>,
    /// Unit normal `(d_1 E x d_2 E) / |d_1 E x d_2 E|`.
    pub n: Vec<F>,
    /// `L_ij = <d_i d_j E, n>`
    pub l: Mat<F>,
    /// `l_mixed[l][k] = L^l_k = sum_i L_ik g^il`
    pub l_mixed: Mat<F>,
    /// `riemann[i][l][j][k] = L_ik L^l_j - L_ij L^l_k`
    pub riemann: Vec<Vec<Mat<F>>>,
    /// `d_t <d_i E, d_j E>`
    pub dt_g: Mat<F>,
    /// `d_t g_ij + 2 sum_l (L_ij L^l_l - L_il L^l_j)`
    pub residual: Mat<F>,
}

/// Smallest accepted `|d_1 E x d_2 E|`.
pub const TANGENT_LIMIT: f64 = 1e-12;

fn cross<F: Field>(a: &[F], b: &[F]) -> Vec<F> {
    vec![
        a[1].clone() * b[2].clone() - a[2].clone() * b[1].clone(),
        a[2].clone() * b[0].clone() - a[0].clone() * b[2].clone(),
        a[0].clone() * b[1].clone() - a[1].clone() * b[0].clone(),
    ]
}

fn dot<F: Field>(a: &[F], b: &[F]) -> F {
    total(&a[0], a.iter().zip(b).map(|(x, y)| x.clone() * y.clone()))
}

pub fn second_fundamental_form<B: Field, E: Embedding<Jet<B>> + ?Sized>(e: &E, u: &[B], t: &B) -> Result<SffReport<B>> {
    if e.dim_in() != 2 || e.dim_out() != 3 || u.len() != 2 {
        return Err(Error::Dimension(format!(
            "second fundamental form needs a surface in R^3, got {} -> {}",
            e.dim_in(),
            e.dim_out()
        )));
    }
    let (uj, tj) = seed_inputs(u, t, true);
    let x = e.eval(&uj, &tj);
    let d = |i: usize| -> Vec<B> { x.iter().map(|c| c.d1_or_zero(i)).collect() };
    let dd = |i: usize, j: usize| -> Vec<B> { x.iter().map(|c| c.d2_or_zero(i, j)).collect() };
    let tangents = [d(0), d(1)];
    let c = cross(&tangents[0], &tangents[1]);
    let norm = dot(&c, &c).sqrt();
    let smallest = norm.values().into_iter().fold(f64::INFINITY, f64::min);
    if !(smallest > TANGENT_LIMIT) {
        return Err(Error::DegenerateTangent(smallest));
    }
    let inv_norm = norm.recip();
    let n: Vec<B> = c.iter().map(|ci| ci.clone() * inv_norm.clone()).collect();
    let g = gram(&tangents);
    let g_inv = inverse(&g)?;
    let l: Mat<B> = (0..2).map(|i| (0..2).map(|j| dot(&dd(i, j), &n)).collect()).collect();
    let l_mixed: Mat<B> = (0..2)
        .map(|a| (0..2).map(|k| total(&l[0][0], (0..2).map(|i| l[i][k].clone() * g_inv[i][a].clone()))).collect())
        .collect();
    let riemann = (0..2)
        .map(|i| {
            (0..2)
                .map(|a| {
                    (0..2)
                        .map(|j| {
                            (0..2)
                                .map(|k| {
                                    l[i][k].clone() * l_mixed[a][j].clone() - l[i][j].clone() * l_mixed[a][k].clone()
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let dt = [dd(0, 2), dd(1, 2)];
    let dt_g: Mat<B> = (0..2)
        .map(|i| (0..2).map(|j| dot(&dt[i], &tangents[j]) + dot(&tangents[i], &dt[j])).collect())
        .collect();
    let residual = (0..2)
        .map(|i| {
            (0..2)
                .map(|j| {
                    let terms = (0..2).map(|a| {
                        l[i][j].clone() * l_mixed[a][a].clone() - l[i][a].clone() * l_mixed[a][j].clone()
                    });
                    dt_g[i][j].clone() + total(&l[0][0], terms).scale(2.0)
                })
                .collect()
        })
        .collect();
    Ok(SffReport { g, g_inv, n, l, l_mixed, riemann, dt_g, residual })
}
