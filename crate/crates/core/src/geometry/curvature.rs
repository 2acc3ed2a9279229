use super::{frobenius_sq, inverse, map_mat, metric_jet, symmetrize, total, Mat, MetricField, MetricJet};
use crate::autodiff::{Field, Jet};
use crate::error::Result;

/// Levi-Civita connection and curvature of a metric at one point.
#[derive(Clone, Debug)]
pub struct GeometryReport<F> {
    pub g: Mat<F>,
    pub g_inv: Mat<F>,
    /// `dg[i][j][k] = d_i g_jk`
    pub dg: Vec<Mat<F>>,
    /// `d2g[i][l][j][k] = d_i d_l g_jk`
    pub d2g: Vec<Vec<Mat<F>>>,
    /// `gamma[i][j][l] = Gamma_ij^l`
    pub gamma: Vec<Mat<F>>,
    /// `dgamma[j][i][k][l] = d_j Gamma_ik^l`
    pub dgamma: Vec<Vec<Mat<F>>>,
    /// `riemann[i][l][j][k] = R_i^l_jk`
    pub riemann: Vec<Vec<Mat<F>>>,
    /// Ricci tensor as contracted, before symmetrization.
    pub ricci_raw: Mat<F>,
    pub ricci: Mat<F>,
    pub dt_g: Mat<F>,
    /// `d_t g + 2 Ric`
    pub residual: Mat<F>,
}

/// `Gamma_ij^l = 1/2 sum_k g^kl (d_j g_ik - d_k g_ij + d_i g_kj)`
pub fn christoffel<F: Field>(g_inv: &Mat<F>, dg: &[Mat<F>]) -> Vec<Mat<F>> {
    let m = g_inv.len();
    let like = &g_inv[0][0];
    (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    (0..m)
                        .map(|l| {
                            let terms = (0..m).map(|k| {
                                let bracket = dg[j][i][k].clone() - dg[k][i][j].clone() + dg[i][k][j].clone();
                                g_inv[k][l].clone() * bracket
                            });
                            total(like, terms).scale(0.5)
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// `d_j Gamma_ik^l` from first and second metric derivatives by the product rule,
/// using `d_j g^pl = -g^pa (d_j g_ab) g^bl`.
pub fn christoffel_derivatives<F: Field>(g_inv: &Mat<F>, dg: &[Mat<F>], d2g: &[Vec<Mat<F>>]) -> Vec<Vec<Mat<F>>> {
    let m = g_inv.len();
    let like = &g_inv[0][0];
    // dinv[j][p][l] = d_j g^pl
    let dinv: Vec<Mat<F>> = (0..m)
        .map(|j| {
            let inner: Mat<F> = (0..m)
                .map(|p| (0..m).map(|b| total(like, (0..m).map(|a| g_inv[p][a].clone() * dg[j][a][b].clone()))).collect())
                .collect();
            (0..m)
                .map(|p| (0..m).map(|l| -total(like, (0..m).map(|b| inner[p][b].clone() * g_inv[b][l].clone()))).collect())
                .collect()
        })
        .collect();
    (0..m)
        .map(|j| {
            (0..m)
                .map(|i| {
                    (0..m)
                        .map(|k| {
                            (0..m)
                                .map(|l| {
                                    let terms = (0..m).map(|p| {
                                        let a = dg[k][i][p].clone() - dg[p][i][k].clone() + dg[i][p][k].clone();
                                        let da = d2g[j][k][i][p].clone() - d2g[j][p][i][k].clone()
                                            + d2g[j][i][p][k].clone();
                                        dinv[j][p][l].clone() * a + g_inv[p][l].clone() * da
                                    });
                                    total(like, terms).scale(0.5)
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// `R_i^l_jk = d_j Gamma_ik^l - d_k Gamma_ij^l + sum_p (Gamma_ik^p Gamma_pj^l - Gamma_ij^p Gamma_pk^l)`
pub fn riemann<F: Field>(gamma: &[Mat<F>], dgamma: &[Vec<Mat<F>>]) -> Vec<Vec<Mat<F>>> {
    let m = gamma.len();
    let like = &gamma[0][0][0];
    (0..m)
        .map(|i| {
            (0..m)
                .map(|l| {
                    (0..m)
                        .map(|j| {
                            (0..m)
                                .map(|k| {
                                    let quad = (0..m).map(|p| {
                                        gamma[i][k][p].clone() * gamma[p][j][l].clone()
                                            - gamma[i][j][p].clone() * gamma[p][k][l].clone()
                                    });
                                    dgamma[j][i][k][l].clone() - dgamma[k][i][j][l].clone() + total(like, quad)
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// `Ric_ik = sum_l R_i^l_lk`
pub fn ricci<F: Field>(riemann: &[Vec<Mat<F>>]) -> Mat<F> {
    let m = riemann.len();
    let like = &riemann[0][0][0][0];
    (0..m).map(|i| (0..m).map(|k| total(like, (0..m).map(|l| riemann[i][l][l][k].clone()))).collect()).collect()
}

/// Full connection/curvature report from metric derivatives.
pub fn report<F: Field>(mj: &MetricJet<F>) -> Result<GeometryReport<F>> {
    let g_inv = inverse(&mj.g)?;
    let gamma = christoffel(&g_inv, &mj.dg);
    let dgamma = christoffel_derivatives(&g_inv, &mj.dg, &mj.d2g);
    let riem = riemann(&gamma, &dgamma);
    let ricci_raw = ricci(&riem);
    let ric = symmetrize(&ricci_raw);
    let m = mj.dim();
    let residual =
        (0..m).map(|i| (0..m).map(|k| mj.dt_g[i][k].clone() + ric[i][k].scale(2.0)).collect()).collect();
    Ok(GeometryReport {
        g: mj.g.clone(),
        g_inv,
        dg: mj.dg.clone(),
        d2g: mj.d2g.clone(),
        gamma,
        dgamma,
        riemann: riem,
        ricci_raw,
        ricci: ric,
        dt_g: mj.dt_g.clone(),
        residual,
    })
}

/// Evaluate a metric field at `(u, t)` and compute its [`GeometryReport`].
pub fn geometry_at<B: Field, M: MetricField<Jet<B>> + ?Sized>(mf: &M, u: &[B], t: &B) -> Result<GeometryReport<B>> {
    report(&metric_jet(mf, u, t)?)
}

/// Ricci-flow residual `d_t g + 2 Ric` and its Frobenius norm.
pub fn ricci_flow_residual<M: MetricField<Jet<f64>> + ?Sized>(mf: &M, u: &[f64], t: f64) -> Result<(Mat<f64>, f64)> {
    let r = geometry_at(mf, u, &t)?;
    let norm = frobenius_sq(&r.residual).sqrt();
    Ok((map_mat(&r.residual, |x| *x), norm))
}
