use super::{det, matmul, transpose, Mat};
use crate::autodiff::Field;
use crate::error::{Error, Result};

/// Smallest accepted `|det J|` for a change of coordinates.
pub const JACOBIAN_LIMIT: f64 = 1e-12;

fn pullback<F: Field>(x: &Mat<F>, jac: &Mat<F>) -> Result<Mat<F>> {
    let n = x.len();
    if jac.len() != n || jac.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension(format!("Jacobian must be {n}x{n}")));
    }
    let d = det(jac);
    let smallest = d.values().into_iter().map(f64::abs).fold(f64::INFINITY, f64::min);
    if !(smallest > JACOBIAN_LIMIT) {
        return Err(Error::SingularJacobian(smallest));
    }
    Ok(matmul(&matmul(&transpose(jac), x), jac))
}

/// Metric in `v`-coordinates given `jac[i][a] = du^i / dv^a`: `J^T g J`.
pub fn transform_metric<F: Field>(g: &Mat<F>, jac: &Mat<F>) -> Result<Mat<F>> {
    pullback(g, jac)
}

/// Ricci tensor in `v`-coordinates; same covariant rule as the metric.
pub fn transform_ricci<F: Field>(ric: &Mat<F>, jac: &Mat<F>) -> Result<Mat<F>> {
    pullback(ric, jac)
}
