use ndarray::{concatenate, s, Array2, ArrayView2, Axis};

use super::{Activation, Field, Tensor};

impl Field for Array2<f64> {
    fn cst(&self, c: f64) -> Self {
        Array2::from_elem((1, 1), c)
    }
    fn exp(&self) -> Self {
        self.mapv(f64::exp)
    }
    fn ln(&self) -> Self {
        self.mapv(f64::ln)
    }
    fn sin(&self) -> Self {
        self.mapv(f64::sin)
    }
    fn cos(&self) -> Self {
        self.mapv(f64::cos)
    }
    fn sqrt(&self) -> Self {
        self.mapv(f64::sqrt)
    }
    fn powi(&self, n: i32) -> Self {
        self.mapv(|x| x.powi(n))
    }
    fn erf(&self) -> Self {
        self.mapv(libm::erf)
    }
    fn act(&self, a: Activation, order: u8) -> Self {
        self.mapv(|x| a.eval(x, order))
    }
    fn values(&self) -> Vec<f64> {
        self.iter().copied().collect()
    }
    fn scale(&self, c: f64) -> Self {
        self * c
    }
    fn add_const(&self, c: f64) -> Self {
        self + c
    }
}

impl Tensor for Array2<f64> {
    fn shape(&self) -> (usize, usize) {
        self.dim()
    }
    fn matmul(w: &Self, x: &Self) -> Self {
        w.dot(x)
    }
    fn row(&self, k: usize) -> Self {
        self.slice(s![k..k + 1, ..]).to_owned()
    }
    fn stack_rows(parts: &[Self]) -> Self {
        let views: Vec<ArrayView2<f64>> = parts.iter().map(|p| p.view()).collect();
        concatenate(Axis(0), &views).expect("stack_rows: column counts differ")
    }
    fn sum_rows(&self) -> Self {
        self.sum_axis(Axis(0)).insert_axis(Axis(0))
    }
    fn sum_all(&self) -> Self {
        Array2::from_elem((1, 1), self.sum())
    }
    fn select_cols(&self, idx: &[usize]) -> Self {
        self.select(Axis(1), idx)
    }
    fn lift(&self, a: Array2<f64>) -> Self {
        a
    }
}

/// Reduce a broadcast gradient back to `shape` by summing the expanded axes.
pub(crate) fn unbroadcast(g: Array2<f64>, shape: (usize, usize)) -> Array2<f64> {
    let mut g = g;
    if shape.0 == 1 && g.nrows() != 1 {
        g = g.sum_axis(Axis(0)).insert_axis(Axis(0));
    }
    if shape.1 == 1 && g.ncols() != 1 {
        g = g.sum_axis(Axis(1)).insert_axis(Axis(1));
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn owned_ops_broadcast_scalars_and_rows() {
        let a = array![[1.0, 2.0], [3.0, 4.0]];
        let c = a.cst(2.0);
        assert_eq!(a.clone() * c.clone(), array![[2.0, 4.0], [6.0, 8.0]]);
        assert_eq!(c - a.clone(), array![[1.0, 0.0], [-1.0, -2.0]]);
        let r = array![[10.0, 20.0]];
        assert_eq!(r + a.clone(), array![[11.0, 22.0], [13.0, 24.0]]);
        assert_eq!(unbroadcast(a, (1, 2)), array![[4.0, 6.0]]);
    }
}
