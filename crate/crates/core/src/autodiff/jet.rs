use std::ops::{Add, Div, Mul, Neg, Sub};

use super::{Activation, Field};

/// Second-order truncated Taylor jet.
///
/// Carries first derivatives along `n1` seeded directions and second
/// derivatives for every pair among the first `n2 <= n1` directions. A `None`
/// component is an exact zero, so constants cost nothing beyond the value and
/// a jet with no directions is just its value.
#[derive(Clone, Debug)]
pub struct Jet<T> {
    v: T,
    d1: Vec<Option<T>>,
    d2: Vec<Option<T>>,
    n2: usize,
}

fn pair_count(n2: usize) -> usize {
    n2 * (n2 + 1) / 2
}

fn pair_index(n2: usize, a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    debug_assert!(b < n2);
    a * n2 + b - a - a * a.saturating_sub(1) / 2
}

fn opt_add<T: Field>(a: Option<T>, b: Option<T>) -> Option<T> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x + y),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    }
}

fn opt_mul<T: Field>(a: &Option<T>, b: &Option<T>) -> Option<T> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.clone() * y.clone()),
        _ => None,
    }
}

fn opt_scale<T: Field>(a: &Option<T>, s: &T) -> Option<T> {
    a.as_ref().map(|x| x.clone() * s.clone())
}

impl<T: Field> Jet<T> {
    /// A jet with zero derivatives along `n1` directions (`n2` of them second-order).
    pub fn constant(v: T, n1: usize, n2: usize) -> Self {
        assert!(n2 <= n1, "second-order directions must be a prefix of the first-order ones");
        Jet { v, d1: vec![None; n1], d2: vec![None; pair_count(n2)], n2 }
    }

    /// A jet seeded with unit derivative along direction `dir`.
    pub fn seed(v: T, dir: usize, n1: usize, n2: usize) -> Self {
        let mut j = Self::constant(v, n1, n2);
        j.d1[dir] = Some(j.v.cst(1.0));
        j
    }

    /// Build a jet from explicit components (`None` = zero).
    pub fn from_parts(v: T, d1: Vec<Option<T>>, d2: Vec<Option<T>>, n2: usize) -> Self {
        assert_eq!(d2.len(), pair_count(n2));
        assert!(n2 <= d1.len());
        Jet { v, d1, d2, n2 }
    }

    pub fn value(&self) -> &T {
        &self.v
    }

    pub fn into_value(self) -> T {
        self.v
    }

    /// Same derivatives, different value.
    pub fn with_value(mut self, v: T) -> Self {
        self.v = v;
        self
    }

    pub fn n1(&self) -> usize {
        self.d1.len()
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn d1(&self, a: usize) -> Option<&T> {
        self.d1.get(a).and_then(|x| x.as_ref())
    }

    /// Second derivative along directions `a`, `b` (symmetric by storage).
    pub fn d2(&self, a: usize, b: usize) -> Option<&T> {
        if a >= self.n2 || b >= self.n2 {
            return None;
        }
        self.d2[pair_index(self.n2, a, b)].as_ref()
    }

    pub fn d1_or_zero(&self, a: usize) -> T {
        self.d1(a).cloned().unwrap_or_else(|| self.v.cst(0.0))
    }

    pub fn d2_or_zero(&self, a: usize, b: usize) -> T {
        self.d2(a, b).cloned().unwrap_or_else(|| self.v.cst(0.0))
    }

    /// Apply a scalar map given its value and first two derivatives at `self.v`.
    fn chain(&self, f0: T, deriv: impl FnOnce() -> (T, T)) -> Self {
        if self.d1.iter().all(Option::is_none) && self.d2.iter().all(Option::is_none) {
            return Jet { v: f0, d1: vec![None; self.d1.len()], d2: vec![None; self.d2.len()], n2: self.n2 };
        }
        let (f1, f2) = deriv();
        let d1: Vec<Option<T>> = self.d1.iter().map(|d| opt_scale(d, &f1)).collect();
        let mut d2 = Vec::with_capacity(self.d2.len());
        for a in 0..self.n2 {
            for b in a..self.n2 {
                let curv = opt_mul(&self.d1[a], &self.d1[b]).map(|p| p * f2.clone());
                let lin = opt_scale(&self.d2[pair_index(self.n2, a, b)], &f1);
                d2.push(opt_add(curv, lin));
            }
        }
        Jet { v: f0, d1, d2, n2: self.n2 }
    }

    fn dims_with(&self, other: &Self) -> (usize, usize) {
        let (n1, n2) = match (self.d1.len(), other.d1.len()) {
            (0, _) => (other.d1.len(), other.n2),
            (_, 0) => (self.d1.len(), self.n2),
            (a, b) => {
                assert!(a == b && self.n2 == other.n2, "jet direction sets differ");
                (a, self.n2)
            }
        };
        (n1, n2)
    }

    fn widened(self, n1: usize, n2: usize) -> Self {
        if self.d1.len() == n1 {
            self
        } else {
            Jet { v: self.v, d1: vec![None; n1], d2: vec![None; pair_count(n2)], n2 }
        }
    }

    /// Map every component through `f` (value and derivatives alike).
    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Jet<U> {
        Jet {
            v: f(&self.v),
            d1: self.d1.iter().map(|d| d.as_ref().map(&f)).collect(),
            d2: self.d2.iter().map(|d| d.as_ref().map(&f)).collect(),
            n2: self.n2,
        }
    }

    /// Combine two jets component-wise with a linear map `f` (zero-preserving).
    pub fn zip_linear(&self, other: &Self, f: impl Fn(Option<&T>, Option<&T>) -> Option<T>) -> Self {
        let (n1, n2) = self.dims_with(other);
        let a = self.clone().widened(n1, n2);
        let b = other.clone().widened(n1, n2);
        let v = f(Some(&a.v), Some(&b.v)).expect("linear map must produce a value");
        let d1 = (0..n1).map(|i| f(a.d1[i].as_ref(), b.d1[i].as_ref())).collect();
        let d2 = (0..pair_count(n2)).map(|i| f(a.d2[i].as_ref(), b.d2[i].as_ref())).collect();
        Jet { v, d1, d2, n2 }
    }
}

impl<T: Field> Add for Jet<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let (n1, n2) = self.dims_with(&rhs);
        let a = self.widened(n1, n2);
        let b = rhs.widened(n1, n2);
        Jet {
            v: a.v + b.v,
            d1: a.d1.into_iter().zip(b.d1).map(|(x, y)| opt_add(x, y)).collect(),
            d2: a.d2.into_iter().zip(b.d2).map(|(x, y)| opt_add(x, y)).collect(),
            n2,
        }
    }
}

impl<T: Field> Neg for Jet<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Jet {
            v: -self.v,
            d1: self.d1.into_iter().map(|d| d.map(|x| -x)).collect(),
            d2: self.d2.into_iter().map(|d| d.map(|x| -x)).collect(),
            n2: self.n2,
        }
    }
}

impl<T: Field> Sub for Jet<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let (n1, n2) = self.dims_with(&rhs);
        let a = self.widened(n1, n2);
        let b = rhs.widened(n1, n2);
        let sub = |x: Option<T>, y: Option<T>| match (x, y) {
            (Some(x), Some(y)) => Some(x - y),
            (Some(x), None) => Some(x),
            (None, Some(y)) => Some(-y),
            (None, None) => None,
        };
        Jet {
            v: a.v - b.v,
            d1: a.d1.into_iter().zip(b.d1).map(|(x, y)| sub(x, y)).collect(),
            d2: a.d2.into_iter().zip(b.d2).map(|(x, y)| sub(x, y)).collect(),
            n2,
        }
    }
}

impl<T: Field> Mul for Jet<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (n1, n2) = self.dims_with(&rhs);
        let a = self.widened(n1, n2);
        let b = rhs.widened(n1, n2);
        let d1 = (0..n1)
            .map(|i| opt_add(opt_scale(&a.d1[i], &b.v), opt_scale(&b.d1[i], &a.v)))
            .collect();
        let mut d2 = Vec::with_capacity(pair_count(n2));
        for i in 0..n2 {
            for j in i..n2 {
                let k = pair_index(n2, i, j);
                let mut acc = opt_add(opt_scale(&a.d2[k], &b.v), opt_scale(&b.d2[k], &a.v));
                acc = opt_add(acc, opt_mul(&a.d1[i], &b.d1[j]));
                acc = opt_add(acc, opt_mul(&a.d1[j], &b.d1[i]));
                d2.push(acc);
            }
        }
        Jet { v: a.v * b.v, d1, d2, n2 }
    }
}

impl<T: Field> Div for Jet<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        if rhs.d1.iter().all(Option::is_none) && rhs.d2.iter().all(Option::is_none) {
            // constant denominator: divide component-wise
            let r = rhs.v;
            return Jet {
                v: self.v / r.clone(),
                d1: self.d1.into_iter().map(|d| d.map(|x| x / r.clone())).collect(),
                d2: self.d2.into_iter().map(|d| d.map(|x| x / r.clone())).collect(),
                n2: self.n2,
            };
        }
        self * rhs.recip()
    }
}

impl<T: Field> Field for Jet<T> {
    fn cst(&self, c: f64) -> Self {
        Jet::constant(self.v.cst(c), self.d1.len(), self.n2)
    }

    fn exp(&self) -> Self {
        let e = self.v.exp();
        self.chain(e.clone(), || (e.clone(), e.clone()))
    }

    fn ln(&self) -> Self {
        let v = &self.v;
        self.chain(v.ln(), || {
            let r = v.recip();
            (r.clone(), -(r.clone() * r))
        })
    }

    fn sin(&self) -> Self {
        let v = &self.v;
        let s = v.sin();
        self.chain(s.clone(), || (v.cos(), -s))
    }

    fn cos(&self) -> Self {
        let v = &self.v;
        let c = v.cos();
        self.chain(c.clone(), || (-v.sin(), -c))
    }

    fn sqrt(&self) -> Self {
        let v = &self.v;
        let r = v.sqrt();
        self.chain(r.clone(), || {
            let f1 = r.recip().scale(0.5);
            let f2 = -(f1.clone() / v.clone()).scale(0.5);
            (f1, f2)
        })
    }

    fn powi(&self, n: i32) -> Self {
        let v = &self.v;
        self.chain(v.powi(n), || {
            let f1 = v.powi(n - 1).scale(n as f64);
            let f2 = if n == 1 { v.cst(0.0) } else { v.powi(n - 2).scale((n * (n - 1)) as f64) };
            (f1, f2)
        })
    }

    fn erf(&self) -> Self {
        let v = &self.v;
        self.chain(v.erf(), || {
            let g = (-v.square()).exp().scale(std::f64::consts::FRAC_2_SQRT_PI);
            let f2 = (g.clone() * v.clone()).scale(-2.0);
            (g, f2)
        })
    }

    fn act(&self, a: Activation, order: u8) -> Self {
        let v = &self.v;
        self.chain(v.act(a, order), || (v.act(a, order + 1), v.act(a, order + 2)))
    }

    fn recip(&self) -> Self {
        let v = &self.v;
        let r = v.recip();
        self.chain(r.clone(), || {
            let r2 = r.square();
            (-r2.clone(), (r2 * r.clone()).scale(2.0))
        })
    }

    fn square(&self) -> Self {
        let v = &self.v;
        self.chain(v.square(), || (v.scale(2.0), v.cst(2.0)))
    }

    fn scale(&self, c: f64) -> Self {
        self.map(|x| x.scale(c))
    }

    fn add_const(&self, c: f64) -> Self {
        let mut j = self.clone();
        j.v = j.v.add_const(c);
        j
    }

    fn values(&self) -> Vec<f64> {
        self.v.values()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_index_is_packed_upper_triangle() {
        let n = 4;
        let mut seen = Vec::new();
        for a in 0..n {
            for b in a..n {
                seen.push(pair_index(n, a, b));
                assert_eq!(pair_index(n, a, b), pair_index(n, b, a));
            }
        }
        assert_eq!(seen, (0..pair_count(n)).collect::<Vec<_>>());
    }

    #[test]
    fn square_of_seeded_variable() {
        let x = Jet::seed(3.0, 0, 1, 1);
        let y = x.clone() * x;
        assert_eq!(*y.value(), 9.0);
        assert_eq!(y.d1_or_zero(0), 6.0);
        assert_eq!(y.d2_or_zero(0, 0), 2.0);
    }

    #[test]
    fn sin_times_y_mixed_partial() {
        let x = Jet::seed(0.0, 0, 2, 2);
        let y = Jet::seed(2.0, 1, 2, 2);
        let f = x.sin() * y;
        assert_eq!(f.d1_or_zero(0), 2.0);
        assert_eq!(f.d1_or_zero(1), 0.0);
        assert_eq!(f.d2_or_zero(0, 1), 1.0);
        assert_eq!(f.d2_or_zero(1, 0), 1.0);
    }

    #[test]
    fn first_order_only_directions_carry_no_second_derivatives() {
        let u = Jet::seed(0.3, 0, 2, 1);
        let t = Jet::seed(0.5, 1, 2, 1);
        let f = (u.clone() * t.clone()).exp();
        assert!(f.d2(0, 1).is_none());
        assert!(f.d2(1, 1).is_none());
        assert!((f.d1_or_zero(1) - 0.3 * (0.15f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn nested_jets_give_third_derivatives() {
        // f(x) = x^4 at x = 2: f''' = 24 x = 48
        let inner = Jet::seed(2.0, 0, 1, 1);
        let outer = Jet::from_parts(inner, vec![Some(Jet::constant(1.0, 1, 1))], vec![None], 1);
        let f = outer.powi(4);
        let d1 = f.d1(0).unwrap(); // f'(x) as an inner jet
        assert_eq!(*d1.value(), 32.0);
        assert_eq!(d1.d2_or_zero(0, 0), 48.0);
        let d2 = f.d2(0, 0).unwrap();
        assert_eq!(d2.d1_or_zero(0), 48.0);
    }
}
