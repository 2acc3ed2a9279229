//! Analytic geometries: the cigar soliton, the flat torus of revolution,
//! shrinking round spheres, and time-dependent surfaces of revolution.

use serde::{Deserialize, Serialize};

use crate::autodiff::{Field, Jet};
use crate::geometry::{ricci, riemann, Embedding, Mat, MetricField};
use crate::error::{Error, Result};

/// `g = (du1^2 + du2^2) / (e^{4t} + |u|^2)`
#[derive(Clone, Copy, Debug, Default)]
pub struct Cigar;

impl<F: Field> MetricField<F> for Cigar {
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, u: &[F], t: &F) -> Mat<F> {
        let c = (t.scale(4.0).exp() + u[0].square() + u[1].square()).recip();
        let z = c.cst(0.0);
        vec![vec![c.clone(), z.clone()], vec![z, c]]
    }
}

pub fn cigar_metric(u: [f64; 2], t: f64) -> Mat<f64> {
    Cigar.eval(&u, &t)
}

/// Torus of revolution: `g = (b + a cos u2)^2 du1^2 + a^2 du2^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Torus {
    pub a: f64,
    pub b: f64,
}

impl Default for Torus {
    fn default() -> Self {
        Torus { a: -1.0, b: 2.0 }
    }
}

impl Torus {
    /// Gaussian curvature `cos u2 / (a (b + a cos u2))`.
    pub fn gaussian_curvature(&self, u2: f64) -> f64 {
        u2.cos() / (self.a * (self.b + self.a * u2.cos()))
    }
}

impl<F: Field> MetricField<F> for Torus {
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, u: &[F], _t: &F) -> Mat<F> {
        let w = u[1].cos().scale(self.a).add_const(self.b);
        let z = w.cst(0.0);
        vec![vec![w.square(), z.clone()], vec![z, w.cst(self.a * self.a)]]
    }
}

/// The standard embedding of [`Torus`] in `R^3`.
#[derive(Clone, Copy, Debug)]
pub struct TorusEmbedding(pub Torus);

impl<F: Field> Embedding<F> for TorusEmbedding {
    fn dim_in(&self) -> usize {
        2
    }
    fn dim_out(&self) -> usize {
        3
    }
    fn eval(&self, u: &[F], _t: &F) -> Vec<F> {
        let Torus { a, b } = self.0;
        let w = u[1].cos().scale(a).add_const(b);
        vec![w.clone() * u[0].cos(), w * u[0].sin(), u[1].sin().scale(a)]
    }
}

pub fn torus_metric(u: [f64; 2], a: f64, b: f64) -> Mat<f64> {
    Torus { a, b }.eval(&u, &0.0)
}

/// Radicand `R^2 - 2 (d - 2) t` of the sphere radius law.
pub fn sphere_radicand(r0: f64, d: usize, t: f64) -> f64 {
    r0 * r0 - 2.0 * (d as f64 - 2.0) * t
}

/// `r(t) = sqrt(R^2 - 2 (d - 2) t)` for a round `(d-1)`-sphere in `R^d`.
pub fn sphere_radius(r0: f64, d: usize, t: f64) -> Result<f64> {
    let q = sphere_radicand(r0, d, t);
    if q > 0.0 {
        Ok(q.sqrt())
    } else {
        Err(Error::Extinction(q))
    }
}

fn radius_field<F: Field>(r0: f64, d: usize, t: &F) -> F {
    t.scale(-2.0 * (d as f64 - 2.0)).add_const(r0 * r0).sqrt()
}

/// Round `(d-1)`-sphere of radius `r(t)` in hyperspherical coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sphere {
    pub r0: f64,
    pub d: usize,
}

impl Sphere {
    pub fn new(r0: f64, d: usize) -> Result<Self> {
        if d < 3 || r0 <= 0.0 {
            return Err(Error::Config(format!("sphere needs d >= 3 and R > 0, got d={d}, R={r0}")));
        }
        Ok(Sphere { r0, d })
    }

    /// Time at which the radius reaches zero.
    pub fn extinction_time(&self) -> f64 {
        self.r0 * self.r0 / (2.0 * (self.d as f64 - 2.0))
    }
}

impl<F: Field> Embedding<F> for Sphere {
    fn dim_in(&self) -> usize {
        self.d - 1
    }
    fn dim_out(&self) -> usize {
        self.d
    }
    fn eval(&self, u: &[F], t: &F) -> Vec<F> {
        let r = radius_field(self.r0, self.d, t);
        let mut out = Vec::with_capacity(self.d);
        let mut sines = r;
        for ui in u {
            out.push(sines.clone() * ui.cos());
            sines = sines * ui.sin();
        }
        out.push(sines);
        out
    }
}

impl<F: Field> MetricField<F> for Sphere {
    fn dim(&self) -> usize {
        self.d - 1
    }
    fn eval(&self, u: &[F], t: &F) -> Mat<F> {
        let m = self.d - 1;
        let r2 = radius_field(self.r0, self.d, t).square();
        let z = r2.cst(0.0);
        let mut g = vec![vec![z; m]; m];
        let mut w = r2;
        for i in 0..m {
            g[i][i] = w.clone();
            w = w * u[i].sin().square();
        }
        g
    }
}

/// Point on the (optionally shifted) sphere at chart coordinates `u`.
pub fn sphere_embed(u: &[f64], t: f64, r0: f64, d: usize, shift: Option<&[f64]>) -> Result<Vec<f64>> {
    let s = Sphere::new(r0, d)?;
    if u.len() != d - 1 {
        return Err(Error::Dimension(format!("sphere in R^{d} needs {} angles, got {}", d - 1, u.len())));
    }
    sphere_radius(r0, d, t)?;
    let mut x = Embedding::<f64>::eval(&s, u, &t);
    if let Some(sh) = shift {
        if sh.len() != d {
            return Err(Error::Dimension(format!("shift has {} entries, expected {d}", sh.len())));
        }
        for (xi, si) in x.iter_mut().zip(sh) {
            *xi += si;
        }
    }
    Ok(x)
}

pub fn sphere_metric(u: &[f64], t: f64, r0: f64, d: usize) -> Result<Mat<f64>> {
    let s = Sphere::new(r0, d)?;
    sphere_radius(r0, d, t)?;
    Ok(MetricField::<f64>::eval(&s, u, &t))
}

/// Radius and height profiles `r(u1, t)`, `z(u1, t)` of a surface of revolution.
pub trait SorProfile {
    fn r<F: Field>(&self, s: &F, t: &F) -> F;
    fn z<F: Field>(&self, s: &F, t: &F) -> F;
}

/// `(r cos u2, r sin u2, z)` for a profile.
#[derive(Clone, Copy, Debug)]
pub struct Revolution<P>(pub P);

impl<F: Field, P: SorProfile> Embedding<F> for Revolution<P> {
    fn dim_in(&self) -> usize {
        2
    }
    fn dim_out(&self) -> usize {
        3
    }
    fn eval(&self, u: &[F], t: &F) -> Vec<F> {
        let r = self.0.r(&u[0], t);
        vec![r.clone() * u[1].cos(), r * u[1].sin(), self.0.z(&u[0], t)]
    }
}

impl<F: Field, P: SorProfile> MetricField<F> for Revolution<P> {
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, u: &[F], t: &F) -> Mat<F> {
        let s = Jet::seed(u[0].clone(), 0, 1, 0);
        let tj = Jet::constant(t.clone(), 1, 0);
        let r = self.0.r(&s, &tj);
        let z = self.0.z(&s, &tj);
        let (r1, z1) = (r.d1_or_zero(0), z.d1_or_zero(0));
        let zero = r1.cst(0.0);
        vec![vec![r1.square() + z1.square(), zero.clone()], vec![zero, r.into_value().square()]]
    }
}

/// Profile values and derivatives at one point: `x1 = d_u1 x`, `x11`, `xt = d_t x`, `x1t`.
#[derive(Clone, Debug)]
pub struct SorJet<F> {
    pub r: F,
    pub r1: F,
    pub r11: F,
    pub rt: F,
    pub r1t: F,
    pub z1: F,
    pub z11: F,
    pub z1t: F,
}

impl<F: Field> SorJet<F> {
    /// Differentiate the profile at `(s, t)`.
    pub fn of<P: SorProfile>(p: &P, s: &F, t: &F) -> Self {
        let sj = Jet::seed(s.clone(), 0, 2, 2);
        let tj = Jet::seed(t.clone(), 1, 2, 2);
        let r = p.r(&sj, &tj);
        let z = p.z(&sj, &tj);
        Self::from_jets(&r, &z)
    }

    /// From jets over the directions `(u1, t)` with full second order.
    pub fn from_jets(r: &Jet<F>, z: &Jet<F>) -> Self {
        SorJet {
            r: r.value().clone(),
            r1: r.d1_or_zero(0),
            r11: r.d2_or_zero(0, 0),
            rt: r.d1_or_zero(1),
            r1t: r.d2_or_zero(0, 1),
            z1: z.d1_or_zero(0),
            z11: z.d2_or_zero(0, 0),
            z1t: z.d2_or_zero(0, 1),
        }
    }

    pub fn check(&self) -> Result<()> {
        let smallest = self.r.values().into_iter().fold(f64::INFINITY, f64::min);
        if smallest > 0.0 {
            Ok(())
        } else {
            Err(Error::DegenerateProfile(smallest))
        }
    }
}

/// Closed-form Christoffel symbols `gamma[i][j][l] = Gamma_ij^l` of a surface of revolution.
pub fn sor_christoffel<F: Field>(p: &SorJet<F>) -> Vec<Mat<F>> {
    let e = p.r1.square() + p.z1.square();
    let zero = e.cst(0.0);
    let mut gamma = vec![vec![vec![zero; 2]; 2]; 2];
    gamma[0][0][0] = (p.r1.clone() * p.r11.clone() + p.z1.clone() * p.z11.clone()) / e.clone();
    gamma[1][1][0] = -(p.r.clone() * p.r1.clone()) / e;
    let k = p.r1.clone() / p.r.clone();
    gamma[0][1][1] = k.clone();
    gamma[1][0][1] = k;
    gamma
}

/// Curvature of a surface of revolution from its closed-form connection.
#[derive(Clone, Debug)]
pub struct SorCurvature<F> {
    pub g: Mat<F>,
    pub gamma: Vec<Mat<F>>,
    /// `dgamma[j][i][k][l] = d_j Gamma_ik^l`; the `d_1 Gamma_11^1` slot is left at
    /// zero because it cancels in every Riemann component.
    pub dgamma: Vec<Vec<Mat<F>>>,
    pub riemann: Vec<Vec<Mat<F>>>,
    pub ricci: Mat<F>,
    pub dt_g: Mat<F>,
}

pub fn sor_curvature<F: Field>(p: &SorJet<F>) -> Result<SorCurvature<F>> {
    p.check()?;
    let e = p.r1.square() + p.z1.square();
    let e1 = (p.r1.clone() * p.r11.clone() + p.z1.clone() * p.z11.clone()).scale(2.0);
    let zero = e.cst(0.0);
    let gamma = sor_christoffel(p);
    let mut dgamma = vec![vec![vec![vec![zero.clone(); 2]; 2]; 2]; 2];
    // d_1 of -r r1 / E
    let num = p.r.clone() * p.r1.clone();
    let dnum = p.r1.square() + p.r.clone() * p.r11.clone();
    dgamma[0][1][1][0] = -(dnum * e.clone() - num * e1) / e.square();
    let dk = (p.r11.clone() * p.r.clone() - p.r1.square()) / p.r.square();
    dgamma[0][0][1][1] = dk.clone();
    dgamma[0][1][0][1] = dk;
    let riem = riemann(&gamma, &dgamma);
    let ric = ricci(&riem);
    let g = vec![vec![e.clone(), zero.clone()], vec![zero.clone(), p.r.square()]];
    let dt_g = vec![
        vec![(p.r1.clone() * p.r1t.clone() + p.z1.clone() * p.z1t.clone()).scale(2.0), zero.clone()],
        vec![zero, (p.r.clone() * p.rt.clone()).scale(2.0)],
    ];
    Ok(SorCurvature { g, gamma, dgamma, riemann: riem, ricci: ric, dt_g })
}

/// Cylinder `r = 1, z = u1`.
#[derive(Clone, Copy, Debug)]
pub struct CylinderProfile;

impl SorProfile for CylinderProfile {
    fn r<F: Field>(&self, s: &F, _t: &F) -> F {
        s.cst(1.0)
    }
    fn z<F: Field>(&self, s: &F, _t: &F) -> F {
        s.clone()
    }
}

/// Cone `r = u1, z = u1`.
#[derive(Clone, Copy, Debug)]
pub struct ConeProfile;

impl SorProfile for ConeProfile {
    fn r<F: Field>(&self, s: &F, _t: &F) -> F {
        s.clone()
    }
    fn z<F: Field>(&self, s: &F, _t: &F) -> F {
        s.clone()
    }
}

/// Shrinking round 2-sphere: `r = rho(t) sin u1, z = rho(t) cos u1`.
#[derive(Clone, Copy, Debug)]
pub struct SphereProfile {
    pub r0: f64,
}

impl SorProfile for SphereProfile {
    fn r<F: Field>(&self, s: &F, t: &F) -> F {
        radius_field(self.r0, 3, t) * s.sin()
    }
    fn z<F: Field>(&self, s: &F, t: &F) -> F {
        radius_field(self.r0, 3, t) * s.cos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{geometry_at, metric_from_jacobian};
    use std::f64::consts::PI;

    #[test]
    fn cigar_values() {
        assert_eq!(cigar_metric([0.0, 0.0], 0.0), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!((cigar_metric([1.0, 1.0], 0.0)[0][0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((cigar_metric([0.0, 0.0], 0.25)[1][1] - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn torus_values() {
        assert_eq!(torus_metric([0.3, 0.0], -1.0, 2.0), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!((torus_metric([0.3, PI], -1.0, 2.0)[0][0] - 9.0).abs() < 1e-14);
        assert!((torus_metric([0.3, PI / 2.0], -1.0, 2.0)[0][0] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_radius_law() {
        assert_eq!(sphere_radius(1.0, 3, 0.0).unwrap(), 1.0);
        assert!((sphere_radius(1.0, 3, 0.25).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((sphere_radius(2.0, 4, 0.5).unwrap() - 2.0f64.sqrt()).abs() < 1e-15);
        assert!(matches!(sphere_radius(1.0, 3, 0.6), Err(Error::Extinction(_))));
    }

    #[test]
    fn sphere_embedding_values() {
        let x = sphere_embed(&[PI / 2.0, 0.0], 0.0, 1.0, 3, None).unwrap();
        assert!(x[0].abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15 && x[2].abs() < 1e-15);
        let x = sphere_embed(&[0.0, 0.0], 0.0, 1.0, 3, Some(&[1.0, 0.0, 0.0])).unwrap();
        assert_eq!(x, vec![2.0, 0.0, 0.0]);
        let g = sphere_metric(&[PI / 6.0, 0.4], 0.0, 1.0, 3).unwrap();
        assert!((g[0][0] - 1.0).abs() < 1e-15 && (g[1][1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn cone_christoffels() {
        let u1 = 1.3;
        let p = SorJet::of(&ConeProfile, &u1, &0.0);
        let gm = sor_christoffel(&p);
        assert!((gm[1][1][0] + u1 / 2.0).abs() < 1e-15);
        assert!((gm[0][1][1] - 1.0 / u1).abs() < 1e-15);
        assert!(gm[0][0][0].abs() < 1e-15);
    }

    #[test]
    fn sphere_profile_matches_sphere_metric_and_pipeline() {
        let (u, t) = ([0.9, 0.4], 0.1);
        let rev = Revolution(SphereProfile { r0: 1.0 });
        let g = MetricField::<f64>::eval(&rev, &u, &t);
        let s = sphere_metric(&u, t, 1.0, 3).unwrap();
        let gj = metric_from_jacobian(&rev, &u, &t).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((g[i][j] - s[i][j]).abs() < 1e-14);
                assert!((gj[i][j] - s[i][j]).abs() < 1e-14);
            }
        }
        let sc = sor_curvature(&SorJet::of(&SphereProfile { r0: 1.0 }, &u[0], &t)).unwrap();
        let rep = geometry_at(&rev, &u, &t).unwrap();
        for i in 0..2 {
            for k in 0..2 {
                assert!((sc.ricci[i][k] - rep.ricci[i][k]).abs() < 1e-12);
                assert!((sc.dt_g[i][k] + 2.0 * sc.ricci[i][k]).abs() < 1e-12);
            }
        }
    }
}
