use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    frobenius_sq, geometry_at, metric_from_jacobian, ricci_flow_residual, second_fundamental_form, transform_ricci,
    Embedding, GramMetric, Mat,
};
use crate::autodiff::Field;
use crate::closed_forms::{sor_curvature, Cigar, Revolution, Sphere, SphereProfile, SorJet, Torus, TorusEmbedding};
use crate::error::{Error, Result};

/// Names accepted by [`run_suite`] besides `all`.
pub const SUITES: &[&str] = &["cigar", "sphere", "torus", "flat", "sff", "transform", "revolution"];

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub suite: String,
    pub name: String,
    pub samples: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConformanceReport {
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

struct Collector {
    suite: &'static str,
    checks: Vec<CheckResult>,
}

impl Collector {
    fn record(&mut self, name: &str, samples: usize, max_error: f64, tolerance: f64) {
        self.checks.push(CheckResult {
            suite: self.suite.into(),
            name: name.into(),
            samples,
            max_error,
            tolerance,
            passed: max_error.is_finite() && max_error < tolerance,
        });
    }
}

fn max_abs_diff(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Run one named oracle suite (or `all`).
pub fn run_suite(name: &str) -> Result<ConformanceReport> {
    let names: Vec<&'static str> = if name == "all" {
        SUITES.to_vec()
    } else {
        vec![*SUITES
            .iter()
            .find(|s| **s == name)
            .ok_or_else(|| Error::Unknown { kind: "geometry suite", name: name.to_string() })?]
    };
    let mut checks = Vec::new();
    for s in names {
        let mut c = Collector { suite: s, checks: Vec::new() };
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        match s {
            "cigar" => cigar(&mut c, &mut rng)?,
            "sphere" => sphere(&mut c, &mut rng)?,
            "torus" => torus(&mut c, &mut rng)?,
            "flat" => flat(&mut c, &mut rng)?,
            "sff" => sff(&mut c, &mut rng)?,
            "transform" => transform(&mut c, &mut rng)?,
            "revolution" => revolution(&mut c, &mut rng)?,
            _ => unreachable!(),
        }
        checks.extend(c.checks);
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(ConformanceReport { checks, passed })
}

fn cigar(c: &mut Collector, rng: &mut ChaCha8Rng) -> Result<()> {
    let mut worst = 0.0f64;
    let n = 500;
    for _ in 0..n {
        let u = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let t = rng.random_range(0.0..1.0);
        worst = worst.max(ricci_flow_residual(&Cigar, &u, t)?.1);
    }
    c.record("ricci_flow_residual", n, worst, 1e-8);
    let r = geometry_at(&Cigar, &[0.0, 0.0], &0.0)?;
    let gmax = r.gamma.iter().flatten().flatten().map(|x| x.abs()).fold(0.0, f64::max);
    c.record("christoffel_vanish_at_origin", 1, gmax, 1e-14);
    let ric = vec![vec![2.0, 0.0], vec![0.0, 2.0]];
    c.record("ricci_at_origin", 1, max_abs_diff(&r.ricci, &ric), 1e-12);
    Ok(())
}

fn sphere(c: &mut Collector, rng: &mut ChaCha8Rng) -> Result<()> {
    for d in [3usize, 4, 5] {
        let s = Sphere::new(1.0, d)?;
        let (mut worst, mut norm_err) = (0.0f64, 0.0f64);
        let n = 200;
        for _ in 0..n {
            let u: Vec<f64> = (0..d - 1).map(|_| rng.random_range(0.3..2.8)).collect();
            let t = rng.random_range(0.0..0.9 * s.extinction_time());
            worst = worst.max(ricci_flow_residual(&s, &u, t)?.1);
            let x = Embedding::<f64>::eval(&s, &u, &t);
            let r = crate::closed_forms::sphere_radius(1.0, d, t)?;
            norm_err = norm_err.max((x.iter().map(|v| v * v).sum::<f64>().sqrt() - r).abs());
        }
        c.record(&format!("radius_law_residual_d{d}"), n, worst, 1e-7);
        c.record(&format!("embedding_norm_d{d}"), n, norm_err, 1e-12);
    }
    let u1 = std::f64::consts::FRAC_PI_4;
    let r = geometry_at(&Sphere::new(1.0, 3)?, &[u1, 0.2], &0.0)?;
    let err = (r.gamma[1][1][0] + 0.5).abs().max((r.gamma[0][1][1] - 1.0).abs()).max(r.dgamma[0][1][1][0].abs());
    c.record("unit_sphere_christoffel", 1, err, 1e-13);
    Ok(())
}

fn torus(c: &mut Collector, rng: &mut ChaCha8Rng) -> Result<()> {
    let tor = Torus::default();
    let (mut worst, mut gram) = (0.0f64, 0.0f64);
    let n = 100;
    for _ in 0..n {
        let u = [rng.random_range(0.0..6.28), rng.random_range(0.0..6.28)];
        let r = geometry_at(&tor, &u, &0.0)?;
        let k = tor.gaussian_curvature(u[1]);
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((r.ricci[i][j] - k * r.g[i][j]).abs());
            }
        }
        let gj = metric_from_jacobian(&TorusEmbedding(tor), &u, &0.0)?;
        gram = gram.max(max_abs_diff(&gj, &r.g));
    }
    c.record("ricci_equals_curvature_times_metric", n, worst, 1e-10);
    c.record("embedding_gram_matches_metric", n, gram, 1e-12);
    Ok(())
}

/// Constant linear map into `R^3`.
struct Linear([[f64; 2]; 3]);

impl<F: Field> Embedding<F> for Linear {
    fn dim_in(&self) -> usize {
        2
    }
    fn dim_out(&self) -> usize {
        3
    }
    fn eval(&self, u: &[F], _t: &F) -> Vec<F> {
        self.0.iter().map(|r| u[0].scale(r[0]) + u[1].scale(r[1])).collect()
    }
}

fn flat(c: &mut Collector, rng: &mut ChaCha8Rng) -> Result<()> {
    let mut worst = 0.0f64;
    let n = 20;
    for _ in 0..n {
        let mut a = [[0.0; 2]; 3];
        for row in a.iter_mut() {
            for x in row.iter_mut() {
                *x = rng.random_range(-1.0..1.0);
            }
        }
        a[0][0] += 2.0;
        a[1][1] += 2.0;
        let u = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let r = geometry_at(&GramMetric(Linear(a)), &u, &0.0)?;
        worst = worst.max(r.riemann.iter().flatten().flatten().flatten().map(|x| x.abs()).fold(0.0, f64::max));
    }
    c.record("constant_gram_is_flat", n, worst, 1e-12);
    let mut polar = 0.0f64;
    for _ in 0..n {
        let rho: f64 = rng.random_range(0.5..3.0);
        let r = geometry_at(&Polar, &[rho, rng.random_range(0.0..6.0)], &0.0)?;
        polar = polar.max(frobenius_sq(&r.ricci).sqrt());
    }
    c.record("polar_coordinates_ricci", n, polar, 1e-9);
    Ok(())
}

struct Polar;

impl<F: Field> super::MetricField<F> for Polar {
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, u: &[F], _t: &F) -> Mat<F> {
        let z = u[0].cst(0.0);
        vec![vec![u[0].cst(1.0), z.clone()], vec![z, u[0].square()]]
    }
}

/// Graph surface `(u1, u2, h(u))` with a random quadratic-plus-sine height.
struct GraphSurface([f64; 5]);

impl<F: Field> Embedding<F> for GraphSurface {
    fn dim_in(&self) -> usize {
        2
    }
    fn dim_out(&self) -> usize {
        3
    }
    fn eval(&self, u: &[F], t: &F) -> Vec<F> {
        let k = &self.0;
        let h = u[0].square().scale(k[0])
            + (u[0].clone() * u[1].clone()).scale(k[1])
            + u[1].square().scale(k[2])
            + (u[0].scale(k[3]) + t.clone()).sin().scale(k[4]);
        vec![u[0].clone(), u[1].clone(), h]
    }
}

fn sff(c: &mut Collector, rng: &mut ChaCha8Rng) -> Result<()> {
    let n = 10;
    let mut worst = 0.0f64;
    for _ in 0..n {
        let k: [f64; 5] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let e = GraphSurface(k);
        let u = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let t = rng.random_range(0.0..1.0);
        let s = second_fundamental_form(&e, &u, &t)?;
        let r = geometry_at(&GramMetric(GraphSurface(k)), &u, &t)?;
        let scale = r.riemann.iter().flatten().flatten().flatten().map(|x| x.abs()).fold(1e-3, f64::max);
        for (a, b) in s.riemann.iter().flatten().flatten().flatten().zip(r.riemann.iter().flatten().flatten().flatten()) {
            worst = worst.max((a - b).abs() / scale);
        }
    }
    c.record("gauss_equation_riemann", n, worst, 1e-8);
    let sphere = Sphere::new(1.0, 3)?;
    let mut lerr = 0.0f64;
    for _ in 0..n {
        let u = [rng.random_range(0.3..2.8), rng.random_range(0.0..6.0)];
        let s = second_fundamental_form(&sphere, &u, &0.0)?;
        let sign = s.l[0][0].signum() * s.g[0][0].signum();
        for i in 0..2 {
            for j in 0..2 {
                lerr = lerr.max((s.l[i][j] - sign * s.g[i][j]).abs());
            }
        }
    }
    c.record("unit_sphere_second_fundamental_form", n, lerr, 1e-12);
    Ok(())
}

/// Sphere metric in a chart rotated by a fixed angle in the `(u1, u2)` plane.
struct Rotated {
    angle: f64,
    base: Sphere,
}

impl Rotated {
    fn jac(&self) -> Mat<f64> {
        let (s, c) = self.angle.sin_cos();
        vec![vec![c, -s], vec![s, c]]
    }
}

impl<F: Field> super::MetricField<F> for Rotated {
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, v: &[F], t: &F) -> Mat<F> {
        let j = self.jac();
        let u: Vec<F> = (0..2).map(|i| v[0].scale(j[i][0]) + v[1].scale(j[i][1])).collect();
        let g = super::MetricField::<F>::eval(&self.base, &u, t);
        (0..2)
            .map(|a| {
                (0..2)
                    .map(|b| {
                        let mut acc = g[0][0].scale(j[0][a] * j[0][b]);
                        for (i, k) in [(0, 1), (1, 0), (1, 1)] {
                            acc = acc + g[i][k].scale(j[i][a] * j[k][b]);
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }
}

fn transform(c: &mut Collector, rng: &mut ChaCha8Rng) -> Result<()> {
    let n = 10;
    let mut worst = 0.0f64;
    for _ in 0..n {
        let rot = Rotated { angle: rng.random_range(-0.5..0.5), base: Sphere::new(1.0, 3)? };
        let v = [rng.random_range(0.8..1.6), rng.random_range(0.0..1.0)];
        let j = rot.jac();
        let u: Vec<f64> = (0..2).map(|i| j[i][0] * v[0] + j[i][1] * v[1]).collect();
        let direct = geometry_at(&rot, &v, &0.0)?;
        let base = geometry_at(&rot.base, &u, &0.0)?;
        let moved = transform_ricci(&base.ricci, &j)?;
        let scale = direct.ricci.iter().flatten().map(|x| x.abs()).fold(1e-3, f64::max);
        worst = worst.max(max_abs_diff(&moved, &direct.ricci) / scale);
    }
    c.record("rotated_chart_ricci", n, worst, 1e-6);
    Ok(())
}

fn revolution(c: &mut Collector, rng: &mut ChaCha8Rng) -> Result<()> {
    let n = 20;
    let (mut gam, mut res) = (0.0f64, 0.0f64);
    let prof = SphereProfile { r0: 1.0 };
    for _ in 0..n {
        let u = [rng.random_range(0.3..2.8), rng.random_range(0.0..6.0)];
        let t = rng.random_range(0.0..0.4);
        let sj = SorJet::of(&prof, &u[0], &t);
        let closed = sor_curvature(&sj)?;
        let pipe = geometry_at(&Revolution(prof), &u, &t)?;
        for i in 0..2 {
            for j in 0..2 {
                for l in 0..2 {
                    gam = gam.max((closed.gamma[i][j][l] - pipe.gamma[i][j][l]).abs());
                }
                res = res.max((closed.dt_g[i][j] + 2.0 * closed.ricci[i][j]).abs());
            }
        }
    }
    c.record("closed_form_christoffel", n, gam, 1e-9);
    c.record("shrinking_sphere_profile_residual", n, res, 1e-6);
    Ok(())
}
