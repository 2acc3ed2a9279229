//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rfae_core::autodiff::{backward_grad, forward_eval, Activation, BoundParams, Field, Graph, Jet, ParamVector, Prim, Tape, Tensor};
use rfae_core::closed_forms::{sphere_embed, sphere_radius, Cigar, Sphere};
use rfae_core::eval_export::{evaluate, relative_l1};
use rfae_core::geometry::{
    geometry_at, ricci_flow_residual, second_fundamental_form, transform_ricci, Embedding, GramMetric, Mat, MetricField,
};
use rfae_core::nn::{ArrayWeights, Mlp, MlpSpec, Variant};
use rfae_core::pde_data::*;
use rfae_core::training::*;

type Outcome = (bool, String);

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

fn flat<T: Clone>(m: &[Vec<T>]) -> Vec<T> {
    m.iter().flatten().cloned().collect()
}

// ---------------------------------------------------------------- geometry fixtures

/// Positive-definite 2-d metric with smooth, time-dependent entries.
#[derive(Clone, Copy)]
struct RandMetric([f64; 12]);

impl RandMetric {
    fn new(rng: &mut ChaCha8Rng) -> Self {
        RandMetric(std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
    }
}

fn wave<F: Field>(u: &[F], t: &F, c: &[f64]) -> F {
    (u[0].scale(c[0]) + u[1].scale(c[1]) + t.scale(c[2])).add_const(c[3])
}

impl<F: Field> MetricField<F> for RandMetric {
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, u: &[F], t: &F) -> Mat<F> {
        let c = &self.0;
        let g11 = wave(u, t, &c[0..4]).sin().scale(0.3).add_const(1.5);
        let g22 = wave(u, t, &c[4..8]).cos().scale(0.3).add_const(1.5);
        let g12 = wave(u, t, &c[8..12]).sin().scale(0.3);
        vec![vec![g11, g12.clone()], vec![g12, g22]]
    }
}

/// A perturbed, time-dependent graph surface in R^3.
#[derive(Clone, Copy)]
struct RandSurface([f64; 10]);

impl<F: Field> Embedding<F> for RandSurface {
    fn dim_in(&self) -> usize {
        2
    }
    fn dim_out(&self) -> usize {
        3
    }
    fn eval(&self, u: &[F], t: &F) -> Vec<F> {
        let c = &self.0;
        let x = u[0].clone() + u[1].add_const(c[0]).sin().scale(0.1);
        let y = u[1].clone() + u[0].add_const(c[1]).cos().scale(0.1);
        let z = wave(u, t, &c[2..6]).sin().scale(0.5) + wave(u, t, &c[6..10]).cos().scale(0.3);
        vec![x, y, z]
    }
}

/// `base` pulled back along `u = (v1 + a sin v2, v2 + b sin v1)`.
struct Pulled {
    base: RandMetric,
    a: f64,
    b: f64,
}

impl Pulled {
    fn map<F: Field>(&self, v: &[F]) -> (Vec<F>, Mat<F>) {
        let u = vec![v[0].clone() + v[1].sin().scale(self.a), v[1].clone() + v[0].sin().scale(self.b)];
        let one = v[0].cst(1.0);
        let jac = vec![vec![one.clone(), v[1].cos().scale(self.a)], vec![v[0].cos().scale(self.b), one]];
        (u, jac)
    }
}

impl<F: Field> MetricField<F> for Pulled {
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, v: &[F], t: &F) -> Mat<F> {
        let (u, j) = self.map(v);
        let g = self.base.eval(&u, t);
        (0..2)
            .map(|a| {
                (0..2)
                    .map(|b| {
                        let mut acc = v[0].cst(0.0);
                        for i in 0..2 {
                            for k in 0..2 {
                                acc = acc + j[i][a].clone() * g[i][k].clone() * j[k][b].clone();
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }
}

/// Flat plane in polar coordinates `(rho, theta)`.
struct Polar;

impl<F: Field> MetricField<F> for Polar {
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, u: &[F], _t: &F) -> Mat<F> {
        let zero = u[0].cst(0.0);
        vec![vec![u[0].cst(1.0), zero.clone()], vec![zero, u[0].square()]]
    }
}

fn inv2(g: &Mat<f64>) -> Mat<f64> {
    let d = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    vec![vec![g[1][1] / d, -g[0][1] / d], vec![-g[1][0] / d, g[0][0] / d]]
}

// ---------------------------------------------------------------- criteria

fn c1_cigar() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let u = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let t = rng.random_range(0.0..1.0);
        worst = worst.max(ricci_flow_residual(&Cigar, &u, t).unwrap().1);
    }
    let secs = start.elapsed().as_secs_f64();
    (worst < 1e-8 && secs < 10.0, format!("max |dt g + 2 Ric|_F = {worst:.2e} < 1e-8 over 500 points in {secs:.2} s (< 10 s)"))
}

fn c2_sphere() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut res, mut norm) = (0.0f64, 0.0f64);
    for d in 3..=5 {
        let r0 = 1.0;
        let s = Sphere::new(r0, d).unwrap();
        for _ in 0..200 {
            let t = rng.random_range(0.0..0.9 * s.extinction_time());
            let mut u: Vec<f64> = (0..d - 2).map(|_| rng.random_range(0.2..PI - 0.2)).collect();
            u.push(rng.random_range(0.0..2.0 * PI));
            res = res.max(ricci_flow_residual(&s, &u, t).unwrap().1);
            let x = sphere_embed(&u, t, r0, d, None).unwrap();
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            norm = norm.max((r - sphere_radius(r0, d, t).unwrap()).abs());
        }
    }
    (res < 1e-7 && norm < 1e-12, format!("d=3,4,5: max residual {res:.2e} < 1e-7, max ||E| - r(t)| {norm:.2e} < 1e-12"))
}

fn c3_pipeline_vs_fd() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut e_gamma, mut e_dgamma, mut e_riem, mut e_ric, mut e_id) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let mf = RandMetric::new(&mut rng);
        let u = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let t = rng.random_range(0.0..1.0);
        let rep = geometry_at(&mf, &u, &t).unwrap();
        let g_at = |du: [f64; 2]| MetricField::<f64>::eval(&mf, &[u[0] + du[0], u[1] + du[1]], &t);
        let e = |i: usize, h: f64| if i == 0 { [h, 0.0] } else { [0.0, h] };

        // Christoffel symbols from finite-difference metric derivatives
        let h = 1e-5;
        let dg: Vec<Mat<f64>> = (0..2)
            .map(|i| {
                let (p, m) = (g_at(e(i, h)), g_at(e(i, -h)));
                (0..2).map(|j| (0..2).map(|k| (p[j][k] - m[j][k]) / (2.0 * h)).collect()).collect()
            })
            .collect();
        let g = g_at([0.0, 0.0]);
        let gi = inv2(&g);
        let mut gamma = vec![vec![vec![0.0; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for l in 0..2 {
                    gamma[i][j][l] =
                        0.5 * (0..2).map(|k| gi[k][l] * (dg[j][i][k] - dg[k][i][j] + dg[i][k][j])).sum::<f64>();
                }
            }
        }
        e_gamma = e_gamma.max(rel_err(&flat(&flat(&rep.gamma)), &flat(&flat(&gamma))));

        // derivatives of the Christoffel symbols by central differences of the pipeline values
        let h2 = 1e-4;
        let mut dgamma_fd = Vec::new();
        let mut dgamma_ad = Vec::new();
        for j in 0..2 {
            let p = geometry_at(&mf, &[u[0] + e(j, h2)[0], u[1] + e(j, h2)[1]], &t).unwrap().gamma;
            let m = geometry_at(&mf, &[u[0] - e(j, h2)[0], u[1] - e(j, h2)[1]], &t).unwrap().gamma;
            for i in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        dgamma_fd.push((p[i][k][l] - m[i][k][l]) / (2.0 * h2));
                        dgamma_ad.push(rep.dgamma[j][i][k][l]);
                    }
                }
            }
        }
        e_dgamma = e_dgamma.max(rel_err(&dgamma_ad, &dgamma_fd));

        // Gaussian curvature by the Brioschi formula, fourth-order differences of E, F, G
        let h3 = 1e-2;
        let offs = [-2.0, -1.0, 1.0, 2.0];
        let w1 = [1.0, -8.0, 8.0, -1.0];
        let comp = |du: [f64; 2], a: usize, b: usize| g_at(du)[a][b];
        let d1 = |a: usize, b: usize, dir: usize| {
            offs.iter().zip(w1).map(|(o, w)| w * comp(e(dir, o * h3), a, b)).sum::<f64>() / (12.0 * h3)
        };
        let d2 = |a: usize, b: usize, dir: usize| {
            let w2 = [-1.0, 16.0, 16.0, -1.0];
            (offs.iter().zip(w2).map(|(o, w)| w * comp(e(dir, o * h3), a, b)).sum::<f64>() - 30.0 * comp([0.0, 0.0], a, b))
                / (12.0 * h3 * h3)
        };
        let mut f_uv = 0.0;
        for (oa, wa) in offs.iter().zip(w1) {
            for (ob, wb) in offs.iter().zip(w1) {
                f_uv += wa * wb * comp([oa * h3, ob * h3], 0, 1);
            }
        }
        let f_uv = f_uv / (144.0 * h3 * h3);
        let (ee, ff, gg) = (g[0][0], g[0][1], g[1][1]);
        let (e_u, e_v, f_u, f_v, g_u, g_v) = (d1(0, 0, 0), d1(0, 0, 1), d1(0, 1, 0), d1(0, 1, 1), d1(1, 1, 0), d1(1, 1, 1));
        let (e_vv, g_uu) = (d2(0, 0, 1), d2(1, 1, 0));
        let det3 = |m: [[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let a = det3([
            [-0.5 * e_vv + f_uv - 0.5 * g_uu, 0.5 * e_u, f_u - 0.5 * e_v],
            [f_v - 0.5 * g_u, ee, ff],
            [0.5 * g_v, ff, gg],
        ]);
        let b = det3([[0.0, 0.5 * e_v, 0.5 * g_u], [0.5 * e_v, ee, ff], [0.5 * g_u, ff, gg]]);
        let k = (a - b) / (ee * gg - ff * ff).powi(2);
        let delta = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
        let mut riem = Vec::new();
        for i in 0..2 {
            for l in 0..2 {
                for j in 0..2 {
                    for kk in 0..2 {
                        riem.push(k * (delta(l, j) * g[i][kk] - delta(l, kk) * g[i][j]));
                    }
                }
            }
        }
        e_riem = e_riem.max(rel_err(&flat(&flat(&flat(&rep.riemann))), &riem));
        let ric: Vec<f64> = flat(&g).iter().map(|x| k * x).collect();
        e_ric = e_ric.max(rel_err(&flat(&rep.ricci), &ric));

        let scalar: f64 = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| rep.g_inv[i][j] * rep.ricci[i][j]).sum();
        for i in 0..2 {
            for j in 0..2 {
                e_id = e_id.max((rep.ricci[i][j] - 0.5 * scalar * rep.g[i][j]).abs());
            }
        }
    }
    let ok = e_gamma < 1e-6 && e_dgamma < 1e-6 && e_riem < 1e-6 && e_ric < 1e-6 && e_id < 1e-9;
    (
        ok,
        format!(
            "20 metrics: rel err Gamma {e_gamma:.1e}, dGamma {e_dgamma:.1e}, Riemann {e_riem:.1e}, Ricci {e_ric:.1e} (< 1e-6); |Ric - R/2 g| {e_id:.1e} < 1e-9"
        ),
    )
}

fn c4_sff() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut e_riem = 0.0f64;
    let mut e_loss = 0.0f64;
    for _ in 0..10 {
        let s = RandSurface(std::array::from_fn(|_| rng.random_range(-1.0..1.0)));
        let u = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let t = rng.random_range(0.0..1.0);
        let intrinsic = geometry_at(&GramMetric(s), &u, &t).unwrap();
        let extrinsic = second_fundamental_form(&s, &u, &t).unwrap();
        e_riem = e_riem.max(rel_err(&flat(&flat(&flat(&intrinsic.riemann))), &flat(&flat(&flat(&extrinsic.riemann)))));

        let b = 16;
        let rows: Vec<Array2<f64>> = (0..2).map(|_| Array2::from_shape_simple_fn((1, b), || rng.random_range(-1.0..1.0))).collect();
        let tau = Array2::from_shape_simple_fn((1, b), || rng.random_range(0.0..1.0));
        let ric = ricci_terms(&GramMetric(s), &rows, &tau).unwrap();
        let ric = ric.per_sample.unwrap().scale(4.0);
        let sff = sff_terms(&second_fundamental_form(&s, &rows, &tau).unwrap());
        e_loss = e_loss.max(rel_err(ric.as_slice().unwrap(), sff.as_slice().unwrap()));
    }
    (
        e_riem < 1e-8 && e_loss < 1e-6,
        format!("10 surfaces: Riemann rel err {e_riem:.1e} < 1e-8; m^2 loss_ric vs loss_sff rel err {e_loss:.1e} < 1e-6"),
    )
}

fn c5_transform() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut e_tr = 0.0f64;
    for _ in 0..10 {
        let p = Pulled { base: RandMetric::new(&mut rng), a: rng.random_range(-0.4..0.4), b: rng.random_range(-0.4..0.4) };
        let v = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let t = rng.random_range(0.0..1.0);
        let direct = geometry_at(&p, &v, &t).unwrap().ricci;
        let (u, jac) = p.map(&v);
        let base = geometry_at(&p.base, &u, &t).unwrap().ricci;
        let moved = transform_ricci(&base, &jac).unwrap();
        e_tr = e_tr.max(rel_err(&flat(&direct), &flat(&moved)));
    }
    let mut polar = 0.0f64;
    for _ in 0..50 {
        let u = [rng.random_range(0.5..3.0), rng.random_range(0.0..2.0 * PI)];
        let r = geometry_at(&Polar, &u, &0.0).unwrap();
        polar = polar.max(flat(&r.ricci).iter().fold(0.0f64, |m, x| m.max(x.abs())));
    }
    (e_tr < 1e-6 && polar < 1e-9, format!("10 charts: rel err {e_tr:.1e} < 1e-6; flat polar max |Ric| {polar:.1e} < 1e-9"))
}

fn c6_autodiff() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    // scalar primitives through the forward jet evaluator
    let mut g = Graph::new();
    let (x, y) = (g.input(0), g.input(1));
    let unary = [Prim::Exp(x), Prim::Sin(x), Prim::Cos(y), Prim::Tanh(x), Prim::Erf(y), Prim::Gelu(x), Prim::Neg(y), Prim::Powi(x, 3), Prim::Powi(y, -2)];
    for p in unary {
        let id = g.push(p);
        g.output(id);
    }
    let pos = g.push(Prim::Mul(y, y));
    let one = g.constant(1.0);
    let pos = g.push(Prim::Add(pos, one));
    for p in [Prim::Ln(pos), Prim::Sqrt(pos), Prim::Add(x, y), Prim::Sub(x, y), Prim::Mul(x, y), Prim::Div(x, pos)] {
        let id = g.push(p);
        g.output(id);
    }
    let xy = g.push(Prim::Mul(x, y));
    let th = g.push(Prim::Tanh(xy));
    let sx = g.push(Prim::Sin(x));
    let ex = g.push(Prim::Exp(sx));
    let den = g.push(Prim::Add(ex, one));
    let q = g.push(Prim::Div(th, den));
    let ef = g.push(Prim::Erf(x));
    let sq = g.push(Prim::Sqrt(pos));
    let w = g.push(Prim::Mul(sq, ef));
    let comp = g.push(Prim::Add(q, w));
    g.output(comp);

    let (mut first, mut second) = (0.0f64, 0.0f64);
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-3);
    for _ in 0..20 {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let p = [rng.random_range(0.3..1.5), sign * rng.random_range(0.3..1.5)];
        let jets = forward_eval(&g, &p, &[0, 1]).unwrap();
        let f = |q: [f64; 2]| g.eval_plain(&q);
        let h1 = 1e-5;
        let e = |i: usize, h: f64| if i == 0 { [p[0] + h, p[1]] } else { [p[0], p[1] + h] };
        for a in 0..2 {
            let (fp, fm) = (f(e(a, h1)), f(e(a, -h1)));
            for (o, jet) in jets.iter().enumerate() {
                first = first.max(rel(jet.d1_or_zero(a), (fp[o] - fm[o]) / (2.0 * h1)));
            }
            for b in 0..2 {
                // fourth-order stencil in each direction
                let h2 = 1e-3;
                let offs = [-2.0, -1.0, 1.0, 2.0];
                let w = [1.0, -8.0, 8.0, -1.0];
                let mut fd = vec![0.0; jets.len()];
                if a == b {
                    let w2 = [-1.0, 16.0, 16.0, -1.0];
                    let f0 = f(p);
                    for (o, wo) in offs.iter().zip(w2) {
                        let mut q = p;
                        q[a] += o * h2;
                        for (acc, v) in fd.iter_mut().zip(f(q)) {
                            *acc += wo * v;
                        }
                    }
                    for (acc, v) in fd.iter_mut().zip(f0) {
                        *acc = (*acc - 30.0 * v) / (12.0 * h2 * h2);
                    }
                } else {
                    for (oa, wa) in offs.iter().zip(w) {
                        for (ob, wb) in offs.iter().zip(w) {
                            let mut q = p;
                            q[a] += oa * h2;
                            q[b] += ob * h2;
                            for (acc, v) in fd.iter_mut().zip(f(q)) {
                                *acc += wa * wb * v / (144.0 * h2 * h2);
                            }
                        }
                    }
                }
                for (jet, fdv) in jets.iter().zip(&fd) {
                    second = second.max(rel(jet.d2_or_zero(a, b), *fdv));
                }
            }
        }
    }

    // reverse mode through array primitives
    let wv = Array2::from_shape_simple_fn((3, 2), || rng.random_range(-1.0..1.0));
    let xv = Array2::from_shape_simple_fn((2, 5), || rng.random_range(-1.0..1.0));
    let loss = |w: &Array2<f64>| -> (f64, Option<Array2<f64>>) {
        let tape = Tape::new();
        let wvar = tape.var(w.clone());
        let x = tape.var(xv.clone());
        let z = Tensor::matmul(&wvar, &x);
        let a = z.tanh() * z.sin() + z.act(Activation::Softplus, 0).sqrt();
        let b = Tensor::row(&a, 1).exp() / Tensor::row(&a, 0).square().add_const(1.0) + Tensor::row(&z, 2).erf().powi(3);
        let c = Tensor::stack_rows(&[b, Tensor::row(&a, 2).cos()]);
        let out = c.sum_all() + a.select_cols(&[0, 2, 4]).sum_rows().cos().sum_all() + a.act(Activation::Gelu, 0).sum_all().scale(0.3) + z.square().add_const(1.0).ln().sum_all();
        let grads = tape.gradients(&out).unwrap();
        (out.item(), grads[wvar.id()].clone())
    };
    let (_, gw) = loss(&wv);
    let gw = gw.unwrap();
    let mut reverse = 0.0f64;
    for i in 0..3 {
        for j in 0..2 {
            let h = 1e-5;
            let mut p = wv.clone();
            p[[i, j]] += h;
            let mut m = wv.clone();
            m[[i, j]] -= h;
            reverse = reverse.max(rel(gw[[i, j]], (loss(&p).0 - loss(&m).0) / (2.0 * h)));
        }
    }

    // second input derivatives of a network, and their parameter gradients
    let mut params = ParamVector::new();
    let net = Mlp::init("net", MlpSpec::new(2, &[6, 6], 1, Activation::Tanh), &mut params, &mut rng).unwrap();
    let mnet = Mlp::init("mnet", MlpSpec::new(2, &[6, 6], 1, Activation::Gelu).modified(), &mut params, &mut rng).unwrap();
    let pts = Array2::from_shape_simple_fn((2, 4), || rng.random_range(-1.0..1.0));
    let mut hess = 0.0f64;
    for n in [&net, &mnet] {
        let aw = ArrayWeights::new(&params);
        let rows: Vec<Jet<Array2<f64>>> = (0..2).map(|k| Jet::seed(Tensor::row(&pts, k), k, 2, 2)).collect();
        let y = n.forward_rows(&aw, &rows).unwrap();
        let plain = |q: &Array2<f64>| n.forward(&aw, q).unwrap();
        let h = 1e-4;
        for a in 0..2 {
            for b in 0..2 {
                let sh = |sa: f64, sb: f64| {
                    let mut q = pts.clone();
                    q.row_mut(a).mapv_inplace(|v| v + sa);
                    q.row_mut(b).mapv_inplace(|v| v + sb);
                    plain(&q)
                };
                let fd = (sh(h, h) - sh(h, -h) - sh(-h, h) + sh(-h, -h)) / (4.0 * h * h);
                let ad = y.d2_or_zero(a, b);
                for (p, q) in ad.iter().zip(fd.iter()) {
                    hess = hess.max(rel(*p, *q));
                }
            }
        }
    }
    let laplacian_sq = |pv: &ParamVector| -> (f64, Vec<f64>) {
        let tape = Tape::new();
        let bp = BoundParams::bind(&tape, pv);
        let rows: Vec<Jet<_>> = (0..2).map(|k| Jet::seed(tape.var(Tensor::row(&pts, k)), k, 2, 2)).collect();
        let y = mnet.forward_rows(&bp, &rows).unwrap();
        let lap = y.d2_or_zero(0, 0) + y.d2_or_zero(1, 1);
        let out = lap.square().sum_all() + y.d1_or_zero(1).sum_all();
        (out.item(), backward_grad(&tape, &out, &bp).unwrap())
    };
    let (_, grad) = laplacian_sq(&params);
    let mut mixed = 0.0f64;
    for i in (0..params.len()).step_by(7) {
        let h = 1e-5;
        let mut p = params.clone();
        p.values_mut()[i] += h;
        let mut m = params.clone();
        m.values_mut()[i] -= h;
        mixed = mixed.max(rel(grad[i], (laplacian_sq(&p).0 - laplacian_sq(&m).0) / (2.0 * h)));
    }
    let ok = first < 1e-6 && reverse < 1e-6 && mixed < 1e-6 && second < 1e-4 && hess < 1e-4;
    (
        ok,
        format!(
            "first order: jets {first:.1e}, reverse {reverse:.1e}, jet-reverse {mixed:.1e} (< 1e-6); second order: jets {second:.1e}, network Hessian {hess:.1e} (< 1e-4)"
        ),
    )
}

fn grid(step: f64, horizon: f64) -> Vec<f64> {
    let n = (horizon / step).round() as usize;
    (0..=n).map(|k| k as f64 * step).collect()
}

fn c7_solvers() -> Outcome {
    let Mesh::Line(bm) = PdeKind::Burgers.default_mesh() else { unreachable!() };
    let times = grid(0.01, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mass = 0.0f64;
    for _ in 0..5 {
        let (_, phi0) = sample_ic(&IcFamily::standard(FamilyId::A1), &Mesh::Line(bm), &mut rng).unwrap();
        let out = solve_burgers(&phi0, 0.01, &bm, &times).unwrap();
        let m0: f64 = phi0.iter().sum::<f64>() * bm.spacing;
        for snap in &out {
            mass = mass.max((snap.iter().sum::<f64>() * bm.spacing - m0).abs());
        }
    }
    let phi0: Vec<f64> = bm.nodes().iter().map(|x| 0.01 * (2.0 * PI * x).sin()).collect();
    let out = solve_burgers(&phi0, 0.01, &bm, &times).unwrap();
    let peak = out[100].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let burgers_decay = (peak / (0.01 * (-4.0 * PI * PI * 0.01f64).exp()) - 1.0).abs();

    let heat = |count: usize, step: f64| {
        let mesh = Mesh1D::closed(0.0, 1.0, count);
        let phi0: Vec<f64> = mesh.nodes().iter().map(|x| (2.0 * PI * x).sin()).collect();
        let out = solve_diffusion_reaction(&phi0, &vec![0.0; count], 0.01, 0.0, &mesh, &grid(step, 0.5), 1).unwrap();
        let decay = (-4.0 * PI * PI * 0.005f64).exp();
        let last = out.last().unwrap();
        let err = mesh.nodes().iter().zip(last).map(|(x, v)| (v - (2.0 * PI * x).sin() * decay).abs()).fold(0.0, f64::max);
        (err, (last[(count - 1) / 4] / decay - 1.0).abs())
    };
    let (e1, heat_decay) = heat(101, 0.01);
    let (e2, _) = heat(201, 0.005);
    let order = (e1 / e2).log2();

    let Mesh::Grid(wm) = PdeKind::Wave2d.default_mesh() else { unreachable!() };
    let mu = [("mu1".to_string(), 2.5), ("mu2".to_string(), 2.5)].into_iter().collect();
    let phi0 = IcFamily::standard(FamilyId::GaussImpulse).values(&mu, &Mesh::Grid(wm)).unwrap();
    let sol = solve_wave2d(&phi0, 1.0, &wm, &grid(0.04, 4.0), 2).unwrap();
    let drift = sol.energy.iter().map(|e| ((e - sol.energy[0]) / sol.energy[0]).abs()).fold(0.0, f64::max);

    let ok = mass < 1e-8 && burgers_decay < 0.05 && heat_decay < 0.01 && drift < 0.01 && order >= 1.8;
    (
        ok,
        format!(
            "mass drift {mass:.1e} < 1e-8; Burgers decay err {:.2}% < 5%; heat decay err {:.3}% < 1%; wave energy drift {:.3}% < 1%; order {order:.2} >= 1.8",
            100.0 * burgers_decay,
            100.0 * heat_decay,
            100.0 * drift
        ),
    )
}

// ---------------------------------------------------------------- training criteria

const DESK_ITERATIONS: usize = 10_000;

struct Split {
    train: PdeDataset,
    test: PdeDataset,
}

fn burgers_split() -> Split {
    let train = generate(&GenSpec::new(PdeKind::Burgers, FamilyId::A1, 100, 1)).unwrap();
    let mut spec = GenSpec::new(PdeKind::Burgers, FamilyId::A1, 30, 2);
    spec.nt = 101;
    Split { train, test: generate(&spec).unwrap() }
}

fn desk_config(mode: Mode) -> TrainConfig {
    let n = DESK_ITERATIONS;
    TrainConfig {
        mode,
        iterations: n,
        lr: 1e-3,
        lr_drops: vec![LrDrop { at: n * 6 / 10, lr: 3e-4 }, LrDrop { at: n * 85 / 100, lr: 1e-4 }],
        seed: 11,
        ..TrainConfig::default()
    }
}

fn tail_mean(h: &[HistoryRow], n: usize, f: impl Fn(&LossBreakdown) -> f64) -> f64 {
    let tail = &h[h.len() - n..];
    tail.iter().map(|r| f(&r.loss)).sum::<f64>() / n as f64
}

fn c8_desk(split: &Split) -> Outcome {
    let start = Instant::now();
    let out = train(&desk_config(Mode::FullRicci), &split.train, None).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let at100 = out.history[99].loss.total;
    let fin = tail_mean(&out.history, 100, |l| l.total);
    let rep = evaluate(&out.bundle, &split.test, &[0.25, 0.5], "burgers-test").unwrap();
    let (e25, e50) = (rep.times[0].mean, rep.times[1].mean);
    let ok = at100 / fin >= 10.0 && e25 < 0.15 && e50 < 0.15 && secs < 1800.0;
    (
        ok,
        format!(
            "{DESK_ITERATIONS} it in {secs:.0} s: loss {at100:.3e} (it 100) -> {fin:.3e} ({:.1}x >= 10x); rel L1 t=0.25 {e25:.4}, t=0.5 {e50:.4} (< 0.15)",
            at100 / fin
        ),
    )
}

fn c9_special(split: &Split) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    let sphere = Mode::Sphere { variant: SphereVariant::Fixed, radius: 1.0, dim: 3 };
    for (mode, c_t) in [(Mode::FixedMetric { geometry: FixedGeometry::Cigar }, 0.5), (sphere, 0.4)] {
        let cfg = TrainConfig { c_t, ..desk_config(mode) };
        let out = train(&cfg, &split.train, None).unwrap();
        let rep = evaluate(&out.bundle, &split.test, &[0.25, 0.5], "burgers-test").unwrap();
        let worst = rep.times.iter().map(|s| s.mean).fold(0.0, f64::max);
        ok &= worst < 0.25;
        parts.push(format!("{} rel L1 {worst:.4} < 0.25", cfg.mode.name()));
    }
    let cfg = TrainConfig { iterations: 1500, lr_drops: vec![], ..desk_config(Mode::FixedMetric { geometry: FixedGeometry::Torus }) };
    let out = train(&cfg, &split.train, None).unwrap();
    let first = out.history[0].loss.l_sym;
    let last = tail_mean(&out.history, 100, |l| l.l_sym);
    ok &= first / last >= 5.0;
    parts.push(format!("torus symmetry loss {first:.2e} -> {last:.2e} ({:.0}x >= 5x)", first / last));
    (ok, parts.join("; "))
}

fn c10_determinism(split: &Split) -> Outcome {
    let cfg = TrainConfig {
        iterations: 150,
        noise_u: 0.01,
        noise_manifold: 0.01,
        dropout: vec![0.1, 0.1, 0.0],
        deterministic: true,
        seed: 3,
        ..TrainConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    train(&cfg, &split.train, Some(&a)).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    pool.install(|| train(&cfg, &split.train, Some(&b)).unwrap());
    let ha = std::fs::read(a.join("history.csv")).unwrap();
    let hb = std::fs::read(b.join("history.csv")).unwrap();
    (ha == hb, format!("two runs (default pool and 1 thread): history.csv {} bytes, identical = {}", ha.len(), ha == hb))
}

fn c11_mmlp() -> Outcome {
    let spec = GenSpec::new(PdeKind::DiffusionReaction, FamilyId::A2, 100, 1);
    let ds = normalize_dataset(generate(&spec).unwrap(), NormMode::L1).unwrap();
    let iters = MMLP_ITERATIONS;
    let window = 100;
    let mut curves = Vec::new();
    for variant in [Variant::Vanilla, Variant::Modified] {
        let mut cfg = TrainConfig {
            iterations: iters,
            lr: 3e-4,
            lr_drops: vec![LrDrop { at: iters * 6 / 10, lr: 9e-5 }, LrDrop { at: iters * 85 / 100, lr: 3e-5 }],
            ..TrainConfig::default()
        };
        for n in [&mut cfg.networks.param, &mut cfg.networks.metric, &mut cfg.networks.encoder, &mut cfg.networks.decoder] {
            n.variant = variant;
        }
        let h = train(&cfg, &ds, None).unwrap().history;
        let smooth: Vec<f64> = h.windows(window).map(|w| w.iter().map(|r| r.loss.total).sum::<f64>() / window as f64).collect();
        curves.push(smooth);
    }
    let target = *curves[0].last().unwrap();
    let reach = curves[1].iter().position(|&v| v <= target).map(|k| k + window);
    let ok = reach.is_some_and(|k| k < iters);
    (
        ok,
        format!(
            "vanilla final loss {target:.3e} ({iters} it, {window}-it mean); modified reaches it at iteration {}",
            reach.map_or("never".into(), |k| k.to_string())
        ),
    )
}

const MMLP_ITERATIONS: usize = 3000;

fn c12_metric() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let truth: Vec<f64> = (0..100).map(|_| rng.random_range(-1.0..1.0)).collect();
    let pred: Vec<f64> = truth.iter().map(|x| x + rng.random_range(-0.2..0.2)).collect();
    let base = relative_l1(&pred, &truth, 0.01).unwrap();
    let mut exact = true;
    for c in [2.0, 0.5, -4.0, 1024.0, -0.125] {
        let sp: Vec<f64> = pred.iter().map(|x| c * x).collect();
        let st: Vec<f64> = truth.iter().map(|x| c * x).collect();
        exact &= relative_l1(&sp, &st, 0.01).unwrap() == base;
    }
    let twice: Vec<f64> = truth.iter().map(|x| 2.0 * x).collect();
    let one = relative_l1(&twice, &truth, 0.01).unwrap();
    let mesh = Mesh1D::periodic(0.0, 1.0, 1000);
    let wave: Vec<f64> = mesh.nodes().iter().map(|x| (2.0 * PI * x).sin()).collect();
    let shifted: Vec<f64> = wave.iter().map(|v| v + 0.1).collect();
    let ratio = relative_l1(&shifted, &wave, mesh.spacing).unwrap();
    let expected = 0.1 / (2.0 / PI);
    (
        exact && one == 1.0 && (ratio - expected).abs() < 1e-4,
        format!(
            "scale invariance exact for c in {{2, 1/2, -4, 1024, -1/8}}: {exact}; pred = 2 truth -> {one}; sin(2 pi x) + 0.1 -> {ratio:.6} (expected {expected:.6}, tol 1e-4)"
        ),
    )
}

/// `ACCEPTANCE_ONLY=3,6` runs a subset.
fn main() {
    let only: Option<Vec<usize>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |id: usize| only.as_ref().is_none_or(|o| o.contains(&id));
    let mut failures = 0;
    let mut report = |id: usize, name: &str, run: &dyn Fn() -> Outcome| {
        if !wanted(id) {
            return;
        }
        let (ok, detail) = run();
        println!("[{}] {id:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failures += 1;
        }
    };
    report(1, "cigar soliton conformance", &c1_cigar);
    report(2, "sphere flow law", &c2_sphere);
    report(3, "geometry pipeline vs finite differences", &c3_pipeline_vs_fd);
    report(4, "second fundamental form equivalence", &c4_sff);
    report(5, "coordinate-transform consistency", &c5_transform);
    report(6, "autodiff derivative checks", &c6_autodiff);
    report(7, "solver oracles", &c7_solvers);
    let split = std::sync::LazyLock::new(burgers_split);
    report(8, "desk-scale Burgers training", &|| c8_desk(&split));
    report(9, "special-case training", &|| c9_special(&split));
    report(10, "determinism", &|| c10_determinism(&split));
    report(11, "modified MLP ablation", &c11_mmlp);
    report(12, "relative L1 properties", &c12_metric);
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
