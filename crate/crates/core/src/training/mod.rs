//! Objective assembly and the training loop.

mod config;
mod losses;
mod noise;

use std::fmt::Write as _;
use std::f64::consts::PI;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use ndarray::{s, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

pub use config::{FixedGeometry, LateDecay, LrDrop, Mode, NetConfig, Networks, SphereVariant, TauPairing, TrainConfig};
pub use losses::{
    decoder_terms, fixed_metric_terms, metric_match_terms, nondegenerate_columns, ricci_terms, sff_terms, sor_terms,
    torus_symmetry_terms, NetEmbedding, NetMetric, RicciTerms,
};
pub use noise::{chart_factors, dropout_masks, inject_noise, manifold_offsets, NoiseKind};

use crate::autodiff::{backward_grad, BoundParams, Field, Jet, Tape, Tensor, Var};
use crate::closed_forms::{sor_curvature, sphere_radius, Cigar, Sphere, SorJet, Torus};
use crate::error::{Error, Result};
use crate::geometry::{metric_from_jacobian, second_fundamental_form, Embedding, MetricField};
use crate::nn::{AdamW, AdamWConfig, ArrayWeights, Checkpoint, ModelBundle, NetRole, RngState, Signal, Weights};
use crate::pde_data::PdeDataset;

/// Loss values of one batch (means over the batch).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossBreakdown {
    pub l_ric: f64,
    pub l_dec: f64,
    pub l_met: f64,
    pub l_sym: f64,
    pub total: f64,
    /// Samples left out of the curvature terms (singular metric or tangent plane).
    pub skipped: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistoryRow {
    pub iter: usize,
    pub loss: LossBreakdown,
    pub lr: f64,
    pub wd: f64,
}

pub const HISTORY_HEADER: &str = "iter,l_ric,l_dec,l_met,l_sym,total,lr,wd";

pub fn history_csv(rows: &[HistoryRow]) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for r in rows {
        let l = &r.loss;
        let _ = writeln!(out, "{},{},{},{},{},{},{},{}", r.iter, l.l_ric, l.l_dec, l.l_met, l.l_sym, l.total, r.lr, r.wd);
    }
    out
}

/// Fraction of a batch that may be skipped before the step is rejected.
pub const SKIP_CAP: f64 = 0.01;

/// Resolved dimensions and horizons for one configuration and dataset.
#[derive(Clone, Debug)]
pub struct Context {
    pub cfg: TrainConfig,
    /// Chart dimension.
    pub m: usize,
    /// Embedding dimension.
    pub d: usize,
    /// Snapshot length.
    pub n: usize,
    /// Largest Ricci time, `c_t * T`.
    pub tau_max: f64,
}

impl Context {
    pub fn new(cfg: &TrainConfig, n: usize, horizon: f64) -> Result<Self> {
        cfg.validate()?;
        let (m, d) = cfg.mode.dims(cfg.latent_dim);
        let tau_max = cfg.c_t * horizon;
        if let Mode::Sphere { radius, dim, .. } = cfg.mode {
            let ext = Sphere::new(radius, dim)?.extinction_time();
            if tau_max >= ext {
                return Err(Error::Config(format!(
                    "Ricci horizon {tau_max} reaches the sphere extinction time {ext}; lower c_t or raise the radius"
                )));
            }
        }
        Ok(Context { cfg: cfg.clone(), m, d, n, tau_max })
    }

    fn sphere(&self) -> Option<Sphere> {
        match self.cfg.mode {
            Mode::Sphere { radius, dim, .. } => Some(Sphere { r0: radius, d: dim }),
            _ => None,
        }
    }

    /// Side lengths of the angle box that chart coordinates are squashed into,
    /// for the sphere and torus charts.
    pub fn angle_box(&self) -> Option<Vec<f64>> {
        match self.cfg.mode {
            Mode::Sphere { .. } => {
                let mut sides = vec![PI; self.m - 1];
                sides.push(2.0 * PI);
                Some(sides)
            }
            Mode::FixedMetric { geometry: FixedGeometry::Torus } => Some(vec![2.0 * PI; self.m]),
            _ => None,
        }
    }

    /// Chart rows of `P(phi0)`: `u_k = L_k (tanh p_k + 1) / 2` on an angle box, `p_k` otherwise.
    pub fn chart_rows<T: Tensor>(&self, p: &T) -> Vec<T> {
        let rows = (0..self.m).map(|k| Tensor::row(p, k));
        match self.angle_box() {
            Some(sides) => rows.zip(sides).map(|(r, l)| r.tanh().add_const(1.0).scale(0.5 * l)).collect(),
            None => rows.collect(),
        }
    }

    /// Manifold radius used to scale manifold noise.
    fn radius_at(&self, tau: f64) -> f64 {
        self.sphere().map_or(1.0, |s| sphere_radius(s.r0, s.d, tau).unwrap_or(0.0))
    }
}

fn io_dims(ctx: &Context, role: NetRole) -> (usize, usize) {
    let (m, d) = (ctx.m, ctx.d);
    match role {
        NetRole::Param => (ctx.n, m),
        NetRole::Metric => (m + 1, m * (m + 1) / 2),
        NetRole::Encoder => (m + 1, d),
        NetRole::Decoder => (d, ctx.n),
        NetRole::Shift => (1, d),
        NetRole::Radius | NetRole::Height => (2, 1),
    }
}

/// Fresh networks for `ctx` (seeded from the config seed, stream 0).
pub fn build_bundle(ctx: &Context) -> Result<ModelBundle> {
    let cfg = &ctx.cfg;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(0);
    let mut bundle = ModelBundle::new(cfg.c_t)?;
    let mut roles = vec![NetRole::Param];
    roles.extend(cfg.mode.roles());
    roles.push(NetRole::Decoder);
    for role in roles {
        let (i, o) = io_dims(ctx, role);
        bundle.add(role, cfg.networks.get(role).spec(i, o)?, &mut rng)?;
    }
    bundle.config = serde_json::to_value(cfg)?;
    Ok(bundle)
}

/// Configuration a bundle was trained with.
pub fn bundle_config(bundle: &ModelBundle) -> Result<TrainConfig> {
    serde_json::from_value(bundle.config.clone()).map_err(|e| Error::Config(format!("checkpoint config: {e}")))
}

/// One training batch with all of its random draws.
#[derive(Clone, Debug)]
pub struct Batch {
    /// `N x B` initial data.
    pub phi0: Array2<f64>,
    /// `N x B` snapshots.
    pub target: Array2<f64>,
    pub t: Vec<f64>,
    pub tau_hat: Array2<f64>,
    pub tau_tilde: Array2<f64>,
    /// Torus translation offsets, `1 x B`.
    pub delta: Option<Array2<f64>>,
    pub chart_noise: Option<Array2<f64>>,
    pub manifold_noise: Option<Array2<f64>>,
    /// Decoder dropout masks, one per hidden layer.
    pub masks: Vec<Option<Array2<f64>>>,
}

fn row(values: &[f64]) -> Array2<f64> {
    Array2::from_shape_vec((1, values.len()), values.to_vec()).expect("row shape")
}

impl Batch {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Draw `(sample, snapshot)` pairs uniformly, then the collocation times,
    /// noise and dropout masks, in that order.
    pub fn draw(ds: &PdeDataset, ctx: &Context, rng: &mut ChaCha8Rng) -> Result<Batch> {
        let cfg = &ctx.cfg;
        let b = cfg.batch_size;
        let n = ctx.n;
        let mut phi0 = Array2::zeros((n, b));
        let mut target = Array2::zeros((n, b));
        let mut t = Vec::with_capacity(b);
        for j in 0..b {
            let s = &ds.samples[rng.random_range(0..ds.samples.len())];
            let k = rng.random_range(0..s.times.len());
            phi0.column_mut(j).assign(&ndarray::ArrayView1::from(&s.phi0));
            target.column_mut(j).assign(&ndarray::ArrayView1::from(&s.snapshots[k]));
            t.push(s.times[k]);
        }
        let tau_hat: Vec<f64> = t.iter().map(|x| cfg.c_t * x).collect();
        let tau_tilde = match cfg.tau_pairing {
            TauPairing::Identity => tau_hat.clone(),
            TauPairing::Uniform => (0..b).map(|_| rng.random::<f64>() * ctx.tau_max).collect(),
        };
        let delta = matches!(cfg.mode, Mode::FixedMetric { geometry: FixedGeometry::Torus })
            .then(|| Array2::from_shape_simple_fn((1, b), || rng.random::<f64>() * 2.0 * PI));
        let chart_noise = chart_factors((ctx.m, b), cfg.noise_u, rng);
        let radii: Vec<f64> = tau_hat.iter().map(|&x| ctx.radius_at(x)).collect();
        let manifold_noise = manifold_offsets(ctx.d, &radii, cfg.noise_manifold, rng);
        let masks = dropout_masks(&cfg.networks.decoder.widths, &cfg.dropout, b, rng)?;
        Ok(Batch { phi0, target, t, tau_hat: row(&tau_hat), tau_tilde: row(&tau_tilde), delta, chart_noise, manifold_noise, masks })
    }

    /// Columns `r` of every array.
    pub fn slice(&self, r: Range<usize>) -> Batch {
        let cols = |a: &Array2<f64>| a.slice(s![.., r.clone()]).to_owned();
        Batch {
            phi0: cols(&self.phi0),
            target: cols(&self.target),
            t: self.t[r.clone()].to_vec(),
            tau_hat: cols(&self.tau_hat),
            tau_tilde: cols(&self.tau_tilde),
            delta: self.delta.as_ref().map(cols),
            chart_noise: self.chart_noise.as_ref().map(cols),
            manifold_noise: self.manifold_noise.as_ref().map(cols),
            masks: self.masks.iter().map(|m| m.as_ref().map(cols)).collect(),
        }
    }
}

struct ChunkOut {
    sums: [f64; 4],
    skipped: usize,
    grad: Vec<f64>,
}

fn select_rows(rows: &[Var], kept: &[usize], b: usize) -> Vec<Var> {
    if kept.len() == b {
        rows.to_vec()
    } else {
        rows.iter().map(|r| r.select_cols(kept)).collect()
    }
}

/// Decoder input for the current mode: a point of the embedded manifold per column.
fn manifold_point<T: Tensor, W: Weights<T>>(ctx: &Context, bundle: &ModelBundle, w: &W, u: &[T], tau: &T) -> Result<Vec<T>> {
    Ok(match ctx.cfg.mode {
        Mode::FullRicci | Mode::FixedMetric { .. } | Mode::SffResidual | Mode::Sphere { variant: SphereVariant::MetricMatch, .. } => {
            NetEmbedding::new(bundle.net(NetRole::Encoder)?, w).eval(u, tau)
        }
        Mode::Sphere { variant, .. } => {
            let sphere = ctx.sphere().expect("sphere mode");
            let mut x = Embedding::eval(&sphere, u, tau);
            if variant == SphereVariant::Shift {
                let sh = bundle.net(NetRole::Shift)?.forward_rows(w, std::slice::from_ref(tau))?;
                for (k, xk) in x.iter_mut().enumerate() {
                    *xk = xk.clone() + Signal::<T>::output(&sh, k);
                }
            }
            x
        }
        Mode::SurfaceOfRevolution => {
            let rows = [u[0].clone(), tau.clone()];
            let r = bundle.net(NetRole::Radius)?.forward_rows(w, &rows)?.softplus();
            let z = bundle.net(NetRole::Height)?.forward_rows(w, &rows)?;
            vec![r.clone() * u[1].cos(), r * u[1].sin(), z]
        }
    })
}

fn chunk_objective(ctx: &Context, bundle: &ModelBundle, plain: &ArrayWeights, batch: &Batch, total_b: usize) -> Result<ChunkOut> {
    let cfg = &ctx.cfg;
    let b = batch.len();
    let tape = Tape::new();
    let bp = BoundParams::bind(&tape, &bundle.params);
    let phi0 = tape.var(batch.phi0.clone());
    let target = tape.var(batch.target.clone());
    let tau_hat = tape.var(batch.tau_hat.clone());
    let tau_tilde = tape.var(batch.tau_tilde.clone());

    let u = bundle.net(NetRole::Param)?.forward(&bp, &phi0)?;
    let urows = ctx.chart_rows(&u);
    let noisy: Vec<Var> = match &batch.chart_noise {
        Some(f) => urows.iter().enumerate().map(|(k, r)| r.clone() * tape.var(f.slice(s![k..k + 1, ..]).to_owned())).collect(),
        None => urows.clone(),
    };
    let xs = manifold_point(ctx, bundle, &bp, &noisy, &tau_hat)?;
    let mut x = Var::stack_rows(&xs);
    if let Some(noise) = &batch.manifold_noise {
        x = x + tape.var(noise.clone());
    }
    let masks: Vec<Option<Var>> = batch.masks.iter().map(|m| m.as_ref().map(|a| tape.var(a.clone()))).collect();
    let pred = bundle.net(NetRole::Decoder)?.forward_masked(&bp, &x, Some(&masks))?;
    let dec = decoder_terms(&pred, &target)?.sum_all();

    let mut ric: Option<Var> = None;
    let mut met: Option<Var> = None;
    let mut sym: Option<Var> = None;
    let mut skipped = 0;
    match cfg.mode {
        Mode::FullRicci => {
            let metric = NetMetric::new(bundle.net(NetRole::Metric)?, &bp)?;
            let rt = ricci_terms(&metric, &urows, &tau_tilde)?;
            skipped = b - rt.kept.len();
            if let Some(per) = rt.per_sample {
                ric = Some(per.sum_all());
                let enc = NetEmbedding::new(bundle.net(NetRole::Encoder)?, &bp);
                let us = select_rows(&urows, &rt.kept, b);
                let ts = select_rows(std::slice::from_ref(&tau_tilde), &rt.kept, b).remove(0);
                let je = metric_from_jacobian(&enc, &us, &ts)?;
                met = Some(metric_match_terms(&rt.g, &je).sum_all());
            }
        }
        Mode::FixedMetric { geometry } => {
            let enc = NetEmbedding::new(bundle.net(NetRole::Encoder)?, &bp);
            let je = metric_from_jacobian(&enc, &urows, &tau_hat)?;
            let target_g = match geometry {
                FixedGeometry::Cigar => Cigar.eval(&urows, &tau_hat),
                FixedGeometry::Torus => Torus::default().eval(&urows, &tau_hat),
            };
            met = Some(fixed_metric_terms(&target_g, &je).sum_all());
            if let Some(delta) = &batch.delta {
                sym = Some(torus_symmetry_terms(&enc, &urows, &tau_hat, &tape.var(delta.clone()))?.sum_all());
            }
        }
        Mode::Sphere { variant, .. } => {
            if variant == SphereVariant::MetricMatch {
                let sphere = ctx.sphere().expect("sphere mode");
                let enc = NetEmbedding::new(bundle.net(NetRole::Encoder)?, &bp);
                let je = metric_from_jacobian(&enc, &urows, &tau_hat)?;
                let target_g = MetricField::eval(&sphere, &urows, &tau_hat);
                met = Some(fixed_metric_terms(&target_g, &je).sum_all());
            }
        }
        Mode::SurfaceOfRevolution => {
            let s = Jet::seed(urows[0].clone(), 0, 2, 2);
            let tj = Jet::seed(tau_tilde.clone(), 1, 2, 2);
            let rows = [s, tj];
            let r = bundle.net(NetRole::Radius)?.forward_rows(&bp, &rows)?.softplus();
            let z = bundle.net(NetRole::Height)?.forward_rows(&bp, &rows)?;
            let curv = sor_curvature(&SorJet::from_jets(&r, &z))?;
            ric = Some(sor_terms(&curv).sum_all());
        }
        Mode::SffResidual => {
            let enc_plain = NetEmbedding::new(bundle.net(NetRole::Encoder)?, plain);
            let uvals: Vec<Array2<f64>> = urows.iter().map(|r| r.value().clone()).collect();
            let kept = nondegenerate_columns(&enc_plain, &uvals, &batch.tau_tilde)?;
            skipped = b - kept.len();
            if !kept.is_empty() {
                let enc = NetEmbedding::new(bundle.net(NetRole::Encoder)?, &bp);
                let us = select_rows(&urows, &kept, b);
                let ts = select_rows(std::slice::from_ref(&tau_tilde), &kept, b).remove(0);
                let rep = second_fundamental_form(&enc, &us, &ts)?;
                ric = Some(sff_terms(&rep).sum_all());
            }
        }
    }

    let mut total = dec.scale(cfg.lambda_dec);
    for (term, w) in [(&ric, 1.0), (&met, cfg.lambda_met), (&sym, cfg.lambda_sym)] {
        if let Some(v) = term {
            total = total + v.scale(w);
        }
    }
    let total = total.scale(1.0 / total_b as f64);
    let grad = backward_grad(&tape, &total, &bp)?;
    let item = |v: &Option<Var>| v.as_ref().map_or(0.0, Var::item);
    Ok(ChunkOut { sums: [item(&ric), dec.item(), item(&met), item(&sym)], skipped, grad })
}

fn chunk_ranges(b: usize, chunks: usize) -> Vec<Range<usize>> {
    let chunks = chunks.min(b).max(1);
    let base = b / chunks;
    let extra = b % chunks;
    let mut start = 0;
    (0..chunks)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

/// Batch-mean losses and the gradient of the total with respect to every
/// parameter. Chunks run in parallel and are reduced in a fixed order, so the
/// result does not depend on the number of threads.
pub fn objective(ctx: &Context, bundle: &ModelBundle, batch: &Batch) -> Result<(LossBreakdown, Vec<f64>)> {
    let b = batch.len();
    let plain = ArrayWeights::new(&bundle.params);
    let ranges = chunk_ranges(b, ctx.cfg.chunks);
    let outs: Vec<Result<ChunkOut>> = ranges
        .par_iter()
        .map(|r| chunk_objective(ctx, bundle, &plain, &batch.slice(r.clone()), b))
        .collect();
    let mut sums = [0.0; 4];
    let mut skipped = 0;
    let mut grad = vec![0.0; bundle.params.len()];
    for out in outs {
        let out = out?;
        for (s, v) in sums.iter_mut().zip(out.sums) {
            *s += v;
        }
        skipped += out.skipped;
        for (g, v) in grad.iter_mut().zip(&out.grad) {
            *g += v;
        }
    }
    let cap = (SKIP_CAP * b as f64).ceil() as usize;
    if skipped > cap {
        return Err(Error::SkipCap { skipped, batch: b, cap });
    }
    if skipped > 0 {
        log::debug!("skipped {skipped} of {b} samples in the curvature terms");
    }
    let mean = |x: f64| x / b as f64;
    let cfg = &ctx.cfg;
    let (l_ric, l_dec, l_met, l_sym) = (mean(sums[0]), mean(sums[1]), mean(sums[2]), mean(sums[3]));
    let total = l_ric + cfg.lambda_dec * l_dec + cfg.lambda_met * l_met + cfg.lambda_sym * l_sym;
    Ok((LossBreakdown { l_ric, l_dec, l_met, l_sym, total, skipped }, grad))
}

fn per_parameter_decay(cfg: &TrainConfig, bundle: &ModelBundle, iter: usize) -> Vec<f64> {
    let mut rates = vec![0.0; bundle.params.len()];
    for block in bundle.params.layout() {
        let role = bundle.nets.keys().find(|r| r.name() == block.network);
        let wd = role.map_or(cfg.base_wd_at(iter), |&r| cfg.wd_at(r, iter));
        rates[block.offset..block.offset + block.rows * block.cols].iter_mut().for_each(|x| *x = wd);
    }
    rates
}

pub fn config_hash(cfg: &TrainConfig) -> Result<String> {
    let text = serde_json::to_string(cfg)?;
    let digest = Sha256::digest(text.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

pub struct TrainOutcome {
    pub bundle: ModelBundle,
    pub history: Vec<HistoryRow>,
}

/// Run the training loop. With `out`, writes `history.csv`, periodic
/// `ckpt_<iter>` checkpoints and `final`.
pub fn train(cfg: &TrainConfig, ds: &PdeDataset, out: Option<&Path>) -> Result<TrainOutcome> {
    let ctx = Context::new(cfg, ds.mesh.len(), ds.horizon())?;
    let bundle = build_bundle(&ctx)?;
    train_from(&ctx, ds, bundle, out)
}

/// Continue training `bundle` under `ctx`.
pub fn train_from(ctx: &Context, ds: &PdeDataset, mut bundle: ModelBundle, out: Option<&Path>) -> Result<TrainOutcome> {
    let cfg = &ctx.cfg;
    if ds.samples.is_empty() || ds.samples.iter().any(|s| s.times.is_empty()) {
        return Err(Error::Config("dataset has no snapshots to train on".into()));
    }
    if ds.mesh.len() != ctx.n {
        return Err(Error::Dimension(format!("dataset mesh has {} nodes, model expects {}", ds.mesh.len(), ctx.n)));
    }
    let hash = config_hash(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let adam = AdamWConfig {
        lr: cfg.lr,
        beta1: cfg.beta1,
        beta2: cfg.beta2,
        eps: cfg.eps,
        weight_decay: cfg.weight_decay,
        clip: cfg.clip,
    };
    let mut opt = AdamW::new(adam, bundle.params.len());
    let mut history = Vec::with_capacity(cfg.iterations);
    let mut last_good: Option<PathBuf> = None;
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("config.json"), serde_json::to_string_pretty(cfg)? + "\n")?;
    }
    let save = |bundle: &ModelBundle, step: usize, rng: &ChaCha8Rng, name: &str| -> Result<Option<PathBuf>> {
        match out {
            Some(dir) => {
                let prefix = dir.join(name);
                let ck = Checkpoint { bundle: bundle.clone(), step: step as u64, rng: Some(RngState::capture(rng)), config_hash: hash.clone() };
                ck.save(&prefix)?;
                Ok(Some(prefix))
            }
            None => Ok(None),
        }
    };
    let flush = |history: &[HistoryRow]| -> Result<()> {
        if let Some(dir) = out {
            fs::write(dir.join("history.csv"), history_csv(history))?;
        }
        Ok(())
    };
    for iter in 1..=cfg.iterations {
        let batch = Batch::draw(ds, ctx, &mut rng)?;
        let (loss, grad) = objective(ctx, &bundle, &batch)?;
        if !loss.total.is_finite() {
            flush(&history)?;
            return Err(Error::Diverged { iter, checkpoint: last_good });
        }
        let lr = cfg.lr_at(iter);
        opt.config.lr = lr;
        if iter == 1 || cfg.late_weight_decay.is_some_and(|l| l.from == iter) {
            opt.decay = Some(per_parameter_decay(cfg, &bundle, iter));
        }
        if let Err(e) = opt.step(&mut bundle.params, &grad) {
            flush(&history)?;
            return match e {
                Error::NonFiniteGradient(label) => {
                    log::warn!("non-finite gradient in {label} at iteration {iter}");
                    Err(Error::Diverged { iter, checkpoint: last_good })
                }
                other => Err(other),
            };
        }
        history.push(HistoryRow { iter, loss, lr, wd: cfg.base_wd_at(iter) });
        if cfg.checkpoint_every > 0 && iter % cfg.checkpoint_every == 0 {
            if let Some(p) = save(&bundle, iter, &rng, &format!("ckpt_{iter:06}"))? {
                last_good = Some(p);
            }
        }
    }
    save(&bundle, cfg.iterations, &rng, "final")?;
    flush(&history)?;
    Ok(TrainOutcome { bundle, history })
}

/// Chart coordinates `u` (`m x B`) and manifold points (`d x B`) for initial
/// data `phi0` (`N x B`) at physical times `t`, without noise.
pub fn embed_points(bundle: &ModelBundle, phi0: &Array2<f64>, t: &[f64]) -> Result<(Array2<f64>, Array2<f64>)> {
    let cfg = bundle_config(bundle)?;
    let n = phi0.nrows();
    let ctx = Context::new(&cfg, n, 0.0)?;
    if t.len() != phi0.ncols() {
        return Err(Error::Dimension(format!("{} times for {} initial conditions", t.len(), phi0.ncols())));
    }
    let w = ArrayWeights::new(&bundle.params);
    let p = bundle.net(NetRole::Param)?.forward(&w, phi0)?;
    let rows = ctx.chart_rows(&p);
    let tau = row(&t.iter().map(|x| cfg.c_t * x).collect::<Vec<_>>());
    let xs = manifold_point(&ctx, bundle, &w, &rows, &tau)?;
    let b = phi0.ncols();
    let xs: Vec<Array2<f64>> = xs.into_iter().map(|x| if x.ncols() == b { x } else { x.broadcast((1, b)).unwrap().to_owned() }).collect();
    Ok((Array2::stack_rows(&rows), Array2::stack_rows(&xs)))
}

/// Decoded prediction (`N x B`).
pub fn predict(bundle: &ModelBundle, phi0: &Array2<f64>, t: &[f64]) -> Result<Array2<f64>> {
    let (_, x) = embed_points(bundle, phi0, t)?;
    let w = ArrayWeights::new(&bundle.params);
    bundle.net(NetRole::Decoder)?.forward(&w, &x)
}
