//! Relative L1 evaluation and latent point-cloud export.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ModelBundle;
use crate::pde_data::PdeDataset;
use crate::training::{bundle_config, embed_points, predict};

/// Truth norms at or below this are treated as zero.
pub const NORM_FLOOR: f64 = 1e-12;

/// `|pred - truth|_1 / |truth|_1` with node-sum quadrature of cell size `cell`.
pub fn relative_l1(pred: &[f64], truth: &[f64], cell: f64) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Dimension(format!("prediction has {} nodes, truth {}", pred.len(), truth.len())));
    }
    let norm: f64 = truth.iter().map(|x| x.abs()).sum::<f64>() * cell;
    if !(norm > NORM_FLOOR) {
        return Err(Error::UndefinedMetric(norm));
    }
    let diff: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum::<f64>() * cell;
    Ok(diff / norm)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeStat {
    pub time: f64,
    pub mean: f64,
    /// Population standard deviation over samples.
    pub std: f64,
    pub count: usize,
    /// Samples left out because their truth norm vanished.
    pub excluded: usize,
    /// Per-sample errors, in dataset order (`None` when excluded).
    pub per_sample: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: String,
    pub dataset: String,
    pub samples: usize,
    pub std_kind: String,
    pub times: Vec<TimeStat>,
}

impl EvalReport {
    /// Aligned text table, one row per time.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "mode: {}   data: {}   samples: {}", self.mode, self.dataset, self.samples);
        let _ = writeln!(out, "{:>8}  {:>12}  {:>12}  {:>6}", "time", "rel L1 mean", "pop. std", "n");
        for s in &self.times {
            let _ = writeln!(out, "{:>8.4}  {:>12.6}  {:>12.6}  {:>6}", s.time, s.mean, s.std, s.count);
        }
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.table())
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn columns(rows: &[&[f64]]) -> Array2<f64> {
    let n = rows.first().map_or(0, |r| r.len());
    Array2::from_shape_fn((n, rows.len()), |(i, j)| rows[j][i])
}

/// Mean and spread of the relative L1 error at each requested time. Samples
/// without a snapshot at `t` use their nearest one.
pub fn evaluate(bundle: &ModelBundle, ds: &PdeDataset, times: &[f64], dataset: &str) -> Result<EvalReport> {
    let cfg = bundle_config(bundle)?;
    let horizon = ds.horizon();
    let half_step = 0.5 * ds.time_step();
    if let Some(t) = times.iter().find(|&&t| !(0.0..=horizon + 1e-12).contains(&t)) {
        return Err(Error::Config(format!("evaluation time {t} outside [0, {horizon}]")));
    }
    let cell = ds.mesh.cell();
    let stats: Vec<Result<TimeStat>> = times
        .par_iter()
        .map(|&t| {
            let mut truth: Vec<&[f64]> = Vec::with_capacity(ds.samples.len());
            let mut snap_t = Vec::with_capacity(ds.samples.len());
            for (i, s) in ds.samples.iter().enumerate() {
                let (k, gap) = s.nearest(t).ok_or_else(|| Error::Config(format!("sample {i} has no snapshots")))?;
                if gap > half_step + 1e-12 {
                    log::warn!("sample {i}: no snapshot at t={t}, using t={} instead", s.times[k]);
                }
                truth.push(&s.snapshots[k]);
                snap_t.push(s.times[k]);
            }
            let phi0: Vec<&[f64]> = ds.samples.iter().map(|s| s.phi0.as_slice()).collect();
            let pred = predict(bundle, &columns(&phi0), &snap_t)?;
            let mut per_sample = Vec::with_capacity(truth.len());
            for (j, tr) in truth.iter().enumerate() {
                let p = pred.column(j).to_vec();
                per_sample.push(match relative_l1(&p, tr, cell) {
                    Ok(e) => Some(e),
                    Err(Error::UndefinedMetric(_)) => None,
                    Err(e) => return Err(e),
                });
            }
            let kept: Vec<f64> = per_sample.iter().flatten().copied().collect();
            let (mean, std) = mean_std(&kept);
            Ok(TimeStat { time: t, mean, std, count: kept.len(), excluded: per_sample.len() - kept.len(), per_sample })
        })
        .collect();
    Ok(EvalReport {
        mode: cfg.mode.name(),
        dataset: dataset.to_string(),
        samples: ds.samples.len(),
        std_kind: "population".into(),
        times: stats.into_iter().collect::<Result<_>>()?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
    Extrapolation,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
            Split::Extrapolation => "extrapolation",
        }
    }
}

impl FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            "extrapolation" => Ok(Split::Extrapolation),
            _ => Err(Error::Unknown { kind: "split", name: s.into() }),
        }
    }
}

/// Latent CSV text: one row per (sample, time) with chart coordinates,
/// manifold point and the family parameters of the sample.
pub fn latent_csv(bundle: &ModelBundle, datasets: &[(Split, &PdeDataset)], times: &[f64]) -> Result<String> {
    let keys: BTreeSet<&str> = datasets.iter().flat_map(|(_, d)| d.samples.iter().flat_map(|s| s.params.keys().map(String::as_str))).collect();
    let mut header_done = false;
    let mut out = String::new();
    for (split, ds) in datasets {
        if ds.samples.is_empty() {
            continue;
        }
        let phi0: Vec<&[f64]> = ds.samples.iter().map(|s| s.phi0.as_slice()).collect();
        let phi0 = columns(&phi0);
        for &t in times {
            let b = ds.samples.len();
            let (u, x) = embed_points(bundle, &phi0, &vec![t; b])?;
            if !header_done {
                let mut cols = vec!["split".to_string(), "sample_id".into(), "time".into()];
                cols.extend((1..=u.nrows()).map(|k| format!("u{k}")));
                cols.extend((1..=x.nrows()).map(|k| format!("x{k}")));
                cols.extend(keys.iter().map(|k| k.to_string()));
                out.push_str(&cols.join(","));
                out.push('\n');
                header_done = true;
            }
            for (j, s) in ds.samples.iter().enumerate() {
                let mut row = vec![split.name().to_string(), j.to_string(), t.to_string()];
                row.extend(u.column(j).iter().map(f64::to_string));
                row.extend(x.column(j).iter().map(f64::to_string));
                row.extend(keys.iter().map(|k| s.params.get(*k).map_or(String::new(), f64::to_string)));
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
    }
    Ok(out)
}

/// Write [`latent_csv`] to `path`; returns the number of data rows.
pub fn export_latent(bundle: &ModelBundle, datasets: &[(Split, &PdeDataset)], times: &[f64], path: &Path) -> Result<usize> {
    let text = latent_csv(bundle, datasets, times)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, &text)?;
    Ok(text.lines().count().saturating_sub(1))
}
