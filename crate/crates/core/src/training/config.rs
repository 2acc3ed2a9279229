use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{parse_activation, MlpSpec, NetRole, Variant};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedGeometry {
    Cigar,
    Torus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SphereVariant {
    /// Closed-form embedding centred at the origin.
    Fixed,
    /// Closed-form embedding displaced by a learned `S(tau)`.
    Shift,
    /// Learned encoder matched to the sphere metric.
    MetricMatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mode {
    FullRicci,
    FixedMetric {
        geometry: FixedGeometry,
    },
    Sphere {
        #[serde(default = "default_sphere_variant")]
        variant: SphereVariant,
        #[serde(default = "one")]
        radius: f64,
        /// Ambient dimension `d`; the chart has `d - 1` coordinates.
        #[serde(default = "three")]
        dim: usize,
    },
    SurfaceOfRevolution,
    SffResidual,
}

fn default_sphere_variant() -> SphereVariant {
    SphereVariant::Fixed
}
fn one() -> f64 {
    1.0
}
fn three() -> usize {
    3
}

impl Default for Mode {
    fn default() -> Self {
        Mode::FullRicci
    }
}

impl Mode {
    pub fn name(&self) -> String {
        match self {
            Mode::FullRicci => "full_ricci".into(),
            Mode::FixedMetric { geometry: FixedGeometry::Cigar } => "fixed_metric:cigar".into(),
            Mode::FixedMetric { geometry: FixedGeometry::Torus } => "fixed_metric:torus".into(),
            Mode::Sphere { variant, .. } => format!(
                "sphere:{}",
                match variant {
                    SphereVariant::Fixed => "fixed",
                    SphereVariant::Shift => "shift",
                    SphereVariant::MetricMatch => "metric_match",
                }
            ),
            Mode::SurfaceOfRevolution => "surface_of_revolution".into(),
            Mode::SffResidual => "sff_residual".into(),
        }
    }

    /// `(chart dimension m, embedding dimension d)`.
    pub fn dims(&self, latent_dim: usize) -> (usize, usize) {
        match self {
            Mode::FullRicci => (latent_dim, latent_dim + 1),
            Mode::Sphere { dim, .. } => (dim - 1, *dim),
            _ => (2, 3),
        }
    }

    /// Networks the mode trains besides `P` and `D`.
    pub fn roles(&self) -> Vec<NetRole> {
        match self {
            Mode::FullRicci => vec![NetRole::Metric, NetRole::Encoder],
            Mode::FixedMetric { .. } | Mode::SffResidual => vec![NetRole::Encoder],
            Mode::Sphere { variant: SphereVariant::Fixed, .. } => vec![],
            Mode::Sphere { variant: SphereVariant::Shift, .. } => vec![NetRole::Shift],
            Mode::Sphere { variant: SphereVariant::MetricMatch, .. } => vec![NetRole::Encoder],
            Mode::SurfaceOfRevolution => vec![NetRole::Radius, NetRole::Height],
        }
    }
}

impl FromStr for Mode {
    type Err = Error;
    /// `full_ricci`, `fixed_metric:cigar`, `fixed_metric:torus`,
    /// `sphere[:fixed|:shift|:metric_match]`, `surface_of_revolution`, `sff_residual`.
    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::Unknown { kind: "training mode", name: s.into() };
        let (head, tail) = s.split_once(':').map_or((s, None), |(a, b)| (a, Some(b)));
        Ok(match (head, tail) {
            ("full_ricci", None) => Mode::FullRicci,
            ("fixed_metric", Some("cigar")) => Mode::FixedMetric { geometry: FixedGeometry::Cigar },
            ("fixed_metric", Some("torus")) => Mode::FixedMetric { geometry: FixedGeometry::Torus },
            ("sphere", v) => Mode::Sphere {
                variant: match v {
                    None | Some("fixed") => SphereVariant::Fixed,
                    Some("shift") => SphereVariant::Shift,
                    Some("metric_match") => SphereVariant::MetricMatch,
                    _ => return Err(unknown()),
                },
                radius: 1.0,
                dim: 3,
            },
            ("surface_of_revolution", None) => Mode::SurfaceOfRevolution,
            ("sff_residual", None) => Mode::SffResidual,
            _ => return Err(unknown()),
        })
    }
}

/// How the Ricci-flow collocation time relates to the decoder time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauPairing {
    /// `tau_tilde = tau_hat`.
    #[default]
    Identity,
    /// `tau_tilde ~ U[0, tau']` independently.
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetConfig {
    pub widths: Vec<usize>,
    #[serde(default = "tanh")]
    pub activation: String,
    #[serde(default = "vanilla")]
    pub variant: Variant,
}

fn tanh() -> String {
    "tanh".into()
}
fn vanilla() -> Variant {
    Variant::Vanilla
}

impl NetConfig {
    pub fn new(widths: &[usize]) -> Self {
        NetConfig { widths: widths.to_vec(), activation: tanh(), variant: Variant::Vanilla }
    }

    pub fn spec(&self, input_dim: usize, output_dim: usize) -> Result<MlpSpec> {
        let spec = MlpSpec {
            widths: self.widths.clone(),
            activation: parse_activation(&self.activation)?,
            variant: self.variant,
            input_dim,
            output_dim,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Networks {
    pub param: NetConfig,
    pub metric: NetConfig,
    pub encoder: NetConfig,
    pub decoder: NetConfig,
    pub shift: NetConfig,
    pub radius: NetConfig,
    pub height: NetConfig,
}

impl Default for Networks {
    fn default() -> Self {
        let main = NetConfig::new(&[64, 64, 64]);
        let small = NetConfig::new(&[32, 32]);
        Networks {
            param: main.clone(),
            metric: small.clone(),
            encoder: small.clone(),
            decoder: main,
            shift: NetConfig::new(&[16]),
            radius: small.clone(),
            height: small,
        }
    }
}

impl Networks {
    pub fn get(&self, role: NetRole) -> &NetConfig {
        match role {
            NetRole::Param => &self.param,
            NetRole::Metric => &self.metric,
            NetRole::Encoder => &self.encoder,
            NetRole::Decoder => &self.decoder,
            NetRole::Shift => &self.shift,
            NetRole::Radius => &self.radius,
            NetRole::Height => &self.height,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrDrop {
    /// First iteration (1-based) using `lr`.
    pub at: usize,
    pub lr: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LateDecay {
    pub from: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub mode: Mode,
    pub latent_dim: usize,
    pub lambda_dec: f64,
    pub lambda_met: f64,
    pub lambda_sym: f64,
    /// `tau = c_t * t`.
    pub c_t: f64,
    pub tau_pairing: TauPairing,
    pub batch_size: usize,
    pub iterations: usize,
    /// Fixed batch partition evaluated in parallel; results are reduced in order.
    pub chunks: usize,
    pub lr: f64,
    pub lr_drops: Vec<LrDrop>,
    pub weight_decay: f64,
    /// Per-network overrides keyed by role name (`param`, `metric`, ...).
    pub weight_decay_by_net: BTreeMap<String, f64>,
    pub late_weight_decay: Option<LateDecay>,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub clip: f64,
    /// `C_xi_u`
    pub noise_u: f64,
    /// `C_xi_M`
    pub noise_manifold: f64,
    /// Decoder dropout rate per hidden layer (empty: none).
    pub dropout: Vec<f64>,
    pub seed: u64,
    pub deterministic: bool,
    /// Save `ckpt_<iter>` every this many iterations (0: only the final one).
    pub checkpoint_every: usize,
    pub networks: Networks,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: Mode::FullRicci,
            latent_dim: 2,
            lambda_dec: 1.0,
            lambda_met: 1.0,
            lambda_sym: 1.0,
            c_t: 0.5,
            tau_pairing: TauPairing::Identity,
            batch_size: 64,
            iterations: 1000,
            chunks: 4,
            lr: 1e-4,
            lr_drops: Vec::new(),
            weight_decay: 1e-4,
            weight_decay_by_net: BTreeMap::new(),
            late_weight_decay: None,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            clip: 1.0,
            noise_u: 0.0,
            noise_manifold: 0.0,
            dropout: Vec::new(),
            seed: 0,
            deterministic: true,
            checkpoint_every: 0,
            networks: Networks::default(),
        }
    }
}

impl TrainConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: TrainConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        for (name, v) in [("lambda_dec", self.lambda_dec), ("lambda_met", self.lambda_met), ("lambda_sym", self.lambda_sym)] {
            if !(v >= 0.0) {
                return bad(format!("{name} must be nonnegative, got {v}"));
            }
        }
        if !(self.c_t > 0.0) {
            return bad(format!("c_t must be positive, got {}", self.c_t));
        }
        if self.batch_size == 0 || self.chunks == 0 {
            return bad("batch_size and chunks must be positive".into());
        }
        if self.latent_dim == 0 {
            return bad("latent_dim must be positive".into());
        }
        if !(self.lr > 0.0) || self.lr_drops.iter().any(|d| !(d.lr > 0.0)) {
            return bad("learning rates must be positive".into());
        }
        if !(self.clip > 0.0) {
            return bad(format!("clip must be positive, got {}", self.clip));
        }
        if self.noise_u < 0.0 || self.noise_manifold < 0.0 {
            return bad("noise constants must be nonnegative".into());
        }
        for key in self.weight_decay_by_net.keys() {
            if ![NetRole::Param, NetRole::Metric, NetRole::Encoder, NetRole::Decoder, NetRole::Shift, NetRole::Radius, NetRole::Height]
                .iter()
                .any(|r| r.name() == key)
            {
                return Err(Error::Unknown { kind: "network", name: key.clone() });
            }
        }
        if !self.dropout.is_empty() && self.dropout.len() != self.networks.decoder.widths.len() {
            return bad(format!(
                "{} dropout rates for {} decoder layers",
                self.dropout.len(),
                self.networks.decoder.widths.len()
            ));
        }
        if let Mode::Sphere { radius, dim, .. } = self.mode {
            if dim < 3 || !(radius > 0.0) {
                return bad(format!("sphere needs dim >= 3 and radius > 0, got dim={dim}, radius={radius}"));
            }
        }
        if matches!(self.mode, Mode::FullRicci) && self.latent_dim > 4 {
            return bad("full_ricci supports latent_dim <= 4".into());
        }
        Ok(())
    }

    /// Learning rate in effect at 1-based iteration `iter`.
    pub fn lr_at(&self, iter: usize) -> f64 {
        self.lr_drops.iter().filter(|d| d.at <= iter).max_by_key(|d| d.at).map_or(self.lr, |d| d.lr)
    }

    /// Weight decay for `role` at `iter`.
    pub fn wd_at(&self, role: NetRole, iter: usize) -> f64 {
        match self.late_weight_decay {
            Some(l) if iter >= l.from => l.value,
            _ => self.weight_decay_by_net.get(role.name()).copied().unwrap_or(self.weight_decay),
        }
    }

    /// Base weight decay at `iter` (the value logged).
    pub fn base_wd_at(&self, iter: usize) -> f64 {
        match self.late_weight_decay {
            Some(l) if iter >= l.from => l.value,
            _ => self.weight_decay,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(TrainConfig::from_json(r#"{"iterations": 5, "bogus": 1}"#), Err(Error::Config(_))));
        let cfg = TrainConfig::from_json(r#"{"mode": {"kind": "fixed_metric", "geometry": "torus"}}"#).unwrap();
        assert_eq!(cfg.mode, Mode::FixedMetric { geometry: FixedGeometry::Torus });
        assert_eq!(cfg.batch_size, 64);
    }

    #[test]
    fn mode_strings_round_trip() {
        for s in ["full_ricci", "fixed_metric:cigar", "fixed_metric:torus", "sphere:shift", "surface_of_revolution", "sff_residual"] {
            assert_eq!(s.parse::<Mode>().unwrap().name(), s);
        }
        assert!("fixed_metric:klein".parse::<Mode>().is_err());
    }

    #[test]
    fn schedules() {
        let mut cfg = TrainConfig::default();
        cfg.lr_drops = vec![LrDrop { at: 10, lr: 5e-5 }];
        cfg.late_weight_decay = Some(LateDecay { from: 20, value: 1e-6 });
        cfg.weight_decay_by_net.insert("param".into(), 0.0);
        assert_eq!(cfg.lr_at(9), 1e-4);
        assert_eq!(cfg.lr_at(10), 5e-5);
        assert_eq!(cfg.wd_at(NetRole::Param, 5), 0.0);
        assert_eq!(cfg.wd_at(NetRole::Decoder, 5), 1e-4);
        assert_eq!(cfg.wd_at(NetRole::Param, 20), 1e-6);
    }
}
