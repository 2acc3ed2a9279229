use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Mlp, MlpSpec};
use crate::autodiff::{BlockInfo, ParamVector};
use crate::error::{Error, Result};

const MAGIC: &str = "RFAE-CKPT";
const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetRole {
    /// `P`: initial data to chart coordinates.
    Param,
    /// `g`: metric field on chart x time.
    Metric,
    /// `E`: chart x time to embedding space.
    Encoder,
    /// `D`: embedding space to solution snapshot.
    Decoder,
    /// `S`: time-dependent displacement of a sphere.
    Shift,
    /// Surface-of-revolution radius profile.
    Radius,
    /// Surface-of-revolution height profile.
    Height,
}

impl NetRole {
    pub fn name(self) -> &'static str {
        match self {
            NetRole::Param => "param",
            NetRole::Metric => "metric",
            NetRole::Encoder => "encoder",
            NetRole::Decoder => "decoder",
            NetRole::Shift => "shift",
            NetRole::Radius => "radius",
            NetRole::Height => "height",
        }
    }
}

/// All networks of a model sharing one flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelBundle {
    pub params: ParamVector,
    pub nets: BTreeMap<NetRole, Mlp>,
    /// Ricci-time scale: `tau = c_t * t`.
    pub c_t: f64,
    /// Training configuration the bundle was built from (opaque here).
    pub config: serde_json::Value,
}

impl ModelBundle {
    pub fn new(c_t: f64) -> Result<Self> {
        if !(c_t > 0.0) {
            return Err(Error::Config(format!("time scale must be positive, got {c_t}")));
        }
        Ok(ModelBundle { params: ParamVector::new(), nets: BTreeMap::new(), c_t, config: serde_json::Value::Null })
    }

    pub fn add(&mut self, role: NetRole, spec: MlpSpec, rng: &mut impl rand::Rng) -> Result<()> {
        let net = Mlp::init(role.name(), spec, &mut self.params, rng)?;
        self.nets.insert(role, net);
        Ok(())
    }

    pub fn net(&self, role: NetRole) -> Result<&Mlp> {
        self.nets
            .get(&role)
            .ok_or_else(|| Error::Config(format!("model has no `{}` network", role.name())))
    }

    pub fn has(&self, role: NetRole) -> bool {
        self.nets.contains_key(&role)
    }
}

/// Serializable snapshot of a ChaCha stream position.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: String,
    pub stream: u64,
    pub word_pos: String,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        let seed = rng.get_seed().iter().map(|b| format!("{b:02x}")).collect();
        RngState { seed, stream: rng.get_stream(), word_pos: rng.get_word_pos().to_string() }
    }

    pub fn restore(&self) -> Result<ChaCha8Rng> {
        use rand::SeedableRng;
        let bad = |m: &str| Error::Config(format!("invalid rng state: {m}"));
        if self.seed.len() != 64 {
            return Err(bad("seed must be 64 hex digits"));
        }
        let mut seed = [0u8; 32];
        for (i, b) in seed.iter_mut().enumerate() {
            *b = u8::from_str_radix(&self.seed[2 * i..2 * i + 2], 16).map_err(|_| bad("seed is not hex"))?;
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos.parse().map_err(|_| bad("word position"))?);
        Ok(rng)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
    step: u64,
    c_t: f64,
    config_hash: String,
    rng: Option<RngState>,
    networks: BTreeMap<NetRole, MlpSpec>,
    layout: Vec<BlockInfo>,
    payload_values: usize,
    config: serde_json::Value,
}

/// A bundle plus the training position it was saved at.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub bundle: ModelBundle,
    pub step: u64,
    pub rng: Option<RngState>,
    pub config_hash: String,
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

impl Checkpoint {
    /// Files written: `<prefix>.json` (header) and `<prefix>.f64` (payload).
    pub fn paths(prefix: &Path) -> (PathBuf, PathBuf) {
        (with_ext(prefix, ".json"), with_ext(prefix, ".f64"))
    }

    pub fn save(&self, prefix: &Path) -> Result<()> {
        let (hpath, ppath) = Self::paths(prefix);
        if let Some(dir) = hpath.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        let b = &self.bundle;
        let header = Header {
            format: MAGIC.into(),
            version: VERSION,
            step: self.step,
            c_t: b.c_t,
            config_hash: self.config_hash.clone(),
            rng: self.rng.clone(),
            networks: b.nets.iter().map(|(r, n)| (*r, n.spec.clone())).collect(),
            layout: b.params.layout().to_vec(),
            payload_values: b.params.len(),
            config: b.config.clone(),
        };
        fs::write(&hpath, serde_json::to_string_pretty(&header)? + "\n")?;
        let bytes: Vec<u8> = b.params.values().iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(&ppath, bytes)?;
        Ok(())
    }

    pub fn load(prefix: &Path) -> Result<Self> {
        let (hpath, ppath) = Self::paths(prefix);
        let text = fs::read_to_string(&hpath)?;
        let header: Header =
            serde_json::from_str(&text).map_err(|e| Error::format(&hpath, format!("bad checkpoint header: {e}")))?;
        if header.format != MAGIC || header.version != VERSION {
            return Err(Error::format(
                &hpath,
                format!("expected {MAGIC} v{VERSION}, found {} v{}", header.format, header.version),
            ));
        }
        let bytes = fs::read(&ppath)?;
        if bytes.len() != 8 * header.payload_values {
            return Err(Error::format(
                &ppath,
                format!("payload has {} bytes, header declares {} values", bytes.len(), header.payload_values),
            ));
        }
        let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        let params = ParamVector::from_parts(header.layout, values)?;
        let mut nets = BTreeMap::new();
        for (role, spec) in header.networks {
            nets.insert(role, Mlp::attach(role.name(), spec, &params)?);
        }
        let bundle = ModelBundle { params, nets, c_t: header.c_t, config: header.config };
        Ok(Checkpoint { bundle, step: header.step, rng: header.rng, config_hash: header.config_hash })
    }
}
