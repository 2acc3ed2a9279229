use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported primitive `{0}` in derivative evaluation")]
    UnsupportedPrimitive(String),

    #[error("domain error at node {node}: {op} of {value}")]
    Domain { node: usize, op: &'static str, value: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("output node {0} is not a scalar (shape {1}x{2})")]
    NotScalar(usize, usize, usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite gradient in parameter block `{0}`")]
    NonFiniteGradient(String),

    #[error("singular metric: condition number {0:.3e} exceeds threshold")]
    SingularMetric(f64),

    #[error("{skipped} of {batch} samples skipped for a singular metric or tangent plane (cap {cap})")]
    SkipCap { skipped: usize, batch: usize, cap: usize },

    #[error("singular coordinate Jacobian (determinant {0:.3e})")]
    SingularJacobian(f64),

    #[error("degenerate tangent plane: |d1E x d2E| = {0:.3e}")]
    DegenerateTangent(f64),

    #[error("sphere extinction: R^2 - 2(d-2)t = {0:.6} is not positive")]
    Extinction(f64),

    #[error("degenerate surface-of-revolution profile: r = {0:.3e}")]
    DegenerateProfile(f64),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("CFL violation: c*dt/h = {ratio:.4} > 1/sqrt(2); use dt <= {suggested_dt:.6e}")]
    Cfl { ratio: f64, suggested_dt: f64 },

    #[error("reaction blow-up at t = {0:.4}")]
    BlowUp(f64),

    #[error("normalization failed for sample {sample}: integral {integral:.3e} too small")]
    Normalization { sample: usize, integral: f64 },

    #[error("format error in {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("undefined relative L1: truth norm {0:.3e}")]
    UndefinedMetric(f64),

    #[error("training diverged at iteration {iter} (last good checkpoint: {checkpoint:?})")]
    Diverged { iter: usize, checkpoint: Option<PathBuf> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format { path: path.into(), msg: msg.into() }
    }
}
