//! Command-line driver: data generation, geometry checks, training,
//! evaluation and latent export.

use std::ffi::OsString;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use rfae_core::eval_export::{evaluate, export_latent, Split};
use rfae_core::geometry::run_suite;
use rfae_core::nn::Checkpoint;
use rfae_core::pde_data::{generate, normalize_dataset, read_dataset, write_dataset, FamilyId, GenSpec, NormMode, PdeKind};
use rfae_core::training::{train, Mode, TrainConfig};
use rfae_core::Error;

/// Ricci-flow-guided autoencoders for PDE data.
#[derive(Debug, Parser)]
#[command(name = "rfae", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset of PDE solutions.
    GenData(GenData),
    /// Run the analytic geometry oracles.
    VerifyGeometry(VerifyGeometry),
    /// Train a model.
    Train(Train),
    /// Relative L1 error of a checkpoint on a dataset.
    Eval(Eval),
    /// Write chart coordinates and manifold points as CSV.
    ExportLatent(ExportLatent),
    /// Print a checkpoint summary.
    InspectCheckpoint(Inspect),
}

#[derive(Debug, Args)]
pub struct GenData {
    /// burgers, diffusion_reaction or wave2d
    #[arg(long)]
    pub pde: PdeKind,
    /// A1, A1_new, A2, A2_new1, A2_new2, A2_new3 or gauss_impulse
    #[arg(long)]
    pub family: FamilyId,
    /// Number of initial conditions.
    #[arg(long)]
    pub n: usize,
    /// Snapshots kept per sample.
    #[arg(long, default_value_t = 100)]
    pub nt: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// none, integral or l1
    #[arg(long, default_value = "none")]
    pub normalization: NormMode,
    /// Output directory or file prefix.
    #[arg(long)]
    pub out: PathBuf,
    /// Accepted for symmetry with `train`; generation is always deterministic.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Debug, Args)]
pub struct VerifyGeometry {
    /// Oracle suite name or `all`.
    #[arg(long, default_value = "all")]
    pub suite: String,
    /// JSON report path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Train {
    /// JSON training configuration (defaults when omitted).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Training dataset.
    #[arg(long)]
    pub data: PathBuf,
    /// Run directory for checkpoints and history.
    #[arg(long)]
    pub out: PathBuf,
    /// Override the training mode, e.g. full_ricci, fixed_metric:cigar, sphere:shift.
    #[arg(long)]
    pub mode: Option<Mode>,
    /// Override the configuration seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Force the deterministic reduction order.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Debug, Args)]
pub struct Eval {
    /// Checkpoint prefix, e.g. run1/final.
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Evaluation dataset.
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated times.
    #[arg(long, value_delimiter = ',', required = true)]
    pub times: Vec<f64>,
    /// JSON report path; the text table always goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportLatent {
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Dataset, optionally tagged `train=PATH`, `test=PATH` or `extrapolation=PATH`; repeatable.
    #[arg(long, required = true)]
    pub data: Vec<String>,
    /// Comma-separated times.
    #[arg(long, value_delimiter = ',', required = true)]
    pub times: Vec<f64>,
    /// CSV output path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Inspect {
    #[arg(long)]
    pub ckpt: PathBuf,
}

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

enum Failure {
    Invalid(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Unknown { .. } | Error::Dimension(_) | Error::Cfl { .. } => Failure::Invalid(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn ckpt_prefix(p: &Path) -> PathBuf {
    let s = p.to_string_lossy();
    for ext in [".json", ".f64"] {
        if let Some(stem) = s.strip_suffix(ext) {
            return PathBuf::from(stem);
        }
    }
    p.to_path_buf()
}

/// Timestamps go only to a log next to the outputs, never into them.
fn sidecar(out: &Path, line: &str) {
    let path = if out.is_dir() {
        out.join("rfae.log")
    } else {
        let mut s = out.as_os_str().to_owned();
        s.push(".log");
        PathBuf::from(s)
    };
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    if let Ok(mut f) = OpenOptions::new().create(true).append(true).open(path) {
        let _ = writeln!(f, "{secs} {line}");
    }
}

fn gen_data(a: GenData) -> Outcome {
    if a.family.pde() != a.pde {
        return Err(Failure::Invalid(format!("family {} belongs to {}, not {}", a.family.name(), a.family.pde(), a.pde)));
    }
    if a.n == 0 || a.nt == 0 {
        return Err(Failure::Invalid("--n and --nt must be positive".into()));
    }
    let mut spec = GenSpec::new(a.pde, a.family, a.n, a.seed);
    spec.nt = a.nt;
    let ds = normalize_dataset(generate(&spec)?, a.normalization)?;
    let name = a.out.to_string_lossy();
    if !name.ends_with(".meta.json") && !name.ends_with(".f64") {
        fs::create_dir_all(&a.out).map_err(Error::from)?;
    }
    write_dataset(&ds, &a.out)?;
    sidecar(&a.out, &format!("gen-data pde={} family={} n={} seed={}", a.pde, a.family.name(), a.n, a.seed));
    println!("wrote {} samples to {}", ds.samples.len(), a.out.display());
    Ok(())
}

fn verify_geometry(a: VerifyGeometry) -> Outcome {
    let report = run_suite(&a.suite)?;
    let json = serde_json::to_string_pretty(&report).map_err(Error::from)? + "\n";
    match &a.out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(Error::from)?;
            }
            fs::write(p, &json).map_err(Error::from)?;
            sidecar(p, &format!("verify-geometry suite={} passed={}", a.suite, report.passed));
        }
        None => print!("{json}"),
    }
    for c in &report.checks {
        eprintln!("{} {}/{}: max error {:.3e} (tol {:.0e})", if c.passed { "PASS" } else { "FAIL" }, c.suite, c.name, c.max_error, c.tolerance);
    }
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Runtime("some geometry oracles failed".into()))
    }
}

fn train_cmd(a: Train) -> Outcome {
    let mut cfg = match &a.config {
        Some(p) => TrainConfig::from_json(&fs::read_to_string(p).map_err(Error::from)?)?,
        None => TrainConfig::default(),
    };
    if let Some(m) = a.mode {
        cfg.mode = m;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if a.deterministic {
        cfg.deterministic = true;
    }
    cfg.validate()?;
    let ds = read_dataset(&a.data)?;
    let out = train(&cfg, &ds, Some(&a.out))?;
    sidecar(&a.out, &format!("train mode={} iterations={} seed={}", cfg.mode.name(), cfg.iterations, cfg.seed));
    if let Some(last) = out.history.last() {
        println!("finished {} iterations, final total loss {:.6e}", last.iter, last.loss.total);
    }
    Ok(())
}

fn eval_cmd(a: Eval) -> Outcome {
    let ck = Checkpoint::load(&ckpt_prefix(&a.ckpt))?;
    let ds = read_dataset(&a.data)?;
    let report = evaluate(&ck.bundle, &ds, &a.times, &a.data.display().to_string())?;
    print!("{}", report.table());
    if let Some(p) = &a.out {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(Error::from)?;
        }
        fs::write(p, serde_json::to_string_pretty(&report).map_err(Error::from)? + "\n").map_err(Error::from)?;
        sidecar(p, &format!("eval ckpt={} data={}", a.ckpt.display(), a.data.display()));
    }
    Ok(())
}

fn export_cmd(a: ExportLatent) -> Outcome {
    let ck = Checkpoint::load(&ckpt_prefix(&a.ckpt))?;
    let mut sets = Vec::new();
    for d in &a.data {
        let (split, path) = match d.split_once('=') {
            Some((s, p)) => (s.parse::<Split>()?, p),
            None => (Split::Test, d.as_str()),
        };
        sets.push((split, read_dataset(Path::new(path))?));
    }
    let refs: Vec<_> = sets.iter().map(|(s, d)| (*s, d)).collect();
    let rows = export_latent(&ck.bundle, &refs, &a.times, &a.out)?;
    sidecar(&a.out, &format!("export-latent ckpt={} rows={rows}", a.ckpt.display()));
    println!("wrote {rows} rows to {}", a.out.display());
    Ok(())
}

fn inspect(a: Inspect) -> Outcome {
    let ck = Checkpoint::load(&ckpt_prefix(&a.ckpt))?;
    let b = &ck.bundle;
    let nets: serde_json::Map<String, serde_json::Value> = b
        .nets
        .iter()
        .map(|(r, n)| (r.name().to_string(), serde_json::to_value(&n.spec).unwrap_or_default()))
        .collect();
    let summary = serde_json::json!({
        "step": ck.step,
        "config_hash": ck.config_hash,
        "c_t": b.c_t,
        "parameters": b.params.len(),
        "networks": nets,
        "config": b.config,
    });
    println!("{}", serde_json::to_string_pretty(&summary).map_err(Error::from)?);
    Ok(())
}

struct StderrLog;

impl log::Log for StderrLog {
    fn enabled(&self, m: &log::Metadata) -> bool {
        m.level() <= log::Level::Warn
    }
    fn log(&self, r: &log::Record) {
        if self.enabled(r.metadata()) {
            eprintln!("{}: {}", r.level().as_str().to_lowercase(), r.args());
        }
    }
    fn flush(&self) {}
}

static LOGGER: StderrLog = StderrLog;

fn configure_threads() -> Outcome {
    if let Ok(v) = std::env::var("RFAE_THREADS") {
        let n: usize = v.parse().map_err(|_| Failure::Invalid(format!("RFAE_THREADS={v} is not a thread count")))?;
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parse `argv` (including the program name) and run; returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = log::set_logger(&LOGGER).map(|()| log::set_max_level(log::LevelFilter::Warn));
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let result = configure_threads().and_then(|()| match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::VerifyGeometry(a) => verify_geometry(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::ExportLatent(a) => export_cmd(a),
        Command::InspectCheckpoint(a) => inspect(a),
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INVALID
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            EXIT_RUNTIME
        }
    }
}
