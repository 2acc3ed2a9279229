//! Dataset generation for the PDE experiments: meshes, initial-condition
//! families, solvers, normalization and the on-disk format.

mod io;
mod solvers;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{dataset_paths, read_dataset, write_dataset, DS_MAGIC, DS_VERSION};
pub use solvers::{
    solve_burgers, solve_cyclic, solve_diffusion_reaction, solve_tridiagonal, solve_wave2d, WaveSolution,
};

/// Equispaced 1-d mesh. A periodic mesh omits the duplicate right endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh1D {
    pub start: f64,
    pub end: f64,
    pub count: usize,
    pub spacing: f64,
    pub periodic: bool,
}

impl Mesh1D {
    /// Nodes `start, ..., end` inclusive.
    pub fn closed(start: f64, end: f64, count: usize) -> Self {
        Mesh1D { start, end, count, spacing: (end - start) / (count - 1) as f64, periodic: false }
    }

    /// Nodes `start, ..., end - h` with `h = (end - start) / count`.
    pub fn periodic(start: f64, end: f64, count: usize) -> Self {
        Mesh1D { start, end, count, spacing: (end - start) / count as f64, periodic: true }
    }

    pub fn node(&self, i: usize) -> f64 {
        self.start + i as f64 * self.spacing
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.node(i)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let cells = if self.periodic { self.count } else { self.count.saturating_sub(1) };
        let span = self.spacing * cells as f64;
        if self.count < 3 || !(self.spacing > 0.0) || (span - (self.end - self.start)).abs() > 1e-9 * (1.0 + span.abs()) {
            return Err(Error::Dimension(format!("inconsistent mesh {self:?}")));
        }
        Ok(())
    }
}

/// Tensor-product mesh; values are stored row-major with `x` fastest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh2D {
    pub x: Mesh1D,
    pub y: Mesh1D,
}

impl Mesh2D {
    pub fn len(&self) -> usize {
        self.x.count * self.y.count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, k: usize) -> (f64, f64) {
        (self.x.node(k % self.x.count), self.y.node(k / self.x.count))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mesh {
    Line(Mesh1D),
    Grid(Mesh2D),
}

impl Mesh {
    pub fn len(&self) -> usize {
        match self {
            Mesh::Line(m) => m.count,
            Mesh::Grid(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight of one node (`h` or `h_x h_y`).
    pub fn cell(&self) -> f64 {
        match self {
            Mesh::Line(m) => m.spacing,
            Mesh::Grid(m) => m.x.spacing * m.y.spacing,
        }
    }

    /// Node-sum quadrature.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.cell()
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Mesh::Line(m) => m.validate(),
            Mesh::Grid(m) => m.x.validate().and(m.y.validate()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PdeKind {
    Burgers,
    DiffusionReaction,
    Wave2d,
}

impl PdeKind {
    pub fn name(self) -> &'static str {
        match self {
            PdeKind::Burgers => "burgers",
            PdeKind::DiffusionReaction => "diffusion_reaction",
            PdeKind::Wave2d => "wave2d",
        }
    }

    pub fn default_mesh(self) -> Mesh {
        match self {
            PdeKind::Burgers => Mesh::Line(Mesh1D::periodic(0.0, 1.0, 100)),
            PdeKind::DiffusionReaction => Mesh::Line(Mesh1D::closed(0.0, 1.0, 101)),
            PdeKind::Wave2d => {
                let side = Mesh1D::closed(0.0, 5.0, 80);
                Mesh::Grid(Mesh2D { x: side, y: side })
            }
        }
    }

    /// `(horizon, time step)` of the solver output grid.
    pub fn default_time(self) -> (f64, f64) {
        match self {
            PdeKind::Burgers | PdeKind::DiffusionReaction => (1.0, 0.01),
            PdeKind::Wave2d => (4.0, 0.04),
        }
    }
}

impl fmt::Display for PdeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PdeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "burgers" => Ok(PdeKind::Burgers),
            "diffusion_reaction" => Ok(PdeKind::DiffusionReaction),
            "wave2d" => Ok(PdeKind::Wave2d),
            _ => Err(Error::Unknown { kind: "pde", name: s.into() }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyId {
    A1,
    #[serde(rename = "A1_new")]
    A1New,
    A2,
    #[serde(rename = "A2_new1")]
    A2New1,
    #[serde(rename = "A2_new2")]
    A2New2,
    #[serde(rename = "A2_new3")]
    A2New3,
    #[serde(rename = "gauss_impulse")]
    GaussImpulse,
}

impl FamilyId {
    pub const ALL: [FamilyId; 7] = [
        FamilyId::A1,
        FamilyId::A1New,
        FamilyId::A2,
        FamilyId::A2New1,
        FamilyId::A2New2,
        FamilyId::A2New3,
        FamilyId::GaussImpulse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyId::A1 => "A1",
            FamilyId::A1New => "A1_new",
            FamilyId::A2 => "A2",
            FamilyId::A2New1 => "A2_new1",
            FamilyId::A2New2 => "A2_new2",
            FamilyId::A2New3 => "A2_new3",
            FamilyId::GaussImpulse => "gauss_impulse",
        }
    }

    /// The equation this family feeds.
    pub fn pde(self) -> PdeKind {
        match self {
            FamilyId::A1 | FamilyId::A1New => PdeKind::Burgers,
            FamilyId::GaussImpulse => PdeKind::Wave2d,
            _ => PdeKind::DiffusionReaction,
        }
    }
}

impl FromStr for FamilyId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FamilyId::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Unknown { kind: "family", name: s.into() })
    }
}

/// Uniform distribution over a union of closed intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub name: String,
    pub intervals: Vec<(f64, f64)>,
}

impl ParamRange {
    fn new(name: &str, intervals: &[(f64, f64)]) -> Self {
        ParamRange { name: name.into(), intervals: intervals.to_vec() }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= x && x <= b)
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        let total: f64 = self.intervals.iter().map(|(a, b)| b - a).sum();
        let mut s = rng.random::<f64>() * total;
        for &(a, b) in &self.intervals {
            if s <= b - a {
                return a + s;
            }
            s -= b - a;
        }
        self.intervals.last().map_or(0.0, |iv| iv.1)
    }

    fn validate(&self) -> Result<()> {
        if self.intervals.is_empty() || self.intervals.iter().any(|&(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::Config(format!("invalid range for parameter `{}`", self.name)));
        }
        Ok(())
    }
}

/// Initial-condition family with its parameter box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IcFamily {
    pub id: FamilyId,
    pub params: Vec<ParamRange>,
}

pub type Coefficients = BTreeMap<String, f64>;

impl IcFamily {
    pub fn standard(id: FamilyId) -> Self {
        let unit = [(-1.0, 1.0)];
        let params = match id {
            FamilyId::A1 | FamilyId::A2 => vec![ParamRange::new("alpha", &unit), ParamRange::new("beta", &unit)],
            FamilyId::A1New => {
                let split = [(-1.5, -1.0), (1.0, 1.5)];
                vec![ParamRange::new("alpha", &split), ParamRange::new("beta", &split)]
            }
            FamilyId::A2New1 => vec![
                ParamRange::new("alpha", &[(-1.75, 1.75)]),
                ParamRange::new("beta", &[(-1.75, 1.75)]),
                ParamRange::new("gamma", &unit),
            ],
            FamilyId::A2New2 | FamilyId::A2New3 => {
                vec![ParamRange::new("alpha", &[(0.0, 1.0)]), ParamRange::new("beta", &[(0.0, 1.0)])]
            }
            FamilyId::GaussImpulse => {
                vec![ParamRange::new("mu1", &[(1.0, 4.0)]), ParamRange::new("mu2", &[(1.0, 4.0)])]
            }
        };
        IcFamily { id, params }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Ok(Self::standard(name.parse()?))
    }

    pub fn validate(&self) -> Result<()> {
        self.params.iter().try_for_each(ParamRange::validate)
    }

    fn coefficient(&self, c: &Coefficients, name: &str) -> Result<f64> {
        c.get(name)
            .copied()
            .ok_or_else(|| Error::Config(format!("family {} needs coefficient `{name}`", self.id.name())))
    }

    /// Evaluate the family formula at one point (`y` is ignored in 1-d).
    pub fn eval(&self, c: &Coefficients, x: f64, y: f64) -> Result<f64> {
        let get = |n: &str| self.coefficient(c, n);
        let s = |k: f64| (k * PI * x).sin();
        let co = |k: f64| (k * PI * x).cos();
        Ok(match self.id {
            FamilyId::A1 | FamilyId::A1New => get("alpha")? * s(2.0) + get("beta")? * co(2.0).powi(3),
            FamilyId::A2 => {
                let (a, b) = (get("alpha")?, get("beta")?);
                a * s(2.0) + (a + 0.5) / 2.0 * co(4.0) + b / 3.0 * s(4.0)
            }
            FamilyId::A2New1 => {
                let (a, b, g) = (get("alpha")?, get("beta")?, get("gamma")?);
                a * s(2.0) + (g + 0.5) * co(4.0) + b * s(4.0)
            }
            FamilyId::A2New2 => {
                let (a, b) = (get("alpha")?, get("beta")?);
                a * s(2.0) + (a + 0.5) / 2.0 * co(3.5) + b / 3.0 * s(3.5)
            }
            FamilyId::A2New3 => {
                let (a, b) = (get("alpha")?, get("beta")?);
                a * s(2.0) + (a + 1.0) / 2.0 * co(4.5) + b / 3.0 * s(4.5)
            }
            FamilyId::GaussImpulse => {
                let (dx, dy) = (x - get("mu1")?, y - get("mu2")?);
                10.0 * (-(dx * dx + dy * dy) / 0.1).exp()
            }
        })
    }

    /// The formula evaluated at every node of `mesh`.
    pub fn values(&self, c: &Coefficients, mesh: &Mesh) -> Result<Vec<f64>> {
        match (mesh, self.id) {
            (Mesh::Grid(m), FamilyId::GaussImpulse) => (0..m.len())
                .map(|k| {
                    let (x, y) = m.node(k);
                    self.eval(c, x, y)
                })
                .collect(),
            (Mesh::Line(m), id) if id != FamilyId::GaussImpulse => {
                m.nodes().into_iter().map(|x| self.eval(c, x, 0.0)).collect()
            }
            _ => Err(Error::Dimension(format!("family {} does not fit a {:?} mesh", self.id.name(), mesh))),
        }
    }
}

/// Draw coefficients uniformly from the family's box and evaluate on `mesh`.
pub fn sample_ic<R: Rng>(family: &IcFamily, mesh: &Mesh, rng: &mut R) -> Result<(Coefficients, Vec<f64>)> {
    family.validate()?;
    let c: Coefficients = family.params.iter().map(|p| (p.name.clone(), p.draw(rng))).collect();
    let v = family.values(&c, mesh)?;
    Ok((c, v))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    Integral,
    L1,
    #[default]
    None,
}

impl FromStr for NormMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "integral" => Ok(NormMode::Integral),
            "l1" => Ok(NormMode::L1),
            "none" => Ok(NormMode::None),
            _ => Err(Error::Unknown { kind: "normalization mode", name: s.into() }),
        }
    }
}

/// Smallest accepted `|integral phi_0|` in integral mode.
pub const NORMALIZATION_THRESHOLD: f64 = 1e-3;

/// Equation coefficients and solver resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Physics {
    pub viscosity: f64,
    pub diffusion: f64,
    pub reaction: f64,
    pub wave_speed: f64,
    /// Solver steps per output interval (diffusion-reaction).
    pub dr_substeps: usize,
    /// Solver steps per output interval (wave).
    pub wave_substeps: usize,
}

impl Default for Physics {
    fn default() -> Self {
        Physics { viscosity: 0.01, diffusion: 0.01, reaction: 0.01, wave_speed: 1.0, dr_substeps: 1, wave_substeps: 2 }
    }
}

/// One initial condition and its sampled trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub params: Coefficients,
    pub phi0: Vec<f64>,
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
    /// Normalization constant; stored arrays are the raw data divided by it.
    pub scale: f64,
}

impl Sample {
    /// Index of the snapshot nearest to `t` and its distance.
    pub fn nearest(&self, t: f64) -> Option<(usize, f64)> {
        self.times
            .iter()
            .enumerate()
            .map(|(k, &s)| (k, (s - t).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PdeDataset {
    pub pde: PdeKind,
    pub family: IcFamily,
    pub mesh: Mesh,
    /// Full solver output grid; snapshot times are drawn from it.
    pub time_grid: Vec<f64>,
    pub physics: Physics,
    pub normalization: NormMode,
    pub seed: u64,
    pub samples: Vec<Sample>,
}

impl PdeDataset {
    pub fn horizon(&self) -> f64 {
        self.time_grid.last().copied().unwrap_or(0.0)
    }

    pub fn time_step(&self) -> f64 {
        if self.time_grid.len() > 1 {
            self.time_grid[1] - self.time_grid[0]
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.mesh.validate()?;
        self.family.validate()?;
        let n = self.mesh.len();
        let horizon = self.horizon();
        for (i, s) in self.samples.iter().enumerate() {
            if s.phi0.len() != n || s.snapshots.iter().any(|a| a.len() != n) {
                return Err(Error::Dimension(format!("sample {i}: array length differs from mesh size {n}")));
            }
            if s.times.len() != s.snapshots.len() {
                return Err(Error::Dimension(format!("sample {i}: {} times for {} snapshots", s.times.len(), s.snapshots.len())));
            }
            if s.times.iter().any(|&t| !(0.0..=horizon + 1e-12).contains(&t)) {
                return Err(Error::Dimension(format!("sample {i}: snapshot time outside [0, {horizon}]")));
            }
            if !(s.scale.is_finite() && s.scale != 0.0) {
                return Err(Error::Dimension(format!("sample {i}: invalid normalization constant {}", s.scale)));
            }
        }
        Ok(())
    }
}

/// Scale every sample by one constant (integral or L1 norm of `phi_0`),
/// composing with any constant already recorded.
pub fn normalize_dataset(mut ds: PdeDataset, mode: NormMode) -> Result<PdeDataset> {
    for (i, s) in ds.samples.iter_mut().enumerate() {
        let c = match mode {
            NormMode::None => 1.0,
            NormMode::Integral => {
                let c = ds.mesh.integrate(&s.phi0);
                if !(c.abs() > NORMALIZATION_THRESHOLD) {
                    return Err(Error::Normalization { sample: i, integral: c });
                }
                c
            }
            NormMode::L1 => {
                let c = ds.mesh.cell() * s.phi0.iter().map(|x| x.abs()).sum::<f64>();
                if !(c > NORMALIZATION_THRESHOLD) {
                    return Err(Error::Normalization { sample: i, integral: c });
                }
                c
            }
        };
        if c != 1.0 {
            s.phi0.iter_mut().chain(s.snapshots.iter_mut().flatten()).for_each(|x| *x /= c);
        }
        s.scale *= c;
    }
    ds.normalization = mode;
    Ok(ds)
}

/// Dataset generation request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenSpec {
    pub pde: PdeKind,
    pub family: IcFamily,
    pub n: usize,
    /// Snapshots drawn per sample (all grid times when larger than the grid).
    pub nt: usize,
    pub seed: u64,
    #[serde(default)]
    pub normalization: NormMode,
    #[serde(default)]
    pub physics: Physics,
    #[serde(default)]
    pub mesh: Option<Mesh>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub time_step: Option<f64>,
}

impl GenSpec {
    pub fn new(pde: PdeKind, family: FamilyId, n: usize, seed: u64) -> Self {
        GenSpec {
            pde,
            family: IcFamily::standard(family),
            n,
            nt: 100,
            seed,
            normalization: NormMode::None,
            physics: Physics::default(),
            mesh: None,
            horizon: None,
            time_step: None,
        }
    }

    pub fn time_grid(&self) -> Vec<f64> {
        let (horizon, step) = self.pde.default_time();
        let horizon = self.horizon.unwrap_or(horizon);
        let step = self.time_step.unwrap_or(step);
        let count = (horizon / step).round() as usize;
        (0..=count).map(|k| k as f64 * step).collect()
    }
}

/// Run the solver for one initial condition over the whole grid.
pub fn solve(pde: PdeKind, phi0: &[f64], mesh: &Mesh, times: &[f64], physics: &Physics) -> Result<Vec<Vec<f64>>> {
    match (pde, mesh) {
        (PdeKind::Burgers, Mesh::Line(m)) => solve_burgers(phi0, physics.viscosity, m, times),
        (PdeKind::DiffusionReaction, Mesh::Line(m)) => solve_diffusion_reaction(
            phi0,
            phi0,
            physics.diffusion,
            physics.reaction,
            m,
            times,
            physics.dr_substeps,
        ),
        (PdeKind::Wave2d, Mesh::Grid(m)) => {
            Ok(solve_wave2d(phi0, physics.wave_speed, m, times, physics.wave_substeps)?.snapshots)
        }
        _ => Err(Error::Dimension(format!("{pde} cannot run on mesh {mesh:?}"))),
    }
}

/// Generate `spec.n` samples. Sample `i` uses its own ChaCha stream, so the
/// output does not depend on the thread count.
pub fn generate(spec: &GenSpec) -> Result<PdeDataset> {
    spec.family.validate()?;
    if spec.family.id.pde() != spec.pde {
        return Err(Error::Config(format!(
            "family {} belongs to {}, not {}",
            spec.family.id.name(),
            spec.family.id.pde(),
            spec.pde
        )));
    }
    if spec.n == 0 || spec.nt == 0 {
        return Err(Error::Config("sample and snapshot counts must be positive".into()));
    }
    let mesh = spec.mesh.unwrap_or_else(|| spec.pde.default_mesh());
    mesh.validate()?;
    let grid = spec.time_grid();
    if grid.len() < 2 {
        return Err(Error::Config("time grid needs at least two points".into()));
    }
    let samples = (0..spec.n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(i as u64);
            let (params, phi0) = sample_ic(&spec.family, &mesh, &mut rng)?;
            let traj = solve(spec.pde, &phi0, &mesh, &grid, &spec.physics)?;
            let mut picks: Vec<usize> = if spec.nt >= grid.len() {
                (0..grid.len()).collect()
            } else {
                sample_indices(&mut rng, grid.len(), spec.nt).into_vec()
            };
            picks.sort_unstable();
            Ok(Sample {
                params,
                times: picks.iter().map(|&k| grid[k]).collect(),
                snapshots: picks.iter().map(|&k| traj[k].clone()).collect(),
                phi0,
                scale: 1.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ds = PdeDataset {
        pde: spec.pde,
        family: spec.family.clone(),
        mesh,
        time_grid: grid,
        physics: spec.physics.clone(),
        normalization: NormMode::None,
        seed: spec.seed,
        samples,
    };
    normalize_dataset(ds, spec.normalization)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeffs(pairs: &[(&str, f64)]) -> Coefficients {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn family_examples() {
        let a1 = IcFamily::standard(FamilyId::A1);
        assert!((a1.eval(&coeffs(&[("alpha", 1.0), ("beta", 0.0)]), 0.25, 0.0).unwrap() - 1.0).abs() < 1e-15);
        let a2 = IcFamily::standard(FamilyId::A2);
        assert_eq!(a2.eval(&coeffs(&[("alpha", 0.0), ("beta", 0.0)]), 0.0, 0.0).unwrap(), 0.25);
        let g = IcFamily::standard(FamilyId::GaussImpulse);
        let mu = coeffs(&[("mu1", 2.0), ("mu2", 2.0)]);
        assert_eq!(g.eval(&mu, 2.0, 2.0).unwrap(), 10.0);
        assert!((g.eval(&mu, 1.0, 2.0).unwrap() - 10.0 * (-10.0f64).exp()).abs() < 1e-18);
        assert!(matches!("A3".parse::<FamilyId>(), Err(Error::Unknown { .. })));
    }

    #[test]
    fn draws_stay_in_the_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for id in FamilyId::ALL {
            let fam = IcFamily::standard(id);
            let mesh = id.pde().default_mesh();
            for _ in 0..50 {
                let (c, v) = sample_ic(&fam, &mesh, &mut rng).unwrap();
                assert_eq!(v.len(), mesh.len());
                for p in &fam.params {
                    assert!(p.contains(c[&p.name]), "{} {} {}", id.name(), p.name, c[&p.name]);
                }
            }
        }
        let split = &IcFamily::standard(FamilyId::A1New).params[0];
        assert!((0..200).all(|_| split.draw(&mut rng).abs() >= 1.0));
    }

    #[test]
    fn meshes_span_their_extent() {
        for pde in [PdeKind::Burgers, PdeKind::DiffusionReaction, PdeKind::Wave2d] {
            pde.default_mesh().validate().unwrap();
        }
        let Mesh::Line(m) = PdeKind::Burgers.default_mesh() else { unreachable!() };
        assert_eq!(m.spacing, 0.01);
    }

    #[test]
    fn normalization_modes() {
        let mut spec = GenSpec::new(PdeKind::DiffusionReaction, FamilyId::A2, 2, 1);
        spec.nt = 3;
        let ds = generate(&spec).unwrap();
        let id = normalize_dataset(ds.clone(), NormMode::None).unwrap();
        assert_eq!(id.samples, ds.samples);
        let l1 = normalize_dataset(ds.clone(), NormMode::L1).unwrap();
        for (a, b) in l1.samples.iter().zip(&ds.samples) {
            for (x, y) in a.snapshots.iter().flatten().zip(b.snapshots.iter().flatten()) {
                assert_eq!(*x, *y / a.scale);
            }
        }
    }

    #[test]
    fn mismatched_family_is_rejected() {
        let spec = GenSpec::new(PdeKind::Burgers, FamilyId::A2, 1, 1);
        assert!(matches!(generate(&spec), Err(Error::Config(_))));
    }
}
