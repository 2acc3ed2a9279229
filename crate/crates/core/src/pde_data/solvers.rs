//! Finite-difference solvers. Each returns the solution at every point of the
//! requested output time grid (the first entry is the initial state).

use super::{Mesh1D, Mesh2D};
use crate::error::{Error, Result};

/// Solve `a_i x_{i-1} + b_i x_i + c_i x_{i+1} = d_i` (Thomas algorithm).
pub fn solve_tridiagonal(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for i in 1..n {
        let den = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / den;
        dp[i] = (d[i] - a[i] * dp[i - 1]) / den;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Periodic system with constant diagonal `b` and off-diagonals `o`
/// (wrapping corners), via Sherman-Morrison.
pub fn solve_cyclic(b: f64, o: f64, d: &[f64]) -> Vec<f64> {
    let n = d.len();
    let gamma = -b;
    let mut bb = vec![b; n];
    bb[0] = b - gamma;
    bb[n - 1] = b - o * o / gamma;
    let a = vec![o; n];
    let c = vec![o; n];
    let x = solve_tridiagonal(&a, &bb, &c, d);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = o;
    let z = solve_tridiagonal(&a, &bb, &c, &u);
    let fact = (x[0] + o * x[n - 1] / gamma) / (1.0 + z[0] + o * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

fn godunov_flux(l: f64, r: f64) -> f64 {
    // exact Riemann flux for f(u) = u^2 / 2
    let f = |u: f64| 0.5 * u * u;
    if l <= r {
        if l > 0.0 {
            f(l)
        } else if r < 0.0 {
            f(r)
        } else {
            0.0
        }
    } else {
        f(l).max(f(r))
    }
}

const MAX_REFINE: usize = 5;
const MAX_PRINCIPLE_TOL: f64 = 1e-6;

fn burgers_interval(phi0: &[f64], nu: f64, h: f64, span: f64, steps: usize) -> Vec<f64> {
    let n = phi0.len();
    let dt = span / steps as f64;
    let r = nu * dt / (h * h);
    let mut phi = phi0.to_vec();
    for _ in 0..steps {
        let flux: Vec<f64> = (0..n).map(|i| godunov_flux(phi[i], phi[(i + 1) % n])).collect();
        let rhs: Vec<f64> = (0..n)
            .map(|i| {
                let (l, rr) = (phi[(i + n - 1) % n], phi[(i + 1) % n]);
                let adv = flux[i] - flux[(i + n - 1) % n];
                phi[i] - dt / h * adv + 0.5 * r * (l - 2.0 * phi[i] + rr)
            })
            .collect();
        phi = solve_cyclic(1.0 + r, -0.5 * r, &rhs);
    }
    phi
}

/// Viscous Burgers `phi_t + phi phi_x = nu phi_xx` on a periodic mesh:
/// Godunov advection (explicit) with Crank-Nicolson diffusion, sub-stepped
/// so that `max|phi| dt / h <= 1/2` and `nu dt / h^2 <= 1`, refining
/// further whenever a step breaks the max principle.
pub fn solve_burgers(phi0: &[f64], nu: f64, mesh: &Mesh1D, times: &[f64]) -> Result<Vec<Vec<f64>>> {
    if !(nu > 0.0) {
        return Err(Error::Config(format!("viscosity must be positive, got {nu}")));
    }
    if !mesh.periodic || phi0.len() != mesh.count {
        return Err(Error::Dimension("Burgers needs a periodic mesh matching the initial data".into()));
    }
    let h = mesh.spacing;
    let bound = phi0.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut phi = phi0.to_vec();
    let mut out = vec![phi.clone()];
    for w in times.windows(2) {
        let span = w[1] - w[0];
        let amax = phi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let base = (amax * span / (0.5 * h)).ceil().max((nu * span / (h * h)).ceil()).max(1.0) as usize;
        let mut accepted = None;
        for refine in 0..MAX_REFINE {
            let next = burgers_interval(&phi, nu, h, span, base << refine);
            let now = next.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if now.is_finite() && now <= bound * (1.0 + MAX_PRINCIPLE_TOL) + 1e-14 {
                accepted = Some(next);
                break;
            }
        }
        phi = accepted.ok_or_else(|| {
            Error::Solver(format!("Burgers step failed the max-principle check at t = {}", w[1]))
        })?;
        out.push(phi.clone());
    }
    Ok(out)
}

/// Diffusion-reaction `phi_t = D phi_xx + lambda phi^2 + f` with zero
/// Dirichlet boundaries: Crank-Nicolson diffusion with second-order
/// Adams-Bashforth reaction/source.
pub fn solve_diffusion_reaction(
    phi0: &[f64],
    source: &[f64],
    diffusion: f64,
    reaction: f64,
    mesh: &Mesh1D,
    times: &[f64],
    substeps: usize,
) -> Result<Vec<Vec<f64>>> {
    if !(diffusion > 0.0) {
        return Err(Error::Config(format!("diffusion coefficient must be positive, got {diffusion}")));
    }
    if mesh.periodic || phi0.len() != mesh.count || source.len() != mesh.count {
        return Err(Error::Dimension("diffusion-reaction needs a bounded mesh matching the data".into()));
    }
    let n = mesh.count;
    let h = mesh.spacing;
    let inner = n - 2;
    let mut phi = phi0.to_vec();
    phi[0] = 0.0;
    phi[n - 1] = 0.0;
    let mut out = vec![phi0.to_vec()];
    let nonlinear = |p: &[f64]| -> Vec<f64> { (0..n).map(|i| reaction * p[i] * p[i] + source[i]).collect() };
    let mut prev: Option<Vec<f64>> = None;
    for w in times.windows(2) {
        let dt = (w[1] - w[0]) / substeps.max(1) as f64;
        let r = diffusion * dt / (h * h);
        let a = vec![-0.5 * r; inner];
        let b = vec![1.0 + r; inner];
        let c = vec![-0.5 * r; inner];
        for _ in 0..substeps.max(1) {
            let nl = nonlinear(&phi);
            let rhs: Vec<f64> = (1..n - 1)
                .map(|i| {
                    let extrap = match &prev {
                        Some(p) => 1.5 * nl[i] - 0.5 * p[i],
                        None => nl[i],
                    };
                    phi[i] + 0.5 * r * (phi[i - 1] - 2.0 * phi[i] + phi[i + 1]) + dt * extrap
                })
                .collect();
            let x = solve_tridiagonal(&a, &b, &c, &rhs);
            phi[1..n - 1].copy_from_slice(&x);
            prev = Some(nl);
        }
        let now = phi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !(now <= 1e6) {
            return Err(Error::BlowUp(w[1]));
        }
        out.push(phi.clone());
    }
    Ok(out)
}

/// Output of [`solve_wave2d`]: snapshots and the discrete energy after each output time.
pub struct WaveSolution {
    pub snapshots: Vec<Vec<f64>>,
    pub energy: Vec<f64>,
}

/// Neumann Laplacian with mirrored ghost nodes.
fn laplacian(u: &[f64], mesh: &Mesh2D, out: &mut [f64]) {
    let (nx, ny) = (mesh.x.count, mesh.y.count);
    let (ix2, iy2) = (1.0 / (mesh.x.spacing * mesh.x.spacing), 1.0 / (mesh.y.spacing * mesh.y.spacing));
    let at = |i: usize, j: usize| u[j * nx + i];
    for j in 0..ny {
        for i in 0..nx {
            let c = at(i, j);
            let w = if i == 0 { at(1, j) } else { at(i - 1, j) };
            let e = if i == nx - 1 { at(nx - 2, j) } else { at(i + 1, j) };
            let s = if j == 0 { at(i, 1) } else { at(i, j - 1) };
            let n = if j == ny - 1 { at(i, ny - 2) } else { at(i, j + 1) };
            out[j * nx + i] = ((w + e) - 2.0 * c) * ix2 + ((s + n) - 2.0 * c) * iy2;
        }
    }
}

/// Trapezoid weights making the Neumann Laplacian symmetric.
fn weights(mesh: &Mesh2D) -> Vec<f64> {
    let (nx, ny) = (mesh.x.count, mesh.y.count);
    let edge = |i: usize, n: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
    let mut w = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            w[j * nx + i] = edge(i, nx) * edge(j, ny) * mesh.x.spacing * mesh.y.spacing;
        }
    }
    w
}

/// Wave equation `phi_tt = c^2 lap phi`, zero initial velocity, Neumann
/// boundaries; leapfrog with `substeps` steps per output interval.
pub fn solve_wave2d(phi0: &[f64], c: f64, mesh: &Mesh2D, times: &[f64], substeps: usize) -> Result<WaveSolution> {
    let len = mesh.x.count * mesh.y.count;
    if phi0.len() != len {
        return Err(Error::Dimension(format!("initial data has {} values, mesh has {len}", phi0.len())));
    }
    let substeps = substeps.max(1);
    let hmin = mesh.x.spacing.min(mesh.y.spacing);
    let limit = std::f64::consts::FRAC_1_SQRT_2;
    for w in times.windows(2) {
        let dt = (w[1] - w[0]) / substeps as f64;
        let ratio = c * dt / hmin;
        if ratio > limit {
            return Err(Error::Cfl { ratio, suggested_dt: 0.9 * limit * hmin / c });
        }
    }
    let wts = weights(mesh);
    let energy = |prev: &[f64], next: &[f64], dt: f64, lap_prev: &[f64]| -> f64 {
        let mut kin = 0.0;
        let mut pot = 0.0;
        for k in 0..len {
            let v = (next[k] - prev[k]) / dt;
            kin += wts[k] * v * v;
            pot -= wts[k] * next[k] * lap_prev[k];
        }
        0.5 * kin + 0.5 * c * c * pot
    };
    let mut lap = vec![0.0; len];
    let mut snapshots = vec![phi0.to_vec()];
    let mut energies = Vec::new();
    let mut prev = phi0.to_vec();
    let mut cur = phi0.to_vec();
    let mut started = false;
    let mut initial_energy = None;
    for w in times.windows(2) {
        let dt = (w[1] - w[0]) / substeps as f64;
        let k2 = c * c * dt * dt;
        for _ in 0..substeps {
            laplacian(&cur, mesh, &mut lap);
            let next: Vec<f64> = if started {
                (0..len).map(|k| 2.0 * cur[k] - prev[k] + k2 * lap[k]).collect()
            } else {
                (0..len).map(|k| cur[k] + 0.5 * k2 * lap[k]).collect()
            };
            if initial_energy.is_none() {
                // staggered energy with the symmetric start is defined from the first step
                initial_energy = Some(energy(&cur, &next, dt, &lap));
            }
            started = true;
            prev = std::mem::replace(&mut cur, next);
        }
        laplacian(&prev, mesh, &mut lap);
        energies.push(energy(&prev, &cur, dt, &lap));
        snapshots.push(cur.clone());
    }
    let mut energy_series = vec![initial_energy.unwrap_or(0.0)];
    energy_series.extend(energies);
    Ok(WaveSolution { snapshots, energy: energy_series })
}
