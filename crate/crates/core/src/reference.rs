//! Ground-truth solvers for the three PDE problems.
//!
//! Both numerical solvers work on node-centred grids with the two end nodes
//! held at their initial values (Dirichlet). Snapshots are stored only at the
//! requested times.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest supported grid.
pub const MIN_GRID_POINTS: usize = 16;

/// Stability bounds of the explicit viscous scheme.
pub const MAX_DIFFUSION_NUMBER: f64 = 0.25;
pub const MAX_COURANT_NUMBER: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x0: f64,
    pub x1: f64,
    pub n: usize,
    pub dx: f64,
}

impl Grid1D {
    pub fn new(x0: f64, x1: f64, n: usize) -> Result<Self> {
        if !(x0.is_finite() && x1.is_finite() && x1 > x0) {
            return Err(Error::Config(format!("grid needs x1 > x0, got [{x0}, {x1}]")));
        }
        if n < MIN_GRID_POINTS {
            return Err(Error::Config(format!("grid needs at least {MIN_GRID_POINTS} points, got {n}")));
        }
        Ok(Self {
            x0,
            x1,
            n,
            dx: (x1 - x0) / (n - 1) as f64,
        })
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.x1
        } else {
            self.x0 + i as f64 * self.dx
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSnapshot {
    pub t: f64,
    pub values: Vec<f64>,
}

impl FieldSnapshot {
    /// Piecewise-linear interpolation; `None` outside the grid.
    pub fn sample(&self, grid: &Grid1D, x: f64) -> Option<f64> {
        if !(grid.x0..=grid.x1).contains(&x) || self.values.len() != grid.n {
            return None;
        }
        let s = (x - grid.x0) / grid.dx;
        let i = (s.floor() as usize).min(grid.n - 2);
        let w = s - i as f64;
        Some((1.0 - w) * self.values[i] + w * self.values[i + 1])
    }

    /// `# t=<t>` header line, then `x,u` rows.
    pub fn write_csv<W: Write>(&self, grid: &Grid1D, mut out: W) -> Result<()> {
        writeln!(out, "# t={:?}", self.t)?;
        writeln!(out, "x,u")?;
        for (i, u) in self.values.iter().enumerate() {
            writeln!(out, "{:?},{:?}", grid.x(i), u)?;
        }
        Ok(())
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Config("at least one snapshot time is required".into()));
    }
    let mut prev = 0.0;
    for &t in times {
        if !t.is_finite() || t < prev {
            return Err(Error::Config("snapshot times must be finite, non-negative and ascending".into()));
        }
        prev = t;
    }
    Ok(())
}

/// Godunov flux of `u²/2`.
fn godunov_flux(ul: f64, ur: f64) -> f64 {
    if ul <= ur {
        if ul <= 0.0 && ur >= 0.0 {
            0.0
        } else {
            0.5 * (ul * ul).min(ur * ur)
        }
    } else {
        0.5 * (ul * ul).max(ur * ur)
    }
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Monotonized-central limited slope.
fn mc_limiter(a: f64, b: f64) -> f64 {
    minmod(0.5 * (a + b), 2.0 * minmod(a, b))
}

/// Time derivative of the semi-discrete viscous scheme at interior nodes.
/// Advection: MUSCL reconstruction (monotonized-central slopes) with the
/// Godunov flux.
fn viscous_rhs(u: &[f64], nu: f64, dx: f64, slope: &mut [f64], flux: &mut [f64], out: &mut [f64]) {
    let n = u.len();
    slope[0] = 0.0;
    slope[n - 1] = 0.0;
    for i in 1..n - 1 {
        slope[i] = mc_limiter(u[i] - u[i - 1], u[i + 1] - u[i]);
    }
    for i in 0..n - 1 {
        flux[i] = godunov_flux(u[i] + 0.5 * slope[i], u[i + 1] - 0.5 * slope[i + 1]);
    }
    let inv_dx = 1.0 / dx;
    let diff = nu / (dx * dx);
    out[0] = 0.0;
    out[n - 1] = 0.0;
    for i in 1..n - 1 {
        out[i] = -(flux[i] - flux[i - 1]) * inv_dx + diff * (u[i + 1] - 2.0 * u[i] + u[i - 1]);
    }
}

/// Viscous Burgers `u_t + (u²/2)_x = ν u_xx` with SSP-RK2 time stepping.
///
/// `dt` is the nominal step; the last step before each requested time is
/// shortened to land on it. Both stability bounds are checked every step.
pub fn solve_viscous_burgers_fd(
    ic: impl Fn(f64) -> f64,
    nu: f64,
    grid: &Grid1D,
    dt: f64,
    times: &[f64],
) -> Result<Vec<FieldSnapshot>> {
    if !(nu >= 0.0 && nu.is_finite()) {
        return Err(Error::Config(format!("viscosity must be non-negative, got {nu}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("time step must be positive, got {dt}")));
    }
    check_times(times)?;
    let dx = grid.dx;
    if nu * dt / (dx * dx) > MAX_DIFFUSION_NUMBER {
        return Err(Error::Cfl {
            what: format!("diffusion number nu*dt/dx^2 = {:e} > {MAX_DIFFUSION_NUMBER}", nu * dt / (dx * dx)),
            required_dt: MAX_DIFFUSION_NUMBER * dx * dx / nu,
        });
    }
    let mut u: Vec<f64> = grid.points().into_iter().map(&ic).collect();
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("initial condition is not finite".into()));
    }
    let n = grid.n;
    let (mut slope, mut flux, mut k) = (vec![0.0; n], vec![0.0; n - 1], vec![0.0; n]);
    let mut stage = vec![0.0; n];
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        while t < target {
            let h = dt.min(target - t);
            let umax = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if umax * h / dx > MAX_COURANT_NUMBER {
                return Err(Error::Cfl {
                    what: format!("Courant number max|u|*dt/dx = {:e} > {MAX_COURANT_NUMBER} at t = {t}", umax * h / dx),
                    required_dt: MAX_COURANT_NUMBER * dx / umax,
                });
            }
            viscous_rhs(&u, nu, dx, &mut slope, &mut flux, &mut k);
            for i in 0..n {
                stage[i] = u[i] + h * k[i];
            }
            viscous_rhs(&stage, nu, dx, &mut slope, &mut flux, &mut k);
            for i in 0..n {
                u[i] = 0.5 * u[i] + 0.5 * (stage[i] + h * k[i]);
            }
            if u.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!("viscous solver diverged at t = {t}")));
            }
            // Round-off in the accumulated time must not trigger a sliver step.
            t = if target - (t + h) <= 1e-12 * target.max(1.0) { target } else { t + h };
        }
        out.push(FieldSnapshot { t: target, values: u.clone() });
    }
    Ok(out)
}

/// Exact Riemann solution with `u_L = 1`, `u_R = 0`: a shock moving at 1/2.
pub fn exact_riemann_inviscid(x: f64, t: f64) -> f64 {
    if x < 0.5 + 0.5 * t {
        1.0
    } else {
        0.0
    }
}

/// One forward-Euler Godunov step; returns the boundary fluxes `(left, right)`.
fn godunov_step(u: &mut [f64], flux: &mut [f64], lambda: f64) -> (f64, f64) {
    let n = u.len();
    for i in 0..n - 1 {
        flux[i] = godunov_flux(u[i], u[i + 1]);
    }
    for i in 1..n - 1 {
        u[i] -= lambda * (flux[i] - flux[i - 1]);
    }
    (flux[0], flux[n - 2])
}

/// First-order Godunov scheme for inviscid Burgers.
pub fn solve_inviscid_godunov(ic: impl Fn(f64) -> f64, grid: &Grid1D, cfl: f64, times: &[f64]) -> Result<Vec<FieldSnapshot>> {
    if !(cfl > 0.0 && cfl <= 0.9) {
        return Err(Error::Config(format!("cfl must lie in (0, 0.9], got {cfl}")));
    }
    check_times(times)?;
    let mut u: Vec<f64> = grid.points().into_iter().map(&ic).collect();
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("initial condition is not finite".into()));
    }
    let mut flux = vec![0.0; grid.n - 1];
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        while t < target {
            let umax = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let h = if umax > 0.0 { (cfl * grid.dx / umax).min(target - t) } else { target - t };
            godunov_step(&mut u, &mut flux, h / grid.dx);
            t = if target - (t + h) <= 1e-12 * target.max(1.0) { target } else { t + h };
        }
        out.push(FieldSnapshot { t: target, values: u.clone() });
    }
    Ok(out)
}

/// `min(T − t, 1 − |x|)`, the viscosity solution of `−u_t + |u_x| = 1`
/// with `u(x, T) = 0` and `u(±1, t) = 0`.
pub fn exact_eikonal(x: f64, t: f64, horizon: f64) -> Result<f64> {
    if !(x.abs() <= 1.0 && (0.0..=horizon).contains(&t)) {
        return Err(Error::Config(format!("eikonal point (x={x}, t={t}) outside [-1,1] x [0,{horizon}]")));
    }
    Ok((horizon - t).min(1.0 - x.abs()))
}
