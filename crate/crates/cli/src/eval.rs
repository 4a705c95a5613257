//! Model evaluation against the reference solutions.

use neuralchain::analysis::{error_norms, ErrorReport};
use neuralchain::pinn::{pinn_predict_batch, ProblemKind, ProblemSpec, TrainedModel};
use neuralchain::reference::{exact_eikonal, exact_riemann_inviscid, solve_viscous_burgers_fd, Grid1D};
use neuralchain::Result;

use crate::config::{EvaluationConfig, ReferenceConfig};

/// `n` uniform points spanning the problem's x-interval.
pub fn evaluation_grid(problem: &ProblemSpec, n: usize) -> Vec<f64> {
    let (a, b) = problem.x_range;
    (0..n)
        .map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 })
        .collect()
}

/// Stable default step of the viscous reference solver.
pub fn default_viscous_dt(grid: &Grid1D, nu: f64) -> f64 {
    let diffusive = if nu > 0.0 { 0.2 * grid.dx * grid.dx / nu } else { f64::INFINITY };
    diffusive.min(0.4 * grid.dx)
}

/// Reference solution at `t` on the points `xs`.
pub fn reference_values(problem: &ProblemSpec, cfg: &ReferenceConfig, xs: &[f64], t: f64) -> Result<Vec<f64>> {
    match problem.kind {
        ProblemKind::ViscousBurgers => {
            let grid = Grid1D::new(problem.x_range.0, problem.x_range.1, cfg.n)?;
            let dt = cfg.dt.unwrap_or_else(|| default_viscous_dt(&grid, problem.nu));
            let p = problem.clone();
            let snap = solve_viscous_burgers_fd(|x| p.time_condition(x), problem.nu, &grid, dt, &[t])?.remove(0);
            Ok(xs
                .iter()
                .map(|&x| snap.sample(&grid, x).expect("evaluation point inside the reference grid"))
                .collect())
        }
        ProblemKind::InviscidBurgers => Ok(xs.iter().map(|&x| exact_riemann_inviscid(x, t)).collect()),
        ProblemKind::Eikonal => xs.iter().map(|&x| exact_eikonal(x, t, problem.t_range.1)).collect(),
    }
}

pub struct Evaluation {
    pub x: Vec<f64>,
    pub t: f64,
    pub u: Vec<f64>,
    pub u_ref: Vec<f64>,
    pub report: ErrorReport,
}

pub fn evaluate(model: &TrainedModel, reference: &ReferenceConfig, eval: &EvaluationConfig) -> Result<Evaluation> {
    let x = evaluation_grid(&model.problem, eval.n_points);
    let points: Vec<(f64, f64)> = x.iter().map(|&x| (x, eval.time)).collect();
    let u = pinn_predict_batch(model, &points)?;
    let u_ref = reference_values(&model.problem, reference, &x, eval.time)?;
    let report = error_norms(&u, &u_ref)?.at_time(eval.time);
    Ok(Evaluation {
        x,
        t: eval.time,
        u,
        u_ref,
        report,
    })
}
