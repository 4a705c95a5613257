use std::f64::consts::PI;

use neuralchain::reference::{
    exact_eikonal, exact_riemann_inviscid, solve_inviscid_godunov, solve_viscous_burgers_fd, FieldSnapshot, Grid1D,
};

const NU: f64 = 0.01 / PI;

fn sine_ic(x: f64) -> f64 {
    -(PI * x).sin()
}

/// Cole–Hopf solution of the sine problem on the whole line, by trapezoidal
/// quadrature in the heat-kernel variable.
fn cole_hopf(x: f64, t: f64, nu: f64) -> f64 {
    if t == 0.0 {
        return sine_ic(x);
    }
    let width = (4.0 * nu * t).sqrt();
    let m = 40_000;
    let half = 12.0 * width;
    let h = 2.0 * half / m as f64;
    let expo = |eta: f64| -(PI * (x - eta)).cos() / (2.0 * PI * nu) - eta * eta / (4.0 * nu * t);
    let peak = (0..=m).map(|k| expo(-half + k as f64 * h)).fold(f64::NEG_INFINITY, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..=m {
        let eta = -half + k as f64 * h;
        let w = if k == 0 || k == m { 0.5 } else { 1.0 } * (expo(eta) - peak).exp();
        num += (PI * (x - eta)).sin() * w;
        den += w;
    }
    -num / den
}

fn viscous_dt(grid: &Grid1D) -> f64 {
    (0.2 * grid.dx * grid.dx / NU).min(0.4 * grid.dx)
}

fn viscous_at(n: usize, t: f64) -> (Grid1D, FieldSnapshot) {
    let g = Grid1D::new(-1.0, 1.0, n).unwrap();
    let s = solve_viscous_burgers_fd(sine_ic, NU, &g, viscous_dt(&g), &[t]).unwrap().remove(0);
    (g, s)
}

#[test]
fn heat_limit_matches_sine_decay() {
    let amp = 1e-8;
    let g = Grid1D::new(-1.0, 1.0, 512).unwrap();
    let t = 1.0;
    let s = solve_viscous_burgers_fd(|x| amp * sine_ic(x), NU, &g, 1e-3, &[t]).unwrap().remove(0);
    let decay = (-NU * PI * PI * t).exp();
    let err = g
        .points()
        .iter()
        .zip(&s.values)
        .map(|(&x, &u)| (u - amp * decay * sine_ic(x)).abs())
        .fold(0.0, f64::max);
    assert!(err / (amp * decay) <= 1e-3, "relative error {}", err / (amp * decay));
}

#[test]
fn viscous_self_convergence_at_t03() {
    let (gc, coarse) = viscous_at(512, 0.3);
    let (gf, fine) = viscous_at(2048, 0.3);
    let diff = gc
        .points()
        .iter()
        .zip(&coarse.values)
        .map(|(&x, &u)| (u - fine.sample(&gf, x).unwrap()).abs())
        .fold(0.0, f64::max);
    assert!(diff <= 1e-3, "N=512 vs N=2048 differ by {diff}");
}

#[test]
fn viscous_refinement_against_cole_hopf() {
    let mut errors = Vec::new();
    for n in [128, 256, 512, 1024] {
        let (g, s) = viscous_at(n, 0.3);
        let err = g
            .points()
            .iter()
            .zip(&s.values)
            .step_by(n / 64)
            .map(|(&x, &u)| (u - cole_hopf(x, 0.3, NU)).abs())
            .fold(0.0, f64::max);
        errors.push(err);
    }
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    assert!(errors[2] < 5e-4, "{errors:?}");
}

#[test]
fn viscous_maximum_principle() {
    let g = Grid1D::new(-1.0, 1.0, 256).unwrap();
    let snaps = solve_viscous_burgers_fd(sine_ic, NU, &g, viscous_dt(&g), &[0.1, 0.3, 0.6, 1.0]).unwrap();
    for s in snaps {
        assert!(s.values.iter().all(|&u| (-1.0..=1.0).contains(&u)), "t = {}", s.t);
    }
}

fn riemann_ic(x: f64) -> f64 {
    if x < 0.5 {
        1.0
    } else {
        0.0
    }
}

#[test]
fn godunov_mass_balance_on_riemann_problem() {
    // Boundary fluxes are 1/2 (left, u = 1) and 0 (right, u = 0) until the
    // shock reaches x = 1.
    let g = Grid1D::new(0.0, 1.0, 200).unwrap();
    let mass = |v: &[f64]| v[1..v.len() - 1].iter().sum::<f64>() * g.dx;
    let u0: Vec<f64> = g.points().into_iter().map(riemann_ic).collect();
    let s = solve_inviscid_godunov(riemann_ic, &g, 0.8, &[0.3]).unwrap().remove(0);
    assert!((mass(&s.values) - mass(&u0) - 0.15).abs() < 1e-12);
}

#[test]
fn godunov_shock_position_and_refinement() {
    let mut l1 = Vec::new();
    for n in [128, 256, 512, 1024] {
        let g = Grid1D::new(0.0, 1.0, n).unwrap();
        let s = solve_inviscid_godunov(riemann_ic, &g, 0.9, &[0.3]).unwrap().remove(0);
        let i = s.values.iter().position(|&u| u < 0.5).unwrap();
        assert!((g.x(i) - 0.65).abs() <= g.dx, "N={n}: shock at {}", g.x(i));
        let e: f64 = g.points().iter().zip(&s.values).map(|(&x, &u)| (u - exact_riemann_inviscid(x, 0.3)).abs()).sum();
        l1.push(e * g.dx);
    }
    assert!(l1.windows(2).all(|w| w[1] < w[0]), "{l1:?}");
}

#[test]
fn godunov_preserves_bounds() {
    let g = Grid1D::new(0.0, 1.0, 300).unwrap();
    let s = solve_inviscid_godunov(riemann_ic, &g, 0.9, &[0.2, 0.6]).unwrap();
    assert!(s.iter().all(|s| s.values.iter().all(|&u| (0.0..=1.0).contains(&u))));
}

#[test]
fn eikonal_residual_on_both_branches() {
    let h = 1e-6;
    for &(x, t) in &[(0.1, 0.3), (-0.2, 0.5), (0.9, 0.3), (-0.85, 0.1), (0.5, 0.7)] {
        let u = |x: f64, t: f64| exact_eikonal(x, t, 1.0).unwrap();
        let ut = (u(x, t + h) - u(x, t - h)) / (2.0 * h);
        let ux = (u(x + h, t) - u(x - h, t)) / (2.0 * h);
        assert!((-ut + ux.abs() - 1.0).abs() < 1e-8, "({x}, {t})");
    }
}

#[test]
fn eikonal_matches_upwind_sweep() {
    // Backward march of u_s + |u_x| = 1 in s = T − t with the Godunov
    // Hamiltonian max(p⁻⁺, −p⁺⁻), at a Courant number just below one.
    let n = 1024;
    let g = Grid1D::new(-1.0, 1.0, n).unwrap();
    let target_s = 0.7;
    let steps = (target_s / g.dx).ceil() as usize;
    let ds = target_s / steps as f64;
    let mut u = vec![0.0; n];
    let mut next = u.clone();
    for _ in 0..steps {
        for i in 1..n - 1 {
            let pm = (u[i] - u[i - 1]) / g.dx;
            let pp = (u[i + 1] - u[i]) / g.dx;
            let ham = pm.max(0.0).max(-pp.min(0.0));
            next[i] = u[i] + ds * (1.0 - ham);
        }
        std::mem::swap(&mut u, &mut next);
    }
    let err = g.points().iter().zip(&u).map(|(&x, &v)| (v - exact_eikonal(x, 0.3, 1.0).unwrap()).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-3, "sweep disagreement {err}");
}
