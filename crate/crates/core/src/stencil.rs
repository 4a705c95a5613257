//! Finite-difference weight kernels.
//!
//! The explicit advection–diffusion update on a uniform grid (unit space
//! and time steps) is a tridiagonal weight matrix
//!
//! ```text
//! W_ij = (D + U/2) δ_{i−1,j} + (1 − 2D) δ_{i,j} + (D − U/2) δ_{i+1,j}
//! ```
//!
//! and one layer of a linear neural chain. Its kernel moments
//! `W_k(i) = (1/k!) Σ_j W_ij ((j − i) h)^k` are the coefficients of the
//! equivalent PDE `z_t = (W_0 − 1) z + W_1 z_q + W_2 z_qq + …`. With the
//! displacement measured as `r = j − i` the stencil gives `W_1 = −U`, i.e.
//! transport towards `+q` for `U > 0`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::chain::{ChainConfig, LayerSpec};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Highest supported moment order.
pub const MAX_MOMENT_ORDER: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    /// Couplings leaving the grid are dropped.
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StencilParams {
    /// Diffusion number `D` (`κ Δt / Δx²`).
    pub diffusion: f64,
    /// Advection number `U` (`c Δt / Δx`).
    pub advection: f64,
    pub n: usize,
    pub boundary: Boundary,
}

impl StencilParams {
    pub fn new(diffusion: f64, advection: f64, n: usize, boundary: Boundary) -> Result<Self> {
        let p = Self {
            diffusion,
            advection,
            n,
            boundary,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::Config(format!("stencil grid needs at least 3 nodes, got {}", self.n)));
        }
        if !self.diffusion.is_finite() || !self.advection.is_finite() {
            return Err(Error::Config("stencil coefficients must be finite".into()));
        }
        Ok(())
    }

    /// `(sub, diag, super)` diagonal values.
    pub fn coefficients(&self) -> [f64; 3] {
        let (d, u) = (self.diffusion, self.advection);
        [d + u / 2.0, 1.0 - 2.0 * d, d - u / 2.0]
    }
}

/// Tridiagonal advection–diffusion weights.
pub fn build_adv_diff_weights(p: &StencilParams) -> Result<DenseMatrix> {
    p.validate()?;
    let n = p.n;
    let [sub, diag, sup] = p.coefficients();
    let mut w = DenseMatrix::zeros(n, n);
    for i in 0..n {
        w.set(i, i, diag);
        match p.boundary {
            Boundary::Periodic => {
                w.set(i, (i + n - 1) % n, sub);
                w.set(i, (i + 1) % n, sup);
            }
            Boundary::Dirichlet => {
                if i > 0 {
                    w.set(i, i - 1, sub);
                }
                if i + 1 < n {
                    w.set(i, i + 1, sup);
                }
            }
        }
    }
    Ok(w)
}

/// Per-node kernel moments `W_0 … W_kmax`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelMoments {
    /// `moments[k][i]` is `W_k` at node `i`.
    pub moments: Vec<Vec<f64>>,
    pub spacing: f64,
}

impl KernelMoments {
    pub fn kmax(&self) -> usize {
        self.moments.len() - 1
    }

    pub fn at(&self, node: usize) -> Vec<f64> {
        self.moments.iter().map(|m| m[node]).collect()
    }

    /// CSV rows `node,W0,…,Wkmax`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = (0..=self.kmax()).map(|k| format!("W{k}")).collect();
        writeln!(out, "node,{}", header.join(","))?;
        let n = self.moments.first().map_or(0, Vec::len);
        for i in 0..n {
            let row: Vec<String> = self.moments.iter().map(|m| format!("{:?}", m[i])).collect();
            writeln!(out, "{i},{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Signed displacement `j − i`, wrapped to the nearest periodic image.
fn displacement(i: usize, j: usize, n: usize, boundary: Boundary) -> f64 {
    let d = j as i64 - i as i64;
    match boundary {
        Boundary::Dirichlet => d as f64,
        Boundary::Periodic => {
            let n = n as i64;
            let mut d = d.rem_euclid(n);
            if d > n / 2 {
                d -= n;
            }
            d as f64
        }
    }
}

pub fn compute_kernel_moments(w: &DenseMatrix, kmax: usize, spacing: f64, boundary: Boundary) -> Result<KernelMoments> {
    if !w.is_square() {
        return Err(Error::Config("kernel moments need a square matrix".into()));
    }
    if kmax > MAX_MOMENT_ORDER {
        return Err(Error::Config(format!("kmax {kmax} exceeds {MAX_MOMENT_ORDER}")));
    }
    let n = w.rows();
    let mut moments = vec![vec![0.0; n]; kmax + 1];
    let mut factorial = 1.0;
    for (k, mk) in moments.iter_mut().enumerate() {
        if k > 0 {
            factorial *= k as f64;
        }
        for (i, m) in mk.iter_mut().enumerate() {
            let mut s = 0.0;
            for j in 0..n {
                let wij = w.get(i, j);
                if wij != 0.0 {
                    s += wij * (displacement(i, j, n, boundary) * spacing).powi(k as i32);
                }
            }
            *m = s / factorial;
        }
    }
    Ok(KernelMoments { moments, spacing })
}

/// Inverse of the three-point moment map: `(sub, diag, super)` from
/// `(W_0, W_1, W_2)` at unit spacing.
pub fn stencil_from_moments(w0: f64, w1: f64, w2: f64) -> [f64; 3] {
    [w2 - w1 / 2.0, w0 - 2.0 * w2, w2 + w1 / 2.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilityFlags {
    /// All stencil weights non-negative.
    pub positivity: bool,
    /// `D ≤ 1/2`.
    pub diffusion_number_ok: bool,
}

pub fn stability_flags(p: &StencilParams) -> StabilityFlags {
    let (d, u) = (p.diffusion, p.advection);
    StabilityFlags {
        positivity: 1.0 - 2.0 * d >= 0.0 && d >= u.abs() / 2.0,
        diffusion_number_ok: d <= 0.5,
    }
}

/// `steps` identical linear layers of the stencil at `ω = 1`.
pub fn chain_from_stencil(p: &StencilParams, steps: usize) -> Result<ChainConfig> {
    if steps == 0 {
        return Err(Error::Config("a stencil chain needs at least one step".into()));
    }
    let layer = LayerSpec::linear(build_adv_diff_weights(p)?);
    ChainConfig::new(vec![layer; steps], 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(d: f64, u: f64, n: usize) -> StencilParams {
        StencilParams::new(d, u, n, Boundary::Periodic).unwrap()
    }

    #[test]
    fn zero_coefficients_give_identity() {
        assert_eq!(build_adv_diff_weights(&params(0.0, 0.0, 5)).unwrap(), DenseMatrix::identity(5));
    }

    #[test]
    fn pure_diffusion_rows() {
        let w = build_adv_diff_weights(&params(0.25, 0.0, 6)).unwrap();
        assert_eq!(w.row(2), &[0.0, 0.25, 0.5, 0.25, 0.0, 0.0]);
        assert_eq!(w.row(0), &[0.5, 0.25, 0.0, 0.0, 0.0, 0.25]);
    }

    #[test]
    fn advection_diffusion_diagonals() {
        let w = build_adv_diff_weights(&params(0.2, 0.1, 6)).unwrap();
        assert!((w.get(3, 2) - 0.25).abs() < 1e-15);
        assert!((w.get(3, 3) - 0.6).abs() < 1e-15);
        assert!((w.get(3, 4) - 0.15).abs() < 1e-15);
    }

    #[test]
    fn dirichlet_truncates_boundary_rows() {
        let p = StencilParams::new(0.25, 0.0, 4, Boundary::Dirichlet).unwrap();
        let w = build_adv_diff_weights(&p).unwrap();
        assert_eq!(w.row(0), &[0.5, 0.25, 0.0, 0.0]);
        assert_eq!(w.row(3), &[0.0, 0.0, 0.25, 0.5]);
    }

    #[test]
    fn tiny_grid_rejected() {
        assert!(StencilParams::new(0.1, 0.0, 2, Boundary::Periodic).is_err());
    }

    #[test]
    fn identity_moments() {
        let m = compute_kernel_moments(&DenseMatrix::identity(4), 3, 1.0, Boundary::Periodic).unwrap();
        for i in 0..4 {
            assert_eq!(m.at(i), vec![1.0, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn stencil_moments_are_one_minus_u_d() {
        let (d, u) = (0.2, 0.1);
        let w = build_adv_diff_weights(&params(d, u, 8)).unwrap();
        let m = compute_kernel_moments(&w, 4, 1.0, Boundary::Periodic).unwrap();
        for i in 0..8 {
            let v = m.at(i);
            assert!((v[0] - 1.0).abs() < 1e-15);
            assert!((v[1] + u).abs() < 1e-15);
            assert!((v[2] - d).abs() < 1e-15);
            assert!((v[3] + u / 6.0).abs() < 1e-15);
        }
        let exact = compute_kernel_moments(&build_adv_diff_weights(&params(0.25, 0.0, 8)).unwrap(), 2, 1.0, Boundary::Periodic).unwrap();
        assert_eq!(exact.at(0), vec![1.0, 0.0, 0.25]);
    }

    #[test]
    fn moments_scale_linearly() {
        let w = build_adv_diff_weights(&params(0.3, -0.2, 7)).unwrap();
        let m = compute_kernel_moments(&w, 4, 0.5, Boundary::Periodic).unwrap();
        let m3 = compute_kernel_moments(&w.scale(3.0), 4, 0.5, Boundary::Periodic).unwrap();
        for k in 0..=4 {
            for i in 0..7 {
                assert!((m3.moments[k][i] - 3.0 * m.moments[k][i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn kmax_is_capped() {
        assert!(compute_kernel_moments(&DenseMatrix::identity(3), 7, 1.0, Boundary::Periodic).is_err());
    }

    #[test]
    fn stability_examples() {
        assert_eq!(
            stability_flags(&params(0.25, 0.0, 8)),
            StabilityFlags { positivity: true, diffusion_number_ok: true }
        );
        assert!(!stability_flags(&params(0.6, 0.0, 8)).diffusion_number_ok);
        assert!(!stability_flags(&params(0.1, 0.5, 8)).positivity);
    }

    #[test]
    fn unit_chain_is_identity() {
        let cfg = chain_from_stencil(&params(0.0, 0.0, 5), 1).unwrap();
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(crate::chain::chain_run(&x, &cfg, false).unwrap().0, x.to_vec());
        assert!(chain_from_stencil(&params(0.0, 0.0, 5), 0).is_err());
    }

    #[test]
    fn moments_csv() {
        let m = compute_kernel_moments(&DenseMatrix::identity(2), 2, 1.0, Boundary::Periodic).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "node,W0,W1,W2\n0,1.0,0.0,0.0\n1,1.0,0.0,0.0\n");
    }

    proptest! {
        #[test]
        fn interior_rows_conserve(d in -1.0..1.0f64, u in -1.0..1.0f64) {
            let w = build_adv_diff_weights(&params(d, u, 6)).unwrap();
            for i in 0..6 {
                let s: f64 = w.row(i).iter().sum();
                prop_assert!((s - 1.0).abs() <= 4.0 * f64::EPSILON);
            }
        }

        #[test]
        fn symmetry_structure(d in -1.0..1.0f64, u in -1.0..1.0f64) {
            prop_assert!(build_adv_diff_weights(&params(d, 0.0, 7)).unwrap().is_symmetric());
            let w = build_adv_diff_weights(&params(0.0, u, 7)).unwrap();
            // off-diagonal part antisymmetric
            for i in 0..7 {
                for j in 0..7 {
                    if i != j {
                        prop_assert_eq!(w.get(i, j), -w.get(j, i));
                    }
                }
            }
        }

        #[test]
        fn moment_map_inverts(d in -1.0..1.0f64, u in -1.0..1.0f64) {
            let p = params(d, u, 9);
            let w = build_adv_diff_weights(&p).unwrap();
            let m = compute_kernel_moments(&w, 2, 1.0, Boundary::Periodic).unwrap().at(4);
            let back = stencil_from_moments(m[0], m[1], m[2]);
            let expect = p.coefficients();
            for k in 0..3 {
                prop_assert!((back[k] - expect[k]).abs() <= 1e-14);
            }
        }
    }
}
