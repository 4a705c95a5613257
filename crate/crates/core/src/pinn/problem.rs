//! The three 1-D learning problems.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    /// `u_t + u u_x = ν u_xx` on `[−1, 1] × [0, 1]`, `u(x, 0) = −sin(πx)`.
    ViscousBurgers,
    /// `u_t + u u_x = 0` on `[0, 1] × [0, 1]` with a Riemann step at `x = 0.5`.
    InviscidBurgers,
    /// `−u_t + |u_x| = 1` on `[−1, 1] × [0, T]`, `u(x, T) = 0`, `u(±1, t) = 0`.
    Eikonal,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 3] = [
        ProblemKind::ViscousBurgers,
        ProblemKind::InviscidBurgers,
        ProblemKind::Eikonal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::ViscousBurgers => "viscous-burgers",
            ProblemKind::InviscidBurgers => "inviscid-burgers",
            ProblemKind::Eikonal => "eikonal",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ProblemKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown problem `{s}`")))
    }
}

/// Where a condition is imposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    Initial,
    Terminal,
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub x_range: (f64, f64),
    pub t_range: (f64, f64),
    /// Viscosity; only meaningful for the viscous problem.
    pub nu: f64,
}

impl ProblemSpec {
    pub fn viscous_burgers() -> Self {
        Self {
            kind: ProblemKind::ViscousBurgers,
            x_range: (-1.0, 1.0),
            t_range: (0.0, 1.0),
            nu: 0.01 / PI,
        }
    }

    pub fn inviscid_burgers() -> Self {
        Self {
            kind: ProblemKind::InviscidBurgers,
            x_range: (0.0, 1.0),
            t_range: (0.0, 1.0),
            nu: 0.0,
        }
    }

    pub fn eikonal() -> Self {
        Self {
            kind: ProblemKind::Eikonal,
            x_range: (-1.0, 1.0),
            t_range: (0.0, 1.0),
            nu: 0.0,
        }
    }

    pub fn for_kind(kind: ProblemKind) -> Self {
        match kind {
            ProblemKind::ViscousBurgers => Self::viscous_burgers(),
            ProblemKind::InviscidBurgers => Self::inviscid_burgers(),
            ProblemKind::Eikonal => Self::eikonal(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && b > a;
        if !ok(self.x_range) || !ok(self.t_range) {
            return Err(Error::Config("problem intervals must be finite and non-degenerate".into()));
        }
        if self.nu < 0.0 || !self.nu.is_finite() {
            return Err(Error::Config("viscosity must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Final time of the eikonal problem, start time of the others.
    pub fn condition_time(&self) -> f64 {
        match self.kind {
            ProblemKind::Eikonal => self.t_range.1,
            _ => self.t_range.0,
        }
    }

    /// The time-slice condition: initial for Burgers, terminal for eikonal.
    pub fn time_condition_kind(&self) -> ConditionKind {
        match self.kind {
            ProblemKind::Eikonal => ConditionKind::Terminal,
            _ => ConditionKind::Initial,
        }
    }

    /// Prescribed `u` on the initial/terminal slice.
    pub fn time_condition(&self, x: f64) -> f64 {
        match self.kind {
            ProblemKind::ViscousBurgers => -(PI * x).sin(),
            ProblemKind::InviscidBurgers => riemann_initial(x),
            ProblemKind::Eikonal => 0.0,
        }
    }

    /// Prescribed `u` at the left (`false`) or right (`true`) boundary.
    pub fn boundary_value(&self, right: bool) -> f64 {
        match (self.kind, right) {
            (ProblemKind::InviscidBurgers, false) => 1.0,
            _ => 0.0,
        }
    }

    pub fn contains(&self, x: f64, t: f64) -> bool {
        (self.x_range.0..=self.x_range.1).contains(&x) && (self.t_range.0..=self.t_range.1).contains(&t)
    }
}

/// `1` for `x < 0.5`, `0` otherwise.
pub fn riemann_initial(x: f64) -> f64 {
    if x < 0.5 {
        1.0
    } else {
        0.0
    }
}
