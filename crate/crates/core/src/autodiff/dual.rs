//! Truncated second-order jets in `(x, t)`.
//!
//! A [`Dual2Scalar`] carries a value together with `∂/∂x`, `∂/∂t` and
//! `∂²/∂x²`. Mixed and `tt` derivatives are dropped: no residual needs them.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Dual2Scalar {
    pub v: f64,
    pub dx: f64,
    pub dt: f64,
    pub dxx: f64,
}

impl Dual2Scalar {
    pub const fn new(v: f64, dx: f64, dt: f64, dxx: f64) -> Self {
        Self { v, dx, dt, dxx }
    }

    pub const fn constant(v: f64) -> Self {
        Self::new(v, 0.0, 0.0, 0.0)
    }

    /// The independent variable `x`.
    pub const fn seed_x(x: f64) -> Self {
        Self::new(x, 1.0, 0.0, 0.0)
    }

    /// The independent variable `t`.
    pub const fn seed_t(t: f64) -> Self {
        Self::new(t, 0.0, 1.0, 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.dx.is_finite() && self.dt.is_finite() && self.dxx.is_finite()
    }

    pub fn scale(self, c: f64) -> Self {
        Self::new(c * self.v, c * self.dx, c * self.dt, c * self.dxx)
    }

    /// Chain rule through `f`: `out.dxx = f''(v)·dx² + f'(v)·dxx`.
    pub fn activate(self, f: Activation) -> Self {
        let [y, d1, d2, _] = f.derivatives(self.v);
        Self::new(
            y,
            d1 * self.dx,
            d1 * self.dt,
            d2 * self.dx * self.dx + d1 * self.dxx,
        )
    }
}

impl Add for Dual2Scalar {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        Self::new(self.v + b.v, self.dx + b.dx, self.dt + b.dt, self.dxx + b.dxx)
    }
}

impl Add<f64> for Dual2Scalar {
    type Output = Self;
    fn add(self, c: f64) -> Self {
        Self { v: self.v + c, ..self }
    }
}

impl Sub for Dual2Scalar {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        Self::new(self.v - b.v, self.dx - b.dx, self.dt - b.dt, self.dxx - b.dxx)
    }
}

impl Neg for Dual2Scalar {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul for Dual2Scalar {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        Self::new(
            self.v * b.v,
            self.dx * b.v + self.v * b.dx,
            self.dt * b.v + self.v * b.dt,
            self.dxx * b.v + 2.0 * self.dx * b.dx + self.v * b.dxx,
        )
    }
}

impl Mul<f64> for Dual2Scalar {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        self.scale(c)
    }
}

pub fn dual_add(a: Dual2Scalar, b: Dual2Scalar) -> Dual2Scalar {
    a + b
}

pub fn dual_mul(a: Dual2Scalar, b: Dual2Scalar) -> Dual2Scalar {
    a * b
}

pub fn dual_scale(a: Dual2Scalar, c: f64) -> Dual2Scalar {
    a.scale(c)
}

pub fn dual_activation(a: Dual2Scalar, kind: Activation) -> Dual2Scalar {
    a.activate(kind)
}

/// Pointwise activation functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Identity,
    Tanh,
    /// `x` for `x ≥ 0`, `slope·x` otherwise. The kink takes the positive branch.
    LeakyRelu { slope: f64 },
    /// `sqrt(x² + ε²) − ε`.
    AbsSmooth { eps: f64 },
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Tanh => x.tanh(),
            Activation::LeakyRelu { slope } => {
                if x >= 0.0 {
                    x
                } else {
                    slope * x
                }
            }
            Activation::AbsSmooth { eps } => (x * x + eps * eps).sqrt() - eps,
        }
    }

    /// `[f, f', f'', f''']` at `x`.
    #[inline]
    pub fn derivatives(self, x: f64) -> [f64; 4] {
        match self {
            Activation::Identity => [x, 1.0, 0.0, 0.0],
            Activation::Tanh => tanh_jet(x.tanh()),
            Activation::LeakyRelu { slope } => {
                if x >= 0.0 {
                    [x, 1.0, 0.0, 0.0]
                } else {
                    [slope * x, slope, 0.0, 0.0]
                }
            }
            Activation::AbsSmooth { eps } => {
                let s = (x * x + eps * eps).sqrt();
                let e2 = eps * eps;
                [s - eps, x / s, e2 / (s * s * s), -3.0 * e2 * x / (s * s * s * s * s)]
            }
        }
    }
}

impl Activation {
    /// Same as [`Activation::derivatives`] when the output `y = f(x)` is
    /// already known; avoids re-evaluating tanh.
    pub(crate) fn derivatives_with_output(self, x: f64, y: f64) -> [f64; 4] {
        match self {
            Activation::Tanh => tanh_jet(y),
            _ => self.derivatives(x),
        }
    }
}

fn tanh_jet(y: f64) -> [f64; 4] {
    let d1 = 1.0 - y * y;
    let d2 = -2.0 * y * d1;
    let d3 = -2.0 * d1 * d1 + 4.0 * y * y * d1;
    [y, d1, d2, d3]
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Identity => f.write_str("identity"),
            Activation::Tanh => f.write_str("tanh"),
            Activation::LeakyRelu { slope } => write!(f, "leaky_relu({slope:?})"),
            Activation::AbsSmooth { eps } => write!(f, "abs_smooth({eps:?})"),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        let bad = || Error::Config(format!("unknown activation tag `{s}`"));
        let arg = |name: &str| -> Option<Result<f64, Error>> {
            let rest = s.strip_prefix(name)?.strip_prefix('(')?.strip_suffix(')')?;
            Some(rest.trim().parse::<f64>().map_err(|_| bad()))
        };
        match s {
            "identity" | "linear" => Ok(Activation::Identity),
            "tanh" => Ok(Activation::Tanh),
            "leaky_relu" => Ok(Activation::LeakyRelu { slope: 0.01 }),
            _ => {
                if let Some(slope) = arg("leaky_relu") {
                    Ok(Activation::LeakyRelu { slope: slope? })
                } else if let Some(eps) = arg("abs_smooth") {
                    let eps = eps?;
                    if eps <= 0.0 {
                        return Err(bad());
                    }
                    Ok(Activation::AbsSmooth { eps })
                } else {
                    Err(bad())
                }
            }
        }
    }
}

impl Serialize for Activation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Activation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
