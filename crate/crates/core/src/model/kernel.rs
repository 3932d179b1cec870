use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Pairing rate `w(r - r')` as a function of the rating gap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InteractionKernel {
    /// `w = 1`: every pair of teams is equally likely to meet.
    AllPlayAll,
    /// `w = 1` if `|r - r'| <= c`, else `0`.
    Indicator { c: f64 },
    /// `w = exp(ln 2 / (1 + x^2)) - 1`, peaking at `1` for `x = 0`.
    SmoothBump,
}

impl InteractionKernel {
    pub fn indicator(c: f64) -> Result<Self> {
        if c.is_finite() && c > 0.0 {
            Ok(Self::Indicator { c })
        } else {
            Err(Error::Config(format!(
                "indicator width must be positive, got {c}"
            )))
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::AllPlayAll => 1.0,
            Self::Indicator { c } => {
                if x.abs() <= c {
                    1.0
                } else {
                    0.0
                }
            }
            Self::SmoothBump => (LN_2 / (1.0 + x * x)).exp_m1(),
        }
    }

    /// Supremum of `w` over the real line.
    pub fn max(&self) -> f64 {
        match *self {
            Self::Indicator { c } if c <= 0.0 => 0.0,
            _ => 1.0,
        }
    }

    /// Infimum of `w` over gaps `|x| <= half_width`.
    pub fn min_on(&self, half_width: f64) -> f64 {
        let d = half_width.abs();
        match *self {
            Self::AllPlayAll => 1.0,
            Self::Indicator { c } => {
                if d <= c {
                    1.0
                } else {
                    0.0
                }
            }
            Self::SmoothBump => self.eval(d),
        }
    }

    pub fn is_all_play_all(&self) -> bool {
        matches!(self, Self::AllPlayAll)
    }
}

impl fmt::Display for InteractionKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::AllPlayAll => write!(f, "all"),
            Self::Indicator { c } => write!(f, "indicator:{c}"),
            Self::SmoothBump => write!(f, "bump"),
        }
    }
}

impl FromStr for InteractionKernel {
    type Err = Error;

    /// Parses `all`, `bump` or `indicator:<c>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "all" => Ok(Self::AllPlayAll),
            "bump" => Ok(Self::SmoothBump),
            other => {
                let c = other
                    .strip_prefix("indicator:")
                    .ok_or_else(|| Error::Config(format!("unknown kernel `{other}`")))?;
                let c: f64 = c
                    .parse()
                    .map_err(|_| Error::Config(format!("bad indicator width `{c}`")))?;
                Self::indicator(c)
            }
        }
    }
}
