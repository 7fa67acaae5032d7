//! Parameters of the N-fold symmetric spin Hamiltonian in reduced units.
//!
//! All energies are measured in units of the uniaxial constant `A`. The
//! transverse coupling enters through `lambda = 2C/A` and the longitudinal
//! field through `h = g mu_B H_z / (A S)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spin quantum number stored as the integer `2S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Spin(u32);

impl Spin {
    pub fn from_twice(two_s: i64) -> Result<Self> {
        if two_s <= 0 || two_s > u32::MAX as i64 {
            return Err(Error::InvalidSpin(two_s));
        }
        Ok(Spin(two_s as u32))
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn is_half_integer(self) -> bool {
        self.0 % 2 == 1
    }

    /// Hilbert-space dimension `2S + 1`.
    pub fn dimension(self) -> usize {
        self.0 as usize + 1
    }
}

impl FromStr for Spin {
    type Err = Error;

    /// Accepts `"10"`, `"9/2"` or `"4.5"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::SpinParse(s.to_string());
        if let Some((num, den)) = s.split_once('/') {
            let num: i64 = num.trim().parse().map_err(|_| bad())?;
            let den: i64 = den.trim().parse().map_err(|_| bad())?;
            return match den {
                1 => Spin::from_twice(2 * num),
                2 => Spin::from_twice(num),
                _ => Err(bad()),
            };
        }
        let v: f64 = s.parse().map_err(|_| bad())?;
        let twice = 2.0 * v;
        if !twice.is_finite() || twice.fract() != 0.0 {
            return Err(bad());
        }
        Spin::from_twice(twice as i64)
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinSystemParams {
    /// Order `N` of the rotational symmetry about the hard axis.
    pub symmetry: u32,
    pub spin: Spin,
    /// `lambda = 2C/A`.
    pub lambda: f64,
    /// Reduced field `h = g mu_B H_z / (A S)`.
    pub field: f64,
}

/// What the parameters are going to be used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Exact,
    Semiclassical,
}

/// Parameters that passed [`validate_params`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validated {
    pub params: SpinSystemParams,
    /// Set when `lambda S^(N-2) >= 1` was tolerated for exact diagonalization.
    pub hard_axis_warning: bool,
}

impl SpinSystemParams {
    pub fn new(symmetry: u32, spin: Spin, lambda: f64, field: f64) -> Self {
        SpinSystemParams { symmetry, spin, lambda, field }
    }

    pub fn s(&self) -> f64 {
        self.spin.value()
    }

    pub fn with_field(self, field: f64) -> Self {
        SpinSystemParams { field, ..self }
    }

    /// `lambda S^(N-2)`, the strength of the N-fold term relative to the hard axis.
    pub fn hard_axis_ratio(&self) -> f64 {
        self.lambda * self.s().powi(self.symmetry as i32 - 2)
    }

    /// `a = lambda N S^(N-2) / 2`, the modulation depth of the effective mass.
    pub fn mass_modulation(&self) -> f64 {
        0.5 * self.symmetry as f64 * self.hard_axis_ratio()
    }
}

pub fn validate_params(p: SpinSystemParams, purpose: Purpose) -> Result<Validated> {
    if p.spin.twice() == 0 {
        return Err(Error::InvalidSpin(0));
    }
    if p.symmetry < 2 {
        return Err(Error::SymmetryTooLow(p.symmetry));
    }
    if p.symmetry > p.spin.twice() {
        return Err(Error::SymmetryTooHigh { n: p.symmetry, two_s: p.spin.twice() });
    }
    if !(p.lambda > 0.0) || !p.lambda.is_finite() {
        return Err(Error::NegativeCoupling(p.lambda));
    }
    if !(p.field >= 0.0) || !p.field.is_finite() {
        return Err(Error::NegativeField(p.field));
    }
    let ratio = p.hard_axis_ratio();
    let violated = ratio >= 1.0;
    if violated && purpose == Purpose::Semiclassical {
        return Err(Error::HardAxisViolated(format!(
            "lambda S^(N-2) = {ratio} >= 1"
        )));
    }
    Ok(Validated { params: p, hard_axis_warning: violated })
}
