//! Lebesgue exponents in `(0, ∞]` and the conventions used for their limits.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// An exponent `p ∈ (0, ∞]` of a sequence space `ℓ_p`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Exponent(f64);

impl Exponent {
    pub const INFINITY: Exponent = Exponent(f64::INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value <= 0.0 {
            return Err(Error::invalid("exponent", format!("{value} is not in (0, inf]")));
        }
        Ok(Exponent(value))
    }

    pub fn finite(value: f64) -> Result<Self> {
        let e = Self::new(value)?;
        if e.is_infinite() {
            return Err(Error::invalid("exponent", "must be finite"));
        }
        Ok(e)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// `1/p`, with `1/∞ = 0`.
    pub fn recip(self) -> f64 {
        if self.is_infinite() {
            0.0
        } else {
            1.0 / self.0
        }
    }

    /// `ln(p^{1/p}) = ln(p)/p`, continued by its limit `0` at `p = ∞`.
    pub fn ln_self_root(self) -> f64 {
        if self.is_infinite() {
            0.0
        } else {
            self.0.ln() / self.0
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Exponent::INFINITY),
            _ => {
                let v: f64 = t
                    .parse()
                    .map_err(|_| Error::invalid("exponent", format!("cannot parse `{t}`")))?;
                if v.is_infinite() {
                    return Err(Error::invalid("exponent", "spell infinity as `inf`"));
                }
                Exponent::new(v)
            }
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}
