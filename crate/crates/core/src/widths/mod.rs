//! Exact best n-term widths `σ_n(T_λ: ℓ_p → ℓ_q)` of diagonal operators with
//! respect to the canonical basis.

mod finite;
mod regimes;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::sequence::SequenceSource;
use crate::sum::CertifiedValue;

pub use finite::sigma_finite;
pub use regimes::{find_nlowerstar, find_nstar, nlowerstar_holds, ratio_ln, scan_cap, RegimeTable, WidthRegime};

/// The five parameter regimes of the width formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `p ≤ q < ∞`
    I,
    /// `q < p < ∞`
    II,
    /// `p < q = ∞`
    III,
    /// `q < p = ∞`
    IV,
    /// `p = q = ∞`
    V,
}

impl Regime {
    pub fn classify(p: Exponent, q: Exponent) -> Regime {
        match (p.is_infinite(), q.is_infinite()) {
            (true, true) => Regime::V,
            (true, false) => Regime::IV,
            (false, true) => Regime::III,
            (false, false) if p.value() <= q.value() => Regime::I,
            (false, false) => Regime::II,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::I => "i",
            Regime::II => "ii",
            Regime::III => "iii",
            Regime::IV => "iv",
            Regime::V => "v",
        };
        f.write_str(s)
    }
}

/// The diagonal operator `T_λ: ℓ_p → ℓ_q`.
#[derive(Clone)]
pub struct DiagonalSpec {
    pub p: Exponent,
    pub q: Exponent,
    pub source: Arc<dyn SequenceSource>,
}

impl DiagonalSpec {
    pub fn new(p: Exponent, q: Exponent, source: Arc<dyn SequenceSource>) -> Self {
        DiagonalSpec { p, q, source }
    }

    pub fn regime(&self) -> Regime {
        Regime::classify(self.p, self.q)
    }
}

impl fmt::Debug for DiagonalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiagonalSpec")
            .field("p", &self.p)
            .field("q", &self.q)
            .field("source", &self.source.descriptor())
            .finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WidthResult {
    pub n: u64,
    pub value: CertifiedValue,
    pub regime: Regime,
    /// `n*` in regime (i) when the supremum is attained, `n_*` in regime (ii).
    pub achiever: Option<u64>,
}

impl WidthResult {
    pub fn mid(&self) -> f64 {
        self.value.mid()
    }
}

/// `σ_n` by the closed-form formula of its regime, with enclosure width at
/// most `tol` relative.
pub fn sigma_exact(spec: &DiagonalSpec, n: u64, tol: f64) -> Result<WidthResult> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::invalid("tol", format!("{tol} is not in (0, 1)")));
    }
    RegimeTable::default().evaluate(spec, n, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_is_total() {
        let inf = Exponent::INFINITY;
        let e = |v| Exponent::new(v).unwrap();
        assert_eq!(Regime::classify(e(2.0), e(2.0)), Regime::I);
        assert_eq!(Regime::classify(e(1.0), e(2.0)), Regime::I);
        assert_eq!(Regime::classify(e(2.0), e(1.0)), Regime::II);
        assert_eq!(Regime::classify(e(1.0), inf), Regime::III);
        assert_eq!(Regime::classify(inf, e(1.0)), Regime::IV);
        assert_eq!(Regime::classify(inf, inf), Regime::V);
    }
}
