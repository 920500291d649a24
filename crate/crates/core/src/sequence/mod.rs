//! Positive non-increasing sequences `λ = (λ_k)_{k≥1}` with prefix and tail
//! power sums.

mod families;
mod registry;

use std::fmt;
use std::sync::Arc;

pub use families::{Finite, Geometric, PowerLog};
pub use registry::{SequenceFamily, SequenceRegistry};

use crate::error::{Error, Result};
use crate::sum::{CertifiedValue, PowerSum};

/// Default relative tolerance for certified tail sums.
pub const DEFAULT_TOL: f64 = 1e-10;

/// One term of a sequence together with its natural log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term {
    pub index: u64,
    pub value: f64,
    pub ln: f64,
}

/// A positive, non-increasing sequence indexed from 1.
///
/// Implementors provide unchecked term access and an analytic or certified
/// tail rule; validation and the power-sum accumulation are provided.
pub trait SequenceSource: Send + Sync {
    /// Short family name, e.g. `geometric`.
    fn name(&self) -> &str;

    /// A descriptor that rebuilds this source through [`SequenceRegistry`].
    fn descriptor(&self) -> String;

    /// `λ_n` for `n ≥ 1`.
    fn term_at(&self, n: u64) -> f64;

    /// `ln λ_n`; finite even when `λ_n` underflows.
    fn ln_term_at(&self, n: u64) -> f64 {
        self.term_at(n).ln()
    }

    /// Terms `λ_start, λ_{start+1}, …` in order.
    fn terms_from(&self, start: u64) -> Box<dyn Iterator<Item = Term> + '_> {
        Box::new((start.max(1)..).map(move |k| Term { index: k, value: self.term_at(k), ln: self.ln_term_at(k) }))
    }

    fn tends_to_zero(&self) -> bool;

    /// An index from which the sequence is known to be constant.
    fn constant_from(&self) -> Option<u64> {
        None
    }

    /// Whether `Σ λ_k^e` converges, when the family can decide it.
    fn tail_converges(&self, e: f64) -> Option<bool>;

    /// Enclosure of `Σ_{k>n} λ_k^e`; called only after convergence checks.
    fn tail_sum(&self, n: u64, e: f64, tol: f64) -> Result<CertifiedValue>;

    fn term(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::IndexZero);
        }
        Ok(self.term_at(n))
    }

    /// `Σ_{k=1}^m λ_k^e`, compensated and overflow-safe.
    fn prefix_pow_sum(&self, m: u64, e: f64) -> Result<f64> {
        self.prefix_accumulator(m, e)?.value()
    }

    /// `ln Σ_{k=1}^m λ_k^e`, finite wherever the log of the sum is.
    fn ln_prefix_pow_sum(&self, m: u64, e: f64) -> Result<f64> {
        Ok(self.prefix_accumulator(m, e)?.ln_value())
    }

    fn prefix_accumulator(&self, m: u64, e: f64) -> Result<PowerSum> {
        if m == 0 {
            return Err(Error::IndexZero);
        }
        let mut acc = PowerSum::new();
        for t in self.terms_from(1).take(m as usize) {
            acc.push_pow(t.value, t.ln, e);
        }
        Ok(acc)
    }

    /// Certified `Σ_{k>n} λ_k^e` with relative width at most `tol`.
    fn tail_pow_sum(&self, n: u64, e: f64, tol: f64) -> Result<CertifiedValue> {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::invalid("tol", format!("{tol} is not in (0, 1)")));
        }
        if !(e > 0.0 && e.is_finite()) || self.tail_converges(e) == Some(false) {
            return Err(Error::Divergence {
                series: format!("sum over k > {n} of ({})_k^{e}", self.descriptor()),
            });
        }
        self.tail_sum(n, e, tol)
    }
}

impl fmt::Debug for dyn SequenceSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.descriptor())
    }
}

/// `c·λ` for a positive constant `c`.
pub struct Scaled {
    inner: Arc<dyn SequenceSource>,
    factor: f64,
    ln_factor: f64,
}

impl Scaled {
    pub fn new(inner: Arc<dyn SequenceSource>, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::invalid("factor", format!("{factor} is not positive and finite")));
        }
        Ok(Scaled { inner, factor, ln_factor: factor.ln() })
    }
}

impl SequenceSource for Scaled {
    fn name(&self) -> &str {
        "scaled"
    }

    fn descriptor(&self) -> String {
        format!("{}*({})", self.factor, self.inner.descriptor())
    }

    fn term_at(&self, n: u64) -> f64 {
        self.factor * self.inner.term_at(n)
    }

    fn ln_term_at(&self, n: u64) -> f64 {
        self.ln_factor + self.inner.ln_term_at(n)
    }

    fn terms_from(&self, start: u64) -> Box<dyn Iterator<Item = Term> + '_> {
        Box::new(self.inner.terms_from(start).map(move |t| Term {
            index: t.index,
            value: self.factor * t.value,
            ln: self.ln_factor + t.ln,
        }))
    }

    fn tends_to_zero(&self) -> bool {
        self.inner.tends_to_zero()
    }

    fn constant_from(&self) -> Option<u64> {
        self.inner.constant_from()
    }

    fn tail_converges(&self, e: f64) -> Option<bool> {
        self.inner.tail_converges(e)
    }

    fn tail_sum(&self, n: u64, e: f64, tol: f64) -> Result<CertifiedValue> {
        let c = (e * self.ln_factor).exp();
        Ok(self.inner.tail_sum(n, e, tol)?.scale(c))
    }
}
