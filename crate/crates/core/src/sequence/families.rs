use crate::error::{Error, Result};
use crate::sum::{self, CertifiedValue, ConvexSeries, MAX_EXPLICIT_TERMS};

use super::SequenceSource;

fn positive(field: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::invalid(field, format!("{v} is not positive and finite")))
    }
}

/// `λ_k = c·r^{k-1}` with `0 < r ≤ 1`.
#[derive(Clone, Debug)]
pub struct Geometric {
    ratio: f64,
    scale: f64,
    ln_ratio: f64,
    ln_scale: f64,
}

impl Geometric {
    pub fn new(ratio: f64, scale: f64) -> Result<Self> {
        let ratio = positive("r", ratio)?;
        if ratio > 1.0 {
            return Err(Error::invalid("r", format!("{ratio} > 1 gives an increasing sequence")));
        }
        let scale = positive("c", scale)?;
        Ok(Geometric { ratio, scale, ln_ratio: ratio.ln(), ln_scale: scale.ln() })
    }
}

impl SequenceSource for Geometric {
    fn name(&self) -> &str {
        "geometric"
    }

    fn descriptor(&self) -> String {
        format!("geometric:r={},c={}", self.ratio, self.scale)
    }

    fn term_at(&self, n: u64) -> f64 {
        self.scale * self.ratio.powf((n - 1) as f64)
    }

    fn ln_term_at(&self, n: u64) -> f64 {
        self.ln_scale + (n - 1) as f64 * self.ln_ratio
    }

    fn tends_to_zero(&self) -> bool {
        self.ratio < 1.0
    }

    fn constant_from(&self) -> Option<u64> {
        (self.ratio == 1.0).then_some(1)
    }

    fn tail_converges(&self, e: f64) -> Option<bool> {
        Some(self.ratio < 1.0 && e > 0.0)
    }

    fn tail_sum(&self, n: u64, e: f64, _tol: f64) -> Result<CertifiedValue> {
        // c^e r^{ne} / (1 - r^e)
        let ln_value = e * self.ln_scale + n as f64 * e * self.ln_ratio - (-(e * self.ln_ratio).exp_m1()).ln();
        let value = ln_value.exp();
        Ok(CertifiedValue::around(value, (ln_value.abs() + 8.0) * 4.0 * f64::EPSILON))
    }
}

/// `λ_n = C·n^{-s}·(1 + ln n)^β`, flattened to its peak value before the
/// peak when `β > s`.
#[derive(Clone, Debug)]
pub struct PowerLog {
    s: f64,
    beta: f64,
    scale: f64,
    ln_scale: f64,
    peak: u64,
}

impl PowerLog {
    pub fn new(s: f64, beta: f64, scale: f64) -> Result<Self> {
        let s = positive("s", s)?;
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::invalid("b", format!("{beta} is not a finite value >= 0")));
        }
        let scale = positive("c", scale)?;
        let mut family = PowerLog { s, beta, scale, ln_scale: scale.ln(), peak: 1 };
        if beta > s {
            // the real maximiser solves 1 + ln x = β/s
            let x = (beta / s - 1.0).exp();
            if x >= 1e15 {
                return Err(Error::invalid("b", "peak of the sequence lies beyond 1e15"));
            }
            let lo = x.floor().max(1.0) as u64;
            family.peak = if family.raw_ln(lo + 1) > family.raw_ln(lo) { lo + 1 } else { lo };
        }
        Ok(family)
    }

    pub fn peak_index(&self) -> u64 {
        self.peak
    }

    fn raw_ln(&self, n: u64) -> f64 {
        let x = n as f64;
        let mut v = self.ln_scale - self.s * x.ln();
        if self.beta != 0.0 {
            v += self.beta * x.ln().ln_1p();
        }
        v
    }

    /// Start of the range where every power `λ(x)^e` is convex and decreasing.
    fn regular_from(&self) -> f64 {
        let x = (2.0 * self.beta / self.s - 1.0).max(0.0).exp();
        x.ceil().max(self.peak as f64)
    }
}

impl SequenceSource for PowerLog {
    fn name(&self) -> &str {
        "powerlog"
    }

    fn descriptor(&self) -> String {
        format!("powerlog:s={},b={},c={}", self.s, self.beta, self.scale)
    }

    fn term_at(&self, n: u64) -> f64 {
        let x = n.max(self.peak) as f64;
        let mut v = self.scale * x.powf(-self.s);
        if self.beta != 0.0 {
            v *= (1.0 + x.ln()).powf(self.beta);
        }
        v
    }

    fn ln_term_at(&self, n: u64) -> f64 {
        self.raw_ln(n.max(self.peak))
    }

    fn tends_to_zero(&self) -> bool {
        true
    }

    fn tail_converges(&self, e: f64) -> Option<bool> {
        Some(self.s * e > 1.0)
    }

    fn tail_sum(&self, n: u64, e: f64, tol: f64) -> Result<CertifiedValue> {
        let regular = self.regular_from();
        if regular > MAX_EXPLICIT_TERMS as f64 {
            return Err(Error::ToleranceUnreachable {
                tol,
                reason: format!("terms are only eventually convex, from index {regular:e}"),
            });
        }
        let (a, c) = (self.s * e, self.beta * e);
        let factor = (e * self.ln_scale).exp();
        let term = |k: u64| (e * self.ln_term_at(k)).exp();
        let integral = |x: f64| Ok(sum::power_log_integral(x, a, c).scale(factor));
        let series = ConvexSeries { term: &term, integral: &integral, regular_from: regular as u64 };
        sum::bracketed_tail(&series, n, tol)
    }
}

/// Explicit leading values followed by a positive constant tail.
#[derive(Clone, Debug)]
pub struct Finite {
    values: Vec<f64>,
    tail: f64,
}

impl Finite {
    pub fn new(values: Vec<f64>, tail: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("values", "at least one value required"));
        }
        for (i, &v) in values.iter().enumerate() {
            positive("values", v).map_err(|_| Error::invalid("values", format!("entry {} = {v} is not positive", i + 1)))?;
            if i > 0 && v > values[i - 1] {
                return Err(Error::invalid("values", format!("entry {} increases", i + 1)));
            }
        }
        let tail = positive("tail", tail)?;
        if tail > values[values.len() - 1] {
            return Err(Error::invalid("tail", "exceeds the last explicit value"));
        }
        Ok(Finite { values, tail })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl SequenceSource for Finite {
    fn name(&self) -> &str {
        "finite"
    }

    fn descriptor(&self) -> String {
        let vals: Vec<String> = self.values.iter().map(f64::to_string).collect();
        format!("finite:values={},tail={}", vals.join("/"), self.tail)
    }

    fn term_at(&self, n: u64) -> f64 {
        self.values.get((n - 1) as usize).copied().unwrap_or(self.tail)
    }

    fn tends_to_zero(&self) -> bool {
        false
    }

    fn constant_from(&self) -> Option<u64> {
        Some(self.values.len() as u64 + 1)
    }

    fn tail_converges(&self, _e: f64) -> Option<bool> {
        Some(false)
    }

    fn tail_sum(&self, n: u64, e: f64, _tol: f64) -> Result<CertifiedValue> {
        Err(Error::Divergence { series: format!("sum over k > {n} of ({})_k^{e}", self.descriptor()) })
    }
}
