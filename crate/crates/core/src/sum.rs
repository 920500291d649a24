//! Numerically careful summation: compensated power sums with an extended
//! exponent range, certified interval values, and integral-bracketed tails of
//! positive decreasing series.

use std::fmt;
use std::ops::{Add, Mul};

use serde::Serialize;

use crate::error::{Error, Result};

/// Addends whose natural log exceeds this magnitude switch the accumulator to
/// a shifted representation.
const RANGE_SWITCH: f64 = 600.0;

/// A closed interval `[lo, hi]` guaranteed to contain a quantity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CertifiedValue {
    pub lo: f64,
    pub hi: f64,
}

impl CertifiedValue {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "empty enclosure [{lo}, {hi}]");
        CertifiedValue { lo, hi }
    }

    pub fn exact(value: f64) -> Self {
        CertifiedValue { lo: value, hi: value }
    }

    /// Widens `value` by `rel` relative slack on each side.
    pub fn around(value: f64, rel: f64) -> Self {
        let pad = value.abs() * rel;
        CertifiedValue::new(value - pad, value + pad)
    }

    pub fn zero() -> Self {
        CertifiedValue::exact(0.0)
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Width relative to the lower end; infinite for a non-positive lower end
    /// with a positive width.
    pub fn rel_width(&self) -> f64 {
        let w = self.width();
        if w == 0.0 {
            0.0
        } else if self.lo > 0.0 {
            w / self.lo
        } else {
            f64::INFINITY
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Multiplication by a non-negative scalar.
    pub fn scale(self, c: f64) -> Self {
        debug_assert!(c >= 0.0);
        CertifiedValue::new(self.lo * c, self.hi * c)
    }

    /// `x ↦ x^e` for a non-negative interval and `e ≥ 0` (monotone).
    pub fn powf(self, e: f64) -> Self {
        debug_assert!(e >= 0.0 && self.lo >= 0.0);
        CertifiedValue::new(self.lo.powf(e), self.hi.powf(e))
    }

    /// Outward rounding by `rel` relative slack.
    pub fn inflate(self, rel: f64) -> Self {
        CertifiedValue::new(self.lo - self.lo.abs() * rel, self.hi + self.hi.abs() * rel)
    }
}

impl Add for CertifiedValue {
    type Output = CertifiedValue;

    fn add(self, rhs: CertifiedValue) -> CertifiedValue {
        CertifiedValue::new(self.lo + rhs.lo, self.hi + rhs.hi)
    }
}

/// Product of two non-negative intervals.
impl Mul for CertifiedValue {
    type Output = CertifiedValue;

    fn mul(self, rhs: CertifiedValue) -> CertifiedValue {
        debug_assert!(self.lo >= 0.0 && rhs.lo >= 0.0);
        CertifiedValue::new(self.lo * rhs.lo, self.hi * rhs.hi)
    }
}

impl fmt::Display for CertifiedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

/// Neumaier-compensated sum of positive terms `exp(shift) * (sum + comp)`.
///
/// Addends are accepted in the linear domain while their magnitudes stay
/// within `e^{±600}`; outside that range the accumulator moves to a shifted
/// representation so that sums like `Σ λ_k^{-p}` with huge `p·ln λ_k` never
/// overflow.
#[derive(Clone, Debug, Default)]
pub struct PowerSum {
    shift: f64,
    sum: f64,
    comp: f64,
    terms: u64,
}

impl PowerSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn terms(&self) -> u64 {
        self.terms
    }

    /// Adds `base^e`, where `ln_base = ln(base)` is supplied by the caller so
    /// that bases below the f64 range can still be raised to negative powers.
    pub fn push_pow(&mut self, base: f64, ln_base: f64, e: f64) {
        let ln_value = e * ln_base;
        if self.shift == 0.0 && ln_value.abs() <= RANGE_SWITCH && base.is_normal() {
            self.push_linear(base.powf(e));
        } else {
            self.push_ln(ln_value);
        }
    }

    /// Adds a positive value given in the linear domain.
    pub fn push_linear(&mut self, value: f64) {
        debug_assert!(value >= 0.0);
        if self.shift != 0.0 {
            self.push_ln(value.ln());
            return;
        }
        self.terms += 1;
        self.neumaier(value);
    }

    /// Adds `exp(ln_value)`.
    pub fn push_ln(&mut self, ln_value: f64) {
        if self.terms == 0 && ln_value.abs() > RANGE_SWITCH {
            self.shift = ln_value;
        }
        let mut offset = ln_value - self.shift;
        if offset > RANGE_SWITCH {
            let factor = (self.shift - ln_value).exp();
            self.sum *= factor;
            self.comp *= factor;
            self.shift = ln_value;
            offset = 0.0;
        }
        self.terms += 1;
        self.neumaier(offset.exp());
    }

    fn neumaier(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Natural log of the total; `-∞` when empty.
    pub fn ln_value(&self) -> f64 {
        self.shift + (self.sum + self.comp).ln()
    }

    /// The total in the linear domain, if representable.
    pub fn value(&self) -> Result<f64> {
        if self.shift == 0.0 {
            return Ok(self.sum + self.comp);
        }
        let v = self.ln_value().exp();
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(Error::Overflow(format!("sum with natural log {}", self.ln_value())))
        }
    }
}

/// Σ of an iterator of positive values with Neumaier compensation.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = PowerSum::new();
    for v in values {
        acc.push_linear(v);
    }
    acc.sum + acc.comp
}

/// A positive series `Σ_{k>from} g(k)` whose summand is decreasing and convex
/// on `[regular_from + 1/2, ∞)`, together with certified values of
/// `∫_x^∞ g`.
pub(crate) struct ConvexSeries<'a> {
    pub term: &'a dyn Fn(u64) -> f64,
    pub integral: &'a dyn Fn(f64) -> Result<CertifiedValue>,
    pub regular_from: u64,
}

/// Upper limit on explicitly summed terms in [`bracketed_tail`].
pub(crate) const MAX_EXPLICIT_TERMS: u64 = 200_000_000;

/// Encloses `Σ_{k>from} g(k)`.
///
/// Terms are summed explicitly up to a cutoff `K`; the remainder is bracketed
/// by the trapezoid bound `∫_{K+1}^∞ g + g(K+1)/2` from below and the midpoint
/// bound `∫_{K+1/2}^∞ g` from above, both valid for convex `g`. The cutoff
/// grows until the relative width is at most `tol`.
pub(crate) fn bracketed_tail(series: &ConvexSeries<'_>, from: u64, tol: f64) -> Result<CertifiedValue> {
    let mut partial = PowerSum::new();
    let mut k = from;
    let mut cutoff = from.max(series.regular_from);
    loop {
        while k < cutoff {
            k += 1;
            partial.push_linear((series.term)(k));
        }
        let explicit = partial.value()?;
        let next = (series.term)(cutoff + 1);
        let lower_int = (series.integral)(cutoff as f64 + 1.0)?;
        let upper_int = (series.integral)(cutoff as f64 + 0.5)?;
        let lo = explicit + lower_int.lo + 0.5 * next;
        let hi = explicit + upper_int.hi;
        // rounding in the explicit partial sum
        let enclosure = CertifiedValue::new(lo.min(hi), hi).inflate(4.0 * f64::EPSILON);
        if enclosure.rel_width() <= tol {
            return Ok(enclosure);
        }
        if lo <= 0.0 && hi <= 0.0 {
            return Err(Error::ToleranceUnreachable {
                tol,
                reason: "tail underflows the f64 range".into(),
            });
        }
        let grown = cutoff.saturating_mul(2).max(cutoff + 1024);
        if grown - from > MAX_EXPLICIT_TERMS {
            return Err(Error::ToleranceUnreachable {
                tol,
                reason: format!("bracketing still {:e} wide after {} terms", enclosure.rel_width(), cutoff - from),
            });
        }
        cutoff = grown;
    }
}

/// Certified `∫_x^∞ (1 + t^r)^{-b} dt` for `r·b > 1`, valid once
/// `x^r ≥ 2·max(b, 1)`.
///
/// Expands `(1 + t^{-r})^{-b}` binomially; under the stated condition the
/// series alternates with geometrically shrinking terms, so the first
/// omitted term bounds the remainder.
pub(crate) fn shifted_power_integral(x: f64, r: f64, b: f64) -> Result<CertifiedValue> {
    let u = x.powf(-r);
    if u.is_nan() || u * 2.0 * b.max(1.0) > 1.0 || r * b <= 1.0 {
        return Err(Error::Domain(format!(
            "binomial tail expansion needs x^r >= 2 max(b,1) and r b > 1 (x={x}, r={r}, b={b})"
        )));
    }
    let ln_base = (1.0 - r * b) * x.ln();
    let mut term = 1.0 / (r * b - 1.0);
    let mut sum = term;
    let mut i = 0.0;
    let omitted = loop {
        let next = -term * (b + i) / (i + 1.0) * u * (r * (b + i) - 1.0) / (r * (b + i + 1.0) - 1.0);
        i += 1.0;
        if next.abs() <= 1e-18 * sum.abs() {
            break next.abs();
        }
        sum += next;
        term = next;
    };
    let base = ln_base.exp();
    let pad = omitted + sum.abs() * (i + 4.0 + 2.0 * ln_base.abs()) * f64::EPSILON;
    Ok(CertifiedValue::new((sum - pad) * base, (sum + pad) * base))
}

/// Smallest integer `x ≥ 1` at which [`shifted_power_integral`] is valid.
pub(crate) fn shifted_power_regular_from(r: f64, b: f64) -> Option<u64> {
    let x = (2.0 * b.max(1.0)).powf(1.0 / r).ceil();
    (x.is_finite() && x < MAX_EXPLICIT_TERMS as f64).then_some((x as u64).max(1))
}

/// Certified `∫_x^∞ t^{-a} dt = x^{1-a}/(a-1)` for `a > 1`.
pub(crate) fn power_integral(x: f64, a: f64) -> CertifiedValue {
    CertifiedValue::around(((1.0 - a) * x.ln()).exp() / (a - 1.0), 4.0 * f64::EPSILON)
}

/// Certified `∫_x^∞ t^{-a}(1 + ln t)^c dt` for `a > 1`, `c ≥ 0`, `x ≥ 1`.
///
/// With `u = 1 + ln t` the integral is
/// `e^{a-1} (a-1)^{-(c+1)} Γ(c+1, (a-1)(1 + ln x))`.
pub(crate) fn power_log_integral(x: f64, a: f64, c: f64) -> CertifiedValue {
    if c == 0.0 {
        return power_integral(x, a);
    }
    let z = (a - 1.0) * (1.0 + x.ln());
    let shape = c + 1.0;
    let ln_prefactor = (a - 1.0) - shape * (a - 1.0).ln();
    let q = statrs::function::gamma::gamma_ur(shape, z);
    if q.is_normal() {
        let ln_value = ln_prefactor + statrs::function::gamma::ln_gamma(shape) + q.ln();
        // the incomplete gamma routine converges to ~1e-15 relative
        return CertifiedValue::around(ln_value.exp(), 1e-12);
    }
    // Γ(s, z) ∈ [z^{s-1} e^{-z}, z^{s-1} e^{-z} z/(z-s+1)] for s ≥ 1, z > s - 1.
    let ln_lower = ln_prefactor + c * z.ln() - z;
    let ln_upper = ln_lower + (z / (z - c)).ln();
    CertifiedValue::new(ln_lower.exp(), ln_upper.exp()).inflate(1e-12)
}
