use crate::error::{Error, Result};
use crate::sum::{CertifiedValue, PowerSum};

use super::{DiagonalSpec, Regime, WidthResult};

/// Absolute slack, in the log domain, below which two ratios count as equal.
const LN_SLACK: f64 = 1e-15;

/// Largest index the `n*` / `n_*` scans may visit for a given `n`.
pub fn scan_cap(n: u64) -> u64 {
    10_000_000u64.max(n.saturating_mul(1000))
}

/// One regime's closed-form evaluation of `σ_n`.
pub trait WidthRegime: Send + Sync {
    fn regime(&self) -> Regime;

    fn evaluate(&self, spec: &DiagonalSpec, n: u64, tol: f64) -> Result<WidthResult>;
}

/// Regime strategies keyed by [`Regime`].
pub struct RegimeTable {
    entries: Vec<Box<dyn WidthRegime>>,
}

impl RegimeTable {
    pub fn empty() -> Self {
        RegimeTable { entries: Vec::new() }
    }

    pub fn register(&mut self, strategy: Box<dyn WidthRegime>) {
        self.entries.retain(|e| e.regime() != strategy.regime());
        self.entries.push(strategy);
    }

    pub fn get(&self, regime: Regime) -> Option<&dyn WidthRegime> {
        self.entries.iter().find(|e| e.regime() == regime).map(|e| e.as_ref())
    }

    pub fn evaluate(&self, spec: &DiagonalSpec, n: u64, tol: f64) -> Result<WidthResult> {
        let regime = spec.regime();
        self.get(regime)
            .ok_or_else(|| Error::Domain(format!("no strategy registered for regime ({regime})")))?
            .evaluate(spec, n, tol)
    }
}

impl Default for RegimeTable {
    fn default() -> Self {
        let mut t = RegimeTable::empty();
        t.register(Box::new(Supremum));
        t.register(Box::new(TailBalance));
        t.register(Box::new(FirstBlock));
        t.register(Box::new(PlainTail));
        t.register(Box::new(NextTerm));
        t
    }
}

fn result(n: u64, value: CertifiedValue, regime: Regime, achiever: Option<u64>) -> WidthResult {
    WidthResult { n, value, regime, achiever }
}

/// Running `S_m = Σ_{k≤m} λ_k^{-p}` over the terms of a source.
struct PrefixScan<'a> {
    terms: Box<dyn Iterator<Item = crate::sequence::Term> + 'a>,
    acc: PowerSum,
    neg_p: f64,
    m: u64,
}

impl<'a> PrefixScan<'a> {
    /// Positioned at `m = start` (`S_start` already accumulated).
    fn new(spec: &'a DiagonalSpec, start: u64) -> Self {
        let mut scan = PrefixScan { terms: spec.source.terms_from(1), acc: PowerSum::new(), neg_p: -spec.p.value(), m: 0 };
        while scan.m < start {
            scan.advance();
        }
        scan
    }

    /// Moves to `m + 1` and returns `λ_{m+1}`.
    fn advance(&mut self) -> crate::sequence::Term {
        let t = self.terms.next().expect("sequence sources are infinite");
        self.acc.push_pow(t.value, t.ln, self.neg_p);
        self.m += 1;
        t
    }

    fn ln_sum(&self) -> f64 {
        self.acc.ln_value()
    }
}

fn scan_ln_ratio(spec: &DiagonalSpec, n: u64, m: u64, ln_s: f64) -> f64 {
    spec.q.recip() * ((m - n) as f64).ln() - spec.p.recip() * ln_s
}

/// `ln[(m-n)^{1/q} / S_m^{1/p}]` for finite `p`.
pub fn ratio_ln(spec: &DiagonalSpec, n: u64, m: u64) -> Result<f64> {
    if spec.p.is_infinite() || m <= n {
        return Err(Error::Domain(format!("ratio needs finite p and m > n (m={m}, n={n})")));
    }
    Ok(scan_ln_ratio(spec, n, m, spec.source.ln_prefix_pow_sum(m, -spec.p.value())?))
}

/// Whether `(m-n)·λ_m^{-p} ≤ Σ_{k≤m} λ_k^{-p}` holds.
pub fn nlowerstar_holds(spec: &DiagonalSpec, n: u64, m: u64) -> Result<bool> {
    if spec.p.is_infinite() || m <= n {
        return Err(Error::Domain(format!("condition needs finite p and m > n (m={m}, n={n})")));
    }
    let ln_s = spec.source.ln_prefix_pow_sum(m, -spec.p.value())?;
    Ok(lower_condition(spec.p.value(), n, m, spec.source.ln_term_at(m), ln_s))
}

fn lower_condition(p: f64, n: u64, m: u64, ln_lambda_m: f64, ln_s: f64) -> bool {
    ((m - n) as f64).ln() - p * ln_lambda_m <= ln_s + LN_SLACK
}

struct NStarScan {
    value: CertifiedValue,
    achiever: Option<u64>,
}

/// Scans `m = n+1, n+2, …` for the first `m` with `ratio(m) ≥ ratio(m+1)`.
///
/// With `certify = Some(tol)` (only meaningful for `p = q`) the scan also
/// stops on the bound `sup_{m' ≥ m} ratio(m') ≤ max(ratio(m), λ_{m+1})`,
/// which follows from `S_{m'} ≥ S_m + (m'-m)λ_{m+1}^{-p}`.
fn scan_nstar(spec: &DiagonalSpec, n: u64, certify: Option<f64>) -> Result<NStarScan> {
    let cap = scan_cap(n);
    let constant_from = spec.source.constant_from();
    let mut scan = PrefixScan::new(spec, n + 1);
    let mut ln_r = scan_ln_ratio(spec, n, scan.m, scan.ln_sum());
    loop {
        let m = scan.m;
        let next = scan.advance();
        let ln_r_next = scan_ln_ratio(spec, n, scan.m, scan.ln_sum());
        if ln_r >= ln_r_next - LN_SLACK {
            return Ok(NStarScan { value: CertifiedValue::exact(ln_r.exp()), achiever: Some(m) });
        }
        if let Some(tol) = certify {
            // ratio(m) < λ_{m+1} here, so the bound is λ_{m+1}
            if constant_from.is_some_and(|c| c <= m + 1) {
                return Ok(NStarScan { value: CertifiedValue::exact(next.value), achiever: None });
            }
            if ln_r >= next.ln + (-tol).ln_1p() {
                return Ok(NStarScan { value: CertifiedValue::new(ln_r.exp(), next.value), achiever: None });
            }
        }
        if scan.m >= cap {
            return Err(Error::ScanBudgetExceeded { cap, lower_bound: ln_r_next.max(ln_r).exp() });
        }
        ln_r = ln_r_next;
    }
}

/// The smallest `m > n` with `ratio(m) ≥ ratio(m+1)`.
pub fn find_nstar(spec: &DiagonalSpec, n: u64) -> Result<u64> {
    let (p, q) = (spec.p, spec.q);
    let admissible = !q.is_infinite() && (p.value() < q.value() || (p == q && spec.source.tends_to_zero()));
    if !admissible {
        return Err(Error::Domain(format!(
            "n* needs 0 < p < q < inf, or p = q with a null sequence (p={p}, q={q})"
        )));
    }
    Ok(scan_nstar(spec, n, None)?.achiever.expect("uncertified scans stop at n*"))
}

struct NLowerStar {
    index: u64,
    ln_sum: f64,
}

fn scan_nlowerstar(spec: &DiagonalSpec, n: u64) -> Result<NLowerStar> {
    let cap = scan_cap(n);
    let p = spec.p.value();
    let mut scan = PrefixScan::new(spec, n);
    let mut last = NLowerStar { index: n, ln_sum: f64::NEG_INFINITY };
    loop {
        let t = scan.advance();
        let ln_s = scan.ln_sum();
        if !lower_condition(p, n, scan.m, t.ln, ln_s) {
            return Ok(last);
        }
        last = NLowerStar { index: scan.m, ln_sum: ln_s };
        if scan.m >= cap {
            return Err(Error::ScanBudgetExceeded { cap, lower_bound: 0.0 });
        }
    }
}

/// The largest `m > n` with `(m-n)·λ_m^{-p} ≤ Σ_{k≤m} λ_k^{-p}`.
pub fn find_nlowerstar(spec: &DiagonalSpec, n: u64) -> Result<u64> {
    let (p, q) = (spec.p, spec.q);
    if p.is_infinite() || q.value() >= p.value() {
        return Err(Error::Domain(format!("n_* needs 0 < q < p < inf (p={p}, q={q})")));
    }
    if !spec.source.tends_to_zero() {
        return Err(Error::Domain("n_* is infinite for sequences that do not tend to zero".into()));
    }
    Ok(scan_nlowerstar(spec, n)?.index)
}

/// `p ≤ q < ∞`: `sup_{m>n} (m-n)^{1/q} / (Σ_{k≤m} λ_k^{-p})^{1/p}`.
struct Supremum;

impl WidthRegime for Supremum {
    fn regime(&self) -> Regime {
        Regime::I
    }

    fn evaluate(&self, spec: &DiagonalSpec, n: u64, tol: f64) -> Result<WidthResult> {
        let certify = (spec.p == spec.q).then_some(tol);
        let scan = scan_nstar(spec, n, certify)?;
        Ok(result(n, scan.value, Regime::I, scan.achiever))
    }
}

/// `q < p < ∞`: `(F + Σ_{k>n_*} λ_k^α)^{1/α}` with `α = pq/(p-q)` and
/// `F = (n_*-n)^{p/(p-q)} / S_{n_*}^{q/(p-q)}`.
struct TailBalance;

impl WidthRegime for TailBalance {
    fn regime(&self) -> Regime {
        Regime::II
    }

    fn evaluate(&self, spec: &DiagonalSpec, n: u64, tol: f64) -> Result<WidthResult> {
        let (p, q) = (spec.p.value(), spec.q.value());
        let alpha = p * q / (p - q);
        if spec.source.tail_converges(alpha) == Some(false) {
            return Err(Error::Divergence {
                series: format!("sum of ({})_k^{alpha}", spec.source.descriptor()),
            });
        }
        let star = scan_nlowerstar(spec, n)?;
        let ln_f = p / (p - q) * ((star.index - n) as f64).ln() - q / (p - q) * star.ln_sum;
        let tail = spec.source.tail_pow_sum(star.index, alpha, tol * alpha.min(1.0) / 2.0)?;
        let f = ln_f.exp();
        let value = CertifiedValue::new(f + tail.lo, f + tail.hi).powf(1.0 / alpha);
        Ok(result(n, value, Regime::II, Some(star.index)))
    }
}

/// `p < q = ∞`: `(Σ_{k≤n+1} λ_k^{-p})^{-1/p}`.
struct FirstBlock;

impl WidthRegime for FirstBlock {
    fn regime(&self) -> Regime {
        Regime::III
    }

    fn evaluate(&self, spec: &DiagonalSpec, n: u64, _tol: f64) -> Result<WidthResult> {
        let p = spec.p.value();
        let acc = spec.source.prefix_accumulator(n + 1, -p)?;
        let value = match acc.value() {
            Ok(sum) if sum.is_normal() => sum.powf(-1.0 / p),
            _ => (-acc.ln_value() / p).exp(),
        };
        Ok(result(n, CertifiedValue::exact(value), Regime::III, None))
    }
}

/// `q < p = ∞`: `(Σ_{k>n} λ_k^q)^{1/q}`.
struct PlainTail;

impl WidthRegime for PlainTail {
    fn regime(&self) -> Regime {
        Regime::IV
    }

    fn evaluate(&self, spec: &DiagonalSpec, n: u64, tol: f64) -> Result<WidthResult> {
        let q = spec.q.value();
        let tail = spec.source.tail_pow_sum(n, q, tol * q.min(1.0) / 2.0)?;
        Ok(result(n, tail.powf(1.0 / q), Regime::IV, None))
    }
}

/// `p = q = ∞`: `λ_{n+1}`.
struct NextTerm;

impl WidthRegime for NextTerm {
    fn regime(&self) -> Regime {
        Regime::V
    }

    fn evaluate(&self, spec: &DiagonalSpec, n: u64, _tol: f64) -> Result<WidthResult> {
        Ok(result(n, CertifiedValue::exact(spec.source.term_at(n + 1)), Regime::V, None))
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::super::sigma_exact;
    use super::*;
    use crate::exponent::Exponent;
    use crate::sequence::{Finite, Geometric, PowerLog, SequenceSource};

    fn spec(p: f64, q: f64, src: impl SequenceSource + 'static) -> DiagonalSpec {
        let e = |v: f64| if v.is_infinite() { Exponent::INFINITY } else { Exponent::new(v).unwrap() };
        DiagonalSpec::new(e(p), e(q), Arc::new(src))
    }

    fn ones() -> Finite {
        Finite::new(vec![1.0], 1.0).unwrap()
    }

    fn harmonic() -> PowerLog {
        PowerLog::new(1.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn next_term_regime() {
        let w = sigma_exact(&spec(f64::INFINITY, f64::INFINITY, harmonic()), 2, 1e-10).unwrap();
        assert_eq!(w.value, CertifiedValue::exact(1.0 / 3.0));
        assert_eq!(w.regime, Regime::V);
    }

    #[test]
    fn unattained_supremum_for_constant_sequence() {
        let w = sigma_exact(&spec(2.0, 2.0, ones()), 5, 1e-10).unwrap();
        assert_eq!(w.value, CertifiedValue::exact(1.0));
        assert_eq!(w.achiever, None);
    }

    #[test]
    fn attained_supremum_with_nstar() {
        let s = spec(1.0, 2.0, ones());
        let w = sigma_exact(&s, 1, 1e-10).unwrap();
        assert!((w.mid() - 0.5).abs() < 1e-15);
        assert_eq!(w.achiever, Some(2));
        assert_eq!(find_nstar(&s, 1).unwrap(), 2);
        // brute-force sweep of (m-1)^{1/2}/m
        let best = (2..=100u32).map(|m| ((m - 1) as f64).sqrt() / m as f64).fold(0.0, f64::max);
        assert_eq!(best, 0.5);
    }

    #[test]
    fn tail_balance_on_geometric_sequence() {
        let s = spec(2.0, 1.0, Geometric::new(0.5, 0.5).unwrap());
        let w = sigma_exact(&s, 1, 1e-12).unwrap();
        let expected = (1.0f64 / 20.0 + 1.0 / 48.0).sqrt();
        assert!(w.value.contains(expected) || (w.mid() - expected).abs() < 1e-15, "{:?}", w);
        assert_eq!(w.achiever, Some(2));
        assert_eq!(find_nlowerstar(&s, 1).unwrap(), 2);
        assert_eq!(find_nlowerstar(&s, 7).unwrap(), 8);
    }

    #[test]
    fn first_block_and_plain_tail() {
        let w = sigma_exact(&spec(1.0, f64::INFINITY, Geometric::new(0.5, 1.0).unwrap()), 1, 1e-10).unwrap();
        assert!((w.mid() - 1.0 / 3.0).abs() < 1e-16);
        let w = sigma_exact(&spec(f64::INFINITY, 1.0, Geometric::new(0.5, 0.5).unwrap()), 3, 1e-10).unwrap();
        assert!(w.value.contains(0.125), "{:?}", w);
    }

    #[test]
    fn nstar_matches_brute_force_scan() {
        let s = spec(2.0, 4.0, Geometric::new(0.5, 0.5).unwrap());
        let brute = (2..=200u64)
            .map(|m| (m, ratio_ln(&s, 1, m).unwrap()))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        assert_eq!(find_nstar(&s, 1).unwrap(), brute.0);
    }

    #[test]
    fn divergent_regimes_report_divergence() {
        let s = spec(2.0, 1.0, PowerLog::new(0.4, 0.0, 1.0).unwrap());
        assert!(matches!(sigma_exact(&s, 5, 1e-10), Err(Error::Divergence { .. })));
        let s = spec(f64::INFINITY, 1.0, ones());
        assert!(matches!(sigma_exact(&s, 5, 1e-10), Err(Error::Divergence { .. })));
    }

    #[test]
    fn zero_terms_dropped_is_allowed() {
        let w = sigma_exact(&spec(f64::INFINITY, f64::INFINITY, harmonic()), 0, 1e-10).unwrap();
        assert_eq!(w.mid(), 1.0);
        let w = sigma_exact(&spec(2.0, 2.0, harmonic()), 0, 1e-10).unwrap();
        assert_eq!(w.mid(), 1.0);
    }

    #[test]
    fn nstar_domain_is_checked() {
        assert!(find_nstar(&spec(2.0, 2.0, ones()), 1).is_err());
        assert!(find_nstar(&spec(2.0, 1.0, harmonic()), 1).is_err());
        assert!(find_nlowerstar(&spec(1.0, 2.0, harmonic()), 1).is_err());
    }

    #[test]
    fn slowly_settling_sequence_is_certified() {
        // λ_k = 1 + 1/k² decreases to 1 and the ratio stays below 1, so p = q never stops exactly
        struct Settling;
        impl SequenceSource for Settling {
            fn name(&self) -> &str {
                "settling"
            }
            fn descriptor(&self) -> String {
                "settling".into()
            }
            fn term_at(&self, n: u64) -> f64 {
                1.0 + 1.0 / (n as f64 * n as f64)
            }
            fn tends_to_zero(&self) -> bool {
                false
            }
            fn tail_converges(&self, _e: f64) -> Option<bool> {
                Some(false)
            }
            fn tail_sum(&self, _n: u64, _e: f64, _tol: f64) -> Result<CertifiedValue> {
                unreachable!()
            }
        }
        let w = sigma_exact(&spec(1.0, 1.0, Settling), 3, 1e-6).unwrap();
        assert!(w.value.rel_width() <= 1e-6 * 1.0001);
        assert!(w.value.contains(1.0) && w.achiever.is_none());
    }
}
