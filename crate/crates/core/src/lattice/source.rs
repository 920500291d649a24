use std::sync::{Arc, Mutex, MutexGuard};

use crate::error::{Error, Result};
use crate::sequence::{SequenceSource, Term};
use crate::sum::CertifiedValue;

use super::{OrbitStream, WeightFamily};

/// Runs of equal weights: `(weight, number of points with weight ≤ this one)`.
struct Runs {
    stream: OrbitStream,
    runs: Vec<(f64, u64)>,
}

impl Runs {
    fn total(&self) -> u64 {
        self.runs.last().map_or(0, |r| r.1)
    }

    fn pull(&mut self) {
        let orbit = self.stream.next().expect("orbit streams are infinite");
        match self.runs.last_mut() {
            Some(last) if last.0 == orbit.weight => last.1 += orbit.multiplicity,
            _ => {
                let total = self.total();
                self.runs.push((orbit.weight, total + orbit.multiplicity));
            }
        }
    }

    /// Makes the run holding index `n` complete: every point of that weight
    /// has been counted.
    fn ensure(&mut self, n: u64) -> usize {
        while self.total() < n {
            self.pull();
        }
        let idx = self.runs.partition_point(|r| r.1 < n);
        while idx + 1 == self.runs.len() && self.stream.peek_weight() == Some(self.runs[idx].0) {
            self.pull();
        }
        idx
    }
}

/// `λ_n = 1/ω_(n)`, the non-increasing rearrangement of `1/ω(k)` over `ℤ^d`.
///
/// Weights are generated lazily and cached as runs of equal values; the
/// cache sits behind a mutex so the source can be shared across threads.
pub struct LatticeSource {
    family: Arc<dyn WeightFamily>,
    cache: Mutex<Runs>,
}

impl LatticeSource {
    pub fn new(family: Arc<dyn WeightFamily>) -> Self {
        let stream = OrbitStream::new(family.clone());
        LatticeSource { family, cache: Mutex::new(Runs { stream, runs: Vec::new() }) }
    }

    pub fn family(&self) -> &Arc<dyn WeightFamily> {
        &self.family
    }

    fn cache(&self) -> MutexGuard<'_, Runs> {
        self.cache.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    /// `ω_(n)`, the `n`-th smallest weight.
    pub fn weight_at(&self, n: u64) -> f64 {
        let mut c = self.cache();
        let idx = c.ensure(n.max(1));
        c.runs[idx].0
    }

    /// `(ω_(n), #{k : ω(k) ≤ ω_(n)})`.
    fn weight_and_count(&self, n: u64) -> (f64, u64) {
        let mut c = self.cache();
        let idx = c.ensure(n);
        c.runs[idx]
    }
}

struct RunIter<'a> {
    source: &'a LatticeSource,
    index: u64,
    run_end: u64,
    weight: f64,
    ln: f64,
}

impl Iterator for RunIter<'_> {
    type Item = Term;

    fn next(&mut self) -> Option<Term> {
        if self.index > self.run_end {
            let (w, end) = self.source.weight_and_count(self.index);
            self.weight = w;
            self.ln = -w.ln();
            self.run_end = end;
        }
        let t = Term { index: self.index, value: 1.0 / self.weight, ln: self.ln };
        self.index += 1;
        Some(t)
    }
}

impl SequenceSource for LatticeSource {
    fn name(&self) -> &str {
        "lattice"
    }

    fn descriptor(&self) -> String {
        format!("lattice:{}", self.family.descriptor())
    }

    fn term_at(&self, n: u64) -> f64 {
        1.0 / self.weight_at(n)
    }

    fn ln_term_at(&self, n: u64) -> f64 {
        -self.weight_at(n).ln()
    }

    fn terms_from(&self, start: u64) -> Box<dyn Iterator<Item = Term> + '_> {
        Box::new(RunIter { source: self, index: start.max(1), run_end: 0, weight: 1.0, ln: 0.0 })
    }

    fn tends_to_zero(&self) -> bool {
        true
    }

    fn tail_converges(&self, e: f64) -> Option<bool> {
        self.family.series_converges(e)
    }

    /// `Σ_{k>n} λ_k^e = (N(T) - n)·T^{-e} + Σ_{ω>T} ω^{-e}` with `T = ω_(n)`
    /// and `N(T)` the number of points of weight at most `T`.
    fn tail_sum(&self, n: u64, e: f64, tol: f64) -> Result<CertifiedValue> {
        if n == 0 {
            return self.family.tail_above(0.0, e, tol);
        }
        let (t, count) = self.weight_and_count(n);
        let ties = (count - n) as f64 * (-e * t.ln()).exp();
        let above = self.family.tail_above(t, e, tol)?;
        if above.lo < 0.0 {
            return Err(Error::Domain("negative tail enclosure".into()));
        }
        Ok(CertifiedValue::exact(ties) + above)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::Exponent;
    use crate::lattice::{nth_smallest_weight, Energy, Mixed};

    fn mixed(s: f64, r: Exponent, d: usize) -> Arc<dyn WeightFamily> {
        Arc::new(Mixed::new(s, r, d).unwrap())
    }

    #[test]
    fn documented_rearrangements() {
        let src = LatticeSource::new(mixed(1.0, Exponent::INFINITY, 1));
        let head: Vec<f64> = (1..=5).map(|n| src.term_at(n)).collect();
        assert_eq!(head, vec![1.0, 1.0, 1.0, 0.5, 0.5]);

        let src = LatticeSource::new(mixed(2.0, Exponent::INFINITY, 2));
        assert!((1..=9).all(|n| src.term_at(n) == 1.0));
        assert!((10..=21).all(|n| src.term_at(n) == 0.25));
        assert_eq!(src.term_at(22), 1.0 / 9.0);

        let src = LatticeSource::new(Arc::new(Energy::new(2.0, 1).unwrap()));
        assert_eq!(src.term_at(2), src.term_at(3));
        assert!((src.term_at(2) - 0.5f64.sqrt()).abs() < 1e-16);
    }

    #[test]
    fn terms_from_matches_term_at() {
        let src = LatticeSource::new(mixed(1.0, Exponent::new(2.0).unwrap(), 2));
        for (t, n) in src.terms_from(37).take(500).zip(37..) {
            assert_eq!(t.index, n);
            assert_eq!(t.value, src.term_at(n));
        }
    }

    #[test]
    fn tail_splits_ties_from_strict_tail() {
        // d = 1, s = 1, r = ∞: λ = 1,1,1,1/2,1/2,1/3,1/3,…; Σ_{k>4} λ_k² = 1/4 + 2(ζ(2) - 1 - 1/4)
        let src = LatticeSource::new(mixed(1.0, Exponent::INFINITY, 1));
        let tail = src.tail_pow_sum(4, 2.0, 1e-11).unwrap();
        let exact = 0.25 + 2.0 * (std::f64::consts::PI.powi(2) / 6.0 - 1.25);
        assert!(tail.contains(exact) || (tail.mid() - exact).abs() < 1e-14, "{tail} vs {exact}");
        let whole = src.tail_pow_sum(0, 2.0, 1e-11).unwrap();
        assert!((whole.mid() - (1.0 + std::f64::consts::PI.powi(2) / 3.0)).abs() < 1e-10);
    }

    #[test]
    fn term_times_weight_is_one() {
        let fam = mixed(1.5, Exponent::new(2.0).unwrap(), 2);
        let src = LatticeSource::new(fam.clone());
        for n in [1, 2, 10, 100, 1000, 5000] {
            let w = nth_smallest_weight(fam.clone(), n).unwrap();
            assert_eq!(w, src.weight_at(n));
            assert!((src.term_at(n) * w - 1.0).abs() <= f64::EPSILON);
        }
    }
}
