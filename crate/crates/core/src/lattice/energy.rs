use crate::error::{Error, Result};
use crate::sum::{self, CertifiedValue, ConvexSeries, PowerSum};

use super::{check_dim, count_by_enumeration, for_each_in_box, multiplicity, WeightFamily};

/// `ω̃(k) = Π_j (1 + k_j²)^{s/2} / (1 + Σ_j k_j²)^{1/2}` with `s > 1`.
#[derive(Clone, Debug)]
pub struct Energy {
    s: f64,
    d: usize,
}

impl Energy {
    pub fn new(s: f64, d: usize) -> Result<Self> {
        if !(s > 1.0 && s.is_finite()) {
            return Err(Error::invalid("s", format!("{s} must exceed 1")));
        }
        Ok(Energy { s, d: check_dim(d)? })
    }

    /// Lower bound `(1+m²)^{(s-1)/2}` on the weight of points with `max|k_j| = m`,
    /// from `1 + |k|² ≤ Π_j (1 + k_j²)`.
    fn envelope(&self, m: u64) -> f64 {
        (((m as f64).powi(2)).ln_1p() * (self.s - 1.0) / 2.0).exp()
    }

    /// `Σ_{k∈ℤ} (1+k²)^{-b}` over all `k` and over `|k| ≤ radius`.
    fn one_dim_sums(b: f64, radius: u64, tol: f64) -> Result<(CertifiedValue, CertifiedValue)> {
        let term = |k: u64| (-b * ((k as f64).powi(2)).ln_1p()).exp();
        let mut acc = PowerSum::new();
        acc.push_linear(1.0);
        for k in 1..=radius {
            acc.push_linear(2.0 * term(k));
        }
        let inner = CertifiedValue::around(acc.value()?, 1e-13);
        let regular = sum::shifted_power_regular_from(2.0, b)
            .ok_or_else(|| Error::ToleranceUnreachable { tol, reason: "one-dimensional tail is not tractable".into() })?;
        let integral = |x: f64| sum::shifted_power_integral(x, 2.0, b);
        let series = ConvexSeries { term: &term, integral: &integral, regular_from: regular };
        let outer = sum::bracketed_tail(&series, radius, tol)?;
        Ok((inner + outer.scale(2.0), inner))
    }

    /// Bounds on `Σ_{k ∉ [-R,R]^d} Π_j (1+k_j²)^{-b}` = `F^d - F_R^d`.
    fn outside_box(&self, b: f64, radius: u64, tol: f64) -> Result<CertifiedValue> {
        let (full, inner) = Self::one_dim_sums(b, radius, tol)?;
        let d = self.d as i32;
        let diff = CertifiedValue::new(full.lo - inner.hi, full.hi - inner.lo);
        let diff = CertifiedValue::new(diff.lo.max(0.0), diff.hi.max(0.0));
        let mut mixed_powers = CertifiedValue::zero();
        for i in 0..d {
            mixed_powers = mixed_powers + full.powf(i as f64) * inner.powf((d - 1 - i) as f64);
        }
        Ok(diff * mixed_powers)
    }
}

impl WeightFamily for Energy {
    fn kind(&self) -> &str {
        "energy"
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn descriptor(&self) -> String {
        format!("energy:s={},d={}", self.s, self.d)
    }

    fn weight_abs(&self, k: &[u64]) -> f64 {
        let mut sorted = [0u64; super::MAX_DIM];
        let sorted = &mut sorted[..k.len()];
        sorted.copy_from_slice(k);
        sorted.sort_unstable();
        let mut num = 1.0;
        let mut norm2 = 0.0;
        for &j in sorted.iter() {
            let j2 = (j as f64).powi(2);
            num *= (1.0 + j2).powf(self.s / 2.0);
            norm2 += j2;
        }
        num / (1.0 + norm2).sqrt()
    }

    fn box_radius(&self, t: f64) -> Result<u64> {
        let above = |m: u64| self.envelope(m) > t * (1.0 + 1e-12);
        let mut hi = 1u64;
        while !above(hi) {
            hi = hi.checked_mul(2).ok_or_else(|| Error::Overflow("energy box radius".into()))?;
        }
        let mut lo = hi / 2;
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if above(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi - 1)
    }

    fn count_leq(&self, t: f64) -> Result<u64> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid("t", format!("{t} is not positive and finite")));
        }
        count_by_enumeration(self, t)
    }

    /// Points inside a box are summed exactly; outside it `ω̃^{-e}` lies
    /// between `Π(1+k_j²)^{-se/2}` and `Π(1+k_j²)^{-(s-1)e/2}`. The box grows
    /// until the outside bracket is within `tol`.
    fn tail_above(&self, t: f64, e: f64, tol: f64) -> Result<CertifiedValue> {
        if self.series_converges(e) != Some(true) {
            return Err(Error::Divergence { series: format!("sum of omega^(-{e}) for {}", self.descriptor()) });
        }
        let (b_lo, b_hi) = (self.s * e / 2.0, (self.s - 1.0) * e / 2.0);
        let mut radius = self.box_radius(t)?.max(8);
        loop {
            let mut inside = PowerSum::new();
            for_each_in_box(self.d, radius, &mut |k| {
                let w = self.weight_abs(k);
                if w > t {
                    inside.push_linear(multiplicity(k) as f64 * (-e * w.ln()).exp());
                }
            })?;
            let inside = CertifiedValue::around(inside.value()?, 1e-13);
            let lo = self.outside_box(b_lo, radius, tol / 4.0)?;
            let hi = self.outside_box(b_hi, radius, tol / 4.0)?;
            let total = CertifiedValue::new(inside.lo + lo.lo, inside.hi + hi.hi);
            if total.rel_width() <= tol {
                return Ok(total);
            }
            let grown = radius * 2;
            if ((grown + 1) as f64).powi(self.d as i32) > super::POINT_CAP as f64 {
                return Err(Error::ToleranceUnreachable {
                    tol,
                    reason: format!("box enumeration reached radius {radius} with relative width {:e}", total.rel_width()),
                });
            }
            radius = grown;
        }
    }

    fn series_converges(&self, e: f64) -> Option<bool> {
        Some((self.s - 1.0) * e > 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_radius_contains_every_light_point() {
        for (s, d, ts) in [(1.5, 2, &[1.0, 2.5, 10.0][..]), (2.0, 3, &[1.0, 2.5, 10.0, 60.0]), (3.0, 1, &[1.0, 60.0])] {
            let fam = Energy::new(s, d).unwrap();
            for &t in ts {
                let r = fam.box_radius(t).unwrap();
                let mut outside_light = 0;
                for_each_in_box(d, r + 6, &mut |k| {
                    if k.iter().any(|&x| x > r) && fam.weight_abs(k) <= t {
                        outside_light += 1;
                    }
                })
                .unwrap();
                assert_eq!(outside_light, 0, "s={s} d={d} t={t} r={r}");
            }
        }
    }

    #[test]
    fn one_dimensional_weights_are_square_roots() {
        let fam = Energy::new(2.0, 1).unwrap();
        for k in 0..50u64 {
            let expect = (1.0 + (k * k) as f64).sqrt();
            assert!((fam.weight_abs(&[k]) - expect).abs() <= 4.0 * f64::EPSILON * expect);
        }
        // weights 1, √2, √2, √5, √5, … so three points lie at or below √2
        assert_eq!(fam.count_leq(2f64.sqrt() * (1.0 + 1e-12)).unwrap(), 3);
    }

    #[test]
    fn tail_of_fast_energy_weight() {
        // s = 4, d = 1: ω̃ = (1+k²)^{3/2}, so Σ_{|k|>0} ω̃^{-1} = 2Σ_{k≥1}(1+k²)^{-3/2}
        let fam = Energy::new(4.0, 1).unwrap();
        let tail = fam.tail_above(1.0, 1.0, 1e-6).unwrap();
        let brute: f64 = 2.0 * (1..2_000_000u64).map(|k| (1.0 + (k as f64).powi(2)).powf(-1.5)).sum::<f64>();
        assert!(tail.lo <= brute + 1e-12 && brute <= tail.hi + 1e-12, "{tail} vs {brute}");
    }
}
