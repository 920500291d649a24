use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::sum::{self, CertifiedValue, ConvexSeries, PowerSum};

use super::{check_dim, WeightFamily};

/// Relative margin separating certainly-above-threshold branches from
/// branches that need an exact check.
const PRUNE_MARGIN: f64 = 1e-9;

/// `ω_{s,r}(k) = Π_i (1 + |k_i|^r)^{s/r}`, or `Π_i max(1, |k_i|)^s` for `r = ∞`.
#[derive(Clone, Debug)]
pub struct Mixed {
    s: f64,
    r: Exponent,
    d: usize,
}

impl Mixed {
    pub fn new(s: f64, r: Exponent, d: usize) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::invalid("s", format!("{s} is not positive and finite")));
        }
        Ok(Mixed { s, r, d: check_dim(d)? })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn r(&self) -> Exponent {
        self.r
    }

    /// The one-dimensional factor `(1 + j^r)^{s/r}`.
    pub fn factor(&self, j: u64) -> f64 {
        if j == 0 {
            return 1.0;
        }
        let x = j as f64;
        if self.r.is_infinite() {
            x.powf(self.s)
        } else {
            let r = self.r.value();
            (1.0 + x.powf(r)).powf(self.s / r)
        }
    }

    /// `factor(j)^{-e}` evaluated in the log domain.
    fn factor_pow(&self, j: u64, e: f64) -> f64 {
        if j == 0 {
            return 1.0;
        }
        let x = j as f64;
        let ln = if self.r.is_infinite() { self.s * x.ln() } else { (x.powf(self.r.value())).ln_1p() * self.s / self.r.value() };
        (-e * ln).exp()
    }

    /// Largest real `j ≥ 0` with `factor(j) ≤ x`, or `None` when `x < 1`.
    fn inverse(&self, x: f64) -> Option<f64> {
        if x < 1.0 {
            return None;
        }
        Some(if self.r.is_infinite() {
            x.powf(1.0 / self.s)
        } else {
            let r = self.r.value();
            (x.powf(r / self.s) - 1.0).max(0.0).powf(1.0 / r)
        })
    }

    /// Largest `j` completing `coords` with weight `≤ t`, checked exactly
    /// against [`WeightFamily::weight_abs`].
    fn leaf_limit(&self, coords: &mut Vec<u64>, partial: f64, t: f64) -> Option<u64> {
        let guess = self.inverse(t / partial).map_or(0.0, f64::floor);
        let mut j = if guess.is_finite() && guess < 9e15 { guess as u64 } else { 9_000_000_000_000_000 };
        let fits = |coords: &mut Vec<u64>, j: u64| {
            coords.push(j);
            let w = self.weight_abs(coords);
            coords.pop();
            w <= t
        };
        while fits(coords, j + 1) {
            j += 1;
        }
        loop {
            if fits(coords, j) {
                return Some(j);
            }
            if j == 0 {
                return None;
            }
            j -= 1;
        }
    }

    fn count_rec(&self, coords: &mut Vec<u64>, partial: f64, t: f64) -> u64 {
        if coords.len() + 1 == self.d {
            return self.leaf_limit(coords, partial, t).map_or(0, |j| 1 + 2 * j);
        }
        let mut total = 0;
        for j in 0.. {
            let pj = partial * self.factor(j);
            if pj > t * (1.0 + PRUNE_MARGIN) {
                break;
            }
            coords.push(j);
            total += if j == 0 { 1 } else { 2 } * self.count_rec(coords, pj, t);
            coords.pop();
        }
        total
    }

    /// One-dimensional tails `G(J) = Σ_{j>J} factor(j)^{-e}` for `J ≤ jmax`.
    fn tail_table(&self, e: f64, jmax: u64, tol: f64) -> Result<Tail1d> {
        let beyond = self.tail_1d(jmax, e, tol)?;
        let mut table = vec![CertifiedValue::zero(); jmax as usize + 1];
        table[jmax as usize] = beyond;
        let mut acc = PowerSum::new();
        for j in (1..=jmax).rev() {
            acc.push_linear(self.factor_pow(j, e));
            let explicit = CertifiedValue::around(acc.value()?, 1e-13);
            table[j as usize - 1] = explicit + beyond;
        }
        let z = CertifiedValue::exact(1.0) + table[0].scale(2.0);
        Ok(Tail1d { table, z })
    }

    /// Certified `Σ_{j>from} factor(j)^{-e}`.
    fn tail_1d(&self, from: u64, e: f64, tol: f64) -> Result<CertifiedValue> {
        let term = |j: u64| self.factor_pow(j, e);
        if self.r.is_infinite() {
            let a = self.s * e;
            let integral = |x: f64| Ok(sum::power_integral(x, a));
            let series = ConvexSeries { term: &term, integral: &integral, regular_from: 1 };
            sum::bracketed_tail(&series, from, tol)
        } else {
            let r = self.r.value();
            let b = self.s * e / r;
            let regular = sum::shifted_power_regular_from(r, b).ok_or_else(|| Error::ToleranceUnreachable {
                tol,
                reason: "terms become convex only beyond the explicit-summation limit".into(),
            })?;
            let integral = |x: f64| sum::shifted_power_integral(x, r, b);
            let series = ConvexSeries { term: &term, integral: &integral, regular_from: regular };
            sum::bracketed_tail(&series, from, tol)
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn tail_rec(&self, coords: &mut Vec<u64>, partial: f64, mult: f64, t: f64, e: f64, g: &Tail1d, acc: &mut [PowerSum; 2]) {
        let remaining = (self.d - coords.len()) as i32;
        let scale = mult * (-e * partial.ln()).exp();
        let add = |acc: &mut [PowerSum; 2], v: CertifiedValue| {
            acc[0].push_linear(v.lo * scale);
            acc[1].push_linear(v.hi * scale);
        };
        if remaining == 1 {
            match self.leaf_limit(coords, partial, t) {
                Some(j) => add(acc, g.get(j).scale(2.0)),
                None => add(acc, g.z),
            }
            return;
        }
        for j in 0.. {
            let pj = partial * self.factor(j);
            if pj > t * (1.0 + PRUNE_MARGIN) {
                // every completion of the remaining coordinates lies above t
                let rest = g.z.powf((remaining - 1) as f64);
                if j == 0 {
                    add(acc, g.z * rest);
                } else {
                    add(acc, g.get(j - 1).scale(2.0) * rest);
                }
                return;
            }
            coords.push(j);
            let m = if j == 0 { mult } else { 2.0 * mult };
            self.tail_rec(coords, pj, m, t, e, g, acc);
            coords.pop();
        }
    }
}

struct Tail1d {
    table: Vec<CertifiedValue>,
    z: CertifiedValue,
}

impl Tail1d {
    fn get(&self, j: u64) -> CertifiedValue {
        self.table[j as usize]
    }
}

impl WeightFamily for Mixed {
    fn kind(&self) -> &str {
        "mixed"
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn descriptor(&self) -> String {
        format!("mixed:s={},r={},d={}", self.s, self.r, self.d)
    }

    fn weight_abs(&self, k: &[u64]) -> f64 {
        // sorted magnitudes make the product bit-identical under permutations
        let mut sorted = [0u64; super::MAX_DIM];
        let sorted = &mut sorted[..k.len()];
        sorted.copy_from_slice(k);
        sorted.sort_unstable();
        sorted.iter().map(|&j| self.factor(j)).product()
    }

    fn box_radius(&self, t: f64) -> Result<u64> {
        let mut coords = Vec::with_capacity(1);
        Ok(self.leaf_limit(&mut coords, 1.0, t).unwrap_or(0))
    }

    fn count_leq(&self, t: f64) -> Result<u64> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid("t", format!("{t} is not positive and finite")));
        }
        let mut coords = Vec::with_capacity(self.d);
        Ok(self.count_rec(&mut coords, 1.0, t))
    }

    fn tail_above(&self, t: f64, e: f64, tol: f64) -> Result<CertifiedValue> {
        if self.series_converges(e) != Some(true) {
            return Err(Error::Divergence { series: format!("sum of omega^(-{e}) for {}", self.descriptor()) });
        }
        let jmax = self.inverse(t * (1.0 + PRUNE_MARGIN)).map_or(0.0, f64::floor) as u64 + 64;
        let g = self.tail_table(e, jmax, tol / (4.0 * self.d as f64))?;
        let mut acc = [PowerSum::new(), PowerSum::new()];
        let mut coords = Vec::with_capacity(self.d);
        self.tail_rec(&mut coords, 1.0, 1.0, t, e, &g, &mut acc);
        Ok(CertifiedValue::new(acc[0].value()?, acc[1].value()?).inflate(1e-13))
    }

    fn series_converges(&self, e: f64) -> Option<bool> {
        Some(self.s * e > 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mixed(s: f64, r: f64, d: usize) -> Mixed {
        let r = if r.is_infinite() { Exponent::INFINITY } else { Exponent::new(r).unwrap() };
        Mixed::new(s, r, d).unwrap()
    }

    /// Brute force over the box `[-R, R]^d`.
    fn brute<F: FnMut(f64)>(m: &Mixed, radius: i64, mut f: F) {
        let d = m.dim();
        let mut k = vec![-radius; d];
        loop {
            f(m.weight(&k).unwrap());
            let mut i = 0;
            loop {
                if i == d {
                    return;
                }
                if k[i] < radius {
                    k[i] += 1;
                    break;
                }
                k[i] = -radius;
                i += 1;
            }
        }
    }

    #[test]
    fn count_matches_brute_force() {
        for (s, r, d) in [(1.0, f64::INFINITY, 2), (2.0, 2.0, 2), (0.5, 1.0, 3), (1.5, f64::INFINITY, 3)] {
            let m = mixed(s, r, d);
            for t in [0.5, 1.0, 2.0, 3.7, 9.0, 16.0, 40.0] {
                if s < 1.0 && t > 9.0 {
                    continue;
                }
                let radius = m.box_radius(t).unwrap() as i64;
                let mut expect = 0u64;
                brute(&m, radius + 1, |w| expect += (w <= t) as u64);
                assert_eq!(m.count_leq(t).unwrap(), expect, "s={s} r={r} d={d} t={t}");
            }
        }
    }

    #[test]
    fn tail_matches_truncated_brute_force() {
        for (s, r, d) in [(1.0, f64::INFINITY, 2), (1.5, 2.0, 2)] {
            let m = mixed(s, r, d);
            let e = 3.0 / s;
            for t in [0.5, 1.0, 5.0, 30.0] {
                let mut inside = 0.0;
                brute(&m, 400, |w| {
                    if w > t {
                        inside += w.powf(-e)
                    }
                });
                let tail = m.tail_above(t, e, 1e-10).unwrap();
                assert!(tail.lo >= inside * (1.0 - 1e-12), "{t}: {tail} vs {inside}");
                // outside the box: d · Z^{d-1} · 2 Σ_{j>400} j^{-3} with Z ≤ 1 + 2ζ(3)
                assert!(tail.hi - inside <= 2.0 * 3.41 * 2.0 / (2.0 * 400.0 * 400.0), "{t}: {tail} vs {inside}");
                assert!(tail.rel_width() <= 1e-10);
            }
        }
    }

    #[test]
    fn one_dimensional_total_is_zeta() {
        // Σ_{k∈ℤ} max(1,|k|)^{-2} = 1 + 2ζ(2)
        let m = mixed(1.0, f64::INFINITY, 1);
        let tail = m.tail_above(0.5, 2.0, 1e-12).unwrap();
        let exact = 1.0 + std::f64::consts::PI.powi(2) / 3.0;
        assert!(tail.contains(exact) || (tail.mid() - exact).abs() < 1e-14, "{tail}");
    }

    #[test]
    fn permutation_invariance_is_bit_exact() {
        let m = mixed(1.3, 2.5, 4);
        assert_eq!(m.weight_abs(&[3, 0, 7, 1]), m.weight_abs(&[7, 1, 0, 3]));
        assert_eq!(m.weight(&[-3, 0, 7, 1]).unwrap(), m.weight(&[1, 7, 0, 3]).unwrap());
    }
}
