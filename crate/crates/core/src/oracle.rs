//! Direct evaluation of `σ_n` on truncated diagonal operators: the error of
//! a given coefficient vector, extremal vectors, ball sampling and a small
//! exhaustive-style maximizer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::sum::PowerSum;
use crate::widths::sigma_finite;

/// Largest truncation accepted by [`maximize_small`].
pub const MAX_OPTIMIZER_LEN: usize = 16;

/// A point of the closed unit ball of `ℓ_p^M`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BallSample {
    pub p: Exponent,
    pub xi: Vec<f64>,
}

impl BallSample {
    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    /// `Σ|ξ_k|^p` (or `max|ξ_k|` for `p = ∞`).
    pub fn norm_p(&self) -> f64 {
        if self.p.is_infinite() {
            return self.xi.iter().fold(0.0, |m, x| m.max(x.abs()));
        }
        let mut acc = PowerSum::new();
        for &x in &self.xi {
            if x != 0.0 {
                acc.push_pow(x.abs(), x.abs().ln(), self.p.value());
            }
        }
        acc.value().unwrap_or(f64::INFINITY)
    }

    /// How far the sample lies outside the ball; zero when feasible.
    pub fn feasibility_residual(&self) -> f64 {
        (self.norm_p() - 1.0).max(0.0)
    }
}

/// The index set `Γ_n` kept by a best n-term approximation (1-based, sorted).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SupportSet(Vec<usize>);

impl SupportSet {
    pub fn new(mut indices: Vec<usize>, len: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("support", "indices repeat"));
        }
        if indices.first().is_some_and(|&i| i == 0) || indices.last().is_some_and(|&i| i > len) {
            return Err(Error::invalid("support", format!("indices must lie in 1..={len}")));
        }
        Ok(SupportSet(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn products(lambda: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
    if lambda.len() != xi.len() {
        return Err(Error::DimensionMismatch { expected: lambda.len(), got: xi.len() });
    }
    Ok(lambda.iter().zip(xi).map(|(l, x)| (l * x).abs()).collect())
}

/// Indices sorted by decreasing `|λ_k ξ_k|`, ties by index.
fn order_by_product(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    idx
}

/// The `n` coordinates a best n-term approximation of `T_λ ξ` keeps.
pub fn best_support(lambda: &[f64], xi: &BallSample, n: usize) -> Result<SupportSet> {
    let v = products(lambda, &xi.xi)?;
    let keep = order_by_product(&v).into_iter().take(n).map(|i| i + 1).collect();
    SupportSet::new(keep, v.len())
}

/// `inf_{|Γ| = n} ‖(λ_k ξ_k)_{k ∉ Γ}‖_q`, attained by dropping the `n`
/// largest products.
pub fn best_n_term_error(lambda: &[f64], xi: &BallSample, n: usize, q: Exponent) -> Result<f64> {
    let v = products(lambda, &xi.xi)?;
    let rest: Vec<f64> = order_by_product(&v).into_iter().skip(n).map(|i| v[i]).collect();
    if q.is_infinite() {
        return Ok(rest.first().copied().unwrap_or(0.0));
    }
    let mut acc = PowerSum::new();
    for &x in rest.iter().filter(|&&x| x > 0.0) {
        acc.push_pow(x, x.ln(), q.value());
    }
    if rest.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    Ok((acc.ln_value() / q.value()).exp())
}

/// The vector with `|ξ_k|^p = λ_k^{-p} / Σ_{j≤m} λ_j^{-p}` on `1..=m`, on
/// which every product `|λ_k ξ_k|` equals `(Σ_{j≤m} λ_j^{-p})^{-1/p}`.
pub fn extremal_vector(lambda: &[f64], m: usize, p: Exponent) -> Result<BallSample> {
    if p.is_infinite() {
        return Err(Error::invalid("p", "extremal vectors need finite p"));
    }
    if m == 0 || m > lambda.len() {
        return Err(Error::invalid("m", format!("{m} outside 1..={}", lambda.len())));
    }
    let pv = p.value();
    let mut acc = PowerSum::new();
    for &l in &lambda[..m] {
        acc.push_pow(l, l.ln(), -pv);
    }
    let ln_s = acc.ln_value();
    let mut xi = vec![0.0; lambda.len()];
    for (x, &l) in xi.iter_mut().zip(&lambda[..m]) {
        *x = ((-pv * l.ln() - ln_s) / pv).exp();
    }
    Ok(fit_to_ball(BallSample { p, xi }))
}

/// Rescales radially until the rounded norm is at most 1.
fn fit_to_ball(mut s: BallSample) -> BallSample {
    let norm = s.norm_p();
    if norm == 0.0 {
        return s;
    }
    if s.p.is_infinite() {
        s.xi.iter_mut().for_each(|x| *x /= norm);
        return s;
    }
    let mut factor = norm.powf(-1.0 / s.p.value());
    loop {
        let scaled = BallSample { p: s.p, xi: s.xi.iter().map(|x| x * factor).collect() };
        if scaled.norm_p() <= 1.0 {
            s = scaled;
            break;
        }
        factor *= 1.0 - 2.0 * f64::EPSILON;
    }
    s
}

fn stream_rng(seed: u64, len: usize, p: Exponent) -> ChaCha8Rng {
    // fixed mixing of (seed, M, p) into a 256-bit ChaCha key
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(len as u64).to_le_bytes());
    key[16..24].copy_from_slice(&p.value().to_bits().to_le_bytes());
    key[24..].copy_from_slice(b"nterm-bs");
    ChaCha8Rng::from_seed(key)
}

/// Deterministic samples of the unit ball of `ℓ_p^M`.
///
/// Draws cycle through dense boundary points, sparse boundary points (one to
/// three nonzero coordinates), spiky points with one dominant coordinate, and
/// interior points. For `p = ∞` every draw is normalized to `max|ξ_k| = 1`.
pub fn sample_ball(len: usize, p: Exponent, count: usize, seed: u64) -> Result<Vec<BallSample>> {
    if len == 0 || count == 0 {
        return Err(Error::invalid("count", "M and count must be positive"));
    }
    let mut rng = stream_rng(seed, len, p);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut xi = vec![0.0; len];
        match i % 4 {
            0 | 3 => {
                for x in xi.iter_mut() {
                    *x = rng.random::<f64>();
                }
            }
            1 => {
                let k = rng.random_range(1..=len.min(3));
                for _ in 0..k {
                    xi[rng.random_range(0..len)] = rng.random::<f64>() + 1e-3;
                }
            }
            _ => {
                for x in xi.iter_mut() {
                    *x = 1e-3 * rng.random::<f64>();
                }
                xi[rng.random_range(0..len)] = 1.0;
            }
        }
        for x in xi.iter_mut() {
            if rng.random::<bool>() {
                *x = -*x;
            }
        }
        if xi.iter().all(|&x| x == 0.0) {
            xi[0] = 1.0;
        }
        let mut s = fit_to_ball(BallSample { p, xi });
        if i % 4 == 3 && !p.is_infinite() {
            let shrink: f64 = rng.random_range(0.05..1.0);
            s.xi.iter_mut().for_each(|x| *x *= shrink);
        }
        out.push(s);
    }
    Ok(out)
}

/// A positive non-increasing prefix of length `len`, reproducible from `seed`.
///
/// Entries are products of random ratios in `[0.2, 1]`, with occasional
/// runs of equal values.
pub fn random_prefix(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = Vec::with_capacity(len);
    let mut cur = rng.random_range(0.5..4.0);
    for _ in 0..len {
        v.push(cur);
        if rng.random::<f64>() >= 0.2 {
            cur *= rng.random_range(0.2..1.0);
        }
    }
    v
}

/// Inner problem for fixed `τ`: maximize `Σ_k min(c_k t_k^r, τ)` over
/// `t ≥ 0`, `Σ t_k ≤ 1`. Returns `t` and the objective.
fn inner(c: &[f64], r: f64, tau: f64) -> (Vec<f64>, f64) {
    let ln_tau = tau.ln();
    let ln_u: Vec<f64> = c.iter().map(|ck| (ln_tau - ck.ln()) / r).collect();
    let total_u: f64 = ln_u.iter().map(|l| l.exp()).sum();
    let t: Vec<f64> = if total_u <= 1.0 {
        ln_u.iter().map(|l| l.exp()).collect()
    } else if r < 1.0 {
        // concave pieces: t_k = min(u_k, (r c_k / μ)^{1/(1-r)}) with Σ t_k = 1
        let free = |ln_mu: f64, k: usize| ((r * c[k]).ln() - ln_mu) / (1.0 - r);
        let mass = |ln_mu: f64| (0..c.len()).map(|k| free(ln_mu, k).min(ln_u[k]).exp()).sum::<f64>();
        let len = c.len() as f64;
        let mut hi = (0..c.len()).map(|k| (r * c[k]).ln() + (1.0 - r) * len.ln()).fold(f64::NEG_INFINITY, f64::max) + 1.0;
        let mut lo = (0..c.len()).map(|k| (r * c[k]).ln() - (1.0 - r) * ln_u[k]).fold(f64::INFINITY, f64::min) - 1.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if mass(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0..c.len()).map(|k| free(hi, k).min(ln_u[k]).exp()).collect()
    } else {
        // convex pieces: saturate the cheapest coordinates, spend the rest on the next
        let mut order: Vec<usize> = (0..c.len()).collect();
        order.sort_by(|&a, &b| ln_u[a].total_cmp(&ln_u[b]));
        let mut t = vec![0.0; c.len()];
        let mut budget = 1.0;
        for k in order {
            let u = ln_u[k].exp();
            if u <= budget {
                t[k] = u;
                budget -= u;
            } else {
                t[k] = budget;
                break;
            }
        }
        t
    };
    let value = t.iter().zip(c).map(|(&tk, &ck)| (ck * tk.powf(r)).min(tau)).sum();
    (t, value)
}

/// Lower bound for `σ_n(T_λ^M: ℓ_p^M → ℓ_q^M)` with a feasible witness.
///
/// Uses `Σ v_k - (n largest) = max_τ [Σ_k min(v_k, τ) - nτ]` for
/// `v_k = λ_k^q |ξ_k|^q`: for each `τ` the best `|ξ|^p` on the simplex is
/// found exactly, and `τ` is searched on a seed-jittered logarithmic grid
/// of `16 · restarts` points followed by golden-section refinement of the
/// best local maxima. The returned value is `best_n_term_error` of the
/// witness itself.
pub fn maximize_small(
    p: Exponent,
    q: Exponent,
    lambda: &[f64],
    n: usize,
    restarts: usize,
    seed: u64,
) -> Result<(f64, BallSample)> {
    if p.is_infinite() || q.is_infinite() {
        return Err(Error::invalid("p", "the optimizer needs finite p and q"));
    }
    let len = lambda.len();
    if len == 0 || len > MAX_OPTIMIZER_LEN {
        return Err(Error::invalid("M", format!("{len} outside 1..={MAX_OPTIMIZER_LEN}")));
    }
    if n >= len {
        return Err(Error::invalid("n", format!("n = {n} must be below M = {len}")));
    }
    if lambda.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::invalid("lambda", "entries must be positive"));
    }
    let (pv, qv) = (p.value(), q.value());
    let r = qv / pv;
    let c: Vec<f64> = lambda.iter().map(|l| l.powf(qv)).collect();
    let objective = |ln_tau: f64| {
        let tau = ln_tau.exp();
        inner(&c, r, tau).1 - n as f64 * tau
    };
    let c_min = c.iter().copied().fold(f64::INFINITY, f64::min);
    let c_max = c.iter().copied().fold(0.0, f64::max);
    let (lo, hi) = (c_min.ln() - r * (len as f64).ln() - 8.0, c_max.ln());
    let points = 16 * restarts.max(1);
    let step = (hi - lo) / points as f64;
    let mut rng = stream_rng(seed, len, p);
    let offset: f64 = rng.random::<f64>() * step;
    let grid: Vec<(f64, f64)> = (0..=points)
        .map(|i| {
            let x = (lo + offset + i as f64 * step).min(hi);
            (x, objective(x))
        })
        .collect();
    let mut peaks: Vec<usize> = (0..grid.len())
        .filter(|&i| (i == 0 || grid[i].1 >= grid[i - 1].1) && (i + 1 == grid.len() || grid[i].1 >= grid[i + 1].1))
        .collect();
    peaks.sort_by(|&a, &b| grid[b].1.total_cmp(&grid[a].1));
    peaks.truncate(3);
    let mut best = grid.iter().copied().fold((lo, f64::NEG_INFINITY), |b, g| if g.1 > b.1 { g } else { b });
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for i in peaks {
        let (mut a, mut b) = (grid[i.saturating_sub(1)].0, grid[(i + 1).min(grid.len() - 1)].0);
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let (mut f1, mut f2) = (objective(x1), objective(x2));
        for _ in 0..80 {
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = objective(x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = objective(x1);
            }
        }
        for cand in [(x1, f1), (x2, f2)] {
            if cand.1 > best.1 {
                best = cand;
            }
        }
    }
    let (t, _) = inner(&c, r, best.0.exp());
    let witness = fit_to_ball(BallSample { p, xi: t.iter().map(|tk| tk.powf(1.0 / pv)).collect() });
    let value = best_n_term_error(lambda, &witness, n, q)?;
    Ok((value, witness))
}

/// Cross-check of the closed form on one truncated configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verification {
    pub p: Exponent,
    pub q: Exponent,
    pub m: usize,
    pub n: usize,
    pub formula: f64,
    /// Best value of the extremal vectors (`p ≤ q`) or of the optimizer (`q < p`).
    pub witness: f64,
    /// Largest error over the ball samples.
    pub sampled: f64,
    /// `formula - max(witness, sampled)`; negative when the formula is beaten.
    pub margin: f64,
    /// `|formula - witness| / formula`.
    pub gap: f64,
    pub passed: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub samples: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Multiplies the formula before comparing, to exercise the failure path.
    pub perturbation: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { samples: 1000, restarts: 64, seed: 7, perturbation: 1.0 }
    }
}

/// Compares `sigma_finite` against extremal vectors or the optimizer and
/// against ball samples. Passing requires domination by `1e-12` (samples)
/// and `1e-9` (witness) and attainment within `1e-10` (`p ≤ q`) or `1e-6`
/// (`q < p`) relative.
pub fn verify(p: Exponent, q: Exponent, lambda: &[f64], n: usize, opts: &VerifyOptions) -> Result<Verification> {
    let formula = sigma_finite(p, q, lambda, n)? * opts.perturbation;
    let witness = if p.value() <= q.value() {
        let mut best = 0.0f64;
        for m in n + 1..=lambda.len() {
            best = best.max(best_n_term_error(lambda, &extremal_vector(lambda, m, p)?, n, q)?);
        }
        best
    } else {
        maximize_small(p, q, lambda, n, opts.restarts, opts.seed)?.0
    };
    let mut sampled = 0.0f64;
    for s in sample_ball(lambda.len(), p, opts.samples, opts.seed)? {
        sampled = sampled.max(best_n_term_error(lambda, &s, n, q)?);
    }
    let gap = ((formula - witness) / formula).abs();
    let attain = if p.value() <= q.value() { 1e-10 } else { 1e-6 };
    let passed = sampled <= formula + 1e-12 && witness <= formula * (1.0 + 1e-9) && gap <= attain;
    Ok(Verification {
        p,
        q,
        m: lambda.len(),
        n,
        formula,
        witness,
        sampled,
        margin: formula - witness.max(sampled),
        gap,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(v: f64) -> Exponent {
        Exponent::new(v).unwrap()
    }

    fn ball(p: f64, xi: &[f64]) -> BallSample {
        BallSample { p: e(p), xi: xi.to_vec() }
    }

    #[test]
    fn documented_errors() {
        let v = best_n_term_error(&[1.0, 1.0, 1.0], &ball(2.0, &[0.6, 0.8, 0.0]), 1, e(2.0)).unwrap();
        assert!((v - 0.6).abs() < 1e-15);
        let v = best_n_term_error(&[4.0, 2.0, 1.0], &ball(1.0, &[0.25, 0.5, 1.0]), 1, e(1.0)).unwrap();
        assert!((v - 2.0).abs() < 1e-15);
        assert_eq!(best_n_term_error(&[1.0, 0.5], &ball(1.0, &[0.5, 0.5]), 2, e(1.0)).unwrap(), 0.0);
        let v = best_n_term_error(&[1.0, 1.0, 1.0], &ball(1.0, &[0.5, 0.3, 0.2]), 1, Exponent::INFINITY).unwrap();
        assert_eq!(v, 0.3);
        assert_eq!(best_support(&[1.0, 1.0, 1.0], &ball(2.0, &[0.6, 0.8, 0.0]), 1).unwrap().indices(), &[2]);
    }

    #[test]
    fn documented_extremal_vectors() {
        let x = extremal_vector(&[1.0, 1.0], 2, e(2.0)).unwrap();
        assert!(x.xi.iter().all(|v| (v - 0.5f64.sqrt()).abs() < 1e-15));
        let x = extremal_vector(&[2.0, 1.0], 2, e(1.0)).unwrap();
        assert!((x.xi[0] - 1.0 / 3.0).abs() < 1e-15 && (x.xi[1] - 2.0 / 3.0).abs() < 1e-15);
        let x = extremal_vector(&[1.0, 1.0, 1.0], 3, e(1.0)).unwrap();
        let v = best_n_term_error(&[1.0; 3], &x, 1, e(2.0)).unwrap();
        assert!((v - 2f64.sqrt() / 3.0).abs() < 1e-15);
        assert!(x.feasibility_residual() == 0.0);
    }

    #[test]
    fn samples_are_feasible_and_reproducible() {
        for p in [0.5, 1.0, 2.0, 3.0] {
            let a = sample_ball(5, e(p), 40, 7).unwrap();
            assert_eq!(a, sample_ball(5, e(p), 40, 7).unwrap());
            assert!(a.iter().all(|s| s.feasibility_residual() <= 1e-12));
        }
        let two = sample_ball(5, e(2.0), 3, 7).unwrap();
        assert!(two.iter().all(|s| s.norm_p() >= 1.0 - 1e-12));
        let inf = sample_ball(6, Exponent::INFINITY, 20, 3).unwrap();
        assert!(inf.iter().all(|s| s.norm_p() == 1.0));
    }

    #[test]
    fn documented_optimizer_runs() {
        let (v, w) = maximize_small(e(1.0), e(2.0), &[1.0; 3], 1, 16, 1).unwrap();
        assert!((0.4999..=0.5 + 1e-12).contains(&v), "{v}");
        assert!(w.feasibility_residual() <= 1e-12);

        let geo: Vec<f64> = (1..=12).map(|k| 0.5f64.powi(k)).collect();
        let exact = sigma_finite(e(2.0), e(1.0), &geo, 1).unwrap();
        let (v, _) = maximize_small(e(2.0), e(1.0), &geo, 1, 64, 1).unwrap();
        assert!((v - exact).abs() <= 1e-6 * exact, "{v} vs {exact}");

        let lam = [1.0, 0.5, 0.25];
        let exact = sigma_finite(e(2.0), e(2.0), &lam, 1).unwrap();
        let (v, _) = maximize_small(e(2.0), e(2.0), &lam, 1, 16, 1).unwrap();
        assert!((v - exact).abs() <= 1e-9, "{v} vs {exact}");
    }

    #[test]
    fn optimizer_preconditions() {
        assert!(maximize_small(e(2.0), e(1.0), &[1.0; 17], 1, 4, 0).is_err());
        assert!(maximize_small(e(2.0), e(1.0), &[1.0; 4], 4, 4, 0).is_err());
        assert!(maximize_small(Exponent::INFINITY, e(1.0), &[1.0; 4], 1, 4, 0).is_err());
    }

    #[test]
    fn verification_detects_perturbation() {
        let lam = random_prefix(8, 3);
        let ok = verify(e(2.0), e(1.0), &lam, 2, &VerifyOptions { samples: 200, ..Default::default() }).unwrap();
        assert!(ok.passed, "{ok:?}");
        let bad = VerifyOptions { samples: 200, perturbation: 0.99, ..Default::default() };
        assert!(!verify(e(2.0), e(1.0), &lam, 2, &bad).unwrap().passed);
    }

    #[test]
    fn random_prefixes_are_non_increasing() {
        for seed in 0..20 {
            let v = random_prefix(12, seed);
            assert!(v.windows(2).all(|w| w[1] <= w[0]) && v.iter().all(|&x| x > 0.0));
        }
    }
}
