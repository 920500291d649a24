//! Closed-form asymptotic constants of widths and weight rearrangements, and
//! finite-n diagnostics comparing computed values with them.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::sequence::SequenceSource;
use crate::sum::{self, CertifiedValue, ConvexSeries};
use crate::widths::{sigma_exact, DiagonalSpec};

/// Decay model `λ_n ~ C·n^{-s}·(offset + ln n)^β`.
///
/// The limit statements use `offset = 0`; an offset of `1` matches the
/// [`PowerLog`](crate::sequence::PowerLog) family exactly and removes its
/// `(1 + 1/ln n)^β` drift from finite-n ratios without changing the limit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AsymptoticProfile {
    pub s: f64,
    pub beta: f64,
    pub c: f64,
    pub log_offset: f64,
}

impl AsymptoticProfile {
    pub fn new(s: f64, beta: f64, c: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::invalid("s", format!("{s} is not positive and finite")));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::invalid("beta", format!("{beta} is not a finite value >= 0")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid("c", format!("{c} is not positive and finite")));
        }
        Ok(AsymptoticProfile { s, beta, c, log_offset: 0.0 })
    }

    pub fn with_log_offset(mut self, offset: f64) -> Self {
        self.log_offset = offset;
        self
    }

    fn ln_log_factor(&self, n: f64) -> f64 {
        if self.beta == 0.0 {
            0.0
        } else {
            self.beta * (self.log_offset + n.ln()).ln()
        }
    }
}

/// `ρ = s + 1/p - 1/q`, the polynomial rate of `σ_n`.
pub fn rate_exponent(p: Exponent, q: Exponent, s: f64) -> f64 {
    s + p.recip() - q.recip()
}

/// The limit of `σ_n / (n^{-ρ} (ln n)^β)` for a sequence with the given profile.
///
/// For `p ≤ q`: `ρ^ρ (s + 1/p)^{-s} p^{1/p} q^{-1/q} C`. For `q < p`
/// (requires `s > 1/q - 1/p`): `(s/(s+1/p))^s ((1/q)/(s+1/p-1/q))^{1/q-1/p} C`.
/// Infinite exponents take the limiting values `1/∞ = 0`, `∞^{1/∞} = 1`.
pub fn predicted_constant(p: Exponent, q: Exponent, profile: &AsymptoticProfile) -> Result<f64> {
    let (s, ip, iq) = (profile.s, p.recip(), q.recip());
    let ln_k = if ip >= iq {
        let rho = s + ip - iq;
        rho * rho.ln() - s * (s + ip).ln() + p.ln_self_root() - q.ln_self_root()
    } else {
        if s <= iq - ip {
            return Err(Error::Domain(format!("q < p needs s > 1/q - 1/p = {}, got s = {s}", iq - ip)));
        }
        s * (s.ln() - (s + ip).ln()) + (iq - ip) * (iq.ln() - (s + ip - iq).ln())
    };
    Ok((ln_k + profile.c.ln()).exp())
}

/// `(2^d / (d-1)!)^s`, the limit of `λ_n n^s (ln n)^{-s(d-1)}` for mixed weights.
pub fn mix_reference_constant(s: f64, d: usize) -> Result<f64> {
    if !(s > 0.0 && s.is_finite()) || d == 0 {
        return Err(Error::Domain(format!("needs s > 0 and d >= 1 (s={s}, d={d})")));
    }
    if d <= 20 {
        // 2^d and (d-1)! are exact in f64 here
        let fact: f64 = (1..d).map(|k| k as f64).product();
        return Ok((2f64.powi(d as i32) / fact).powf(s));
    }
    Ok((s * (d as f64 * std::f64::consts::LN_2 - ln_gamma(d as f64))).exp())
}

/// Smallest `s` accepted by [`energy_s`]: closer to 1 the first term
/// `2^{-s/(2(s-1))}` leaves the f64 range.
pub fn energy_s_threshold() -> f64 {
    // s/(2(s-1)) · ln 2 = 700
    let b = 700.0 / std::f64::consts::LN_2;
    2.0 * b / (2.0 * b - 1.0)
}

/// `S = Σ_{k≥1} (k² + 1)^{-s/(2(s-1))}` for `s > 1`.
pub fn energy_s(s: f64, tol: f64) -> Result<CertifiedValue> {
    if !(s > 1.0 && s.is_finite()) {
        return Err(Error::Domain(format!("S needs s > 1, got {s}")));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::invalid("tol", format!("{tol} is not in (0, 1)")));
    }
    if s <= energy_s_threshold() {
        return Err(Error::ToleranceUnreachable {
            tol,
            reason: format!("terms underflow for s <= {}", energy_s_threshold()),
        });
    }
    let b = s / (2.0 * (s - 1.0));
    let term = |k: u64| (-b * ((k as f64).powi(2)).ln_1p()).exp();
    let regular = sum::shifted_power_regular_from(2.0, b)
        .ok_or_else(|| Error::ToleranceUnreachable { tol, reason: "terms never settle into a convex tail".into() })?;
    let integral = |x: f64| sum::shifted_power_integral(x, 2.0, b);
    let series = ConvexSeries { term: &term, integral: &integral, regular_from: regular };
    sum::bracketed_tail(&series, 0, tol)
}

/// `(2d)^{s-1} (2S+1)^{(s-1)(d-1)}`, the limit of `λ̃_n n^{s-1}` for the energy weight.
pub fn energy_constant(s: f64, d: usize, tol: f64) -> Result<CertifiedValue> {
    if !(1..=crate::lattice::MAX_DIM).contains(&d) {
        return Err(Error::Domain(format!("d = {d} outside 1..={}", crate::lattice::MAX_DIM)));
    }
    if d == 1 {
        if !(s > 1.0 && s.is_finite()) {
            return Err(Error::Domain(format!("needs s > 1, got {s}")));
        }
        return Ok(CertifiedValue::exact(2f64.powf(s - 1.0)));
    }
    let big_s = energy_s(s, tol / (2.0 * (s - 1.0) * (d - 1) as f64).max(1.0))?;
    let at = |v: f64| ((s - 1.0) * (2.0 * d as f64).ln() + (s - 1.0) * (d - 1) as f64 * (2.0 * v + 1.0).ln()).exp();
    let value = CertifiedValue::new(at(big_s.lo), at(big_s.hi));
    if !value.hi.is_finite() {
        return Err(Error::Overflow(format!("energy constant for s={s}, d={d}")));
    }
    Ok(value)
}

/// The reference constant `C` and log exponent `β` of an embedding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// Mixed weight: `C = (2^d/(d-1)!)^s`, `β = s(d-1)`, smoothness `s`.
    Mixed,
    /// Energy weight: `C = (2d)^{s-1}(2S+1)^{(s-1)(d-1)}`, `β = 0`, smoothness `s - 1`.
    Energy,
}

/// A named constant evaluable at `(s, d)`.
pub trait NamedConstant: Send + Sync {
    fn tag(&self) -> &'static str;

    fn aliases(&self) -> &'static [&'static str] {
        &[]
    }

    fn description(&self) -> &'static str;

    fn evaluate(&self, s: f64, d: usize, tol: f64) -> Result<CertifiedValue>;
}

/// One of the six explicit width constants for embeddings between
/// mixed-smoothness classes and `L_2`, the Wiener algebra, or `H^1`.
pub struct EmbeddingConstant {
    tag: &'static str,
    aliases: &'static [&'static str],
    description: &'static str,
    pub p: Exponent,
    pub q: Exponent,
    pub reference: Reference,
    /// Smallest admissible `s` (exclusive).
    pub s_min: f64,
    /// The displayed closed form without the reference constant.
    display: fn(f64) -> f64,
}

impl EmbeddingConstant {
    /// `(s', β, C)` to substitute into [`predicted_constant`].
    pub fn profile(&self, s: f64, d: usize, tol: f64) -> Result<(f64, f64, CertifiedValue)> {
        self.check(s, d)?;
        Ok(match self.reference {
            Reference::Mixed => (s, s * (d - 1) as f64, CertifiedValue::exact(mix_reference_constant(s, d)?)),
            Reference::Energy => (s - 1.0, 0.0, energy_constant(s, d, tol)?),
        })
    }

    /// [`predicted_constant`] composed with the reference profile.
    pub fn via_general(&self, s: f64, d: usize, tol: f64) -> Result<CertifiedValue> {
        let (s_eff, beta, c) = self.profile(s, d, tol)?;
        let unit = AsymptoticProfile::new(s_eff, beta, 1.0)?;
        let k = predicted_constant(self.p, self.q, &unit)?;
        Ok(c.scale(k))
    }

    fn check(&self, s: f64, d: usize) -> Result<()> {
        if !(s > self.s_min && s.is_finite()) {
            return Err(Error::Domain(format!("{} needs s > {}, got {s}", self.tag, self.s_min)));
        }
        if !(1..=crate::lattice::MAX_DIM).contains(&d) {
            return Err(Error::Domain(format!("d = {d} outside 1..={}", crate::lattice::MAX_DIM)));
        }
        Ok(())
    }
}

impl NamedConstant for EmbeddingConstant {
    fn tag(&self) -> &'static str {
        self.tag
    }

    fn aliases(&self) -> &'static [&'static str] {
        self.aliases
    }

    fn description(&self) -> &'static str {
        self.description
    }

    fn evaluate(&self, s: f64, d: usize, tol: f64) -> Result<CertifiedValue> {
        self.check(s, d)?;
        let reference = match self.reference {
            Reference::Mixed => CertifiedValue::exact(mix_reference_constant(s, d)?),
            Reference::Energy => energy_constant(s, d, tol)?,
        };
        Ok(reference.scale((self.display)(s)))
    }
}

fn exp(v: f64) -> Exponent {
    Exponent::new(v).expect("positive literal")
}

/// The six embedding constants, in the order H→L2, H→A, A→L2, A→A, H→H1, A→H1.
pub fn embedding_constants() -> Vec<EmbeddingConstant> {
    vec![
        EmbeddingConstant {
            tag: "H_L2",
            aliases: &["H->L2", "HL2"],
            description: "H^{s,r}_mix -> L2: s^s/(s+1/2)^s (2^d/(d-1)!)^s",
            p: exp(2.0),
            q: exp(2.0),
            reference: Reference::Mixed,
            s_min: 0.0,
            display: |s| (s / (s + 0.5)).powf(s),
        },
        EmbeddingConstant {
            tag: "H_A",
            aliases: &["H->A", "HA"],
            description: "H^{s,r}_mix -> Wiener algebra: (s/(s+1/2))^s (1/(s-1/2))^{1/2} (2^d/(d-1)!)^s",
            p: exp(2.0),
            q: exp(1.0),
            reference: Reference::Mixed,
            s_min: 0.5,
            display: |s| (s / (s + 0.5)).powf(s) * (1.0 / (s - 0.5)).sqrt(),
        },
        EmbeddingConstant {
            tag: "A_L2",
            aliases: &["A->L2", "AL2"],
            description: "A^{s,r}_mix -> L2: (s+1/2)^{s+1/2}/(sqrt(2)(s+1)^s) (2^d/(d-1)!)^s",
            p: exp(1.0),
            q: exp(2.0),
            reference: Reference::Mixed,
            s_min: 0.0,
            display: |s| (s + 0.5).powf(s + 0.5) / (std::f64::consts::SQRT_2 * (s + 1.0).powf(s)),
        },
        EmbeddingConstant {
            tag: "A_A",
            aliases: &["A->A", "AA"],
            description: "A^{s,r}_mix -> Wiener algebra: s^s/(s+1)^s (2^d/(d-1)!)^s",
            p: exp(1.0),
            q: exp(1.0),
            reference: Reference::Mixed,
            s_min: 0.0,
            display: |s| (s / (s + 1.0)).powf(s),
        },
        EmbeddingConstant {
            tag: "H_H1",
            aliases: &["H->H1", "HH1"],
            description: "H^{s,2}_mix -> H1: ((s-1)/(s-1/2))^{s-1} (2d)^{s-1}(2S+1)^{(s-1)(d-1)}",
            p: exp(2.0),
            q: exp(2.0),
            reference: Reference::Energy,
            s_min: 1.0,
            display: |s| ((s - 1.0) / (s - 0.5)).powf(s - 1.0),
        },
        EmbeddingConstant {
            tag: "A_H1",
            aliases: &["A->H1", "AH1"],
            description: "A^{s,2}_mix -> H1: (s-1/2)^{s-1/2}/(sqrt(2) s^{s-1}) (2d)^{s-1}(2S+1)^{(s-1)(d-1)}",
            p: exp(1.0),
            q: exp(2.0),
            reference: Reference::Energy,
            s_min: 1.0,
            display: |s| (s - 0.5).powf(s - 0.5) / (std::f64::consts::SQRT_2 * s.powf(s - 1.0)),
        },
    ]
}

struct MixReference;

impl NamedConstant for MixReference {
    fn tag(&self) -> &'static str {
        "mixref"
    }

    fn description(&self) -> &'static str {
        "(2^d/(d-1)!)^s, the rearrangement constant of mixed weights"
    }

    fn evaluate(&self, s: f64, d: usize, _tol: f64) -> Result<CertifiedValue> {
        Ok(CertifiedValue::exact(mix_reference_constant(s, d)?))
    }
}

struct EnergySeries;

impl NamedConstant for EnergySeries {
    fn tag(&self) -> &'static str {
        "energy_S"
    }

    fn description(&self) -> &'static str {
        "S = sum_{k>=1} (k^2+1)^{-s/(2(s-1))}"
    }

    fn evaluate(&self, s: f64, _d: usize, tol: f64) -> Result<CertifiedValue> {
        energy_s(s, tol)
    }
}

struct EnergyReference;

impl NamedConstant for EnergyReference {
    fn tag(&self) -> &'static str {
        "energy"
    }

    fn description(&self) -> &'static str {
        "(2d)^{s-1}(2S+1)^{(s-1)(d-1)}, the rearrangement constant of the energy weight"
    }

    fn evaluate(&self, s: f64, d: usize, tol: f64) -> Result<CertifiedValue> {
        energy_constant(s, d, tol)
    }
}

/// Constants addressable by tag.
pub struct ConstantRegistry {
    entries: Vec<Box<dyn NamedConstant>>,
}

impl ConstantRegistry {
    pub fn empty() -> Self {
        ConstantRegistry { entries: Vec::new() }
    }

    pub fn register(&mut self, c: Box<dyn NamedConstant>) {
        self.entries.retain(|e| e.tag() != c.tag());
        self.entries.push(c);
    }

    pub fn tags(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.tag()).collect()
    }

    pub fn get(&self, tag: &str) -> Option<&dyn NamedConstant> {
        self.entries
            .iter()
            .find(|e| e.tag().eq_ignore_ascii_case(tag) || e.aliases().iter().any(|a| a.eq_ignore_ascii_case(tag)))
            .map(|e| e.as_ref())
    }

    pub fn evaluate(&self, tag: &str, s: f64, d: usize, tol: f64) -> Result<CertifiedValue> {
        self.get(tag)
            .ok_or_else(|| Error::invalid("tag", format!("unknown constant `{tag}`; known: {:?}", self.tags())))?
            .evaluate(s, d, tol)
    }
}

impl Default for ConstantRegistry {
    fn default() -> Self {
        let mut r = ConstantRegistry::empty();
        for t in embedding_constants() {
            r.register(Box::new(t));
        }
        r.register(Box::new(MixReference));
        r.register(Box::new(EnergySeries));
        r.register(Box::new(EnergyReference));
        r
    }
}

/// The displayed constant of an embedding tag.
pub fn specialized_constant(tag: &str, s: f64, d: usize, tol: f64) -> Result<CertifiedValue> {
    let tags = embedding_constants();
    let t = tags
        .iter()
        .find(|t| t.tag.eq_ignore_ascii_case(tag) || t.aliases.iter().any(|a| a.eq_ignore_ascii_case(tag)))
        .ok_or_else(|| Error::invalid("tag", format!("`{tag}` is not an embedding tag")))?;
    t.evaluate(s, d, tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Converging,
    Diverging,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioRow {
    pub n: u64,
    pub observed: f64,
    pub predicted: f64,
    pub gap: f64,
}

/// Observed ratios on an n-grid against their predicted limit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioDiagnostics {
    pub rows: Vec<RatioRow>,
    pub predicted: f64,
    /// Mean observed ratio over the last quarter of the grid.
    pub last_quartile_mean: f64,
    /// Sign of the change of the observed ratio over the last five points.
    pub slope_sign: i8,
    pub final_gap: f64,
    pub verdict: Verdict,
}

impl RatioDiagnostics {
    fn from_observations(grid: &[u64], observed: Vec<f64>, predicted: f64) -> Self {
        let rows: Vec<RatioRow> = grid
            .iter()
            .zip(&observed)
            .map(|(&n, &o)| RatioRow { n, observed: o, predicted, gap: (o / predicted - 1.0).abs() })
            .collect();
        let tail = &rows[rows.len().saturating_sub(5)..];
        let gaps: Vec<f64> = tail.iter().map(|r| r.gap).collect();
        let verdict = if gaps.len() >= 2 && gaps.windows(2).all(|w| w[1] < w[0]) {
            Verdict::Converging
        } else if gaps.len() >= 2 && gaps.windows(2).all(|w| w[1] > w[0]) {
            Verdict::Diverging
        } else {
            Verdict::Inconclusive
        };
        let delta = tail.last().map_or(0.0, |r| r.observed) - tail.first().map_or(0.0, |r| r.observed);
        let quarter = &rows[rows.len() - rows.len().div_ceil(4)..];
        let last_quartile_mean = quarter.iter().map(|r| r.observed).sum::<f64>() / quarter.len() as f64;
        RatioDiagnostics {
            final_gap: rows.last().map_or(f64::NAN, |r| r.gap),
            rows,
            predicted,
            last_quartile_mean,
            slope_sign: if delta > 0.0 { 1 } else if delta < 0.0 { -1 } else { 0 },
            verdict,
        }
    }
}

fn check_grid(grid: &[u64]) -> Result<()> {
    if grid.is_empty() || grid[0] < 3 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("grid", "must be non-empty, strictly increasing and start at 3 or more"));
    }
    Ok(())
}

/// `σ_n / (n^{-ρ}(ln n)^β)` on `grid` against [`predicted_constant`].
pub fn empirical_ratio(spec: &DiagonalSpec, profile: &AsymptoticProfile, grid: &[u64]) -> Result<RatioDiagnostics> {
    check_grid(grid)?;
    let predicted = predicted_constant(spec.p, spec.q, profile)?;
    let rho = rate_exponent(spec.p, spec.q, profile.s);
    let observed = grid
        .par_iter()
        .map(|&n| {
            let w = sigma_exact(spec, n, crate::sequence::DEFAULT_TOL)?;
            let x = n as f64;
            Ok((w.mid().ln() + rho * x.ln() - profile.ln_log_factor(x)).exp())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(RatioDiagnostics::from_observations(grid, observed, predicted))
}

/// `λ_n / (n^{-s}(ln n)^β)` on `grid` against `C`.
pub fn term_ratio(source: &Arc<dyn SequenceSource>, profile: &AsymptoticProfile, grid: &[u64]) -> Result<RatioDiagnostics> {
    check_grid(grid)?;
    let observed = grid
        .iter()
        .map(|&n| {
            let x = n as f64;
            (source.ln_term_at(n) + profile.s * x.ln() - profile.ln_log_factor(x)).exp()
        })
        .collect();
    Ok(RatioDiagnostics::from_observations(grid, observed, profile.c))
}

/// `n, n·10^{1/k}, …` rounded, from `10^lo` to `10^hi` with `per_decade` points per decade.
pub fn geometric_grid(lo: u32, hi: u32, per_decade: u32) -> Vec<u64> {
    let mut grid: Vec<u64> = (0..=(hi - lo) * per_decade)
        .map(|i| 10f64.powf(lo as f64 + i as f64 / per_decade as f64).round() as u64)
        .collect();
    grid.dedup();
    grid
}
