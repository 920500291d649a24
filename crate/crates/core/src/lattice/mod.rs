//! Weights on `ℤ^d`, their counting functions, and the non-increasing
//! rearrangement of `1/ω(k)` as a [`SequenceSource`](crate::sequence::SequenceSource).

mod custom;
mod energy;
mod mixed;
mod source;
mod stream;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

pub use custom::Custom;
pub use energy::Energy;
pub use mixed::Mixed;
pub use source::LatticeSource;
pub use stream::{LatticePoint, Orbit, OrbitStream, RearrangementStream};

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::params::{self, Params};
use crate::sum::CertifiedValue;

pub const MAX_DIM: usize = 16;

/// Upper limit on lattice points visited by box enumerations.
pub const POINT_CAP: u64 = 20_000_000;

/// A positive weight on `ℤ^d` that is even in every coordinate,
/// non-decreasing in every coordinate magnitude, and tends to infinity.
pub trait WeightFamily: Send + Sync {
    fn kind(&self) -> &str;

    fn dim(&self) -> usize;

    /// A descriptor that rebuilds the family through [`WeightRegistry`].
    fn descriptor(&self) -> String;

    /// The weight at any point whose coordinate magnitudes are `k`.
    fn weight_abs(&self, k: &[u64]) -> f64;

    /// Largest coordinate magnitude of any point with weight `≤ t`.
    fn box_radius(&self, t: f64) -> Result<u64>;

    /// `#{k ∈ ℤ^d : ω(k) ≤ t}`.
    fn count_leq(&self, t: f64) -> Result<u64>;

    /// Enclosure of `Σ_{ω(k) > t} ω(k)^{-e}`.
    fn tail_above(&self, t: f64, e: f64, tol: f64) -> Result<CertifiedValue>;

    /// Whether `Σ_k ω(k)^{-e}` converges, when decidable.
    fn series_converges(&self, e: f64) -> Option<bool>;

    fn weight(&self, k: &[i64]) -> Result<f64> {
        if k.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: k.len() });
        }
        let abs: Vec<u64> = k.iter().map(|x| x.unsigned_abs()).collect();
        Ok(self.weight_abs(&abs))
    }
}

impl fmt::Debug for dyn WeightFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.descriptor())
    }
}

pub(crate) fn check_dim(d: usize) -> Result<usize> {
    if (1..=MAX_DIM).contains(&d) {
        Ok(d)
    } else {
        Err(Error::invalid("d", format!("{d} is outside 1..={MAX_DIM}")))
    }
}

/// Number of lattice points sharing the magnitudes `k`.
pub fn multiplicity(k: &[u64]) -> u64 {
    1u64 << k.iter().filter(|&&x| x != 0).count()
}

/// Visits every orthant point (coordinate magnitudes) with weight `≤ t`,
/// relying on coordinatewise monotonicity to prune. Returns the number of
/// weight evaluations.
pub(crate) fn for_each_below(
    family: &dyn WeightFamily,
    t: f64,
    radius: u64,
    visit: &mut dyn FnMut(&[u64], f64),
) -> Result<u64> {
    fn rec(
        family: &dyn WeightFamily,
        coords: &mut [u64],
        depth: usize,
        t: f64,
        radius: u64,
        visited: &mut u64,
        visit: &mut dyn FnMut(&[u64], f64),
    ) -> Result<()> {
        for j in 0..=radius {
            coords[depth] = j;
            *visited += 1;
            if *visited > POINT_CAP {
                return Err(Error::Domain(format!("enumeration exceeds {POINT_CAP} lattice points")));
            }
            // later coordinates are zero, so this is the least weight of the subtree
            let w = family.weight_abs(coords);
            if w > t {
                break;
            }
            if depth + 1 == coords.len() {
                visit(coords, w);
            } else {
                rec(family, coords, depth + 1, t, radius, visited, visit)?;
            }
        }
        coords[depth] = 0;
        Ok(())
    }
    let mut coords = vec![0u64; family.dim()];
    let mut visited = 0;
    rec(family, &mut coords, 0, t, radius, &mut visited, visit)?;
    Ok(visited)
}

/// Visits every orthant point of `[0, radius]^d`.
pub(crate) fn for_each_in_box(d: usize, radius: u64, visit: &mut dyn FnMut(&[u64])) -> Result<()> {
    let side = radius as f64 + 1.0;
    if side.powi(d as i32) > POINT_CAP as f64 {
        return Err(Error::Domain(format!("box of radius {radius} in dimension {d} exceeds {POINT_CAP} points")));
    }
    let mut coords = vec![0u64; d];
    loop {
        visit(&coords);
        let mut i = 0;
        loop {
            if i == d {
                return Ok(());
            }
            if coords[i] < radius {
                coords[i] += 1;
                break;
            }
            coords[i] = 0;
            i += 1;
        }
    }
}

/// `#{k : ω(k) ≤ t}` by pruned enumeration inside the certified box.
pub(crate) fn count_by_enumeration(family: &dyn WeightFamily, t: f64) -> Result<u64> {
    let radius = family.box_radius(t)?;
    let mut count = 0u64;
    for_each_below(family, t, radius, &mut |k, _| count += multiplicity(k))?;
    Ok(count)
}

/// The `n`-th smallest weight, counted with multiplicity.
pub fn nth_smallest_weight(family: Arc<dyn WeightFamily>, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::IndexZero);
    }
    let mut seen = 0u64;
    for orbit in OrbitStream::new(family) {
        seen += orbit.multiplicity;
        if seen >= n {
            return Ok(orbit.weight);
        }
    }
    unreachable!("orbit streams are infinite")
}

/// Answer of [`embedding_feasible`] together with the reason.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub certificate: String,
}

/// Whether the weighted space with weight `ω` embeds into the target space,
/// i.e. `p ≤ q` or `Σ_k ω(k)^{-pq/(p-q)}` converges.
pub fn embedding_feasible(family: &dyn WeightFamily, p: Exponent, q: Exponent) -> Result<Feasibility> {
    if q.is_infinite() || (!p.is_infinite() && p.value() <= q.value()) {
        return Ok(Feasibility { feasible: true, certificate: format!("p = {p} <= q = {q}") });
    }
    let alpha = if p.is_infinite() { q.value() } else { p.value() * q.value() / (p.value() - q.value()) };
    match family.series_converges(alpha) {
        Some(feasible) => Ok(Feasibility {
            feasible,
            certificate: format!(
                "sum of omega^(-{alpha}) {} for {}",
                if feasible { "converges" } else { "diverges" },
                family.descriptor()
            ),
        }),
        None => Err(Error::MissingGrowthCertificate(family.descriptor())),
    }
}

/// A named constructor for weight families from a plain-text argument list.
pub trait WeightFactory: Send + Sync {
    fn name(&self) -> &'static str;

    fn usage(&self) -> &'static str;

    fn build(&self, args: &str) -> Result<Arc<dyn WeightFamily>>;
}

struct MixedFactory;

impl WeightFactory for MixedFactory {
    fn name(&self) -> &'static str {
        "mixed"
    }

    fn usage(&self) -> &'static str {
        "mixed:s=<smoothness>,r=<inner exponent or inf, default inf>,d=<dimension, default 1>"
    }

    fn build(&self, args: &str) -> Result<Arc<dyn WeightFamily>> {
        let p = Params::parse(args)?;
        p.check(&["s", "r", "d"], 0)?;
        let s = p.require_f64("s", None)?;
        let r = p.exponent("r", None)?.unwrap_or(Exponent::INFINITY);
        let d = p.usize("d", None)?.unwrap_or(1);
        Ok(Arc::new(Mixed::new(s, r, d)?))
    }
}

struct EnergyFactory;

impl WeightFactory for EnergyFactory {
    fn name(&self) -> &'static str {
        "energy"
    }

    fn usage(&self) -> &'static str {
        "energy:s=<smoothness > 1>,d=<dimension, default 1>"
    }

    fn build(&self, args: &str) -> Result<Arc<dyn WeightFamily>> {
        let p = Params::parse(args)?;
        p.check(&["s", "d"], 0)?;
        let s = p.require_f64("s", None)?;
        let d = p.usize("d", None)?.unwrap_or(1);
        Ok(Arc::new(Energy::new(s, d)?))
    }
}

/// Weight families addressable by name, e.g. `mixed:s=1,r=inf,d=2`.
pub struct WeightRegistry {
    factories: Vec<Arc<dyn WeightFactory>>,
}

impl WeightRegistry {
    pub fn empty() -> Self {
        WeightRegistry { factories: Vec::new() }
    }

    pub fn register(&mut self, factory: Arc<dyn WeightFactory>) {
        self.factories.retain(|f| f.name() != factory.name());
        self.factories.push(factory);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.iter().map(|f| f.name()).collect()
    }

    pub fn get(&self, kind: &str) -> Option<&dyn WeightFactory> {
        self.factories.iter().find(|f| f.name() == kind).map(|f| f.as_ref())
    }

    pub fn build(&self, descriptor: &str) -> Result<Arc<dyn WeightFamily>> {
        let (kind, args) = params::split_kind(descriptor);
        let factory = self.get(&kind).ok_or_else(|| {
            Error::invalid("family", format!("unknown weight family `{kind}`; known: {:?}", self.names()))
        })?;
        factory.build(args)
    }
}

impl Default for WeightRegistry {
    fn default() -> Self {
        let mut r = WeightRegistry::empty();
        r.register(Arc::new(MixedFactory));
        r.register(Arc::new(EnergyFactory));
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn family(desc: &str) -> Arc<dyn WeightFamily> {
        WeightRegistry::default().build(desc).unwrap()
    }

    #[test]
    fn documented_weights() {
        assert_eq!(family("mixed:s=1,r=inf,d=2").weight(&[0, 3]).unwrap(), 3.0);
        assert_eq!(family("mixed:s=2,r=2,d=1").weight(&[1]).unwrap(), 2.0);
        let w = family("energy:s=2,d=2").weight(&[1, 1]).unwrap();
        assert!((w - 4.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            family("mixed:s=1,d=2").weight(&[1]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn documented_counts() {
        assert_eq!(family("mixed:s=1,r=inf,d=1").count_leq(1.0).unwrap(), 3);
        assert_eq!(family("mixed:s=1,r=inf,d=2").count_leq(1.0).unwrap(), 9);
        assert_eq!(family("mixed:s=1,r=inf,d=2").count_leq(2.0).unwrap(), 21);
    }

    #[test]
    fn documented_nth_weights() {
        assert_eq!(nth_smallest_weight(family("mixed:s=1,r=inf,d=1"), 3).unwrap(), 1.0);
        assert_eq!(nth_smallest_weight(family("mixed:s=1,r=inf,d=1"), 4).unwrap(), 2.0);
        assert_eq!(nth_smallest_weight(family("energy:s=2,d=1"), 1).unwrap(), 1.0);
    }

    #[test]
    fn documented_feasibility() {
        let e = |v: f64| Exponent::new(v).unwrap();
        assert!(embedding_feasible(family("mixed:s=1,r=2,d=3").as_ref(), e(2.0), e(4.0)).unwrap().feasible);
        assert!(embedding_feasible(family("mixed:s=1,r=inf,d=1").as_ref(), e(2.0), e(1.0)).unwrap().feasible);
        assert!(!embedding_feasible(family("mixed:s=0.4,r=inf,d=1").as_ref(), e(2.0), e(1.0)).unwrap().feasible);
    }

    #[test]
    fn dimension_range_is_enforced() {
        let reg = WeightRegistry::default();
        assert!(reg.build("mixed:s=1,d=0").is_err());
        assert!(reg.build("mixed:s=1,d=17").is_err());
        assert!(reg.build("energy:s=1,d=2").is_err());
        assert!(reg.build("mixed:s=1,d=16").is_ok());
    }

    #[test]
    fn box_iteration_covers_the_cube() {
        let mut n = 0;
        for_each_in_box(3, 2, &mut |_| n += 1).unwrap();
        assert_eq!(n, 27);
    }
}
