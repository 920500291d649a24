use std::sync::Arc;

use crate::error::{Error, Result};
use crate::sum::CertifiedValue;

use super::{check_dim, count_by_enumeration, WeightFamily};

type WeightRule = Arc<dyn Fn(&[u64]) -> f64 + Send + Sync>;
type RadiusRule = Arc<dyn Fn(f64) -> u64 + Send + Sync>;

/// A user-supplied weight on coordinate magnitudes.
///
/// The rule must be positive, symmetric in the sign of every coordinate (it
/// only sees magnitudes) and non-decreasing in each magnitude. Counting needs
/// a growth certificate: a map from `t` to a radius `R` such that every point
/// with weight `≤ t` has all magnitudes `≤ R`.
#[derive(Clone)]
pub struct Custom {
    name: String,
    d: usize,
    rule: WeightRule,
    radius: Option<RadiusRule>,
}

impl Custom {
    pub fn new(name: impl Into<String>, d: usize, rule: impl Fn(&[u64]) -> f64 + Send + Sync + 'static) -> Result<Self> {
        Ok(Custom { name: name.into(), d: check_dim(d)?, rule: Arc::new(rule), radius: None })
    }

    pub fn with_growth_certificate(mut self, radius: impl Fn(f64) -> u64 + Send + Sync + 'static) -> Self {
        self.radius = Some(Arc::new(radius));
        self
    }
}

impl WeightFamily for Custom {
    fn kind(&self) -> &str {
        "custom"
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn descriptor(&self) -> String {
        format!("custom:name={},d={}", self.name, self.d)
    }

    fn weight_abs(&self, k: &[u64]) -> f64 {
        (self.rule)(k)
    }

    fn box_radius(&self, t: f64) -> Result<u64> {
        self.radius
            .as_ref()
            .map(|r| r(t))
            .ok_or_else(|| Error::MissingGrowthCertificate(self.descriptor()))
    }

    fn count_leq(&self, t: f64) -> Result<u64> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid("t", format!("{t} is not positive and finite")));
        }
        count_by_enumeration(self, t)
    }

    fn tail_above(&self, _t: f64, _e: f64, _tol: f64) -> Result<CertifiedValue> {
        Err(Error::Domain(format!("{} has no tail rule", self.descriptor())))
    }

    fn series_converges(&self, _e: f64) -> Option<bool> {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::Exponent;
    use crate::lattice::{embedding_feasible, Mixed};

    #[test]
    fn custom_counts_need_a_certificate() {
        let plain = Custom::new("l1", 2, |k| 1.0 + k.iter().sum::<u64>() as f64).unwrap();
        assert!(matches!(plain.count_leq(3.0), Err(Error::MissingGrowthCertificate(_))));
        let certified = plain.with_growth_certificate(|t| t.max(0.0) as u64);
        // 1 + |k_1| + |k_2| ≤ 3: the ℓ1 ball of radius 2 has 13 points
        assert_eq!(certified.count_leq(3.0).unwrap(), 13);
    }

    #[test]
    fn custom_reproduces_mixed_counts() {
        let mixed = Mixed::new(1.0, Exponent::INFINITY, 2).unwrap();
        let custom = Custom::new("hyperbolic", 2, |k| k.iter().map(|&j| j.max(1) as f64).product())
            .unwrap()
            .with_growth_certificate(|t| t.max(0.0) as u64);
        for t in [1.0, 2.0, 7.5, 30.0] {
            assert_eq!(custom.count_leq(t).unwrap(), mixed.count_leq(t).unwrap());
        }
    }

    #[test]
    fn feasibility_is_undecidable_without_rule() {
        let custom = Custom::new("flat", 1, |k| 1.0 + k[0] as f64).unwrap();
        let e = |v: f64| Exponent::new(v).unwrap();
        assert!(embedding_feasible(&custom, e(1.0), e(2.0)).unwrap().feasible);
        assert!(matches!(embedding_feasible(&custom, e(2.0), e(1.0)), Err(Error::MissingGrowthCertificate(_))));
    }
}
