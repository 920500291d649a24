//! Best n-term approximation widths of diagonal operators `T_λ: ℓ_p → ℓ_q`
//! with respect to the canonical basis, their lattice rearrangements for
//! mixed-smoothness weights on `ℤ^d`, and the asymptotic constants they
//! converge to.
//!
//! ```
//! use std::sync::Arc;
//! use nterm::{sigma_exact, DiagonalSpec, Exponent, Geometric};
//!
//! let lambda = Arc::new(Geometric::new(0.5, 0.5).unwrap());
//! let spec = DiagonalSpec::new(Exponent::new(2.0).unwrap(), Exponent::new(1.0).unwrap(), lambda);
//! let w = sigma_exact(&spec, 1, 1e-12).unwrap();
//! assert!((w.mid() - (1.0f64 / 20.0 + 1.0 / 48.0).sqrt()).abs() < 1e-14);
//! ```

pub mod asymptotics;
pub mod error;
pub mod exponent;
pub mod lattice;
pub mod oracle;
pub mod params;
pub mod sequence;
pub mod sum;
pub mod widths;

pub use error::{Error, Result};
pub use exponent::Exponent;
pub use lattice::{LatticeSource, WeightFamily, WeightRegistry};
pub use sequence::{Finite, Geometric, PowerLog, Scaled, SequenceRegistry, SequenceSource};
pub use sum::CertifiedValue;
pub use widths::{sigma_exact, sigma_finite, DiagonalSpec, Regime, WidthResult};
