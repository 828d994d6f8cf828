//! Centralized cooperative spectrum sensing over Nakagami-m fading.
//!
//! The crate covers the whole chain from a single energy detector to the
//! fusion center:
//!
//! * [`specfun`] and [`quad`]: special functions and adaptive quadrature.
//! * [`channels`]: fading links, AWGN and the complex-envelope approximation.
//! * [`local_detect`]: false alarm, thresholds and detection probabilities.
//! * [`nfg`]: normal factor graphs, sum-product and complexity accounting.
//! * [`fusion`]: reporting densities, likelihood ratios and fusion rules.
//! * [`sysperf`]: binomial system metrics and the optimal number of SUs.
//! * [`simkit`]: end-to-end Monte Carlo with reproducible random streams.

pub mod channels;
mod error;
pub mod fusion;
pub mod local_detect;
pub mod nfg;
pub mod quad;
pub mod rng;
pub mod roc;
pub mod simkit;
pub mod specfun;
pub mod sysperf;

pub use channels::{ComplexRegimeParams, FadingLink, Regime};
pub use error::{Error, Result};
pub use local_detect::{DetectorSpec, LocalOperatingPoint, PdModel, PdRoute};
pub use nfg::NfgGraph;
pub use roc::{Provenance, RocCurve, RocPoint};
pub use simkit::{EstimateWithCI, NetworkScenario, SensingModel};
pub use sysperf::{SuccessProbs, SystemOperatingPoint};
