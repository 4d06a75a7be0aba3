//! Random sup-measures on a discretised unit interval: the Choquet limits with
//! and without aggregation, their signed variant, the random closed set
//! families that drive them, and the aggregated heavy-tailed model whose
//! normalised empirical sup-measure converges to them.

pub mod error;
pub mod experiments;
pub mod limit;
pub mod measure;
pub mod model;
pub mod rng;
pub mod sets;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
pub use measure::{Domain, ExtendedReal, GridClosedSet, Interval, Rational, SupMeasureGrid};
pub use rng::{RngState, RNG_ALGORITHM};
pub use sets::{SetFamily, SetSampler};
