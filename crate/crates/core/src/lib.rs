//! Simulation and analysis of multi-source path-identity interferometers.
//!
//! Several down-conversion sources pumped by one laser emit photon pairs into
//! identical modes, so their pair-creation amplitudes interfere. This crate
//! computes the resulting pair rates, groups sources into effective sources
//! to study visibility/distinguishability duality and which-source
//! attribution, sweeps phases with optional Poissonian counting, and models
//! how alignment errors and yield imbalance degrade the fringes.
//!
//! ```
//! use multicrystal::model::{pair_rate, InterferometerSpec};
//! use std::f64::consts::PI;
//!
//! let spec = InterferometerSpec::three_crystal([1.0, 1.0, 1.0], PI, PI).unwrap();
//! assert!((pair_rate(&spec) - 1.0).abs() < 1e-12);
//! ```

pub mod error;
pub mod imperfections;
pub mod io;
pub mod model;
pub mod partition;
pub mod scan;

pub use error::{Error, Result};
pub use model::{ComplexValue, FockVector, InterferometerSpec, PhaseConvention, SourceSpec};
pub use partition::{AttributionResult, DualityRecord, EffectiveSource, Grouping};
pub use scan::{FringeFit, ScanResult, ScanSpec};
