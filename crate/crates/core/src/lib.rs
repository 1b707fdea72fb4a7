//! Simulation and invasion-rate analysis for Kolmogorov piecewise
//! deterministic Markov processes: population ODEs `dx_i/dt = x_i f_i(x, k)`
//! whose environment `k` switches at random.

// `!(v > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod analytic;
pub mod classify;
pub mod error;
pub mod geometry;
pub mod measure;
pub mod model;
pub mod poly;
pub mod presets;
pub mod simulate;

pub use error::{PdmpError, Result};
pub use model::{EnvironmentField, FamilyParams, FamilyTag, GaugeFunction, ModelSpec, SubspaceIndex, SwitchLaw};
