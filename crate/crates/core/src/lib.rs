//! Spectral tools for the dissipative SQG equation on the periodic torus:
//! fractional operators, a pseudo-spectral solver, long-time diagnostics and
//! tangent-space volume tracking.

// `!(x > 0.0)` is the NaN-rejecting form throughout
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod calibrate;
pub mod config;
pub mod constants;
pub mod corpus;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod fft;
pub mod field;
pub mod grid;
pub mod holder;
pub mod kernels;
pub mod manifest;
pub mod norms;
pub mod numeric;
pub mod random;
pub mod snapshot;
pub mod solver;
pub mod tangent;
pub mod verify;

pub use config::ExperimentConfig;
pub use constants::Constants;
pub use diagnostics::LogValue;
pub use error::{Error, Result};
pub use field::{Jet, Phase, SpectralField, TrigEvaluator};
pub use grid::TorusGrid;
pub use holder::{holder_seminorm, HolderEstimate, ShiftSet};
pub use norms::{NormReport, NormSpec};
pub use solver::{Force, SolverConfig, Trajectory};
pub use tangent::{DimensionBound, DimensionCount};
