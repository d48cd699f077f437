//! Numerical laboratory for the free contraction norm `‖a‖_(t)`.
//!
//! * [`measures`]: atomic measures, Cauchy/F/Voiculescu transforms and the
//!   Nevanlinna measure `ρ`.
//! * [`freepower`]: fractional free convolution powers `μ^{⊞T}` through
//!   subordination.
//! * [`tnorm`]: the exact `(t)`-norm and its closed-form estimates.
//! * [`rmt`]: random-matrix compression oracle.
//! * [`qchannel`]: Haar random quantum channels.
//! * [`additivity`]: closed-form minimum output entropy violation analysis.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod additivity;
pub mod error;
pub mod freepower;
pub mod linalg;
pub mod measures;
pub mod qchannel;
pub mod quad;
pub mod rmt;
pub mod rng;
pub mod roots;
pub mod tnorm;

pub use error::{Error, Result};
pub use freepower::{free_power, FreePowerResult, Interval, PowerSystem};
pub use measures::{make_measure, Atom, AtomicMeasure, Eigenspace, HermitianSpec};
