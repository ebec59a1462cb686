//! Simulation and optimization of heralded ion-ion entanglement through SPDC and multimode-memory repeaters.

// Parameter checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backbone;
pub mod baselines;
pub mod edge;
pub mod error;
pub mod fock;
pub mod model;
pub mod optimizer;
pub mod oracle;
pub mod pipeline;
pub mod purification;
pub mod scheduling;
pub mod swaps;
pub mod validation;

pub use error::{Error, Result};
pub use model::*;
