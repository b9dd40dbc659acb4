#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bignum;
pub mod cf;
pub mod error;
pub mod excursion;
pub mod hyperbolic;
pub mod origami;
pub mod rng;
pub mod sampler;
pub mod stats;
pub mod estimator;
pub mod cli;

pub use error::{Error, Result};
