//! Adaptive LQR control under limited model information.
//!
//! Each subcontroller of a networked plant estimates the parts of the model it
//! does not know with a cost-biased least-squares criterion and applies its
//! own row block of the certainty-equivalent optimal gain. The crate also
//! provides the full-information optimum, a centralized adaptive baseline, a
//! deadbeat design for the two-vehicle platoon, seeded closed-loop simulation,
//! and Monte-Carlo competitive-ratio estimation.

// index loops read better than iterator chains in the small dense kernels,
// and `!(a < b)` is used on purpose so that NaN counts as failure
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod controllers;
pub mod error;
pub mod estimator;
pub mod matlin;
pub mod metrics;
pub mod optim;
pub mod plantspace;
pub mod platoon;
pub mod sim;

pub use error::{Error, Result};
pub use matlin::Mat;
