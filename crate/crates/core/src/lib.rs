//! Controllable sampling via probability density estimation.
//!
//! An invertible coupling-layer flow maps complex per-attribute latent
//! distributions onto diagonal-Gaussian priors. Control — scale-adjusted
//! sampling, weighted interpolation between attributes, intersection centers,
//! shifted sampling centers — happens analytically in the prior space and is
//! fed back through the inverse map, so every controlled sample carries an
//! exact density under each attribute.
//!
//! Modules:
//! - [`numerics`]: small MLPs, reverse-mode gradients, adaptive-moment steps
//! - [`priors`]: diagonal Gaussians, CDF, scaled sampling, isotropy stats
//! - [`flow`]: coupling layers, the invertible model, training, model files
//! - [`control`]: interpolation, intersections, controlled sampling
//! - [`metrics`]: surpass probability, difference expectation, sweep tables
//! - [`synthlab`]: synthetic ground-truth latent distributions and datasets

#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod control;
pub mod error;
pub mod flow;
pub mod metrics;
pub mod numerics;
pub mod priors;
pub mod rng;
pub mod synthlab;

pub use error::{Error, Result};
pub use rng::Rng;

/// A point in latent space (`x`) or prior space (`z`).
pub type Vector = Vec<f64>;

/// A controllable attribute label.
pub type AttributeId = String;
