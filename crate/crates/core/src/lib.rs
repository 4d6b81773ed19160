//! Minimum divergence estimation under weighted (bootstrap-style) sampling.
//!
//! The crate covers the Cressie–Read divergence family and its convex
//! conjugates ([`divergence`]), weight laws and their Chernoff transforms
//! ([`weights`]), parametric models ([`models`]), the dual minimum divergence
//! estimator and the weighted-sampling MLE ([`dual`]), finite-partition Sanov
//! rates and conditional large-deviation Monte Carlo ([`sanov`]), Bahadur
//! slopes ([`bahadur`]) and weighted LLN/CLT checks ([`clt`]). [`report`] and
//! [`cli`] back the `divlab` binary.
//!
//! Every random draw is keyed by `(seed, tag, index)` through [`seed`], so
//! results do not depend on thread count.
//!
//! ```
//! use divlab::dual::{build_weighted_empirical, weighted_mle, DualOptions};
//! use divlab::models::ParametricModel;
//! use divlab::weights::WeightLaw;
//!
//! # fn main() -> divlab::Result<()> {
//! let model = ParametricModel::poisson();
//! let x = model.sample(&[0.5], 200, 11)?;
//! let law = WeightLaw::poisson_one();
//! let mu = build_weighted_empirical(&x, &law, 12)?;
//! let fit = weighted_mle(&model, &law, &mu, &DualOptions::default())?;
//! assert!((fit.theta_hat[0] - 0.5).abs() < 0.3);
//! # Ok(())
//! # }
//! ```
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bahadur;
pub mod cli;
pub mod clt;
pub mod divergence;
pub mod dual;
mod error;
pub mod models;
pub mod optimize;
pub mod quadrature;
pub mod report;
pub mod sanov;
pub mod seed;
pub mod weights;

pub use error::{Error, Result};
