//! Regression-driven distributionally robust optimization.
//!
//! The crate couples an ordinary-least-squares estimation layer with a
//! Wasserstein distributionally robust decision layer:
//!
//! 1. [`regression`] fits `y = X β + ε` and exposes the projection and
//!    Lipschitz constants of the estimator.
//! 2. [`bootstrap`] resamples centered residuals to build an ensemble of
//!    parameter estimates, the empirical center of the ambiguity set.
//! 3. [`ambiguity`] computes the finite-sample Wasserstein radius (or takes a
//!    tuned radius) and packages the ambiguity ball.
//! 4. [`dro`] emits the certainty-equivalent LP and the exact conic
//!    reformulations of the CVaR / expectation constrained robust problems.
//! 5. [`conic`] solves those programs and certifies the returned point.
//! 6. [`wasserstein`] computes exact transport distances between empirical
//!    distributions, used by the validation suites in [`experiments`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ambiguity;
pub mod bootstrap;
pub mod conic;
pub mod dro;
pub mod empirical;
pub mod error;
pub mod io;
pub mod experiments;
pub mod par;
pub mod regression;
pub mod seed;
pub mod stats;
pub mod wasserstein;

pub use error::{Error, Result};
