//! Sequential lack-of-fit testing for the constant regression model.
//!
//! Recursive least-squares residuals are accumulated into a partial-sum path;
//! under the null the scaled path behaves like Brownian motion, and a
//! one-sided boundary gives a test that can stop as soon as the path drops
//! below it. Under a jump or falling-line alternative the path picks up a drift
//! whose size depends on where the design puts its points, which is what the
//! [`design`] module compares.
//!
//! - [`regression`]: recursive residuals and the batch least-squares check.
//! - [`path`]: partial-sum paths, their minimum, simulated Brownian motion.
//! - [`trends`]: alternatives and their limiting drift.
//! - [`design`]: q-designs, dominance and the `1/e` optimum.
//! - [`sequential`]: the boundary-crossing test, batch and streaming.
//! - [`experiment`]: Monte Carlo harness behind the CLI.

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod error;
pub mod experiment;
pub mod path;
pub mod quadrature;
pub mod regression;
pub mod sequential;
pub mod trends;

pub use error::{Error, Result};
