//! Active learning of bounded hemimetrics from threshold queries.
//!
//! A user is asked whether they would switch from item `i` to item `j` for
//! an offer `c`; they accept iff `c` reaches the unknown distance
//! `D[i][j]`. The learner keeps per-pair bounds, tightens them through the
//! triangle inequalities after each answer, and chooses queries so that
//! whole clusters of items are learned from few labels.
//!
//! - [`metric`]: hemimetric validation, closure and instance files.
//! - [`bounds`]: the per-pair bound state.
//! - [`projection`]: bound tightening and its verification oracles.
//! - [`policy`]: query selection.
//! - [`response`]: simulated users and repeated-query wrappers for noise.
//! - [`learner`]: the learning loop, baselines and closed-form bounds.
//! - [`instances`]: ground-truth generators.

pub mod bounds;
pub mod error;
pub mod instances;
pub mod learner;
pub mod matrix;
pub mod metric;
pub mod policy;
pub mod projection;
pub mod response;

pub use bounds::{max_gap, BoundsState, LabeledDatum, Query};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use metric::{hemimetric_closure, validate_hemimetric, DistanceMatrix, Violation};
