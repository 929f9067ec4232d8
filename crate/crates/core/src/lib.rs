//! Exact response-time analysis of age-based priority scheduling in the
//! M/G/1 queue, together with a discrete-event simulator of the same
//! policies for cross-validation.
//!
//! A policy is described by a rank function per job family: the server
//! always works on the job of minimal rank, and ranks may depend on a job's
//! static information and on its age (service received so far). From that
//! description alone the [`analysis`] module produces per-size mean
//! response times and Laplace-Stieltjes transforms.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod distributions;
pub mod error;
pub mod exec;
pub mod quad;
pub mod rank;
pub mod simulator;
pub mod work;

pub use analysis::{ResponseResult, SystemSpec};
pub use distributions::{ClippedWork, SizeDistribution, SizeRange, WorkLaw};
pub use error::{Result, SoapError};
pub use exec::Execution;
pub use rank::{Family, Policy, Rank, RankBound, RankFunction, Tiebreak};
pub use work::WorkProfile;
