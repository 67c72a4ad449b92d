//! Analysis toolkit for the SIR meta distribution of two-user downlink NOMA
//! in Poisson cellular networks.
//!
//! A base-station point process is observed by the typical user at the
//! origin, which is paired either as a cell-center (CC) or cell-edge (CE)
//! user according to the ratio of its serving-link distance to its
//! dominant-interferer distance. The crate provides:
//!
//! * [`specfun`] — the numerical kernels: adaptive Gauss-Kronrod quadrature
//!   on finite and semi-infinite intervals (real or complex integrands),
//!   the interference kernel `Z`, and the regularized incomplete beta
//!   function.
//! * [`model`] — network/power-split parameter types, CC/CE classification,
//!   and the joint serving/dominant-distance law with an exact sampler.
//! * [`analytic`] — moments of the meta distribution for CC/CE users under
//!   NOMA and OMA, CE moment bounds, beta approximation, Gil-Pelaez
//!   inversion, mean local delay, and cell throughput.
//! * [`simulate`] — Monte Carlo ground truth on a finite window with
//!   per-realization random substreams (deterministic under any worker
//!   count).
//! * [`meta`] — the meta-distribution CCDF estimators (`beta`, `gilpelaez`,
//!   `empirical`) behind a common trait, registered by name so front ends
//!   can select them at runtime.

pub mod analytic;
mod error;
pub mod meta;
pub mod model;
pub mod simulate;
pub mod specfun;

pub use error::{Error, Result};
