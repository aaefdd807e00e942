//! Transfer-matrix treatment of a qubit in a piecewise-constant random field.
//!
//! A static field along z is summed with a random field drawn fresh on every
//! interval of length `tau`. Averaging the adjoint (Bloch-vector) rotation of
//! one interval over the draw yields a 3x3 dynamical map `T`; its matrix
//! powers propagate the state and its eigenvalues set the relaxation rates
//! 1/T1, 1/T2 and the precession frequency. For draws correlated from one
//! interval to the next through a separable kernel, the same algebra runs on
//! a block matrix `S` acting on (kernel basis) x (Bloch component) space.
//!
//! `oracles` holds the independent cross-checks: trajectory Monte Carlo,
//! Redfield-type perturbative rates, short-time series, and eigenvalue
//! expansions. They share no code with the transfer-matrix route beyond the
//! single-interval rotation.

// index loops over small fixed-size matrices read better than iterator
// chains here and match how the formulas are written
#![allow(clippy::needless_range_loop)]

pub mod correlated;
pub mod linalg;
pub mod noise;
pub mod oracles;
pub mod parallel;
pub mod su2;
pub mod transfer;

pub use su2::{BlochVector, FieldVector};
