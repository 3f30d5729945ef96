//! Exact homogeneous approximation of single-input control-affine systems
//! `x' = a(t,x) + b(t,x) u` with `a(t,0) = 0`.
//!
//! The pipeline: enumerate the graded free algebra of nonlinear power moments
//! ([`freealg`]), build a graded basis of its free Lie algebra ([`liealg`]),
//! compute the series coefficients of the system ([`series`]), then select the
//! core Lie subalgebra, project onto the orthogonal complement of its right
//! ideal and reconstruct polynomial approximating systems ([`approx`]).
//! [`verify`] checks the results numerically.

pub mod freealg;
pub mod liealg;
pub mod approx;
pub mod linalg;
pub mod rational;
pub mod series;
pub mod symexpr;
pub mod verify;

pub use rational::Rational;
