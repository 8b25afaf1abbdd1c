//! Robust loss functions and their probabilistic reading.
//!
//! The crate provides, as a library and behind the `robust-loss-lab` CLI:
//!
//! * [`losses`] — L1, L2, Huber, and the KL-Laplace loss with its
//!   derivatives, approximations, tight Huber bounds, and the exact
//!   parameter-scaling calculus;
//! * [`divergence`] — closed-form entropy, cross entropy and KL divergence
//!   of Laplace distributions, validated against a composite-Simpson
//!   quadrature oracle;
//! * [`distributions`] — reproducible heavy-tailed noise sampling on a
//!   counter-based generator;
//! * [`toyfit`] — a polynomial-fitting experiment tracing how the optimal
//!   Huber transition point follows the label-noise scale;
//! * [`interp`] — an exact-rational interpreter turning box-regression loss
//!   hyper-parameters into label/prediction uncertainty scales;
//! * [`verify`] — the numeric invariant suite behind `robust-loss-lab verify`.
//!
//! The loss and divergence math is generic over the scalar type through
//! [`Real`]; the aliases below fix the `f64` instantiations the CLI and the
//! experiments use.

pub mod cli;
pub mod distributions;
pub mod divergence;
pub mod interp;
pub mod losses;
pub mod rational;
pub mod scalar;
pub mod toyfit;
pub mod verify;

pub use scalar::Real;

/// `f64` Huber parameters.
pub type HuberParams64 = losses::HuberParams<f64>;
/// `f32` Huber parameters.
pub type HuberParams32 = losses::HuberParams<f32>;
/// `f64` KL-Laplace loss parameters.
pub type KlLossParams64 = losses::KlLossParams<f64>;
/// `f32` KL-Laplace loss parameters.
pub type KlLossParams32 = losses::KlLossParams<f32>;
/// `f64` Laplace distribution.
pub type LaplaceDist64 = divergence::LaplaceDist<f64>;
/// `f32` Laplace distribution.
pub type LaplaceDist32 = divergence::LaplaceDist<f32>;
