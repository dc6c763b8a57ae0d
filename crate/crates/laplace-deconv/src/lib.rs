//! Numerical toolkit for deconvolving mixing distributions from noisy
//! observations under a Dirichlet process prior.
//!
//! The model: latent locations are drawn from an unknown probability measure
//! `G` supported on `[-a, a]`, additive noise is drawn from a known density
//! `f` (Laplace by default), and only the sums are observed. The observation
//! density is the convolution `p_G = f * G`. This crate provides the pieces
//! needed to study how well `G` and `p_G` can be recovered:
//!
//! * [`measures`]: finitely supported probability measures on `[-a, a]`,
//!   their CDFs, quantiles, moments, and JSON serialization.
//! * [`kernels`]: noise densities (Laplace, Gaussian) with their
//!   characteristic functions and smoothness classification.
//! * [`distances`]: exact one-dimensional Wasserstein distances between
//!   discrete measures, and Hellinger / L_q / Kullback-Leibler divergences
//!   between mixture densities via adaptive quadrature.
//! * [`approximation`]: moment-matching reduction of a mixing measure to a
//!   few atoms while keeping the mixture density close.
//! * [`entropy`]: explicit covering nets for weight simplices and classes of
//!   measures, with certified radii and coverage verification.
//! * [`posterior`]: Dirichlet process prior sampling, a marginal Gibbs
//!   sampler for the mixture posterior, and prior small-ball mass estimates.
//! * [`rates`]: posterior contraction experiments over a ladder of sample
//!   sizes, with rate fitting and CSV reporting.
//!
//! Everything is deterministic given explicit seeds; no global RNG state.

#![forbid(unsafe_code)]

pub mod approximation;
pub mod calibration;
pub mod cli;
pub mod distances;
pub mod entropy;
mod error;
pub mod kernels;
pub mod linprog;
pub mod measures;
pub mod posterior;
pub mod quad;
pub mod rates;
pub mod stats;

pub use error::{Error, Result};
