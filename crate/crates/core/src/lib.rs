//! Specific relative entropy between continuous martingale laws.
//!
//! The crate computes `H(Q|P)` restricted to the grids `{k/n}`, its scaling
//! limit `h(Q|P) = lim H(Q|P)|ₙ / n`, and Gantert's lower bound
//! `E_Q ∫₀¹ F_l(Σ_t) dt`, both in closed form for the Gaussian, Brownian and
//! Black-Scholes families and by Monte Carlo otherwise.
//!
//! Monte Carlo work is split over paths. With the default `parallel` feature
//! paths run on the rayon pool; results are bit-identical to the sequential
//! executor for any worker count.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod gaussian_divergence;
pub mod grid_entropy;
pub mod models;
pub mod oracles;
pub mod rng;
pub mod spdlinalg;
pub mod specific_entropy;
pub mod value;

pub use error::{Error, Result};
pub use exec::{Execution, McConfig, McEntropy, McEstimate};
pub use grid_entropy::{ModelPair, Route};
pub use models::{ModelSpec, Volatility};
pub use spdlinalg::{Matrix, SpdMatrix};
pub use value::Entropy;
