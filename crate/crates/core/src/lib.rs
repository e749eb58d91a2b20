//! Fluctuation identities for spectrally negative Lévy processes under
//! Parisian (periodic) reflection, with classical reflecting barriers, plus a
//! Monte Carlo simulator that checks every identity path by path.
//!
//! Layers, bottom up: [`levy`] (Laplace exponent and its inverse), [`scale`]
//! (scale functions), [`kernels`] (the convolution operator and the derived
//! kernels), [`identities`] (the registry of closed-form expectations),
//! [`sim`] (path simulation) and [`verify`] (analytic vs Monte Carlo).

pub mod cli;
pub mod error;
pub mod identities;
pub mod kernels;
pub mod levy;
pub mod numeric;
pub mod scale;
pub mod sim;
pub mod verify;

pub use error::{Error, Result};
pub use levy::{LevyModel, ModelKind, Phase, VariationClass};
