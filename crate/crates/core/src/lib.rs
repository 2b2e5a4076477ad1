//! Parisian stopping times under continuous-time Markov chain (CTMC) approximations.
//!
//! A one-dimensional Markov model (drift, volatility and a Lévy-type jump
//! measure) is replaced by a finite-state chain on a designed grid. For the
//! chain, the Laplace transform of a Parisian stopping time, and of a Parisian
//! option price as a function of maturity, are closed-form matrix expressions.
//! They are evaluated at the nodes of an Euler-summation Fourier inversion to
//! recover distribution functions and prices.
//!
//! Module map:
//!
//! * [`model`]: drift / volatility / jump measure and the experiment presets.
//! * [`grid`]: uniform and piecewise-uniform grids with anchor bookkeeping.
//! * [`generator`]: the CTMC rate matrix (tridiagonal or dense).
//! * [`linalg`]: masked resolvent solves and the matrix-exponential action.
//! * [`parisian`]: first-passage blocks and the Parisian transforms.
//! * [`laplace`]: inversion nodes, weights and the inversion itself.
//! * [`pricing`]: CDFs, option prices, ruin probabilities, extrapolation.
//! * [`extensions`]: multi-sided windows, MinParisianHit, bonds, regime switching.
//! * [`mc`]: an exact path simulator of the chain used as an independent oracle.
//! * [`setup`]: the standard experiment configuration (grid + chain + request).

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod extensions;
pub mod generator;
pub mod grid;
pub mod laplace;
pub mod linalg;
pub mod mc;
pub mod model;
pub mod parisian;
pub mod pricing;
pub mod quad;
pub mod setup;

mod par;

pub use error::{Error, Result};
pub use generator::{DriftScheme, Generator, Structure};
pub use grid::{Anchor, AnchorKind, Grid};
pub use laplace::LaplaceGrid;
pub use linalg::expmv::{ExpmvScheme, Extrapolation};
pub use model::{JumpMeasure, Model, ModelSpec, Preset, RegimeModel, StateTransform};
pub use parisian::{ParisianProblem, ParisianSolver, Side};

pub use num_complex::Complex64;
