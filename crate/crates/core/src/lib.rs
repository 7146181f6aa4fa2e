//! Exact classical simulator for the quantum algorithm that solves the hidden
//! polynomial problem: given `B(r, s) = π(s − Q(r))` for a secret permutation
//! `π`, recover the polynomial `Q`.
//!
//! * [`gf`] and [`quadratic`]: finite field arithmetic, trace, characters, roots.
//! * [`polyring`]: uni- and multivariate polynomials, Lagrange interpolation.
//! * [`blackbox`]: the permutation-masked oracle with query accounting.
//! * [`fibers`]: solution sets of `Φ_n(b)·x = w`, their sizes, and good sets.
//! * [`pgm`]: analytic success probabilities, outcome distributions, sampling.
//! * [`densmat`]: dense density-matrix oracle for the measurement pipeline.
//! * [`reduction`]: multivariate to univariate reduction by interpolation.
//! * [`baseline`]: classical collision-finding solver and its scaling.

pub mod baseline;
pub mod blackbox;
pub mod densmat;
pub mod error;
pub mod fibers;
pub mod gf;
pub mod pgm;
pub mod polyring;
pub mod quadratic;
pub mod reduction;
mod stats;

pub use error::{ErrorKind, HppError, Result};
pub use gf::{Felt, FieldCtx, FieldDescriptor};
