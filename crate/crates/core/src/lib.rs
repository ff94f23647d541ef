//! Spectral numerics for decay analysis of incompressible Oldroyd-B fluids.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`]: periodic Fourier grids, field types, differential
//!   operators and the Leray projector.
//! * [`quadrature`]: radial and spherical quadrature for continuum norms.
//! * [`decay`]: decay characters of initial data and the
//!   diagonalizable-semigroup decay law.
//! * [`linear`]: the exact linear propagator, its kernel bounds and
//!   continuum energy curves.
//! * [`solver`]: the nonlinear exponential-integrator solver on the box.
//! * [`rates`]: predicted exponents, slope fits and alignment diagnostics.
//! * [`io`]: checkpoints, CSV series, JSON reports and SVG plots.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod decay;
pub mod error;
pub mod io;
pub mod linear;
pub mod quadrature;
pub mod rates;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
