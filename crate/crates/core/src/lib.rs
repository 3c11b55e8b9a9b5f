//! Structure certificates, Riesz potentials, a Fourier-multiplier solver and
//! numerical inequality checks for first-order and higher-order systems
//! `A*(D) f = mu` with measure data.
//!
//! Modules, bottom up:
//!
//! * [`grid`]: cell-centred periodic grids, FFTs and multipliers.
//! * [`operator`]: homogeneous constant-coefficient operators, symbols and
//!   the ellipticity / canceling / cocanceling certificates.
//! * [`measures`]: atomic and gridded vector measures with Ahlfors and Wolff
//!   type functionals.
//! * [`potentials`]: Riesz potentials, energies and Riesz transforms.
//! * [`solver`]: the multiplier solver for `A*(D) f = mu` and its kernel.
//! * [`lab`]: ensembles and inequality reports.
//! * [`io`]: JSON documents.

pub mod ensemble;
pub mod error;
pub mod grid;
pub mod io;
pub mod lab;
pub mod linalg;
pub mod measures;
pub mod numerics;
pub mod operator;
pub mod potentials;
pub mod solver;
pub mod trend;

pub use error::{Error, ErrorClass, Result};
pub use num_complex::Complex64;
