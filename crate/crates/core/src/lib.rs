//! Spectra of the linearized 2D Euler operator on lattice classes, and the
//! Euler / Navier–Stokes line model built on one class.

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod lattice;
pub mod manifold;
pub mod output;
pub mod spectral;
