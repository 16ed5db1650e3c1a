//! Numerical toolkit for the continuous-time weakly self-avoiding walk on ℤ⁴.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`] and [`lattice_green`]: lattice geometries, Green functions and bubble diagrams
//!   by Brillouin-zone quadrature;
//! * [`cov_decomp`]: a multiscale decomposition of the massive Green function and the
//!   coefficient sequences (β, η, χ, scale indices) that drive the flow;
//! * [`rg_flow`]: the quadratic renormalisation-group recursion, its boundary-value solution
//!   and the derivative flow;
//! * [`susceptibility`]: critical point and susceptibility predictions assembled from the above;
//! * [`grassmann`]: a finite Grassmann algebra with Berezin integration for exact small-graph
//!   checks of the supersymmetric representation;
//! * [`walk_mc`]: direct simulation of the walk.
//!
//! Heavy loops go through [`Exec`], which runs them on rayon when the `parallel` feature is on.
//! Results never depend on the number of worker threads.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cov_decomp;
pub mod error;
pub mod exec;
pub mod grassmann;
pub mod lattice;
pub mod lattice_green;
pub mod quad;
pub mod rg_flow;
pub mod susceptibility;
pub mod walk_mc;

pub use error::{Error, Result};
pub use exec::Exec;
pub use lattice::{Geometry, GraphLaplacian, LatticeSpec};
