//! Pseudospherical surfaces on arbitrary finite time scales.
//!
//! The pipeline: build a two-dimensional grid from two time scales, seed the
//! eight coefficient functions of a quaternion-valued linear system, propagate
//! the wave function exactly by transfer matrices, extract a surface through
//! the Sym formula, dress it with Darboux-Backlund steps, and certify the
//! resulting net numerically — constant Gaussian curvature `K = -4 lambda^2`,
//! asymptotic and weak-Chebyshev conditions, dihedral-angle cross-checks, and
//! the reduction symmetries of the linear system. All of these identities are
//! exact on finite scales, so every gate is a rounding budget.
//!
//! Modules follow the pipeline order:
//!
//! - [`timescale`]: finite time scales, grids, delta derivatives
//! - [`quatalg`]: quaternions and their 2x2 complex matrix form
//! - [`laxpair`]: the linear system, compatibility, propagation
//! - [`surface`]: Sym extraction, curvature, net diagnostics
//! - [`obj`]: Wavefront OBJ export
//! - [`backlund`]: Darboux dressing and iterated chains
//! - [`pipeline`]: config-driven runs producing verification reports

pub mod backlund;
pub mod error;
pub mod laxpair;
pub mod obj;
pub mod pipeline;
pub mod quatalg;
pub mod rng;
pub mod surface;
pub mod timescale;
pub mod tolerances;

pub use error::{Error, Result};
