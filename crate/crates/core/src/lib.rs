//! Vanishing-viscosity laboratory for compressible Euler flow in nozzles and
//! spherical symmetry.

pub mod diagnostics;
pub mod entropy;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod quadrature;
pub mod schedule;
pub mod solver;
pub mod thermo;

pub use error::{Error, Result};
pub use geometry::{ConditionReport, NozzleProfile, ProfileKind, TabulatedArea};
pub use thermo::GasLaw;
