//! Gauge-consistent L2-gradient flows of surface energies depending on a
//! parameterization and a tangential tensor field.
//!
//! The crate is organized bottom-up:
//! - [`grid`], [`patch`], [`geometry`], [`calculus`]: discrete surface patches
//!   and tangential tensor calculus;
//! - [`deformation`]: gradients of deformations, gauges, deformation
//!   derivatives, adjoints and gauge stresses;
//! - [`frank_oseen`]: the one-constant Frank-Oseen energy and its forces;
//! - [`flow`]: the reduced periodic flat-surface gradient flow;
//! - [`verification`], [`suite`]: finite-difference oracles and the named
//!   suites built from them;
//! - [`io`]: configuration and output files.

pub mod calculus;
pub mod deformation;
pub mod error;
pub mod field;
pub mod flow;
pub mod frank_oseen;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod patch;
pub mod random;
pub mod suite;
pub mod verification;

pub use error::{Error, Result};
pub use field::{AmbientField, AmbientTensorField, ScalarField, TangentField, Variance};
pub use geometry::{build_geometry, l2_inner, project_tangent, AmbientInput, FieldRef, GeometryCache};
pub use grid::{GridOps, ParameterGrid};
pub use patch::SurfacePatch;
