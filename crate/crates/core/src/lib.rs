//! Penalized pseudo-spectral Navier-Stokes with a small immersed disc.
//!
//! The crate provides the periodic grid and spectral operators, the orthogonal
//! projection onto fields that are rigid on a disc, a coupled fluid/body
//! solver, a passive tracer integrator and the driver for the vanishing-radius
//! study.

extern crate openblas_src;

pub mod config;
pub mod error;
pub mod grid;
pub mod initial;
pub mod interp;
mod linalg;
pub mod rigid;
pub mod solver;
pub mod spectral;
pub mod study;
pub mod tracer;

pub use error::{Error, Result};
pub use grid::{GridSpec, RegionMask, ScalarField, VectorField2};
pub use initial::InitialField;
pub use rigid::{DecompositionResult, DiscGeometry, RateFit, RigidProjector};
pub use solver::{BodyState, Coupling, SimConfig, Solver, StepDiagnostics};
pub use spectral::Norm;
pub use study::{StudyConfig, StudyRecord, StudyReport};
pub use tracer::Trajectory;

