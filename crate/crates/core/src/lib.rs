//! Numerical lab for time-domain plane-wave scattering off compactly supported potentials
//! in three dimensions.
//!
//! The forward model is u_tt − Δu + q u = −q δ(t − x·ω), simulated with a leapfrog finite
//! difference scheme in which δ is replaced by a Gaussian of width ε. From the simulated
//! field the far-field pattern α(θ, ω, s) is extracted on measurement planes, and the
//! backscatter slice θ = −ω is compared against Radon-transform identities, the Born
//! linearization and translation/smallness properties.

pub mod error;
pub mod farfield;
pub mod geometry;
pub mod harmonics;
pub mod inverse;
pub mod lab;
pub mod potential;
pub mod quad;
pub mod radon;
pub mod solver;

pub use error::{LabError, Result};
pub use geometry::{Direction, Grid3D, ScalarField3D, TimeSeries, Vec3};
pub use potential::Potential;
