//! Spectral Galerkin simulation of the damped nonlinear wave equation
//!
//! ```text
//! u_tt − Δu + k‖u_t‖^p u_t + f(u) = ∫_Ω K(x, y) u_t(y) dy + h(x)
//! ```
//!
//! on a box with Dirichlet boundary conditions, together with experiments
//! probing its long-time behaviour.

pub mod basis;
pub mod cli;
pub mod config;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod integrator;
pub mod model;
pub mod registry;
pub mod strategies;
pub mod verify;

pub use basis::{BasisSpec, SpectralBasis};
pub use error::{Error, Result};
pub use integrator::{integrate, step, Observers, StepConfig, Trajectory};
pub use model::{PhysicsConfig, State};
pub use strategies::Strategies;
