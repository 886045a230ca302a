//! Quasi-static droplet evolution with contact-angle hysteresis.
//!
//! The library discretizes a one-phase free-boundary energy (Dirichlet
//! energy plus wetted volume) on a uniform grid, augments it with an
//! asymmetric dissipation distance between wetted sets, and evolves profiles
//! by incremental minimization under piecewise strictly monotone boundary
//! forcing. Advancing fronts select the maximal minimizer, receding fronts
//! the minimal one, jumps are detected and localized, and a branch tree is
//! produced where a jump coincides with a change of forcing direction.
//!
//! Core math is generic over the scalar type (`f32` / `f64`); the concrete
//! aliases below fix `f64`, which is what the CLI and the file formats use.

pub mod config;
pub mod energy;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod io;
pub mod oracle;
pub mod scalar;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// f64 domain, the precision used by the CLI.
pub type Domain64 = grid::GridDomain<f64>;
pub type Profile64 = energy::Profile<f64>;
pub type Params64 = energy::HysteresisParams<f64>;

/// f32 variants for reduced-precision experiments.
pub type Domain32 = grid::GridDomain<f32>;
pub type Profile32 = energy::Profile<f32>;
pub type Params32 = energy::HysteresisParams<f32>;
