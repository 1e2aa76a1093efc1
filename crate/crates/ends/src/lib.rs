//! Spectral classification of manifold ends close to warped products.
//!
//! The library reduces an end to a radial density `omega_bar`, evaluates
//! integral discreteness criteria on it, cross-checks them against a direct
//! Sturm-Liouville eigensolver and capacity estimates, and tests stochastic
//! completeness of the radial diffusion.

pub mod config;
pub mod criteria;
pub mod endmodel;
pub mod error;
pub mod expr;
pub mod profile;
pub mod quad;
pub mod report;
pub mod spectrum;
pub mod stochastic;
pub mod table;

pub use error::{EndsError, Result};
pub use profile::{RadialProfile, VolumeClass};
