//! Monte Carlo simulation of a two-tier OFDMA network where small cells reuse the
//! macro band through a cascaded precoder: a per-chain null-space stage that hides
//! the small-cell signal from macro users, followed by a regularized inverse that
//! separates the small-cell users.
//!
//! The building blocks live in [`matrix`], [`channel`], [`precoder`] and
//! [`metrics`]; [`experiments`] wires them into seeded, reproducible sweeps.

pub mod channel;
pub mod dims;
pub mod error;
pub mod experiments;
pub mod matrix;
pub mod metrics;
pub mod precoder;

pub use dims::Dimensions;
pub use error::{Error, Result};
pub use faer::c64;
pub use matrix::ComplexMatrix;
