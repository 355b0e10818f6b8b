//! Link-level simulation of an active multi-antenna feeder (AMAF) that
//! space-feeds a transmissive reconfigurable intelligent surface (T-RIS),
//! serving several single-antenna users in the radiative near field.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! pipeline:
//!
//! - [`geometry`]: planar element grids, user placements, spherical offsets.
//! - [`channel`]: line-of-sight spherical-wavefront channels and their
//!   phase-canonical SVDs.
//! - [`precoding`]: feeder beamformers and power allocation.
//! - [`tris`]: the surface configurations (diagonal and non-diagonal).
//! - [`metrics`]: SINR rates, cooperative rates and Jain's fairness index.
//! - [`experiments`]: scenarios, the strategy dispatcher and the studies.
//!
//! File formats, configuration parsing, parallel execution and the command
//! line live in the `atris-sim` crate.
#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod channel;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod linalg;
pub mod metrics;
pub mod precoding;
pub mod tris;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Wavelength in meters for a carrier frequency in Hz.
pub fn wavelength(carrier_hz: f64) -> f64 {
    SPEED_OF_LIGHT / carrier_hz
}
