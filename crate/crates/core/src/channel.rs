//! Line-of-sight spherical-wavefront channels.
//!
//! Every coefficient is `lambda / (4 pi d) * sqrt(gain) * exp(-j 2 pi d / lambda)`
//! with the exact element-to-element distance, so the same model covers the
//! near and far field.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::geometry::{spherical_in_frame, Frame, Vec3};
use crate::linalg::{CMatrix, CanonicalSvd};
use crate::tris::{SurfaceConfig, SurfaceForm};

/// Patch-like element pattern `2 sin(theta) sin(phi)`, zero in the back
/// half-space.
pub fn element_gain(theta: f64, phi: f64) -> f64 {
    (2.0 * libm::sin(theta) * libm::sin(phi)).max(0.0)
}

pub fn los_coefficient(tx: Vec3, rx: Vec3, wavelength: f64, gain: f64) -> Result<Complex64> {
    if !(wavelength > 0.0) {
        return Err(invalid(format!("wavelength must be positive, got {wavelength}")));
    }
    let d = tx.distance(rx);
    if !(d > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "transmitter and receiver coincide at ({}, {}, {})",
            tx.x, tx.y, tx.z
        )));
    }
    Ok(coefficient(d, wavelength, gain))
}

fn coefficient(d: f64, wavelength: f64, gain: f64) -> Complex64 {
    let amplitude = wavelength / (4.0 * PI * d) * libm::sqrt(gain);
    Complex64::from_polar(amplitude, -2.0 * PI * d / wavelength)
}

/// Where the element pattern of a link is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainModel {
    /// Pattern of the transmitting element, evaluated at the departure
    /// direction in a frame whose broadside is `boresight` (feeder link).
    Transmit { boresight: Vec3 },
    /// Pattern of the receiving element, evaluated at the arrival direction
    /// in a frame whose broadside points from the receiver at `target`
    /// (surface-to-user link, `target` is the surface center).
    ReceiveToward { target: Vec3 },
    /// Same gain for every pair.
    Constant(f64),
}

/// Channel from `tx_points` (columns) to `rx_points` (rows).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub entries: CMatrix,
    pub wavelength: f64,
}

impl ChannelMatrix {
    pub fn rows(&self) -> usize {
        self.entries.rows()
    }

    pub fn cols(&self) -> usize {
        self.entries.cols()
    }
}

pub fn build_channel_matrix(
    tx_points: &[Vec3],
    rx_points: &[Vec3],
    wavelength: f64,
    gain_model: GainModel,
) -> Result<ChannelMatrix> {
    if tx_points.is_empty() || rx_points.is_empty() {
        return Err(invalid("channel endpoints must be non-empty"));
    }
    if !(wavelength > 0.0) {
        return Err(invalid(format!("wavelength must be positive, got {wavelength}")));
    }
    let tx_frame = match gain_model {
        GainModel::Transmit { boresight } => Some(Frame::with_boresight(boresight)?),
        _ => None,
    };
    let mut data = Vec::with_capacity(tx_points.len() * rx_points.len());
    for &rx in rx_points {
        let rx_frame = match gain_model {
            GainModel::ReceiveToward { target } => Some(Frame::with_boresight(target - rx)?),
            _ => None,
        };
        for &tx in tx_points {
            let gain = match gain_model {
                GainModel::Transmit { .. } => {
                    let s = spherical_in_frame(tx, rx, tx_frame.as_ref().expect("set above"))?;
                    element_gain(s.polar, s.azimuth)
                }
                GainModel::ReceiveToward { .. } => {
                    let s = spherical_in_frame(rx, tx, rx_frame.as_ref().expect("set above"))?;
                    element_gain(s.polar, s.azimuth)
                }
                GainModel::Constant(g) => g,
            };
            data.push(los_coefficient(tx, rx, wavelength, gain)?);
        }
    }
    Ok(ChannelMatrix {
        entries: CMatrix::from_row_major(rx_points.len(), tx_points.len(), data)?,
        wavelength,
    })
}

pub fn svd_canonical(m: &ChannelMatrix) -> Result<CanonicalSvd> {
    CanonicalSvd::compute(&m.entries)
}

/// End-to-end `K x N_T` channel `H * Phi * G`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannel {
    pub entries: CMatrix,
}

impl EffectiveChannel {
    pub fn users(&self) -> usize {
        self.entries.rows()
    }

    pub fn antennas(&self) -> usize {
        self.entries.cols()
    }

    /// Row `k`, the effective channel seen by user `k`.
    pub fn user(&self, k: usize) -> &[Complex64] {
        self.entries.row(k)
    }
}

pub fn effective_channel(h: &ChannelMatrix, surface: &SurfaceConfig, g: &ChannelMatrix) -> Result<EffectiveChannel> {
    let n = h.cols();
    if g.rows() != n {
        return Err(invalid(format!(
            "user channel has {n} surface elements but feeder channel has {}",
            g.rows()
        )));
    }
    if surface.elements() != n {
        return Err(invalid(format!(
            "surface configuration has {} elements, channels have {n}",
            surface.elements()
        )));
    }
    let entries = match &surface.form {
        SurfaceForm::Diagonal(phases) => {
            let weighted = h.entries.scale_columns(phases);
            weighted.mul(&g.entries)?
        }
        SurfaceForm::Dense(phi) => h.entries.mul(phi)?.mul(&g.entries)?,
        SurfaceForm::LowRank { left, right } => {
            let hl = h.entries.mul(left)?;
            let rg = right.adjoint().mul(&g.entries)?;
            hl.mul(&rg)?
        }
        SurfaceForm::ImplicitEigenmode { feeder, users } => {
            if users.left.rows() != h.rows() || feeder.right.rows() != g.cols() {
                return Err(invalid("eigenmode surface does not match the channel dimensions"));
            }
            eigenmode_composite(feeder, users)
        }
    };
    Ok(EffectiveChannel { entries })
}

/// `H Q U^H G` for the eigenmode surface: `sum_k rho_k xi_k p_k v_k^H`.
fn eigenmode_composite(feeder: &CanonicalSvd, users: &CanonicalSvd) -> CMatrix {
    let k_users = users.left.rows();
    let n_t = feeder.right.rows();
    let modes = users.singular_values.len().min(feeder.singular_values.len());
    let mut out = CMatrix::zeros(k_users, n_t);
    for m in 0..modes {
        let gain = users.singular_values[m] * feeder.singular_values[m];
        for r in 0..k_users {
            let p = users.left[(r, m)] * gain;
            for c in 0..n_t {
                out[(r, c)] += p * feeder.right[(c, m)].conj();
            }
        }
    }
    out
}
