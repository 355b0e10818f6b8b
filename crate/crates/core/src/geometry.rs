//! Element grids, user placements and spherical offsets.
//!
//! Angle convention: `theta` is the polar angle from +z, `phi` the azimuth
//! from +x in the xy-plane. The feeder and the surface radiate towards +y,
//! i.e. broadside is `theta = phi = 90 deg`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Neg, Sub};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (o - self).norm()
    }

    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Axis a planar grid is perpendicular to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn unit(self) -> Vec3 {
        match self {
            Axis::X => Vec3::X,
            Axis::Y => Vec3::Y,
            Axis::Z => Vec3::Z,
        }
    }

    /// In-plane (column direction, row direction) unit vectors.
    fn plane(self) -> (Vec3, Vec3) {
        match self {
            Axis::X => (Vec3::Y, Vec3::Z),
            Axis::Y => (Vec3::X, Vec3::Z),
            Axis::Z => (Vec3::X, Vec3::Y),
        }
    }
}

/// Uniform planar array. Element `r * cols + c` sits in row `r`, column `c`;
/// columns advance along the first in-plane axis (x for an xz-plane grid),
/// rows along the second.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGrid {
    pub positions: Vec<Vec3>,
    pub rows: usize,
    pub cols: usize,
    pub spacing: f64,
    pub normal: Vec3,
    pub center: Vec3,
    /// Diagonal of the nominal aperture `(cols*spacing) x (rows*spacing)`,
    /// i.e. the corner-to-corner element distance plus one cell diagonal.
    pub diagonal_length: f64,
    /// Distance between the first and last corner elements.
    pub corner_distance: f64,
}

impl ElementGrid {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }
}

pub fn build_upa(rows: usize, cols: usize, spacing: f64, center: Vec3, normal_axis: Axis) -> Result<ElementGrid> {
    if rows == 0 || cols == 0 {
        return Err(invalid(format!("grid dimensions must be positive, got {rows}x{cols}")));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(invalid(format!("grid spacing must be positive, got {spacing}")));
    }
    if !center.is_finite() {
        return Err(invalid("grid center must be finite"));
    }
    let (col_dir, row_dir) = normal_axis.plane();
    let col_mid = (cols as f64 - 1.0) / 2.0;
    let row_mid = (rows as f64 - 1.0) / 2.0;
    let mut positions = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let u = (c as f64 - col_mid) * spacing;
            let v = (r as f64 - row_mid) * spacing;
            positions.push(center + col_dir * u + row_dir * v);
        }
    }
    let side_c = cols as f64 * spacing;
    let side_r = rows as f64 * spacing;
    let corner_c = (cols - 1) as f64 * spacing;
    let corner_r = (rows - 1) as f64 * spacing;
    Ok(ElementGrid {
        positions,
        rows,
        cols,
        spacing,
        normal: normal_axis.unit(),
        center,
        diagonal_length: libm::hypot(side_c, side_r),
        corner_distance: libm::hypot(corner_c, corner_r),
    })
}

/// Users on a circle of `radius` around `center` in the horizontal plane.
pub fn place_ue_ring(radius: f64, azimuths: &[f64], center: Vec3) -> Result<Vec<Vec3>> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid(format!("ring radius must be positive, got {radius}")));
    }
    Ok(azimuths
        .iter()
        .map(|&phi| center + Vec3::new(radius * libm::cos(phi), radius * libm::sin(phi), 0.0))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalOffset {
    pub distance: f64,
    /// Azimuth in (-pi, pi].
    pub azimuth: f64,
    /// Polar angle in [0, pi].
    pub polar: f64,
}

/// Orthonormal local frame whose +y axis is the given boresight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    x: Vec3,
    y: Vec3,
    z: Vec3,
}

impl Frame {
    pub fn with_boresight(boresight: Vec3) -> Result<Frame> {
        let y = boresight
            .normalized()
            .ok_or_else(|| invalid("frame boresight must be a non-zero finite vector"))?;
        // Keep local z as close to global z as possible; fall back to -x when
        // looking straight up or down.
        let reference = if libm::fabs(y.z) < 1.0 - 1e-12 {
            Vec3::Z
        } else {
            -Vec3::X
        };
        let z = (reference - y * reference.dot(y))
            .normalized()
            .ok_or_else(|| invalid("cannot orient frame"))?;
        let x = y.cross(z);
        Ok(Frame { x, y, z })
    }

    pub fn to_local(&self, v: Vec3) -> Vec3 {
        Vec3::new(v.dot(self.x), v.dot(self.y), v.dot(self.z))
    }
}

/// Distance and direction of `to` as seen from `from`, in the local frame
/// whose broadside (+y) is `frame_normal`. For `frame_normal = +y` this is
/// the global frame.
pub fn relative_spherical(from: Vec3, to: Vec3, frame_normal: Vec3) -> Result<SphericalOffset> {
    let frame = Frame::with_boresight(frame_normal)?;
    spherical_in_frame(from, to, &frame)
}

pub fn spherical_in_frame(from: Vec3, to: Vec3, frame: &Frame) -> Result<SphericalOffset> {
    let delta = to - from;
    let distance = delta.norm();
    if !(distance > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "coincident points at ({}, {}, {})",
            from.x, from.y, from.z
        )));
    }
    let local = frame.to_local(delta);
    let polar = libm::acos((local.z / distance).clamp(-1.0, 1.0));
    let planar = libm::hypot(local.x, local.y);
    let azimuth = if planar <= distance * 1e-15 {
        0.0
    } else {
        let a = libm::atan2(local.y, local.x);
        if a <= -PI {
            PI
        } else {
            a
        }
    };
    Ok(SphericalOffset {
        distance,
        azimuth,
        polar,
    })
}

/// Fraunhofer distance `2 L^2 / lambda` for an aperture of largest
/// dimension `L`.
pub fn fraunhofer_distance_for_aperture(aperture: f64, wavelength: f64) -> Result<f64> {
    if !(wavelength > 0.0) {
        return Err(invalid(format!("wavelength must be positive, got {wavelength}")));
    }
    Ok(2.0 * aperture * aperture / wavelength)
}

/// Fraunhofer distance of a grid, using its nominal aperture diagonal.
pub fn fraunhofer_distance(grid: &ElementGrid, wavelength: f64) -> Result<f64> {
    fraunhofer_distance_for_aperture(grid.diagonal_length, wavelength)
}
