//! Frames, trajectories and virtual-array geometry.
//!
//! The local frame has `x` along the direction of motion, `y` cross-track
//! (positive to the left) and `z` up. Slow time is centered on the synthetic
//! aperture: pulse `m` of `M` fires at `tau_m = (m - (M-1)/2) * PRI`, so
//! `tau = 0` is the aperture center. Virtual phase centers (VPCs) are indexed
//! the same way around the array center.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const UNIT_TOLERANCE: f64 = 1e-9;

/// A 3D position, velocity, direction or wavevector.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
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
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

/// Constant-velocity platform trajectory sampled at `pulses` slow-time instants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Reference position at `tau = 0` (aperture center).
    pub position: Vec3,
    pub velocity: Vec3,
    pub pulses: usize,
    pub pri: f64,
}

impl Trajectory {
    pub fn new(position: Vec3, velocity: Vec3, pulses: usize, pri: f64) -> Result<Self> {
        let t = Self {
            position,
            velocity,
            pulses,
            pri,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pulses == 0 {
            return Err(Error::InvalidConfig("trajectory needs at least one pulse".into()));
        }
        if !(self.pri > 0.0 && self.pri.is_finite()) {
            return Err(Error::InvalidConfig(format!("PRI must be positive, got {}", self.pri)));
        }
        if !self.position.is_finite() || !self.velocity.is_finite() {
            return Err(Error::InvalidConfig("trajectory has non-finite components".into()));
        }
        Ok(())
    }

    /// Slow time of pulse `m`, centered on the aperture.
    pub fn slow_time(&self, m: usize) -> f64 {
        centered_index(m, self.pulses) * self.pri
    }

    pub fn slow_time_axis(&self) -> Vec<f64> {
        (0..self.pulses).map(|m| self.slow_time(m)).collect()
    }

    pub fn position_at(&self, tau: f64) -> Vec3 {
        self.position + self.velocity * tau
    }

    pub fn check_pulse(&self, m: usize) -> Result<()> {
        if m >= self.pulses {
            return Err(Error::IndexOutOfRange {
                what: "pulse",
                index: m,
                len: self.pulses,
            });
        }
        Ok(())
    }
}

/// `i - (len-1)/2`, exact in floating point for any realistic length.
pub fn centered_index(i: usize, len: usize) -> f64 {
    i as f64 - (len as f64 - 1.0) / 2.0
}

/// Uniform linear virtual array along `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub elements: usize,
    pub spacing: f64,
    /// Lever arm from the navigation reference to the array center.
    #[serde(default)]
    pub offset: Vec3,
}

impl ArrayConfig {
    pub fn new(elements: usize, spacing: f64, offset: Vec3) -> Result<Self> {
        let a = Self {
            elements,
            spacing,
            offset,
        };
        a.validate()?;
        Ok(a)
    }

    /// `elements` VPCs spaced by a quarter wavelength.
    pub fn quarter_wavelength(elements: usize, wavelength: f64) -> Result<Self> {
        Self::new(elements, wavelength / 4.0, Vec3::ZERO)
    }

    pub fn validate(&self) -> Result<()> {
        if self.elements == 0 {
            return Err(Error::InvalidConfig("array needs at least one VPC".into()));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "VPC spacing must be positive, got {}",
                self.spacing
            )));
        }
        if !self.offset.is_finite() {
            return Err(Error::InvalidConfig("array offset is not finite".into()));
        }
        Ok(())
    }

    /// Signed cross-track offset of VPC `n` from the array center.
    pub fn element_offset(&self, n: usize) -> f64 {
        centered_index(n, self.elements) * self.spacing
    }

    /// Array center at slow time `tau`.
    pub fn center(&self, traj: &Trajectory, tau: f64) -> Vec3 {
        traj.position_at(tau) + self.offset
    }

    /// Array center at `tau = 0`, the linearization point for wavevectors.
    pub fn aperture_center(&self, traj: &Trajectory) -> Vec3 {
        self.center(traj, 0.0)
    }
}

/// Horizontal back-projection grid at a single focusing height.
///
/// Pixels are addressed `(row, col)` with rows along `y` and columns along `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundGrid {
    pub x0: f64,
    pub dx: f64,
    pub nx: usize,
    pub y0: f64,
    pub dy: f64,
    pub ny: usize,
    pub height: f64,
}

impl GroundGrid {
    pub fn new(x0: f64, dx: f64, nx: usize, y0: f64, dy: f64, ny: usize, height: f64) -> Result<Self> {
        let g = Self {
            x0,
            dx,
            nx,
            y0,
            dy,
            ny,
            height,
        };
        g.validate()?;
        Ok(g)
    }

    /// Grid covering `[x_min, x_max] x [y_min, y_max]` inclusive of both ends
    /// when the extent is a multiple of the spacing.
    pub fn from_extent(
        (x_min, x_max): (f64, f64),
        (y_min, y_max): (f64, f64),
        dx: f64,
        dy: f64,
        height: f64,
    ) -> Result<Self> {
        if !(dx > 0.0 && dy > 0.0) {
            return Err(Error::InvalidConfig("grid spacings must be positive".into()));
        }
        if !(x_max >= x_min && y_max >= y_min) {
            return Err(Error::InvalidConfig("grid extent is empty".into()));
        }
        let nx = ((x_max - x_min) / dx + 1e-9).floor() as usize + 1;
        let ny = ((y_max - y_min) / dy + 1e-9).floor() as usize + 1;
        Self::new(x_min, dx, nx, y_min, dy, ny, height)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dx > 0.0 && self.dy > 0.0 && self.dx.is_finite() && self.dy.is_finite()) {
            return Err(Error::InvalidConfig("grid spacings must be positive".into()));
        }
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::InvalidConfig("grid is empty".into()));
        }
        if !(self.x0.is_finite() && self.y0.is_finite() && self.height.is_finite()) {
            return Err(Error::InvalidConfig("grid origin is not finite".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, col: usize) -> f64 {
        self.x0 + col as f64 * self.dx
    }

    pub fn y(&self, row: usize) -> f64 {
        self.y0 + row as f64 * self.dy
    }

    pub fn position(&self, row: usize, col: usize) -> Vec3 {
        Vec3::new(self.x(col), self.y(row), self.height)
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.nx + col
    }

    /// Nearest pixel to a horizontal position, if it falls inside the grid.
    pub fn nearest_pixel(&self, p: Vec3) -> Option<(usize, usize)> {
        let c = ((p.x - self.x0) / self.dx).round();
        let r = ((p.y - self.y0) / self.dy).round();
        if c < 0.0 || r < 0.0 || c >= self.nx as f64 || r >= self.ny as f64 {
            return None;
        }
        Some((r as usize, c as usize))
    }

    /// Same grid shifted rigidly by `d` (horizontal components and height).
    pub fn translated(&self, d: Vec3) -> Self {
        Self {
            x0: self.x0 + d.x,
            y0: self.y0 + d.y,
            height: self.height + d.z,
            ..*self
        }
    }
}

/// Range model used by [`range_history`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RangeMode {
    /// Euclidean VPC-to-target distance.
    #[default]
    Exact,
    /// Far-field, constant-velocity linearization about the aperture center.
    PlaneWave,
}

/// Positions of all VPCs at pulse `m`.
pub fn vpc_positions(traj: &Trajectory, arr: &ArrayConfig, m: usize) -> Result<Vec<Vec3>> {
    traj.check_pulse(m)?;
    let center = arr.center(traj, traj.slow_time(m));
    Ok((0..arr.elements)
        .map(|n| center + Vec3::Y * arr.element_offset(n))
        .collect())
}

/// Unit line-of-sight vector from `from` to `target`.
pub fn unit_vector(from: Vec3, target: Vec3) -> Result<Vec3> {
    let d = target - from;
    let r = d.norm();
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Geometry("zero-length line of sight".into()));
    }
    Ok(d * (1.0 / r))
}

/// Two-way wavevector `(4 pi / lambda) u`.
pub fn wavevector(u: Vec3, wavelength: f64) -> Result<Vec3> {
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    if (u.norm() - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::Geometry(format!("direction has norm {}, expected 1", u.norm())));
    }
    Ok(u * (4.0 * PI / wavelength))
}

/// Two-way phase constant `4 pi / lambda`.
pub fn wavenumber(wavelength: f64) -> f64 {
    4.0 * PI / wavelength
}

/// Distance from VPC `n` at pulse `m` to `target`.
pub fn range_history(
    n: usize,
    m: usize,
    target: Vec3,
    traj: &Trajectory,
    arr: &ArrayConfig,
    mode: RangeMode,
) -> Result<f64> {
    traj.check_pulse(m)?;
    if n >= arr.elements {
        return Err(Error::IndexOutOfRange {
            what: "VPC",
            index: n,
            len: arr.elements,
        });
    }
    let tau = traj.slow_time(m);
    match mode {
        RangeMode::Exact => {
            let p = arr.center(traj, tau) + Vec3::Y * arr.element_offset(n);
            Ok(p.distance(target))
        }
        RangeMode::PlaneWave => {
            let c0 = arr.aperture_center(traj);
            let u = unit_vector(c0, target)?;
            let r0 = c0.distance(target);
            Ok(r0 - u.dot(traj.velocity) * tau - arr.element_offset(n) * u.y)
        }
    }
}

/// Line-of-sight unit vector from spherical incidence `theta` and azimuth `phi`.
pub fn direction_from_angles(theta: f64, phi: f64) -> Vec3 {
    Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
}
