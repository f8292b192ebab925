//! Time-domain back-projection.
//!
//! Each pulse is focused into a low-resolution image by summing the range
//! lines of all VPCs at the exact VPC-to-pixel distance and removing the
//! two-way carrier phase. The SAR image is the coherent sum of the
//! low-resolution images over the aperture.
//!
//! Per pixel the reduction order is fixed (VPCs within a pulse, then pulses in
//! slow-time order), and every low-resolution value is rounded to `f32` before
//! entering the slow-time sum, so [`focus_image`] and
//! `coherent_sum(backproject_stack(..))` agree bit for bit at any thread count.

use std::f64::consts::TAU;

use num_complex::{Complex32, Complex64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{vpc_positions, wavenumber, ArrayConfig, GroundGrid, Trajectory, Vec3};
use crate::signal_sim::{sinc, DataCube, RadarConfig};

/// Range interpolation of complex samples at fractional bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolator {
    #[default]
    Linear,
    /// Truncated sinc over 8 taps.
    Sinc8,
}

/// Per-pulse low-resolution images on a shared grid, stored `(m, row, col)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageStack {
    pub grid: GroundGrid,
    pub tau: Vec<f64>,
    data: Vec<Complex32>,
    /// Range lookups that fell outside the sampled window, per pulse.
    pub clipped: Vec<usize>,
}

impl ImageStack {
    pub fn from_data(grid: GroundGrid, tau: Vec<f64>, data: Vec<Complex32>) -> Result<Self> {
        if data.len() != grid.len() * tau.len() {
            return Err(Error::DimensionMismatch(format!(
                "stack of {} pulses on {}x{} grid needs {} pixels, got {}",
                tau.len(),
                grid.ny,
                grid.nx,
                grid.len() * tau.len(),
                data.len()
            )));
        }
        let clipped = vec![0; tau.len()];
        Ok(Self {
            grid,
            tau,
            data,
            clipped,
        })
    }

    pub fn pulses(&self) -> usize {
        self.tau.len()
    }

    pub fn data(&self) -> &[Complex32] {
        &self.data
    }

    pub fn image(&self, m: usize) -> &[Complex32] {
        let len = self.grid.len();
        &self.data[m * len..(m + 1) * len]
    }

    pub fn get(&self, m: usize, row: usize, col: usize) -> Complex32 {
        self.data[m * self.grid.len() + self.grid.index(row, col)]
    }

    /// Slow-time history of one pixel.
    pub fn series(&self, row: usize, col: usize) -> Vec<Complex32> {
        (0..self.pulses()).map(|m| self.get(m, row, col)).collect()
    }

    pub(crate) fn map_pixels<F>(&self, f: F) -> ImageStack
    where
        F: Fn(usize, usize, Complex32) -> Complex32 + Sync,
    {
        let len = self.grid.len();
        let mut data = self.data.clone();
        data.par_chunks_mut(len).enumerate().for_each(|(m, img)| {
            img.iter_mut().enumerate().for_each(|(i, v)| *v = f(m, i, *v));
        });
        ImageStack {
            grid: self.grid,
            tau: self.tau.clone(),
            data,
            clipped: self.clipped.clone(),
        }
    }
}

/// Focused complex image, row-major over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SarImage {
    pub grid: GroundGrid,
    data: Vec<Complex32>,
}

impl SarImage {
    pub fn from_data(grid: GroundGrid, data: Vec<Complex32>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "image on {}x{} grid needs {} pixels, got {}",
                grid.ny,
                grid.nx,
                grid.len(),
                data.len()
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn data(&self) -> &[Complex32] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex32 {
        self.data[self.grid.index(row, col)]
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.data.iter().map(|v| v.norm() as f64).collect()
    }

    /// Brightest pixel as `((row, col), magnitude)`.
    pub fn peak(&self) -> ((usize, usize), f64) {
        let (i, mag) = self
            .data
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.norm() as f64))
            .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        ((i / self.grid.nx, i % self.grid.nx), mag)
    }
}

/// Back-projection of one data cube along one navigation trajectory.
#[derive(Debug, Clone, Copy)]
pub struct Backprojector<'a> {
    cube: &'a DataCube,
    nav: &'a Trajectory,
    arr: &'a ArrayConfig,
    grid: &'a GroundGrid,
    turns_per_meter: f64,
    interpolator: Interpolator,
}

impl<'a> Backprojector<'a> {
    pub fn new(
        cube: &'a DataCube,
        nav: &'a Trajectory,
        arr: &'a ArrayConfig,
        grid: &'a GroundGrid,
        radar: &RadarConfig,
    ) -> Result<Self> {
        nav.validate()?;
        arr.validate()?;
        grid.validate()?;
        radar.validate()?;
        if cube.elements != arr.elements {
            return Err(Error::DimensionMismatch(format!(
                "cube has {} VPCs, array has {}",
                cube.elements, arr.elements
            )));
        }
        if cube.pulses != nav.pulses {
            return Err(Error::DimensionMismatch(format!(
                "cube has {} pulses, trajectory has {}",
                cube.pulses, nav.pulses
            )));
        }
        if (cube.pri - nav.pri).abs() > 1e-12 * nav.pri {
            return Err(Error::DimensionMismatch("cube and trajectory PRI differ".into()));
        }
        if cube.wavelength != radar.wavelength {
            return Err(Error::DimensionMismatch("cube and radar wavelength differ".into()));
        }
        Ok(Self {
            cube,
            nav,
            arr,
            grid,
            turns_per_meter: wavenumber(radar.wavelength) / TAU,
            interpolator: Interpolator::Linear,
        })
    }

    pub fn with_interpolator(mut self, interpolator: Interpolator) -> Self {
        self.interpolator = interpolator;
        self
    }

    fn sample(&self, line: &[Complex32], range: f64) -> Option<Complex64> {
        let pos = (range - self.cube.first_bin_range) / self.cube.bin_spacing;
        let last = line.len() - 1;
        if !(pos >= 0.0) || pos > last as f64 {
            return None;
        }
        let i = pos.floor() as usize;
        match self.interpolator {
            Interpolator::Linear => {
                let a = line[i];
                if i == last {
                    return Some(Complex64::new(a.re as f64, a.im as f64));
                }
                let b = line[i + 1];
                let t = pos - i as f64;
                let (a, b) = (
                    Complex64::new(a.re as f64, a.im as f64),
                    Complex64::new(b.re as f64, b.im as f64),
                );
                Some(a + (b - a) * t)
            }
            Interpolator::Sinc8 => {
                let lo = i.saturating_sub(3);
                let hi = (i + 4).min(last);
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, s) in line.iter().enumerate().take(hi + 1).skip(lo) {
                    acc += Complex64::new(s.re as f64, s.im as f64) * sinc(pos - j as f64);
                }
                Some(acc)
            }
        }
    }

    /// Low-resolution pixel value at pulse `m` given the VPC positions.
    #[inline]
    fn pixel(&self, m: usize, vpcs: &[Vec3], p: Vec3, clipped: &mut usize) -> Complex32 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (n, v) in vpcs.iter().enumerate() {
            let r = v.distance(p);
            match self.sample(self.cube.line(n, m), r) {
                Some(s) => {
                    let turns = r * self.turns_per_meter;
                    let (sin, cos) = (TAU * (turns - turns.round())).sin_cos();
                    acc += s * Complex64::new(cos, sin);
                }
                None => *clipped += 1,
            }
        }
        Complex32::new(acc.re as f32, acc.im as f32)
    }

    fn pulse_into(&self, m: usize, out: &mut [Complex32]) -> Result<usize> {
        let vpcs = vpc_positions(self.nav, self.arr, m)?;
        let nx = self.grid.nx;
        Ok(out
            .par_chunks_mut(nx)
            .enumerate()
            .map(|(row, line)| {
                let mut clipped = 0;
                for (col, v) in line.iter_mut().enumerate() {
                    *v = self.pixel(m, &vpcs, self.grid.position(row, col), &mut clipped);
                }
                clipped
            })
            .sum())
    }

    /// Low-resolution image of pulse `m` and its clipped-lookup count.
    pub fn pulse(&self, m: usize) -> Result<(Vec<Complex32>, usize)> {
        let mut out = vec![Complex32::new(0.0, 0.0); self.grid.len()];
        let clipped = self.pulse_into(m, &mut out)?;
        Ok((out, clipped))
    }

    pub fn stack(&self) -> Result<ImageStack> {
        let len = self.grid.len();
        let pulses = self.nav.pulses;
        let mut data = vec![Complex32::new(0.0, 0.0); len * pulses];
        let mut clipped = Vec::with_capacity(pulses);
        for (m, img) in data.chunks_mut(len).enumerate() {
            clipped.push(self.pulse_into(m, img)?);
        }
        Ok(ImageStack {
            grid: *self.grid,
            tau: self.nav.slow_time_axis(),
            data,
            clipped,
        })
    }

    /// Coherent sum over all pulses without materializing the stack.
    pub fn image(&self) -> Result<SarImage> {
        self.image_counted().map(|(img, _)| img)
    }

    /// Fused image together with the total clipped-lookup count.
    pub fn image_counted(&self) -> Result<(SarImage, usize)> {
        let pulses = self.nav.pulses;
        let all_vpcs = (0..pulses)
            .map(|m| vpc_positions(self.nav, self.arr, m))
            .collect::<Result<Vec<_>>>()?;
        let nx = self.grid.nx;
        let mut data = vec![Complex32::new(0.0, 0.0); self.grid.len()];
        let clipped_total = data.par_chunks_mut(nx).enumerate().map(|(row, line)| {
            let mut acc = vec![Complex64::new(0.0, 0.0); nx];
            let mut clipped = 0;
            for (m, vpcs) in all_vpcs.iter().enumerate() {
                for (col, a) in acc.iter_mut().enumerate() {
                    let v = self.pixel(m, vpcs, self.grid.position(row, col), &mut clipped);
                    *a += Complex64::new(v.re as f64, v.im as f64);
                }
            }
            for (o, a) in line.iter_mut().zip(&acc) {
                *o = Complex32::new(a.re as f32, a.im as f32);
            }
            clipped
        }).sum::<usize>();
        Ok((SarImage::from_data(*self.grid, data)?, clipped_total))
    }
}

/// Low-resolution image of pulse `m` (linear range interpolation).
pub fn backproject_pulse(
    cube: &DataCube,
    nav: &Trajectory,
    arr: &ArrayConfig,
    grid: &GroundGrid,
    m: usize,
    radar: &RadarConfig,
) -> Result<(Vec<Complex32>, usize)> {
    Backprojector::new(cube, nav, arr, grid, radar)?.pulse(m)
}

/// All low-resolution images on the shared grid (linear range interpolation).
pub fn backproject_stack(
    cube: &DataCube,
    nav: &Trajectory,
    arr: &ArrayConfig,
    grid: &GroundGrid,
    radar: &RadarConfig,
) -> Result<ImageStack> {
    Backprojector::new(cube, nav, arr, grid, radar)?.stack()
}

/// Focused SAR image straight from the cube; equal to summing [`backproject_stack`].
pub fn focus_image(
    cube: &DataCube,
    nav: &Trajectory,
    arr: &ArrayConfig,
    grid: &GroundGrid,
    radar: &RadarConfig,
) -> Result<SarImage> {
    Backprojector::new(cube, nav, arr, grid, radar)?.image()
}

/// Pixel-wise sum of the stack over slow time.
pub fn coherent_sum(stack: &ImageStack) -> Result<SarImage> {
    coherent_sum_weighted(stack, &vec![1.0; stack.pulses()])
}

/// Pixel-wise slow-time sum with per-pulse amplitude weights.
pub fn coherent_sum_weighted(stack: &ImageStack, weights: &[f64]) -> Result<SarImage> {
    if stack.pulses() == 0 {
        return Err(Error::DimensionMismatch("empty stack".into()));
    }
    if weights.len() != stack.pulses() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} pulses",
            weights.len(),
            stack.pulses()
        )));
    }
    let len = stack.grid.len();
    let nx = stack.grid.nx;
    let mut data = vec![Complex32::new(0.0, 0.0); len];
    data.par_chunks_mut(nx).enumerate().for_each(|(row, line)| {
        let start = row * nx;
        for (col, o) in line.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, w) in weights.iter().enumerate() {
                let v = stack.data[m * len + start + col];
                acc += Complex64::new(v.re as f64, v.im as f64) * *w;
            }
            *o = Complex32::new(acc.re as f32, acc.im as f32);
        }
    });
    SarImage::from_data(stack.grid, data)
}
