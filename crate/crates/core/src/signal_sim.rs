//! Synthetic range-compressed MIMO data for point-scatterer scenes.
//!
//! Each sample of the cube is the coherent sum over scatterers of
//! `alpha * sinc((r - R) / rho_r) * exp(-j 4 pi R / lambda)`, with `R` the
//! exact VPC-to-scatterer distance at that pulse, plus optional circular
//! complex white Gaussian noise.

use num_complex::{Complex32, Complex64};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wavenumber, ArrayConfig, Trajectory, Vec3};

/// A point scatterer. A non-zero `velocity` makes it a moving target whose
/// position at slow time `tau` is `position + velocity * tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    pub position: Vec3,
    pub reflectivity: Complex64,
    #[serde(default)]
    pub velocity: Vec3,
}

impl Scatterer {
    pub fn new(position: Vec3, reflectivity: Complex64) -> Self {
        Self {
            position,
            reflectivity,
            velocity: Vec3::ZERO,
        }
    }

    pub fn moving(position: Vec3, reflectivity: Complex64, velocity: Vec3) -> Self {
        Self {
            position,
            reflectivity,
            velocity,
        }
    }

    pub fn position_at(&self, tau: f64) -> Vec3 {
        self.position + self.velocity * tau
    }

    pub fn validate(&self) -> Result<()> {
        if !self.position.is_finite() || !self.velocity.is_finite() {
            return Err(Error::InvalidConfig("scatterer position is not finite".into()));
        }
        let a = self.reflectivity.norm();
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidConfig("scatterer reflectivity must be non-zero".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Scene {
    pub scatterers: Vec<Scatterer>,
    /// Complex noise power per sample (`E|n|^2`); zero disables noise.
    #[serde(default)]
    pub noise_power: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Scene {
    pub fn new(scatterers: Vec<Scatterer>) -> Self {
        Self {
            scatterers,
            noise_power: 0.0,
            seed: 0,
        }
    }

    pub fn with_noise(mut self, power: f64, seed: u64) -> Self {
        self.noise_power = power;
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_power >= 0.0 && self.noise_power.is_finite()) {
            return Err(Error::InvalidConfig("noise power must be non-negative".into()));
        }
        self.scatterers.iter().try_for_each(Scatterer::validate)
    }
}

/// Noise power giving the requested per-sample SNR against a scatterer of
/// reflectivity magnitude `amplitude`.
pub fn noise_power_for_snr_db(snr_db: f64, amplitude: f64) -> f64 {
    amplitude * amplitude / 10f64.powf(snr_db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarConfig {
    pub wavelength: f64,
    pub range_resolution: f64,
    pub bin_spacing: f64,
    #[serde(default)]
    pub first_bin_range: f64,
    pub num_bins: usize,
    pub pri: f64,
    /// Nominal navigation velocity accuracy (m/s), bounds plausible residual Doppler.
    pub nav_accuracy: f64,
}

impl RadarConfig {
    /// 4 mm wavelength, 5 cm range resolution sampled at Nyquist, 1 ms PRI,
    /// 20 cm/s navigation accuracy; bins cover `[0, max_range]`.
    pub fn automotive(max_range: f64) -> Self {
        let bin_spacing = 0.025;
        Self {
            wavelength: 0.004,
            range_resolution: 0.05,
            bin_spacing,
            first_bin_range: 0.0,
            num_bins: (max_range / bin_spacing).ceil() as usize + 1,
            pri: 1e-3,
            nav_accuracy: 0.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        };
        positive(self.wavelength, "wavelength")?;
        positive(self.range_resolution, "range_resolution")?;
        positive(self.bin_spacing, "bin_spacing")?;
        positive(self.pri, "pri")?;
        positive(self.nav_accuracy, "nav_accuracy")?;
        if self.bin_spacing > self.range_resolution / 2.0 * (1.0 + 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "bin spacing {} undersamples range resolution {}",
                self.bin_spacing, self.range_resolution
            )));
        }
        if self.num_bins == 0 {
            return Err(Error::InvalidConfig("num_bins must be at least 1".into()));
        }
        if !self.first_bin_range.is_finite() {
            return Err(Error::InvalidConfig("first_bin_range is not finite".into()));
        }
        Ok(())
    }

    pub fn bin_range(&self, bin: usize) -> f64 {
        self.first_bin_range + bin as f64 * self.bin_spacing
    }
}

/// Range-compressed samples stored pulse-major: `(m, n, bin)` with `m` slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct DataCube {
    pub first_bin_range: f64,
    pub bin_spacing: f64,
    pub num_bins: usize,
    pub elements: usize,
    pub pulses: usize,
    pub pri: f64,
    pub wavelength: f64,
    samples: Vec<Complex32>,
}

impl DataCube {
    pub fn zeros(radar: &RadarConfig, elements: usize, pulses: usize) -> Self {
        Self {
            first_bin_range: radar.first_bin_range,
            bin_spacing: radar.bin_spacing,
            num_bins: radar.num_bins,
            elements,
            pulses,
            pri: radar.pri,
            wavelength: radar.wavelength,
            samples: vec![Complex32::new(0.0, 0.0); radar.num_bins * elements * pulses],
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_samples(
        first_bin_range: f64,
        bin_spacing: f64,
        num_bins: usize,
        elements: usize,
        pulses: usize,
        pri: f64,
        wavelength: f64,
        samples: Vec<Complex32>,
    ) -> Result<Self> {
        if samples.len() != num_bins * elements * pulses {
            return Err(Error::DimensionMismatch(format!(
                "cube of {num_bins}x{elements}x{pulses} needs {} samples, got {}",
                num_bins * elements * pulses,
                samples.len()
            )));
        }
        if samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::Signal("cube contains non-finite samples".into()));
        }
        Ok(Self {
            first_bin_range,
            bin_spacing,
            num_bins,
            elements,
            pulses,
            pri,
            wavelength,
            samples,
        })
    }

    pub fn samples(&self) -> &[Complex32] {
        &self.samples
    }

    fn offset(&self, n: usize, m: usize) -> usize {
        (m * self.elements + n) * self.num_bins
    }

    /// Range line of VPC `n` at pulse `m`.
    pub fn line(&self, n: usize, m: usize) -> &[Complex32] {
        let o = self.offset(n, m);
        &self.samples[o..o + self.num_bins]
    }

    pub fn get(&self, bin: usize, n: usize, m: usize) -> Complex32 {
        self.samples[self.offset(n, m) + bin]
    }

    pub fn bin_range(&self, bin: usize) -> f64 {
        self.first_bin_range + bin as f64 * self.bin_spacing
    }

    /// Sample-wise sum, for superposition checks.
    pub fn add(&self, other: &DataCube) -> Result<DataCube> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.samples
            .iter_mut()
            .zip(&other.samples)
            .for_each(|(a, b)| *a += *b);
        Ok(out)
    }

    pub fn check_compatible(&self, other: &DataCube) -> Result<()> {
        if self.num_bins != other.num_bins
            || self.elements != other.elements
            || self.pulses != other.pulses
            || self.first_bin_range != other.first_bin_range
            || self.bin_spacing != other.bin_spacing
        {
            return Err(Error::DimensionMismatch("cubes have different axes".into()));
        }
        Ok(())
    }
}

/// `sin(pi x) / (pi x)`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Simulate the range-compressed data cube of `scene` seen from `traj`.
pub fn simulate_range_compressed(
    scene: &Scene,
    traj: &Trajectory,
    arr: &ArrayConfig,
    radar: &RadarConfig,
) -> Result<DataCube> {
    scene.validate()?;
    traj.validate()?;
    arr.validate()?;
    radar.validate()?;
    if (traj.pri - radar.pri).abs() > 1e-15 * radar.pri {
        return Err(Error::InvalidConfig(format!(
            "trajectory PRI {} differs from radar PRI {}",
            traj.pri, radar.pri
        )));
    }

    let mut cube = DataCube::zeros(radar, arr.elements, traj.pulses);
    let k = wavenumber(radar.wavelength);
    let pulse_len = arr.elements * radar.num_bins;
    let noise_sigma = (scene.noise_power / 2.0).sqrt();

    cube.samples
        .par_chunks_mut(pulse_len)
        .enumerate()
        .for_each(|(m, pulse)| {
            let tau = traj.slow_time(m);
            let center = arr.center(traj, tau);
            let mut line = vec![Complex64::new(0.0, 0.0); radar.num_bins];
            // one independent noise stream per pulse keeps output thread-count invariant
            let mut rng = ChaCha20Rng::seed_from_u64(scene.seed);
            rng.set_stream(m as u64);
            for (n, out) in pulse.chunks_mut(radar.num_bins).enumerate() {
                line.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
                let vpc = center + Vec3::Y * arr.element_offset(n);
                for s in &scene.scatterers {
                    let r = vpc.distance(s.position_at(tau));
                    let echo = s.reflectivity * Complex64::from_polar(1.0, -k * r);
                    for (bin, v) in line.iter_mut().enumerate() {
                        let env = sinc((radar.bin_range(bin) - r) / radar.range_resolution);
                        *v += echo * env;
                    }
                }
                for (o, v) in out.iter_mut().zip(&line) {
                    let mut z = *v;
                    if noise_sigma > 0.0 {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        z += Complex64::new(re, im) * noise_sigma;
                    }
                    *o = Complex32::new(z.re as f32, z.im as f32);
                }
            }
        });
    Ok(cube)
}

/// Navigation solution carrying a constant velocity error `dv`.
pub fn apply_velocity_error(traj: &Trajectory, dv: Vec3) -> Trajectory {
    Trajectory {
        velocity: traj.velocity + dv,
        ..*traj
    }
}
