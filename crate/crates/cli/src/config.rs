//! JSON run configuration.

use std::path::Path;

use mimosar::{
    ArrayConfig, AutofocusParams, GroundGrid, Interpolator, RadarConfig, Scatterer, Scene, Trajectory, Vec3,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    /// Radar position at the aperture center (slow time zero).
    pub position: Vec3,
    pub velocity: Vec3,
    pub pulses: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub dy: f64,
    #[serde(default)]
    pub height: f64,
}

impl GridSpec {
    pub fn grid(&self) -> mimosar::Result<GroundGrid> {
        GroundGrid::from_extent((self.x_min, self.x_max), (self.y_min, self.y_max), self.dx, self.dy, self.height)
    }
}

/// Rectangular lattice of identical point targets. Odd columns are shifted
/// along y by `stagger` times the row pitch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    #[serde(default = "unit_amplitude")]
    pub amplitude: f64,
    #[serde(default)]
    pub stagger: f64,
    #[serde(default)]
    pub height: f64,
    /// Move every target onto the nearest image grid node.
    #[serde(default)]
    pub snap_to_grid: bool,
}

fn unit_amplitude() -> f64 {
    1.0
}

impl LatticeSpec {
    pub fn scatterers(&self, grid: &GroundGrid) -> Result<Vec<Scatterer>, CliError> {
        if self.nx == 0 || self.ny == 0 {
            return Err(CliError::Config("scene.lattice needs nx, ny >= 1".into()));
        }
        let step = |range: [f64; 2], n: usize| if n > 1 { (range[1] - range[0]) / (n - 1) as f64 } else { 0.0 };
        let (sx, sy) = (step(self.x, self.nx), step(self.y, self.ny));
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for i in 0..self.nx {
            let shift = if i % 2 == 1 { self.stagger * sy } else { 0.0 };
            for j in 0..self.ny {
                let mut p = Vec3::new(self.x[0] + i as f64 * sx, self.y[0] + j as f64 * sy + shift, self.height);
                if self.snap_to_grid {
                    let (row, col) = grid.nearest_pixel(p).ok_or_else(|| {
                        CliError::Config(format!("scene.lattice target ({:.3}, {:.3}) lies outside the grid", p.x, p.y))
                    })?;
                    p = Vec3::new(grid.x(col), grid.y(row), self.height);
                }
                out.push(Scatterer::new(p, Complex64::new(self.amplitude, 0.0)));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    #[serde(default)]
    pub scatterers: Vec<Scatterer>,
    #[serde(default)]
    pub lattice: Option<LatticeSpec>,
}

/// Noise level as an absolute power or as an SNR relative to unit amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub power: Option<f64>,
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseSpec {
    pub fn power(&self) -> Result<f64, CliError> {
        match (self.power, self.snr_db) {
            (Some(_), Some(_)) => Err(CliError::Config("noise: give either power or snr_db, not both".into())),
            (Some(p), None) if p >= 0.0 && p.is_finite() => Ok(p),
            (Some(p), None) => Err(CliError::Config(format!("noise.power must be non-negative, got {p}"))),
            (None, Some(s)) if s.is_finite() => Ok(mimosar::signal_sim::noise_power_for_snr_db(s, 1.0)),
            (None, Some(s)) => Err(CliError::Config(format!("noise.snr_db must be finite, got {s}"))),
            (None, None) => Ok(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FocusSpec {
    pub interpolator: Interpolator,
    pub dynamic_range_db: f64,
    /// Association radius for localization metrics, in grid spacings.
    pub capture_radius_px: f64,
}

impl Default for FocusSpec {
    fn default() -> Self {
        Self {
            interpolator: Interpolator::Linear,
            dynamic_range_db: 40.0,
            capture_radius_px: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub radar: RadarConfig,
    pub trajectory: TrajectorySpec,
    pub array: ArrayConfig,
    pub grid: GridSpec,
    pub scene: SceneSpec,
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    /// Constant velocity error of the navigation solution (nav = true + injected).
    #[serde(default)]
    pub injected_dv: Vec3,
    #[serde(default)]
    pub moco: AutofocusParams,
    #[serde(default)]
    pub focus: FocusSpec,
}

impl Default for RunConfig {
    /// Car-mounted 77 GHz-class radar at about 25 km/h, 8 VPCs at a quarter
    /// wavelength, 200 pulses, 25 targets over a 35 m x 24 m field of view
    /// and a 20 dB SNR, navigated with a (0.2622, -0.0114, 0) m/s velocity
    /// error. Autofocus refocuses up to eight times.
    fn default() -> Self {
        let radar = RadarConfig::automotive(50.0);
        Self {
            array: ArrayConfig::quarter_wavelength(8, radar.wavelength).expect("valid default array"),
            radar,
            trajectory: TrajectorySpec {
                position: Vec3::new(0.0, 0.0, 0.5),
                velocity: Vec3::new(6.94, 0.0, 0.0),
                pulses: 200,
            },
            grid: GridSpec {
                x_min: 10.0,
                x_max: 45.0,
                dx: 0.05,
                y_min: -12.0,
                y_max: 12.0,
                dy: 0.05,
                height: 0.0,
            },
            scene: SceneSpec {
                scatterers: Vec::new(),
                lattice: Some(LatticeSpec {
                    x: [11.0, 44.0],
                    y: [-11.0, 9.0],
                    nx: 5,
                    ny: 5,
                    amplitude: 1.0,
                    stagger: 0.5,
                    height: 0.0,
                    snap_to_grid: true,
                }),
            },
            noise: Some(NoiseSpec {
                power: None,
                snr_db: Some(20.0),
                seed: 1,
            }),
            injected_dv: Vec3::new(0.2622, -0.0114, 0.0),
            moco: AutofocusParams {
                passes: 8,
                min_separation: 20,
                ..AutofocusParams::default()
            },
            focus: FocusSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let cfg = |field: &str, e: mimosar::Error| CliError::Config(format!("{field}: {e}"));
        self.radar.validate().map_err(|e| cfg("radar", e))?;
        self.true_trajectory().map_err(|e| cfg("trajectory", e))?;
        self.array.validate().map_err(|e| cfg("array", e))?;
        self.grid.grid().map_err(|e| cfg("grid", e))?;
        if !self.injected_dv.is_finite() {
            return Err(CliError::Config("injected_dv is not finite".into()));
        }
        if let Some(noise) = &self.noise {
            noise.power()?;
        }
        let scene = self.scene()?;
        scene.validate().map_err(|e| cfg("scene", e))?;
        if scene.scatterers.is_empty() {
            return Err(CliError::Config("scene: no scatterers (give scatterers and/or lattice)".into()));
        }
        let m = &self.moco;
        if m.gcp_count == 0 || m.pad_factor == 0 {
            return Err(CliError::Config("moco: gcp_count and pad_factor must be at least 1".into()));
        }
        if !(m.margin >= 1.0) {
            return Err(CliError::Config(format!("moco.margin must be >= 1, got {}", m.margin)));
        }
        if !(self.focus.dynamic_range_db > 0.0 && self.focus.dynamic_range_db.is_finite()) {
            return Err(CliError::Config("focus.dynamic_range_db must be positive".into()));
        }
        if !(self.focus.capture_radius_px > 0.0) {
            return Err(CliError::Config("focus.capture_radius_px must be positive".into()));
        }
        Ok(())
    }

    pub fn true_trajectory(&self) -> mimosar::Result<Trajectory> {
        Trajectory::new(self.trajectory.position, self.trajectory.velocity, self.trajectory.pulses, self.radar.pri)
    }

    pub fn nav_trajectory(&self) -> mimosar::Result<Trajectory> {
        Ok(mimosar::signal_sim::apply_velocity_error(&self.true_trajectory()?, self.injected_dv))
    }

    pub fn scene(&self) -> Result<Scene, CliError> {
        let grid = self.grid.grid().map_err(|e| CliError::Config(format!("grid: {e}")))?;
        let mut scatterers = self.scene.scatterers.clone();
        if let Some(lattice) = &self.scene.lattice {
            scatterers.extend(lattice.scatterers(&grid)?);
        }
        let scene = Scene::new(scatterers);
        Ok(match &self.noise {
            Some(n) => scene.with_noise(n.power()?, n.seed),
            None => scene,
        })
    }

    pub fn set_seed(&mut self, seed: u64) {
        match &mut self.noise {
            Some(n) => n.seed = seed,
            None => {
                self.noise = Some(NoiseSpec {
                    power: Some(0.0),
                    snr_db: None,
                    seed,
                })
            }
        }
    }
}
