//! Simulate, focus and autofocus driven by a [`RunConfig`].

use mimosar::metrics::{self, FocusMetrics};
use mimosar::moco::{self, MocoReport, RefocusOutcome};
use mimosar::signal_sim::simulate_range_compressed;
use mimosar::tdbp::{coherent_sum, Backprojector};
use mimosar::{DataCube, ImageStack, SarImage, Trajectory, Vec3};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Focus along the erroneous navigation trajectory.
    NoMoco,
    /// Estimate the residual velocity from GCPs and compensate.
    Moco,
    /// Compensate with the true injected velocity error.
    OracleMoco,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub mode: Mode,
    pub injected_dv: Vec3,
    /// Velocity error removed by the compensation, if any.
    pub applied_dv: Option<Vec3>,
    /// Residual estimate of each autofocus pass.
    pub passes: Vec<MocoReport>,
    pub metrics: FocusMetrics,
    pub targets: usize,
    pub targets_found: usize,
    pub mean_localization_error: Option<f64>,
    pub clipped_samples: usize,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))
    }
}

pub struct FocusOutput {
    pub image: SarImage,
    pub report: RunReport,
}

pub fn simulate(cfg: &RunConfig) -> Result<DataCube, CliError> {
    let scene = cfg.scene()?;
    let traj = cfg.true_trajectory()?;
    Ok(simulate_range_compressed(&scene, &traj, &cfg.array, &cfg.radar)?)
}

fn backprojector<'a>(
    cfg: &'a RunConfig,
    cube: &'a DataCube,
    nav: &'a Trajectory,
    grid: &'a mimosar::GroundGrid,
) -> Result<Backprojector<'a>, CliError> {
    Ok(Backprojector::new(cube, nav, &cfg.array, grid, &cfg.radar)?.with_interpolator(cfg.focus.interpolator))
}

/// Image focused along a given trajectory without any compensation.
pub fn focus_along(cfg: &RunConfig, cube: &DataCube, nav: &Trajectory) -> Result<(SarImage, usize), CliError> {
    let grid = cfg.grid.grid()?;
    Ok(backprojector(cfg, cube, nav, &grid)?.image_counted()?)
}

/// Per-pulse stack focused along the navigation trajectory.
pub fn nav_stack(cfg: &RunConfig, cube: &DataCube) -> Result<ImageStack, CliError> {
    let grid = cfg.grid.grid()?;
    let nav = cfg.nav_trajectory()?;
    Ok(backprojector(cfg, cube, &nav, &grid)?.stack()?)
}

/// Single-pass GCP measurement and inversion on a navigation stack.
pub fn estimate(cfg: &RunConfig, stack: &ImageStack) -> Result<MocoReport, CliError> {
    let nav = cfg.nav_trajectory()?;
    let center = cfg.array.aperture_center(&nav);
    Ok(moco::autofocus(stack, center, cfg.radar.nav_accuracy, cfg.radar.wavelength, &cfg.moco)?)
}

/// Autofocus with refocusing along the corrected trajectory.
pub fn autofocus(cfg: &RunConfig, cube: &DataCube) -> Result<RefocusOutcome, CliError> {
    let grid = cfg.grid.grid()?;
    let nav = cfg.nav_trajectory()?;
    let form = |traj: &Trajectory| backprojector(cfg, cube, traj, &grid).map_err(|e| match e {
        CliError::Core(e) => e,
        other => mimosar::Error::InvalidConfig(other.to_string()),
    })?.stack();
    Ok(moco::refocus_autofocus(
        form,
        &nav,
        &cfg.array,
        cfg.radar.nav_accuracy,
        cfg.radar.wavelength,
        &cfg.moco,
    )?)
}

/// Remove a constant velocity error from a navigation stack and sum it.
pub fn compensated_image(cfg: &RunConfig, stack: &ImageStack, dv: Vec3) -> Result<SarImage, CliError> {
    let nav = cfg.nav_trajectory()?;
    let center = cfg.array.aperture_center(&nav);
    let screens = moco::phase_screens(&stack.grid, dv, &stack.tau, center, cfg.radar.wavelength)?;
    Ok(coherent_sum(&moco::compensate(stack, &screens)?)?)
}

pub fn focus(cfg: &RunConfig, cube: &DataCube, mode: Mode) -> Result<FocusOutput, CliError> {
    let (image, passes, applied, clipped) = match mode {
        Mode::NoMoco => {
            let (image, clipped) = focus_along(cfg, cube, &cfg.nav_trajectory()?)?;
            (image, Vec::new(), None, clipped)
        }
        Mode::Moco => {
            let out = autofocus(cfg, cube)?;
            let clipped = out.stack.clipped.iter().sum();
            (coherent_sum(&out.stack)?, out.passes, Some(out.delta_v), clipped)
        }
        Mode::OracleMoco => {
            let stack = nav_stack(cfg, cube)?;
            let clipped = stack.clipped.iter().sum();
            let image = compensated_image(cfg, &stack, cfg.injected_dv)?;
            (image, Vec::new(), Some(cfg.injected_dv), clipped)
        }
    };
    let report = assess(cfg, &image, mode, passes, applied, clipped)?;
    Ok(FocusOutput { image, report })
}

pub fn assess(
    cfg: &RunConfig,
    image: &SarImage,
    mode: Mode,
    passes: Vec<MocoReport>,
    applied_dv: Option<Vec3>,
    clipped_samples: usize,
) -> Result<RunReport, CliError> {
    let scene = cfg.scene()?;
    let radius = cfg.focus.capture_radius_px * cfg.grid.dx.max(cfg.grid.dy);
    let locs = metrics::localization_error(image, &scene, radius);
    Ok(RunReport {
        mode,
        injected_dv: cfg.injected_dv,
        applied_dv,
        passes,
        metrics: metrics::focus_metrics(image)?,
        targets: scene.scatterers.len(),
        targets_found: locs.iter().filter(|l| l.error.is_some()).count(),
        mean_localization_error: metrics::mean_localization_error(&locs),
        clipped_samples,
    })
}
