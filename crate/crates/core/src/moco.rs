//! Residual motion compensation from ground control points.
//!
//! A constant navigation velocity error `dv` leaves every low-resolution image
//! pixel `x` multiplied by `exp(-j (k(x) . dv) tau)`, where `k(x)` is the
//! two-way wavevector from the aperture center. The autofocus:
//!
//! 1. averages amplitudes over the stack and picks the brightest local maxima
//!    as ground control points (GCPs);
//! 2. measures each GCP's residual angular frequency with a zero-padded FFT;
//! 3. drops GCPs whose frequency exceeds what the navigation accuracy allows;
//! 4. inverts `Omega = K dv` by weighted least squares;
//! 5. builds phase screens `-(k(x) . dv) tau` and removes them from the stack.
//!
//! [`refocus_autofocus`] repeats steps 1-4 on stacks formed along the
//! trajectory corrected so far, and phase-compensates only the last residual.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::{Complex32, Complex64};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{unit_vector, wavenumber, wavevector, ArrayConfig, GroundGrid, Trajectory, Vec3};
use crate::tdbp::ImageStack;

/// Real amplitude image on a grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeImage {
    pub ny: usize,
    pub nx: usize,
    pub data: Vec<f64>,
}

impl AmplitudeImage {
    pub fn new(ny: usize, nx: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != ny * nx {
            return Err(Error::DimensionMismatch(format!(
                "{ny}x{nx} amplitude image needs {} values, got {}",
                ny * nx,
                data.len()
            )));
        }
        Ok(Self { ny, nx, data })
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.nx + col]
    }
}

/// A ground control point and everything measured on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gcp {
    /// `[row, col]` on the focusing grid.
    pub pixel: [usize; 2],
    pub position: Vec3,
    /// Incoherent-mean amplitude at the pixel.
    pub amplitude: f64,
    /// Residual angular frequency (rad/s).
    pub omega: f64,
    /// Spectral peak over median spectrum magnitude.
    pub prominence: f64,
    pub weight: f64,
    pub outlier: bool,
}

impl Gcp {
    pub fn new(row: usize, col: usize, grid: &GroundGrid, amplitude: f64) -> Self {
        Self {
            pixel: [row, col],
            position: grid.position(row, col),
            amplitude,
            omega: 0.0,
            prominence: 0.0,
            weight: 0.0,
            outlier: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    #[default]
    Amplitude,
    Prominence,
    Uniform,
}

impl Weighting {
    pub fn weight(self, gcp: &Gcp) -> f64 {
        match self {
            Weighting::Amplitude => gcp.amplitude,
            Weighting::Prominence => gcp.prominence,
            Weighting::Uniform => 1.0,
        }
    }
}

/// Spectral peak refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeakRefinement {
    /// Bin position of the largest magnitude only.
    Raw,
    /// Three-point parabola through the log-magnitude around the peak.
    #[default]
    Parabolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyEstimate {
    pub omega: f64,
    pub prominence: f64,
}

/// Options for the weighted least-squares inversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WlsOptions {
    pub drop_z: bool,
    pub drop_y: bool,
    pub weighting: Weighting,
    /// Largest acceptable condition number of the normal matrix.
    pub max_condition: f64,
}

impl Default for WlsOptions {
    fn default() -> Self {
        Self {
            drop_z: true,
            drop_y: false,
            weighting: Weighting::Amplitude,
            max_condition: 1e8,
        }
    }
}

/// Result of the velocity-error inversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MocoReport {
    /// Estimated residual velocity; dropped components are zero.
    pub delta_v: Vec3,
    /// One-sigma accuracy per component; `None` when not estimated or when
    /// there are no residual degrees of freedom.
    pub accuracy: [Option<f64>; 3],
    pub condition_number: f64,
    pub z_dropped: bool,
    pub y_dropped: bool,
    /// Weighted residual variance (rad^2/s^2).
    pub residual_variance: Option<f64>,
    pub gcps_used: usize,
    pub gcps: Vec<Gcp>,
}

impl MocoReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))
    }

    /// One GCP per row.
    pub fn write_gcp_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "row", "col", "x", "y", "z", "amplitude", "omega", "prominence", "weight", "outlier",
        ])
        .map_err(csv_err)?;
        for g in &self.gcps {
            w.write_record([
                g.pixel[0].to_string(),
                g.pixel[1].to_string(),
                g.position.x.to_string(),
                g.position.y.to_string(),
                g.position.z.to_string(),
                g.amplitude.to_string(),
                g.omega.to_string(),
                g.prominence.to_string(),
                g.weight.to_string(),
                g.outlier.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Pixel-wise mean of `|I_m|` over the stack.
pub fn incoherent_mean(stack: &ImageStack) -> Result<AmplitudeImage> {
    let pulses = stack.pulses();
    if pulses == 0 {
        return Err(Error::DimensionMismatch("empty stack".into()));
    }
    let len = stack.grid.len();
    let mut data = vec![0.0; len];
    data.par_iter_mut().enumerate().for_each(|(i, out)| {
        let sum: f64 = (0..pulses).map(|m| stack.data()[m * len + i].norm() as f64).sum();
        *out = sum / pulses as f64;
    });
    AmplitudeImage::new(stack.grid.ny, stack.grid.nx, data)
}

fn is_local_max(amp: &AmplitudeImage, row: usize, col: usize) -> bool {
    let v = amp.get(row, col);
    if !(v > 0.0) {
        return false;
    }
    for r in row.saturating_sub(1)..=(row + 1).min(amp.ny - 1) {
        for c in col.saturating_sub(1)..=(col + 1).min(amp.nx - 1) {
            if (r, c) != (row, col) && amp.get(r, c) > v {
                return false;
            }
        }
    }
    true
}

/// Greedy pick of the brightest local maxima at least `min_separation` pixels
/// apart (Chebyshev distance). Ties are broken by `(row, col)`.
pub fn select_gcp(
    amp: &AmplitudeImage,
    grid: &GroundGrid,
    count: usize,
    min_separation: usize,
) -> Result<Vec<Gcp>> {
    if amp.data.is_empty() {
        return Err(Error::DimensionMismatch("empty amplitude image".into()));
    }
    if amp.ny != grid.ny || amp.nx != grid.nx {
        return Err(Error::DimensionMismatch("amplitude image does not match grid".into()));
    }
    if count == 0 {
        return Err(Error::InvalidConfig("GCP count must be at least 1".into()));
    }
    let mut candidates: Vec<(usize, usize)> = (0..amp.ny)
        .flat_map(|r| (0..amp.nx).map(move |c| (r, c)))
        .filter(|&(r, c)| is_local_max(amp, r, c))
        .collect();
    candidates.sort_by(|a, b| {
        amp.get(b.0, b.1)
            .total_cmp(&amp.get(a.0, a.1))
            .then_with(|| a.cmp(b))
    });
    let mut picked: Vec<(usize, usize)> = Vec::with_capacity(count);
    for (r, c) in candidates {
        if picked.len() == count {
            break;
        }
        let far = picked
            .iter()
            .all(|&(pr, pc)| r.abs_diff(pr).max(c.abs_diff(pc)) >= min_separation);
        if far {
            picked.push((r, c));
        }
    }
    Ok(picked
        .into_iter()
        .map(|(r, c)| Gcp::new(r, c, grid, amp.get(r, c)))
        .collect())
}

fn slow_time_step(tau: &[f64]) -> f64 {
    (tau[tau.len() - 1] - tau[0]) / (tau.len() - 1) as f64
}

/// Dominant angular frequency of a slow-time series, with the sign chosen so
/// that `exp(-j w0 tau)` returns `+w0`.
pub fn estimate_frequency(
    series: &[Complex32],
    pri: f64,
    pad_factor: usize,
    refinement: PeakRefinement,
) -> Result<FrequencyEstimate> {
    let m = series.len();
    if m < 4 {
        return Err(Error::Signal(format!("{m} slow-time samples, need at least 4")));
    }
    if pad_factor == 0 {
        return Err(Error::InvalidConfig("pad factor must be at least 1".into()));
    }
    if series.iter().all(|s| s.norm() == 0.0) {
        return Err(Error::Signal("all-zero slow-time series".into()));
    }
    let len = m * pad_factor;
    let mut buf: Vec<Complex64> = series
        .iter()
        .map(|s| Complex64::new(s.re as f64, s.im as f64))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(len)
        .collect();
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let mags: Vec<f64> = buf.iter().map(|c| c.norm()).collect();
    let (peak, peak_mag) = mags
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });

    let mut offset = 0.0;
    if refinement == PeakRefinement::Parabolic && len >= 3 {
        let a = mags[(peak + len - 1) % len].ln();
        let b = peak_mag.ln();
        let c = mags[(peak + 1) % len].ln();
        let denom = a - 2.0 * b + c;
        if denom < 0.0 && denom.is_finite() {
            offset = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
        }
    }
    let mut bin = peak as f64 + offset;
    if bin > len as f64 / 2.0 {
        bin -= len as f64;
    }
    let omega_spectrum = 2.0 * std::f64::consts::PI * bin / (len as f64 * pri);

    let mut sorted = mags.clone();
    sorted.sort_by(f64::total_cmp);
    let median = if len % 2 == 1 {
        sorted[len / 2]
    } else {
        0.5 * (sorted[len / 2 - 1] + sorted[len / 2])
    };
    Ok(FrequencyEstimate {
        omega: -omega_spectrum,
        prominence: peak_mag / median.max(peak_mag * 1e-12),
    })
}

/// Residual angular frequency of a GCP's slow-time history.
pub fn estimate_gcp_frequency(
    stack: &ImageStack,
    gcp: &Gcp,
    pad_factor: usize,
    refinement: PeakRefinement,
) -> Result<FrequencyEstimate> {
    if stack.pulses() < 4 {
        return Err(Error::Signal(format!(
            "{} pulses in stack, need at least 4",
            stack.pulses()
        )));
    }
    let [row, col] = gcp.pixel;
    if row >= stack.grid.ny || col >= stack.grid.nx {
        return Err(Error::IndexOutOfRange {
            what: "GCP pixel",
            index: row * stack.grid.nx + col,
            len: stack.grid.len(),
        });
    }
    estimate_frequency(&stack.series(row, col), slow_time_step(&stack.tau), pad_factor, refinement)
}

/// Largest residual angular frequency compatible with the navigation accuracy.
pub fn outlier_threshold(nav_accuracy: f64, wavelength: f64, margin: f64) -> f64 {
    margin * wavenumber(wavelength) * nav_accuracy
}

/// Flag GCPs whose residual frequency exceeds `margin * (4 pi / lambda) * nav_accuracy`.
pub fn reject_outliers(gcps: &[Gcp], nav_accuracy: f64, wavelength: f64, margin: f64) -> Result<Vec<Gcp>> {
    if !(margin >= 1.0) {
        return Err(Error::InvalidConfig(format!("outlier margin must be >= 1, got {margin}")));
    }
    if !(nav_accuracy > 0.0 && wavelength > 0.0) {
        return Err(Error::InvalidConfig("navigation accuracy and wavelength must be positive".into()));
    }
    let threshold = outlier_threshold(nav_accuracy, wavelength, margin);
    Ok(gcps
        .iter()
        .map(|g| Gcp {
            outlier: g.omega.abs() > threshold,
            ..g.clone()
        })
        .collect())
}

const AXES: [&str; 3] = ["x", "y", "z"];

/// Weighted least-squares inversion of the per-GCP residual frequencies for
/// the velocity error. Outlier-flagged GCPs do not enter the system.
pub fn solve_wls(gcps: &[Gcp], aperture_center: Vec3, wavelength: f64, opts: &WlsOptions) -> Result<MocoReport> {
    let comps: Vec<usize> = (0..3)
        .filter(|&c| !(c == 2 && opts.drop_z) && !(c == 1 && opts.drop_y))
        .collect();
    let p = comps.len();

    let mut report_gcps: Vec<Gcp> = gcps.to_vec();
    for g in &mut report_gcps {
        g.weight = opts.weighting.weight(g);
        if !(g.weight >= 0.0 && g.weight.is_finite()) {
            return Err(Error::InvalidConfig(format!("GCP weight {} is not usable", g.weight)));
        }
    }
    let used: Vec<&Gcp> = report_gcps.iter().filter(|g| !g.outlier).collect();
    if used.len() < p.max(1) {
        return Err(Error::TooFewGcps {
            available: used.len(),
            required: p.max(1),
        });
    }

    let v = used.len();
    let mut k = DMatrix::<f64>::zeros(v, p);
    let mut omega = DVector::<f64>::zeros(v);
    let mut w = DVector::<f64>::zeros(v);
    for (i, g) in used.iter().enumerate() {
        let kv = wavevector(unit_vector(aperture_center, g.position)?, wavelength)?.to_array();
        for (j, &c) in comps.iter().enumerate() {
            k[(i, j)] = kv[c];
        }
        omega[i] = g.omega;
        w[i] = g.weight;
    }

    let kt_w = {
        let mut m = k.transpose();
        for (i, wi) in w.iter().enumerate() {
            m.column_mut(i).scale_mut(*wi);
        }
        m
    };
    let normal = &kt_w * &k;
    let rhs = &kt_w * &omega;

    let eig = normal.clone().symmetric_eigen();
    let max_eig = eig.eigenvalues.max();
    let min_eig = eig.eigenvalues.min();
    let condition = if min_eig > 0.0 { max_eig / min_eig } else { f64::INFINITY };
    if !(condition <= opts.max_condition) {
        let mut axes: Vec<&str> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &e)| !(e * opts.max_condition >= max_eig))
            .map(|(i, _)| {
                let col = eig.eigenvectors.column(i);
                let j = col.iamax();
                AXES[comps[j]]
            })
            .collect();
        axes.sort_unstable();
        axes.dedup();
        return Err(Error::Unobservable {
            axes: axes.join(","),
            condition,
        });
    }

    let chol = normal
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Unobservable {
            axes: comps.iter().map(|&c| AXES[c]).collect::<Vec<_>>().join(","),
            condition,
        })?;
    let solution = chol.solve(&rhs);
    let inverse = chol.inverse();

    let residual = &omega - &k * &solution;
    let wrss: f64 = residual.iter().zip(w.iter()).map(|(r, wi)| wi * r * r).sum();
    let dof = v - p;
    let sigma2 = (dof > 0).then(|| wrss / dof as f64);

    let mut delta_v = [0.0; 3];
    let mut accuracy = [None; 3];
    for (j, &c) in comps.iter().enumerate() {
        delta_v[c] = solution[j];
        accuracy[c] = sigma2.map(|s2| (s2 * inverse[(j, j)]).sqrt());
    }

    Ok(MocoReport {
        delta_v: delta_v.into(),
        accuracy,
        condition_number: condition,
        z_dropped: opts.drop_z,
        y_dropped: opts.drop_y,
        residual_variance: sigma2,
        gcps_used: v,
        gcps: report_gcps,
    })
}

/// Per-pixel, per-pulse phase screens `-(k(x) . dv) tau`, stored factorized as
/// a per-pixel rate `k(x) . dv` and the slow-time axis.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScreenSet {
    pub ny: usize,
    pub nx: usize,
    pub tau: Vec<f64>,
    rate: Vec<f64>,
}

impl PhaseScreenSet {
    pub fn pulses(&self) -> usize {
        self.tau.len()
    }

    /// Residual phase (rad) at pulse `m`, pixel index `i`.
    pub fn phase(&self, m: usize, i: usize) -> f64 {
        -self.rate[i] * self.tau[m]
    }

    /// Full screen of pulse `m`, row-major.
    pub fn screen(&self, m: usize) -> Vec<f64> {
        (0..self.rate.len()).map(|i| self.phase(m, i)).collect()
    }

    /// Residual angular frequency `k(x) . dv` per pixel.
    pub fn rates(&self) -> &[f64] {
        &self.rate
    }
}

pub fn phase_screens(
    grid: &GroundGrid,
    delta_v: Vec3,
    tau: &[f64],
    aperture_center: Vec3,
    wavelength: f64,
) -> Result<PhaseScreenSet> {
    if !delta_v.is_finite() {
        return Err(Error::InvalidConfig("velocity estimate is not finite".into()));
    }
    let rate = (0..grid.ny)
        .flat_map(|r| (0..grid.nx).map(move |c| (r, c)))
        .map(|(r, c)| {
            let u = unit_vector(aperture_center, grid.position(r, c))?;
            Ok(wavevector(u, wavelength)?.dot(delta_v))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(PhaseScreenSet {
        ny: grid.ny,
        nx: grid.nx,
        tau: tau.to_vec(),
        rate,
    })
}

/// `I_m(x) * exp(-j dpsi(x, tau_m))` for every pulse and pixel.
pub fn compensate(stack: &ImageStack, screens: &PhaseScreenSet) -> Result<ImageStack> {
    if screens.ny != stack.grid.ny || screens.nx != stack.grid.nx || screens.pulses() != stack.pulses() {
        return Err(Error::DimensionMismatch(format!(
            "screens {}x{}x{} vs stack {}x{}x{}",
            screens.pulses(),
            screens.ny,
            screens.nx,
            stack.pulses(),
            stack.grid.ny,
            stack.grid.nx
        )));
    }
    Ok(stack.map_pixels(|m, i, v| {
        let rot = Complex64::from_polar(1.0, -screens.phase(m, i));
        let z = Complex64::new(v.re as f64, v.im as f64) * rot;
        Complex32::new(z.re as f32, z.im as f32)
    }))
}

/// Navigation trajectory corrected by the estimated residual velocity.
pub fn integrate_residual_velocity(nav: &Trajectory, delta_v: Vec3) -> Trajectory {
    Trajectory {
        velocity: nav.velocity - delta_v,
        ..*nav
    }
}

/// Residual Doppler (Hz) of a target whose true height differs by `dq` from
/// the focusing height, for motion along `x` and a target straight ahead.
pub fn residual_doppler_height(vx: f64, range: f64, theta: f64, dq: f64, wavelength: f64) -> Result<f64> {
    if !(range > 0.0) || !(wavelength > 0.0) {
        return Err(Error::InvalidConfig("range and wavelength must be positive".into()));
    }
    if !(theta > 0.0 && theta < std::f64::consts::PI) || theta.sin() < 1e-6 {
        return Err(Error::Geometry(format!("incidence angle {theta} rad is degenerate")));
    }
    if (theta - std::f64::consts::FRAC_PI_2).abs() < 1e-12 {
        return Ok(0.0);
    }
    let range_rate = vx * dq / (range * theta.tan());
    Ok(2.0 / wavelength * range_rate)
}

/// Along-track velocity error producing the same Doppler as `doppler_hz`.
pub fn equivalent_velocity_error(doppler_hz: f64, wavelength: f64) -> f64 {
    doppler_hz * wavelength / 2.0
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_phase(a: f64) -> f64 {
    use std::f64::consts::PI;
    let w = a - 2.0 * PI * ((a + PI) / (2.0 * PI)).floor();
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Unwrapped phase of a complex series by successive wrapped differences.
pub fn unwrap_phase(series: &[Complex32]) -> Result<Vec<f64>> {
    if series.len() < 2 {
        return Err(Error::Signal("phase unwrapping needs at least 2 samples".into()));
    }
    if series.iter().any(|s| s.norm() == 0.0) {
        return Err(Error::Signal("zero-magnitude sample has no phase".into()));
    }
    let mut out = Vec::with_capacity(series.len());
    let mut prev = series[0].arg() as f64;
    let mut acc = prev;
    out.push(acc);
    for s in &series[1..] {
        let a = s.arg() as f64;
        acc += wrap_phase(a - prev);
        prev = a;
        out.push(acc);
    }
    Ok(out)
}

/// Unwrapped slow-time phase history at a GCP.
pub fn unwrap_gcp_phase(stack: &ImageStack, gcp: &Gcp) -> Result<Vec<f64>> {
    let [row, col] = gcp.pixel;
    if row >= stack.grid.ny || col >= stack.grid.nx {
        return Err(Error::IndexOutOfRange {
            what: "GCP pixel",
            index: row * stack.grid.nx + col,
            len: stack.grid.len(),
        });
    }
    unwrap_phase(&stack.series(row, col))
}

/// Parameters of the complete autofocus chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AutofocusParams {
    pub gcp_count: usize,
    pub min_separation: usize,
    pub pad_factor: usize,
    pub refinement: PeakRefinement,
    pub margin: f64,
    pub wls: WlsOptions,
    /// Maximum number of estimation passes in [`refocus_autofocus`].
    pub passes: usize,
    /// Stop refocusing once a pass estimates a residual below this norm (m/s).
    pub tolerance: f64,
}

impl Default for AutofocusParams {
    fn default() -> Self {
        Self {
            gcp_count: 25,
            min_separation: 5,
            pad_factor: 8,
            refinement: PeakRefinement::Parabolic,
            margin: 1.5,
            wls: WlsOptions::default(),
            passes: 1,
            tolerance: 1e-3,
        }
    }
}

/// GCP detection, frequency estimation and outlier flagging, without inversion.
pub fn measure_gcps(
    stack: &ImageStack,
    nav_accuracy: f64,
    wavelength: f64,
    params: &AutofocusParams,
) -> Result<Vec<Gcp>> {
    let amp = incoherent_mean(stack)?;
    let mut gcps = select_gcp(&amp, &stack.grid, params.gcp_count, params.min_separation)?;
    let estimates = gcps
        .par_iter()
        .map(|g| estimate_gcp_frequency(stack, g, params.pad_factor, params.refinement))
        .collect::<Result<Vec<_>>>()?;
    for (g, e) in gcps.iter_mut().zip(estimates) {
        g.omega = e.omega;
        g.prominence = e.prominence;
    }
    reject_outliers(&gcps, nav_accuracy, wavelength, params.margin)
}

/// Estimate the residual velocity error from a stack focused along `nav`.
pub fn autofocus(
    stack: &ImageStack,
    aperture_center: Vec3,
    nav_accuracy: f64,
    wavelength: f64,
    params: &AutofocusParams,
) -> Result<MocoReport> {
    let gcps = measure_gcps(stack, nav_accuracy, wavelength, params)?;
    solve_wls(&gcps, aperture_center, wavelength, &params.wls)
}

/// Outcome of [`refocus_autofocus`].
#[derive(Debug, Clone)]
pub struct RefocusOutcome {
    /// Total velocity error removed from the navigation solution.
    pub delta_v: Vec3,
    /// Residual estimate of every pass, in order.
    pub passes: Vec<MocoReport>,
    /// Trajectory the final stack was formed along.
    pub corrected: Trajectory,
    /// Final stack with the last residual phase-compensated.
    pub stack: ImageStack,
}

/// Autofocus with refocusing: each pass forms a stack along the trajectory
/// corrected by all previous estimates and measures what is left. The last
/// residual is removed with phase screens. `form_stack` back-projects the
/// data along a given trajectory.
pub fn refocus_autofocus<F>(
    mut form_stack: F,
    nav: &Trajectory,
    arr: &ArrayConfig,
    nav_accuracy: f64,
    wavelength: f64,
    params: &AutofocusParams,
) -> Result<RefocusOutcome>
where
    F: FnMut(&Trajectory) -> Result<ImageStack>,
{
    if params.passes == 0 {
        return Err(Error::InvalidConfig("autofocus needs at least one pass".into()));
    }
    if !(params.tolerance >= 0.0) {
        return Err(Error::InvalidConfig(format!("tolerance must be non-negative, got {}", params.tolerance)));
    }
    let mut traj = *nav;
    let mut total = Vec3::ZERO;
    let mut passes = Vec::with_capacity(params.passes);
    loop {
        let stack = form_stack(&traj)?;
        let center = arr.aperture_center(&traj);
        let rep = autofocus(&stack, center, nav_accuracy, wavelength, params)?;
        let dv = rep.delta_v;
        passes.push(rep);
        if passes.len() == params.passes || dv.norm() <= params.tolerance {
            let screens = phase_screens(&stack.grid, dv, &stack.tau, center, wavelength)?;
            return Ok(RefocusOutcome {
                delta_v: total + dv,
                passes,
                corrected: traj,
                stack: compensate(&stack, &screens)?,
            });
        }
        total += dv;
        traj = integrate_residual_velocity(&traj, dv);
    }
}
