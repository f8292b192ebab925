//! Focus and localization figures of merit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal_sim::Scene;
use crate::tdbp::SarImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocusMetrics {
    pub peak_magnitude: f64,
    /// `[row, col]` of the brightest pixel.
    pub peak_pixel: [usize; 2],
    /// -3 dB widths through the peak (m); `None` when not measurable.
    pub width_x: Option<f64>,
    pub width_y: Option<f64>,
    /// Natural-log Shannon entropy of `|I|^2`.
    pub entropy: f64,
    /// Standard deviation over mean of `|I|`.
    pub contrast: f64,
}

pub fn focus_metrics(img: &SarImage) -> Result<FocusMetrics> {
    let ((row, col), peak) = img.peak();
    Ok(FocusMetrics {
        peak_magnitude: peak,
        peak_pixel: [row, col],
        width_x: impulse_response_width(img, (row, col), Axis::X).ok(),
        width_y: impulse_response_width(img, (row, col), Axis::Y).ok(),
        entropy: image_entropy(img)?,
        contrast: image_contrast(img)?,
    })
}

/// Linear-interpolated -3 dB width of the magnitude cut through `peak`.
pub fn impulse_response_width(img: &SarImage, peak: (usize, usize), axis: Axis) -> Result<f64> {
    let g = &img.grid;
    let (row, col) = peak;
    if row >= g.ny || col >= g.nx {
        return Err(Error::IndexOutOfRange {
            what: "peak pixel",
            index: row * g.nx + col,
            len: g.len(),
        });
    }
    let (cut, at, spacing): (Vec<f64>, usize, f64) = match axis {
        Axis::X => ((0..g.nx).map(|c| img.get(row, c).norm() as f64).collect(), col, g.dx),
        Axis::Y => ((0..g.ny).map(|r| img.get(r, col).norm() as f64).collect(), row, g.dy),
    };
    if at == 0 || at + 1 == cut.len() {
        return Err(Error::Geometry("peak lies on the grid boundary".into()));
    }
    let top = cut[at];
    if !(top > 0.0) || cut[at - 1] > top || cut[at + 1] > top {
        return Err(Error::Geometry("pixel is not a local maximum".into()));
    }
    let level = top * 10f64.powf(-3.0 / 20.0);

    let left = (0..at)
        .rev()
        .find(|&i| cut[i] < level)
        .map(|i| i as f64 + (level - cut[i]) / (cut[i + 1] - cut[i]))
        .ok_or_else(|| Error::Geometry("-3 dB level not reached before the grid edge".into()))?;
    let right = (at + 1..cut.len())
        .find(|&i| cut[i] < level)
        .map(|i| i as f64 - (level - cut[i]) / (cut[i - 1] - cut[i]))
        .ok_or_else(|| Error::Geometry("-3 dB level not reached before the grid edge".into()))?;
    Ok((right - left) * spacing)
}

/// Shannon entropy (natural log) of the normalized intensity distribution.
pub fn image_entropy(img: &SarImage) -> Result<f64> {
    let total: f64 = img.data().iter().map(|v| v.norm_sqr() as f64).sum();
    if !(total > 0.0) {
        return Err(Error::Signal("entropy of an all-zero image".into()));
    }
    let h = img
        .data()
        .iter()
        .map(|v| v.norm_sqr() as f64 / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum::<f64>();
    Ok(h.max(0.0))
}

pub fn image_contrast(img: &SarImage) -> Result<f64> {
    let mags = img.magnitude();
    let n = mags.len() as f64;
    let mean = mags.iter().sum::<f64>() / n;
    if !(mean > 0.0) {
        return Err(Error::Signal("contrast of an all-zero image".into()));
    }
    let var = mags.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / n;
    Ok(var.sqrt() / mean)
}

/// Position error of one scatterer's image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Localization {
    pub scatterer: usize,
    /// Associated peak `[row, col]`, `None` for a miss.
    pub peak: Option<[usize; 2]>,
    /// Distance from scatterer to associated peak (m).
    pub error: Option<f64>,
}

/// Associate each scatterer with the brightest pixel within `capture_radius`
/// grid spacings and report the distance between them.
pub fn localization_error(img: &SarImage, truth: &Scene, capture_radius: f64) -> Vec<Localization> {
    let g = &img.grid;
    truth
        .scatterers
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let p = s.position;
            let fc = (p.x - g.x0) / g.dx;
            let fr = (p.y - g.y0) / g.dy;
            let c_lo = (fc - capture_radius).ceil().max(0.0);
            let c_hi = (fc + capture_radius).floor().min(g.nx as f64 - 1.0);
            let r_lo = (fr - capture_radius).ceil().max(0.0);
            let r_hi = (fr + capture_radius).floor().min(g.ny as f64 - 1.0);
            let mut best: Option<((usize, usize), f32)> = None;
            if c_lo <= c_hi && r_lo <= r_hi {
                for r in r_lo as usize..=r_hi as usize {
                    for c in c_lo as usize..=c_hi as usize {
                        let d2 = (r as f64 - fr).powi(2) + (c as f64 - fc).powi(2);
                        if d2 > capture_radius * capture_radius {
                            continue;
                        }
                        let m = img.get(r, c).norm();
                        if m > 0.0 && best.is_none_or(|(_, bm)| m > bm) {
                            best = Some(((r, c), m));
                        }
                    }
                }
            }
            match best {
                Some(((r, c), _)) => Localization {
                    scatterer: i,
                    peak: Some([r, c]),
                    error: Some(g.position(r, c).distance(p)),
                },
                None => Localization {
                    scatterer: i,
                    peak: None,
                    error: None,
                },
            }
        })
        .collect()
}

/// Mean error over the scatterers that were found.
pub fn mean_localization_error(locs: &[Localization]) -> Option<f64> {
    let found: Vec<f64> = locs.iter().filter_map(|l| l.error).collect();
    (!found.is_empty()).then(|| found.iter().sum::<f64>() / found.len() as f64)
}

/// Ordinary least-squares line `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::DimensionMismatch("line fit needs two equal series of >= 2 points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Signal("line fit over a constant abscissa".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}
