//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use mimosar::metrics::{image_entropy, impulse_response_width, linear_fit, Axis};
use mimosar::moco::{
    outlier_threshold, refocus_autofocus, reject_outliers, residual_doppler_height, solve_wls, unwrap_gcp_phase,
    equivalent_velocity_error, measure_gcps, Gcp, WlsOptions,
};
use mimosar::signal_sim::{apply_velocity_error, simulate_range_compressed};
use mimosar::tdbp::{coherent_sum, Backprojector};
use mimosar::{AutofocusParams, GroundGrid, RadarConfig, Scatterer, Scene, SarImage, Trajectory, Vec3};
use mimosar_cli::config::{GridSpec, LatticeSpec, RunConfig};
use mimosar_cli::pipeline;
use num_complex::Complex64;

// criterion 1
const DOPPLER_HZ_LOW: f64 = 19.0 * 0.95;
const DOPPLER_HZ_HIGH: f64 = 20.0 * 1.05;
const DOPPLER_RUNTIME: Duration = Duration::from_millis(1);
// criterion 2
const EQUIV_DV_TARGET: f64 = 0.039;
const EQUIV_DV_TOL: f64 = 0.001;
// criterion 3
const RANGE_WIDTH_MIN: f64 = 0.04;
const RANGE_WIDTH_MAX: f64 = 0.06;
const RANGE_RUNTIME: Duration = Duration::from_secs(10);
// criterion 4
const WLS_TOL: f64 = 1e-9;
// criterion 5
const SEEDS: u64 = 10;
const RECOVERY_TOL: f64 = 0.015;
const PIPELINE_RUNTIME: Duration = Duration::from_secs(300);
// criterion 6
const ENTROPY_GAP_FRACTION: f64 = 0.05;
const PEAK_FRACTION: f64 = 0.95;
// criterion 7
const SLOPE_TOL: f64 = 0.02;
const R_SQUARED_MIN: f64 = 0.99;
// criterion 8
const OUTLIER_DV_TOL: f64 = 1e-12;
const MOVER_RADIAL: f64 = 2.0;

const TABLE_DV: Vec3 = Vec3 {
    x: 0.2622,
    y: -0.0114,
    z: 0.0,
};

struct Ledger {
    failures: usize,
}

impl Ledger {
    fn record(&mut self, id: &str, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!("{} {id} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        std::io::stdout().flush().ok();
    }

    fn info(&self, id: &str, detail: String) {
        println!("INFO {id} {detail}");
        std::io::stdout().flush().ok();
    }
}

fn height_mismatch(l: &mut Ledger) {
    let start = Instant::now();
    let f = residual_doppler_height(15.0, 20.0, 87f64.to_radians(), 1.0, 0.004);
    let elapsed = start.elapsed();
    match f {
        Ok(f) => l.record(
            "C1",
            "height-mismatch Doppler",
            (DOPPLER_HZ_LOW..=DOPPLER_HZ_HIGH).contains(&f) && elapsed < DOPPLER_RUNTIME,
            format!("{f:.3} Hz in [{DOPPLER_HZ_LOW:.2}, {DOPPLER_HZ_HIGH:.2}], {elapsed:?} < {DOPPLER_RUNTIME:?}"),
        ),
        Err(e) => l.record("C1", "height-mismatch Doppler", false, e.to_string()),
    }
}

fn velocity_equivalence(l: &mut Ledger) {
    let f = residual_doppler_height(15.0, 20.0, 87f64.to_radians(), 1.0, 0.004).unwrap_or(f64::NAN);
    let dv = equivalent_velocity_error(f, 0.004);
    l.record(
        "C2",
        "velocity-error equivalence",
        (dv - EQUIV_DV_TARGET).abs() <= EQUIV_DV_TOL,
        format!("{:.4} cm/s vs {:.1} +- {:.1} cm/s", dv * 100.0, EQUIV_DV_TARGET * 100.0, EQUIV_DV_TOL * 100.0),
    );
}

fn range_resolution(l: &mut Ledger) {
    let start = Instant::now();
    let radar = RadarConfig::automotive(25.0);
    let traj = Trajectory::new(Vec3::ZERO, Vec3::new(6.94, 0.0, 0.0), 200, radar.pri).unwrap();
    let arr = mimosar::ArrayConfig::quarter_wavelength(8, radar.wavelength).unwrap();
    let target = Vec3::new(15.0, 0.0, 0.0);
    let grid = GroundGrid::new(14.8, 0.01, 41, -0.2, 0.01, 41, 0.0).unwrap();
    let scene = Scene::new(vec![Scatterer::new(target, Complex64::new(1.0, 0.0))]);
    let width = simulate_range_compressed(&scene, &traj, &arr, &radar)
        .and_then(|cube| Backprojector::new(&cube, &traj, &arr, &grid, &radar)?.image())
        .and_then(|img| {
            let (row, col) = grid.nearest_pixel(target).unwrap();
            impulse_response_width(&img, (row, col), Axis::X)
        });
    let elapsed = start.elapsed();
    match width {
        Ok(w) => l.record(
            "C3",
            "range resolution",
            (RANGE_WIDTH_MIN..=RANGE_WIDTH_MAX).contains(&w) && elapsed < RANGE_RUNTIME,
            format!("-3 dB width {:.2} cm in [4, 6] cm, {:.2} s < 10 s", w * 100.0, elapsed.as_secs_f64()),
        ),
        Err(e) => l.record("C3", "range resolution", false, e.to_string()),
    }
}

fn wls_oracle(l: &mut Ledger) {
    let center = Vec3::new(0.0, 0.0, 0.5);
    let k = 4.0 * PI / 0.004;
    let gcps: Vec<Gcp> = (0..25)
        .map(|i| {
            let phi = (-40.0 + 80.0 * i as f64 / 24.0).to_radians();
            let p = Vec3::new(20.0 * phi.cos(), 20.0 * phi.sin(), 0.0);
            let d = [p.x - center.x, p.y - center.y, p.z - center.z];
            let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            let omega = k * (d[0] * TABLE_DV.x + d[1] * TABLE_DV.y + d[2] * TABLE_DV.z) / n;
            Gcp {
                pixel: [i, 0],
                position: p,
                amplitude: 1.0 + i as f64 * 0.1,
                omega,
                prominence: 1.0,
                weight: 0.0,
                outlier: false,
            }
        })
        .collect();
    match solve_wls(&gcps, center, 0.004, &WlsOptions::default()) {
        Ok(rep) => {
            let err = (rep.delta_v.x - TABLE_DV.x).abs().max((rep.delta_v.y - TABLE_DV.y).abs());
            l.record("C4", "WLS oracle equivalence", err <= WLS_TOL, format!("max error {err:.2e} <= {WLS_TOL:.0e} m/s"));
        }
        Err(e) => l.record("C4", "WLS oracle equivalence", false, e.to_string()),
    }
}

struct SeedRun {
    estimate: Vec3,
    single_pass: Vec3,
    passes: usize,
    runtime: Duration,
    entropy: [f64; 3],
    peak: [f64; 3],
    gcps: Vec<Gcp>,
}

/// Simulate, autofocus and focus the criterion-5 scene for one seed.
/// `entropy` and `peak` are ordered no-MoCo, MoCo, exact trajectory.
fn seed_run(seed: u64) -> Result<SeedRun, String> {
    let mut cfg = RunConfig::default();
    cfg.set_seed(seed);
    let grid = cfg.grid.grid().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let cube = pipeline::simulate(&cfg).map_err(|e| e.to_string())?;
    let nav = cfg.nav_trajectory().map_err(|e| e.to_string())?;
    let mut first: Option<SarImage> = None;
    let out = refocus_autofocus(
        |t| {
            let stack = Backprojector::new(&cube, t, &cfg.array, &grid, &cfg.radar)?
                .with_interpolator(cfg.focus.interpolator)
                .stack()?;
            if first.is_none() {
                first = Some(coherent_sum(&stack)?);
            }
            Ok(stack)
        },
        &nav,
        &cfg.array,
        cfg.radar.nav_accuracy,
        cfg.radar.wavelength,
        &cfg.moco,
    )
    .map_err(|e| e.to_string())?;
    let moco = coherent_sum(&out.stack).map_err(|e| e.to_string())?;
    let runtime = start.elapsed();
    let (exact, _) = pipeline::focus_along(&cfg, &cube, &cfg.true_trajectory().map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let no_moco = first.ok_or("no stack formed")?;
    let images = [&no_moco, &moco, &exact];
    let mut entropy = [0.0; 3];
    let mut peak = [0.0; 3];
    for (i, img) in images.iter().enumerate() {
        entropy[i] = image_entropy(img).map_err(|e| e.to_string())?;
        peak[i] = img.peak().1;
    }
    Ok(SeedRun {
        estimate: out.delta_v,
        single_pass: out.passes[0].delta_v,
        passes: out.passes.len(),
        runtime,
        entropy,
        peak,
        gcps: out.passes[0].gcps.clone(),
    })
}

fn recovery_and_focus(l: &mut Ledger) -> Option<SeedRun> {
    let mut runs = Vec::new();
    for seed in 1..=SEEDS {
        match seed_run(seed) {
            Ok(r) => {
                l.info(
                    "C5",
                    format!(
                        "seed {seed}: dv = ({:+.5}, {:+.5}) after {} passes (single pass ({:+.4}, {:+.4})), {:.1} s",
                        r.estimate.x,
                        r.estimate.y,
                        r.passes,
                        r.single_pass.x,
                        r.single_pass.y,
                        r.runtime.as_secs_f64()
                    ),
                );
                l.info(
                    "C6",
                    format!(
                        "seed {seed}: entropy no-moco {:.6} moco {:.9} exact {:.9} (moco - exact {:+.3e}); peak ratio {:.6}",
                        r.entropy[0],
                        r.entropy[1],
                        r.entropy[2],
                        r.entropy[1] - r.entropy[2],
                        r.peak[1] / r.peak[2]
                    ),
                );
                runs.push(r);
            }
            Err(e) => {
                l.record("C5", "end-to-end recovery", false, format!("seed {seed}: {e}"));
                l.record("C6", "focus restoration", false, format!("seed {seed}: {e}"));
                return None;
            }
        }
    }
    let n = runs.len() as f64;
    let mean_abs = |f: fn(&Vec3) -> f64, truth: f64| runs.iter().map(|r| (f(&r.estimate) - truth).abs()).sum::<f64>() / n;
    let (ex, ey) = (mean_abs(|v| v.x, TABLE_DV.x), mean_abs(|v| v.y, TABLE_DV.y));
    let slowest = runs.iter().map(|r| r.runtime).max().unwrap_or_default();
    l.record(
        "C5",
        "end-to-end recovery",
        ex <= RECOVERY_TOL && ey <= RECOVERY_TOL && slowest < PIPELINE_RUNTIME,
        format!(
            "mean |error| over {SEEDS} seeds ({:.3}, {:.3}) cm/s <= {:.1} cm/s; slowest pipeline {:.1} s < {} s",
            ex * 100.0,
            ey * 100.0,
            RECOVERY_TOL * 100.0,
            slowest.as_secs_f64(),
            PIPELINE_RUNTIME.as_secs()
        ),
    );

    let mut worst_gap: f64 = 0.0;
    let mut worst_peak = f64::INFINITY;
    let mut ordered = true;
    for r in &runs {
        let [none, moco, exact] = r.entropy;
        ordered &= none > moco && moco >= exact;
        worst_gap = worst_gap.max((moco - exact) / (none - exact));
        worst_peak = worst_peak.min(r.peak[1] / r.peak[2]);
    }
    l.record(
        "C6",
        "focus restoration",
        ordered && worst_gap <= ENTROPY_GAP_FRACTION && worst_peak >= PEAK_FRACTION,
        format!(
            "ordering no-moco > moco >= exact on all seeds: {ordered}; worst entropy gap {:.2}% <= 5%; worst peak ratio {:.4} >= {PEAK_FRACTION}",
            worst_gap * 100.0,
            worst_peak
        ),
    );
    runs.into_iter().next()
}

fn linear_phase_law(l: &mut Ledger) {
    let radar = RadarConfig::automotive(25.0);
    let traj = Trajectory::new(Vec3::ZERO, Vec3::new(6.94, 0.0, 0.0), 200, radar.pri).unwrap();
    let arr = mimosar::ArrayConfig::quarter_wavelength(8, radar.wavelength).unwrap();
    let grid = GroundGrid::new(14.5, 0.05, 21, -0.5, 0.05, 21, 0.0).unwrap();
    let target = grid.position(10, 10);
    let dvx = TABLE_DV.x;
    let nav = apply_velocity_error(&traj, Vec3::new(dvx, 0.0, 0.0));
    let scene = Scene::new(vec![Scatterer::new(target, Complex64::new(1.0, 0.0))]);
    let fit = simulate_range_compressed(&scene, &traj, &arr, &radar)
        .and_then(|cube| Backprojector::new(&cube, &nav, &arr, &grid, &radar)?.stack())
        .and_then(|stack| {
            let phase = unwrap_gcp_phase(&stack, &Gcp::new(10, 10, &grid, 1.0))?;
            linear_fit(&stack.tau, &phase)
        });
    let expected = -4.0 * PI / radar.wavelength * dvx;
    match fit {
        Ok(fit) => l.record(
            "C7",
            "linear-phase law",
            (fit.slope - expected).abs() <= SLOPE_TOL * expected.abs() && fit.r_squared > R_SQUARED_MIN,
            format!(
                "slope {:.2} vs {:.2} rad/s (rel. error {:.3}%), R^2 {:.6}",
                fit.slope,
                expected,
                (fit.slope / expected - 1.0).abs() * 100.0,
                fit.r_squared
            ),
        ),
        Err(e) => l.record("C7", "linear-phase law", false, e.to_string()),
    }
}

fn outlier_rejection(l: &mut Ledger, seeded: Option<&SeedRun>) {
    let cfg = RunConfig::default();
    let lambda = cfg.radar.wavelength;
    let center = cfg.array.aperture_center(&cfg.nav_trajectory().unwrap());
    match seeded {
        Some(run) => {
            let base = reject_outliers(&run.gcps, cfg.radar.nav_accuracy, lambda, cfg.moco.margin)
                .and_then(|g| solve_wls(&g, center, lambda, &cfg.moco.wls));
            let p = Vec3::new(30.0, 3.0, 0.0);
            let u = (p - center) * (1.0 / (p - center).norm());
            let k = 4.0 * PI / lambda;
            let brightest = run.gcps.iter().map(|g| g.amplitude).fold(0.0, f64::max);
            let mut with_mover = run.gcps.clone();
            with_mover.push(Gcp {
                pixel: [0, 0],
                position: p,
                amplitude: 2.0 * brightest,
                omega: k * u.dot(TABLE_DV + u * MOVER_RADIAL),
                prominence: 100.0,
                weight: 0.0,
                outlier: false,
            });
            let flagged = reject_outliers(&with_mover, cfg.radar.nav_accuracy, lambda, cfg.moco.margin);
            let mover_flagged = flagged.as_ref().map(|g| g.last().unwrap().outlier).unwrap_or(false);
            let other = flagged.and_then(|g| solve_wls(&g, center, lambda, &cfg.moco.wls));
            match (base, other) {
                (Ok(a), Ok(b)) => {
                    let diff = (a.delta_v - b.delta_v).norm();
                    l.record(
                        "C8",
                        "outlier rejection",
                        mover_flagged && diff <= OUTLIER_DV_TOL,
                        format!(
                            "2 m/s radial GCP flagged: {mover_flagged} (threshold {:.1} rad/s); |dv change| {diff:.1e} <= {OUTLIER_DV_TOL:.0e}",
                            outlier_threshold(cfg.radar.nav_accuracy, lambda, cfg.moco.margin)
                        ),
                    );
                }
                (a, b) => l.record("C8", "outlier rejection", false, format!("{:?} / {:?}", a.err(), b.err())),
            }
        }
        None => l.record("C8", "outlier rejection", false, "criterion-5 run unavailable".into()),
    }
    simulated_mover(l);
}

/// A simulated 2 m/s radial mover, at a PRI where its Doppler is unambiguous.
fn simulated_mover(l: &mut Ledger) {
    let radar = RadarConfig {
        pri: 2.5e-4,
        ..RadarConfig::automotive(30.0)
    };
    let traj = Trajectory::new(Vec3::ZERO, Vec3::new(6.94, 0.0, 0.0), 200, radar.pri).unwrap();
    let arr = mimosar::ArrayConfig::quarter_wavelength(8, radar.wavelength).unwrap();
    let grid = GroundGrid::new(10.0, 0.05, 161, -4.0, 0.05, 161, 0.0).unwrap();
    let mut scatterers = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            let p = grid.position(20 + 60 * j, 20 + 60 * i);
            scatterers.push(Scatterer::new(p, Complex64::new(1.0, 0.0)));
        }
    }
    let mover_at = grid.position(40, 120);
    scatterers.push(Scatterer::moving(
        mover_at,
        Complex64::new(3.0, 0.0),
        mover_at * (MOVER_RADIAL / mover_at.norm()),
    ));
    let nav = apply_velocity_error(&traj, Vec3::new(0.05, 0.0, 0.0));
    let params = AutofocusParams::default();
    let gcps = simulate_range_compressed(&Scene::new(scatterers), &traj, &arr, &radar)
        .and_then(|cube| Backprojector::new(&cube, &nav, &arr, &grid, &radar)?.stack())
        .and_then(|stack| measure_gcps(&stack, radar.nav_accuracy, radar.wavelength, &params));
    match gcps {
        Ok(gcps) => {
            let ring = mover_at.norm();
            let at_mover = gcps.iter().any(|g| g.pixel == [40, 120] && g.outlier);
            let only_ring = gcps.iter().filter(|g| g.outlier).all(|g| (g.position.norm() - ring).abs() < 0.3);
            l.record(
                "C8b",
                "simulated mover flagged (PRI 0.25 ms)",
                at_mover && only_ring,
                format!(
                    "mover GCP flagged: {at_mover}; flagged GCPs all on the mover's range ring: {only_ring} ({} of {})",
                    gcps.iter().filter(|g| g.outlier).count(),
                    gcps.len()
                ),
            );
        }
        Err(e) => l.record("C8b", "simulated mover flagged (PRI 0.25 ms)", false, e.to_string()),
    }
}

fn determinism(l: &mut Ledger) {
    let tmp = std::env::temp_dir().join(format!("mimosar-acceptance-{}", std::process::id()));
    let mut cfg = RunConfig {
        grid: GridSpec {
            x_min: 12.0,
            x_max: 22.0,
            dx: 0.05,
            y_min: -5.0,
            y_max: 5.0,
            dy: 0.05,
            height: 0.0,
        },
        ..RunConfig::default()
    };
    cfg.scene.lattice = Some(LatticeSpec {
        x: [13.0, 21.0],
        y: [-4.0, 2.0],
        nx: 3,
        ny: 3,
        amplitude: 1.0,
        stagger: 0.5,
        height: 0.0,
        snap_to_grid: true,
    });
    cfg.moco.gcp_count = 9;
    let result = (|| -> Result<Vec<String>, String> {
        std::fs::create_dir_all(&tmp).map_err(|e| e.to_string())?;
        let config = tmp.join("cfg.json");
        std::fs::write(&config, cfg.to_json()).map_err(|e| e.to_string())?;
        let mut dirs = Vec::new();
        for (name, threads) in [("a", "1"), ("b", "1"), ("c", "2")] {
            let dir = tmp.join(name);
            let out = Command::new(env!("CARGO_BIN_EXE_mimosar"))
                .args(["--threads", threads, "run", "--config"])
                .arg(&config)
                .arg("--out")
                .arg(&dir)
                .arg("--moco")
                .output()
                .map_err(|e| e.to_string())?;
            if !out.status.success() {
                return Err(String::from_utf8_lossy(&out.stderr).into_owned());
            }
            dirs.push(dir);
        }
        let mut differing = Vec::new();
        for f in ["cube.srcc", "image.simg", "report.json", "quicklook.pgm", "gcps.csv"] {
            let read = |d: &Path| std::fs::read(d.join(f)).unwrap_or_default();
            let a = read(&dirs[0]);
            if a.is_empty() || dirs[1..].iter().any(|d| read(d) != a) {
                differing.push(f.to_string());
            }
        }
        Ok(differing)
    })();
    std::fs::remove_dir_all(&tmp).ok();
    match result {
        Ok(differing) => l.record(
            "C9",
            "determinism",
            differing.is_empty(),
            if differing.is_empty() {
                "cube, image, report, quick-look and GCP table byte-identical over two 1-thread runs and a 2-thread run".into()
            } else {
                format!("differing files: {}", differing.join(", "))
            },
        ),
        Err(e) => l.record("C9", "determinism", false, e),
    }
}

fn main() -> ExitCode {
    let mut l = Ledger { failures: 0 };
    height_mismatch(&mut l);
    velocity_equivalence(&mut l);
    range_resolution(&mut l);
    wls_oracle(&mut l);
    linear_phase_law(&mut l);
    determinism(&mut l);
    let seeded = recovery_and_focus(&mut l);
    outlier_rejection(&mut l, seeded.as_ref());
    if l.failures == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criterion check(s) failed", l.failures);
        ExitCode::FAILURE
    }
}
