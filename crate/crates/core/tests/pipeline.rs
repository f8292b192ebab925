//! Simulation-backed checks of the autofocus chain on small scenes.

use mimosar::metrics::{image_entropy, linear_fit};
use mimosar::moco::{
    autofocus, compensate, estimate_gcp_frequency, incoherent_mean, measure_gcps, phase_screens, refocus_autofocus,
    select_gcp, unwrap_gcp_phase, AutofocusParams, Gcp, PeakRefinement,
};
use mimosar::signal_sim::{apply_velocity_error, noise_power_for_snr_db, simulate_range_compressed};
use mimosar::tdbp::{coherent_sum, Backprojector};
use mimosar::{ArrayConfig, DataCube, GroundGrid, ImageStack, RadarConfig, Scatterer, Scene, Trajectory, Vec3};
use num_complex::Complex64;

const TABLE_DV: Vec3 = Vec3 {
    x: 0.2622,
    y: -0.0114,
    z: 0.0,
};

struct Setup {
    radar: RadarConfig,
    traj: Trajectory,
    arr: ArrayConfig,
    grid: GroundGrid,
}

impl Setup {
    fn new(pri: f64, pulses: usize, grid: GroundGrid) -> Self {
        let radar = RadarConfig {
            pri,
            ..RadarConfig::automotive(45.0)
        };
        Self {
            traj: Trajectory::new(Vec3::ZERO, Vec3::new(6.94, 0.0, 0.0), pulses, pri).unwrap(),
            arr: ArrayConfig::quarter_wavelength(8, radar.wavelength).unwrap(),
            radar,
            grid,
        }
    }

    fn cube(&self, scene: &Scene) -> DataCube {
        simulate_range_compressed(scene, &self.traj, &self.arr, &self.radar).unwrap()
    }

    fn stack(&self, cube: &DataCube, nav: &Trajectory) -> ImageStack {
        Backprojector::new(cube, nav, &self.arr, &self.grid, &self.radar)
            .unwrap()
            .stack()
            .unwrap()
    }

    fn nav(&self, dv: Vec3) -> Trajectory {
        apply_velocity_error(&self.traj, dv)
    }
}

fn unit(p: Vec3) -> Scatterer {
    Scatterer::new(p, Complex64::new(1.0, 0.0))
}

/// `nx` by `ny` targets on grid nodes spanning the given extents.
fn lattice(grid: &GroundGrid, xs: (f64, f64), ys: (f64, f64), nx: usize, ny: usize) -> Vec<Scatterer> {
    let mut out = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            let x = xs.0 + (xs.1 - xs.0) * i as f64 / (nx - 1) as f64;
            let y = ys.0 + (ys.1 - ys.0) * j as f64 / (ny - 1) as f64;
            let (row, col) = grid.nearest_pixel(Vec3::new(x, y, 0.0)).unwrap();
            out.push(unit(grid.position(row, col)));
        }
    }
    out
}

fn boresight_setup(pri: f64) -> (Setup, Gcp, DataCube) {
    let grid = GroundGrid::new(14.0, 0.05, 41, -1.0, 0.05, 41, 0.0).unwrap();
    let s = Setup::new(pri, 200, grid);
    let target = grid.position(20, 20);
    let cube = s.cube(&Scene::new(vec![unit(target)]));
    let gcp = Gcp::new(20, 20, &grid, 1.0);
    (s, gcp, cube)
}

/// Five columns of five targets, odd columns shifted by half a row pitch.
fn staggered(grid: &GroundGrid, x0: f64, dx: f64, y0: f64, dy: f64) -> Vec<Scatterer> {
    let mut out = Vec::new();
    for i in 0..5 {
        let shift = if i % 2 == 1 { dy / 2.0 } else { 0.0 };
        for j in 0..5 {
            let p = Vec3::new(x0 + dx * i as f64, y0 + dy * j as f64 + shift, 0.0);
            let (row, col) = grid.nearest_pixel(p).unwrap();
            out.push(unit(grid.position(row, col)));
        }
    }
    out
}

#[test]
fn gcp_selection_finds_lattice_targets() {
    let grid = GroundGrid::new(10.0, 0.05, 401, -8.0, 0.05, 321, 0.0).unwrap();
    let s = Setup::new(1e-3, 200, grid);
    let targets = staggered(&grid, 11.0, 4.5, -7.0, 3.0);
    let cube = s.cube(&Scene::new(targets.clone()));
    let stack = s.stack(&cube, &s.traj);
    let gcps = select_gcp(&incoherent_mean(&stack).unwrap(), &grid, 25, 5).unwrap();
    let found = targets
        .iter()
        .filter(|t| {
            let (tr, tc) = grid.nearest_pixel(t.position).unwrap();
            gcps.iter()
                .any(|g| g.pixel[0].abs_diff(tr) <= 1 && g.pixel[1].abs_diff(tc) <= 1)
        })
        .count();
    assert!(found >= 24, "recall {found}/25");
}

#[test]
fn boresight_frequency_follows_velocity_error() {
    let (s, gcp, cube) = boresight_setup(1e-3);
    let stack = s.stack(&cube, &s.nav(Vec3::new(0.1, 0.0, 0.0)));
    let est = estimate_gcp_frequency(&stack, &gcp, 8, PeakRefinement::Parabolic).unwrap();
    let expected = 4.0 * std::f64::consts::PI / s.radar.wavelength * 0.1;
    assert!((est.omega - expected).abs() < 0.03 * expected, "{} vs {expected}", est.omega);
}

#[test]
fn boresight_unwrapped_phase_slope() {
    let (s, gcp, cube) = boresight_setup(1e-3);
    let dvx = 0.1;
    let stack = s.stack(&cube, &s.nav(Vec3::new(dvx, 0.0, 0.0)));
    let phase = unwrap_gcp_phase(&stack, &gcp).unwrap();
    let fit = linear_fit(&stack.tau, &phase).unwrap();
    let expected = -4.0 * std::f64::consts::PI / s.radar.wavelength * dvx;
    assert!((fit.slope - expected).abs() < 0.03 * expected.abs(), "{} vs {expected}", fit.slope);
    assert!(fit.r_squared > 0.99);
}

#[test]
fn oracle_compensation_restores_peak() {
    // quarter-millisecond PRI keeps the residual range walk well inside a resolution cell
    let (s, _, cube) = boresight_setup(2.5e-4);
    let exact = coherent_sum(&s.stack(&cube, &s.traj)).unwrap().peak().1;
    let nav = s.nav(TABLE_DV);
    let stack = s.stack(&cube, &nav);
    let defocused = coherent_sum(&stack).unwrap().peak().1;
    let screens = phase_screens(&s.grid, TABLE_DV, &stack.tau, s.arr.aperture_center(&nav), s.radar.wavelength).unwrap();
    let fixed = coherent_sum(&compensate(&stack, &screens).unwrap()).unwrap().peak().1;
    assert!(defocused < 0.9 * exact, "{defocused} vs {exact}");
    assert!((fixed - exact).abs() <= 0.02 * exact, "{fixed} vs {exact}");
}

fn noisy_lattice(seed: u64) -> (Setup, Vec<Scatterer>, DataCube) {
    let grid = GroundGrid::new(10.0, 0.05, 241, -6.0, 0.05, 241, 0.0).unwrap();
    let s = Setup::new(1e-3, 200, grid);
    let targets = lattice(&grid, (11.0, 21.0), (-5.0, 5.0), 5, 5);
    let scene = Scene::new(targets.clone()).with_noise(noise_power_for_snr_db(20.0, 1.0), seed);
    let cube = s.cube(&scene);
    (s, targets, cube)
}

#[test]
fn refocused_autofocus_recovers_velocity_and_sharpens() {
    let (s, _, cube) = noisy_lattice(3);
    let nav = s.nav(TABLE_DV);
    let params = AutofocusParams {
        passes: 8,
        ..AutofocusParams::default()
    };
    let mut first = None;
    let form = |t: &Trajectory| Backprojector::new(&cube, t, &s.arr, &s.grid, &s.radar)?.stack();
    let out = refocus_autofocus(
        |t| {
            let st = form(t)?;
            if t == &nav {
                first = Some(image_entropy(&coherent_sum(&st)?).unwrap());
            }
            Ok(st)
        },
        &nav,
        &s.arr,
        s.radar.nav_accuracy,
        s.radar.wavelength,
        &params,
    );
    let out = out.unwrap();
    let last = out.passes.last().unwrap();
    for (i, (est, truth)) in [(out.delta_v.x, TABLE_DV.x), (out.delta_v.y, TABLE_DV.y)].into_iter().enumerate() {
        let bound = (3.0 * last.accuracy[i].unwrap()).max(0.01);
        assert!((est - truth).abs() <= bound, "component {i}: {est} vs {truth}");
    }
    assert!(out.passes.len() > 1 && out.passes.len() <= 8);
    assert!((out.corrected.velocity - (nav.velocity - (out.delta_v - last.delta_v))).norm() < 1e-12);
    let after = image_entropy(&coherent_sum(&out.stack).unwrap()).unwrap();
    assert!(after < first.unwrap(), "{after} vs {first:?}");
}

fn mean_target_magnitude(img: &mimosar::SarImage, targets: &[Scatterer]) -> f64 {
    let sum: f64 = targets
        .iter()
        .map(|t| {
            let (row, col) = img.grid.nearest_pixel(t.position).unwrap();
            img.get(row, col).norm() as f64
        })
        .sum();
    sum / targets.len() as f64
}

#[test]
fn single_pass_restores_targets_on_short_aperture() {
    // quarter-millisecond PRI: the residual range walk stays far below a resolution cell
    let grid = GroundGrid::new(10.0, 0.05, 241, -6.0, 0.05, 241, 0.0).unwrap();
    let s = Setup::new(2.5e-4, 200, grid);
    let targets = staggered(&grid, 11.0, 2.4, -5.5, 2.2);
    let scene = Scene::new(targets.clone()).with_noise(noise_power_for_snr_db(20.0, 1.0), 5);
    let cube = s.cube(&scene);
    let exact = mean_target_magnitude(&coherent_sum(&s.stack(&cube, &s.traj)).unwrap(), &targets);
    let nav = s.nav(TABLE_DV);
    let stack = s.stack(&cube, &nav);
    let center = s.arr.aperture_center(&nav);
    let rep = autofocus(&stack, center, 0.2, s.radar.wavelength, &AutofocusParams::default()).unwrap();
    assert!((rep.delta_v - TABLE_DV).norm() < 0.5 * TABLE_DV.norm(), "{:?}", rep.delta_v);
    let before = mean_target_magnitude(&coherent_sum(&stack).unwrap(), &targets);
    let screens = phase_screens(&s.grid, rep.delta_v, &stack.tau, center, s.radar.wavelength).unwrap();
    let after = mean_target_magnitude(&coherent_sum(&compensate(&stack, &screens).unwrap()).unwrap(), &targets);
    assert!(after > before, "{after} vs {before}");
    assert!(after > 0.9 * exact, "{after} vs {exact}");
}

#[test]
fn moving_target_is_flagged() {
    // 0.25 ms PRI keeps a 2 m/s radial mover below the Doppler ambiguity
    let grid = GroundGrid::new(10.0, 0.05, 161, -4.0, 0.05, 161, 0.0).unwrap();
    let s = Setup::new(2.5e-4, 200, grid);
    let mut scatterers = lattice(&grid, (11.0, 17.0), (-3.0, 3.0), 3, 3);
    let mover_at = grid.position(40, 120);
    let radial = mover_at * (1.0 / mover_at.norm());
    scatterers.push(Scatterer::moving(mover_at, Complex64::new(3.0, 0.0), radial * 2.0));
    let cube = s.cube(&Scene::new(scatterers));
    let stack = s.stack(&cube, &s.nav(Vec3::new(0.05, 0.0, 0.0)));
    let params = AutofocusParams {
        gcp_count: 25,
        ..AutofocusParams::default()
    };
    let gcps = measure_gcps(&stack, 0.2, s.radar.wavelength, &params).unwrap();
    let at_mover = gcps.iter().find(|g| g.pixel == [40, 120]).expect("mover selected as GCP");
    assert!(at_mover.outlier, "mover omega {}", at_mover.omega);
    // the mover's range ring may yield several GCPs; only those are flagged
    let ring = mover_at.norm();
    assert!(gcps.iter().filter(|g| g.outlier).all(|g| (g.position.norm() - ring).abs() < 0.3));
    assert!(gcps.iter().filter(|g| !g.outlier).count() >= 5);
}
