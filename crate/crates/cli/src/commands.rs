//! Subcommand implementations writing their artifacts to disk.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use mimosar::io;

use crate::config::RunConfig;
use crate::pipeline::{self, Mode, RunReport};
use crate::quicklook;
use crate::report::{self, TableFormat};
use crate::CliError;

pub const IMAGE_FILE: &str = "image.simg";
pub const REPORT_FILE: &str = "report.json";
pub const QUICKLOOK_FILE: &str = "quicklook.pgm";
pub const GCP_FILE: &str = "gcps.csv";
pub const CUBE_FILE: &str = "cube.srcc";

pub fn load_config(path: &Path, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = seed {
        cfg.set_seed(seed);
    }
    Ok(cfg)
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let cube = pipeline::simulate(cfg)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    io::save_cube(out, &cube)?;
    Ok(())
}

/// Focus a cube and write image, report, quick-look and (with MoCo) the GCP table into `out_dir`.
pub fn focus(
    cfg: &RunConfig,
    cube_path: &Path,
    out_dir: &Path,
    mode: Mode,
    dynamic_range_db: Option<f64>,
) -> Result<RunReport, CliError> {
    let cube = io::load_cube(cube_path)?;
    let out = pipeline::focus(cfg, &cube, mode)?;
    fs::create_dir_all(out_dir)?;
    io::save_image(&out_dir.join(IMAGE_FILE), &out.image)?;
    fs::write(out_dir.join(REPORT_FILE), out.report.to_json())?;
    let dr = dynamic_range_db.unwrap_or(cfg.focus.dynamic_range_db);
    if !(dr > 0.0 && dr.is_finite()) {
        return Err(CliError::Config(format!("dynamic range must be positive, got {dr}")));
    }
    let ql = BufWriter::new(fs::File::create(out_dir.join(QUICKLOOK_FILE))?);
    quicklook::write_pgm(ql, &out.image, dr)?;
    if let Some(moco) = out.report.passes.last() {
        moco.write_gcp_csv(fs::File::create(out_dir.join(GCP_FILE))?)?;
    }
    Ok(out.report)
}

/// Simulate into `out_dir/cube.srcc`, then focus from that file.
pub fn run(cfg: &RunConfig, out_dir: &Path, mode: Mode, dynamic_range_db: Option<f64>) -> Result<RunReport, CliError> {
    let cube = out_dir.join(CUBE_FILE);
    simulate(cfg, &cube)?;
    focus(cfg, &cube, out_dir, mode, dynamic_range_db)
}

pub fn report(paths: &[PathBuf], format: TableFormat) -> Result<String, CliError> {
    let reports = report::load_reports(paths)?;
    report::render(&report::rows(&reports)?, format)
}
