//! Side-by-side comparison of run reports.

use serde::Serialize;

use crate::pipeline::RunReport;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TableFormat {
    Csv,
    Markdown,
}

/// One table row. `d_*` columns are differences against the first run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub run: String,
    pub mode: String,
    pub dv_x: Option<f64>,
    pub dv_y: Option<f64>,
    pub acc_x: Option<f64>,
    pub acc_y: Option<f64>,
    pub condition: Option<f64>,
    pub gcps_used: Option<usize>,
    pub passes: usize,
    pub peak: f64,
    pub entropy: f64,
    pub contrast: f64,
    pub width_x: Option<f64>,
    pub width_y: Option<f64>,
    pub loc_error: Option<f64>,
    pub d_dv_x: Option<f64>,
    pub d_dv_y: Option<f64>,
    pub d_peak: f64,
    pub d_entropy: f64,
    pub d_contrast: f64,
}

pub fn rows(reports: &[(String, RunReport)]) -> Result<Vec<Row>, CliError> {
    let first = match reports.first() {
        Some((_, r)) => r,
        None => return Err(CliError::Config("report: no input reports".into())),
    };
    let diff = |a: Option<f64>, b: Option<f64>| a.zip(b).map(|(a, b)| a - b);
    let base_dv = first.applied_dv;
    Ok(reports
        .iter()
        .map(|(name, r)| {
            let m = &r.metrics;
            let moco = r.passes.last();
            Row {
                run: name.clone(),
                mode: serde_json::to_value(r.mode)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_owned))
                    .unwrap_or_default(),
                dv_x: r.applied_dv.map(|v| v.x),
                dv_y: r.applied_dv.map(|v| v.y),
                acc_x: moco.and_then(|m| m.accuracy[0]),
                acc_y: moco.and_then(|m| m.accuracy[1]),
                condition: moco.map(|m| m.condition_number),
                gcps_used: moco.map(|m| m.gcps_used),
                passes: r.passes.len(),
                peak: m.peak_magnitude,
                entropy: m.entropy,
                contrast: m.contrast,
                width_x: m.width_x,
                width_y: m.width_y,
                loc_error: r.mean_localization_error,
                d_dv_x: diff(r.applied_dv.map(|v| v.x), base_dv.map(|v| v.x)),
                d_dv_y: diff(r.applied_dv.map(|v| v.y), base_dv.map(|v| v.y)),
                d_peak: m.peak_magnitude - first.metrics.peak_magnitude,
                d_entropy: m.entropy - first.metrics.entropy,
                d_contrast: m.contrast - first.metrics.contrast,
            }
        })
        .collect())
}

pub fn load_reports(paths: &[std::path::PathBuf]) -> Result<Vec<(String, RunReport)>, CliError> {
    if paths.is_empty() {
        return Err(CliError::Config("report: no input reports".into()));
    }
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            let rep = RunReport::from_json(&text).map_err(|e| match e {
                CliError::Schema(msg) => CliError::Schema(format!("{}: {msg}", p.display())),
                other => other,
            })?;
            Ok((p.display().to_string(), rep))
        })
        .collect()
}

pub fn to_csv(rows: &[Row]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn to_markdown(rows: &[Row]) -> Result<String, CliError> {
    // reuse the CSV serialization for the header and cell text
    let csv_text = to_csv(rows)?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(csv_text.as_bytes());
    let mut out = String::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Io(e.to_string()))?;
        let cells: Vec<&str> = rec.iter().collect();
        out.push_str(&format!("| {} |\n", cells.join(" | ")));
        if i == 0 {
            out.push_str(&format!("|{}\n", "---|".repeat(cells.len())));
        }
    }
    Ok(out)
}

pub fn render(rows: &[Row], format: TableFormat) -> Result<String, CliError> {
    match format {
        TableFormat::Csv => to_csv(rows),
        TableFormat::Markdown => to_markdown(rows),
    }
}
