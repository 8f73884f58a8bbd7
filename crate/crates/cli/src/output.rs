//! CSV tables, JSON reports and atomic file writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sonoflash_core::engine::SpectrumTable;
use sonoflash_core::physpar::SI;

/// Writes `contents` to a temporary file next to `path` and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating a file in {}", dir.display()))?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// `<path>.report.json`.
pub fn report_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".report.json");
    PathBuf::from(s)
}

fn num(v: f64, digits: usize) -> String {
    format!("{:.*e}", digits.saturating_sub(1), v)
}

/// The spectrum as CSV, preceded by the config echo and a few `#` lines.
pub fn spectrum_csv(echo: &str, table: &SpectrumTable, wavelength: bool, digits: usize) -> String {
    let mut out = String::from(echo);
    out.push_str(&format!("# total_energy_J = {}\n", num(table.total_energy, digits)));
    out.push_str(&format!("# lower_tail_J = {}\n", num(table.lower_tail, digits)));
    out.push_str(&format!("# upper_tail_J = {}\n", num(table.upper_tail, digits)));
    out.push_str(&format!("# tau_points = {}\n", table.tau_points));
    for r in table.flagged() {
        out.push_str(&format!(
            "# flagged omega = {}: {}\n",
            num(r.omega, digits),
            r.flag.as_deref().unwrap_or("")
        ));
    }
    out.push_str(if wavelength {
        "omega_rad_per_s,lambda_m,P_joule_second,cumulative_energy_J\n"
    } else {
        "omega_rad_per_s,P_joule_second,cumulative_energy_J\n"
    });
    for r in &table.rows {
        let mut cols = vec![num(r.omega, digits)];
        if wavelength {
            cols.push(num(r.lambda, digits));
        }
        cols.push(num(r.p, digits));
        cols.push(num(r.cumulative, digits));
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosedForm {
    /// Closed-form model energy with the configured coefficient [J].
    pub w: f64,
    pub sw_coefficient: f64,
    /// Quoted reference energy for these parameters, when there is one [J].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quoted_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quoted_over_closed_form: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub method: String,
    /// Total emitted energy [J].
    #[serde(rename = "W")]
    pub w: f64,
    /// W over the mean photon energy of the computed band.
    pub photon_estimate: Option<f64>,
    pub beta_max: f64,
    /// Model runs only [K].
    #[serde(rename = "T_eff", skip_serializing_if = "Option::is_none")]
    pub t_eff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<ClosedForm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_points: Option<usize>,
    pub flagged_rows: usize,
    pub warnings: Vec<String>,
    pub seconds: f64,
}

/// W / (ħ <ω>) with <ω> the P-weighted mean frequency over the rows.
pub fn photon_estimate(table: &SpectrumTable) -> Option<f64> {
    let rows = &table.rows;
    let (mut e, mut m) = (0.0, 0.0);
    for w in rows.windows(2) {
        let h = w[1].omega - w[0].omega;
        e += 0.5 * h * (w[0].p + w[1].p);
        m += 0.5 * h * (w[0].p / w[0].omega + w[1].p / w[1].omega);
    }
    // photons = ∫ P/(ħω) dω over the band, scaled up to the full W
    (e > 0.0).then(|| table.total_energy * m / (e * SI.hbar))
}

pub fn report_json(report: &RunReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes") + "\n"
}
