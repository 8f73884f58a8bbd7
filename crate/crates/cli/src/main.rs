mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use sonoflash_core::analytic::{self, coeff};
use sonoflash_core::engine::{integrate_spectrum, spectrum_sweep, ProfileEcho, SpectrumRow, SpectrumTable};
use sonoflash_core::physpar::{MediumSpec, RunParams, SI};
use sonoflash_core::selftest;

use config::{ConfigError, Loaded, Method, Resolved};
use output::{ClosedForm, RunReport};

#[derive(Parser)]
#[command(name = "sonoflash", version, about = "Photon emission from a collapsing bubble")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML config, or a CSV written by an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; overrides output.path.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Override a config value, e.g. --set engine.rel_tol=1e-7.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Worker threads for the engine (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Spectral density table over the configured band.
    Spectrum,
    /// Total emitted energy.
    Energy,
    /// Velocity and radius diagnostics of the profile.
    ProfileCheck,
    /// Run the built-in invariant suites.
    Selftest,
}

/// A selftest suite failed; exit code 4.
#[derive(Debug)]
struct SelftestFailed(Vec<String>);

impl std::fmt::Display for SelftestFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "selftest failed: {}", self.0.join(", "))
    }
}

impl std::error::Error for SelftestFailed {}

fn exit_code(e: &anyhow::Error) -> u8 {
    use sonoflash_core::Error as E;
    for cause in e.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if cause.is::<SelftestFailed>() {
            return 4;
        }
        if let Some(core) = cause.downcast_ref::<E>() {
            return match core {
                E::Accuracy(_) | E::Truncation { .. } => 3,
                _ => 2,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(ConfigError("--threads must be >= 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("starting the thread pool")?;
    }
    let loaded = Loaded::from_path(cli.config.as_deref(), &cli.set)?;
    let out = cli.output.clone().or_else(|| loaded.config.output.path.clone());
    match cli.command {
        Command::Spectrum => spectrum(&loaded, out),
        Command::Energy => energy(&loaded, out),
        Command::ProfileCheck => profile_check(&loaded, out),
        Command::Selftest => run_selftest(&loaded, out),
    }
}

/// Model parameters with a constant index, which the closed forms need.
fn model_params(r: &Resolved) -> Option<&RunParams> {
    r.params
        .as_ref()
        .filter(|p| matches!(p.medium, MediumSpec::Constant { .. }))
}

fn closed_form(p: &RunParams, c_sw: f64) -> anyhow::Result<ClosedForm> {
    let w = analytic::model_energy(p, c_sw)?;
    // the quoted figure belongs to one parameter set only
    let same = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs();
    let quoted = matches!(p.medium, MediumSpec::Constant { n } if same(n, 1.3))
        && same(p.gamma, 1e-15)
        && same(p.r0, 10e-6)
        && same(p.rmin, 0.5e-6);
    Ok(ClosedForm {
        w,
        sw_coefficient: c_sw,
        quoted_w: quoted.then_some(coeff::QUOTED_MODEL_ENERGY_J),
        quoted_over_closed_form: quoted.then(|| coeff::QUOTED_MODEL_ENERGY_J / w),
    })
}

/// The spectrum table by the configured method.
fn compute_table(r: &Resolved, method: Method) -> anyhow::Result<SpectrumTable> {
    let grid = r.engine.band.resolve(r.profile.gamma_eff())?;
    match method {
        Method::Numeric => Ok(spectrum_sweep(&grid, &r.profile, &r.medium, &r.engine)?),
        Method::Analytic => {
            let Some(p) = model_params(r) else {
                return Err(ConfigError(
                    "engine.method = \"analytic\" needs profile.type = \"lorentzian\" and medium.mode = \"constant\""
                        .into(),
                )
                .into());
            };
            let s = analytic::model_spectrum(p, r.engine.sw_coefficient)?;
            let n = r.medium.max_index();
            let pv: Vec<f64> = grid.iter().map(|&w| s.eval(w)).collect();
            // tails and cumulative column as for engine tables, so the CSV
            // checks are the same for both methods
            let (cum, lower, upper, total) = integrate_spectrum(&grid, &pv);
            let rows = grid
                .iter()
                .zip(pv)
                .zip(cum)
                .map(|((&w, p), c)| SpectrumRow {
                    omega: w,
                    lambda: 2.0 * std::f64::consts::PI * SI.c / w,
                    p,
                    cumulative: c,
                    n,
                    flag: None,
                })
                .collect();
            Ok(SpectrumTable {
                rows,
                total_energy: total,
                lower_tail: lower,
                upper_tail: upper,
                tau_points: 0,
                config: r.engine.clone(),
                profile: ProfileEcho {
                    kind: r.profile.kind(),
                    window: r.profile.window(),
                    center: r.profile.center(),
                    gamma_eff: r.profile.gamma_eff(),
                    beta_max: r.profile.diagnostics().beta_max,
                },
            })
        }
    }
}

fn warnings(loaded: &Loaded, r: &Resolved, table: Option<&SpectrumTable>) -> (f64, Vec<String>) {
    let d = r.profile.diagnostics_with(loaded.config.profile.warn_threshold);
    let mut w = Vec::new();
    if d.superluminal {
        w.push(format!(
            "superluminal wall: beta_max = {:.4} > 1 at t = {:e} s; the first-order treatment does not apply",
            d.beta_max, d.t_at_beta_max
        ));
    } else if d.warning {
        w.push(format!(
            "beta_max = {:.4} exceeds the warn threshold {}",
            d.beta_max, d.warn_threshold
        ));
    }
    if let Some(t) = table {
        for row in t.flagged() {
            w.push(format!(
                "row omega = {:e}: {}",
                row.omega,
                row.flag.as_deref().unwrap_or("")
            ));
        }
    }
    (d.beta_max, w)
}

fn flagged_error(table: &SpectrumTable) -> anyhow::Result<()> {
    let rows: Vec<String> = table.flagged().map(|r| format!("{:e}", r.omega)).collect();
    if rows.is_empty() {
        return Ok(());
    }
    let first = table.flagged().next().and_then(|r| r.flag.clone()).unwrap_or_default();
    Err(sonoflash_core::Error::Accuracy(format!(
        "{} row(s) could not be computed (omega = {}); first: {first}",
        rows.len(),
        rows.join(", ")
    ))
    .into())
}

fn spectrum(loaded: &Loaded, out: Option<PathBuf>) -> anyhow::Result<()> {
    let start = Instant::now();
    let r = loaded.resolve()?;
    let method = loaded.config.engine.method;
    let table = compute_table(&r, method)?;
    let o = &loaded.config.output;
    if !(1..=17).contains(&o.precision_digits) {
        return Err(ConfigError(format!(
            "output.precision_digits = {} must be in 1..=17",
            o.precision_digits
        ))
        .into());
    }
    let csv = output::spectrum_csv(&loaded.echo(), &table, o.emit_wavelength_column, o.precision_digits);
    let (beta_max, warns) = warnings(loaded, &r, Some(&table));
    let report = RunReport {
        command: "spectrum".into(),
        method: format!("{method:?}").to_lowercase(),
        w: table.total_energy,
        photon_estimate: output::photon_estimate(&table),
        beta_max,
        t_eff: r
            .params
            .as_ref()
            .map(|p| analytic::effective_temperature(p.gamma))
            .transpose()?,
        closed_form: model_params(&r)
            .map(|p| closed_form(p, r.engine.sw_coefficient))
            .transpose()?,
        tau_points: (method == Method::Numeric).then_some(table.tau_points),
        flagged_rows: table.flagged().count(),
        warnings: warns,
        seconds: start.elapsed().as_secs_f64(),
    };
    match &out {
        Some(path) => {
            output::write_atomic(path, csv.as_bytes())?;
            output::write_atomic(&output::report_path(path), output::report_json(&report).as_bytes())?;
            eprintln!(
                "wrote {} ({} rows), W = {:e} J",
                path.display(),
                table.rows.len(),
                table.total_energy
            );
        }
        None => print!("{csv}"),
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    flagged_error(&table)
}

fn energy(loaded: &Loaded, out: Option<PathBuf>) -> anyhow::Result<()> {
    let start = Instant::now();
    let r = loaded.resolve()?;
    let method = loaded.config.engine.method;
    let table = compute_table(&r, method)?;
    let (beta_max, warns) = warnings(loaded, &r, Some(&table));
    let report = RunReport {
        command: "energy".into(),
        method: format!("{method:?}").to_lowercase(),
        w: table.total_energy,
        photon_estimate: output::photon_estimate(&table),
        beta_max,
        t_eff: r
            .params
            .as_ref()
            .map(|p| analytic::effective_temperature(p.gamma))
            .transpose()?,
        closed_form: model_params(&r)
            .map(|p| closed_form(p, r.engine.sw_coefficient))
            .transpose()?,
        tau_points: (method == Method::Numeric).then_some(table.tau_points),
        flagged_rows: table.flagged().count(),
        warnings: warns,
        seconds: start.elapsed().as_secs_f64(),
    };
    if report.flagged_rows > 0 {
        println!(
            "W = {:.6e} J ({}; incomplete, {} rows flagged)",
            report.w, report.method, report.flagged_rows
        );
    } else {
        println!("W = {:.6e} J ({})", report.w, report.method);
    }
    if let Some(n) = report.photon_estimate {
        println!("photons ≈ {n:.3e}");
    }
    if let Some(t) = report.t_eff {
        println!("T_eff = {t:.2} K");
    }
    if let Some(c) = &report.closed_form {
        println!("closed form W = {:.6e} J (c_sw = {})", c.w, c.sw_coefficient);
        if let (Some(q), Some(ratio)) = (c.quoted_w, c.quoted_over_closed_form) {
            println!("quoted W = {q:.1e} J, quoted / closed form = {ratio:.1}");
        }
    }
    println!("beta_max = {:.6}", report.beta_max);
    for w in &report.warnings {
        println!("warning: {w}");
    }
    if let Some(path) = &out {
        output::write_atomic(path, output::report_json(&report).as_bytes())?;
    }
    flagged_error(&table)
}

fn profile_check(loaded: &Loaded, out: Option<PathBuf>) -> anyhow::Result<()> {
    let medium = loaded.medium()?;
    let (profile, _) = loaded.profile(&medium)?;
    let d = profile.diagnostics_with(loaded.config.profile.warn_threshold);
    println!("beta_max = {:.6e} at t = {:e} s", d.beta_max, d.t_at_beta_max);
    println!("min_radius = {:.6e} m at t = {:e} s", d.min_radius, d.t_at_min_radius);
    println!("gamma_eff = {:e} s", profile.gamma_eff());
    if d.superluminal {
        println!("warning: superluminal wall velocity (beta_max > 1)");
    } else if d.warning {
        println!("warning: beta_max above the warn threshold {}", d.warn_threshold);
    } else {
        println!("ok: beta_max below the warn threshold {}", d.warn_threshold);
    }
    if let Some(path) = &out {
        let json = serde_json::to_string_pretty(&d)? + "\n";
        output::write_atomic(path, json.as_bytes())?;
    }
    Ok(())
}

fn run_selftest(loaded: &Loaded, out: Option<PathBuf>) -> anyhow::Result<()> {
    let s = &loaded.config.selftest;
    let names: Vec<&str> = s.suites.iter().map(String::as_str).collect();
    let results = selftest::run(&names, &s.tolerances(), loaded.config.engine.sw_coefficient)
        .map_err(|e| ConfigError(e.to_string()))?;
    for r in &results {
        println!(
            "{:<14} {}  {:>7.2}s  {}",
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.seconds,
            r.detail
        );
    }
    if let Some(path) = &out {
        output::write_atomic(path, (serde_json::to_string_pretty(&results)? + "\n").as_bytes())?;
    }
    let failed: Vec<String> = results.iter().filter(|r| !r.passed).map(|r| r.name.clone()).collect();
    if !failed.is_empty() {
        bail!(SelftestFailed(failed));
    }
    Ok(())
}
