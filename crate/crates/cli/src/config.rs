//! Run configuration: TOML sections, `--set` overrides and the echo that is
//! embedded in every output.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sonoflash_core::engine::{Band, EngineConfig};
use sonoflash_core::modes::TruncationPolicy;
use sonoflash_core::physpar::{parse_two_column, MediumSpec, RunParams};
use sonoflash_core::profile::{make_lorentzian, make_tabulated, BubbleProfile, DEFAULT_WARN_THRESHOLD};
use sonoflash_core::selftest::Tolerances;

/// Prefix of the config echo lines in emitted files.
pub const ECHO_PREFIX: &str = "# | ";

/// Bad input, reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediumMode {
    #[default]
    Constant,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediumSection {
    pub mode: MediumMode,
    pub n: f64,
    /// Two columns: omega [rad/s], n.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dispersion_file: Option<PathBuf>,
}

impl Default for MediumSection {
    fn default() -> Self {
        MediumSection {
            mode: MediumMode::Constant,
            n: 1.33,
            dispersion_file: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileType {
    #[default]
    Lorentzian,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSection {
    #[serde(rename = "type")]
    pub kind: ProfileType,
    #[serde(rename = "R0_m", skip_serializing_if = "Option::is_none")]
    pub r0_m: Option<f64>,
    #[serde(rename = "Rmin_m", skip_serializing_if = "Option::is_none")]
    pub rmin_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period_s: Option<f64>,
    /// Defaults to half the period.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center_s: Option<f64>,
    /// Two columns: t [s], R [m].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile_file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_start_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_end_s: Option<f64>,
    pub warn_threshold: f64,
}

impl Default for ProfileSection {
    fn default() -> Self {
        ProfileSection {
            kind: ProfileType::Lorentzian,
            r0_m: None,
            rmin_m: None,
            gamma_s: None,
            period_s: None,
            center_s: None,
            profile_file: None,
            window_start_s: None,
            window_end_s: None,
            warn_threshold: DEFAULT_WARN_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// The spectrum engine.
    #[default]
    Numeric,
    /// Closed forms of the Lorentzian model.
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineSection {
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_points: Option<usize>,
    pub tau_span: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_prime_max: Option<f64>,
    pub omega_prime_points: usize,
    pub lmax_cap: usize,
    /// Sum exactly l = 1..=lmax_fixed instead of truncating adaptively.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lmax_fixed: Option<usize>,
    pub rel_tol: f64,
    pub sw_fast_path: bool,
    pub sw_coefficient: f64,
}

impl Default for EngineSection {
    fn default() -> Self {
        let e = EngineConfig::default();
        EngineSection {
            method: Method::Numeric,
            tau_points: e.tau_points,
            tau_span: e.tau_span,
            omega_prime_max: e.omega_prime_max,
            omega_prime_points: e.omega_prime_points,
            lmax_cap: e.l_policy.cap,
            lmax_fixed: None,
            rel_tol: e.rel_tol,
            sw_fast_path: e.sw_fast_path,
            sw_coefficient: e.sw_coefficient,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub emit_wavelength_column: bool,
    pub precision_digits: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            path: None,
            emit_wavelength_column: true,
            precision_digits: 17,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelftestSection {
    /// Empty runs every suite.
    pub suites: Vec<String>,
    pub wronskian_tol: f64,
    pub born_tol: f64,
    pub coefficient_tol: f64,
    pub coefficient_point_tol: f64,
    pub energy_tol: f64,
    pub factorization_tol: f64,
}

impl Default for SelftestSection {
    fn default() -> Self {
        let t = Tolerances::default();
        SelftestSection {
            suites: Vec::new(),
            wronskian_tol: t.wronskian_tol,
            born_tol: t.born_tol,
            coefficient_tol: t.coefficient_tol,
            coefficient_point_tol: t.coefficient_point_tol,
            energy_tol: t.energy_tol,
            factorization_tol: t.factorization_tol,
        }
    }
}

impl SelftestSection {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            wronskian_tol: self.wronskian_tol,
            born_tol: self.born_tol,
            coefficient_tol: self.coefficient_tol,
            coefficient_point_tol: self.coefficient_point_tol,
            energy_tol: self.energy_tol,
            factorization_tol: self.factorization_tol,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub medium: MediumSection,
    pub profile: ProfileSection,
    pub engine: EngineSection,
    pub band: Band,
    pub output: OutputSection,
    pub selftest: SelftestSection,
}

/// A config together with the text it came from, for line-anchored errors.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    source: String,
    origin: String,
}

/// The physics objects a run needs.
#[derive(Debug)]
pub struct Resolved {
    pub medium: MediumSpec,
    pub profile: BubbleProfile,
    pub params: Option<RunParams>,
    pub engine: EngineConfig,
}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// The echo lines of an emitted file, if it has any, as plain TOML.
fn strip_echo(text: &str) -> Option<String> {
    let lines: Vec<&str> = text
        .lines()
        .filter_map(|l| {
            l.strip_prefix(ECHO_PREFIX)
                .or_else(|| (l == ECHO_PREFIX.trim_end()).then_some(""))
        })
        .collect();
    (!lines.is_empty()).then(|| lines.join("\n") + "\n")
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn override_value(value: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()))
}

impl Loaded {
    /// Reads a config file, or the config echo of a previously written CSV,
    /// and applies `section.key=value` overrides.
    pub fn from_path(path: Option<&Path>, overrides: &[String]) -> anyhow::Result<Self> {
        let (text, origin, base) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| config_err(format!("cannot read config {}: {e}", p.display())))?;
                let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (text, p.display().to_string(), base)
            }
            None => (String::new(), "<defaults>".to_string(), PathBuf::new()),
        };
        Self::from_text(&text, &origin, &base, overrides)
    }

    pub fn from_text(text: &str, origin: &str, base: &Path, overrides: &[String]) -> anyhow::Result<Self> {
        let source = strip_echo(text).unwrap_or_else(|| text.to_string());
        let mut table: toml::Table = toml::from_str(&source).map_err(|e| config_err(format!("{origin}: {e}")))?;
        for o in overrides {
            let (key, value) = o
                .split_once('=')
                .ok_or_else(|| config_err(format!("--set {o:?}: expected section.key=value")))?;
            let (section, field) = key
                .trim()
                .split_once('.')
                .ok_or_else(|| config_err(format!("--set {o:?}: key must be section.key")))?;
            let entry = table
                .entry(section.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            let toml::Value::Table(t) = entry else {
                return Err(config_err(format!("--set {o:?}: {section} is not a section")));
            };
            t.insert(field.to_string(), override_value(value.trim()));
        }
        let mut config: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| config_err(format!("{origin}: {}", e.message().trim())))?;
        // file paths are relative to the config file
        for p in [&mut config.medium.dispersion_file, &mut config.profile.profile_file]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(Loaded {
            config,
            source,
            origin: origin.to_string(),
        })
    }

    /// "file:line: section.key: message" when the key appears in the file.
    fn anchored(&self, section: &str, key: &str, msg: impl fmt::Display) -> anyhow::Error {
        // the key's own line, else its section header
        let mut current = String::new();
        let mut header = None;
        for (i, line) in self.source.lines().enumerate() {
            let l = line.trim();
            if let Some(s) = l.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                current = s.trim().to_string();
                if current == section && header.is_none() {
                    header = Some(i + 1);
                }
            } else if current == section && l.split('=').next().map(str::trim) == Some(key) {
                return config_err(format!("{}:{}: {section}.{key}: {msg}", self.origin, i + 1));
            }
        }
        match header {
            Some(line) => config_err(format!("{}:{line}: {section}.{key}: {msg}", self.origin)),
            None => config_err(format!("{}: {section}.{key}: {msg}", self.origin)),
        }
    }

    pub fn medium(&self) -> anyhow::Result<MediumSpec> {
        let m = &self.config.medium;
        match m.mode {
            MediumMode::Constant => MediumSpec::constant(m.n).map_err(|e| self.anchored("medium", "n", e)),
            MediumMode::Table => {
                let path = m
                    .dispersion_file
                    .as_ref()
                    .ok_or_else(|| self.anchored("medium", "dispersion_file", "required for mode = \"table\""))?;
                let text = std::fs::read_to_string(path)
                    .map_err(|e| self.anchored("medium", "dispersion_file", format!("{}: {e}", path.display())))?;
                MediumSpec::from_table_text(&text)
                    .map_err(|e| self.anchored("medium", "dispersion_file", format!("{}: {e}", path.display())))
            }
        }
    }

    fn require(&self, key: &str, v: Option<f64>) -> anyhow::Result<f64> {
        v.ok_or_else(|| self.anchored("profile", key, "required for type = \"lorentzian\""))
    }

    /// The profile, plus the model parameters for the Lorentzian kind.
    pub fn profile(&self, medium: &MediumSpec) -> anyhow::Result<(BubbleProfile, Option<RunParams>)> {
        let p = &self.config.profile;
        match p.kind {
            ProfileType::Lorentzian => {
                let r0 = self.require("R0_m", p.r0_m)?;
                let rmin = self.require("Rmin_m", p.rmin_m)?;
                let gamma = self.require("gamma_s", p.gamma_s)?;
                let period = self.require("period_s", p.period_s)?;
                let center = p.center_s.unwrap_or(period / 2.0);
                let params = RunParams::new(medium.clone(), r0, rmin, gamma, period, center)
                    .map_err(|e| self.anchored("profile", "type", e))?;
                let prof = make_lorentzian(&params).map_err(|e| self.anchored("profile", "type", e))?;
                Ok((prof, Some(params)))
            }
            ProfileType::Table => {
                let path = p
                    .profile_file
                    .as_ref()
                    .ok_or_else(|| self.anchored("profile", "profile_file", "required for type = \"table\""))?;
                let text = std::fs::read_to_string(path)
                    .map_err(|e| self.anchored("profile", "profile_file", format!("{}: {e}", path.display())))?;
                let samples = parse_two_column(&text, "profile table")
                    .map_err(|e| self.anchored("profile", "profile_file", format!("{}: {e}", path.display())))?;
                let window = match (p.window_start_s, p.window_end_s) {
                    (None, None) => None,
                    (Some(a), Some(b)) => Some((a, b)),
                    _ => {
                        return Err(self.anchored(
                            "profile",
                            "window_start_s",
                            "window_start_s and window_end_s go together",
                        ))
                    }
                };
                let prof = make_tabulated(&samples, window)
                    .map_err(|e| self.anchored("profile", "profile_file", format!("{}: {e}", path.display())))?;
                Ok((prof, None))
            }
        }
    }

    pub fn engine(&self) -> anyhow::Result<EngineConfig> {
        let e = &self.config.engine;
        let mut policy = match e.lmax_fixed {
            Some(l) => TruncationPolicy::fixed(l),
            None => TruncationPolicy::default(),
        };
        policy.cap = e.lmax_cap.max(e.lmax_fixed.unwrap_or(0));
        let cfg = EngineConfig {
            tau_points: e.tau_points,
            tau_span: e.tau_span,
            omega_prime_max: e.omega_prime_max,
            omega_prime_points: e.omega_prime_points,
            l_policy: policy,
            rel_tol: e.rel_tol,
            sw_fast_path: e.sw_fast_path,
            sw_coefficient: e.sw_coefficient,
            band: self.config.band,
        };
        if let Err(err) = cfg.validate() {
            // anchor on the first config key the message names
            let msg = err.to_string();
            let keys = [
                ("engine", "tau_points"),
                ("engine", "tau_span"),
                ("engine", "omega_prime_max"),
                ("engine", "omega_prime_points"),
                ("engine", "rel_tol"),
                ("engine", "sw_coefficient"),
                ("engine", "lmax_cap"),
                ("engine", "lmax_fixed"),
                ("band", "points"),
                ("band", "omega_min"),
                ("band", "omega_max"),
            ];
            let (section, key) = keys
                .iter()
                .filter_map(|&(s, k)| msg.find(k).map(|at| (at, s, k)))
                .min()
                .map(|(_, s, k)| (s, k))
                .unwrap_or(("engine", "method"));
            return Err(self.anchored(section, key, &msg));
        }
        Ok(cfg)
    }

    pub fn resolve(&self) -> anyhow::Result<Resolved> {
        let medium = self.medium()?;
        let (profile, params) = self.profile(&medium)?;
        let engine = self.engine()?;
        Ok(Resolved {
            medium,
            profile,
            params,
            engine,
        })
    }

    /// The fully resolved config as `# | `-prefixed TOML lines.
    pub fn echo(&self) -> String {
        let mut c = self.config.clone();
        for p in [&mut c.medium.dispersion_file, &mut c.profile.profile_file]
            .into_iter()
            .flatten()
        {
            if let Ok(abs) = std::path::absolute(&*p) {
                *p = abs;
            }
        }
        // the output location is not part of the physics
        c.output.path = None;
        let text = toml::to_string(&c).expect("config serializes");
        text.lines().map(|l| format!("{ECHO_PREFIX}{l}\n")).collect()
    }
}
