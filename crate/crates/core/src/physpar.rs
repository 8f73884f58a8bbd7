//! Physical constants, the host medium and the collapse parameters.
//!
//! Public interfaces are SI. The spectral formulas are evaluated with
//! hbar = c = 1, lengths carried as light-travel times in seconds; the
//! conversion happens once, in `engine` and `analytic`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CODATA 2018 / exact SI values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    /// Reduced Planck constant [J s].
    pub hbar: f64,
    /// Speed of light in vacuum [m/s].
    pub c: f64,
    /// Boltzmann constant [J/K].
    pub k_b: f64,
}

pub const SI: Constants = Constants {
    hbar: 1.054_571_817e-34,
    c: 299_792_458.0,
    k_b: 1.380_649e-23,
};

/// Refractive index of the liquid outside the cavity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MediumSpec {
    Constant {
        n: f64,
    },
    /// Rows of (omega [rad/s], n), strictly increasing in omega.
    Tabulated {
        table: Vec<(f64, f64)>,
    },
}

impl MediumSpec {
    pub fn constant(n: f64) -> Result<Self> {
        let m = MediumSpec::Constant { n };
        m.validate()?;
        Ok(m)
    }

    pub fn tabulated(table: Vec<(f64, f64)>) -> Result<Self> {
        let m = MediumSpec::Tabulated { table };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MediumSpec::Constant { n } => {
                // n = 1 is the no-interface limit; every formula vanishes there
                if !(n.is_finite() && *n >= 1.0) {
                    return Err(Error::InvalidParams(format!("refractive index {n} must be >= 1")));
                }
            }
            MediumSpec::Tabulated { table } => {
                if table.len() < 2 {
                    return Err(Error::InvalidParams("dispersion table needs at least 2 rows".into()));
                }
                for (i, &(w, n)) in table.iter().enumerate() {
                    if !(w.is_finite() && w > 0.0) {
                        return Err(Error::InvalidParams(format!("row {i}: omega {w} must be > 0")));
                    }
                    if !(n.is_finite() && n > 1.0) {
                        return Err(Error::InvalidParams(format!("row {i}: n = {n} must be > 1")));
                    }
                }
                if table.windows(2).any(|p| p[1].0 <= p[0].0) {
                    return Err(Error::InvalidParams(
                        "dispersion table omega values must be strictly increasing".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Parse a whitespace-separated `omega_rad_per_s n` table.
    pub fn from_table_text(text: &str) -> Result<Self> {
        Self::tabulated(parse_two_column(text, "dispersion table")?)
    }

    /// The largest index anywhere in the medium description.
    pub fn max_index(&self) -> f64 {
        match self {
            MediumSpec::Constant { n } => *n,
            MediumSpec::Tabulated { table } => table.iter().map(|r| r.1).fold(f64::MIN, f64::max),
        }
    }
}

/// Refractive index at angular frequency `omega`.
pub fn refractive_index(medium: &MediumSpec, omega: f64) -> Result<f64> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::Domain(format!("omega = {omega} must be > 0")));
    }
    match medium {
        MediumSpec::Constant { n } => Ok(*n),
        MediumSpec::Tabulated { table } => {
            let (lo, hi) = (table[0].0, table[table.len() - 1].0);
            if omega < lo || omega > hi {
                return Err(Error::Range {
                    what: "omega",
                    value: omega,
                    lo,
                    hi,
                });
            }
            let i = table.partition_point(|r| r.0 <= omega);
            if i == table.len() {
                return Ok(table[i - 1].1);
            }
            let (w0, n0) = table[i - 1];
            let (w1, n1) = table[i];
            if omega == w0 {
                return Ok(n0);
            }
            let f = (omega - w0) / (w1 - w0);
            Ok(n0 + f * (n1 - n0))
        }
    }
}

/// Normal-incidence reflection probability (n-1)^2/(n+1)^2.
pub fn reflection_probability(n: f64) -> Result<f64> {
    if !(n.is_finite() && n >= 1.0) {
        return Err(Error::Domain(format!("refractive index {n} must be >= 1")));
    }
    let r = (n - 1.0) / (n + 1.0);
    Ok(r * r)
}

/// Parameters of the Lorentzian-dip collapse model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    pub medium: MediumSpec,
    /// Ambient radius [m].
    pub r0: f64,
    /// Minimum radius [m].
    pub rmin: f64,
    /// Turn-around time [s].
    pub gamma: f64,
    /// Acoustic period, the integration window length [s].
    pub period: f64,
    /// Time of minimum radius within the window [s].
    pub center: f64,
}

impl RunParams {
    pub fn new(medium: MediumSpec, r0: f64, rmin: f64, gamma: f64, period: f64, center: f64) -> Result<Self> {
        let p = RunParams {
            medium,
            r0,
            rmin,
            gamma,
            period,
            center,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.medium.validate()?;
        let finite = [self.r0, self.rmin, self.gamma, self.period, self.center]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("non-finite run parameter".into()));
        }
        if !(0.0 < self.rmin && self.rmin <= self.r0) {
            return Err(Error::InvalidParams(format!(
                "need 0 < Rmin <= R0, got Rmin = {:e}, R0 = {:e}",
                self.rmin, self.r0
            )));
        }
        if self.gamma <= 0.0 {
            return Err(Error::InvalidParams(format!("gamma = {:e} must be > 0", self.gamma)));
        }
        if self.period <= 0.0 {
            return Err(Error::InvalidParams(format!("period = {:e} must be > 0", self.period)));
        }
        if !(0.0 <= self.center && self.center <= self.period) {
            return Err(Error::InvalidParams(format!(
                "center = {:e} must lie in [0, period = {:e}]",
                self.center, self.period
            )));
        }
        Ok(())
    }

    /// R0^2 - Rmin^2 [m^2].
    pub fn depth(&self) -> f64 {
        (self.r0 - self.rmin) * (self.r0 + self.rmin)
    }
}

/// Parse two whitespace-separated decimal columns; `#` starts a comment.
pub fn parse_two_column(text: &str, what: &str) -> Result<Vec<(f64, f64)>> {
    let mut rows = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 2 {
            return Err(Error::InvalidParams(format!(
                "{what}, line {}: expected 2 columns, found {}",
                lineno + 1,
                cols.len()
            )));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::InvalidParams(format!("{what}, line {}: '{s}': {e}", lineno + 1)))
        };
        rows.push((parse(cols[0])?, parse(cols[1])?));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> MediumSpec {
        MediumSpec::tabulated(vec![(1e15, 1.30), (2e15, 1.40)]).unwrap()
    }

    #[test]
    fn constant_medium_ignores_frequency() {
        let m = MediumSpec::constant(1.3).unwrap();
        for w in [1.0, 1e12, 7.7e15] {
            assert_eq!(refractive_index(&m, w).unwrap(), 1.3);
        }
    }

    #[test]
    fn tabulated_midpoint_interpolates_linearly() {
        let n = refractive_index(&table(), 1.5e15).unwrap();
        assert!((n - 1.35).abs() < 1e-15);
    }

    #[test]
    fn tabulated_reproduces_nodes() {
        let m = MediumSpec::tabulated(vec![(1e15, 1.30), (1.7e15, 1.333), (2e15, 1.40)]).unwrap();
        assert_eq!(refractive_index(&m, 1e15).unwrap(), 1.30);
        assert_eq!(refractive_index(&m, 1.7e15).unwrap(), 1.333);
        assert_eq!(refractive_index(&m, 2e15).unwrap(), 1.40);
    }

    #[test]
    fn tabulated_out_of_range_names_interval() {
        let err = refractive_index(&table(), 3e15).unwrap_err();
        match &err {
            Error::Range { lo, hi, .. } => {
                assert_eq!((*lo, *hi), (1e15, 2e15));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("2e15"));
    }

    #[test]
    fn table_validation() {
        assert!(MediumSpec::tabulated(vec![(1e15, 1.3)]).is_err());
        assert!(MediumSpec::tabulated(vec![(2e15, 1.3), (1e15, 1.4)]).is_err());
        assert!(MediumSpec::tabulated(vec![(1e15, 0.9), (2e15, 1.4)]).is_err());
        assert!(MediumSpec::constant(0.5).is_err());
    }

    #[test]
    fn reflection_probability_values() {
        assert_eq!(reflection_probability(1.0).unwrap(), 0.0);
        assert!((reflection_probability(3.0).unwrap() - 0.25).abs() < 1e-16);
        let water = reflection_probability(1.3).unwrap();
        assert!((water - 0.09 / 5.29).abs() < 1e-16);
        assert!(water < 0.02 && water > 0.0170 && water < 0.0171);
        assert!(reflection_probability(0.99).is_err());
    }

    #[test]
    fn reflection_probability_is_monotone() {
        let mut prev = -1.0;
        for i in 0..2000 {
            let n = 1.0 + i as f64 * 0.005;
            let r = reflection_probability(n).unwrap();
            assert!(r > prev && r < 1.0);
            prev = r;
        }
    }

    #[test]
    fn parses_dispersion_file() {
        let text = "# water\n1e15 1.30  # visible\n\n2e15\t1.40\n";
        let m = MediumSpec::from_table_text(text).unwrap();
        assert_eq!(m, table());
        assert!(MediumSpec::from_table_text("1e15 1.3 7\n").is_err());
        assert!(MediumSpec::from_table_text("1e15 abc\n2e15 1.4").is_err());
    }

    #[test]
    fn run_params_invariants() {
        let m = MediumSpec::constant(1.3).unwrap();
        assert!(RunParams::new(m.clone(), 10e-6, 0.5e-6, 1e-15, 4e-5, 2e-5).is_ok());
        assert!(RunParams::new(m.clone(), 1e-6, 2e-6, 1e-15, 4e-5, 2e-5).is_err());
        assert!(RunParams::new(m.clone(), 10e-6, 0.5e-6, 0.0, 4e-5, 2e-5).is_err());
        assert!(RunParams::new(m, 10e-6, 0.5e-6, 1e-15, 4e-5, 5e-5).is_err());
    }
}
