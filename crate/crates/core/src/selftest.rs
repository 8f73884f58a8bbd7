//! Built-in invariant suites, run by `sonoflash selftest`.

use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analytic::{self, FourierPath};
use crate::engine::{Kernel, Prepared, TauGrid};
use crate::error::{Error, Result};
use crate::modes::{aux_im, normalization, Polarization, TruncationPolicy};
use crate::physpar::{MediumSpec, RunParams, SI};
use crate::profile::make_lorentzian;
use crate::quad::Rule;
use crate::specfun::{wronskian_residual, BesselSeries};

/// Pass thresholds. The defaults are the release gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Largest |x^2 W - 1| over the Wronskian grid.
    pub wronskian_tol: f64,
    /// Largest |S^-1 - 1| at n = 1.
    pub born_tol: f64,
    /// Relative band for the mean of ℑ/(kk'R^2) around the configured
    /// short-wavelength coefficient.
    pub coefficient_tol: f64,
    /// Relative band for each single point of that mean.
    pub coefficient_point_tol: f64,
    /// Closed form against its Ω quadrature.
    pub energy_tol: f64,
    /// Factorized kernel against the double time integral.
    pub factorization_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            wronskian_tol: 1e-8,
            born_tol: 1e-10,
            coefficient_tol: 0.10,
            coefficient_point_tol: 0.15,
            energy_tol: 1e-6,
            factorization_tol: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("wronskian_tol", self.wronskian_tol),
            ("born_tol", self.born_tol),
            ("coefficient_tol", self.coefficient_tol),
            ("coefficient_point_tol", self.coefficient_point_tol),
            ("energy_tol", self.energy_tol),
            ("factorization_tol", self.factorization_tol),
        ];
        for (name, v) in all {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("selftest.{name} = {v} must be > 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    /// Worst observed value against its threshold, human readable.
    pub detail: String,
    pub seconds: f64,
}

pub const SUITES: [&str; 6] = [
    "wronskian",
    "born",
    "coefficient",
    "energy",
    "temperature",
    "factorization",
];

/// Runs the named suites (all of them for an empty list), in order.
pub fn run(names: &[&str], tol: &Tolerances, sw_coefficient: f64) -> Result<Vec<SuiteResult>> {
    tol.validate()?;
    let names: Vec<&str> = if names.is_empty() {
        SUITES.to_vec()
    } else {
        names.to_vec()
    };
    let mut out = Vec::with_capacity(names.len());
    for name in names {
        let start = Instant::now();
        let outcome = match name {
            "wronskian" => wronskian(tol),
            "born" => born(tol),
            "coefficient" => coefficient(tol, sw_coefficient),
            "energy" => energy(tol),
            "temperature" => temperature(),
            "factorization" => factorization(tol),
            other => {
                return Err(Error::InvalidParams(format!(
                    "unknown selftest suite {other:?}; known: {}",
                    SUITES.join(", ")
                )))
            }
        };
        let (passed, detail) = match outcome {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        out.push(SuiteResult {
            name: name.to_string(),
            passed,
            detail,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(out)
}

type Outcome = Result<(bool, String)>;

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
}

/// l = 0..200 on 60 log-spaced x in [1e-2, 1e3].
pub fn wronskian(tol: &Tolerances) -> Outcome {
    let mut worst = (0.0f64, 0usize, 0.0f64);
    for x in log_grid(1e-2, 1e3, 60) {
        let j = BesselSeries::regular(200, x)?;
        let y = BesselSeries::irregular(200, x)?;
        for l in 0..=200 {
            let r = wronskian_residual(&j, &y, l).abs();
            if !(r <= worst.0) {
                worst = (r, l, x);
            }
        }
    }
    Ok((
        worst.0 <= tol.wronskian_tol,
        format!(
            "max |x^2 W - 1| = {:.2e} at l = {}, x = {:.3e} (tol {:.0e})",
            worst.0, worst.1, worst.2, tol.wronskian_tol
        ),
    ))
}

/// S^-1 = 1 at n = 1 and a deviation linear in n - 1.
pub fn born(tol: &Tolerances) -> Outcome {
    let mut worst = 0.0f64;
    for l in 1..=50 {
        for x in log_grid(0.5, 100.0, 21) {
            for pol in Polarization::BOTH {
                let s = normalization(l, pol, 1.0, x)?.s_inv;
                let d = (s - 1.0).norm();
                if !(d <= worst) {
                    worst = d;
                }
            }
        }
    }
    let mut ratio_err = 0.0f64;
    for &(l, x) in &[(1usize, 0.5), (5, 3.0), (20, 30.0), (50, 100.0)] {
        for pol in Polarization::BOTH {
            let d1 = (normalization(l, pol, 1.0 + 1e-4, x)?.s_inv - 1.0).norm();
            let d2 = (normalization(l, pol, 1.0 + 5e-5, x)?.s_inv - 1.0).norm();
            let e = (d1 / d2 - 2.0).abs();
            if !(e <= ratio_err) {
                ratio_err = e;
            }
        }
    }
    Ok((
        worst <= tol.born_tol && ratio_err <= 0.1,
        format!(
            "max |S^-1 - 1| = {worst:.2e} (tol {:.0e}); halving n - 1 halves the deviation to within {ratio_err:.3} (tol 0.1)",
            tol.born_tol
        ),
    ))
}

/// kR values of the coefficient check.
pub const COEFFICIENT_POINTS: [f64; 5] = [40.0, 50.0, 60.0, 70.0, 80.0];
/// Index used for the coefficient check, close to the Born limit.
pub const COEFFICIENT_INDEX: f64 = 1.0 + 1e-4;

/// ℑ/(kk'R^2) at k = k', R_a = R_b, n = 1 + 1e-4 for each `COEFFICIENT_POINTS`.
pub fn coefficient_samples() -> Result<Vec<f64>> {
    let policy = TruncationPolicy::default();
    COEFFICIENT_POINTS
        .iter()
        .map(|&kr| Ok(aux_im(kr, kr, 1.0, 1.0, COEFFICIENT_INDEX, &policy)?.re / (kr * kr)))
        .collect()
}

pub fn coefficient(tol: &Tolerances, configured: f64) -> Outcome {
    let v = coefficient_samples()?;
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let mean_ok = (mean / configured - 1.0).abs() <= tol.coefficient_tol;
    let points_ok = v
        .iter()
        .all(|x| (x / configured - 1.0).abs() <= tol.coefficient_point_tol);
    let pts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    Ok((
        mean_ok && points_ok,
        format!(
            "mean ℑ/(kk'R^2) = {mean:.5} vs configured {configured} (±{:.0}%); points [{}] (±{:.0}%)",
            100.0 * tol.coefficient_tol,
            pts.join(", "),
            100.0 * tol.coefficient_point_tol
        ),
    ))
}

/// Closed-form energy against its Ω quadrature, the spectrum integral and
/// the time-domain form.
pub fn energy(tol: &Tolerances) -> Outcome {
    let c = analytic::coeff::SW_QUOTED;
    let mut worst_q = 0.0f64;
    let mut worst_s = 0.0f64;
    let mut worst_d = 0.0f64;
    for &(n, r0, rmin, g) in &[
        (1.3, 10e-6, 0.5e-6, 1e-15),
        (1.33, 20e-6, 8e-6, 50e-15),
        (1.5, 3e-6, 1e-6, 7e-15),
    ] {
        let p = RunParams::new(MediumSpec::Constant { n }, r0, rmin, g, 1000.0 * g, 500.0 * g)?;
        let prof = make_lorentzian(&p)?;
        let w = analytic::model_energy(&p, c)?;
        let q = analytic::energy_sw_quadrature(&prof, n, c, FourierPath::Analytic)?;
        let s = analytic::model_spectrum(&p, c)?;
        let num = Rule::composite(0.0, 40.0 / g, 40, 8).integrate(|om| s.eval(om));
        let d = analytic::energy_derivative_form(&prof, n, c)?;
        worst_q = worst_q.max((q / w - 1.0).abs());
        worst_s = worst_s.max((num / w - 1.0).abs());
        worst_d = worst_d.max((d / q - 1.0).abs());
    }
    Ok((
        worst_q <= tol.energy_tol && worst_s <= 1e-9 && worst_d <= 1e-4,
        format!(
            "Ω quadrature {worst_q:.1e} (tol {:.0e}), ∫P dω {worst_s:.1e} (tol 1e-9), time-domain form {worst_d:.1e} (tol 1e-4)",
            tol.energy_tol
        ),
    ))
}

pub fn temperature() -> Outcome {
    let t = analytic::effective_temperature(1e-15)?;
    let want = SI.hbar / (2.0 * SI.k_b * 1e-15);
    let rough = (t / 4000.0 - 1.0).abs();
    Ok((
        (t - want).abs() <= 1e-9 * want && rough <= 0.1,
        format!("T_eff(1 fs) = {t:.2} K, {:.1}% from 4000 K", 100.0 * rough),
    ))
}

/// Factorized kernel against the direct double time integral on a toy
/// instance with l <= 3, 48 time nodes and 8 ω' nodes.
pub fn factorization(tol: &Tolerances) -> Outcome {
    let (n, gamma) = (1.3, 1e-15);
    let p = RunParams::new(
        MediumSpec::Constant { n },
        1.2e-7,
        0.6e-7,
        gamma,
        40.0 * gamma,
        20.0 * gamma,
    )?;
    let prof = make_lorentzian(&p)?;
    let c = p.center;
    let grid = TauGrid::tapered(c - 6.0 * gamma, c + 6.0 * gamma, c, 48, true, true)?;
    let policy = TruncationPolicy::fixed(3);
    let rule = Rule::composite(0.0, 6.0 / gamma, 1, 8);
    let prep = Prepared::from_parts(&prof, grid.clone(), rule.clone(), Kernel::ModeSum { policy }, 1e-6);
    let states: Vec<(f64, f64, f64)> = grid
        .nodes()
        .iter()
        .zip(grid.weights())
        .map(|(&t, &w)| {
            let (r, b) = prof.radius_and_beta(t);
            (t, w * b, r / SI.c)
        })
        .collect();
    let mut worst = 0.0f64;
    for (i, &w) in rule.nodes.iter().enumerate().step_by(3) {
        let wp = rule.nodes[(i + 5) % rule.nodes.len()];
        let fact = prep.kernel(w, wp, n)?;
        let mut direct = Complex64::new(0.0, 0.0);
        for &(ta, ca, ra) in &states {
            for &(tb, cb, rb) in &states {
                let im = aux_im(w, wp, ra, rb, n, &policy)?;
                direct += ca * cb * Complex64::from_polar(1.0, (w + wp) * (ta - tb)) * im;
            }
        }
        worst = worst.max((fact / direct.re - 1.0).abs());
    }
    Ok((
        worst <= tol.factorization_tol,
        format!("max relative gap {worst:.1e} (tol {:.0e})", tol.factorization_tol),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::SW_COEFFICIENT_REDERIVED;

    #[test]
    fn fast_suites_pass_with_defaults() {
        let r = run(
            &["born", "energy", "temperature", "factorization"],
            &Tolerances::default(),
            1.44485,
        )
        .unwrap();
        for s in &r {
            assert!(s.passed, "{}: {}", s.name, s.detail);
        }
    }

    #[test]
    fn gates_are_sensitive() {
        let tight = Tolerances {
            wronskian_tol: 1e-16,
            ..Default::default()
        };
        assert!(!wronskian(&tight).unwrap().0);
        assert!(!coefficient(&Tolerances::default(), 1.3).unwrap().0);
        assert!(coefficient(&Tolerances::default(), SW_COEFFICIENT_REDERIVED).unwrap().0);
    }

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(run(&["nope"], &Tolerances::default(), 1.0).is_err());
    }
}
