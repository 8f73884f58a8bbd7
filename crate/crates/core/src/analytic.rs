//! Short-wavelength closed forms.
//!
//! With ℑ ≈ c_sw kk'RR' the ω, ω' integrals collapse onto Ω = ω + ω':
//!
//! ```text
//! W = c_sw (n^2-1)^2 / (960 π^2 n^2) ħ/c^4 ∫_0^∞ dΩ Ω^4 |G(Ω)|^2,  G = ∫ dt (dR^2/dt) e^{iΩt}
//!   = c_sw (n^2-1)^2 / (480 π n^2)   ħ/c^3 ∫ dt (d^5R^2/dt^5) R β
//! ```
//!
//! For the Lorentzian dip |G|^2 = Ω^2 ΔR^4 π^2 γ^2 e^{-2γΩ}, which gives
//!
//! ```text
//! W    = c_sw 3 (n^2-1)^2 / (512 n^2) ħ / (c^4 γ^5) ΔR^4
//! P(ω) = c_sw (n^2-1)^2 / (64 n^2)    ħ / (c^4 γ)   ΔR^4 ω^3 e^{-2γω}
//! ```
//!
//! with ΔR^2 = R0^2 - Rmin^2. Every closed form takes the short-wavelength
//! coefficient explicitly so that it matches the engine it is compared to.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::dip_grid;
use crate::error::{Error, Result};
use crate::physpar::{MediumSpec, RunParams, SI};
use crate::profile::{BubbleProfile, ProfileKind};
use crate::quad::Rule;
use crate::sum::NeumaierSum;

/// Numerical coefficients of the closed forms, in one place.
pub mod coeff {
    /// ℑ ≈ c_sw kk'RR', as originally quoted.
    pub use crate::modes::SW_COEFFICIENT_QUOTED as SW_QUOTED;
    /// The re-derived value used by default.
    pub use crate::modes::SW_COEFFICIENT_REDERIVED as SW_REDERIVED;
    /// Total energy of the Lorentzian model.
    pub const MODEL_ENERGY: f64 = 3.0 / 512.0;
    /// Spectral density of the Lorentzian model.
    pub const MODEL_SPECTRUM: f64 = 1.0 / 64.0;
    /// Time-domain (fifth-derivative) form of the energy.
    pub const DERIVATIVE_FORM: f64 = 1.0 / (480.0 * std::f64::consts::PI);
    /// Frequency-domain form of the energy.
    pub const FOURIER_FORM: f64 = 1.0 / (960.0 * std::f64::consts::PI * std::f64::consts::PI);
    /// Energy quoted for n = 1.3, γ = 1 fs, R0 = 10 μm, Rmin = 0.5 μm [J].
    pub const QUOTED_MODEL_ENERGY_J: f64 = 1.8e-13;
}

fn contrast(n: f64) -> Result<f64> {
    if !(n.is_finite() && n >= 1.0) {
        return Err(Error::Domain(format!("refractive index n = {n} must be >= 1")));
    }
    let m = (n - 1.0) * (n + 1.0);
    Ok(m * m / (n * n))
}

fn constant_index(medium: &MediumSpec) -> Result<f64> {
    match medium {
        MediumSpec::Constant { n } => Ok(*n),
        MediumSpec::Tabulated { .. } => Err(Error::Domain("closed forms need a constant refractive index".into())),
    }
}

/// W of the Lorentzian model [J].
pub fn model_energy(params: &RunParams, sw_coefficient: f64) -> Result<f64> {
    params.validate()?;
    let n = constant_index(&params.medium)?;
    let d = params.depth();
    Ok(sw_coefficient * coeff::MODEL_ENERGY * contrast(n)? * SI.hbar / (SI.c.powi(4) * params.gamma.powi(5)) * d * d)
}

/// P(ω) = amplitude ω^3 e^{-2γω} of the Lorentzian model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpectrum {
    /// [J s^4]
    pub amplitude: f64,
    pub gamma: f64,
}

impl ModelSpectrum {
    /// P(ω) [J s].
    pub fn eval(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        self.amplitude * omega.powi(3) * (-2.0 * self.gamma * omega).exp()
    }

    /// Frequency of the maximum, 3/(2γ).
    pub fn peak(&self) -> f64 {
        1.5 / self.gamma
    }

    /// Exact ∫_0^∞ P dω = amplitude 6/(2γ)^4.
    pub fn integral(&self) -> f64 {
        self.amplitude * 6.0 / (2.0 * self.gamma).powi(4)
    }
}

pub fn model_spectrum(params: &RunParams, sw_coefficient: f64) -> Result<ModelSpectrum> {
    params.validate()?;
    let n = constant_index(&params.medium)?;
    let d = params.depth();
    Ok(ModelSpectrum {
        amplitude: sw_coefficient * coeff::MODEL_SPECTRUM * contrast(n)? * SI.hbar / (SI.c.powi(4) * params.gamma)
            * d
            * d,
        gamma: params.gamma,
    })
}

/// ħ/(2 k_B γ): the temperature whose Boltzmann factor matches e^{-2γω}.
pub fn effective_temperature(gamma: f64) -> Result<f64> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::Domain(format!("gamma = {gamma:e} must be > 0")));
    }
    Ok(SI.hbar / (2.0 * SI.k_b * gamma))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelResult {
    pub w: f64,
    pub t_eff: f64,
    pub spectrum: ModelSpectrum,
}

pub fn model_result(params: &RunParams, sw_coefficient: f64) -> Result<ModelResult> {
    Ok(ModelResult {
        w: model_energy(params, sw_coefficient)?,
        t_eff: effective_temperature(params.gamma)?,
        spectrum: model_spectrum(params, sw_coefficient)?,
    })
}

/// How G(Ω) = FT[dR^2/dt] is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FourierPath {
    /// Closed form for the Lorentzian kind, quadrature otherwise.
    Auto,
    /// Closed-form Lorentzian pair; only valid for the model kind.
    Analytic,
    /// Tapered-trapezoid transform of the sampled profile.
    Numeric,
}

/// Ω grid for the energy integrals: Gauss-Legendre panels on [0, 40/γ_eff].
const OMEGA_SPAN: f64 = 40.0;
const OMEGA_PANELS: usize = 40;
const OMEGA_ORDER: usize = 8;
/// Half-width of the time grid of the numeric transform, in γ_eff.
const TAU_SPAN: f64 = 200.0;
/// Largest share of ∫Ω^4|G|^2 allowed in the last Ω panel.
const TAIL_TOL: f64 = 1e-8;

/// Energy from the frequency-domain short-wavelength form [J].
pub fn energy_sw_quadrature(profile: &BubbleProfile, n: f64, sw_coefficient: f64, path: FourierPath) -> Result<f64> {
    let pref = sw_coefficient * coeff::FOURIER_FORM * contrast(n)? * SI.hbar / SI.c.powi(4);
    if pref == 0.0 {
        return Ok(0.0);
    }
    let g = profile.gamma_eff();
    let rule = Rule::composite(0.0, OMEGA_SPAN / g, OMEGA_PANELS, OMEGA_ORDER);
    let analytic = match (path, profile.kind()) {
        (FourierPath::Numeric, _) => false,
        (FourierPath::Analytic, ProfileKind::Tabulated) => {
            return Err(Error::Domain(
                "the closed-form transform exists only for the Lorentzian kind".into(),
            ))
        }
        (_, ProfileKind::LorentzianDip) => true,
        (FourierPath::Auto, ProfileKind::Tabulated) => false,
    };
    let g2: Vec<f64> = if analytic {
        let p = profile.params().expect("Lorentzian profiles carry their parameters");
        let d = p.depth();
        rule.nodes
            .iter()
            .map(|&om| om * om * d * d * PI * PI * p.gamma * p.gamma * (-2.0 * p.gamma * om).exp())
            .collect()
    } else {
        let grid = dip_grid(profile, TAU_SPAN, None, OMEGA_SPAN / g)?;
        let rate: Vec<f64> = grid.nodes().iter().map(|&t| profile.r2_and_rate(t).1).collect();
        rule.nodes
            .iter()
            .map(|&om| grid.fourier(om, &rate).norm_sqr())
            .collect()
    };
    let vals: Vec<f64> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .zip(&g2)
        .map(|((&om, &w), &v)| w * om.powi(4) * v)
        .collect();
    let total = crate::sum::sum_ordered(&vals);
    let last = crate::sum::sum_ordered(&vals[vals.len() - OMEGA_ORDER..]);
    if total > 0.0 && last > TAIL_TOL * total {
        return Err(Error::Accuracy(format!(
            "Ω^4|G(Ω)|^2 does not decay: the last panel up to Ω = {:e} holds {:.2e} of the integral \
             (a profile with a kink or a hard window cut has a slowly decaying transform)",
            OMEGA_SPAN / g,
            last / total
        )));
    }
    Ok(pref * total)
}

/// Energy from the time-domain form ∫ (d^5R^2/dt^5) R β dt [J].
///
/// The Lorentzian kind uses exact derivatives. Tabulated profiles need
/// uniformly spaced samples; the fifth derivative is taken by central
/// differences and must agree between steps h and 2h, since a jump in any
/// derivative up to β''' makes the integral diverge.
pub fn energy_derivative_form(profile: &BubbleProfile, n: f64, sw_coefficient: f64) -> Result<f64> {
    let pref = sw_coefficient * coeff::DERIVATIVE_FORM * contrast(n)? * SI.hbar / SI.c.powi(3);
    if pref == 0.0 {
        return Ok(0.0);
    }
    let integral = match profile.kind() {
        ProfileKind::LorentzianDip => {
            let g = profile.gamma_eff();
            // resolve the dip with ~50 nodes per γ
            let grid = dip_grid(profile, TAU_SPAN, None, 2.0 * PI / 8.0 * 50.0 / g)?;
            let vals: Vec<f64> = grid
                .nodes()
                .iter()
                .map(|&t| {
                    let (r, b) = profile.radius_and_beta(t);
                    profile.r2_derivative(t, 5).unwrap_or(0.0) * r * b
                })
                .collect();
            grid.fourier(0.0, &vals).re
        }
        ProfileKind::Tabulated => tabulated_derivative_integral(profile)?,
    };
    Ok(pref * integral)
}

fn fifth_difference(q: &[f64], i: usize, s: usize, h: f64) -> f64 {
    let f = |k: isize| q[(i as isize + k * s as isize) as usize];
    (f(3) - 4.0 * f(2) + 5.0 * f(1) - 5.0 * f(-1) + 4.0 * f(-2) - f(-3)) / (2.0 * (s as f64 * h).powi(5))
}

fn tabulated_derivative_integral(profile: &BubbleProfile) -> Result<f64> {
    let samples = profile.samples().expect("tabulated profiles carry samples");
    let (a, b) = profile.window();
    let pts: Vec<(f64, f64)> = samples.into_iter().filter(|&(t, _)| t >= a && t <= b).collect();
    if pts.len() < 13 {
        return Err(Error::Domain(format!(
            "fifth derivative needs at least 13 samples inside the window, got {}",
            pts.len()
        )));
    }
    let h = (pts[pts.len() - 1].0 - pts[0].0) / (pts.len() - 1) as f64;
    if pts.windows(2).any(|w| ((w[1].0 - w[0].0) - h).abs() > 1e-9 * h) {
        return Err(Error::Domain("fifth derivative needs uniformly spaced samples".into()));
    }
    let q: Vec<f64> = pts.iter().map(|p| p.1 * p.1).collect();
    let inner = 6..pts.len() - 6;
    let d5: Vec<f64> = inner.clone().map(|i| fifth_difference(&q, i, 1, h)).collect();
    let d5_coarse: Vec<f64> = inner.clone().map(|i| fifth_difference(&q, i, 2, h)).collect();
    let scale = d5.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gap = d5.iter().zip(&d5_coarse).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    // rounding in the 6-point stencils, so that flat profiles pass
    let qmax = q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let noise = 1e3 * f64::EPSILON * qmax / h.powi(5);
    if gap > 0.1 * scale + noise {
        return Err(Error::Domain(format!(
            "profile is not smooth enough for the fifth-derivative form: finite differences at h and 2h \
             differ by {:.0}% of the peak; a discontinuity in β or its first three derivatives makes \
             the emitted energy diverge",
            100.0 * gap / scale
        )));
    }
    // R β = (dR^2/dt) / (2c)
    let mut acc = NeumaierSum::new();
    for (k, i) in inner.enumerate() {
        let rate = (q[i + 1] - q[i - 1]) / (2.0 * h);
        acc.add(d5[k] * rate / (2.0 * SI.c) * h);
    }
    Ok(acc.value())
}

/// |G(Ω)|^2 of the Lorentzian dip, for cross-checks.
pub fn lorentzian_transform(params: &RunParams, omega: f64) -> Complex64 {
    let d = params.depth();
    Complex64::new(0.0, omega * d * PI * params.gamma * (-params.gamma * omega.abs()).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: f64, r0: f64, rmin: f64, gamma: f64) -> RunParams {
        RunParams::new(
            MediumSpec::Constant { n },
            r0,
            rmin,
            gamma,
            2000.0 * gamma,
            1000.0 * gamma,
        )
        .unwrap()
    }

    #[test]
    fn closed_forms_vanish_without_contrast_or_collapse() {
        let p = params(1.0, 10e-6, 1e-6, 1e-15);
        assert_eq!(model_energy(&p, 1.16).unwrap(), 0.0);
        let p = params(1.3, 10e-6, 10e-6, 1e-15);
        assert_eq!(model_energy(&p, 1.16).unwrap(), 0.0);
        assert_eq!(model_spectrum(&p, 1.16).unwrap().eval(1e15), 0.0);
    }

    #[test]
    fn gamma_scaling_and_peak() {
        let a = model_energy(&params(1.3, 10e-6, 0.5e-6, 1e-15), 1.16).unwrap();
        let b = model_energy(&params(1.3, 10e-6, 0.5e-6, 2e-15), 1.16).unwrap();
        assert!((a / b - 32.0).abs() < 1e-12);
        let s = model_spectrum(&params(1.3, 10e-6, 0.5e-6, 1e-15), 1.16).unwrap();
        assert_eq!(s.peak(), 1.5e15);
        let e = 1e-6 * s.peak();
        assert!(s.eval(s.peak()) > s.eval(s.peak() + e));
        assert!(s.eval(s.peak()) > s.eval(s.peak() - e));
    }

    #[test]
    fn spectrum_integrates_to_energy() {
        let p = params(1.33, 20e-6, 3e-6, 7e-15);
        let s = model_spectrum(&p, 1.16).unwrap();
        let w = model_energy(&p, 1.16).unwrap();
        assert!((s.integral() - w).abs() <= 1e-14 * w);
    }

    #[test]
    fn temperature() {
        let t = effective_temperature(1e-15).unwrap();
        assert!((t - 3819.12).abs() < 0.01, "{t}");
        assert!((effective_temperature(2e-15).unwrap() - t / 2.0).abs() < 1e-9);
        assert!(effective_temperature(0.0).is_err());
    }
}
