//! Spectrum and energy from the mode sums.
//!
//! With Ω = ω + ω', k = ω/c and the force factors of `modes`,
//!
//! ```text
//! T_l^pol(ω, ω') = ∫ dτ β(τ) F_l^pol(k, k', R(τ)) e^{iΩτ}
//! K(ω, ω')      = Σ_l (2l+1) Σ_pol |T_l^pol|^2
//!               = ∫∫ dτ dτ' β β' e^{iΩ(τ-τ')} ℑ(k, k'; R(τ), R(τ'))
//! P(ω) = ħ (n^2-1)^2 / (4π^2 n^2) ω^2 ∫ dω' ω' / (ω+ω')^2 K(ω, ω')
//! W    = ∫ P(ω) dω
//! ```
//!
//! Internally radii are light-travel times R/c, so kR = ωR/c and K comes
//! out in s^2; ħ is applied once at the end. The short-wavelength kernel
//! replaces ℑ by c_sw kk'R R', which factorizes to
//! K = c_sw ωω' |∫ dτ β (R/c) e^{iΩτ}|^2.

mod grid;

pub use grid::{taper, TauGrid, POINTS_PER_PERIOD};

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::{
    force_scaled, geometric_tail, ModeSeries, Polarization, TruncationPolicy, SW_COEFFICIENT_REDERIVED,
};
use crate::physpar::{refractive_index, MediumSpec, SI};
use crate::profile::BubbleProfile;
use crate::quad::Rule;
use crate::sum::{ComplexSum, NeumaierSum};

/// Frequency band of a sweep. Unset ends scale with the dip width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Band {
    /// rad/s; default 0.05/γ_eff.
    pub omega_min: Option<f64>,
    /// rad/s; default 15/γ_eff.
    pub omega_max: Option<f64>,
    pub points: usize,
}

impl Default for Band {
    fn default() -> Self {
        Band {
            omega_min: None,
            omega_max: None,
            points: 121,
        }
    }
}

impl Band {
    pub fn resolve(&self, gamma_eff: f64) -> Result<Vec<f64>> {
        let lo = self.omega_min.unwrap_or(0.05 / gamma_eff);
        let hi = self.omega_max.unwrap_or(15.0 / gamma_eff);
        if !(lo > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "band [{lo:e}, {hi:e}] must satisfy 0 < min < max"
            )));
        }
        if self.points < 2 {
            return Err(Error::InvalidParams(format!(
                "band.points = {} must be >= 2",
                self.points
            )));
        }
        let n = self.points - 1;
        Ok((0..=n)
            .map(|i| {
                if i == n {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / n as f64
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Time nodes; sized automatically from the resolution rule when unset.
    pub tau_points: Option<usize>,
    /// Half-width of the time grid in units of γ_eff.
    pub tau_span: f64,
    /// Upper end of the ω' integral [rad/s]; default 16/γ_eff.
    pub omega_prime_max: Option<f64>,
    /// Gauss-Legendre nodes on [0, omega_prime_max], in panels of 8.
    pub omega_prime_points: usize,
    pub l_policy: TruncationPolicy,
    pub rel_tol: f64,
    /// Use c_sw kk'RR' in place of the mode sum.
    pub sw_fast_path: bool,
    pub sw_coefficient: f64,
    pub band: Band,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            tau_points: None,
            tau_span: 200.0,
            omega_prime_max: None,
            omega_prime_points: 64,
            l_policy: TruncationPolicy::default(),
            rel_tol: 1e-6,
            sw_fast_path: false,
            sw_coefficient: SW_COEFFICIENT_REDERIVED,
            band: Band::default(),
        }
    }
}

const OMEGA_PRIME_ORDER: usize = 8;

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if let Some(p) = self.tau_points {
            if p < 64 {
                return bad(format!("tau_points = {p} must be >= 64"));
            }
        }
        if !(self.tau_span.is_finite() && self.tau_span > 0.0) {
            return bad(format!("tau_span = {} must be > 0", self.tau_span));
        }
        if let Some(w) = self.omega_prime_max {
            if !(w.is_finite() && w > 0.0) {
                return bad(format!("omega_prime_max = {w:e} must be > 0"));
            }
        }
        if self.omega_prime_points < 16 || !self.omega_prime_points.is_multiple_of(OMEGA_PRIME_ORDER) {
            return bad(format!(
                "omega_prime_points = {} must be >= 16 and a multiple of {OMEGA_PRIME_ORDER}",
                self.omega_prime_points
            ));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-2) {
            return bad(format!("rel_tol = {} must be in (0, 1e-2]", self.rel_tol));
        }
        if !(self.sw_coefficient.is_finite() && self.sw_coefficient > 0.0) {
            return bad(format!("sw_coefficient = {} must be > 0", self.sw_coefficient));
        }
        self.l_policy.validate()
    }

    pub fn kernel(&self) -> Kernel {
        if self.sw_fast_path {
            Kernel::ShortWavelength {
                coefficient: self.sw_coefficient,
            }
        } else {
            Kernel::ModeSum { policy: self.l_policy }
        }
    }

    pub fn omega_prime_rule(&self, gamma_eff: f64) -> Rule {
        let top = self.omega_prime_max.unwrap_or(16.0 / gamma_eff);
        Rule::composite(0.0, top, self.omega_prime_points / OMEGA_PRIME_ORDER, OMEGA_PRIME_ORDER)
    }
}

/// Which form of ℑ builds the pair kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    ModeSum { policy: TruncationPolicy },
    ShortWavelength { coefficient: f64 },
}

/// ħ (n^2-1)^2 / (4π^2 n^2).
pub fn density_prefactor(n: f64) -> f64 {
    let m = (n - 1.0) * (n + 1.0);
    SI.hbar * m * m / (4.0 * PI * PI * n * n)
}

/// A profile sampled on a time grid together with the ω' rule: everything
/// needed to evaluate K and P at any ω.
#[derive(Debug, Clone)]
pub struct Prepared {
    grid: TauGrid,
    /// R/c at each node [s].
    rho: Vec<f64>,
    beta: Vec<f64>,
    rule: Rule,
    kernel: Kernel,
    rel_tol: f64,
}

impl Prepared {
    /// Grid sized for every ω up to `omega_max`.
    pub fn new(profile: &BubbleProfile, cfg: &EngineConfig, omega_max: f64) -> Result<Self> {
        cfg.validate()?;
        let g = profile.gamma_eff();
        let rule = cfg.omega_prime_rule(g);
        let omega_total = omega_max + rule.nodes.last().copied().unwrap_or(0.0);
        let grid = profile_grid(profile, cfg, omega_total)?;
        Ok(Self::from_parts(profile, grid, rule, cfg.kernel(), cfg.rel_tol))
    }

    pub fn from_parts(profile: &BubbleProfile, grid: TauGrid, rule: Rule, kernel: Kernel, rel_tol: f64) -> Self {
        let (rho, beta) = grid
            .nodes()
            .iter()
            .map(|&t| {
                let (r, b) = profile.radius_and_beta(t);
                (r / SI.c, b)
            })
            .unzip();
        Prepared {
            grid,
            rho,
            beta,
            rule,
            kernel,
            rel_tol,
        }
    }

    pub fn grid(&self) -> &TauGrid {
        &self.grid
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    /// T_l^pol for l = 1..=l_max at fixed l_max, phase referenced to the grid
    /// center. Index 0 is l = 1; entries are [TE, TM].
    pub fn transforms(&self, omega: f64, omega_p: f64, n: f64, l_max: usize) -> Result<Vec<[Complex64; 2]>> {
        let phased = self.grid.phased_weights(omega + omega_p);
        let mut acc = vec![[ComplexSum::new(); 2]; l_max];
        for (j, &ph) in phased.iter().enumerate() {
            let amp = ph * self.beta[j];
            if amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            let a = ModeSeries::new(l_max, n, omega * self.rho[j])?;
            let b = ModeSeries::new(l_max, n, omega_p * self.rho[j])?;
            for l in 1..=l_max {
                for (p, pol) in Polarization::BOTH.into_iter().enumerate() {
                    let f = force_scaled(&a, &b, l, pol)?.to_complex();
                    acc[l - 1][p].add(amp * f);
                }
            }
        }
        Ok(acc.iter().map(|t| [t[0].value(), t[1].value()]).collect())
    }

    fn rho_max_active(&self) -> f64 {
        self.rho
            .iter()
            .zip(&self.beta)
            .zip(self.grid.weights())
            .filter(|((_, &b), &w)| b * w != 0.0)
            .map(|((&r, _), _)| r)
            .fold(0.0, f64::max)
    }

    /// K(ω, ω') [s^2].
    pub fn kernel(&self, omega: f64, omega_p: f64, n: f64) -> Result<f64> {
        match self.kernel {
            Kernel::ShortWavelength { coefficient } => {
                let v: Vec<f64> = self.rho.iter().zip(&self.beta).map(|(r, b)| r * b).collect();
                let t = self.grid.fourier(omega + omega_p, &v);
                Ok(coefficient * omega * omega_p * t.norm_sqr())
            }
            Kernel::ModeSum { policy } => {
                let rho_max = self.rho_max_active();
                if rho_max == 0.0 {
                    return Ok(0.0);
                }
                let mut l_max = policy.initial_lmax(n * omega.max(omega_p) * rho_max);
                loop {
                    let t = self.transforms(omega, omega_p, n, l_max)?;
                    let mut total = NeumaierSum::new();
                    let mut mags = Vec::with_capacity(l_max);
                    for (i, tl) in t.iter().enumerate() {
                        let term = (2 * i + 3) as f64 * (tl[0].norm_sqr() + tl[1].norm_sqr());
                        mags.push(term);
                        total.add(term);
                    }
                    let k = total.value();
                    if policy.fixed.is_some() || policy.converged(&mags, k) {
                        return Ok(k);
                    }
                    if l_max >= policy.cap {
                        return Err(Error::Truncation {
                            l_max,
                            tail_estimate: geometric_tail(&mags),
                            partial: k,
                        });
                    }
                    l_max = (2 * l_max).min(policy.cap);
                }
            }
        }
    }

    /// P(ω) [J s] for refractive index n.
    pub fn density(&self, omega: f64, n: f64) -> Result<f64> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::Domain(format!("omega = {omega:e} must be > 0")));
        }
        if n == 1.0 {
            return Ok(0.0);
        }
        let rule = &self.rule;
        let vals: Vec<f64> = rule
            .nodes
            .par_iter()
            .zip(&rule.weights)
            .map(|(&wp, &w)| {
                let k = self.kernel(omega, wp, n)?;
                Ok(w * wp / ((omega + wp) * (omega + wp)) * k)
            })
            .collect::<Result<_>>()?;
        let total = crate::sum::sum_ordered(&vals);
        // the tail test needs more than one panel
        let last = crate::sum::sum_ordered(&vals[vals.len().saturating_sub(OMEGA_PRIME_ORDER)..]);
        if vals.len() > OMEGA_PRIME_ORDER && total != 0.0 && last.abs() > self.rel_tol * total.abs() {
            return Err(Error::Accuracy(format!(
                "ω' integral at ω = {omega:e}: last panel holds {:.2e} of the total; increase omega_prime_max",
                last / total
            )));
        }
        Ok(density_prefactor(n) * omega * omega * total)
    }
}

/// Time grid for a profile under `cfg`, resolving Ω up to `omega_total`.
pub fn profile_grid(profile: &BubbleProfile, cfg: &EngineConfig, omega_total: f64) -> Result<TauGrid> {
    dip_grid(profile, cfg.tau_span, cfg.tau_points, omega_total)
}

/// Uniform grid of half-width tau_span·γ_eff about the dip, clipped to the
/// window. Without an explicit node count it is sized so that Ω up to
/// `omega_total` gets `POINTS_PER_PERIOD` nodes per period.
pub fn dip_grid(
    profile: &BubbleProfile,
    tau_span: f64,
    tau_points: Option<usize>,
    omega_total: f64,
) -> Result<TauGrid> {
    let c = profile.center();
    let half = tau_span * profile.gamma_eff();
    let (a, b) = profile.window();
    let (lo, soft_lo) = if c - half > a { (c - half, true) } else { (a, false) };
    let (hi, soft_hi) = if c + half < b { (c + half, true) } else { (b, false) };
    let points = match tau_points {
        Some(p) => p,
        None => {
            let h = 2.0 * PI / POINTS_PER_PERIOD / omega_total;
            let mut intervals = ((hi - lo) / h * (1.0 + 1e-9)).ceil() as usize;
            intervals += intervals % 2;
            (intervals + 1).max(65)
        }
    };
    let g = TauGrid::tapered(lo, hi, c, points, soft_lo, soft_hi)?;
    g.check_resolution(omega_total)?;
    Ok(g)
}

/// T_l^pol(ω, ω') with the absolute phase e^{iΩτ}.
pub fn pair_transform(
    l: usize,
    pol: Polarization,
    omega: f64,
    omega_p: f64,
    profile: &BubbleProfile,
    medium: &MediumSpec,
    cfg: &EngineConfig,
) -> Result<Complex64> {
    if l == 0 {
        return Err(Error::Domain("pair transform needs l >= 1".into()));
    }
    if !(omega > 0.0 && omega_p > 0.0) {
        return Err(Error::Domain(format!("need ω, ω' > 0, got {omega:e}, {omega_p:e}")));
    }
    cfg.validate()?;
    let n = refractive_index(medium, omega)?;
    let omega_total = omega + omega_p;
    let grid = profile_grid(profile, cfg, omega_total)?;
    let prep = Prepared::from_parts(
        profile,
        grid,
        Rule::composite(0.0, 1.0, 1, 1),
        cfg.kernel(),
        cfg.rel_tol,
    );
    let t = prep.transforms(omega, omega_p, n, l)?;
    let p = match pol {
        Polarization::TE => 0,
        Polarization::TM => 1,
    };
    let (s, c) = (omega_total * prep.grid.center()).sin_cos();
    Ok(t[l - 1][p] * Complex64::new(c, s))
}

/// P(ω) [J s] at one frequency.
pub fn spectral_density(omega: f64, profile: &BubbleProfile, medium: &MediumSpec, cfg: &EngineConfig) -> Result<f64> {
    let n = refractive_index(medium, omega)?;
    Prepared::new(profile, cfg, omega)?.density(omega, n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub omega: f64,
    /// 2πc/ω [m].
    pub lambda: f64,
    /// P(ω) [J s]; 0 for flagged rows.
    pub p: f64,
    /// Energy below this ω including the low-frequency tail [J].
    pub cumulative: f64,
    pub n: f64,
    /// Why this row could not be computed.
    pub flag: Option<String>,
}

/// What the spectrum was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEcho {
    pub kind: crate::profile::ProfileKind,
    pub window: (f64, f64),
    pub center: f64,
    pub gamma_eff: f64,
    pub beta_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub rows: Vec<SpectrumRow>,
    /// W [J]: trapezoid over the rows plus both tails.
    pub total_energy: f64,
    /// ∫_0^ω_min P dω assuming P ∝ ω^3.
    pub lower_tail: f64,
    /// ∫_ω_max^∞ P dω from exponential extrapolation of the last two rows.
    pub upper_tail: f64,
    pub tau_points: usize,
    pub config: EngineConfig,
    pub profile: ProfileEcho,
}

impl SpectrumTable {
    pub fn flagged(&self) -> impl Iterator<Item = &SpectrumRow> {
        self.rows.iter().filter(|r| r.flag.is_some())
    }
}

/// Trapezoid energy with power-law and exponential tails; returns
/// (cumulative per row, lower tail, upper tail, total).
pub fn integrate_spectrum(omega: &[f64], p: &[f64]) -> (Vec<f64>, f64, f64, f64) {
    let lower = p[0] * omega[0] / 4.0;
    let mut cum = Vec::with_capacity(p.len());
    let mut acc = NeumaierSum::new();
    acc.add(lower);
    cum.push(acc.value());
    for i in 1..p.len() {
        acc.add(0.5 * (omega[i] - omega[i - 1]) * (p[i] + p[i - 1]));
        cum.push(acc.value());
    }
    let k = p.len();
    let upper = if k >= 2 && p[k - 1] > 0.0 && p[k - 2] > p[k - 1] {
        let rate = (p[k - 2] / p[k - 1]).ln() / (omega[k - 1] - omega[k - 2]);
        p[k - 1] / rate
    } else {
        0.0
    };
    acc.add(upper);
    (cum, lower, upper, acc.value())
}

/// P over a grid of frequencies; row failures are flagged, not fatal.
pub fn spectrum_sweep(
    omega_grid: &[f64],
    profile: &BubbleProfile,
    medium: &MediumSpec,
    cfg: &EngineConfig,
) -> Result<SpectrumTable> {
    if omega_grid.is_empty() {
        return Err(Error::InvalidParams("empty frequency grid".into()));
    }
    if !omega_grid.iter().all(|w| w.is_finite() && *w > 0.0) || omega_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams(
            "frequency grid must be positive and strictly increasing".into(),
        ));
    }
    medium.validate()?;
    let top = *omega_grid.last().unwrap();
    let prep = Prepared::new(profile, cfg, top)?;
    let results: Vec<(f64, Result<f64>)> = omega_grid
        .par_iter()
        .map(|&w| match refractive_index(medium, w) {
            Ok(n) => (n, prep.density(w, n)),
            Err(e) => (f64::NAN, Err(e)),
        })
        .collect();
    let p: Vec<f64> = results.iter().map(|(_, r)| *r.as_ref().unwrap_or(&0.0)).collect();
    let (cum, lower, upper, total) = integrate_spectrum(omega_grid, &p);
    let rows = omega_grid
        .iter()
        .zip(results)
        .zip(cum)
        .map(|((&w, (n, r)), c)| SpectrumRow {
            omega: w,
            lambda: 2.0 * PI * SI.c / w,
            p: *r.as_ref().unwrap_or(&0.0),
            cumulative: c,
            n,
            flag: r.err().map(|e| e.to_string()),
        })
        .collect();
    Ok(SpectrumTable {
        rows,
        total_energy: total,
        lower_tail: lower,
        upper_tail: upper,
        tau_points: prep.grid.len(),
        config: cfg.clone(),
        profile: ProfileEcho {
            kind: profile.kind(),
            window: profile.window(),
            center: profile.center(),
            gamma_eff: profile.gamma_eff(),
            beta_max: profile.diagnostics().beta_max,
        },
    })
}

/// W [J] over the configured band. Any flagged row is an error here.
pub fn total_energy(profile: &BubbleProfile, medium: &MediumSpec, cfg: &EngineConfig) -> Result<f64> {
    let grid = cfg.band.resolve(profile.gamma_eff())?;
    let table = spectrum_sweep(&grid, profile, medium, cfg)?;
    if let Some(row) = table.flagged().next() {
        let msg = row.flag.clone().unwrap_or_default();
        return Err(Error::Accuracy(format!("row ω = {:e}: {msg}", row.omega)));
    }
    Ok(table.total_energy)
}
