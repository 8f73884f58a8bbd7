//! Time grids for the pair transforms.
//!
//! The transforms are Fourier integrals of smooth, algebraically decaying
//! integrands. On a uniform grid the trapezoid rule is spectrally accurate
//! once the ends are smooth, so an open end (one inside the profile window)
//! is rolled off with a C^∞ taper over the outer half of its side. An end
//! that coincides with the window edge is a hard cut and gets the usual
//! half weight.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sum::ComplexSum;

/// Nodes per period of the fastest oscillation, at least.
pub const POINTS_PER_PERIOD: f64 = 8.0;

/// Quadrature nodes and weights in time, with the phase reference `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct TauGrid {
    tau: Vec<f64>,
    weight: Vec<f64>,
    center: f64,
    /// Node spacing when the nodes are lo + i h.
    step: Option<f64>,
}

/// Phases on uniform grids advance by rotation, re-anchored this often.
const ANCHOR_EVERY: usize = 32;

fn bump(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// 1 on [0, 1/2], smooth descent to 0 at u = 1.
pub fn taper(u: f64) -> f64 {
    if u <= 0.5 {
        return 1.0;
    }
    if u >= 1.0 {
        return 0.0;
    }
    let v = 2.0 * (u - 0.5);
    let a = bump(1.0 - v);
    a / (a + bump(v))
}

impl TauGrid {
    /// Explicit nodes and weights.
    pub fn from_nodes(tau: Vec<f64>, weight: Vec<f64>, center: f64) -> Result<Self> {
        if tau.len() != weight.len() || tau.is_empty() {
            return Err(Error::InvalidParams(format!(
                "time grid needs matching non-empty node/weight lists ({} vs {})",
                tau.len(),
                weight.len()
            )));
        }
        if !tau.iter().chain(&weight).all(|v| v.is_finite()) || !center.is_finite() {
            return Err(Error::InvalidParams("time grid has non-finite entries".into()));
        }
        Ok(TauGrid {
            tau,
            weight,
            center,
            step: None,
        })
    }

    /// `points` uniform nodes on [lo, hi]; soft ends are tapered towards
    /// `center`, hard ends get trapezoid half weights.
    pub fn tapered(lo: f64, hi: f64, center: f64, points: usize, soft_lo: bool, soft_hi: bool) -> Result<Self> {
        if points < 3 || !(lo < hi) || !(lo <= center && center <= hi) {
            return Err(Error::InvalidParams(format!(
                "bad time grid: [{lo:e}, {hi:e}], center {center:e}, {points} points"
            )));
        }
        let h = (hi - lo) / (points - 1) as f64;
        let mut tau = Vec::with_capacity(points);
        let mut weight = Vec::with_capacity(points);
        for i in 0..points {
            let t = if i == points - 1 { hi } else { lo + h * i as f64 };
            let mut w = h;
            if t < center && soft_lo {
                w *= taper((center - t) / (center - lo));
            } else if t > center && soft_hi {
                w *= taper((t - center) / (hi - center));
            }
            if (i == 0 && !soft_lo) || (i == points - 1 && !soft_hi) {
                w *= 0.5;
            }
            tau.push(t);
            weight.push(w);
        }
        Ok(TauGrid {
            tau,
            weight,
            center,
            step: Some(h),
        })
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.tau
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    /// Largest node spacing.
    pub fn max_step(&self) -> f64 {
        self.tau.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Accuracy error unless every oscillation up to `omega_total` gets
    /// `POINTS_PER_PERIOD` nodes.
    pub fn check_resolution(&self, omega_total: f64) -> Result<()> {
        let h = self.max_step();
        let limit = 2.0 * std::f64::consts::PI / POINTS_PER_PERIOD;
        if h * omega_total > limit * (1.0 + 1e-12) {
            let span = self.tau[self.len() - 1] - self.tau[0];
            let need = (span * omega_total / limit).ceil() as usize + 1;
            return Err(Error::Accuracy(format!(
                "time grid too coarse: step {h:e} s resolves Ω <= {:e} rad/s but Ω reaches {omega_total:e}; \
                 increase tau_points to at least {need}",
                limit / h
            )));
        }
        Ok(())
    }

    /// e^{iΩ(τ_j - center)} for every node. On uniform grids the phase is
    /// advanced by complex rotation and recomputed exactly every
    /// `ANCHOR_EVERY` nodes, which keeps the drift at a few ulps.
    pub fn phases(&self, omega_total: f64) -> Vec<Complex64> {
        let exact = |t: f64| {
            let (s, c) = (omega_total * (t - self.center)).sin_cos();
            Complex64::new(c, s)
        };
        match self.step {
            None => self.tau.iter().map(|&t| exact(t)).collect(),
            Some(h) => {
                let rot = {
                    let (s, c) = (omega_total * h).sin_cos();
                    Complex64::new(c, s)
                };
                let mut out = Vec::with_capacity(self.tau.len());
                let mut z = Complex64::new(1.0, 0.0);
                for (i, &t) in self.tau.iter().enumerate() {
                    z = if i % ANCHOR_EVERY == 0 { exact(t) } else { z * rot };
                    out.push(z);
                }
                out
            }
        }
    }

    /// Σ_j w_j v_j e^{iΩ(τ_j - center)} in fixed node order.
    pub fn fourier(&self, omega_total: f64, values: &[f64]) -> Complex64 {
        let mut acc = ComplexSum::new();
        for ((z, &w), &v) in self.phases(omega_total).into_iter().zip(&self.weight).zip(values) {
            let a = w * v;
            if a != 0.0 {
                acc.add(z * a);
            }
        }
        acc.value()
    }

    /// w_j e^{iΩ(τ_j - center)} for every node.
    pub fn phased_weights(&self, omega_total: f64) -> Vec<Complex64> {
        self.phases(omega_total)
            .into_iter()
            .zip(&self.weight)
            .map(|(z, &w)| z * w)
            .collect()
    }
}
