//! Bubble trajectories: the Lorentzian dip in R^2 and tabulated radii.
//!
//! Model: R^2(t) = R0^2 - (R0^2 - Rmin^2) / (1 + s^2), s = (t - center)/γ,
//! on the window [0, period]. Tabulated profiles interpolate R^2 (not R)
//! with a monotone piecewise cubic (Fritsch-Carlson/PCHIP) through the
//! samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physpar::{RunParams, SI};

/// β above which the first-order-in-velocity treatment is flagged.
pub const DEFAULT_WARN_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    LorentzianDip,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Lorentzian {
        r0sq: f64,
        depth: f64,
        gamma: f64,
        center: f64,
    },
    Tabulated(Pchip),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BubbleProfile {
    shape: Shape,
    params: Option<RunParams>,
    window: (f64, f64),
    center: f64,
    gamma_eff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileDiagnostics {
    /// max |dR/dt| / c on the window.
    pub beta_max: f64,
    pub t_at_beta_max: f64,
    pub min_radius: f64,
    pub t_at_min_radius: f64,
    pub warn_threshold: f64,
    /// beta_max > warn_threshold.
    pub warning: bool,
    /// beta_max > 1.
    pub superluminal: bool,
}

pub fn make_lorentzian(params: &RunParams) -> Result<BubbleProfile> {
    params.validate()?;
    Ok(BubbleProfile {
        shape: Shape::Lorentzian {
            r0sq: params.r0 * params.r0,
            depth: params.depth(),
            gamma: params.gamma,
            center: params.center,
        },
        params: Some(params.clone()),
        window: (0.0, params.period),
        center: params.center,
        gamma_eff: params.gamma,
    })
}

/// Profile through (t [s], R [m]) samples. `window` defaults to the sample
/// span and must lie inside it.
pub fn make_tabulated(samples: &[(f64, f64)], window: Option<(f64, f64)>) -> Result<BubbleProfile> {
    if samples.len() < 4 {
        return Err(Error::InvalidParams(format!(
            "tabulated profile needs at least 4 samples, got {}",
            samples.len()
        )));
    }
    for (i, &(t, r)) in samples.iter().enumerate() {
        if !(t.is_finite() && r.is_finite()) {
            return Err(Error::InvalidParams(format!("profile sample {i} is not finite")));
        }
        if r <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "profile sample {i}: R = {r:e} must be > 0"
            )));
        }
        if i > 0 && t <= samples[i - 1].0 {
            return Err(Error::InvalidParams(format!(
                "profile times must be strictly increasing (sample {i}: {t:e} after {:e})",
                samples[i - 1].0
            )));
        }
    }
    let span = (samples[0].0, samples[samples.len() - 1].0);
    let window = window.unwrap_or(span);
    if !(window.0 < window.1 && window.0 >= span.0 && window.1 <= span.1) {
        return Err(Error::InvalidParams(format!(
            "window [{:e}, {:e}] must be a non-empty part of the sample span [{:e}, {:e}]",
            window.0, window.1, span.0, span.1
        )));
    }
    let t: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let q: Vec<f64> = samples.iter().map(|s| s.1 * s.1).collect();
    let pchip = Pchip::new(t, q);
    let (center, gamma_eff) = dip_shape(&pchip, window);
    Ok(BubbleProfile {
        shape: Shape::Tabulated(pchip),
        params: None,
        window,
        center,
        gamma_eff,
    })
}

impl BubbleProfile {
    pub fn kind(&self) -> ProfileKind {
        match self.shape {
            Shape::Lorentzian { .. } => ProfileKind::LorentzianDip,
            Shape::Tabulated(_) => ProfileKind::Tabulated,
        }
    }

    /// Model parameters, for the Lorentzian kind.
    pub fn params(&self) -> Option<&RunParams> {
        self.params.as_ref()
    }

    /// Interpolation knots (t, R), for the tabulated kind.
    pub fn samples(&self) -> Option<Vec<(f64, f64)>> {
        match &self.shape {
            Shape::Tabulated(p) => Some(p.t.iter().zip(&p.y).map(|(&t, &q)| (t, q.sqrt())).collect()),
            Shape::Lorentzian { .. } => None,
        }
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    /// Time of minimum radius.
    pub fn center(&self) -> f64 {
        self.center
    }

    /// Half-width at half depth of the R^2 dip (γ for the model); falls back
    /// to the window length when there is no dip.
    pub fn gamma_eff(&self) -> f64 {
        self.gamma_eff
    }

    fn check(&self, t: f64) -> Result<()> {
        if !(t >= self.window.0 && t <= self.window.1) {
            return Err(Error::Range {
                what: "t",
                value: t,
                lo: self.window.0,
                hi: self.window.1,
            });
        }
        Ok(())
    }

    /// R^2 and dR^2/dt without the window check. Tabulated profiles clamp
    /// to their end knots.
    #[inline]
    pub fn r2_and_rate(&self, t: f64) -> (f64, f64) {
        match &self.shape {
            Shape::Lorentzian {
                r0sq,
                depth,
                gamma,
                center,
            } => {
                let s = (t - center) / gamma;
                let l = 1.0 / (1.0 + s * s);
                (r0sq - depth * l, depth * 2.0 * s * l * l / gamma)
            }
            Shape::Tabulated(p) => p.eval(t),
        }
    }

    /// Radius [m] and β = (dR^2/dt)/(2Rc) without the window check.
    #[inline]
    pub fn radius_and_beta(&self, t: f64) -> (f64, f64) {
        let (q, dq) = self.r2_and_rate(t);
        let r = q.sqrt();
        (r, dq / (2.0 * r * SI.c))
    }

    pub fn radius(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.r2_and_rate(t).0.sqrt())
    }

    /// β = Ṙ/c.
    pub fn velocity(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.radius_and_beta(t).1)
    }

    /// dR^2/dt [m^2/s].
    pub fn dr2dt(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.r2_and_rate(t).1)
    }

    /// d^m R^2/dt^m for m <= 5. Exact for the model; tabulated profiles only
    /// carry m <= 1 (higher orders are left to finite differences on
    /// uniformly sampled data, see `analytic`).
    pub fn r2_derivative(&self, t: f64, m: usize) -> Result<f64> {
        self.check(t)?;
        match &self.shape {
            Shape::Lorentzian {
                r0sq,
                depth,
                gamma,
                center,
            } => {
                let s = (t - center) / gamma;
                if m == 0 {
                    return Ok(r0sq - depth * lorentz_derivative(s, 0));
                }
                if m > 5 {
                    return Err(Error::Domain(format!("derivative order {m} > 5 not provided")));
                }
                Ok(-depth * gamma.powi(-(m as i32)) * lorentz_derivative(s, m))
            }
            Shape::Tabulated(p) => match m {
                0 => Ok(p.eval(t).0),
                1 => Ok(p.eval(t).1),
                _ => Err(Error::Domain(format!(
                    "tabulated profiles provide R^2 derivatives up to order 1, asked for {m}"
                ))),
            },
        }
    }

    pub fn diagnostics(&self) -> ProfileDiagnostics {
        self.diagnostics_with(DEFAULT_WARN_THRESHOLD)
    }

    /// Dense scan plus golden-section refinement of max |β| and min R.
    pub fn diagnostics_with(&self, warn_threshold: f64) -> ProfileDiagnostics {
        let grid = self.scan_grid();
        let beta = |t: f64| self.radius_and_beta(t).1.abs();
        let radius = |t: f64| self.r2_and_rate(t).0.sqrt();
        let (t_b, beta_max) = refine_extremum(&grid, beta);
        let (t_r, neg_r) = refine_extremum(&grid, |t| -radius(t));
        ProfileDiagnostics {
            beta_max,
            t_at_beta_max: t_b,
            min_radius: -neg_r,
            t_at_min_radius: t_r,
            warn_threshold,
            warning: beta_max > warn_threshold,
            superluminal: beta_max > 1.0,
        }
    }

    /// Uniform grid over the window, a sinh-stretched grid concentrated on
    /// the dip and, for tabulated data, every knot and knot midpoint.
    fn scan_grid(&self) -> Vec<f64> {
        let (a, b) = self.window;
        let mut g: Vec<f64> = (0..=4000).map(|i| a + (b - a) * i as f64 / 4000.0).collect();
        let w = self.gamma_eff;
        let umax = ((b - a) / w).asinh();
        for i in 0..=4000 {
            let u = umax * (2.0 * i as f64 / 4000.0 - 1.0);
            let t = self.center + w * u.sinh();
            if t > a && t < b {
                g.push(t);
            }
        }
        if let Shape::Tabulated(p) = &self.shape {
            for k in 0..p.t.len() {
                g.push(p.t[k]);
                if k + 1 < p.t.len() {
                    g.push(0.5 * (p.t[k] + p.t[k + 1]));
                }
            }
        }
        g.retain(|&t| t >= a && t <= b);
        g.sort_by(f64::total_cmp);
        g.dedup();
        g
    }
}

/// d^m/ds^m of 1/(1+s^2) = (-1)^m m! Im((s - i)^-(m+1)).
pub fn lorentz_derivative(s: f64, m: usize) -> f64 {
    let z = num_complex::Complex64::new(s, -1.0);
    let p = z.powi(-(m as i32 + 1));
    let fact: f64 = (1..=m).map(|k| k as f64).product();
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * fact * p.im
}

/// Grid maximum of `f`, refined by golden section on the neighbouring cells.
fn refine_extremum(grid: &[f64], f: impl Fn(f64) -> f64) -> (f64, f64) {
    let (mut best, mut val) = (0usize, f64::NEG_INFINITY);
    for (i, &t) in grid.iter().enumerate() {
        let v = f(t);
        if v > val {
            best = i;
            val = v;
        }
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let (t, v) = golden_max(&f, lo, hi);
    if v > val {
        (t, v)
    } else {
        (grid[best], val)
    }
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (a.abs() + b.abs()) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Minimum of R^2 and the half-depth half-width around it.
fn dip_shape(p: &Pchip, window: (f64, f64)) -> (f64, f64) {
    let (a, b) = window;
    let mut grid: Vec<f64> = p.t.iter().copied().filter(|&t| t >= a && t <= b).collect();
    grid.push(a);
    grid.push(b);
    for i in 0..=2000 {
        grid.push(a + (b - a) * i as f64 / 2000.0);
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let (tc, neg) = refine_extremum(&grid, |t| -p.eval(t).0);
    let qmin = -neg;
    let qmax = grid.iter().map(|&t| p.eval(t).0).fold(f64::NEG_INFINITY, f64::max);
    if !(qmax > qmin * (1.0 + 1e-12)) {
        return (0.5 * (a + b), b - a);
    }
    let half = 0.5 * (qmin + qmax);
    let above = |t: f64| p.eval(t).0 >= half;
    // walk outwards to the first grid point above half depth, then bisect
    let crossing = |dir: f64| -> f64 {
        let mut inner = tc;
        let pts: Vec<f64> = if dir < 0.0 {
            grid.iter().rev().copied().filter(|&t| t < tc).collect()
        } else {
            grid.iter().copied().filter(|&t| t > tc).collect()
        };
        for t in pts {
            if above(t) {
                let (mut lo, mut hi) = (inner, t);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if above(mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return 0.5 * (lo + hi);
            }
            inner = t;
        }
        inner
    };
    let (tl, tr) = (crossing(-1.0), crossing(1.0));
    let width = match (tc - tl > 0.0, tr - tc > 0.0) {
        (true, true) => 0.5 * (tr - tl),
        (true, false) => tc - tl,
        (false, true) => tr - tc,
        _ => b - a,
    };
    (tc, width)
}

/// Monotone piecewise cubic Hermite interpolant.
#[derive(Debug, Clone, PartialEq)]
struct Pchip {
    t: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    fn new(t: Vec<f64>, y: Vec<f64>) -> Self {
        let n = t.len();
        let h: Vec<f64> = (0..n - 1).map(|k| t[k + 1] - t[k]).collect();
        let del: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut d = vec![0.0; n];
        for k in 1..n - 1 {
            if del[k - 1] * del[k] > 0.0 {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
            }
        }
        d[0] = end_slope(h[0], h[1], del[0], del[1]);
        d[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
        Pchip { t, y, d }
    }

    /// Value and first derivative; clamps outside the knot span.
    fn eval(&self, x: f64) -> (f64, f64) {
        let n = self.t.len();
        let x = x.clamp(self.t[0], self.t[n - 1]);
        let k = match self.t.partition_point(|&v| v <= x) {
            0 => 0,
            i => (i - 1).min(n - 2),
        };
        let h = self.t[k + 1] - self.t[k];
        let s = (x - self.t[k]) / h;
        let (y0, y1, d0, d1) = (self.y[k], self.y[k + 1], self.d[k], self.d[k + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let v = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
        let dv = (6.0 * s2 - 6.0 * s) / h * (y0 - y1) + (3.0 * s2 - 4.0 * s + 1.0) * d0 + (3.0 * s2 - 2.0 * s) * d1;
        (v, dv)
    }
}

/// Shape-preserving three-point end slope.
fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() || del0 == 0.0 {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}
