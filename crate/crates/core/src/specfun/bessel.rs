//! Spherical Bessel functions of real positive argument, all orders at once.
//!
//! j_l: Miller downward recurrence started above max(l, x), normalized by a
//! least-squares fit to the closed forms of j_0 and j_1 (robust when either
//! sits near a zero). y_l: upward recurrence from y_0, y_1, which is the
//! dominant direction for y at every order. Both recurrences rescale by
//! 2^±500 as they go and keep the exponent, so products like j_l(x) y_l(nx)
//! stay accurate after either factor has left the f64 range.

use super::scaled::{ldexp, Scaled};
use crate::error::{Error, Result};

/// Largest order accepted by the array routines.
pub const L_MAX_SUPPORTED: usize = 20_000;

/// Magnitudes below this are reported as exact zero by the f64 accessors.
pub const FLUSH_THRESHOLD: f64 = 1e-280;

const RESCALE_EXP: i64 = 500;

fn check_args(lmax: usize, x: f64) -> Result<()> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Domain(format!(
            "spherical Bessel argument x = {x} must be finite and > 0"
        )));
    }
    if lmax > L_MAX_SUPPORTED {
        return Err(Error::Capability {
            l: lmax,
            max: L_MAX_SUPPORTED,
        });
    }
    Ok(())
}

fn flush(v: f64) -> f64 {
    if v.abs() < FLUSH_THRESHOLD {
        0.0
    } else {
        v
    }
}

/// f_l(x) and [x f_l(x)]' for l = 0..=lmax, sharing one exponent per order.
#[derive(Debug, Clone)]
pub struct BesselSeries {
    x: f64,
    mant: Vec<f64>,
    riccati: Vec<f64>,
    exp: Vec<i64>,
}

impl BesselSeries {
    /// j_l(x), l = 0..=lmax.
    pub fn regular(lmax: usize, x: f64) -> Result<Self> {
        check_args(lmax, x)?;
        let top = lmax + 1;
        let big = top.max(x.ceil() as usize);
        // the minimal solution must dominate before reaching max(l, x):
        // suppression across the turning region grows like m^{3/2} / x^{1/2}
        let start = big + 20 + (10.0 * (big as f64).cbrt()).ceil() as usize;

        let mut u = vec![0.0; top + 1];
        let mut e = vec![0i64; top + 1];
        let down = ldexp(1.0, -RESCALE_EXP);
        let limit = ldexp(1.0, RESCALE_EXP);
        let (mut hi, mut cur) = (0.0f64, 1.0f64);
        let mut off = 0i64;
        for l in (1..=start).rev() {
            let next = (2 * l + 1) as f64 / x * cur - hi;
            hi = cur;
            cur = next;
            if cur.abs() > limit {
                cur *= down;
                hi *= down;
                off += RESCALE_EXP;
            }
            if l - 1 <= top {
                u[l - 1] = cur;
                e[l - 1] = off;
            }
        }

        let (j0, j1) = (j0_exact(x), j1_exact(x));
        let big_e = e[0].max(e[1]);
        let a0 = ldexp(u[0], e[0] - big_e);
        let a1 = ldexp(u[1], e[1] - big_e);
        let norm = (j0 * a0 + j1 * a1) / (a0 * a0 + a1 * a1);

        let mut mant = Vec::with_capacity(lmax + 1);
        let mut riccati = Vec::with_capacity(lmax + 1);
        let mut exp = Vec::with_capacity(lmax + 1);
        for l in 0..=lmax {
            let next = ldexp(u[l + 1], e[l + 1] - e[l]);
            let r = (l + 1) as f64 * u[l] - x * next;
            let s = Scaled::new(u[l] * norm, e[l] - big_e);
            mant.push(s.mant);
            riccati.push(ldexp(r * norm, e[l] - big_e - s.exp));
            exp.push(s.exp);
        }
        Ok(BesselSeries { x, mant, riccati, exp })
    }

    /// y_l(x), l = 0..=lmax.
    pub fn irregular(lmax: usize, x: f64) -> Result<Self> {
        check_args(lmax, x)?;
        let (s, c) = x.sin_cos();
        let y0 = -c / x;
        let y1 = -(c + x * s) / (x * x);
        let mut u = Vec::with_capacity(lmax + 1);
        let mut e = Vec::with_capacity(lmax + 1);
        u.push(y0);
        e.push(0);
        if lmax >= 1 {
            u.push(y1);
            e.push(0);
        }
        let down = ldexp(1.0, -RESCALE_EXP);
        let limit = ldexp(1.0, RESCALE_EXP);
        let (mut lo, mut cur, mut off) = (y0, y1, 0i64);
        for l in 1..lmax {
            let mut next = (2 * l + 1) as f64 / x * cur - lo;
            lo = cur;
            if next.abs() > limit {
                next *= down;
                lo *= down;
                off += RESCALE_EXP;
            }
            cur = next;
            u.push(cur);
            e.push(off);
        }

        let mut mant = Vec::with_capacity(lmax + 1);
        let mut riccati = Vec::with_capacity(lmax + 1);
        let mut exp = Vec::with_capacity(lmax + 1);
        for l in 0..=lmax {
            let sc = Scaled::new(u[l], e[l]);
            // [x y_0]' = sin x; otherwise x y_{l-1} - l y_l, free of cancellation for l > x
            let r = if l == 0 {
                s
            } else {
                x * ldexp(u[l - 1], e[l - 1] - e[l]) - l as f64 * u[l]
            };
            mant.push(sc.mant);
            riccati.push(ldexp(r, e[l] - sc.exp));
            exp.push(sc.exp);
        }
        Ok(BesselSeries { x, mant, riccati, exp })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn lmax(&self) -> usize {
        self.mant.len() - 1
    }

    pub fn scaled(&self, l: usize) -> Scaled {
        Scaled {
            mant: self.mant[l],
            exp: self.exp[l],
        }
    }

    pub fn riccati_scaled(&self, l: usize) -> Scaled {
        Scaled {
            mant: self.riccati[l],
            exp: self.exp[l],
        }
    }

    /// Mantissas of f_l and [x f_l]' and their shared exponent.
    #[inline]
    pub fn parts(&self, l: usize) -> (f64, f64, i64) {
        (self.mant[l], self.riccati[l], self.exp[l])
    }

    /// f_l(x), flushed to zero below `FLUSH_THRESHOLD`.
    pub fn value(&self, l: usize) -> f64 {
        flush(self.scaled(l).to_f64())
    }

    /// [x f_l(x)]', flushed like `value`.
    pub fn riccati(&self, l: usize) -> f64 {
        flush(self.riccati_scaled(l).to_f64())
    }

    pub fn is_flushed(&self, l: usize) -> bool {
        self.value(l) == 0.0 && self.mant[l] != 0.0
    }

    /// First order whose value is flushed to zero, if any.
    pub fn first_flushed(&self) -> Option<usize> {
        (0..self.mant.len()).find(|&l| self.is_flushed(l))
    }
}

fn j0_exact(x: f64) -> f64 {
    if x < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn j1_exact(x: f64) -> f64 {
    if x < 1.0 {
        // x/3 sum_k (-x^2/2)^k / (k! (2k+3)!!/3)
        let q = -0.5 * x * x;
        let mut term = x / 3.0;
        let mut sum = term;
        for k in 0..30 {
            term *= q / ((k + 1) as f64 * (2 * k + 5) as f64);
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        let (s, c) = x.sin_cos();
        (s / x - c) / x
    }
}

/// Spherical Bessel function of the first kind j_l(x).
pub fn sph_bessel_j(l: usize, x: f64) -> Result<f64> {
    Ok(BesselSeries::regular(l, x)?.value(l))
}

/// Spherical Bessel function of the second kind y_l(x). Overflows to -inf
/// where |y_l(x)| exceeds the f64 range.
pub fn sph_bessel_y(l: usize, x: f64) -> Result<f64> {
    Ok(BesselSeries::irregular(l, x)?.value(l))
}

/// Riccati derivatives ([x j_l(x)]', [x y_l(x)]').
pub fn riccati_derivs(l: usize, x: f64) -> Result<(f64, f64)> {
    let j = BesselSeries::regular(l, x)?;
    let y = BesselSeries::irregular(l, x)?;
    Ok((j.riccati(l), y.riccati(l)))
}

/// j_l, y_l and their Riccati derivatives at one (l, x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselPair {
    pub j: f64,
    pub y: f64,
    /// [x j_l(x)]'
    pub jp: f64,
    /// [x y_l(x)]'
    pub yp: f64,
}

pub fn bessel_pair(l: usize, x: f64) -> Result<BesselPair> {
    let j = BesselSeries::regular(l, x)?;
    let y = BesselSeries::irregular(l, x)?;
    Ok(BesselPair {
        j: j.value(l),
        y: y.value(l),
        jp: j.riccati(l),
        yp: y.riccati(l),
    })
}

/// x^2 (j_l y_l' - j_l' y_l) - 1 with plain derivatives recovered from the
/// Riccati forms, evaluated in scaled arithmetic so it is defined for every
/// (l, x) in range.
pub fn wronskian_residual(j: &BesselSeries, y: &BesselSeries, l: usize) -> f64 {
    let x = j.x();
    let (jm, jr, je) = j.parts(l);
    let (ym, yr, ye) = y.parts(l);
    // x^2 (j (Y'-y)/x - (J'-j)/x y) = x (j Y' - J' y)
    let w = x * (jm * yr - jr * ym);
    ldexp(w, je + ye) - 1.0
}
