//! Mode normalization of the dielectric-sphere problem and the per-l force
//! factors whose bilinear sum is the auxiliary function ℑ.
//!
//! Conventions, with x = kR and primes denoting Riccati derivatives
//! [x f(x)]':
//!
//! ```text
//! N_TE = j(x) [nx j(nx)]' - j(nx) [x j(x)]'
//! D_TE = y(nx) [x j(x)]'  - j(x) [nx y(nx)]'
//! N_TM = j(x) [nx j(nx)]' - n^2 j(nx) [x j(x)]'
//! D_TM = n^2 y(nx) [x j(x)]' - j(x) [nx y(nx)]'
//! S^-1 = 1 / (x_pol (-D - iN)),  x_pol = nx (TE), x (TM)
//! tan δ = N / D
//! ```
//!
//! At n = 1 the Wronskian gives N = 0, D = -1/x and S^-1 = 1.
//!
//! The force factor F_l(k, k', R) = S^-1(kR) S^-1(k'R) B_l(kR, k'R) with
//!
//! ```text
//! B_TE = l(l+1) j(kR) j(k'R) + [kR j(kR)]' [k'R j(k'R)]'
//! B_TM = (kk'R^2 - l(l+1)) j(kR) j(k'R)
//! ```
//!
//! The τ-independent factors (-1)^l/(kk') and (n/2π)(1 - 1/n^2)√(ωω') of
//! the matrix element are left out here; the spectrum prefactor in
//! `engine` carries them. With that split,
//!
//! ```text
//! ℑ = Σ_{l≥1} (2l+1) Σ_pol F_l(k,k',R_a) conj(F_l(k,k',R_b))
//! ```
//!
//! Everything is evaluated in scaled arithmetic: S^-1 grows like n^l and
//! j_l(kR) underflows long before their product does.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::scaled::{frexp, ldexp};
use crate::specfun::{BesselSeries, FLUSH_THRESHOLD, L_MAX_SUPPORTED};
use crate::sum::ComplexSum;

/// Short-wavelength coefficient c in ℑ ≈ c kk'R_aR_b as originally quoted.
pub const SW_COEFFICIENT_QUOTED: f64 = 1.16;

/// The same coefficient re-derived here: mean of ℑ/(kk'R^2) at coincident
/// kR = k'R ∈ {40, 50, 60, 70, 80}, n = 1 + 1e-4. The ratio is not constant
/// (it creeps up roughly logarithmically in kR); this is the band mean.
pub const SW_COEFFICIENT_REDERIVED: f64 = 1.44485;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Polarization {
    TE,
    TM,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::TE, Polarization::TM];
}

/// The four continuity combinations at one (l, n, x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuityFactors {
    pub n_te: f64,
    pub d_te: f64,
    pub n_tm: f64,
    pub d_tm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeNormalization {
    pub l: usize,
    pub pol: Polarization,
    pub n: f64,
    pub x: f64,
    /// S_l^-1; overflows to infinity only for n^l beyond the f64 range.
    pub s_inv: Complex64,
    /// atan2(N, D) in (-π, π].
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceFactor {
    pub value: Complex64,
    pub l: usize,
    pub pol: Polarization,
}

/// How the l-sum of ℑ is cut off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationPolicy {
    /// Initial l_max = ceil(factor * n * max argument) + margin.
    pub factor: f64,
    pub margin: usize,
    /// Converged when each of the last 5 terms is below rel_tol * |partial|.
    pub rel_tol: f64,
    /// l_max is doubled up to this cap before giving up.
    pub cap: usize,
    /// Use exactly this l_max, skipping the convergence test.
    pub fixed: Option<usize>,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            factor: 1.25,
            margin: 40,
            rel_tol: 1e-8,
            cap: L_MAX_SUPPORTED,
            fixed: None,
        }
    }
}

impl TruncationPolicy {
    pub fn fixed(l_max: usize) -> Self {
        TruncationPolicy {
            fixed: Some(l_max),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.factor.is_finite() && self.factor > 0.0) {
            return Err(Error::InvalidParams(format!(
                "l_policy.factor = {} must be > 0",
                self.factor
            )));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::InvalidParams(format!(
                "l_policy.rel_tol = {} must be in (0, 1)",
                self.rel_tol
            )));
        }
        if self.cap == 0 || self.cap > L_MAX_SUPPORTED {
            return Err(Error::InvalidParams(format!(
                "l_policy.cap = {} must be in [1, {L_MAX_SUPPORTED}]",
                self.cap
            )));
        }
        if let Some(l) = self.fixed {
            if l == 0 || l > L_MAX_SUPPORTED {
                return Err(Error::InvalidParams(format!("l_policy.fixed = {l} out of range")));
            }
        }
        Ok(())
    }

    /// First l_max to try for a largest medium-side argument `n_x`.
    pub fn initial_lmax(&self, n_x: f64) -> usize {
        if let Some(l) = self.fixed {
            return l;
        }
        let l = (self.factor * n_x).ceil() as usize + self.margin;
        l.clamp(5, self.cap)
    }

    /// Whether the trailing terms allow stopping. `mags` are |term| in
    /// ascending l.
    pub fn converged(&self, mags: &[f64], partial: f64) -> bool {
        if mags.len() < 5 {
            return false;
        }
        mags[mags.len() - 5..]
            .iter()
            .all(|&m| m <= self.rel_tol * partial || m == 0.0)
    }
}

/// Geometric extrapolation of the discarded tail from the last two terms.
pub fn geometric_tail(mags: &[f64]) -> f64 {
    let k = mags.len();
    if k < 2 {
        return f64::INFINITY;
    }
    let (a, b) = (mags[k - 2], mags[k - 1]);
    if b == 0.0 {
        return 0.0;
    }
    let q = b / a;
    if q.is_finite() && q < 1.0 {
        b * q / (1.0 - q)
    } else {
        f64::INFINITY
    }
}

/// Complex value with a detached binary exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledComplex {
    pub z: Complex64,
    pub exp: i64,
}

impl ScaledComplex {
    pub const ZERO: ScaledComplex = ScaledComplex {
        z: Complex64::new(0.0, 0.0),
        exp: 0,
    };

    pub fn new(z: Complex64, exp: i64) -> Self {
        let big = z.re.abs().max(z.im.abs());
        if big == 0.0 || !big.is_finite() {
            return ScaledComplex { z, exp: 0 };
        }
        let (_, e) = frexp(big);
        ScaledComplex {
            z: Complex64::new(ldexp(z.re, -e), ldexp(z.im, -e)),
            exp: exp + e,
        }
    }

    #[inline]
    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, o: ScaledComplex) -> Self {
        ScaledComplex::new(self.z * o.z, self.exp + o.exp)
    }

    #[inline]
    pub fn scale_real(self, m: f64, e: i64) -> Self {
        ScaledComplex::new(self.z * m, self.exp + e)
    }

    pub fn conj(self) -> Self {
        ScaledComplex {
            z: self.z.conj(),
            exp: self.exp,
        }
    }

    /// Value as f64 parts; components below the flush threshold become 0.
    pub fn to_complex(self) -> Complex64 {
        let f = |v: f64| {
            let r = ldexp(v, self.exp);
            if r.abs() < FLUSH_THRESHOLD {
                0.0
            } else {
                r
            }
        };
        Complex64::new(f(self.z.re), f(self.z.im))
    }
}

/// Bessel data for one (n, x) up to some l_max: j(x), j(nx), y(nx).
#[derive(Debug, Clone)]
pub struct ModeSeries {
    n: f64,
    x: f64,
    jx: BesselSeries,
    jnx: BesselSeries,
    ynx: BesselSeries,
}

fn check_n(n: f64) -> Result<()> {
    if !(n.is_finite() && n >= 1.0) {
        return Err(Error::Domain(format!(
            "refractive index n = {n} must be finite and >= 1"
        )));
    }
    Ok(())
}

impl ModeSeries {
    pub fn new(l_max: usize, n: f64, x: f64) -> Result<Self> {
        check_n(n)?;
        let nx = n * x;
        Ok(ModeSeries {
            n,
            x,
            jx: BesselSeries::regular(l_max, x)?,
            jnx: BesselSeries::regular(l_max, nx)?,
            ynx: BesselSeries::irregular(l_max, nx)?,
        })
    }

    pub fn l_max(&self) -> usize {
        self.jx.lmax()
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    /// (N, D) for one polarization as (mantissa, exponent) pairs.
    fn continuity_parts(&self, l: usize, pol: Polarization) -> ((f64, i64), (f64, i64)) {
        let (jm, jr, je) = self.jx.parts(l);
        let (am, ar, ae) = self.jnx.parts(l);
        let (ym, yr, ye) = self.ynx.parts(l);
        let w = match pol {
            Polarization::TE => 1.0,
            Polarization::TM => self.n * self.n,
        };
        let num = jm * ar - w * am * jr;
        let den = w * ym * jr - jm * yr;
        ((num, je + ae), (den, ye + je))
    }

    pub fn continuity(&self, l: usize) -> ContinuityFactors {
        let ((nte, nte_e), (dte, dte_e)) = self.continuity_parts(l, Polarization::TE);
        let ((ntm, ntm_e), (dtm, dtm_e)) = self.continuity_parts(l, Polarization::TM);
        ContinuityFactors {
            n_te: ldexp(nte, nte_e),
            d_te: ldexp(dte, dte_e),
            n_tm: ldexp(ntm, ntm_e),
            d_tm: ldexp(dtm, dtm_e),
        }
    }

    /// S^-1 and δ in scaled form.
    pub fn s_inv_scaled(&self, l: usize, pol: Polarization) -> Result<(ScaledComplex, f64)> {
        let ((nm, ne), (dm, de)) = self.continuity_parts(l, pol);
        if nm == 0.0 && dm == 0.0 {
            return Err(Error::DegenerateNormalization { l, x: self.x });
        }
        let e = if nm == 0.0 {
            de
        } else if dm == 0.0 {
            ne
        } else {
            ne.max(de)
        };
        let num = ldexp(nm, ne - e);
        let den = ldexp(dm, de - e);
        let x_pol = match pol {
            Polarization::TE => self.n * self.x,
            Polarization::TM => self.x,
        };
        let s = (Complex64::new(-den, -num) * x_pol).inv();
        Ok((ScaledComplex::new(s, -e), num.atan2(den)))
    }

    pub fn normalization(&self, l: usize, pol: Polarization) -> Result<ModeNormalization> {
        let (s, delta) = self.s_inv_scaled(l, pol)?;
        let z = Complex64::new(ldexp(s.z.re, s.exp), ldexp(s.z.im, s.exp));
        Ok(ModeNormalization {
            l,
            pol,
            n: self.n,
            x: self.x,
            s_inv: z,
            delta,
        })
    }

    /// j_l(x) and [x j_l(x)]' mantissas with their shared exponent.
    #[inline]
    pub fn interior(&self, l: usize) -> (f64, f64, i64) {
        self.jx.parts(l)
    }
}

/// F_l(k, k', R) from the series at kR (`a`) and k'R (`b`), scaled.
pub fn force_scaled(a: &ModeSeries, b: &ModeSeries, l: usize, pol: Polarization) -> Result<ScaledComplex> {
    let (ja, jpa, ea) = a.interior(l);
    let (jb, jpb, eb) = b.interior(l);
    let ll = (l * (l + 1)) as f64;
    let bracket = match pol {
        Polarization::TE => ll * ja * jb + jpa * jpb,
        Polarization::TM => (a.x() * b.x() - ll) * ja * jb,
    };
    if bracket == 0.0 {
        return Ok(ScaledComplex::ZERO);
    }
    let (sa, _) = a.s_inv_scaled(l, pol)?;
    let (sb, _) = b.s_inv_scaled(l, pol)?;
    Ok(sa.mul(sb).scale_real(bracket, ea + eb))
}

fn check_positive(what: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::Domain(format!("{what} = {v} must be finite and > 0")));
    }
    Ok(())
}

pub fn continuity_factors(l: usize, n: f64, x: f64) -> Result<ContinuityFactors> {
    Ok(ModeSeries::new(l, n, x)?.continuity(l))
}

pub fn normalization(l: usize, pol: Polarization, n: f64, x: f64) -> Result<ModeNormalization> {
    if l == 0 {
        return Err(Error::Domain("mode normalization needs l >= 1".into()));
    }
    ModeSeries::new(l, n, x)?.normalization(l, pol)
}

pub fn force_factor(l: usize, pol: Polarization, n: f64, k: f64, kp: f64, r: f64) -> Result<ForceFactor> {
    if l == 0 {
        return Err(Error::Domain("force factor needs l >= 1".into()));
    }
    check_positive("k", k)?;
    check_positive("k'", kp)?;
    check_positive("R", r)?;
    let a = ModeSeries::new(l, n, k * r)?;
    let b = ModeSeries::new(l, n, kp * r)?;
    Ok(ForceFactor {
        value: force_scaled(&a, &b, l, pol)?.to_complex(),
        l,
        pol,
    })
}

/// ℑ with the l_max that was finally used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxSum {
    pub value: Complex64,
    pub l_max: usize,
}

/// The auxiliary function ℑ(k, k'; R_a, R_b).
pub fn aux_im(k: f64, kp: f64, ra: f64, rb: f64, n: f64, trunc: &TruncationPolicy) -> Result<Complex64> {
    Ok(aux_im_detailed(k, kp, ra, rb, n, trunc)?.value)
}

pub fn aux_im_detailed(k: f64, kp: f64, ra: f64, rb: f64, n: f64, trunc: &TruncationPolicy) -> Result<AuxSum> {
    check_positive("k", k)?;
    check_positive("k'", kp)?;
    check_positive("R_a", ra)?;
    check_positive("R_b", rb)?;
    check_n(n)?;
    trunc.validate()?;
    let top = n * k.max(kp) * ra.max(rb);
    let mut l_max = trunc.initial_lmax(top);
    loop {
        let series = |x: f64| ModeSeries::new(l_max, n, x);
        let (a1, a2) = (series(k * ra)?, series(kp * ra)?);
        let (b1, b2) = if ra == rb {
            (a1.clone(), a2.clone())
        } else {
            (series(k * rb)?, series(kp * rb)?)
        };
        let mut acc = ComplexSum::new();
        let mut mags = Vec::with_capacity(l_max);
        for l in 1..=l_max {
            let mut term = ComplexSum::new();
            for pol in Polarization::BOTH {
                let fa = force_scaled(&a1, &a2, l, pol)?;
                let fb = force_scaled(&b1, &b2, l, pol)?;
                term.add(fa.mul(fb.conj()).to_complex());
            }
            let t = term.value() * (2 * l + 1) as f64;
            mags.push(t.norm());
            acc.add(t);
        }
        let value = acc.value();
        if trunc.fixed.is_some() || trunc.converged(&mags, value.norm()) {
            return Ok(AuxSum { value, l_max });
        }
        if l_max >= trunc.cap {
            return Err(Error::Truncation {
                l_max,
                tail_estimate: geometric_tail(&mags),
                partial: value.norm(),
            });
        }
        l_max = (2 * l_max).min(trunc.cap);
    }
}

/// Short-wavelength form c kk'R_aR_b with the originally quoted c = 1.16.
pub fn aux_im_sw(k: f64, kp: f64, ra: f64, rb: f64) -> f64 {
    aux_im_sw_with(SW_COEFFICIENT_QUOTED, k, kp, ra, rb)
}

/// Short-wavelength form with an explicit coefficient.
pub fn aux_im_sw_with(coefficient: f64, k: f64, kp: f64, ra: f64, rb: f64) -> f64 {
    coefficient * k * kp * ra * rb
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn born_limit_is_exact_identity() {
        for pol in Polarization::BOTH {
            let m = normalization(3, pol, 1.0, 5.0).unwrap();
            assert!((m.s_inv - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            assert_eq!(m.delta.abs().min((m.delta.abs() - std::f64::consts::PI).abs()), 0.0);
        }
        let c = continuity_factors(4, 1.0, 2.5).unwrap();
        assert_eq!(c.n_te, 0.0);
        assert_eq!(c.n_tm, 0.0);
        assert!((c.d_te + 1.0 / 2.5).abs() < 1e-14);
    }

    #[test]
    fn tm_bracket_root_vanishes() {
        let f = force_factor(1, Polarization::TM, 1.3, 0.8, 2.5, 1.0).unwrap();
        assert_eq!(f.value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn force_at_n1_is_the_bare_bracket() {
        let (a, b, l) = (3.0, 4.0, 2usize);
        let ja = crate::specfun::bessel_pair(l, a).unwrap();
        let jb = crate::specfun::bessel_pair(l, b).unwrap();
        let te = 6.0 * ja.j * jb.j + ja.jp * jb.jp;
        let tm = (a * b - 6.0) * ja.j * jb.j;
        let fte = force_factor(l, Polarization::TE, 1.0, a, b, 1.0).unwrap().value;
        let ftm = force_factor(l, Polarization::TM, 1.0, a, b, 1.0).unwrap().value;
        assert!((fte - te).norm() < 1e-13);
        assert!((ftm - tm).norm() < 1e-13);
    }

    #[test]
    fn large_order_products_stay_finite() {
        // S^-1 ~ n^l would overflow on its own at l = 3000, n = 2
        let a = ModeSeries::new(3000, 2.0, 1500.0).unwrap();
        let f = force_scaled(&a, &a, 3000, Polarization::TE).unwrap();
        assert!(f.to_complex().norm().is_finite());
    }

    #[test]
    fn rejects_bad_arguments() {
        let p = TruncationPolicy::default();
        assert!(aux_im(0.0, 1.0, 1.0, 1.0, 1.3, &p).is_err());
        assert!(aux_im(1.0, 1.0, 1.0, 1.0, 0.9, &p).is_err());
        assert!(normalization(0, Polarization::TE, 1.3, 1.0).is_err());
    }

    #[test]
    fn sw_form_is_a_plain_product() {
        assert_eq!(aux_im_sw(1.0, 1.0, 1.0, 1.0), 1.16);
        assert_eq!(aux_im_sw(2e7, 1e7, 1e-5, 1e-5), 1.16 * 2e7 * 1e7 * 1e-5 * 1e-5);
        assert_eq!(aux_im_sw(1.0, 1.0, 2.0, 1.0), 2.0 * aux_im_sw(1.0, 1.0, 1.0, 1.0));
    }
}
