#![allow(dead_code)]

use sonoflash_core::specfun::Scaled;

pub const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data");

/// Rows of a reference table, comment lines dropped.
pub fn rows(name: &str) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(format!("{DATA}/{name}")).unwrap();
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.split(',').map(|s| s.trim().to_string()).collect())
        .collect()
}

/// Decimal literal split into (mantissa, power of ten) so values beyond the
/// f64 range survive parsing.
pub fn decimal(s: &str) -> (f64, i64) {
    match s.find(['e', 'E']) {
        Some(i) => (s[..i].parse().unwrap(), s[i + 1..].parse().unwrap()),
        None => (s.parse().unwrap(), 0),
    }
}

/// value * 10^-p, applied in steps that never leave the f64 range.
pub fn scale_down_decimal(v: Scaled, p: i64) -> f64 {
    let mut s = v;
    let mut p = p;
    while p > 300 {
        s = s.mul(Scaled::from_f64(1e-300));
        p -= 300;
    }
    while p < -300 {
        s = s.mul(Scaled::from_f64(1e300));
        p += 300;
    }
    s.mul(Scaled::from_f64(10f64.powi(-p as i32))).to_f64()
}

/// Relative difference between a scaled value and a decimal reference.
pub fn rel_err_scaled(got: Scaled, reference: &str) -> f64 {
    let (m, p) = decimal(reference);
    let g = scale_down_decimal(got, p);
    if m == 0.0 {
        return g.abs();
    }
    ((g - m) / m).abs()
}

pub mod toy {
    //! Small instance for the factorization oracle: few l, coarse grids.

    use num_complex::Complex64;
    use sonoflash_core::engine::{density_prefactor, Kernel, Prepared, TauGrid};
    use sonoflash_core::modes::{aux_im, TruncationPolicy};
    use sonoflash_core::physpar::{MediumSpec, RunParams, SI};
    use sonoflash_core::profile::{make_lorentzian, BubbleProfile};
    use sonoflash_core::quad::Rule;

    pub const N: f64 = 1.3;
    pub const L_MAX: usize = 3;
    pub const GAMMA: f64 = 1e-15;

    pub fn profile() -> BubbleProfile {
        let p = RunParams::new(
            MediumSpec::Constant { n: N },
            1.2e-7,
            0.6e-7,
            GAMMA,
            40.0 * GAMMA,
            20.0 * GAMMA,
        )
        .unwrap();
        make_lorentzian(&p).unwrap()
    }

    pub fn grid(points: usize) -> TauGrid {
        let c = 20.0 * GAMMA;
        TauGrid::tapered(c - 6.0 * GAMMA, c + 6.0 * GAMMA, c, points, true, true).unwrap()
    }

    pub fn rule() -> Rule {
        Rule::composite(0.0, 6.0 / GAMMA, 1, 8)
    }

    pub fn prepared() -> Prepared {
        Prepared::from_parts(
            &profile(),
            grid(48),
            rule(),
            Kernel::ModeSum {
                policy: TruncationPolicy::fixed(L_MAX),
            },
            1e-6,
        )
    }

    /// ∫∫ dτ dτ' β β' e^{iΩ(τ-τ')} ℑ(ω, ω'; R(τ), R(τ')) on the same nodes,
    /// with ℑ taken from `aux_im` at each pair of times.
    pub fn double_time_kernel(omega: f64, omega_p: f64) -> f64 {
        let prof = profile();
        let g = grid(48);
        let policy = TruncationPolicy::fixed(L_MAX);
        let om = omega + omega_p;
        let mut total = Complex64::new(0.0, 0.0);
        for (&ta, &wa) in g.nodes().iter().zip(g.weights()) {
            let (ra, ba) = prof.radius_and_beta(ta);
            for (&tb, &wb) in g.nodes().iter().zip(g.weights()) {
                let (rb, bb) = prof.radius_and_beta(tb);
                let im = aux_im(omega, omega_p, ra / SI.c, rb / SI.c, N, &policy).unwrap();
                let phase = Complex64::from_polar(1.0, om * (ta - tb));
                total += wa * wb * ba * bb * phase * im;
            }
        }
        total.re
    }

    /// P(ω) from the double-time kernel and the same ω' rule.
    pub fn density_direct(omega: f64) -> f64 {
        let r = rule();
        let mut acc = 0.0;
        for (&wp, &w) in r.nodes.iter().zip(&r.weights) {
            acc += w * wp / ((omega + wp) * (omega + wp)) * double_time_kernel(omega, wp);
        }
        density_prefactor(N) * omega * omega * acc
    }
}
