//! Leading-order Debye forms in the oscillatory region x > l + 1/2.
//!
//! With nu = l + 1/2 and x = nu sec(b):
//!   j_l(x)       ~ cos(nu tan b - nu b - pi/4) / (nu sqrt(sec b tan b))
//!   [x j_l(x)]'  ~ -sqrt(tan b / sec b) sin(nu tan b - nu b - pi/4)
//! Accuracy degrades toward the turning point x -> nu, where the Airy-type
//! uniform expansion takes over (not implemented).

use std::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};

fn angle(l: usize, x: f64) -> Result<(f64, f64)> {
    let nu = l as f64 + 0.5;
    if !(x.is_finite() && x > nu) {
        return Err(Error::Domain(format!(
            "Debye form needs x > l + 1/2 = {nu}, got x = {x}"
        )));
    }
    Ok((nu, (nu / x).acos()))
}

fn phase(nu: f64, b: f64) -> f64 {
    nu * b.tan() - nu * b - FRAC_PI_4
}

pub fn debye_j(l: usize, x: f64) -> Result<f64> {
    let (nu, b) = angle(l, x)?;
    let sec = 1.0 / b.cos();
    Ok(phase(nu, b).cos() / (nu * (sec * b.tan()).sqrt()))
}

pub fn debye_riccati_jp(l: usize, x: f64) -> Result<f64> {
    let (nu, b) = angle(l, x)?;
    Ok(-(b.sin()).sqrt() * phase(nu, b).sin())
}
