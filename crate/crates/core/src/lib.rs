//! Numerical core for the photon-pair emission of a collapsing spherical
//! cavity in a dielectric: special functions, mode normalization, force
//! factors, bubble profiles, the mode-sum spectrum engine and the
//! short-wavelength closed forms.

// `!(a <= b)` is used on purpose so that NaN fails the checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod engine;
pub mod error;
pub mod modes;
pub mod physpar;
pub mod profile;
pub mod quad;
pub mod selftest;
pub mod specfun;
pub mod sum;

pub use error::{Error, Result};
