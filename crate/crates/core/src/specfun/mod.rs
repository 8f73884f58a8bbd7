//! Spherical Bessel functions, Riccati derivatives and Debye asymptotics.

mod bessel;
mod debye;
pub mod scaled;

pub use bessel::{
    bessel_pair, riccati_derivs, sph_bessel_j, sph_bessel_y, wronskian_residual, BesselPair, BesselSeries,
    FLUSH_THRESHOLD, L_MAX_SUPPORTED,
};
pub use debye::{debye_j, debye_riccati_jp};
pub use scaled::Scaled;
