//! Floating values with a detached binary exponent.
//!
//! Spherical Bessel values span thousands of decades for the orders the mode
//! sums reach; products such as j_l(x) y_l(nx) are O(1) even when the factors
//! are not representable as f64. `Scaled` keeps value = mant * 2^exp.

/// m * 2^e, exact for every representable result.
pub fn ldexp(m: f64, e: i64) -> f64 {
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    let mut m = m;
    let mut e = e;
    while e > 1000 {
        m *= f64::from_bits(((1023 + 1000) as u64) << 52);
        e -= 1000;
        if m.is_infinite() {
            return m;
        }
    }
    while e < -1000 {
        m *= f64::from_bits(((1023 - 1000) as u64) << 52);
        e += 1000;
        if m == 0.0 {
            return m;
        }
    }
    m * f64::from_bits(((1023 + e) as u64) << 52)
}

/// Split m into (f, e) with |f| in [0.5, 1) and m = f * 2^e.
pub fn frexp(m: f64) -> (f64, i64) {
    if m == 0.0 || !m.is_finite() {
        return (m, 0);
    }
    let (m, bias) = if m.abs() < f64::MIN_POSITIVE {
        (m * f64::from_bits((1023 + 64) << 52), -64)
    } else {
        (m, 0)
    };
    let bits = m.to_bits();
    let raw = ((bits >> 52) & 0x7ff) as i64;
    let e = raw - 1022;
    let f = f64::from_bits((bits & !(0x7ff << 52)) | (1022 << 52));
    (f, e + bias)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub mant: f64,
    pub exp: i64,
}

impl Scaled {
    pub const ZERO: Scaled = Scaled { mant: 0.0, exp: 0 };

    pub fn new(mant: f64, exp: i64) -> Self {
        let (f, e) = frexp(mant);
        Scaled { mant: f, exp: exp + e }
    }

    pub fn from_f64(v: f64) -> Self {
        Scaled::new(v, 0)
    }

    pub fn to_f64(self) -> f64 {
        ldexp(self.mant, self.exp)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, o: Scaled) -> Scaled {
        Scaled::new(self.mant * o.mant, self.exp + o.exp)
    }

    /// log10 |value|, -inf for zero.
    pub fn log10_abs(self) -> f64 {
        if self.mant == 0.0 {
            return f64::NEG_INFINITY;
        }
        self.mant.abs().log10() + self.exp as f64 * std::f64::consts::LOG10_2
    }
}
