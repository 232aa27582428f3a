//! Extended-exponent complex arithmetic.
//!
//! Orbit values `f^i(z)` and derivative products `(f^i)'(z)` grow doubly
//! exponentially in `i` and leave the double-precision range after a few
//! iterations. [`ScaledComplex`] carries a complex mantissa with modulus
//! in `[1, 2)` together with a separate binary exponent, so products and
//! polynomial evaluations stay exact in the exponent and only round in
//! the mantissa.

use crate::error::{Error, Result};
use crate::poly::Poly;
use num_complex::Complex64;

/// Exponent window inside which a ratio is returned as a plain complex
/// number; beyond it the overflow / underflow sentinels are used.
pub const RATIO_EXP_WINDOW: i64 = 500;

/// Complex value `mantissa · 2^exp2` with `1 ≤ |mantissa| < 2`
/// (`mantissa = 0, exp2 = 0` represents zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledComplex {
    pub mantissa: Complex64,
    pub exp2: i64,
}

/// Multiply a complex number by `2^k` exactly, splitting `k` so the
/// intermediate power stays representable.
fn mul_pow2(c: Complex64, mut k: i64) -> Complex64 {
    let mut out = c;
    while k != 0 {
        let step = k.clamp(-900, 900);
        out *= 2f64.powi(step as i32);
        k -= step;
    }
    out
}

impl ScaledComplex {
    pub const ZERO: ScaledComplex = ScaledComplex {
        mantissa: Complex64::new(0.0, 0.0),
        exp2: 0,
    };

    pub const ONE: ScaledComplex = ScaledComplex {
        mantissa: Complex64::new(1.0, 0.0),
        exp2: 0,
    };

    pub fn is_zero(&self) -> bool {
        self.mantissa.norm_sqr() == 0.0
    }

    fn normalized(mut mantissa: Complex64, mut exp2: i64) -> ScaledComplex {
        if mantissa.norm_sqr() == 0.0 {
            return ScaledComplex::ZERO;
        }
        // coarse step first so subnormal inputs do not loop thousands of times
        let log2 = mantissa.norm().log2().floor() as i64;
        if log2 != 0 {
            mantissa = mul_pow2(mantissa, -log2);
            exp2 += log2;
        }
        while mantissa.norm_sqr() >= 4.0 {
            mantissa *= 0.5;
            exp2 += 1;
        }
        while mantissa.norm_sqr() < 1.0 {
            mantissa *= 2.0;
            exp2 -= 1;
        }
        ScaledComplex { mantissa, exp2 }
    }

    pub fn from_complex(c: Complex64) -> ScaledComplex {
        ScaledComplex::normalized(c, 0)
    }

    pub fn from_f64(x: f64) -> ScaledComplex {
        ScaledComplex::from_complex(Complex64::new(x, 0.0))
    }

    pub fn mul(self, other: ScaledComplex) -> ScaledComplex {
        if self.is_zero() || other.is_zero() {
            return ScaledComplex::ZERO;
        }
        ScaledComplex::normalized(self.mantissa * other.mantissa, self.exp2 + other.exp2)
    }

    pub fn add(self, other: ScaledComplex) -> ScaledComplex {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let (hi, lo) = if self.exp2 >= other.exp2 {
            (self, other)
        } else {
            (other, self)
        };
        let diff = hi.exp2 - lo.exp2;
        if diff > 1100 {
            return hi;
        }
        ScaledComplex::normalized(hi.mantissa + mul_pow2(lo.mantissa, -diff), hi.exp2)
    }

    pub fn powi(self, mut k: u32) -> ScaledComplex {
        let mut base = self;
        let mut acc = ScaledComplex::ONE;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(base);
            }
            base = base.mul(base);
            k >>= 1;
        }
        acc
    }

    /// Base-2 logarithm of the modulus; `-inf` for zero.
    pub fn mag_log2(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.mantissa.norm().log2() + self.exp2 as f64
        }
    }

    /// Plain complex value when the exponent fits the representable
    /// range; `None` otherwise.
    pub fn to_complex(&self) -> Option<Complex64> {
        if self.is_zero() {
            return Some(Complex64::new(0.0, 0.0));
        }
        if self.exp2 > 1020 || self.exp2 < -1020 {
            return None;
        }
        Some(mul_pow2(self.mantissa, self.exp2))
    }
}

/// Ratio `x / y` as a plain complex number. Results whose binary exponent
/// exceeds [`RATIO_EXP_WINDOW`] come back as the infinity sentinel,
/// results below the window flush to zero. A zero denominator is a
/// domain error.
pub fn scaled_ratio_to_complex(x: ScaledComplex, y: ScaledComplex) -> Result<Complex64> {
    if y.is_zero() {
        return Err(Error::Domain("scaled ratio with zero denominator".into()));
    }
    if x.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let r = ScaledComplex::normalized(x.mantissa / y.mantissa, x.exp2 - y.exp2);
    if r.exp2 > RATIO_EXP_WINDOW {
        return Ok(Complex64::new(f64::INFINITY, f64::INFINITY));
    }
    if r.exp2 < -RATIO_EXP_WINDOW {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(mul_pow2(r.mantissa, r.exp2))
}

pub fn is_overflow_sentinel(c: Complex64) -> bool {
    c.re.is_infinite() || c.im.is_infinite()
}

/// Horner evaluation of `p` at a scaled point.
pub fn eval_poly_scaled(p: &Poly, w: ScaledComplex) -> ScaledComplex {
    let mut acc = ScaledComplex::ZERO;
    for &c in p.coeffs().iter().rev() {
        acc = acc.mul(w).add(ScaledComplex::from_complex(c));
    }
    acc
}
