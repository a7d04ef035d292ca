//! Numeric abstraction shared by the ETFG, the BILP model and the solvers.
//!
//! Everything downstream of the task graph is generic over [`Scalar`]. Floats
//! (`f32`, `f64`) are fast; [`BigRational`] gives exact objective values so
//! that two solvers reaching the same optimum report bit-identical numbers.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, NumAssignOps, ToPrimitive};

/// Numeric type usable as a model coefficient.
pub trait Scalar:
    Num + NumAssignOps + Clone + PartialOrd + Debug + Display + Send + Sync + Sum + 'static
{
    /// Converts a finite `f64`. Exact types interpret the value as the
    /// shortest decimal that round-trips to it, so `0.12` becomes `3/25`.
    fn from_f64(x: f64) -> Self;

    fn to_f64(&self) -> f64;

    /// True when arithmetic is exact (no rounding).
    fn is_exact() -> bool {
        false
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }
}

impl Scalar for BigRational {
    fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "cannot represent {x} as a rational");
        decimal_to_rational(&format!("{x:e}"))
    }

    fn to_f64(&self) -> f64 {
        if let Some(v) = ToPrimitive::to_f64(self) {
            if v.is_finite() {
                return v;
            }
        }
        // numerator or denominator overflowed f64 on its own
        let n = self.numer().to_f64().unwrap_or(f64::NAN);
        let d = self.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    }

    fn is_exact() -> bool {
        true
    }
}

/// Parses `[-]digits[.digits][e[-]exp]` into an exact rational.
fn decimal_to_rational(s: &str) -> BigRational {
    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().expect("exponent")),
        None => (s, 0),
    };
    let negative = mantissa.starts_with('-');
    let mantissa = mantissa.trim_start_matches(['-', '+']);
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits = format!("{int_part}{frac_part}");
    let mut numer: BigInt = digits.parse().expect("mantissa digits");
    if negative {
        numer = -numer;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    }
}

/// `|a - b| <= tol * max(|a|, |b|, 1)` evaluated in `f64`.
pub fn rel_close<S: Scalar>(a: &S, b: &S, tol: f64) -> bool {
    let (a, b) = (a.to_f64(), b.to_f64());
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

pub(crate) fn abs<S: Scalar>(x: &S) -> S {
    if *x < S::zero() {
        S::zero() - x.clone()
    } else {
        x.clone()
    }
}

/// Relative gap `(upper - lower) / upper`, zero when `upper` is zero.
pub(crate) fn relative_gap<S: Scalar>(upper: &S, lower: &S) -> f64 {
    let diff = upper.clone() - lower.clone();
    if upper.is_zero() {
        return 0.0;
    }
    let g = (diff / abs(upper)).to_f64();
    g.max(0.0)
}

/// Helper for exact construction in tests and presets: `num / den`.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}
