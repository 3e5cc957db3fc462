use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedMul, One, Signed, ToPrimitive, Zero};

/// Numeric constant: exact rational while both operands stay rational and
/// nothing overflows, float otherwise.
#[derive(Clone, Copy, Debug)]
pub enum Number {
    Rational(Rational64),
    Float(f64),
}

impl Number {
    pub const ZERO: Number = Number::Rational(Rational64::new_raw(0, 1));
    pub const ONE: Number = Number::Rational(Rational64::new_raw(1, 1));

    pub fn int(n: i64) -> Number {
        Number::Rational(Rational64::from_integer(n))
    }

    pub fn ratio(n: i64, d: i64) -> Number {
        Number::Rational(Rational64::new(n, d))
    }

    pub fn float(x: f64) -> Number {
        // -0.0 and 0.0 must hash alike
        Number::Float(if x == 0.0 { 0.0 } else { x })
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Number::Rational(r) => r.to_f64().unwrap_or(f64::NAN),
            Number::Float(x) => x,
        }
    }

    pub fn is_zero(self) -> bool {
        match self {
            Number::Rational(r) => r.is_zero(),
            Number::Float(x) => x == 0.0,
        }
    }

    pub fn is_one(self) -> bool {
        match self {
            Number::Rational(r) => r.is_one(),
            Number::Float(x) => x == 1.0,
        }
    }

    pub fn is_negative(self) -> bool {
        match self {
            Number::Rational(r) => r.is_negative(),
            Number::Float(x) => x < 0.0,
        }
    }

    pub fn as_rational(self) -> Option<Rational64> {
        match self {
            Number::Rational(r) => Some(r),
            Number::Float(_) => None,
        }
    }

    pub fn abs(self) -> Number {
        match self {
            Number::Rational(r) => Number::Rational(r.abs()),
            Number::Float(x) => Number::float(x.abs()),
        }
    }

    /// Integer power. `None` for a zero base with a negative exponent.
    pub fn powi(self, k: i64) -> Option<Number> {
        if self.is_zero() && k < 0 {
            return None;
        }
        match self {
            Number::Rational(r) => {
                let base = if k < 0 { r.recip() } else { r };
                let mut acc = Some(Rational64::one());
                for _ in 0..k.unsigned_abs() {
                    acc = acc.and_then(|a| a.checked_mul(&base));
                }
                Some(match acc {
                    Some(v) => Number::Rational(v),
                    None => Number::float(r.to_f64().unwrap_or(f64::NAN).powi(k as i32)),
                })
            }
            Number::Float(x) => Some(Number::float(x.powi(k as i32))),
        }
    }

    fn rank(self) -> u8 {
        match self {
            Number::Rational(_) => 0,
            Number::Float(_) => 1,
        }
    }
}

impl PartialEq for Number {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Number::Rational(a), Number::Rational(b)) => a == b,
            (Number::Float(a), Number::Float(b)) => a.to_bits() == b.to_bits(),
            _ => false,
        }
    }
}

impl Eq for Number {}

impl Hash for Number {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Number::Rational(r) => {
                0u8.hash(state);
                r.numer().hash(state);
                r.denom().hash(state);
            }
            Number::Float(x) => {
                1u8.hash(state);
                x.to_bits().hash(state);
            }
        }
    }
}

impl Ord for Number {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Number::Rational(a), Number::Rational(b)) => a.cmp(b),
            (Number::Float(a), Number::Float(b)) => a.total_cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Number {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Number {
    /// Rationals print as `n` or `n/d`; floats always carry an exponent so
    /// that the parser reads them back as floats.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Rational(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Number::Rational(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Number::Float(x) => write!(f, "{:e}", x),
        }
    }
}

impl std::ops::Neg for Number {
    type Output = Number;

    fn neg(self) -> Number {
        match self {
            Number::Rational(r) => Number::Rational(-r),
            Number::Float(x) => Number::float(-x),
        }
    }
}

impl std::ops::Add for Number {
    type Output = Number;

    fn add(self, other: Number) -> Number {
        match (self, other) {
            (Number::Rational(a), Number::Rational(b)) => match a.checked_add(&b) {
                Some(c) => Number::Rational(c),
                None => Number::float(self.to_f64() + other.to_f64()),
            },
            _ => Number::float(self.to_f64() + other.to_f64()),
        }
    }
}

impl std::ops::Mul for Number {
    type Output = Number;

    fn mul(self, other: Number) -> Number {
        match (self, other) {
            (Number::Rational(a), Number::Rational(b)) => match a.checked_mul(&b) {
                Some(c) => Number::Rational(c),
                None => Number::float(self.to_f64() * other.to_f64()),
            },
            _ => Number::float(self.to_f64() * other.to_f64()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ops::{Add, Mul};

    #[test]
    fn rational_arithmetic_stays_exact() {
        let a = Number::ratio(1, 3);
        let b = Number::ratio(2, 3);
        assert_eq!(a.add(b), Number::ONE);
        assert_eq!(a.mul(Number::int(3)), Number::ONE);
        assert_eq!(Number::ratio(2, 3).powi(-2), Some(Number::ratio(9, 4)));
    }

    #[test]
    fn overflow_falls_back_to_float() {
        let big = Number::int(i64::MAX / 2);
        match big.mul(big) {
            Number::Float(x) => assert!(x > 1e36),
            other => panic!("expected float, got {other:?}"),
        }
    }

    #[test]
    fn zero_to_negative_power_is_undefined() {
        assert_eq!(Number::ZERO.powi(-1), None);
        assert_eq!(Number::ZERO.powi(0), Some(Number::ONE));
    }

    #[test]
    fn float_display_round_trips() {
        let x = Number::float(0.1);
        let s = x.to_string();
        assert!(s.contains('e'));
        assert_eq!(s.parse::<f64>().unwrap(), 0.1);
    }
}
