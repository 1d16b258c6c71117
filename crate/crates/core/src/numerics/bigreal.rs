use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::ops::Pow;
use rug::{Assign, Float, Integer};

use crate::error::{Error, Result};

/// Smallest mantissa size accepted anywhere in the crate.
pub const MIN_PRECISION: u32 = 64;

/// Working precision used when the caller does not choose one.
pub const DEFAULT_PRECISION: u32 = 320;

/// Arbitrary-precision real number with a fixed mantissa size.
///
/// Arithmetic between two `BigReal`s rounds to nearest at the precision of the
/// left operand. Mixing precisions is a logic error; the matrix layer checks it.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct BigReal(pub(crate) Float);

pub fn check_precision(prec: u32) -> Result<()> {
    if prec < MIN_PRECISION {
        return Err(Error::PrecisionTooLow(prec));
    }
    Ok(())
}

impl BigReal {
    pub fn zero(prec: u32) -> Self {
        BigReal(Float::with_val(prec, 0))
    }

    pub fn one(prec: u32) -> Self {
        BigReal(Float::with_val(prec, 1))
    }

    pub fn from_f64(value: f64, prec: u32) -> Self {
        BigReal(Float::with_val(prec, value))
    }

    pub fn from_i64(value: i64, prec: u32) -> Self {
        BigReal(Float::with_val(prec, value))
    }

    pub fn from_u64(value: u64, prec: u32) -> Self {
        BigReal(Float::with_val(prec, value))
    }

    /// Parses a decimal literal, rounding to nearest.
    pub fn parse_decimal(text: &str, prec: u32) -> Result<Self> {
        let parsed = Float::parse(text)
            .map_err(|e| Error::InvalidConfig(format!("bad decimal `{text}`: {e}")))?;
        Ok(BigReal(Float::with_val(prec, parsed)))
    }

    pub fn from_float(value: Float) -> Self {
        BigReal(value)
    }

    pub fn as_float(&self) -> &Float {
        &self.0
    }

    pub fn into_float(self) -> Float {
        self.0
    }

    pub fn precision(&self) -> u32 {
        self.0.prec()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    pub fn is_sign_negative(&self) -> bool {
        self.0.is_sign_negative() && !self.0.is_zero()
    }

    /// Returns `self` unchanged if finite, otherwise a `NonFinite` error.
    pub fn checked(self, context: &'static str) -> Result<Self> {
        if self.0.is_finite() {
            Ok(self)
        } else {
            Err(Error::NonFinite(context))
        }
    }

    pub fn abs(&self) -> Self {
        BigReal(Float::with_val(self.precision(), self.0.abs_ref()))
    }

    pub fn sqrt(&self) -> Self {
        BigReal(Float::with_val(self.precision(), self.0.sqrt_ref()))
    }

    pub fn ln(&self) -> Self {
        BigReal(Float::with_val(self.precision(), self.0.ln_ref()))
    }

    pub fn exp(&self) -> Self {
        BigReal(Float::with_val(self.precision(), self.0.exp_ref()))
    }

    pub fn powi(&self, exponent: i32) -> Self {
        BigReal(Float::with_val(self.precision(), (&self.0).pow(exponent)))
    }

    pub fn pow(&self, exponent: &BigReal) -> Self {
        BigReal(Float::with_val(
            self.precision(),
            (&self.0).pow(&exponent.0),
        ))
    }

    pub fn max<'a>(&'a self, other: &'a BigReal) -> &'a BigReal {
        if other.0 > self.0 {
            other
        } else {
            self
        }
    }

    /// `2^exponent` at the given precision (exact).
    pub fn pow2(exponent: i32, prec: u32) -> Self {
        let mut f = Float::with_val(prec, 1);
        f <<= exponent;
        BigReal(f)
    }

    /// Golden ratio (1 + √5)/2.
    pub fn golden_ratio(prec: u32) -> Self {
        let mut f = Float::with_val(prec, 5);
        f.sqrt_mut();
        f += 1;
        f /= 2;
        BigReal(f)
    }

    /// Catalan's constant.
    pub fn catalan(prec: u32) -> Self {
        BigReal(Float::with_val(prec, rug::float::Constant::Catalan))
    }

    pub fn pi(prec: u32) -> Self {
        BigReal(Float::with_val(prec, rug::float::Constant::Pi))
    }

    /// Number of decimal digits the precision can support.
    pub fn decimal_digits(prec: u32) -> usize {
        (f64::from(prec) * std::f64::consts::LOG10_2).floor() as usize
    }

    /// Decimal rendering with `digits` significant digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        if self.0.is_zero() {
            return "0".to_string();
        }
        let s = self.0.to_string_radix(10, Some(digits.max(1)));
        normalise_exponent(&s)
    }

    /// Decimal rendering with `places` digits after the decimal point.
    pub fn to_fixed(&self, places: usize) -> String {
        let int_digits = match self.0.get_exp() {
            Some(e) if e > 0 => (f64::from(e) * std::f64::consts::LOG10_2).ceil() as usize + 1,
            _ => 1,
        };
        let rendered = self.0.to_string_radix(10, Some(int_digits + places + 2));
        let plain = expand_exponent(&rendered);
        truncate_places(&plain, places)
    }

    /// Exact encoding as a hexadecimal significand and a binary exponent.
    pub fn to_hex_pair(&self) -> (String, i32) {
        match self.0.to_integer_exp() {
            Some((sig, exp)) => (sig.to_string_radix(16), exp),
            None => ("0".to_string(), 0),
        }
    }

    pub fn from_hex_pair(significand: &str, exponent: i32, prec: u32) -> Result<Self> {
        let sig = Integer::from_str_radix(significand, 16)
            .map_err(|e| Error::Checkpoint(format!("bad significand `{significand}`: {e}")))?;
        if sig.significant_bits() > prec {
            return Err(Error::Checkpoint(format!(
                "significand `{significand}` needs more than {prec} bits"
            )));
        }
        let mut f = Float::with_val(prec, sig);
        f <<= exponent;
        Ok(BigReal(f))
    }

    pub fn cmp_abs(&self, other: &BigReal) -> Ordering {
        self.0.cmp_abs(&other.0).unwrap_or(Ordering::Equal)
    }

    pub fn set_from(&mut self, other: &BigReal) {
        self.0.assign(&other.0);
    }
}

// MPFR prints `d.ddd…e±x`; callers expect a conventional `e` exponent.
fn normalise_exponent(s: &str) -> String {
    s.replace('@', "e")
}

fn expand_exponent(s: &str) -> String {
    let s = normalise_exponent(s);
    let (mantissa, exp) = match s.split_once('e') {
        Some((m, e)) => (m.to_string(), e.parse::<i64>().unwrap_or(0)),
        None => (s.clone(), 0),
    };
    let negative = mantissa.starts_with('-');
    let body = mantissa.trim_start_matches('-');
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    let digits: String = format!("{int_part}{frac_part}");
    let point = int_part.len() as i64 + exp;
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if point <= 0 {
        out.push_str("0.");
        out.push_str(&"0".repeat((-point) as usize));
        out.push_str(&digits);
    } else if point as usize >= digits.len() {
        out.push_str(&digits);
        out.push_str(&"0".repeat(point as usize - digits.len()));
    } else {
        out.push_str(&digits[..point as usize]);
        out.push('.');
        out.push_str(&digits[point as usize..]);
    }
    out
}

fn truncate_places(plain: &str, places: usize) -> String {
    match plain.split_once('.') {
        Some((int_part, frac)) => {
            let mut frac: String = frac.chars().take(places).collect();
            while frac.len() < places {
                frac.push('0');
            }
            if places == 0 {
                int_part.to_string()
            } else {
                format!("{int_part}.{frac}")
            }
        }
        None => {
            if places == 0 {
                plain.to_string()
            } else {
                format!("{plain}.{}", "0".repeat(places))
            }
        }
    }
}

impl fmt::Debug for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BigReal({})", self.to_decimal(30))
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(20);
        f.write_str(&self.to_decimal(digits))
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl<'a> $trait<&'a BigReal> for &'a BigReal {
            type Output = BigReal;
            fn $method(self, rhs: &'a BigReal) -> BigReal {
                BigReal(Float::with_val(self.precision(), &self.0 $op &rhs.0))
            }
        }
        impl $trait<BigReal> for BigReal {
            type Output = BigReal;
            fn $method(self, rhs: BigReal) -> BigReal {
                (&self).$method(&rhs)
            }
        }
        impl<'a> $trait<&'a BigReal> for BigReal {
            type Output = BigReal;
            fn $method(self, rhs: &'a BigReal) -> BigReal {
                (&self).$method(rhs)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);
binop!(Div, div, /);

impl Neg for BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        BigReal(-self.0)
    }
}

impl Neg for &BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        BigReal(Float::with_val(self.precision(), -&self.0))
    }
}
