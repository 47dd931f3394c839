//! Field abstraction shared by the exact and floating point code paths.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, FromPrimitive, Signed, ToPrimitive};

/// An ordered field used by the combinatorial parts of the library.
///
/// `f64` and `f32` compare against a small tolerance; `BigRational` is exact
/// and its tolerance is zero.
pub trait Scalar:
    Clone + Debug + Display + PartialOrd + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Absolute tolerance below which a value counts as zero.
    fn tolerance() -> Self;

    fn from_ratio(num: i64, den: i64) -> Self;

    fn is_negligible(&self) -> bool {
        self.abs() <= Self::tolerance()
    }

    fn approx_eq(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).is_negligible()
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-12
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
}

impl Scalar for f32 {
    fn tolerance() -> Self {
        1e-5
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f32 / den as f32
    }
}

impl Scalar for BigRational {
    fn tolerance() -> Self {
        BigRational::from_integer(BigInt::from(0))
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn is_negligible(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }
}

/// Real floating point types accepted by the special functions.
pub trait Real: Float + FloatConst + FromPrimitive + Debug + Send + Sync + 'static {
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable")
    }
}

impl Real for f64 {}
impl Real for f32 {}

/// Exact conversion of a finite `f64` to a rational.
pub fn rational_from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

/// Parses `"1/3"`, `"-2"`, or a decimal such as `"0.125"` / `"1e-3"` exactly.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let t = text.trim();
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if num_traits::Zero::is_zero(&d) {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().ok()?),
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: BigInt = format!("{int_part}{frac_part}0").parse::<BigInt>().ok()? / BigInt::from(10);
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut r = BigRational::from_integer(all);
    if scale >= 0 {
        r *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -r } else { r })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_rational("0.125"), Some(BigRational::from_ratio(1, 8)));
        assert_eq!(parse_rational("-1/3"), Some(BigRational::from_ratio(-1, 3)));
        assert_eq!(parse_rational("2.5e-1"), Some(BigRational::from_ratio(1, 4)));
        assert_eq!(parse_rational("7"), Some(BigRational::from_ratio(7, 1)));
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("1/0"), None);
    }

    #[test]
    fn tolerances() {
        assert!(1e-13f64.is_negligible());
        assert!(!BigRational::from_ratio(1, 1_000_000_000).is_negligible());
    }
}
