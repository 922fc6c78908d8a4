//! Exact rational helpers shared by the set-counting modules.

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Ratio = Rational64;

/// Parses `"3/8"`, `"0.125"`, `"2"` or `"1e-3"` into an exact rational.
///
/// Decimal input is taken at face value, so `"0.1"` is exactly one tenth.
pub fn parse_big_rational(text: &str) -> Result<BigRational> {
    let text = text.trim();
    if text.is_empty() {
        return Err(Error::usage("empty rational literal"));
    }
    let bad = || Error::usage(format!("cannot parse {text:?} as a rational"));
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(Error::usage(format!("zero denominator in {text:?}")));
        }
        return Ok(BigRational::new(num, den));
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = text[pos + 1..].parse().map_err(|_| bad())?;
            (&text[..pos], exp)
        }
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut num: BigInt = all_digits.parse().map_err(|_| bad())?;
    if negative {
        num = -num;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    Ok(if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    })
}

/// Same as [`parse_big_rational`] but narrowed to 64-bit parts.
pub fn parse_ratio(text: &str) -> Result<Ratio> {
    let big = parse_big_rational(text)?;
    let num = big.numer().to_i64();
    let den = big.denom().to_i64();
    match (num, den) {
        (Some(n), Some(d)) => Ok(Ratio::new(n, d)),
        _ => Err(Error::usage(format!("{text:?} does not fit a 64-bit rational"))),
    }
}

pub fn ratio_to_f64(r: &Ratio) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn big_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `num/den` as a 64-bit rational; both are set cardinalities here.
pub(crate) fn count_ratio(num: usize, den: usize) -> Ratio {
    Ratio::new(num as i64, den as i64)
}

pub fn format_ratio(r: &Ratio) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub(crate) mod serde_ratio {
    use super::{format_ratio, Ratio};
    use serde::Serializer;

    pub fn serialize<S: Serializer>(r: &Ratio, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_ratio(r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_literals_are_exact() {
        assert_eq!(parse_ratio("0.1").unwrap(), Ratio::new(1, 10));
        assert_eq!(parse_ratio("1/8").unwrap(), Ratio::new(1, 8));
        assert_eq!(parse_ratio("-2.50").unwrap(), Ratio::new(-5, 2));
        assert_eq!(parse_ratio("25e-2").unwrap(), Ratio::new(1, 4));
        assert_eq!(parse_ratio("3").unwrap(), Ratio::new(3, 1));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_ratio("").is_err());
        assert!(parse_ratio("1/0").is_err());
        assert!(parse_ratio("abc").is_err());
        assert!(parse_ratio(".").is_err());
    }
}
