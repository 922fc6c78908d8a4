use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One};

use crate::ratio::big_to_f64;

/// Scalar used for probabilities: exact rationals or `f64`.
pub trait Probability: Num + Clone + PartialOrd + Debug + Send + Sync + 'static {
    const EXACT: bool;

    fn from_rational(r: &BigRational) -> Self;
    fn from_counts(num: u64, den: u64) -> Self;
    fn to_f64(&self) -> f64;

    /// Equality with the mode's tolerance.
    fn close_to(&self, other: &Self) -> bool;

    /// Whether a sum of `terms` probabilities equals one, allowing for the
    /// rounding of the summation itself in float mode.
    fn sums_to_one(&self, terms: usize) -> bool;

    fn powi(&self, n: usize) -> Self {
        num_traits::pow(self.clone(), n)
    }
}

/// Tolerance for floating-point normalization checks.
pub const FLOAT_TOLERANCE: f64 = 1e-12;

impl Probability for f64 {
    const EXACT: bool = false;

    fn from_rational(r: &BigRational) -> Self {
        big_to_f64(r)
    }

    fn from_counts(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn close_to(&self, other: &Self) -> bool {
        (self - other).abs() <= FLOAT_TOLERANCE
    }

    fn sums_to_one(&self, terms: usize) -> bool {
        (self - 1.0).abs() <= FLOAT_TOLERANCE + terms as f64 * f64::EPSILON
    }
}

impl Probability for BigRational {
    const EXACT: bool = true;

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn from_counts(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        big_to_f64(self)
    }

    fn close_to(&self, other: &Self) -> bool {
        self == other
    }

    fn sums_to_one(&self, _terms: usize) -> bool {
        self.is_one()
    }
}

/// `-sum p log2 p` over the given probabilities, with `0 log 0 = 0`.
pub fn shannon_entropy<'a, P: Probability>(probs: impl IntoIterator<Item = &'a P>) -> f64 {
    let mut h = 0.0;
    for p in probs {
        let v = p.to_f64();
        if v > 0.0 {
            h -= v * v.log2();
        }
    }
    h
}

/// Binary entropy `H(t) = -t log2 t - (1-t) log2 (1-t)`.
pub fn binary_entropy(t: f64) -> f64 {
    shannon_entropy(&[t, 1.0 - t])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_examples() {
        assert_eq!(shannon_entropy(&[0.5, 0.5]), 1.0);
        assert_eq!(shannon_entropy(&[1.0]), 0.0);
        let h = shannon_entropy(&[0.9, 0.1]);
        assert!((h - 0.468_995_593_589_281_1).abs() < 1e-12, "{h}");
    }

    #[test]
    fn normalization_slack_grows_with_the_number_of_terms() {
        let drift = 1.0 + 2e-12;
        assert!(!drift.sums_to_one(16));
        assert!(drift.sums_to_one(1 << 18));
        assert!(!(1.0 + 1e-9).sums_to_one(1 << 18));
        let third = BigRational::new(1.into(), 3.into());
        assert!(!(third.clone() + third.clone()).sums_to_one(2));
        assert!((third.clone() + third.clone() + third).sums_to_one(3));
    }

    #[test]
    fn tiny_rationals_convert() {
        let tiny = BigRational::new(BigInt::from(3), BigInt::from(1u8) << 1000usize);
        let v = Probability::to_f64(&tiny);
        assert!(v > 0.0 && v < 1e-300, "{v}");
        let third = BigRational::new(BigInt::from(1), BigInt::from(3));
        assert!((Probability::to_f64(&third) - 1.0 / 3.0).abs() < 1e-16);
    }
}
