use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::subset::FiniteSubset;

use super::prob::{shannon_entropy, Probability};

/// A probability distribution on names `Σ^K`.
///
/// Names are packed into a `u64` code, most significant coordinate first, in
/// base `labels`. Only names of positive probability are stored, sorted by
/// code.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<P> {
    width: usize,
    labels: u32,
    support: Option<FiniteSubset>,
    entries: Vec<(u64, P)>,
}

impl<P: Probability> Distribution<P> {
    /// Validates nonnegativity and normalization, then drops zero entries.
    pub fn from_codes(width: usize, labels: u32, entries: impl IntoIterator<Item = (u64, P)>) -> Result<Self> {
        if width == 0 {
            return Err(Error::usage("names must have at least one coordinate"));
        }
        if labels == 0 {
            return Err(Error::usage("alphabet must be nonempty"));
        }
        if (labels as f64).powi(width as i32) > u64::MAX as f64 {
            return Err(Error::usage("name space does not fit 64-bit codes"));
        }
        let limit = (labels as u64).checked_pow(width as u32);
        let mut merged: BTreeMap<u64, P> = BTreeMap::new();
        for (code, p) in entries {
            if limit.is_some_and(|l| code >= l) {
                return Err(Error::usage(format!("name code {code} out of range")));
            }
            if p < P::zero() {
                return Err(Error::usage("negative probability"));
            }
            let slot = merged.entry(code).or_insert_with(P::zero);
            *slot = slot.clone() + p;
        }
        let entries: Vec<(u64, P)> = merged.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        let total = entries.iter().fold(P::zero(), |acc, (_, p)| acc + p.clone());
        if !total.sums_to_one(entries.len()) {
            return Err(Error::usage(format!("probabilities sum to {:?}, not 1", total)));
        }
        Ok(Distribution {
            width,
            labels,
            support: None,
            entries,
        })
    }

    pub fn from_names(labels: u32, entries: impl IntoIterator<Item = (Vec<u32>, P)>) -> Result<Self> {
        let mut width = None;
        let mut coded = Vec::new();
        for (name, p) in entries {
            match width {
                None => width = Some(name.len()),
                Some(w) if w != name.len() => return Err(Error::usage("names of different lengths")),
                _ => {}
            }
            if let Some(&bad) = name.iter().find(|&&l| l >= labels) {
                return Err(Error::usage(format!("label {bad} outside an alphabet of {labels}")));
            }
            coded.push((encode(&name, labels), p));
        }
        Distribution::from_codes(width.ok_or_else(|| Error::usage("empty distribution"))?, labels, coded)
    }

    pub fn with_support(mut self, support: FiniteSubset) -> Result<Self> {
        if support.len() != self.width {
            return Err(Error::usage("support size differs from name length"));
        }
        self.support = Some(support);
        Ok(self)
    }

    /// The point mass on one name.
    pub fn point_mass(name: &[u32], labels: u32) -> Result<Self> {
        Distribution::from_names(labels, [(name.to_vec(), P::one())])
    }

    /// Uniform distribution on all of `Σ^width`.
    pub fn uniform(width: usize, labels: u32) -> Result<Self> {
        let count = (labels as u64)
            .checked_pow(width as u32)
            .filter(|&c| c <= 1 << 24)
            .ok_or_else(|| Error::usage("uniform name space too large to tabulate"))?;
        Distribution::from_codes(width, labels, (0..count).map(|c| (c, P::from_counts(1, count))))
    }

    /// `p^{⊗width}` for a single-letter distribution `p`.
    pub fn product(letter: &[P], width: usize) -> Result<Self> {
        let labels = letter.len() as u32;
        let count = (labels as u64)
            .checked_pow(width as u32)
            .filter(|&c| c <= 1 << 24)
            .ok_or_else(|| Error::usage("product name space too large to tabulate"))?;
        let entries = (0..count).map(|code| {
            let p = decode(code, width, labels)
                .iter()
                .fold(P::one(), |acc, &l| acc * letter[l as usize].clone());
            (code, p)
        });
        Distribution::from_codes(width, labels, entries)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn labels(&self) -> u32 {
        self.labels
    }

    pub fn support(&self) -> Option<&FiniteSubset> {
        self.support.as_ref()
    }

    /// Number of names with positive probability.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(u64, P)] {
        &self.entries
    }

    pub fn probabilities(&self) -> impl Iterator<Item = &P> {
        self.entries.iter().map(|(_, p)| p)
    }

    pub fn name(&self, code: u64) -> Vec<u32> {
        decode(code, self.width, self.labels)
    }

    pub fn code(&self, name: &[u32]) -> u64 {
        encode(name, self.labels)
    }

    pub fn probability(&self, name: &[u32]) -> P {
        let code = self.code(name);
        match self.entries.binary_search_by_key(&code, |(c, _)| *c) {
            Ok(i) => self.entries[i].1.clone(),
            Err(_) => P::zero(),
        }
    }

    /// Entropy in bits.
    pub fn entropy(&self) -> f64 {
        shannon_entropy(self.probabilities())
    }

    /// Entropy per coordinate, `H(p) / #K`.
    pub fn normalized_entropy(&self) -> f64 {
        self.entropy() / self.width as f64
    }

    /// Marginal on the coordinates at `positions`, in that order.
    pub fn marginal(&self, positions: &[usize]) -> Result<Distribution<P>> {
        if positions.iter().any(|&i| i >= self.width) {
            return Err(Error::usage("marginal coordinate out of range"));
        }
        let entries = self.entries.iter().map(|(code, p)| {
            let name = self.name(*code);
            let sub: Vec<u32> = positions.iter().map(|&i| name[i]).collect();
            (encode(&sub, self.labels), p.clone())
        });
        Distribution::from_codes(positions.len(), self.labels, entries)
    }

    /// Total variation distance to another distribution on the same names.
    pub fn total_variation(&self, other: &Distribution<P>) -> f64 {
        let mut a = self.entries.iter().peekable();
        let mut b = other.entries.iter().peekable();
        let mut sum = 0.0;
        loop {
            match (a.peek(), b.peek()) {
                (Some((ca, pa)), Some((cb, pb))) => {
                    if ca == cb {
                        sum += (pa.to_f64() - pb.to_f64()).abs();
                        a.next();
                        b.next();
                    } else if ca < cb {
                        sum += pa.to_f64();
                        a.next();
                    } else {
                        sum += pb.to_f64();
                        b.next();
                    }
                }
                (Some((_, pa)), None) => {
                    sum += pa.to_f64();
                    a.next();
                }
                (None, Some((_, pb))) => {
                    sum += pb.to_f64();
                    b.next();
                }
                (None, None) => break,
            }
        }
        sum / 2.0
    }

    /// Converts every probability to `f64`.
    pub fn to_float(&self) -> Distribution<f64> {
        Distribution {
            width: self.width,
            labels: self.labels,
            support: self.support.clone(),
            entries: self.entries.iter().map(|(c, p)| (*c, p.to_f64())).collect(),
        }
    }

    /// Renders a name: digits for alphabets up to ten labels, dot-separated otherwise.
    pub fn format_name(&self, code: u64) -> String {
        format_name(&self.name(code), self.labels)
    }
}

pub fn format_name(name: &[u32], labels: u32) -> String {
    if labels <= 10 {
        name.iter().map(|l| char::from_digit(*l, 10).unwrap()).collect()
    } else {
        name.iter().map(u32::to_string).collect::<Vec<_>>().join(".")
    }
}

/// Inverse of [`format_name`].
pub fn parse_name(text: &str) -> Result<Vec<u32>> {
    let bad = || Error::usage(format!("cannot parse name {text:?}"));
    if text.contains('.') {
        text.split('.').map(|t| t.parse::<u32>().map_err(|_| bad())).collect()
    } else {
        text.chars().map(|c| c.to_digit(10).ok_or_else(bad)).collect()
    }
}

pub(crate) fn encode(name: &[u32], labels: u32) -> u64 {
    name.iter().fold(0u64, |acc, &l| acc * labels as u64 + l as u64)
}

pub(crate) fn decode(mut code: u64, width: usize, labels: u32) -> Vec<u32> {
    let mut name = vec![0; width];
    for slot in name.iter_mut().rev() {
        *slot = (code % labels as u64) as u32;
        code /= labels as u64;
    }
    name
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn codes_round_trip() {
        let name = vec![2, 0, 1, 2];
        assert_eq!(decode(encode(&name, 3), 4, 3), name);
        assert_eq!(parse_name(&format_name(&name, 3)).unwrap(), name);
        assert_eq!(parse_name(&format_name(&[11, 0], 12)).unwrap(), vec![11, 0]);
    }

    #[test]
    fn rejects_unnormalized() {
        assert!(Distribution::from_names(2, [(vec![0], q(1, 2)), (vec![1], q(1, 3))]).is_err());
        assert!(Distribution::from_names(2, [(vec![0], 0.5), (vec![1], 0.5 + 1e-6)]).is_err());
        assert!(Distribution::from_names(2, [(vec![0], 1.5), (vec![1], -0.5)]).is_err());
    }

    #[test]
    fn product_sums_exactly_and_has_additive_entropy() {
        let d = Distribution::product(&[q(7, 10), q(3, 10)], 6).unwrap();
        let total = d.probabilities().fold(q(0, 1), |a, p| a + p.clone());
        assert_eq!(total, q(1, 1));
        let h1 = shannon_entropy(&[0.7, 0.3]);
        assert!((d.normalized_entropy() - h1).abs() < 1e-12);
    }

    #[test]
    fn marginals() {
        let d = Distribution::product(&[q(1, 4), q(3, 4)], 3).unwrap();
        let m = d.marginal(&[2]).unwrap();
        assert_eq!(m.probability(&[1]), q(3, 4));
    }

    #[test]
    fn uniform_and_point_mass() {
        let u: Distribution<f64> = Distribution::uniform(4, 2).unwrap();
        assert_eq!(u.len(), 16);
        assert!((u.entropy() - 4.0).abs() < 1e-12);
        let p: Distribution<f64> = Distribution::point_mass(&[1, 0, 1], 2).unwrap();
        assert_eq!(p.entropy(), 0.0);
    }
}
