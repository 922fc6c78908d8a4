//! Finite subsets of a group and the set algebra built on the group law.

use std::ops::Index;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};

/// A finite set of elements of one group, stored sorted and deduplicated.
///
/// The sort order is lexicographic on coordinates; [`FiniteSubset::position`]
/// is a binary search.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct FiniteSubset {
    #[serde(skip)]
    group: GroupSpec,
    elements: Vec<GroupElement>,
}

impl FiniteSubset {
    pub fn new(group: GroupSpec, elements: impl IntoIterator<Item = GroupElement>) -> Result<Self> {
        let mut elements: Vec<GroupElement> = elements.into_iter().collect();
        if let Some(bad) = elements.iter().find(|g| g.group() != group) {
            return Err(Error::MixedGroups {
                left: group,
                right: bad.group(),
            });
        }
        elements.sort_unstable();
        elements.dedup();
        Ok(FiniteSubset { group, elements })
    }

    pub(crate) fn from_sorted_unchecked(group: GroupSpec, elements: Vec<GroupElement>) -> Self {
        debug_assert!(elements.windows(2).all(|w| w[0] < w[1]));
        FiniteSubset { group, elements }
    }

    pub fn empty(group: GroupSpec) -> Self {
        FiniteSubset {
            group,
            elements: Vec::new(),
        }
    }

    pub fn singleton(g: GroupElement) -> Self {
        FiniteSubset {
            group: g.group(),
            elements: vec![g],
        }
    }

    pub fn identity(group: GroupSpec) -> Self {
        FiniteSubset::singleton(group.identity())
    }

    /// Builds a subset from raw coordinate tuples.
    pub fn from_coords<'a>(group: GroupSpec, coords: impl IntoIterator<Item = &'a [i64]>) -> Result<Self> {
        let elements = coords
            .into_iter()
            .map(|c| group.element(c))
            .collect::<Result<Vec<_>>>()?;
        FiniteSubset::new(group, elements)
    }

    /// The box `[lo_0, hi_0) x ... x [lo_{d-1}, hi_{d-1})` in coordinates.
    pub fn coordinate_box(group: GroupSpec, ranges: &[(i64, i64)]) -> Result<Self> {
        if ranges.len() != group.rank() {
            return Err(Error::usage(format!(
                "box over {group} needs {} ranges, got {}",
                group.rank(),
                ranges.len()
            )));
        }
        let mut out = vec![Vec::with_capacity(ranges.len())];
        for &(lo, hi) in ranges {
            let mut next = Vec::with_capacity(out.len() * (hi - lo).max(0) as usize);
            for prefix in &out {
                for v in lo..hi {
                    let mut p = prefix.clone();
                    p.push(v);
                    next.push(p);
                }
            }
            out = next;
        }
        // lexicographic generation order is already sorted
        let elements = out
            .iter()
            .map(|c| group.element(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(FiniteSubset::from_sorted_unchecked(group, elements))
    }

    /// `[0, side)^d` in a lattice.
    pub fn cube(group: GroupSpec, side: i64) -> Result<Self> {
        FiniteSubset::coordinate_box(group, &vec![(0, side); group.rank()])
    }

    pub fn group(&self) -> GroupSpec {
        self.group
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn iter(&self) -> std::slice::Iter<'_, GroupElement> {
        self.elements.iter()
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.position(g).is_some()
    }

    /// Index of `g` in the sorted element list.
    pub fn position(&self, g: &GroupElement) -> Option<usize> {
        self.elements.binary_search(g).ok()
    }

    pub fn contains_identity(&self) -> bool {
        self.contains(&self.group.identity())
    }

    pub fn is_subset(&self, other: &FiniteSubset) -> bool {
        self.group == other.group && self.elements.iter().all(|g| other.contains(g))
    }

    pub fn inverse(&self) -> FiniteSubset {
        let elements = self.elements.iter().map(GroupElement::inv);
        FiniteSubset::new(self.group, elements).expect("inverse stays in the group")
    }

    /// `K K^{-1}`; always contains the identity when `K` is nonempty.
    pub fn difference_set(&self) -> Result<FiniteSubset> {
        product_set(self, &self.inverse())
    }

    /// Right translate `S g = { s g : s in S }`.
    pub fn right_translate(&self, g: &GroupElement) -> Result<FiniteSubset> {
        let elements = self
            .elements
            .iter()
            .map(|s| s.mul(g))
            .collect::<Result<Vec<_>>>()?;
        FiniteSubset::new(self.group, elements)
    }

    /// Left translate `g S`.
    pub fn left_translate(&self, g: &GroupElement) -> Result<FiniteSubset> {
        let elements = self
            .elements
            .iter()
            .map(|s| g.mul(s))
            .collect::<Result<Vec<_>>>()?;
        FiniteSubset::new(self.group, elements)
    }

    pub fn union(&self, other: &FiniteSubset) -> Result<FiniteSubset> {
        self.same_group(other)?;
        FiniteSubset::new(self.group, self.elements.iter().chain(&other.elements).cloned())
    }

    /// Number of elements in exactly one of the two sets.
    pub fn symmetric_difference_len(&self, other: &FiniteSubset) -> usize {
        let only_self = self.elements.iter().filter(|g| !other.contains(g)).count();
        let only_other = other.elements.iter().filter(|g| !self.contains(g)).count();
        only_self + only_other
    }

    /// Largest coordinate spread `max_i (max x_i - min x_i)` over the set.
    pub fn coordinate_diameter(&self) -> i64 {
        let rank = self.group.rank();
        (0..rank)
            .map(|axis| {
                let coords = self.elements.iter().map(|g| g.coords()[axis]);
                let lo = coords.clone().min().unwrap_or(0);
                let hi = coords.max().unwrap_or(0);
                hi - lo
            })
            .max()
            .unwrap_or(0)
    }

    fn same_group(&self, other: &FiniteSubset) -> Result<()> {
        if self.group != other.group {
            return Err(Error::MixedGroups {
                left: self.group,
                right: other.group,
            });
        }
        Ok(())
    }
}

impl Index<usize> for FiniteSubset {
    type Output = GroupElement;

    fn index(&self, i: usize) -> &GroupElement {
        &self.elements[i]
    }
}

impl<'a> IntoIterator for &'a FiniteSubset {
    type Item = &'a GroupElement;
    type IntoIter = std::slice::Iter<'a, GroupElement>;

    fn into_iter(self) -> Self::IntoIter {
        self.elements.iter()
    }
}

/// `K F = { k f : k in K, f in F }`, deduplicated.
pub fn product_set(k: &FiniteSubset, f: &FiniteSubset) -> Result<FiniteSubset> {
    k.same_group(f)?;
    let mut out = Vec::with_capacity(k.len() * f.len());
    for a in k {
        for b in f {
            out.push(a.mul(b)?);
        }
    }
    FiniteSubset::new(k.group, out)
}

pub fn inv_set(k: &FiniteSubset) -> FiniteSubset {
    k.inverse()
}

pub fn diff_set(k: &FiniteSubset) -> Result<FiniteSubset> {
    k.difference_set()
}
