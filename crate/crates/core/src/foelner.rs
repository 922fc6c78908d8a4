//! Invariance of finite sets under a finite set of translations.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::GroupSpec;
use crate::ratio::{count_ratio, serde_ratio, Ratio};
use crate::subset::{product_set, FiniteSubset};

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    #[serde(with = "serde_ratio")]
    pub defect: Ratio,
    #[serde(with = "serde_ratio")]
    pub interior_fraction: Ratio,
    pub k: FiniteSubset,
    pub f: FiniteSubset,
}

impl InvarianceReport {
    pub fn new(f: &FiniteSubset, k: &FiniteSubset) -> Result<Self> {
        Ok(InvarianceReport {
            defect: invariance_defect(f, k)?,
            interior_fraction: interior_fraction(f, k)?,
            k: k.clone(),
            f: f.clone(),
        })
    }

    /// `(delta, K)`-invariance: defect strictly below `delta`.
    pub fn is_defect_invariant(&self, delta: Ratio) -> bool {
        self.defect < delta
    }

    /// `[K, delta]`-invariance: interior fraction strictly above `1 - delta`.
    pub fn is_interior_invariant(&self, delta: Ratio) -> bool {
        self.interior_fraction > Ratio::from_integer(1) - delta
    }
}

fn check_operands(f: &FiniteSubset, k: &FiniteSubset) -> Result<()> {
    if f.is_empty() {
        return Err(Error::usage("invariance of the empty set is undefined"));
    }
    if k.is_empty() {
        return Err(Error::usage("translation set K must be nonempty"));
    }
    if f.group() != k.group() {
        return Err(Error::MixedGroups {
            left: f.group(),
            right: k.group(),
        });
    }
    Ok(())
}

/// `#(K K^{-1} F Δ F) / #F`.
pub fn invariance_defect(f: &FiniteSubset, k: &FiniteSubset) -> Result<Ratio> {
    check_operands(f, k)?;
    let spread = product_set(&k.difference_set()?, f)?;
    Ok(count_ratio(spread.symmetric_difference_len(f), f.len()))
}

/// `#{g in F : K K^{-1} g ⊆ F} / #F`.
pub fn interior_fraction(f: &FiniteSubset, k: &FiniteSubset) -> Result<Ratio> {
    check_operands(f, k)?;
    Ok(count_ratio(interior_points(f, k)?.len(), f.len()))
}

/// Elements `g` of `F` whose whole neighbourhood `K K^{-1} g` lies in `F`.
pub fn interior_points(f: &FiniteSubset, k: &FiniteSubset) -> Result<FiniteSubset> {
    let diff = k.difference_set()?;
    let mut inside = Vec::new();
    'points: for g in f {
        for d in &diff {
            if !f.contains(&d.mul(g)?) {
                continue 'points;
            }
        }
        inside.push(g.clone());
    }
    FiniteSubset::new(f.group(), inside)
}

/// The standard Følner shape at scale `n`: `[0,n)^d` for lattices and
/// `[0,n) x [0,n) x [0,n^2)` for Heisenberg.
pub fn foelner_box(spec: GroupSpec, n: i64) -> Result<FiniteSubset> {
    if n < 1 {
        return Err(Error::usage("box scale must be at least 1"));
    }
    match spec {
        GroupSpec::Lattice { .. } => FiniteSubset::cube(spec, n),
        GroupSpec::Heisenberg3 => FiniteSubset::coordinate_box(spec, &[(0, n), (0, n), (0, n * n)]),
    }
}

/// Smallest `n <= max_n` whose box is both `(delta, K)`- and `[K, delta]`-invariant.
pub fn smallest_invariant_box(
    spec: GroupSpec,
    k: &FiniteSubset,
    delta: Ratio,
    max_n: i64,
) -> Result<Option<(i64, InvarianceReport)>> {
    for n in 1..=max_n {
        let report = InvarianceReport::new(&foelner_box(spec, n)?, k)?;
        if report.is_defect_invariant(delta) && report.is_interior_invariant(delta) {
            return Ok(Some((n, report)));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn z(d: u32) -> GroupSpec {
        GroupSpec::lattice(d).unwrap()
    }

    fn ints(v: impl IntoIterator<Item = i64>) -> FiniteSubset {
        let v: Vec<i64> = v.into_iter().collect();
        FiniteSubset::from_coords(z(1), v.iter().map(std::slice::from_ref)).unwrap()
    }

    fn pts(spec: GroupSpec, v: &[&[i64]]) -> FiniteSubset {
        FiniteSubset::from_coords(spec, v.iter().copied()).unwrap()
    }

    #[test]
    fn identity_translations_are_perfectly_invariant() {
        let f = ints([3, 9, -4, 0]);
        let k = FiniteSubset::identity(z(1));
        assert_eq!(invariance_defect(&f, &k).unwrap(), Ratio::from_integer(0));
        assert_eq!(interior_fraction(&f, &k).unwrap(), Ratio::from_integer(1));
    }

    #[test]
    fn interval_against_pair() {
        let f = ints(0..10);
        let k = ints([0, 1]);
        assert_eq!(invariance_defect(&f, &k).unwrap(), Ratio::new(2, 10));
        assert_eq!(interior_fraction(&f, &k).unwrap(), Ratio::new(8, 10));
    }

    #[test]
    fn square_interior_matches_brute_force() {
        let f = FiniteSubset::cube(z(2), 10).unwrap();
        let k = pts(z(2), &[&[0, 0], &[1, 0], &[0, 1]]);
        // KK^{-1} written out by hand: all differences of the three points.
        let offsets = [(0, 0), (1, 0), (0, 1), (-1, 0), (0, -1), (1, -1), (-1, 1)];
        let mut count = 0;
        for x in 0..10i64 {
            for y in 0..10i64 {
                if offsets.iter().all(|(dx, dy)| (0..10).contains(&(x + dx)) && (0..10).contains(&(y + dy))) {
                    count += 1;
                }
            }
        }
        assert_eq!(interior_fraction(&f, &k).unwrap(), Ratio::new(count, 100));
    }

    #[test]
    fn defect_decreases_with_box_size() {
        let k = pts(z(2), &[&[0, 0], &[1, 0], &[0, 1]]);
        let defects: Vec<Ratio> = [8, 16, 32, 64]
            .iter()
            .map(|&n| invariance_defect(&foelner_box(z(2), n).unwrap(), &k).unwrap())
            .collect();
        assert!(defects.windows(2).all(|w| w[1] < w[0]), "{defects:?}");
    }

    #[test]
    fn box_cardinalities() {
        assert_eq!(foelner_box(z(2), 4).unwrap().len(), 16);
        assert_eq!(foelner_box(GroupSpec::Heisenberg3, 4).unwrap().len(), 256);
    }

    #[test]
    fn heisenberg_boxes_become_invariant() {
        let h = GroupSpec::Heisenberg3;
        let k = FiniteSubset::new(h, h.generators().into_iter().chain([h.identity()])).unwrap();
        let defects: Vec<Ratio> = [4, 8, 16, 32]
            .iter()
            .map(|&n| invariance_defect(&foelner_box(h, n).unwrap(), &k).unwrap())
            .collect();
        assert!(defects.windows(2).all(|w| w[1] < w[0]), "{defects:?}");
    }

    #[test]
    fn empty_set_is_rejected() {
        let k = ints([0]);
        assert!(invariance_defect(&FiniteSubset::empty(z(1)), &k).is_err());
        assert!(interior_fraction(&FiniteSubset::empty(z(1)), &k).is_err());
    }

    #[test]
    fn smallest_box_search() {
        let k = ints([0, 1]);
        // [0,n) has defect 2/n and interior (n-2)/n; both beat 1/4 from n = 9.
        let (n, _) = smallest_invariant_box(z(1), &k, Ratio::new(1, 4), 100).unwrap().unwrap();
        assert_eq!(n, 9);
    }

    fn arb_pair() -> impl Strategy<Value = (FiniteSubset, FiniteSubset)> {
        let spec = prop_oneof![Just(z(2)), Just(GroupSpec::Heisenberg3)];
        spec.prop_flat_map(|s| {
            let coords = prop::collection::vec(-3i64..3, s.rank());
            (
                Just(s),
                prop::collection::vec(coords.clone(), 1..40),
                prop::collection::vec(coords, 1..4),
            )
        })
        .prop_map(|(s, f, k)| {
            (
                FiniteSubset::from_coords(s, f.iter().map(|c| c.as_slice())).unwrap(),
                FiniteSubset::from_coords(s, k.iter().map(|c| c.as_slice())).unwrap(),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn coarse_interior_bound((f, k) in arb_pair()) {
            let r = InvarianceReport::new(&f, &k).unwrap();
            let ksq = Ratio::from_integer((k.len() * k.len()) as i64);
            prop_assert!(r.interior_fraction >= Ratio::from_integer(1) - ksq * r.defect);
        }

        #[test]
        fn enlarging_k_never_raises_interior((f, k) in arb_pair(), extra in prop::collection::vec(-2i64..2, 3)) {
            let spec = f.group();
            let g = spec.element(&extra[..spec.rank()]).unwrap();
            let bigger = k.union(&FiniteSubset::singleton(g)).unwrap();
            prop_assert!(interior_fraction(&f, &bigger).unwrap() <= interior_fraction(&f, &k).unwrap());
        }

        #[test]
        fn interior_points_match_definition((f, k) in arb_pair()) {
            let diff = k.difference_set().unwrap();
            let members: BTreeSet<_> = f.iter().cloned().collect();
            let expected = f.iter().filter(|g| diff.iter().all(|d| members.contains(&d.mul(g).unwrap()))).count();
            prop_assert_eq!(interior_points(&f, &k).unwrap().len(), expected);
        }
    }
}
