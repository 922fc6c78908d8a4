//! Spread and quasi-spread sets, and uniform set-valued functions.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{elements_from_json, enumerate, GroupElement, GroupSpec};
use crate::model::GroupAction;
use crate::ratio::{count_ratio, serde_ratio, Ratio};
use crate::subset::FiniteSubset;

/// Largest set size for which the maximum spread subset is found exactly.
pub const EXACT_SUBSET_LIMIT: usize = 16;

#[derive(Clone, Debug, Serialize)]
pub struct SpreadCertificate {
    pub pass: bool,
    /// First offending `(g1, g2)` with `g1 g2^{-1}` in `K`.
    pub worst_pair: Option<(GroupElement, GroupElement)>,
    pub offending_pairs: usize,
}

/// Whether `g1 g2^{-1}` avoids `K` for all distinct `g1, g2` in `S`.
pub fn is_k_spread(s: &FiniteSubset, k: &FiniteSubset) -> Result<SpreadCertificate> {
    if s.group() != k.group() {
        return Err(Error::MixedGroups {
            left: s.group(),
            right: k.group(),
        });
    }
    let mut worst_pair = None;
    let mut offending_pairs = 0;
    let elems = s.elements();
    for i in 0..elems.len() {
        for j in i + 1..elems.len() {
            for (a, b) in [(&elems[j], &elems[i]), (&elems[i], &elems[j])] {
                if k.contains(&a.mul(&b.inv())?) {
                    offending_pairs += 1;
                    worst_pair.get_or_insert_with(|| (a.clone(), b.clone()));
                }
            }
        }
    }
    Ok(SpreadCertificate {
        pass: offending_pairs == 0,
        worst_pair,
        offending_pairs,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SequenceSpreadReport {
    /// For each queried element, how many of the difference sets contain it.
    pub counts: Vec<(GroupElement, usize)>,
    pub max_count: usize,
    pub horizon: usize,
    /// Every non-identity queried element occurs in at most `horizon` sets.
    pub spreading: bool,
}

/// Counts, for each `g` in `window`, the sets `S_i S_i^{-1}` containing it.
pub fn sequence_spreads(sets: &[FiniteSubset], window: &FiniteSubset, horizon: usize) -> Result<SequenceSpreadReport> {
    let diffs = sets.iter().map(FiniteSubset::difference_set).collect::<Result<Vec<_>>>()?;
    let counts: Vec<(GroupElement, usize)> = window
        .iter()
        .map(|g| (g.clone(), diffs.iter().filter(|d| d.contains(g)).count()))
        .collect();
    let nontrivial = counts.iter().filter(|(g, _)| !g.is_identity());
    let max_count = nontrivial.clone().map(|(_, c)| *c).max().unwrap_or(0);
    Ok(SequenceSpreadReport {
        spreading: nontrivial.into_iter().all(|(_, c)| *c <= horizon),
        counts,
        max_count,
        horizon,
    })
}

/// A fixed enumeration of group elements whose prefixes define quasi-spreading.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "order", rename_all = "kebab-case")]
pub enum Listing {
    /// Word length, then lexicographic.
    Canonical { group: GroupSpec },
    /// Sup norm, then lexicographic (lattices only).
    SupNorm { group: GroupSpec },
}

impl Listing {
    pub fn canonical(group: GroupSpec) -> Self {
        Listing::Canonical { group }
    }

    pub fn group(&self) -> GroupSpec {
        match self {
            Listing::Canonical { group } | Listing::SupNorm { group } => *group,
        }
    }

    /// The first `n` listed elements.
    pub fn prefix(&self, n: usize) -> Result<FiniteSubset> {
        let group = self.group();
        let elems = match self {
            Listing::Canonical { .. } => enumerate(group, n)?,
            Listing::SupNorm { .. } => {
                if !group.is_lattice() {
                    return Err(Error::Unsupported("sup-norm listing needs a lattice".into()));
                }
                let d = group.rank() as u32;
                let mut radius = 0i64;
                while ((2 * radius + 1) as u128).pow(d) < n as u128 {
                    radius += 1;
                }
                let ball = FiniteSubset::cube(group, 2 * radius + 1)?
                    .left_translate(&group.element(&vec![-radius; d as usize])?)?;
                let mut elems = ball.elements().to_vec();
                elems.sort_by_cached_key(|g| (g.coords().iter().map(|c| c.abs()).max().unwrap_or(0), g.clone()));
                elems.truncate(n);
                elems
            }
        };
        FiniteSubset::new(group, elems)
    }
}

/// `x ↦ S(x) = {s_1(x), ..., s_k(x)}` on the points `0..num_points()` of a model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SetValuedFunction {
    group: GroupSpec,
    k: usize,
    /// `shifts[x][i] = s_i(x)`.
    shifts: Vec<Vec<GroupElement>>,
}

impl SetValuedFunction {
    pub fn new(group: GroupSpec, shifts: Vec<Vec<GroupElement>>) -> Result<Self> {
        let k = shifts.first().map_or(0, Vec::len);
        if k == 0 {
            return Err(Error::usage("set-valued function needs at least one point and one map"));
        }
        for (x, s) in shifts.iter().enumerate() {
            if s.len() != k {
                return Err(Error::usage(format!("point {x} has {} shifts, expected {k}", s.len())));
            }
            if let Some(g) = s.iter().find(|g| g.group() != group) {
                return Err(Error::MixedGroups {
                    left: group,
                    right: g.group(),
                });
            }
        }
        Ok(SetValuedFunction { group, k, shifts })
    }

    /// `S(x) = S` at every one of `points` points.
    pub fn constant(set: &[GroupElement], points: usize) -> Result<Self> {
        let group = set
            .first()
            .map(GroupElement::group)
            .ok_or_else(|| Error::usage("constant set must be nonempty"))?;
        SetValuedFunction::new(group, vec![set.to_vec(); points])
    }

    /// Parses `{"group": ..., "shifts": [[g, ...], ...]}`.
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let group: GroupSpec = serde_json::from_value(
            value.get("group").cloned().ok_or_else(|| Error::usage("missing \"group\""))?,
        )
        .map_err(|e| Error::usage(format!("bad group: {e}")))?;
        let rows = value
            .get("shifts")
            .and_then(|v| v.as_array())
            .ok_or_else(|| Error::usage("missing \"shifts\" array"))?;
        let shifts = rows
            .iter()
            .map(|row| elements_from_json(group, row))
            .collect::<Result<Vec<_>>>()?;
        SetValuedFunction::new(group, shifts)
    }

    pub fn group(&self) -> GroupSpec {
        self.group
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_points(&self) -> usize {
        self.shifts.len()
    }

    pub fn shifts_at(&self, x: usize) -> &[GroupElement] {
        &self.shifts[x]
    }

    /// `S(x)` as a set.
    pub fn set_at(&self, x: usize) -> FiniteSubset {
        FiniteSubset::new(self.group, self.shifts[x].iter().cloned()).expect("validated group")
    }
}

/// Conflicts of `s`, `s'` in `S(x)`: `s^{-1} s'` or `s'^{-1} s` is listed.
fn conflict_masks(set: &[GroupElement], forbidden: &FiniteSubset) -> Result<Vec<u32>> {
    let mut masks = vec![0u32; set.len()];
    for i in 0..set.len() {
        for j in i + 1..set.len() {
            let q = set[i].inv().mul(&set[j])?;
            if forbidden.contains(&q) || forbidden.contains(&q.inv()) {
                masks[i] |= 1 << j;
                masks[j] |= 1 << i;
            }
        }
    }
    Ok(masks)
}

fn max_independent(candidates: u32, masks: &[u32]) -> u32 {
    if candidates == 0 {
        return 0;
    }
    let v = candidates.trailing_zeros() as usize;
    let rest = candidates & !(1 << v);
    if masks[v] & rest == 0 {
        return 1 + max_independent(rest, masks);
    }
    let with_v = 1 + max_independent(rest & !masks[v], masks);
    if with_v > rest.count_ones() {
        return with_v;
    }
    with_v.max(max_independent(rest, masks))
}

/// Largest subset of `S` with no listed quotients.
///
/// Exact branch search up to [`EXACT_SUBSET_LIMIT`] elements, otherwise a
/// greedy scan in canonical order.
pub fn max_spread_subset_size(set: &[GroupElement], forbidden: &FiniteSubset) -> Result<(usize, SubsetMethod)> {
    let mut sorted = set.to_vec();
    sorted.sort();
    sorted.dedup();
    if sorted.len() <= EXACT_SUBSET_LIMIT {
        let masks = conflict_masks(&sorted, forbidden)?;
        let all = (1u32 << sorted.len()) - 1;
        Ok((max_independent(all, &masks) as usize, SubsetMethod::Exact))
    } else {
        Ok((greedy_spread_subset(&sorted, forbidden)?.len(), SubsetMethod::Greedy))
    }
}

/// Greedy spread subset: keep each element that conflicts with none kept so far.
pub fn greedy_spread_subset(set: &[GroupElement], forbidden: &FiniteSubset) -> Result<Vec<GroupElement>> {
    let mut sorted = set.to_vec();
    sorted.sort();
    sorted.dedup();
    let mut kept: Vec<GroupElement> = Vec::new();
    for s in sorted {
        let mut ok = true;
        for t in &kept {
            let q = t.inv().mul(&s)?;
            if forbidden.contains(&q) || forbidden.contains(&q.inv()) {
                ok = false;
                break;
            }
        }
        if ok {
            kept.push(s);
        }
    }
    Ok(kept)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SubsetMethod {
    Exact,
    Greedy,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuasiSpreadReport {
    pub n: usize,
    pub k: usize,
    /// Points whose best subset keeps more than `(1 - 1/N)` of `S(x)`.
    pub good_points: usize,
    pub total_points: usize,
    #[serde(with = "serde_ratio")]
    pub measure: Ratio,
    pub pass: bool,
    pub method: SubsetMethod,
    /// Histogram of best subset sizes, indexed by size.
    pub subset_sizes: Vec<usize>,
}

/// Measures `N`-quasi-spreading of `S` against the first `N` listed elements.
pub fn quasi_spread_measure(svf: &SetValuedFunction, listing: &Listing, n: usize) -> Result<QuasiSpreadReport> {
    if listing.group() != svf.group {
        return Err(Error::MixedGroups {
            left: listing.group(),
            right: svf.group,
        });
    }
    if n == 0 {
        return Err(Error::usage("N must be at least 1"));
    }
    let forbidden = listing.prefix(n)?;
    let k = svf.k;
    // the best size only depends on S(x) up to left translation
    let mut cache: HashMap<Vec<GroupElement>, usize> = HashMap::new();
    let mut subset_sizes = vec![0usize; k + 1];
    let mut good_points = 0;
    let mut method = SubsetMethod::Exact;
    for x in 0..svf.num_points() {
        let mut set = svf.shifts[x].clone();
        set.sort();
        let base = set[0].inv();
        let key = set.iter().map(|s| base.mul(s)).collect::<Result<Vec<_>>>()?;
        let best = match cache.get(&key) {
            Some(&b) => b,
            None => {
                let (b, m) = max_spread_subset_size(&key, &forbidden)?;
                if m == SubsetMethod::Greedy {
                    method = m;
                }
                cache.insert(key, b);
                b
            }
        };
        subset_sizes[best.min(k)] += 1;
        // best/k > 1 - 1/N
        if best * n > (n - 1) * k {
            good_points += 1;
        }
    }
    let total = svf.num_points();
    let measure = count_ratio(good_points, total);
    Ok(QuasiSpreadReport {
        n,
        k,
        good_points,
        total_points: total,
        pass: measure > Ratio::from_integer(1) - count_ratio(1, n),
        measure,
        method,
        subset_sizes,
    })
}

/// The gap form on `Z`: best subset with pairwise distances at least `gap`.
pub fn quasi_spread_measure_gap(svf: &SetValuedFunction, gap: usize) -> Result<QuasiSpreadReport> {
    if svf.group != (GroupSpec::Lattice { d: 1 }) {
        return Err(Error::Unsupported("the gap form is defined on Z only".into()));
    }
    // |s - s'| >= gap  iff  s - s' avoids {-(gap-1), ..., gap-1}, the first 2 gap - 1 listed
    let mut report = quasi_spread_measure(svf, &Listing::canonical(svf.group), 2 * gap.max(1) - 1)?;
    // the exceptional-set and fraction thresholds use N = gap
    let n = gap.max(1);
    let k = svf.k;
    report.good_points = report
        .subset_sizes
        .iter()
        .enumerate()
        .filter(|(size, _)| size * n > (n - 1) * k)
        .map(|(_, c)| c)
        .sum();
    report.measure = count_ratio(report.good_points, report.total_points);
    report.pass = report.measure > Ratio::from_integer(1) - count_ratio(1, n);
    report.n = n;
    Ok(report)
}

/// Largest `N <= max_n` at which `S` is `N`-quasi-spread.
pub fn achieved_quasi_spread_level(svf: &SetValuedFunction, listing: &Listing, max_n: usize) -> Result<usize> {
    let mut level = 0;
    for n in 1..=max_n {
        if quasi_spread_measure(svf, listing, n)?.pass {
            level = n;
        }
    }
    Ok(level)
}

#[derive(Clone, Debug, Serialize)]
pub struct UniformityReport {
    pub pass: bool,
    /// Maps `W_i` that are not bijections of the point set.
    pub non_bijective: Vec<usize>,
    /// Points where two maps send `x` to the same image.
    pub collisions: Vec<usize>,
}

/// Checks that each `W_i(x) = T_{s_i(x)} x` is a bijection and that the `k`
/// images at each point are distinct.
pub fn is_uniform(svf: &SetValuedFunction, action: &dyn GroupAction) -> Result<UniformityReport> {
    if action.group() != svf.group {
        return Err(Error::MixedGroups {
            left: action.group(),
            right: svf.group,
        });
    }
    let points = action.num_points();
    if svf.num_points() != points {
        return Err(Error::usage(format!(
            "set-valued function covers {} points, the model has {points}",
            svf.num_points()
        )));
    }
    let mut images = vec![vec![0usize; svf.k]; points];
    for (x, row) in images.iter_mut().enumerate() {
        for (i, s) in svf.shifts[x].iter().enumerate() {
            row[i] = action.act(s, x)?;
        }
    }
    let mut non_bijective = Vec::new();
    let mut hit = vec![false; points];
    for i in 0..svf.k {
        hit.iter_mut().for_each(|h| *h = false);
        let mut ok = true;
        for row in &images {
            if std::mem::replace(&mut hit[row[i]], true) {
                ok = false;
                break;
            }
        }
        if !ok {
            non_bijective.push(i);
        }
    }
    let mut collisions = Vec::new();
    for (x, row) in images.iter().enumerate() {
        let mut sorted = row.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            collisions.push(x);
        }
    }
    Ok(UniformityReport {
        pass: non_bijective.is_empty() && collisions.is_empty(),
        non_bijective,
        collisions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FiniteModel;
    use proptest::prelude::*;

    fn z1() -> GroupSpec {
        GroupSpec::lattice(1).unwrap()
    }

    fn els(v: &[i64]) -> Vec<GroupElement> {
        v.iter().map(|&c| z1().element(&[c]).unwrap()).collect()
    }

    fn set(v: &[i64]) -> FiniteSubset {
        FiniteSubset::new(z1(), els(v)).unwrap()
    }

    #[test]
    fn k_spread_examples() {
        let k = set(&[-1, 0, 1]);
        assert!(is_k_spread(&set(&[0, 5, 10]), &k).unwrap().pass);
        let bad = is_k_spread(&set(&[0, 1]), &k).unwrap();
        assert!(!bad.pass);
        let (a, b) = bad.worst_pair.unwrap();
        assert_eq!((a.coords()[0], b.coords()[0]), (1, 0));
        assert!(is_k_spread(&set(&[7]), &set(&[0])).unwrap().pass);
    }

    #[test]
    fn growing_pairs_spread() {
        let sets: Vec<FiniteSubset> = (1..=10).map(|i| set(&[0, i])).collect();
        let window = set(&(-12..=12).collect::<Vec<_>>());
        let report = sequence_spreads(&sets, &window, 1).unwrap();
        let three = report.counts.iter().find(|(g, _)| g.coords()[0] == 3).unwrap();
        assert_eq!(three.1, 1);
        assert!(report.spreading);

        let same: Vec<FiniteSubset> = (0..7).map(|_| set(&[0, 1])).collect();
        let report = sequence_spreads(&same, &window, 1).unwrap();
        let one = report.counts.iter().find(|(g, _)| g.coords()[0] == 1).unwrap();
        assert_eq!(one.1, 7);
        assert!(!report.spreading);
    }

    #[test]
    fn progressions_with_growing_gaps() {
        // S_i = {0, 2^i, 2 * 2^i}: quotients ±2^i, ±2^{i+1} appear in at most two sets
        let sets: Vec<FiniteSubset> = (0..8).map(|i| set(&[0, 1 << i, 2 << i])).collect();
        let window = set(&(-600..=600).collect::<Vec<_>>());
        let report = sequence_spreads(&sets, &window, 2).unwrap();
        assert!(report.spreading);
        // a direct count for g = 8: sets with 2^i = 8 or 2^{i+1} = 8
        let eight = report.counts.iter().find(|(g, _)| g.coords()[0] == 8).unwrap();
        assert_eq!(eight.1, 2);
    }

    #[test]
    fn widely_spaced_constant_set_is_quasi_spread() {
        let n = 5;
        let svf = SetValuedFunction::constant(&els(&[0, 7, 14]), 10).unwrap();
        let r = quasi_spread_measure(&svf, &Listing::canonical(z1()), n).unwrap();
        assert!(r.pass);
        assert_eq!(r.subset_sizes[3], 10);
    }

    #[test]
    fn consecutive_constant_set_is_not_quasi_spread() {
        let svf = SetValuedFunction::constant(&els(&[0, 1, 2]), 4).unwrap();
        let listing = Listing::canonical(z1());
        // N = 3 forbids quotients {0, -1, 1}: {0, 2} survives, 2 of 3
        let r3 = quasi_spread_measure(&svf, &listing, 3).unwrap();
        assert!(!r3.pass);
        assert_eq!(r3.subset_sizes[2], 4);
        // from N = 4 on, +-2 is listed too and only one element survives
        let r4 = quasi_spread_measure(&svf, &listing, 4).unwrap();
        assert!(!r4.pass);
        assert_eq!(r4.subset_sizes[1], 4);
    }

    #[test]
    fn gap_form_matches_listing_form() {
        let svf = SetValuedFunction::new(
            z1(),
            vec![els(&[0, 3, 9]), els(&[0, 1, 5]), els(&[2, 4, 6]), els(&[0, 10, 20])],
        )
        .unwrap();
        for gap in 1..12 {
            let by_gap = quasi_spread_measure_gap(&svf, gap).unwrap();
            for x in 0..svf.num_points() {
                let s: Vec<i64> = svf.shifts_at(x).iter().map(|g| g.coords()[0]).collect();
                // brute force over subsets with pairwise distance >= gap
                let mut best = 0;
                for mask in 0u32..8 {
                    let chosen: Vec<i64> = (0..3).filter(|i| mask >> i & 1 == 1).map(|i| s[i]).collect();
                    let ok = chosen
                        .iter()
                        .enumerate()
                        .all(|(i, a)| chosen[i + 1..].iter().all(|b| (a - b).unsigned_abs() as usize >= gap));
                    if ok {
                        best = best.max(chosen.len());
                    }
                }
                let forbidden = Listing::canonical(z1()).prefix(2 * gap - 1).unwrap();
                assert_eq!(max_spread_subset_size(svf.shifts_at(x), &forbidden).unwrap().0, best);
            }
            assert!(by_gap.total_points == 4);
        }
    }

    #[test]
    fn translations_are_uniform() {
        let model = FiniteModel::torus(1, 30).unwrap();
        let svf = SetValuedFunction::constant(&els(&[0, 5, 10]), 30).unwrap();
        assert!(is_uniform(&svf, &model).unwrap().pass);
    }

    #[test]
    fn repeated_map_is_not_uniform() {
        let model = FiniteModel::torus(1, 30).unwrap();
        let svf = SetValuedFunction::constant(&els(&[4, 4]), 30).unwrap();
        let r = is_uniform(&svf, &model).unwrap();
        assert!(!r.pass);
        assert_eq!(r.collisions.len(), 30);
    }

    #[test]
    fn point_dependent_permutation_recipe() {
        // on Z_12: s(x) = +1 on even x, -1 on odd x swaps neighbours pairwise
        let model = FiniteModel::torus(1, 12).unwrap();
        let shifts: Vec<Vec<GroupElement>> =
            (0..12).map(|x| els(&[0, if x % 2 == 0 { 1 } else { -1 }])).collect();
        let svf = SetValuedFunction::new(z1(), shifts).unwrap();
        assert!(is_uniform(&svf, &model).unwrap().pass);
        // s(x) = +1 except at x = 3, where 3 and 4 both land on 5
        let mut broken: Vec<Vec<GroupElement>> = (0..12).map(|_| els(&[0, 1])).collect();
        broken[3] = els(&[0, 2]);
        let svf = SetValuedFunction::new(z1(), broken).unwrap();
        let r = is_uniform(&svf, &model).unwrap();
        assert_eq!(r.non_bijective, vec![1]);
        // explicit permutation check by a second route
        let mut images: Vec<usize> = (0..12).map(|x| model.act(&svf.shifts_at(x)[1], x).unwrap()).collect();
        images.sort_unstable();
        images.dedup();
        assert!(images.len() < 12);
    }

    #[test]
    fn sup_norm_listing_prefix() {
        let z2 = GroupSpec::lattice(2).unwrap();
        let p = Listing::SupNorm { group: z2 }.prefix(9).unwrap();
        assert_eq!(p, FiniteSubset::coordinate_box(z2, &[(-1, 2), (-1, 2)]).unwrap());
    }

    /// Exhaustive independent-set oracle over all subsets.
    fn brute_force_best(set: &[GroupElement], forbidden: &FiniteSubset) -> usize {
        let k = set.len();
        let mut best = 0;
        for mask in 0u32..(1 << k) {
            let chosen: Vec<&GroupElement> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| &set[i]).collect();
            let ok = chosen.iter().enumerate().all(|(i, a)| {
                chosen[i + 1..].iter().all(|b| {
                    let q = a.inv().mul(b).unwrap();
                    !forbidden.contains(&q) && !forbidden.contains(&q.inv())
                })
            });
            if ok {
                best = best.max(chosen.len());
            }
        }
        best
    }

    fn arb_points(spec: GroupSpec) -> impl Strategy<Value = Vec<GroupElement>> {
        prop::collection::btree_set(prop::collection::vec(-6i64..6, spec.rank()), 1..=8)
            .prop_map(move |cs| cs.into_iter().map(|c| spec.element(&c).unwrap()).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn exact_subset_matches_oracle(
            spec in prop_oneof![Just(GroupSpec::lattice(1).unwrap()), Just(GroupSpec::lattice(2).unwrap()), Just(GroupSpec::Heisenberg3)]
                .prop_flat_map(|s| (Just(s), arb_points(s))),
            n in 1usize..20,
        ) {
            let (group, set) = spec;
            let forbidden = Listing::canonical(group).prefix(n).unwrap();
            prop_assert_eq!(max_spread_subset_size(&set, &forbidden).unwrap().0, brute_force_best(&set, &forbidden));
        }

        #[test]
        fn greedy_equals_exact_on_integers(set in arb_points(GroupSpec::lattice(1).unwrap()), n in 1usize..20) {
            let forbidden = Listing::canonical(z1()).prefix(n).unwrap();
            prop_assert_eq!(greedy_spread_subset(&set, &forbidden).unwrap().len(), brute_force_best(&set, &forbidden));
        }

        #[test]
        fn spread_certificates_are_translation_invariant(
            raw in prop::collection::vec(prop::collection::vec(-5i64..5, 3), 1..6),
            shift in prop::collection::vec(-5i64..5, 3),
            kraw in prop::collection::vec(prop::collection::vec(-3i64..3, 3), 1..5),
        ) {
            let h = GroupSpec::Heisenberg3;
            let s = FiniteSubset::from_coords(h, raw.iter().map(|c| c.as_slice())).unwrap();
            let k = FiniteSubset::from_coords(h, kraw.iter().map(|c| c.as_slice())).unwrap();
            let g = h.element(&shift).unwrap();
            let a = is_k_spread(&s, &k).unwrap();
            let b = is_k_spread(&s.right_translate(&g).unwrap(), &k).unwrap();
            prop_assert_eq!(a.pass, b.pass);
            prop_assert_eq!(a.offending_pairs, b.offending_pairs);
        }

        #[test]
        fn listing_robustness(
            rows in prop::collection::vec(prop::collection::btree_set(prop::collection::vec(-8i64..8, 2), 2..6), 1..8),
            n in 1usize..12,
        ) {
            // N' whose canonical prefix contains the first N sup-norm elements
            let z2 = GroupSpec::lattice(2).unwrap();
            let target = Listing::SupNorm { group: z2 }.prefix(n).unwrap();
            let canon = Listing::canonical(z2);
            let mut n_prime = n;
            while !target.is_subset(&canon.prefix(n_prime).unwrap()) {
                n_prime += 1;
            }
            let k = rows.iter().map(|r| r.len()).min().unwrap();
            let shifts: Vec<Vec<GroupElement>> = rows
                .iter()
                .map(|r| r.iter().take(k).map(|c| z2.element(c).unwrap()).collect())
                .collect();
            let svf = SetValuedFunction::new(z2, shifts).unwrap();
            if quasi_spread_measure(&svf, &canon, n_prime).unwrap().pass {
                let sup = Listing::SupNorm { group: z2 };
                prop_assert!(quasi_spread_measure(&svf, &sup, n).unwrap().pass);
            }
        }
    }
}
