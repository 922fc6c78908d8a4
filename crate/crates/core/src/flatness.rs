//! `(h, δ)`-flat distributions on names and the entropy bounds they imply.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::foelner::foelner_box;
use crate::ratio::{ratio_to_f64, serde_ratio, Ratio};
use crate::symbolic::{binary_entropy, window_distribution, Distribution, Partition, Probability, SymbolicSystem};

/// Step of the grid searched by [`min_flat_delta`].
pub const DELTA_GRID: i64 = 1024;

#[derive(Clone, Debug, Serialize)]
pub struct FlatnessReport {
    pub h: f64,
    pub delta: f64,
    pub k_size: usize,
    pub pass: bool,
    /// Mass of the canonical witness.
    pub achieved_mass: f64,
    /// Names with `p(η) <= 2^{-(h-δ)#K}`.
    pub eligible: usize,
    /// `floor(2^{(h+δ)#K})`, saturated.
    pub max_witness: u64,
    /// Codes of the canonical witness, most probable first.
    #[serde(skip)]
    pub witness: Vec<u64>,
    pub witness_size: usize,
}

fn probability_threshold(h: f64, delta: f64, k: usize) -> f64 {
    (-(h - delta) * k as f64).exp2()
}

fn size_bound(h: f64, delta: f64, k: usize) -> u64 {
    let v = ((h + delta) * k as f64).exp2().floor();
    if v >= u64::MAX as f64 {
        u64::MAX
    } else if v <= 0.0 {
        0
    } else {
        v as u64
    }
}

/// Indices of `p`'s entries sorted by decreasing probability, ties by name.
fn ranked<P: Probability>(p: &Distribution<P>, keep: impl Fn(f64) -> bool) -> Vec<usize> {
    let entries = p.entries();
    let mut idx: Vec<usize> = (0..entries.len()).filter(|&i| keep(entries[i].1.to_f64())).collect();
    idx.sort_by(|&a, &b| {
        entries[b]
            .1
            .partial_cmp(&entries[a].1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(entries[a].0.cmp(&entries[b].0))
    });
    idx
}

/// Decides `(h, δ)`-flatness with the canonical witness: the
/// `floor(2^{(h+δ)#K})` most probable names among those of probability at
/// most `2^{-(h-δ)#K}`. No admissible witness has more mass, so the decision
/// is exact.
pub fn is_flat<P: Probability>(p: &Distribution<P>, h: f64, delta: f64) -> FlatnessReport {
    let k = p.width();
    let threshold = probability_threshold(h, delta, k);
    let max_witness = size_bound(h, delta, k);
    let eligible = ranked(p, |v| v <= threshold);
    let take = eligible.len().min(max_witness.min(usize::MAX as u64) as usize);
    let entries = p.entries();
    let mass = eligible[..take]
        .iter()
        .fold(P::zero(), |acc, &i| acc + entries[i].1.clone())
        .to_f64();
    FlatnessReport {
        h,
        delta,
        k_size: k,
        pass: mass > 1.0 - delta,
        achieved_mass: mass,
        eligible: eligible.len(),
        max_witness,
        witness: eligible[..take].iter().map(|&i| entries[i].0).collect(),
        witness_size: take,
    }
}

/// Least `δ = j / 1024` at which `p` is `(h, δ)`-flat. Flatness only gets
/// easier as `δ` grows and always holds at `δ = max(1, h)`.
pub fn min_flat_delta<P: Probability>(p: &Distribution<P>, h: f64) -> Ratio {
    let top = (h.max(1.0) * DELTA_GRID as f64).ceil() as i64;
    let (mut lo, mut hi) = (0i64, top);
    // invariant: lo fails (or is zero), hi passes
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if is_flat(p, h, mid as f64 / DELTA_GRID as f64).pass {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ratio::new(hi, DELTA_GRID)
}

/// `h_K(p) = H(p) / #K`.
pub fn h_k<P: Probability>(p: &Distribution<P>) -> f64 {
    p.normalized_entropy()
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    pub bound: f64,
    pub value: f64,
    pub slack: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma42Report {
    /// Some witness has mass `> 1-δ` and at most `2^{(h+δ)#K}` names.
    pub size_premise: bool,
    /// Some witness has mass `> 1-δ` and only names of probability `<= 2^{-(h-δ)#K}`.
    pub probability_premise: bool,
    /// `h_K <= H(δ) + δ log #Σ + (1-δ)(h+δ)`, asserted under the size premise for `δ <= 1/2`.
    pub upper: Option<BoundCheck>,
    /// `h_K >= (1-δ)(h-δ)`, asserted under the probability premise.
    pub lower: Option<BoundCheck>,
    pub note: Option<String>,
}

/// Checks the premises on `p` and then the entropy bounds they imply.
pub fn lemma42_check<P: Probability>(p: &Distribution<P>, h: f64, delta: f64) -> Lemma42Report {
    let k = p.width();
    let entries = p.entries();
    let all = ranked(p, |_| true);
    let max = size_bound(h, delta, k).min(usize::MAX as u64) as usize;
    let mass_of = |idx: &[usize]| idx.iter().map(|&i| entries[i].1.to_f64()).sum::<f64>();
    let size_premise = mass_of(&all[..all.len().min(max)]) > 1.0 - delta;
    let threshold = probability_threshold(h, delta, k);
    let probability_premise = mass_of(&ranked(p, |v| v <= threshold)) > 1.0 - delta;

    let value = h_k(p);
    let upper = (size_premise && delta <= 0.5).then(|| {
        let bound = binary_entropy(delta) + delta * (p.labels() as f64).log2() + (1.0 - delta) * (h + delta);
        BoundCheck {
            bound,
            value,
            slack: bound - value,
            holds: value <= bound + 1e-12,
        }
    });
    let lower = probability_premise.then(|| {
        let bound = (1.0 - delta) * (h - delta);
        BoundCheck {
            bound,
            value,
            slack: value - bound,
            holds: value >= bound - 1e-12,
        }
    });
    let note = (!size_premise && !probability_premise).then(|| "premises not met".to_string());
    Lemma42Report {
        size_premise,
        probability_premise,
        upper,
        lower,
        note,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionReport {
    /// `p` itself is `(h, δ₁)`-flat.
    pub base_flat: bool,
    /// `Σ w_t h_K(p_t) >= h_K(p) - δ₁`.
    pub entropy_premise: bool,
    pub mean_part_entropy: f64,
    pub part_flat: Vec<bool>,
    /// Total weight of the `(h, δ)`-flat parts.
    pub flat_fraction: f64,
    #[serde(with = "serde_ratio")]
    pub delta_grid_point: Ratio,
}

/// Measures how much of a convex decomposition `p = Σ w_t p_t` is `(h, δ)`-flat.
pub fn decomposition_flatness<P: Probability>(
    p: &Distribution<P>,
    parts: &[(P, Distribution<P>)],
    h: f64,
    delta_1: f64,
    delta: f64,
) -> Result<DecompositionReport> {
    if parts.is_empty() {
        return Err(Error::usage("decomposition needs at least one part"));
    }
    let weight_total = parts.iter().fold(P::zero(), |acc, (w, _)| acc + w.clone());
    if !weight_total.close_to(&P::one()) {
        return Err(Error::usage("decomposition weights do not sum to 1"));
    }
    let mut mixture: std::collections::BTreeMap<u64, P> = std::collections::BTreeMap::new();
    for (w, part) in parts {
        if part.width() != p.width() || part.labels() != p.labels() {
            return Err(Error::usage("decomposition parts live on a different name space"));
        }
        for (code, q) in part.entries() {
            let slot = mixture.entry(*code).or_insert_with(P::zero);
            *slot = slot.clone() + w.clone() * q.clone();
        }
    }
    mixture.retain(|_, v| !v.is_zero());
    let matches = mixture.len() == p.len()
        && p
            .entries()
            .iter()
            .all(|(c, q)| mixture.get(c).is_some_and(|m| m.close_to(q)));
    if !matches {
        return Err(Error::usage("weighted parts do not mix to the given distribution"));
    }
    let part_flat: Vec<bool> = parts.iter().map(|(_, d)| is_flat(d, h, delta).pass).collect();
    let flat_fraction = parts
        .iter()
        .zip(&part_flat)
        .filter(|(_, &f)| f)
        .fold(0.0, |acc, ((w, _), _)| acc + w.to_f64());
    let mean_part_entropy = parts.iter().map(|(w, d)| w.to_f64() * h_k(d)).sum::<f64>();
    Ok(DecompositionReport {
        base_flat: is_flat(p, h, delta_1).pass,
        entropy_premise: mean_part_entropy >= h_k(p) - delta_1,
        mean_part_entropy,
        part_flat,
        flat_fraction,
        delta_grid_point: Ratio::new((delta * DELTA_GRID as f64).round() as i64, DELTA_GRID),
    })
}

/// Splits `p` by the names on `positions`: one part per observed sub-name,
/// weighted by its mass.
pub fn condition_on_coordinates<P: Probability>(
    p: &Distribution<P>,
    positions: &[usize],
) -> Result<Vec<(P, Distribution<P>)>> {
    let marginal = p.marginal(positions)?;
    let mut parts = Vec::with_capacity(marginal.len());
    for (code, mass) in marginal.entries() {
        let target = marginal.name(*code);
        let entries = p.entries().iter().filter_map(|(c, q)| {
            let name = p.name(*c);
            positions
                .iter()
                .zip(&target)
                .all(|(&i, &t)| name[i] == t)
                .then(|| (*c, q.clone() / mass.clone()))
        });
        parts.push((mass.clone(), Distribution::from_codes(p.width(), p.labels(), entries)?));
    }
    Ok(parts)
}

#[derive(Clone, Debug, Serialize)]
pub struct ScaleFlatness {
    pub n: i64,
    pub names: usize,
    pub flat: bool,
    pub achieved_mass: f64,
    #[serde(with = "serde_ratio")]
    pub min_flat_delta: Ratio,
}

/// Flatness of the window distributions over the standard boxes at entropy `h`.
pub fn shannon_mcmillan_check<P: Probability>(
    sys: &SymbolicSystem<P>,
    partition: &Partition,
    scales: &[i64],
    h: f64,
    delta: f64,
    budget: u128,
) -> Result<Vec<ScaleFlatness>> {
    scales
        .iter()
        .map(|&n| {
            let d = window_distribution(sys, partition, &foelner_box(sys.group(), n)?, budget)?;
            let report = is_flat(&d, h, delta);
            Ok(ScaleFlatness {
                n,
                names: d.len(),
                flat: report.pass,
                achieved_mass: report.achieved_mass,
                min_flat_delta: min_flat_delta(&d, h),
            })
        })
        .collect()
}

/// `δ` as a float, for callers holding exact ratios.
pub fn delta_value(delta: &Ratio) -> f64 {
    ratio_to_f64(delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupSpec;
    use crate::symbolic::{shannon_entropy, DEFAULT_BUDGET};
    use proptest::prelude::*;

    #[test]
    fn uniform_is_flat_at_its_entropy() {
        let u: Distribution<f64> = Distribution::uniform(6, 2).unwrap();
        let r = is_flat(&u, 1.0, 0.05);
        assert!(r.pass);
        assert_eq!(r.witness_size, 64);
        assert_eq!(min_flat_delta(&u, 1.0), Ratio::new(1, DELTA_GRID));
    }

    #[test]
    fn point_mass_is_flat_at_zero() {
        let p: Distribution<f64> = Distribution::point_mass(&[0, 1, 1, 0], 2).unwrap();
        let r = is_flat(&p, 0.0, 0.01);
        assert!(r.pass);
        assert_eq!(r.witness_size, 1);
    }

    #[test]
    fn point_mass_at_full_entropy_needs_delta_one() {
        let p: Distribution<f64> = Distribution::point_mass(&[0; 16], 2).unwrap();
        // 1 <= 2^{-(1-δ)16} forces δ >= 1
        assert_eq!(min_flat_delta(&p, 1.0), Ratio::from_integer(1));
    }

    /// Threshold sweep oracle: for each distinct probability level inside
    /// the eligible set, add whole tie groups from the top while the size
    /// bound allows, then fill the rest from the next group.
    fn sweep_mass(p: &Distribution<f64>, h: f64, delta: f64) -> f64 {
        let k = p.width() as f64;
        let cap = (-(h - delta) * k).exp2();
        let max = ((h + delta) * k).exp2().floor();
        let mut levels: Vec<f64> = p.probabilities().copied().filter(|&v| v <= cap).collect();
        levels.sort_by(|a, b| b.partial_cmp(a).unwrap());
        levels.dedup();
        let mut taken = 0.0f64;
        let mut mass = 0.0;
        for level in levels {
            let count = p.probabilities().filter(|&&v| v == level).count() as f64;
            let room = (max - taken).max(0.0);
            let used = count.min(room);
            mass += used * level;
            taken += used;
        }
        mass
    }

    /// Brute force over every subset of at most twelve names.
    fn best_admissible_mass(p: &Distribution<f64>, h: f64, delta: f64) -> f64 {
        let k = p.width() as f64;
        let cap = (-(h - delta) * k).exp2();
        let max = ((h + delta) * k).exp2().floor();
        let probs: Vec<f64> = p.probabilities().copied().collect();
        let mut best = 0.0f64;
        for mask in 0u32..(1 << probs.len()) {
            if mask.count_ones() as f64 > max {
                continue;
            }
            let chosen = (0..probs.len()).filter(|i| mask >> i & 1 == 1);
            if chosen.clone().any(|i| probs[i] > cap) {
                continue;
            }
            best = best.max(chosen.map(|i| probs[i]).sum());
        }
        best
    }

    fn arb_distribution(max_width: usize) -> impl Strategy<Value = Distribution<f64>> {
        (1..=max_width).prop_flat_map(|w| {
            prop::collection::vec(0u32..20, 1 << w).prop_filter_map("all zero", move |weights| {
                let total: u32 = weights.iter().sum();
                (total > 0).then(|| {
                    let entries = weights
                        .iter()
                        .enumerate()
                        .map(|(c, &x)| (c as u64, x as f64 / total as f64));
                    Distribution::from_codes(w, 2, entries).unwrap()
                })
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn canonical_witness_is_optimal_on_small_tables(
            p in arb_distribution(3),
            h in 0.0f64..1.2,
            delta in 0.01f64..0.6,
        ) {
            let r = is_flat(&p, h, delta);
            let best = best_admissible_mass(&p, h, delta);
            prop_assert!((r.achieved_mass - best).abs() < 1e-9);
            prop_assert_eq!(r.pass, best > 1.0 - delta);
        }

        #[test]
        fn canonical_witness_matches_threshold_sweep(
            p in arb_distribution(8),
            h in 0.0f64..1.2,
            delta in 0.01f64..0.6,
        ) {
            prop_assert!((is_flat(&p, h, delta).achieved_mass - sweep_mass(&p, h, delta)).abs() < 1e-9);
        }

        #[test]
        fn flatness_is_monotone_in_delta(p in arb_distribution(6), h in 0.0f64..1.2, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            if is_flat(&p, h, lo).pass {
                prop_assert!(is_flat(&p, h, hi).pass);
            }
        }

        #[test]
        fn witness_meets_all_three_conditions(p in arb_distribution(6), h in 0.0f64..1.2, delta in 0.01f64..0.9) {
            let r = is_flat(&p, h, delta);
            if r.pass {
                let k = p.width() as f64;
                prop_assert!(r.achieved_mass > 1.0 - delta);
                prop_assert!((r.witness.len() as f64) <= ((h + delta) * k).exp2());
                for &c in &r.witness {
                    prop_assert!(p.probability(&p.name(c)) <= (-(h - delta) * k).exp2());
                }
            }
        }
    }

    #[test]
    fn product_entropy_per_coordinate() {
        let d = Distribution::product(&[0.7, 0.3], 10).unwrap();
        assert!((h_k(&d) - shannon_entropy(&[0.7, 0.3])).abs() < 1e-12);
        let u: Distribution<f64> = Distribution::uniform(5, 3).unwrap();
        assert!((h_k(&u) - 3f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn markov_triple_entropy() {
        let sys = SymbolicSystem::markov(vec![vec![0.9, 0.1], vec![0.1, 0.9]], None).unwrap();
        let s = foelner_box(GroupSpec::lattice(1).unwrap(), 3).unwrap();
        let d = window_distribution(&sys, &Partition::Identity, &s, DEFAULT_BUDGET).unwrap();
        let oracle = (1.0 + 2.0 * shannon_entropy(&[0.9, 0.1])) / 3.0;
        assert!((h_k(&d) - oracle).abs() < 1e-12);
    }

    #[test]
    fn uniform_satisfies_both_bounds() {
        let u: Distribution<f64> = Distribution::uniform(8, 2).unwrap();
        let r = lemma42_check(&u, 1.0, 0.1);
        assert!(r.size_premise && r.probability_premise);
        assert!(r.upper.unwrap().holds);
        assert!(r.lower.unwrap().holds);
    }

    #[test]
    fn bernoulli_min_delta_shrinks() {
        let h = shannon_entropy(&[0.7, 0.3]);
        let deltas: Vec<Ratio> = [4, 8, 12, 16]
            .iter()
            .map(|&n| min_flat_delta(&Distribution::product(&[0.7, 0.3], n).unwrap(), h))
            .collect();
        assert!(deltas.windows(2).all(|w| w[1] <= w[0]), "{deltas:?}");
    }

    #[test]
    fn trivial_decomposition() {
        let d = Distribution::product(&[0.8, 0.2], 8).unwrap();
        let h = shannon_entropy(&[0.8, 0.2]);
        for delta in [0.05, 0.2, 0.4] {
            let r = decomposition_flatness(&d, &[(1.0, d.clone())], h, delta, delta).unwrap();
            assert_eq!(r.flat_fraction == 1.0, is_flat(&d, h, delta).pass);
        }
    }

    #[test]
    fn fair_coins_split_on_first_coordinate() {
        let d: Distribution<f64> = Distribution::uniform(10, 2).unwrap();
        let parts = condition_on_coordinates(&d, &[0]).unwrap();
        assert_eq!(parts.len(), 2);
        let r = decomposition_flatness(&d, &parts, 1.0, 0.2, 0.2).unwrap();
        assert_eq!(r.flat_fraction, 1.0);
    }

    #[test]
    fn mismatched_mixture_is_rejected() {
        let d: Distribution<f64> = Distribution::uniform(3, 2).unwrap();
        let other: Distribution<f64> = Distribution::point_mass(&[0, 0, 0], 2).unwrap();
        assert!(decomposition_flatness(&d, &[(1.0, other)], 1.0, 0.1, 0.1).is_err());
    }

    #[test]
    fn delta_one_at_unit_scale() {
        let sys = SymbolicSystem::markov(vec![vec![0.9, 0.1], vec![0.1, 0.9]], None).unwrap();
        let h = shannon_entropy(&[0.9, 0.1]);
        let r = shannon_mcmillan_check(&sys, &Partition::Identity, &[1], h, 1.0, DEFAULT_BUDGET).unwrap();
        assert!(r[0].flat);
    }
}
