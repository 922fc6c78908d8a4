//! Window distributions by cylinder enumeration.

use std::collections::{BTreeMap, HashMap};

use rand::distributions::{Distribution as _, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::foelner::foelner_box;
use crate::group::GroupElement;
use crate::subset::FiniteSubset;

use super::distribution::{decode, encode, Distribution};
use super::prob::{shannon_entropy, Probability};
use super::{Measure, Partition, SymbolicSystem};

/// Default cap on the number of base configurations enumerated exactly.
pub const DEFAULT_BUDGET: u128 = 1 << 24;

/// Compiled evaluation of a list of name coordinates from base cells.
struct Program<'a, P> {
    sys: &'a SymbolicSystem<P>,
    /// Base cells, sorted.
    cells: Vec<GroupElement>,
    /// For each site, the base cells it reads (block-code window order).
    sites: Vec<Vec<usize>>,
    /// For each coordinate, its partition and the sites of the partition window.
    coords: Vec<(usize, Vec<usize>)>,
    partitions: Vec<&'a Partition>,
    name_base: u32,
}

impl<'a, P: Probability> Program<'a, P> {
    fn compile(
        sys: &'a SymbolicSystem<P>,
        partitions: Vec<&'a Partition>,
        coords: &[(usize, GroupElement)],
    ) -> Result<Self> {
        let group = sys.group();
        for part in &partitions {
            part.validate(group, sys.alphabet())?;
        }
        let mut site_index: HashMap<GroupElement, usize> = HashMap::new();
        let mut site_positions: Vec<GroupElement> = Vec::new();
        let mut coord_sites = Vec::with_capacity(coords.len());
        for (k, g) in coords {
            if g.group() != group {
                return Err(Error::MixedGroups {
                    left: group,
                    right: g.group(),
                });
            }
            let window: Vec<GroupElement> = match partitions[*k] {
                Partition::Identity => vec![group.identity()],
                Partition::Windowed { window, .. } => window.elements().to_vec(),
            };
            let mut sites = Vec::with_capacity(window.len());
            for w in &window {
                let pos = w.mul(g)?;
                let idx = *site_index.entry(pos.clone()).or_insert_with(|| {
                    site_positions.push(pos);
                    site_positions.len() - 1
                });
                sites.push(idx);
            }
            coord_sites.push((*k, sites));
        }
        let mut site_cells: Vec<Vec<GroupElement>> = Vec::with_capacity(site_positions.len());
        for pos in &site_positions {
            site_cells.push(match sys.measure() {
                Measure::BlockFactor { window, .. } => {
                    window.iter().map(|v| v.mul(pos)).collect::<Result<Vec<_>>>()?
                }
                _ => vec![pos.clone()],
            });
        }
        let mut cells: Vec<GroupElement> = site_cells.iter().flatten().cloned().collect();
        cells.sort();
        cells.dedup();
        let sites = site_cells
            .iter()
            .map(|cs| cs.iter().map(|c| cells.binary_search(c).expect("cell interned")).collect())
            .collect();
        let name_base = partitions
            .iter()
            .map(|p| p.labels(sys.alphabet()))
            .max()
            .unwrap_or(1)
            .max(1);
        Ok(Program {
            sys,
            cells,
            sites,
            coords: coord_sites,
            partitions,
            name_base,
        })
    }

    fn configurations(&self) -> u128 {
        (self.sys.base_alphabet() as u128)
            .checked_pow(self.cells.len() as u32)
            .unwrap_or(u128::MAX)
    }

    fn check_budget(&self, budget: u128) -> Result<()> {
        let configurations = self.configurations();
        if configurations > budget {
            return Err(Error::FootprintTooLarge {
                cells: self.cells.len(),
                configurations,
                budget,
            });
        }
        Ok(())
    }

    fn site_symbol(&self, site: usize, digits: &[u32], scratch: &mut Vec<u32>) -> u32 {
        match self.sys.measure() {
            Measure::BlockFactor { code, base, .. } => {
                scratch.clear();
                scratch.extend(self.sites[site].iter().map(|&c| digits[c]));
                code.apply(scratch, base.len() as u32)
            }
            _ => digits[self.sites[site][0]],
        }
    }

    /// Name code of the configuration `digits` on `cells`.
    fn evaluate(&self, digits: &[u32], scratch: &mut Vec<u32>, window: &mut Vec<u32>) -> u64 {
        let alphabet = self.sys.alphabet();
        let mut code = 0u64;
        for (k, sites) in &self.coords {
            let label = match self.partitions[*k] {
                Partition::Identity => self.site_symbol(sites[0], digits, scratch),
                Partition::Windowed { table, .. } => {
                    window.clear();
                    for &s in sites {
                        let sym = self.site_symbol(s, digits, scratch);
                        window.push(sym);
                    }
                    table[encode(window, alphabet) as usize]
                }
            };
            code = code * self.name_base as u64 + label as u64;
        }
        code
    }

    /// Exact joint law of the coordinates, keyed by name code in base `name_base`.
    fn enumerate(&self, budget: u128) -> Result<BTreeMap<u64, P>> {
        self.check_budget(budget)?;
        match self.sys.measure() {
            Measure::Markov { transition, stationary } => Ok(self.enumerate_markov(transition, stationary)),
            Measure::Bernoulli { probs } | Measure::BlockFactor { base: probs, .. } => Ok(self.enumerate_product(probs)),
        }
    }

    /// Counts configurations per (name, symbol composition) so each name's
    /// probability is a short sum of monomials `count * Π p_a^{n_a}`.
    fn enumerate_product(&self, probs: &[P]) -> BTreeMap<u64, P> {
        let b = probs.len();
        let n = self.cells.len();
        let mut scratch = Vec::new();
        let mut window = Vec::new();
        let mut digits = vec![0u32; n];
        let mut counts = vec![0usize; b];
        counts[0] = n;
        let composition = |counts: &[usize]| counts.iter().fold(0u128, |acc, &c| acc * (n as u128 + 1) + c as u128);
        let mut tally: HashMap<(u64, u128), u64> = HashMap::new();
        loop {
            let name = self.evaluate(&digits, &mut scratch, &mut window);
            *tally.entry((name, composition(&counts))).or_insert(0) += 1;
            let mut i = n;
            loop {
                if i == 0 {
                    return self.collect_product(tally, probs);
                }
                i -= 1;
                counts[digits[i] as usize] -= 1;
                digits[i] += 1;
                if digits[i] as usize == b {
                    digits[i] = 0;
                    counts[0] += 1;
                } else {
                    counts[digits[i] as usize] += 1;
                    break;
                }
            }
        }
    }

    fn collect_product(&self, tally: HashMap<(u64, u128), u64>, probs: &[P]) -> BTreeMap<u64, P> {
        let b = probs.len();
        let n = self.cells.len();
        let powers: Vec<Vec<P>> = probs
            .iter()
            .map(|p| {
                let mut row = vec![P::one()];
                for k in 1..=n {
                    row.push(row[k - 1].clone() * p.clone());
                }
                row
            })
            .collect();
        let mut keys: Vec<_> = tally.into_iter().collect();
        keys.sort_unstable_by_key(|(k, _)| *k);
        let mut out: BTreeMap<u64, P> = BTreeMap::new();
        let mut counts = vec![0usize; b];
        for ((name, mut comp), count) in keys {
            for slot in counts.iter_mut().rev() {
                *slot = (comp % (n as u128 + 1)) as usize;
                comp /= n as u128 + 1;
            }
            let mut term = P::from_counts(count, 1);
            for (a, &c) in counts.iter().enumerate() {
                term = term * powers[a][c].clone();
            }
            let slot = out.entry(name).or_insert_with(P::zero);
            *slot = slot.clone() + term;
        }
        out
    }

    fn enumerate_markov(&self, transition: &[Vec<P>], stationary: &[P]) -> BTreeMap<u64, P> {
        let gaps: Vec<u64> = self
            .cells
            .windows(2)
            .map(|w| (w[1].coords()[0] - w[0].coords()[0]) as u64)
            .collect();
        let mut powers: HashMap<u64, Vec<Vec<P>>> = HashMap::new();
        for &g in &gaps {
            powers.entry(g).or_insert_with(|| matrix_power(transition, g));
        }
        let steps: Vec<&Vec<Vec<P>>> = gaps.iter().map(|g| &powers[g]).collect();
        let mut out = BTreeMap::new();
        let mut digits = vec![0u32; self.cells.len()];
        let mut scratch = Vec::new();
        let mut window = Vec::new();
        for (a, pa) in stationary.iter().enumerate() {
            if pa.is_zero() {
                continue;
            }
            digits[0] = a as u32;
            self.markov_dfs(1, pa.clone(), &steps, &mut digits, &mut scratch, &mut window, &mut out);
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn markov_dfs(
        &self,
        i: usize,
        prob: P,
        steps: &[&Vec<Vec<P>>],
        digits: &mut Vec<u32>,
        scratch: &mut Vec<u32>,
        window: &mut Vec<u32>,
        out: &mut BTreeMap<u64, P>,
    ) {
        if i == digits.len() {
            let name = self.evaluate(digits, scratch, window);
            let slot = out.entry(name).or_insert_with(P::zero);
            *slot = slot.clone() + prob;
            return;
        }
        let row = &steps[i - 1][digits[i - 1] as usize];
        for (b, pb) in row.iter().enumerate() {
            if pb.is_zero() {
                continue;
            }
            digits[i] = b as u32;
            self.markov_dfs(i + 1, prob.clone() * pb.clone(), steps, digits, scratch, window, out);
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng, sampler: &Sampler, digits: &mut [u32]) {
        match sampler {
            Sampler::Product(w) => {
                for d in digits.iter_mut() {
                    *d = w.sample(rng) as u32;
                }
            }
            Sampler::Markov { initial, steps } => {
                digits[0] = initial.sample(rng) as u32;
                for i in 1..digits.len() {
                    digits[i] = steps[i - 1][digits[i - 1] as usize].sample(rng) as u32;
                }
            }
        }
    }
}

enum Sampler {
    Product(WeightedIndex<f64>),
    Markov {
        initial: WeightedIndex<f64>,
        steps: Vec<Vec<WeightedIndex<f64>>>,
    },
}

fn weighted<P: Probability>(probs: &[P]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(probs.iter().map(|p| p.to_f64())).map_err(|e| Error::usage(format!("bad weights: {e}")))
}

pub(crate) fn matrix_power<P: Probability>(m: &[Vec<P>], mut exp: u64) -> Vec<Vec<P>> {
    let n = m.len();
    let mul = |a: &[Vec<P>], b: &[Vec<P>]| -> Vec<Vec<P>> {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).fold(P::zero(), |acc, k| acc + a[i][k].clone() * b[k][j].clone()))
                    .collect()
            })
            .collect()
    };
    let mut result: Vec<Vec<P>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { P::one() } else { P::zero() }).collect())
        .collect();
    let mut base = m.to_vec();
    while exp > 0 {
        if exp & 1 == 1 {
            result = mul(&result, &base);
        }
        exp >>= 1;
        if exp > 0 {
            base = mul(&base, &base);
        }
    }
    result
}

fn name_coords(s: &FiniteSubset, partition: usize) -> Vec<(usize, GroupElement)> {
    s.iter().map(|g| (partition, g.clone())).collect()
}

fn check_support<P: Probability>(sys: &SymbolicSystem<P>, s: &FiniteSubset) -> Result<()> {
    if s.is_empty() {
        return Err(Error::usage("window must be nonempty"));
    }
    if s.group() != sys.group() {
        return Err(Error::MixedGroups {
            left: sys.group(),
            right: s.group(),
        });
    }
    Ok(())
}

/// Exact law of the name `(P(T_g x))_{g in S}` on `Σ_P^S`.
pub fn window_distribution<P: Probability>(
    sys: &SymbolicSystem<P>,
    partition: &Partition,
    s: &FiniteSubset,
    budget: u128,
) -> Result<Distribution<P>> {
    check_support(sys, s)?;
    let program = Program::compile(sys, vec![partition], &name_coords(s, 0))?;
    let table = program.enumerate(budget)?;
    Distribution::from_codes(s.len(), partition.labels(sys.alphabet()), table)?.with_support(s.clone())
}

/// Entropy in bits of the name over `S`.
///
/// Coordinates reading disjoint base cells are independent under product
/// measures, so the entropy is summed over connected components; Markov
/// chains read through the identity partition use the chain rule.
pub fn window_entropy<P: Probability>(
    sys: &SymbolicSystem<P>,
    partition: &Partition,
    s: &FiniteSubset,
    budget: u128,
) -> Result<f64> {
    check_support(sys, s)?;
    partition.validate(sys.group(), sys.alphabet())?;
    if let Measure::Markov { transition, stationary } = sys.measure() {
        if *partition == Partition::Identity {
            return Ok(markov_chain_entropy(transition, stationary, s));
        }
        return Ok(window_distribution(sys, partition, s, budget)?.entropy());
    }
    let coords = name_coords(s, 0);
    let full = Program::compile(sys, vec![partition], &coords)?;
    // union coordinates that share a base cell
    let mut parent: Vec<usize> = (0..coords.len()).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        let mut j = i;
        while parent[j] != r {
            let next = parent[j];
            parent[j] = r;
            j = next;
        }
        r
    }
    let mut owner: Vec<Option<usize>> = vec![None; full.cells.len()];
    for (j, (_, sites)) in full.coords.iter().enumerate() {
        for &site in sites {
            for &cell in &full.sites[site] {
                match owner[cell] {
                    None => owner[cell] = Some(j),
                    Some(o) => {
                        let (a, b) = (find(&mut parent, o), find(&mut parent, j));
                        parent[a] = b;
                    }
                }
            }
        }
    }
    let mut components: BTreeMap<usize, Vec<GroupElement>> = BTreeMap::new();
    for (j, g) in s.iter().enumerate() {
        let root = find(&mut parent, j);
        components.entry(root).or_default().push(g.clone());
    }
    // the law is invariant under right translation, so components are
    // keyed by their shape relative to their first element
    let mut cache: HashMap<Vec<GroupElement>, f64> = HashMap::new();
    let mut total = 0.0;
    for members in components.values() {
        let anchor = members[0].inv();
        let shape = members.iter().map(|g| g.mul(&anchor)).collect::<Result<Vec<_>>>()?;
        let h = match cache.get(&shape) {
            Some(&h) => h,
            None => {
                let sub = FiniteSubset::new(sys.group(), shape.iter().cloned())?;
                let h = window_distribution(sys, partition, &sub, budget)?.entropy();
                cache.insert(shape, h);
                h
            }
        };
        total += h;
    }
    Ok(total)
}

/// `H(π) + Σ_i Σ_a π_a H(Π^{g_i}(a, ·))` over the sorted gaps of `S ⊂ Z`.
fn markov_chain_entropy<P: Probability>(transition: &[Vec<P>], stationary: &[P], s: &FiniteSubset) -> f64 {
    let mut h = shannon_entropy(stationary);
    let mut cache: HashMap<i64, f64> = HashMap::new();
    for w in s.elements().windows(2) {
        let gap = w[1].coords()[0] - w[0].coords()[0];
        h += *cache.entry(gap).or_insert_with(|| {
            let power = matrix_power(transition, gap as u64);
            stationary
                .iter()
                .zip(&power)
                .map(|(pa, row)| pa.to_f64() * shannon_entropy(row))
                .sum()
        });
    }
    h
}

/// Entropy per element, `H(name over S) / #S`.
pub fn spread_entropy_rate<P: Probability>(
    sys: &SymbolicSystem<P>,
    partition: &Partition,
    s: &FiniteSubset,
    budget: u128,
) -> Result<f64> {
    Ok(window_entropy(sys, partition, s, budget)? / s.len() as f64)
}

/// Empirical name distribution from `samples` seeded draws of the footprint.
pub fn monte_carlo_distribution<P: Probability>(
    sys: &SymbolicSystem<P>,
    partition: &Partition,
    s: &FiniteSubset,
    samples: u64,
    seed: u64,
) -> Result<Distribution<P>> {
    check_support(sys, s)?;
    if samples == 0 {
        return Err(Error::usage("at least one sample is required"));
    }
    let program = Program::compile(sys, vec![partition], &name_coords(s, 0))?;
    let sampler = match sys.measure() {
        Measure::Bernoulli { probs } | Measure::BlockFactor { base: probs, .. } => Sampler::Product(weighted(probs)?),
        Measure::Markov { transition, stationary } => {
            let mut steps = Vec::new();
            for w in program.cells.windows(2) {
                let power = matrix_power(transition, (w[1].coords()[0] - w[0].coords()[0]) as u64);
                steps.push(power.iter().map(|row| weighted(row)).collect::<Result<Vec<_>>>()?);
            }
            Sampler::Markov {
                initial: weighted(stationary)?,
                steps,
            }
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut digits = vec![0u32; program.cells.len()];
    let mut scratch = Vec::new();
    let mut window = Vec::new();
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for _ in 0..samples {
        program.sample(&mut rng, &sampler, &mut digits);
        *counts.entry(program.evaluate(&digits, &mut scratch, &mut window)).or_insert(0) += 1;
    }
    let entries = counts.into_iter().map(|(c, n)| (c, P::from_counts(n, samples)));
    Distribution::from_codes(s.len(), partition.labels(sys.alphabet()), entries)?.with_support(s.clone())
}

#[derive(Clone, Debug, Serialize)]
pub struct ProcessEntropyReport {
    /// `(n, H(name over box(n)) / #box(n))`.
    pub terms: Vec<(i64, f64)>,
    /// The last computed term.
    pub estimate: Option<f64>,
    /// Set when a scale exceeded the budget and the sequence was cut there.
    pub truncated: Option<String>,
}

/// Normalized window entropies over the standard boxes at each scale.
pub fn process_entropy<P: Probability>(
    sys: &SymbolicSystem<P>,
    partition: &Partition,
    scales: &[i64],
    budget: u128,
) -> Result<ProcessEntropyReport> {
    let mut terms = Vec::new();
    let mut truncated = None;
    for &n in scales {
        let s = foelner_box(sys.group(), n)?;
        match window_entropy(sys, partition, &s, budget) {
            Ok(h) => terms.push((n, h / s.len() as f64)),
            Err(e @ Error::FootprintTooLarge { .. }) => {
                truncated = Some(format!("stopped at scale {n}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(ProcessEntropyReport {
        estimate: terms.last().map(|t| t.1),
        terms,
        truncated,
    })
}

#[derive(Clone, Debug)]
pub struct AtomReport<P> {
    /// Name of the atom under the conditioning partition.
    pub atom: Vec<u32>,
    pub mass: P,
    /// `E(name over S | atom)`.
    pub conditional: Distribution<P>,
    /// `L(atom)`, the entropy of the conditional vector.
    pub entropy: f64,
}

#[derive(Clone, Debug)]
pub struct ConditionalReport<P> {
    pub atoms: Vec<AtomReport<P>>,
    /// `Σ_a μ(a) L(a)`.
    pub conditional_entropy: f64,
}

/// Conditional law of the `P`-name over `S` given the `A`-name over `s_a`.
pub fn conditional_vector<P: Probability>(
    sys: &SymbolicSystem<P>,
    partition: &Partition,
    s: &FiniteSubset,
    algebra: &Partition,
    s_a: &FiniteSubset,
    budget: u128,
) -> Result<ConditionalReport<P>> {
    check_support(sys, s)?;
    check_support(sys, s_a)?;
    let mut coords = name_coords(s_a, 0);
    coords.extend(name_coords(s, 1));
    let program = Program::compile(sys, vec![algebra, partition], &coords)?;
    let joint = program.enumerate(budget)?;
    let base = program.name_base;
    let (la, lp) = (algebra.labels(sys.alphabet()), partition.labels(sys.alphabet()));
    let mut grouped: BTreeMap<u64, Vec<(u64, P)>> = BTreeMap::new();
    for (code, p) in joint {
        let name = decode(code, coords.len(), base);
        let (a, rest) = name.split_at(s_a.len());
        grouped.entry(encode(a, la)).or_default().push((encode(rest, lp), p));
    }
    let mut atoms = Vec::with_capacity(grouped.len());
    let mut conditional_entropy = 0.0;
    for (a_code, entries) in grouped {
        let mass = entries.iter().fold(P::zero(), |acc, (_, p)| acc + p.clone());
        let conditional = Distribution::from_codes(
            s.len(),
            lp,
            entries.into_iter().map(|(c, p)| (c, p / mass.clone())),
        )?
        .with_support(s.clone())?;
        let entropy = conditional.entropy();
        conditional_entropy += mass.to_f64() * entropy;
        atoms.push(AtomReport {
            atom: decode(a_code, s_a.len(), la),
            mass,
            conditional,
            entropy,
        });
    }
    Ok(ConditionalReport {
        atoms,
        conditional_entropy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupSpec;
    use crate::symbolic::BlockCode;
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn z1() -> GroupSpec {
        GroupSpec::lattice(1).unwrap()
    }

    fn ints(v: &[i64]) -> FiniteSubset {
        FiniteSubset::from_coords(z1(), v.iter().map(std::slice::from_ref)).unwrap()
    }

    fn fair() -> SymbolicSystem<BigRational> {
        SymbolicSystem::bernoulli(z1(), vec![q(1, 2), q(1, 2)]).unwrap()
    }

    fn markov9() -> SymbolicSystem<BigRational> {
        SymbolicSystem::markov(vec![vec![q(9, 10), q(1, 10)], vec![q(1, 10), q(9, 10)]], None).unwrap()
    }

    fn xor_factor() -> SymbolicSystem<BigRational> {
        SymbolicSystem::block_factor(z1(), vec![q(1, 2), q(1, 2)], ints(&[0, 1]), BlockCode::Xor).unwrap()
    }

    #[test]
    fn fair_coin_on_three_sites_is_uniform() {
        let d = window_distribution(&fair(), &Partition::Identity, &ints(&[0, 7, 19]), DEFAULT_BUDGET).unwrap();
        assert_eq!(d.len(), 8);
        assert!(d.probabilities().all(|p| *p == q(1, 8)));
    }

    #[test]
    fn markov_pairs() {
        let d = window_distribution(&markov9(), &Partition::Identity, &ints(&[0, 1]), DEFAULT_BUDGET).unwrap();
        assert_eq!(d.probability(&[0, 0]), q(45, 100));
        assert_eq!(d.probability(&[1, 1]), q(45, 100));
        assert_eq!(d.probability(&[0, 1]), q(5, 100));
        assert_eq!(d.probability(&[1, 0]), q(5, 100));
    }

    #[test]
    fn xor_of_fair_coins() {
        let d = window_distribution(&xor_factor(), &Partition::Identity, &ints(&[0]), DEFAULT_BUDGET).unwrap();
        assert_eq!(d.probability(&[0]), q(1, 2));
        assert_eq!(d.probability(&[1]), q(1, 2));
    }

    #[test]
    fn xor_rate_with_gaps() {
        let sys = xor_factor();
        for g in 2..6 {
            let r = spread_entropy_rate(&sys, &Partition::Identity, &ints(&[0, g]), DEFAULT_BUDGET).unwrap();
            assert_eq!(r, 1.0);
        }
    }

    #[test]
    fn markov_chain_rule_matches_enumeration() {
        let sys = markov9();
        let s = ints(&[0, 1, 3, 8]);
        let direct = window_distribution(&sys, &Partition::Identity, &s, DEFAULT_BUDGET).unwrap().entropy();
        let fast = window_entropy(&sys, &Partition::Identity, &s, DEFAULT_BUDGET).unwrap();
        assert!((direct - fast).abs() < 1e-12);
    }

    #[test]
    fn budget_is_enforced() {
        let s = FiniteSubset::cube(z1(), 30).unwrap();
        let err = window_distribution(&fair(), &Partition::Identity, &s, DEFAULT_BUDGET).unwrap_err();
        assert!(matches!(err, Error::FootprintTooLarge { cells: 30, .. }));
        // independence still gives the entropy
        assert_eq!(window_entropy(&fair(), &Partition::Identity, &s, DEFAULT_BUDGET).unwrap(), 30.0);
    }

    #[test]
    fn bernoulli_process_entropy_is_constant() {
        let z2 = GroupSpec::lattice(2).unwrap();
        let sys = SymbolicSystem::bernoulli(z2, vec![0.7, 0.3]).unwrap();
        let r = process_entropy(&sys, &Partition::Identity, &[1, 2, 4, 8], DEFAULT_BUDGET).unwrap();
        let h = shannon_entropy(&[0.7, 0.3]);
        assert!(r.terms.iter().all(|(_, t)| (t - h).abs() < 1e-12));
    }

    #[test]
    fn markov_process_entropy_decreases_to_rate() {
        let sys = SymbolicSystem::markov(vec![vec![0.9, 0.1], vec![0.1, 0.9]], None).unwrap();
        let scales: Vec<i64> = (1..=20).collect();
        let r = process_entropy(&sys, &Partition::Identity, &scales, DEFAULT_BUDGET).unwrap();
        let rate = shannon_entropy(&[0.9, 0.1]);
        for w in r.terms.windows(2) {
            assert!(w[1].1 < w[0].1);
        }
        // (1 + (n-1) H(0.9)) / n
        for &(n, t) in &r.terms {
            let oracle = (1.0 + (n - 1) as f64 * rate) / n as f64;
            assert!((t - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn majority_process_entropy_is_nonincreasing() {
        let sys =
            SymbolicSystem::block_factor(z1(), vec![0.7, 0.3], ints(&[-1, 0, 1]), BlockCode::Majority).unwrap();
        let scales: Vec<i64> = (1..=20).collect();
        let r = process_entropy(&sys, &Partition::Identity, &scales, DEFAULT_BUDGET).unwrap();
        assert!(r.truncated.is_none());
        for w in r.terms.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-12, "{w:?}");
        }
    }

    #[test]
    fn monte_carlo_is_seeded() {
        let sys = SymbolicSystem::markov(vec![vec![0.9, 0.1], vec![0.1, 0.9]], None).unwrap();
        let s = ints(&[0, 1, 2]);
        let a = monte_carlo_distribution(&sys, &Partition::Identity, &s, 500, 7).unwrap();
        let b = monte_carlo_distribution(&sys, &Partition::Identity, &s, 500, 7).unwrap();
        assert_eq!(a, b);
        let one = monte_carlo_distribution(&sys, &Partition::Identity, &s, 1, 3).unwrap();
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn monte_carlo_tracks_exact_law() {
        let sys = SymbolicSystem::markov(vec![vec![0.9, 0.1], vec![0.1, 0.9]], None).unwrap();
        let s = ints(&[0, 2, 3]);
        let exact = window_distribution(&sys, &Partition::Identity, &s, DEFAULT_BUDGET).unwrap();
        let samples = 4000u64;
        let bound = 3.0 * (8.0 / samples as f64).sqrt();
        let within = (0..40)
            .filter(|&seed| {
                let est = monte_carlo_distribution(&sys, &Partition::Identity, &s, samples, seed).unwrap();
                est.total_variation(&exact) <= bound
            })
            .count();
        assert!(within >= 38, "{within}/40");
    }

    #[test]
    fn conditioning_on_the_previous_site() {
        let sys = markov9();
        let r = conditional_vector(&sys, &Partition::Identity, &ints(&[0]), &Partition::Identity, &ints(&[-1]), DEFAULT_BUDGET)
            .unwrap();
        assert_eq!(r.atoms.len(), 2);
        let h = shannon_entropy(&[0.9, 0.1]);
        for atom in &r.atoms {
            assert!((atom.entropy - h).abs() < 1e-12);
        }
        assert!((r.conditional_entropy - h).abs() < 1e-12);
    }

    #[test]
    fn trivial_algebra_gives_plain_entropy() {
        let sys = markov9();
        let trivial = Partition::recode(z1(), 1, vec![0, 0]);
        let s = ints(&[0, 1, 2]);
        let r = conditional_vector(&sys, &Partition::Identity, &s, &trivial, &ints(&[0]), DEFAULT_BUDGET).unwrap();
        assert_eq!(r.atoms.len(), 1);
        let plain = window_distribution(&sys, &Partition::Identity, &s, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.atoms[0].conditional.entries(), plain.entries());
    }

    #[test]
    fn independent_coordinates_condition_away() {
        // symbol = 2 * first + second, both coordinates independent
        let p = [q(7, 10), q(3, 10)];
        let r = [q(1, 4), q(3, 4)];
        let probs = vec![
            p[0].clone() * r[0].clone(),
            p[0].clone() * r[1].clone(),
            p[1].clone() * r[0].clone(),
            p[1].clone() * r[1].clone(),
        ];
        let sys = SymbolicSystem::bernoulli(z1(), probs).unwrap();
        let first = Partition::recode(z1(), 2, vec![0, 0, 1, 1]);
        let second = Partition::recode(z1(), 2, vec![0, 1, 0, 1]);
        let s = ints(&[0, 1]);
        let rep = conditional_vector(&sys, &first, &s, &second, &ints(&[-1, 0, 1, 2]), DEFAULT_BUDGET).unwrap();
        let h = 2.0 * shannon_entropy(&[0.7, 0.3]);
        assert!(rep.atoms.iter().all(|a| (a.entropy - h).abs() < 1e-12));
    }

    #[test]
    fn windowed_partition_on_heisenberg() {
        let h = GroupSpec::Heisenberg3;
        let sys = SymbolicSystem::bernoulli(h, vec![q(1, 2), q(1, 2)]).unwrap();
        let window = FiniteSubset::new(h, [h.identity(), h.element(&[1, 0, 0]).unwrap()]).unwrap();
        let part = Partition::Windowed {
            window,
            labels: 2,
            table: vec![0, 1, 1, 0],
        };
        let s = FiniteSubset::new(h, [h.identity(), h.element(&[0, 1, 0]).unwrap()]).unwrap();
        let d = window_distribution(&sys, &part, &s, DEFAULT_BUDGET).unwrap();
        assert!(d.probabilities().all(|p| *p == q(1, 4)));
    }

    #[test]
    fn matrix_powers() {
        let m = vec![vec![q(9, 10), q(1, 10)], vec![q(1, 10), q(9, 10)]];
        let p = matrix_power(&m, 3);
        // (1 + 0.8^3) / 2
        assert_eq!(p[0][0], q(1512, 2000));
    }
}
