//! Quasi-tilings of finite sets by right translates of tile shapes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::ratio::{count_ratio, ratio_to_f64, serde_ratio, Ratio};
use crate::subset::FiniteSubset;

/// One placed tile: the part `used ⊆ shapes[tile_index]` translated to `used · center`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TilePlacement {
    pub tile_index: usize,
    pub center: GroupElement,
    pub used: FiniteSubset,
}

impl TilePlacement {
    pub fn image(&self) -> Result<FiniteSubset> {
        self.used.right_translate(&self.center)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QuasiTiling {
    pub shapes: Vec<FiniteSubset>,
    pub placements: Vec<TilePlacement>,
    pub target: FiniteSubset,
    #[serde(with = "serde_ratio")]
    pub epsilon: Ratio,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ConditionReport {
    pub pass: bool,
    /// Indices into `placements` that break the condition.
    pub offending: Vec<usize>,
    pub detail: Option<String>,
}

impl ConditionReport {
    fn from_offending(offending: Vec<usize>, detail: Option<String>) -> Self {
        ConditionReport {
            pass: offending.is_empty() && detail.is_none(),
            offending,
            detail,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TilingVerdict {
    pub pass: bool,
    /// Each used part is a subset of its shape holding at least `(1-eps)` of it.
    pub shape_fill: ConditionReport,
    /// Translates are pairwise disjoint and inside the target.
    pub disjoint_inside: ConditionReport,
    /// The union covers at least `(1-eps)` of the target.
    pub coverage_condition: ConditionReport,
    #[serde(with = "serde_ratio")]
    pub coverage: Ratio,
    pub covered: usize,
    pub target_size: usize,
}

impl QuasiTiling {
    pub fn coverage(&self) -> Ratio {
        let covered: usize = self.placements.iter().map(|p| p.used.len()).sum();
        count_ratio(covered, self.target.len().max(1))
    }

    pub fn tile_count(&self) -> usize {
        self.placements.len()
    }
}

fn at_least_fraction(count: usize, whole: usize, epsilon: Ratio) -> bool {
    // count >= (1 - eps) * whole, in exact arithmetic
    count_ratio(count, 1) >= (Ratio::from_integer(1) - epsilon) * count_ratio(whole, 1)
}

/// Checks the three quasi-tiling conditions exactly.
pub fn verify_quasi_tiling(t: &QuasiTiling) -> TilingVerdict {
    let group = t.target.group();
    let mut fill_bad = Vec::new();
    let mut shape_problems = Vec::new();
    for (i, h) in t.shapes.iter().enumerate() {
        if h.group() != group || !h.contains_identity() {
            shape_problems.push(format!("shape {i} must contain the identity of {group}"));
        }
    }
    for (j, p) in t.placements.iter().enumerate() {
        let ok = match t.shapes.get(p.tile_index) {
            Some(h) => p.used.is_subset(h) && at_least_fraction(p.used.len(), h.len(), t.epsilon),
            None => false,
        };
        if !ok {
            fill_bad.push(j);
        }
    }
    let shape_fill = ConditionReport::from_offending(
        fill_bad,
        (!shape_problems.is_empty()).then(|| shape_problems.join("; ")),
    );

    let mut owner: Vec<Option<usize>> = vec![None; t.target.len()];
    let mut disjoint_bad = Vec::new();
    let mut covered = 0usize;
    for (j, p) in t.placements.iter().enumerate() {
        let mut clean = p.center.group() == group;
        if clean {
            for h in &p.used {
                let Ok(g) = h.mul(&p.center) else {
                    clean = false;
                    break;
                };
                match t.target.position(&g) {
                    Some(idx) => match owner[idx] {
                        None => {
                            owner[idx] = Some(j);
                            covered += 1;
                        }
                        Some(prev) => {
                            clean = false;
                            if !disjoint_bad.contains(&prev) {
                                disjoint_bad.push(prev);
                            }
                        }
                    },
                    None => clean = false,
                }
            }
        }
        if !clean {
            disjoint_bad.push(j);
        }
    }
    disjoint_bad.sort_unstable();
    disjoint_bad.dedup();
    let disjoint_inside = ConditionReport::from_offending(disjoint_bad, None);

    let coverage = count_ratio(covered, t.target.len().max(1));
    let coverage_ok = !t.target.is_empty() && at_least_fraction(covered, t.target.len(), t.epsilon);
    let coverage_condition = ConditionReport::from_offending(
        Vec::new(),
        (!coverage_ok).then(|| format!("covered {covered} of {}", t.target.len())),
    );

    TilingVerdict {
        pass: shape_fill.pass && disjoint_inside.pass && coverage_condition.pass,
        shape_fill,
        disjoint_inside,
        coverage_condition,
        coverage,
        covered,
        target_size: t.target.len(),
    }
}

/// Greedy quasi-tiler.
///
/// Centers are scanned in the canonical listing order of `F`, tiles from
/// largest to smallest. A first pass places only translates that are fully
/// disjoint from what is already covered; a second pass admits translates
/// overlapping the covered region in at most `eps * #H` cells and keeps the
/// uncovered part. Scanning stops once `F` is fully covered.
pub fn greedy_quasi_tile(f: &FiniteSubset, tiles: &[FiniteSubset], epsilon: Ratio) -> Result<QuasiTiling> {
    let zero = Ratio::from_integer(0);
    let one = Ratio::from_integer(1);
    if f.is_empty() {
        return Err(Error::usage("cannot tile the empty set"));
    }
    if tiles.is_empty() {
        return Err(Error::usage("at least one tile shape is required"));
    }
    if epsilon <= zero || epsilon >= one {
        return Err(Error::usage("epsilon must lie strictly between 0 and 1"));
    }
    for (i, h) in tiles.iter().enumerate() {
        if h.group() != f.group() {
            return Err(Error::MixedGroups {
                left: f.group(),
                right: h.group(),
            });
        }
        if !h.contains_identity() {
            return Err(Error::usage(format!("tile {i} does not contain the identity")));
        }
    }

    let mut order: Vec<usize> = (0..tiles.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(tiles[i].len()));

    let mut candidates: Vec<GroupElement> = f.elements().to_vec();
    f.group().canonical_sort(&mut candidates)?;

    let mut covered = vec![false; f.len()];
    let mut remaining = f.len();
    let mut placements = Vec::new();

    // target indices hit by the current translate
    let mut hits: Vec<usize> = Vec::new();
    'passes: for strict in [true, false] {
        for &i in &order {
            let shape = &tiles[i];
            let allowed = if strict {
                0
            } else {
                // largest overlap with #used >= (1-eps)#H
                let max = (epsilon * count_ratio(shape.len(), 1)).to_integer();
                max.min(shape.len() as i64 - 1).max(0) as usize
            };
            if !strict && allowed == 0 {
                continue;
            }
            for c in &candidates {
                if remaining == 0 {
                    break 'passes;
                }
                if strict {
                    // the identity is in every shape, so c itself must be free
                    match f.position(c) {
                        Some(idx) if !covered[idx] => {}
                        _ => continue,
                    }
                }
                hits.clear();
                let mut overlap = 0usize;
                let mut fits = true;
                for h in shape {
                    match f.position(&h.mul(c)?) {
                        Some(idx) => {
                            if covered[idx] {
                                overlap += 1;
                                if overlap > allowed {
                                    fits = false;
                                    break;
                                }
                            }
                            hits.push(idx);
                        }
                        None => {
                            fits = false;
                            break;
                        }
                    }
                }
                if !fits || overlap == shape.len() {
                    continue;
                }
                let mut used = Vec::with_capacity(shape.len() - overlap);
                for (h, &idx) in shape.iter().zip(&hits) {
                    if !covered[idx] {
                        covered[idx] = true;
                        remaining -= 1;
                        used.push(h.clone());
                    }
                }
                placements.push(TilePlacement {
                    tile_index: i,
                    center: c.clone(),
                    used: FiniteSubset::new(f.group(), used)?,
                });
            }
        }
    }

    let tiling = QuasiTiling {
        shapes: tiles.to_vec(),
        placements,
        target: f.clone(),
        epsilon,
    };
    let covered_count = f.len() - remaining;
    if !at_least_fraction(covered_count, f.len(), epsilon) {
        return Err(Error::CoverageNotReached {
            achieved: ratio_to_f64(&tiling.coverage()),
            required: 1.0 - ratio_to_f64(&epsilon),
            partial: Box::new(tiling),
        });
    }
    Ok(tiling)
}
