//! Concrete amenable groups: integer lattices and the discrete Heisenberg group.
//!
//! Elements carry their group tag so that mixing operands from different
//! groups is caught at the call site rather than producing a silently wrong
//! product. All arithmetic is exact on `i64` with a declared coordinate bound
//! of `2^31`.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Largest absolute coordinate accepted by the group law.
pub const COORD_BOUND: i64 = 1 << 31;

/// Cap on the Cayley-ball search used for Heisenberg word lengths.
const BALL_SEARCH_LIMIT: usize = 4_000_000;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GroupSpec {
    /// The free abelian group of rank `d`.
    Lattice { d: u32 },
    /// Integer Heisenberg group, `(a,b,c)(a',b',c') = (a+a', b+b', c+c'+ab')`.
    Heisenberg3,
}

impl GroupSpec {
    pub fn lattice(d: u32) -> Result<Self> {
        if d == 0 {
            return Err(Error::usage("lattice dimension must be at least 1"));
        }
        Ok(GroupSpec::Lattice { d })
    }

    pub fn validate(self) -> Result<Self> {
        match self {
            GroupSpec::Lattice { d } => GroupSpec::lattice(d),
            GroupSpec::Heisenberg3 => Ok(self),
        }
    }

    pub fn rank(self) -> usize {
        match self {
            GroupSpec::Lattice { d } => d as usize,
            GroupSpec::Heisenberg3 => 3,
        }
    }

    pub fn is_lattice(self) -> bool {
        matches!(self, GroupSpec::Lattice { .. })
    }

    pub fn identity(self) -> GroupElement {
        GroupElement {
            group: self,
            coords: SmallVec::from_elem(0, self.rank()),
        }
    }

    pub fn element(self, coords: &[i64]) -> Result<GroupElement> {
        if coords.len() != self.rank() {
            return Err(Error::usage(format!(
                "{self} expects {} coordinates, got {}",
                self.rank(),
                coords.len()
            )));
        }
        for &c in coords {
            check_bound(c)?;
        }
        Ok(GroupElement {
            group: self,
            coords: SmallVec::from_slice(coords),
        })
    }

    /// Symmetric generating set: `e_1, -e_1, e_2, -e_2, ...` for lattices,
    /// `(1,0,0)`, `(0,1,0)` and their inverses for Heisenberg.
    pub fn generators(self) -> Vec<GroupElement> {
        let mut gens = Vec::new();
        let axes = match self {
            GroupSpec::Lattice { d } => d as usize,
            GroupSpec::Heisenberg3 => 2,
        };
        for axis in 0..axes {
            let mut plus = self.identity();
            plus.coords[axis] = 1;
            let minus = plus.inv();
            gens.push(plus);
            gens.push(minus);
        }
        gens
    }

    /// Word length in the fixed generators. Closed form for lattices; a
    /// breadth-first ball search for Heisenberg.
    pub fn word_length(self, g: &GroupElement) -> Result<u64> {
        self.check_member(g)?;
        match self {
            GroupSpec::Lattice { .. } => Ok(g.coords.iter().map(|c| c.unsigned_abs()).sum()),
            GroupSpec::Heisenberg3 => {
                let lengths = self.ball_lengths(std::slice::from_ref(g))?;
                Ok(lengths[g])
            }
        }
    }

    /// Sorts elements into the canonical listing order: word length first,
    /// ties broken lexicographically on coordinates.
    pub fn canonical_sort(self, elems: &mut [GroupElement]) -> Result<()> {
        for g in elems.iter() {
            self.check_member(g)?;
        }
        match self {
            GroupSpec::Lattice { .. } => {
                elems.sort_by_cached_key(|g| {
                    let len: u64 = g.coords.iter().map(|c| c.unsigned_abs()).sum();
                    (len, g.coords.clone())
                });
            }
            GroupSpec::Heisenberg3 => {
                let lengths = self.ball_lengths(elems)?;
                elems.sort_by(|a, b| (lengths[a], &a.coords).cmp(&(lengths[b], &b.coords)));
            }
        }
        Ok(())
    }

    /// Breadth-first search of the Cayley graph until every target is reached.
    fn ball_lengths(self, targets: &[GroupElement]) -> Result<HashMap<GroupElement, u64>> {
        let mut pending: HashSet<&GroupElement> = targets.iter().collect();
        let mut seen: HashMap<GroupElement, u64> = HashMap::new();
        let id = self.identity();
        seen.insert(id.clone(), 0);
        pending.remove(&id);
        let gens = self.generators();
        let mut frontier = vec![id];
        let mut radius = 0u64;
        while !pending.is_empty() {
            radius += 1;
            let mut next = Vec::new();
            for g in &frontier {
                for s in &gens {
                    let h = g.mul(s)?;
                    if !seen.contains_key(&h) {
                        pending.remove(&h);
                        seen.insert(h.clone(), radius);
                        next.push(h);
                    }
                }
            }
            if seen.len() > BALL_SEARCH_LIMIT {
                return Err(Error::Unsupported(format!(
                    "word-length search exceeded {BALL_SEARCH_LIMIT} elements"
                )));
            }
            frontier = next;
        }
        Ok(seen)
    }

    fn check_member(self, g: &GroupElement) -> Result<()> {
        if g.group != self {
            return Err(Error::MixedGroups {
                left: self,
                right: g.group,
            });
        }
        Ok(())
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSpec::Lattice { d } => write!(f, "Z^{d}"),
            GroupSpec::Heisenberg3 => write!(f, "H3(Z)"),
        }
    }
}

impl FromStr for GroupSpec {
    type Err = Error;

    /// Accepts the JSON form or the shorthands `z1`, `z2`, ..., `heisenberg3`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            let spec: GroupSpec = serde_json::from_str(s)
                .map_err(|e| Error::usage(format!("bad group spec {s:?}: {e}")))?;
            return spec.validate();
        }
        let lower = s.to_ascii_lowercase();
        if lower == "heisenberg3" || lower == "heisenberg" || lower == "h3" {
            return Ok(GroupSpec::Heisenberg3);
        }
        if let Some(d) = lower.strip_prefix('z') {
            let d: u32 = d
                .trim_start_matches('^')
                .parse()
                .map_err(|_| Error::usage(format!("bad group shorthand {s:?}")))?;
            return GroupSpec::lattice(d);
        }
        Err(Error::usage(format!("unknown group {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    group: GroupSpec,
    coords: SmallVec<[i64; 3]>,
}

impl GroupElement {
    pub fn group(&self) -> GroupSpec {
        self.group
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    pub fn is_identity(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    /// Group product `self * other`.
    pub fn mul(&self, other: &GroupElement) -> Result<GroupElement> {
        if self.group != other.group {
            return Err(Error::MixedGroups {
                left: self.group,
                right: other.group,
            });
        }
        let mut coords = SmallVec::with_capacity(self.coords.len());
        match self.group {
            GroupSpec::Lattice { .. } => {
                for (a, b) in self.coords.iter().zip(&other.coords) {
                    coords.push(check_bound(a + b)?);
                }
            }
            GroupSpec::Heisenberg3 => {
                let (a, b, c) = (self.coords[0], self.coords[1], self.coords[2]);
                let (a2, b2, c2) = (other.coords[0], other.coords[1], other.coords[2]);
                let central = c as i128 + c2 as i128 + a as i128 * b2 as i128;
                let central = i64::try_from(central)
                    .map_err(|_| Error::CoordinateOutOfBounds { value: i64::MAX })?;
                coords.push(check_bound(a + a2)?);
                coords.push(check_bound(b + b2)?);
                coords.push(check_bound(central)?);
            }
        }
        Ok(GroupElement {
            group: self.group,
            coords,
        })
    }

    /// Group inverse. Exact for every element within the coordinate bound.
    pub fn inv(&self) -> GroupElement {
        let coords = match self.group {
            GroupSpec::Lattice { .. } => self.coords.iter().map(|c| -c).collect(),
            GroupSpec::Heisenberg3 => {
                let (a, b, c) = (self.coords[0], self.coords[1], self.coords[2]);
                SmallVec::from_slice(&[-a, -b, a * b - c])
            }
        };
        GroupElement {
            group: self.group,
            coords,
        }
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl Serialize for GroupElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords.as_slice().serialize(s)
    }
}

fn check_bound(c: i64) -> Result<i64> {
    if c.abs() > COORD_BOUND {
        Err(Error::CoordinateOutOfBounds { value: c })
    } else {
        Ok(c)
    }
}

/// First `n` elements of the canonical listing, starting at the identity.
pub fn enumerate(spec: GroupSpec, n: usize) -> Result<Vec<GroupElement>> {
    if n == 0 {
        return Err(Error::usage("enumerate requires n >= 1"));
    }
    let gens = spec.generators();
    let id = spec.identity();
    let mut seen: HashSet<GroupElement> = HashSet::from([id.clone()]);
    let mut out = vec![id.clone()];
    let mut frontier = vec![id];
    while out.len() < n {
        let mut layer = Vec::new();
        for g in &frontier {
            for s in &gens {
                let h = g.mul(s)?;
                if seen.insert(h.clone()) {
                    layer.push(h);
                }
            }
        }
        layer.sort();
        out.extend(layer.iter().take(n - out.len()).cloned());
        frontier = layer;
    }
    Ok(out)
}

/// Parses `[[x,y],...]` (or `[x,...]` for rank one) into group elements.
pub fn parse_elements(spec: GroupSpec, json: &str) -> Result<Vec<GroupElement>> {
    let value: serde_json::Value =
        serde_json::from_str(json).map_err(|e| Error::usage(format!("bad element list: {e}")))?;
    elements_from_json(spec, &value)
}

pub fn elements_from_json(spec: GroupSpec, value: &serde_json::Value) -> Result<Vec<GroupElement>> {
    let items = value
        .as_array()
        .ok_or_else(|| Error::usage("element list must be a JSON array"))?;
    items
        .iter()
        .map(|item| {
            let coords: Vec<i64> = match item {
                serde_json::Value::Number(n) => vec![n
                    .as_i64()
                    .ok_or_else(|| Error::usage("coordinates must be integers"))?],
                serde_json::Value::Array(cs) => cs
                    .iter()
                    .map(|c| c.as_i64().ok_or_else(|| Error::usage("coordinates must be integers")))
                    .collect::<Result<_>>()?,
                _ => return Err(Error::usage("each element must be a number or array")),
            };
            spec.element(&coords)
        })
        .collect()
}
