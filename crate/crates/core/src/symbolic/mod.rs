//! Shift systems over lattices and the Heisenberg group with exact measures.
//!
//! A configuration is `x : Γ -> Σ` and the group acts by `(T_g x)(h) = x(h g)`.
//! The name of `x` over `S` under a partition `P` is `(P(T_g x))_{g in S}`.

mod distribution;
mod engine;
mod prob;

pub use distribution::{format_name, parse_name, Distribution};
pub use engine::{
    conditional_vector, monte_carlo_distribution, process_entropy, spread_entropy_rate, window_distribution,
    window_entropy, AtomReport, ConditionalReport, ProcessEntropyReport, DEFAULT_BUDGET,
};
pub use prob::{binary_entropy, shannon_entropy, Probability, FLOAT_TOLERANCE};

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{elements_from_json, GroupSpec};
use crate::ratio::parse_big_rational;
use crate::subset::FiniteSubset;

/// Local rule of a sliding block code over a binary base window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BlockCode {
    /// Parity of the window.
    Xor,
    /// 1 iff strictly more than half the window is 1.
    Majority,
    /// Arbitrary map from window names (in window order) to `labels` symbols.
    Table { labels: u32, table: Vec<u32> },
}

impl BlockCode {
    pub fn labels(&self) -> u32 {
        match self {
            BlockCode::Xor | BlockCode::Majority => 2,
            BlockCode::Table { labels, .. } => *labels,
        }
    }

    pub(crate) fn apply(&self, base: &[u32], base_labels: u32) -> u32 {
        match self {
            BlockCode::Xor => base.iter().sum::<u32>() % 2,
            BlockCode::Majority => (2 * base.iter().filter(|&&b| b == 1).count() > base.len()) as u32,
            BlockCode::Table { table, .. } => table[distribution::encode(base, base_labels) as usize],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Measure<P> {
    /// I.i.d. symbols with the given letter distribution.
    Bernoulli { probs: Vec<P> },
    /// Stationary Markov chain on `Z`.
    Markov { transition: Vec<Vec<P>>, stationary: Vec<P> },
    /// The image of a Bernoulli base under a sliding block code with window `W`:
    /// `x(g) = code((b(w g))_{w in W})`.
    BlockFactor { base: Vec<P>, window: FiniteSubset, code: BlockCode },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicSystem<P> {
    group: GroupSpec,
    measure: Measure<P>,
}

fn check_letter<P: Probability>(probs: &[P], what: &str) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::usage(format!("{what} needs at least one symbol")));
    }
    if probs.iter().any(|p| *p < P::zero()) {
        return Err(Error::usage(format!("{what} has a negative probability")));
    }
    let total = probs.iter().fold(P::zero(), |a, p| a + p.clone());
    if !total.close_to(&P::one()) {
        return Err(Error::usage(format!("{what} sums to {total:?}, not 1")));
    }
    Ok(())
}

impl<P: Probability> SymbolicSystem<P> {
    pub fn bernoulli(group: GroupSpec, probs: Vec<P>) -> Result<Self> {
        check_letter(&probs, "Bernoulli vector")?;
        Ok(SymbolicSystem {
            group,
            measure: Measure::Bernoulli { probs },
        })
    }

    /// Markov chain on `Z`; the stationary vector is solved for when not given.
    pub fn markov(transition: Vec<Vec<P>>, stationary: Option<Vec<P>>) -> Result<Self> {
        let n = transition.len();
        if n == 0 || transition.iter().any(|row| row.len() != n) {
            return Err(Error::usage("transition matrix must be square and nonempty"));
        }
        for (i, row) in transition.iter().enumerate() {
            check_letter(row, &format!("transition row {i}"))?;
        }
        let stationary = match stationary {
            Some(pi) => pi,
            None => solve_stationary(&transition)?,
        };
        check_letter(&stationary, "stationary vector")?;
        for j in 0..n {
            let flow = (0..n).fold(P::zero(), |acc, i| acc + stationary[i].clone() * transition[i][j].clone());
            if !flow.close_to(&stationary[j]) {
                return Err(Error::usage("stationary vector is not invariant under the transition matrix"));
            }
        }
        Ok(SymbolicSystem {
            group: GroupSpec::Lattice { d: 1 },
            measure: Measure::Markov { transition, stationary },
        })
    }

    pub fn block_factor(group: GroupSpec, base: Vec<P>, window: FiniteSubset, code: BlockCode) -> Result<Self> {
        check_letter(&base, "base Bernoulli vector")?;
        if window.is_empty() || window.group() != group {
            return Err(Error::usage("block window must be a nonempty subset of the system's group"));
        }
        match &code {
            BlockCode::Xor | BlockCode::Majority if base.len() != 2 => {
                return Err(Error::usage("xor and majority codes need a binary base"));
            }
            BlockCode::Table { labels, table } => {
                let expected = (base.len() as u64).checked_pow(window.len() as u32);
                if expected != Some(table.len() as u64) {
                    return Err(Error::usage("code table must list every window name"));
                }
                if table.iter().any(|&l| l >= *labels) {
                    return Err(Error::usage("code table label outside its alphabet"));
                }
            }
            _ => {}
        }
        Ok(SymbolicSystem {
            group,
            measure: Measure::BlockFactor { base, window, code },
        })
    }

    pub fn group(&self) -> GroupSpec {
        self.group
    }

    pub fn measure(&self) -> &Measure<P> {
        &self.measure
    }

    /// Size of the system's alphabet `Σ`.
    pub fn alphabet(&self) -> u32 {
        match &self.measure {
            Measure::Bernoulli { probs } => probs.len() as u32,
            Measure::Markov { transition, .. } => transition.len() as u32,
            Measure::BlockFactor { code, .. } => code.labels(),
        }
    }

    /// Symbols per independent base cell.
    pub(crate) fn base_alphabet(&self) -> u32 {
        match &self.measure {
            Measure::Bernoulli { probs } => probs.len() as u32,
            Measure::Markov { transition, .. } => transition.len() as u32,
            Measure::BlockFactor { base, .. } => base.len() as u32,
        }
    }
}

/// Solves `π Π = π`, `Σ π = 1` by Gaussian elimination.
fn solve_stationary<P: Probability>(transition: &[Vec<P>]) -> Result<Vec<P>> {
    let n = transition.len();
    // rows: (Π^T - I) with the last equation replaced by normalization
    let mut a: Vec<Vec<P>> = (0..n)
        .map(|i| {
            let mut row: Vec<P> = (0..n)
                .map(|j| {
                    let v = transition[j][i].clone();
                    if i == j {
                        v - P::one()
                    } else {
                        v
                    }
                })
                .collect();
            row.push(P::zero());
            row
        })
        .collect();
    a[n - 1] = vec![P::one(); n + 1];
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| {
                let (x, y) = (a[r][col].to_f64().abs(), a[s][col].to_f64().abs());
                x.partial_cmp(&y).unwrap_or(std::cmp::Ordering::Equal)
            })
            .filter(|&r| !a[r][col].is_zero())
            .ok_or_else(|| Error::usage("transition matrix has no unique stationary vector"))?;
        a.swap(col, pivot);
        let inv = P::one() / a[col][col].clone();
        for v in a[col].iter_mut() {
            *v = v.clone() * inv.clone();
        }
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col && !row[col].is_zero() {
                let factor = row[col].clone();
                for (v, p) in row.iter_mut().zip(&pivot_row).skip(col) {
                    *v = v.clone() - factor.clone() * p.clone();
                }
            }
        }
    }
    Ok(a.into_iter().map(|row| row[n].clone()).collect())
}

/// How a configuration is read into labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Partition {
    /// `P(x) = x(id)`.
    Identity,
    /// `P(x) = table[(x(w))_{w in window}]`, window names in window order.
    Windowed { window: FiniteSubset, labels: u32, table: Vec<u32> },
}

impl Partition {
    /// The label set size under a system with alphabet `alphabet`.
    pub fn labels(&self, alphabet: u32) -> u32 {
        match self {
            Partition::Identity => alphabet,
            Partition::Windowed { labels, .. } => *labels,
        }
    }

    /// A single-site recoding `P(x) = table[x(id)]`.
    pub fn recode(group: GroupSpec, labels: u32, table: Vec<u32>) -> Self {
        Partition::Windowed {
            window: FiniteSubset::identity(group),
            labels,
            table,
        }
    }

    pub(crate) fn validate(&self, group: GroupSpec, alphabet: u32) -> Result<()> {
        if let Partition::Windowed { window, labels, table } = self {
            if window.is_empty() || window.group() != group {
                return Err(Error::usage("partition window must be a nonempty subset of the system's group"));
            }
            let expected = (alphabet as u64).checked_pow(window.len() as u32);
            if expected != Some(table.len() as u64) {
                return Err(Error::usage("partition table must list every window name"));
            }
            if table.iter().any(|l| l >= labels) {
                return Err(Error::usage("partition label outside its alphabet"));
            }
        }
        Ok(())
    }
}

/// A probability literal: `"7/10"`, `"0.7"` or a JSON number.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProbLiteral {
    Text(String),
    Number(f64),
}

impl ProbLiteral {
    pub fn to_rational(&self) -> Result<BigRational> {
        match self {
            ProbLiteral::Text(t) => parse_big_rational(t),
            // shortest round-trip decimal, so 0.7 means 7/10
            ProbLiteral::Number(v) => parse_big_rational(&v.to_string()),
        }
    }

    fn convert<P: Probability>(items: &[ProbLiteral]) -> Result<Vec<P>> {
        items.iter().map(|l| l.to_rational().map(|r| P::from_rational(&r))).collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CodeSpec {
    Named(String),
    Table { labels: u32, table: Vec<u32> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum MeasureSpec {
    Bernoulli {
        p: Vec<ProbLiteral>,
    },
    Markov {
        transition: Vec<Vec<ProbLiteral>>,
        #[serde(default)]
        stationary: Option<Vec<ProbLiteral>>,
    },
    BlockFactor {
        p: Vec<ProbLiteral>,
        window: serde_json::Value,
        code: CodeSpec,
    },
}

/// JSON description of a system, e.g.
/// `{"group": {"kind": "lattice", "d": 1}, "measure": {"type": "bernoulli", "p": ["1/2", "1/2"]}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemSpec {
    pub group: GroupSpec,
    pub measure: MeasureSpec,
}

impl SystemSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::usage(format!("bad system spec: {e}")))
    }

    pub fn build<P: Probability>(&self) -> Result<SymbolicSystem<P>> {
        let group = self.group.validate()?;
        match &self.measure {
            MeasureSpec::Bernoulli { p } => SymbolicSystem::bernoulli(group, ProbLiteral::convert(p)?),
            MeasureSpec::Markov { transition, stationary } => {
                if group != (GroupSpec::Lattice { d: 1 }) {
                    return Err(Error::Unsupported("Markov measures are defined on Z only".into()));
                }
                let rows = transition
                    .iter()
                    .map(|r| ProbLiteral::convert(r))
                    .collect::<Result<Vec<_>>>()?;
                let pi = stationary.as_deref().map(ProbLiteral::convert).transpose()?;
                SymbolicSystem::markov(rows, pi)
            }
            MeasureSpec::BlockFactor { p, window, code } => {
                let window = FiniteSubset::new(group, elements_from_json(group, window)?)?;
                let code = match code {
                    CodeSpec::Named(name) => match name.as_str() {
                        "xor" => BlockCode::Xor,
                        "majority" => BlockCode::Majority,
                        other => return Err(Error::usage(format!("unknown block code {other:?}"))),
                    },
                    CodeSpec::Table { labels, table } => BlockCode::Table {
                        labels: *labels,
                        table: table.clone(),
                    },
                };
                SymbolicSystem::block_factor(group, ProbLiteral::convert(p)?, window, code)
            }
        }
    }
}

/// JSON partition: `"identity"` or `{"window": [...], "labels": n, "table": [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PartitionSpec {
    Named(String),
    Windowed {
        window: serde_json::Value,
        labels: u32,
        table: Vec<u32>,
    },
}

impl PartitionSpec {
    pub fn build(&self, group: GroupSpec) -> Result<Partition> {
        match self {
            PartitionSpec::Named(n) if n == "identity" => Ok(Partition::Identity),
            PartitionSpec::Named(n) => Err(Error::usage(format!("unknown partition {n:?}"))),
            PartitionSpec::Windowed { window, labels, table } => Ok(Partition::Windowed {
                window: FiniteSubset::new(group, elements_from_json(group, window)?)?,
                labels: *labels,
                table: table.clone(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn stationary_vector_is_solved() {
        let sys: SymbolicSystem<BigRational> =
            SymbolicSystem::markov(vec![vec![q(9, 10), q(1, 10)], vec![q(3, 10), q(7, 10)]], None).unwrap();
        match sys.measure() {
            Measure::Markov { stationary, .. } => assert_eq!(stationary, &vec![q(3, 4), q(1, 4)]),
            _ => unreachable!(),
        }
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let z = GroupSpec::lattice(1).unwrap();
        assert!(SymbolicSystem::bernoulli(z, vec![q(1, 2), q(1, 3)]).is_err());
        assert!(SymbolicSystem::markov(vec![vec![0.5, 0.5], vec![0.5, 0.4]], None).is_err());
        assert!(SymbolicSystem::markov(vec![vec![0.9, 0.1], vec![0.1, 0.9]], Some(vec![0.6, 0.4])).is_err());
    }

    #[test]
    fn specs_parse() {
        let spec = SystemSpec::from_json(
            r#"{"group": {"kind": "lattice", "d": 1},
                "measure": {"type": "block-factor", "p": ["1/2", 0.5], "window": [0, 1], "code": "xor"}}"#,
        )
        .unwrap();
        let sys: SymbolicSystem<BigRational> = spec.build().unwrap();
        assert_eq!(sys.alphabet(), 2);
        let markov = SystemSpec::from_json(
            r#"{"group": {"kind": "lattice", "d": 1},
                "measure": {"type": "markov", "transition": [[0.9, 0.1], [0.1, 0.9]]}}"#,
        )
        .unwrap();
        let sys: SymbolicSystem<BigRational> = markov.build().unwrap();
        match sys.measure() {
            Measure::Markov { stationary, .. } => assert_eq!(stationary, &vec![q(1, 2), q(1, 2)]),
            _ => unreachable!(),
        }
        let part: PartitionSpec = serde_json::from_str(r#"{"window": [0], "labels": 1, "table": [0, 0]}"#).unwrap();
        assert!(part.build(GroupSpec::lattice(1).unwrap()).is_ok());
    }
}
