//! `castle build|invariance|average|transfer|image` over castle JSON files.

use serde::{Deserialize, Serialize};
use serde_json::json;

use amenable::castles::{
    box_castle, boustrophedon, build_castle, castle_average_discrepancy, castle_invariance, check_cocycle,
    image_castle, is_castle_invariant, transfer_spread, Castle, Cocycle, Tower,
};
use amenable::model::{FiniteModel, GroupAction};
use amenable::ratio::format_ratio;
use amenable::spreadset::{achieved_quasi_spread_level, is_uniform, Listing, SetValuedFunction};
use amenable::{FiniteSubset, GroupSpec, Ratio};

use crate::error::CliError;
use crate::params::{parse_int_list, parse_range, parse_set, read_inline_or_file, Params};
use crate::report::{ratio_decimal, Report, Table};
use crate::scenarios::{check_keys, sign_observable};

/// How the towers act on the torus points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionKind {
    /// The lattice acting by translation.
    Translation,
    /// The integers acting along the boustrophedon path.
    Boustrophedon,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerFile {
    pub shape: Vec<Vec<i64>>,
    /// Base points as torus coordinates.
    pub base: Vec<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CastleFile {
    pub moduli: Vec<i64>,
    pub action: ActionKind,
    pub towers: Vec<TowerFile>,
}

struct Loaded {
    model: FiniteModel,
    cocycle: Option<Cocycle>,
    castle: Castle,
}

impl CastleFile {
    pub fn from_castle(model: &FiniteModel, action: ActionKind, castle: &Castle) -> Self {
        let towers = castle
            .towers()
            .iter()
            .map(|t| TowerFile {
                shape: t.shape.iter().map(|g| g.coords().to_vec()).collect(),
                base: t.base.iter().map(|&x| model.point_coords(x)).collect(),
            })
            .collect();
        CastleFile {
            moduli: model.moduli().to_vec(),
            action,
            towers,
        }
    }

    fn load(&self) -> Result<Loaded, CliError> {
        let group = GroupSpec::lattice(self.moduli.len() as u32)?;
        let model = FiniteModel::new(group, self.moduli.clone())?;
        let cocycle = match self.action {
            ActionKind::Translation => None,
            ActionKind::Boustrophedon => Some(boustrophedon(&model)?),
        };
        let action: &dyn GroupAction = match &cocycle {
            Some(c) => c,
            None => &model,
        };
        let mut towers = Vec::with_capacity(self.towers.len());
        for t in &self.towers {
            let shape = FiniteSubset::from_coords(action.group(), t.shape.iter().map(Vec::as_slice))?;
            let mut base = Vec::with_capacity(t.base.len());
            for c in &t.base {
                if c.len() != self.moduli.len() || c.iter().zip(&self.moduli).any(|(v, m)| *v < 0 || v >= m) {
                    return Err(CliError::usage(format!("base point {c:?} is not a torus point")));
                }
                base.push(model.point_index(c));
            }
            towers.push(Tower { shape, base });
        }
        let castle = Castle::new(action, towers)?;
        Ok(Loaded { model, cocycle, castle })
    }
}

/// Reads a castle file, or the castle inside a report envelope.
fn read_castle(p: &Params) -> Result<Loaded, CliError> {
    let text = read_inline_or_file(&format!("@{}", p.required("castle")?.trim_start_matches('@')))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("bad castle json: {e}")))?;
    let inner = value.pointer("/result/castle").cloned().unwrap_or(value);
    let file: CastleFile =
        serde_json::from_value(inner).map_err(|e| CliError::usage(format!("bad castle json: {e}")))?;
    file.load()
}

fn castle_summary(c: &Castle) -> serde_json::Value {
    json!({
        "towers": c.towers().len(),
        "points": c.num_points(),
        "image_size": c.image_size(),
        "image_measure": format_ratio(&c.image_measure()),
    })
}

pub fn build(p: &Params, seed: u64) -> Result<Report, CliError> {
    check_keys("castle build", p, &[], &["torus", "dim", "box", "tiles", "eps"])?;
    let side: i64 = p.parse_or("torus", 64)?;
    let dim: u32 = p.parse_or("dim", 2)?;
    let model = FiniteModel::torus(dim, side)?;
    let castle = match (p.get("box"), p.get("tiles")) {
        (Some(_), Some(_)) => return Err(CliError::usage("give either box or tiles, not both")),
        (Some(_), None) => box_castle(&model, p.parse_required("box")?)?,
        (None, tiles) => {
            let sides = parse_int_list(tiles.unwrap_or("8,4"))?;
            let shapes = sides
                .iter()
                .map(|&s| FiniteSubset::cube(model.group(), s))
                .collect::<amenable::Result<Vec<_>>>()?;
            build_castle(&model, &shapes, p.ratio_or("eps", Ratio::new(1, 10))?)?
        }
    };
    let file = CastleFile::from_castle(&model, ActionKind::Translation, &castle);
    let mut report = Report::new(
        "castle-build",
        p,
        seed,
        json!({"summary": castle_summary(&castle), "castle": file}),
    )?;
    report.summary = Some(format!(
        "{} towers covering {} of the torus",
        castle.towers().len(),
        format_ratio(&castle.image_measure())
    ));
    Ok(report)
}

pub fn invariance(p: &Params, seed: u64) -> Result<Report, CliError> {
    check_keys("castle invariance", p, &["castle"], &["N", "n-range"])?;
    let loaded = read_castle(p)?;
    let ns: Vec<i64> = match (p.get("N"), p.get("n-range")) {
        (Some(_), Some(_)) => return Err(CliError::usage("give either N or n-range, not both")),
        (_, Some(r)) => parse_range(r)?,
        _ => vec![p.parse_or("N", 4)?],
    };
    if ns.iter().any(|&n| n < 1) {
        return Err(CliError::usage("N must be positive"));
    }
    let mut table = Table::new(&["n", "defect", "invariant"]);
    let mut rows = Vec::new();
    for &n in &ns {
        let defect = castle_invariance(&loaded.castle, n as usize)?;
        let invariant = is_castle_invariant(defect, n as usize);
        table.push(vec![n.to_string(), ratio_decimal(&defect), invariant.to_string()]);
        rows.push(json!({"n": n, "defect": format_ratio(&defect), "invariant": invariant}));
    }
    let report = Report::new(
        "castle-invariance",
        p,
        seed,
        json!({"summary": castle_summary(&loaded.castle), "rows": rows}),
    )?;
    Ok(if p.has("n-range") { report.with_table(table) } else { report })
}

pub fn average(p: &Params, seed: u64) -> Result<Report, CliError> {
    check_keys("castle average", p, &["castle"], &["observable"])?;
    let loaded = read_castle(p)?;
    let points = loaded.castle.num_points();
    let (f, source) = match p.get("observable") {
        Some(t) => {
            let f: Vec<i64> = serde_json::from_str(&read_inline_or_file(t)?)
                .map_err(|e| CliError::usage(format!("observable must be a JSON integer array: {e}")))?;
            (f, "file")
        }
        None => (sign_observable(points, seed), "seeded-signs"),
    };
    let d = castle_average_discrepancy(&loaded.castle, &f)?;
    Report::new(
        "castle-average",
        p,
        seed,
        json!({"summary": castle_summary(&loaded.castle), "observable": source, "discrepancy": d}),
    )
}

pub fn transfer(p: &Params, seed: u64) -> Result<Report, CliError> {
    check_keys("castle transfer", p, &["set"], &["torus", "dim", "max-level", "steps"])?;
    let side: i64 = p.parse_or("torus", 64)?;
    let dim: u32 = p.parse_or("dim", 2)?;
    let model = FiniteModel::torus(dim, side)?;
    let set = parse_set(model.group(), p.required("set")?)?;
    let cyc = boustrophedon(&model)?;
    let steps = parse_int_list(p.get("steps").unwrap_or("-2:2"))?;
    let cocycle = check_cocycle(&cyc, &set.difference_set()?, &steps)?;
    let s = SetValuedFunction::constant(set.elements(), model.num_points())?;
    let v = transfer_spread(&s, &cyc)?;
    let uniformity = is_uniform(&v, &cyc)?;
    let max_level: usize = p.parse_or("max-level", 128)?;
    let level = achieved_quasi_spread_level(&v, &Listing::canonical(GroupSpec::lattice(1)?), max_level)?;
    let mut report = Report::new(
        "castle-transfer",
        p,
        seed,
        json!({"set_size": set.len(), "level": level, "max_level": max_level, "uniformity": uniformity, "cocycle": cocycle}),
    )?;
    if !uniformity.pass {
        report.fail("transferred set-valued function is not uniform");
    }
    for msg in cocycle.failures.iter().take(10) {
        report.fail(format!("cocycle: {msg}"));
    }
    Ok(report)
}

pub fn image(p: &Params, seed: u64) -> Result<Report, CliError> {
    check_keys("castle image", p, &["castle"], &[])?;
    let loaded = read_castle(p)?;
    if loaded.cocycle.is_some() {
        return Err(CliError::usage("castle is already over the boustrophedon action"));
    }
    let cyc = boustrophedon(&loaded.model)?;
    let img = image_castle(&loaded.castle, &cyc)?;
    let file = CastleFile::from_castle(&loaded.model, ActionKind::Boustrophedon, &img);
    let mut report = Report::new(
        "castle-image",
        p,
        seed,
        json!({"source": castle_summary(&loaded.castle), "summary": castle_summary(&img), "castle": file}),
    )?;
    report.summary = Some(format!(
        "{} towers became {} classes over the same {} points",
        loaded.castle.towers().len(),
        img.towers().len(),
        img.image_size()
    ));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn castle_file_reloads_to_the_same_castle() {
        let model = FiniteModel::torus(2, 16).unwrap();
        let castle = box_castle(&model, 4).unwrap();
        let file = CastleFile::from_castle(&model, ActionKind::Translation, &castle);
        let back = file.load().unwrap();
        assert_eq!(back.castle.towers(), castle.towers());
        assert_eq!(back.castle.image_measure(), Ratio::from_integer(1));
    }

    #[test]
    fn overlapping_towers_are_an_invariant_failure() {
        let file = CastleFile {
            moduli: vec![8, 8],
            action: ActionKind::Translation,
            towers: vec![
                TowerFile {
                    shape: vec![vec![0, 0], vec![1, 0]],
                    base: vec![vec![0, 0]],
                },
                TowerFile {
                    shape: vec![vec![0, 0]],
                    base: vec![vec![1, 0]],
                },
            ],
        };
        assert!(matches!(file.load(), Err(CliError::Invariant(_))));
    }

    #[test]
    fn base_points_outside_the_torus_are_rejected() {
        let file = CastleFile {
            moduli: vec![8, 8],
            action: ActionKind::Translation,
            towers: vec![TowerFile {
                shape: vec![vec![0, 0]],
                base: vec![vec![8, 0]],
            }],
        };
        assert!(matches!(file.load(), Err(CliError::Usage(_))));
    }
}
