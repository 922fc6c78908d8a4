//! The scenario registry. Subcommands and `run --scenario` both land here.

use std::fmt::Display;
use std::path::PathBuf;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use amenable::castles::{
    box_castle, boustrophedon, build_castle, castle_average_discrepancy, castle_conditional_entropy,
    castle_invariance, check_cocycle, image_castle, is_castle_invariant, transfer_spread, Castle, LabeledProductModel,
};
use amenable::flatness::{delta_value, h_k, is_flat, lemma42_check, min_flat_delta, shannon_mcmillan_check};
use amenable::foelner::{foelner_box, InvarianceReport};
use amenable::model::{FiniteModel, GroupAction};
use amenable::quasitile::{greedy_quasi_tile, verify_quasi_tiling};
use amenable::ratio::{format_ratio, parse_big_rational};
use amenable::spreadset::{achieved_quasi_spread_level, is_k_spread, is_uniform, quasi_spread_measure, Listing, SetValuedFunction};
use amenable::symbolic::{
    monte_carlo_distribution, parse_name, process_entropy, spread_entropy_rate, window_distribution, window_entropy,
    Distribution, Partition, PartitionSpec, Probability, SymbolicSystem, SystemSpec, DEFAULT_BUDGET, FLOAT_TOLERANCE,
};
use amenable::{FiniteSubset, GroupElement, GroupSpec, Ratio};

use crate::error::CliError;
use crate::params::{parse_int_list, parse_range, parse_set, parse_set_list, read_inline_or_file, Params};
use crate::report::{num, ratio_decimal, Report, Table};

/// Slack for monotonicity assertions on float columns.
const MONOTONE_SLACK: f64 = 1e-12;

pub trait Scenario: Sync {
    fn name(&self) -> &'static str;
    fn about(&self) -> &'static str;
    fn required(&self) -> &'static [&'static str];
    fn optional(&self) -> &'static [&'static str];

    /// Rejects missing and unknown keys.
    fn validate(&self, p: &Params) -> Result<(), CliError> {
        check_keys(self.name(), p, self.required(), self.optional())
    }

    fn run(&self, p: &Params, seed: u64) -> Result<Report, CliError>;
}

pub(crate) fn check_keys(name: &str, p: &Params, required: &[&str], optional: &[&str]) -> Result<(), CliError> {
    for key in required {
        if !p.has(key) {
            return Err(CliError::usage(format!("scenario {name} needs parameter {key:?}")));
        }
    }
    for key in p.keys() {
        if !required.contains(&key) && !optional.contains(&key) {
            return Err(CliError::usage(format!("scenario {name} does not take parameter {key:?}")));
        }
    }
    Ok(())
}

static SCENARIOS: &[&dyn Scenario] = &[
    &FoelnerScan,
    &Tile,
    &SpreadVerify,
    &Entropy,
    &MixingScan,
    &Flatness,
    &SmCheck,
    &CastleSuite,
    &TransferSuite,
];

pub fn registry() -> &'static [&'static dyn Scenario] {
    SCENARIOS
}

pub fn find(name: &str) -> Result<&'static dyn Scenario, CliError> {
    SCENARIOS.iter().copied().find(|s| s.name() == name).ok_or_else(|| {
        let known: Vec<&str> = SCENARIOS.iter().map(|s| s.name()).collect();
        CliError::usage(format!("unknown scenario {name:?}; known: {}", known.join(", ")))
    })
}

/// Validates, then runs.
pub fn execute(name: &str, p: &Params, seed: u64) -> Result<Report, CliError> {
    let scenario = find(name)?;
    scenario.validate(p)?;
    scenario.run(p, seed)
}

fn system_text(p: &Params) -> Result<SystemSpec, CliError> {
    Ok(SystemSpec::from_json(&p.text("system")?)?)
}

fn partition(p: &Params, group: GroupSpec) -> Result<Partition, CliError> {
    let text = match p.get("partition") {
        None => return Ok(Partition::Identity),
        Some(t) => read_inline_or_file(t)?,
    };
    let spec = if text.trim_start().starts_with('{') {
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("bad partition: {e}")))?
    } else {
        PartitionSpec::Named(text.trim().to_string())
    };
    Ok(spec.build(group)?)
}

fn budget(p: &Params) -> Result<u128, CliError> {
    p.parse_or("budget", DEFAULT_BUDGET)
}

fn exact_mode(p: &Params) -> Result<bool, CliError> {
    match p.get("mode").unwrap_or("float") {
        "exact" => Ok(true),
        "float" => Ok(false),
        other => Err(CliError::usage(format!("mode must be exact or float, not {other:?}"))),
    }
}

/// Normalization tolerance in force: zero for exact rationals.
fn tolerance(exact: bool) -> f64 {
    if exact {
        0.0
    } else {
        FLOAT_TOLERANCE
    }
}

fn mode_name(exact: bool) -> &'static str {
    if exact {
        "exact"
    } else {
        "float"
    }
}

/// Runs once per grid point in parallel and keeps the input order.
fn grid<T: Sync, R: Send>(
    points: &[T],
    f: impl Fn(&T) -> Result<R, CliError> + Sync + Send,
) -> Result<Vec<R>, CliError> {
    points.par_iter().map(f).collect::<Vec<_>>().into_iter().collect()
}

pub struct FoelnerScan;

impl Scenario for FoelnerScan {
    fn name(&self) -> &'static str {
        "foelner-scan"
    }
    fn about(&self) -> &'static str {
        "defect and interior fraction of the standard boxes against K"
    }
    fn required(&self) -> &'static [&'static str] {
        &["K", "n-range"]
    }
    fn optional(&self) -> &'static [&'static str] {
        &["group"]
    }

    fn run(&self, p: &Params, seed: u64) -> Result<Report, CliError> {
        let group = p.group()?;
        let k = parse_set(group, p.required("K")?)?;
        let ns = parse_range(p.required("n-range")?)?;
        if ns.iter().any(|&n| n < 1) {
            return Err(CliError::usage("n-range must start at 1 or above"));
        }
        let reports = grid(&ns, |&n| Ok(InvarianceReport::new(&foelner_box(group, n)?, &k)?))?;
        let mut table = Table::new(&["n", "defect", "interior_fraction"]);
        let mut rows = Vec::new();
        for (n, r) in ns.iter().zip(&reports) {
            table.push(vec![n.to_string(), ratio_decimal(&r.defect), ratio_decimal(&r.interior_fraction)]);
            rows.push(json!({
                "n": n,
                "size": r.f.len(),
                "defect": format_ratio(&r.defect),
                "interior_fraction": format_ratio(&r.interior_fraction),
            }));
        }
        let result = json!({"group": group, "k_size": k.len(), "rows": rows});
        Ok(Report::new(self.name(), p, seed, result)?.with_table(table))
    }
}

pub struct Tile;

impl Scenario for Tile {
    fn name(&self) -> &'static str {
        "tile"
    }
    fn about(&self) -> &'static str {
        "greedy eps-quasi-tiling of F by the given tile shapes"
    }
    fn required(&self) -> &'static [&'static str] {
        &["F", "tiles", "eps"]
    }
    fn optional(&self) -> &'static [&'static str] {
        &["group"]
    }

    fn run(&self, p: &Params, seed: u64) -> Result<Report, CliError> {
        let group = p.group()?;
        let f = parse_set(group, p.required("F")?)?;
        let tiles = parse_set_list(group, p.required("tiles")?)?;
        let eps = p.ratio("eps")?;
        let (tiling, reached) = match greedy_quasi_tile(&f, &tiles, eps) {
            Ok(t) => (t, None),
            Err(amenable::Error::CoverageNotReached {
                achieved,
                required,
                partial,
            }) => (*partial, Some((achieved, required))),
            Err(e) => return Err(e.into()),
        };
        let verdict = verify_quasi_tiling(&tiling);
        let summary = format!(
            "coverage {}/{} = {} with {} tiles (eps {})",
            verdict.covered,
            verdict.target_size,
            format_ratio(&verdict.coverage),
            tiling.tile_count(),
            format_ratio(&eps)
        );
        let result = json!({
            "group": group,
            "coverage_reached": reached.is_none(),
            "tile_count": tiling.tile_count(),
            "verdict": verdict,
            "tiling": tiling,
        });
        let mut report = Report::new(self.name(), p, seed, result)?;
        if let Some((achieved, required)) = reached {
            report.fail(format!(
                "coverage-not-reached: achieved {achieved:.6}, required {required:.6}"
            ));
        } else {
            for (label, c) in [
                ("shape-fill", &verdict.shape_fill),
                ("disjoint-inside", &verdict.disjoint_inside),
                ("coverage", &verdict.coverage_condition),
            ] {
                if !c.pass {
                    report.fail(format!("{label}: {} offending placements", c.offending.len()));
                }
            }
        }
        report.summary = Some(summary);
        Ok(report)
    }
}

pub struct SpreadVerify;

impl Scenario for SpreadVerify {
    fn name(&self) -> &'static str {
        "spread-verify"
    }
    fn about(&self) -> &'static str {
        "K-spread certificate for a set, or N-quasi-spread measure for a set-valued function"
    }
    fn required(&self) -> &'static [&'static str] {
        &[]
    }
    fn optional(&self) -> &'static [&'static str] {
        &["group", "set", "K", "svf", "N", "listing"]
    }

    fn validate(&self, p: &Params) -> Result<(), CliError> {
        if p.has("svf") {
            check_keys(self.name(), p, &["svf", "N"], &["listing"])
        } else {
            check_keys(self.name(), p, &["set", "K"], &["group"])
        }
    }

    fn run(&self, p: &Params, seed: u64) -> Result<Report, CliError> {
        if p.has("svf") {
            let text = p.text("svf")?;
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| CliError::usage(format!("bad svf: {e}")))?;
            let svf = SetValuedFunction::from_json(&value)?;
            let n: usize = p.parse_required("N")?;
            let listing = match p.get("listing").unwrap_or("canonical") {
                "canonical" => Listing::canonical(svf.group()),
                "sup-norm" => Listing::SupNorm { group: svf.group() },
                other => return Err(CliError::usage(format!("unknown listing {other:?}"))),
            };
            let q = quasi_spread_measure(&svf, &listing, n)?;
            let mut report = Report::new(self.name(), p, seed, json!({"mode": "quasi", "report": q}))?;
            if !q.pass {
                report.fail(format!(
                    "not {n}-quasi-spread: measure of good points {}",
                    format_ratio(&q.measure)
                ));
            }
            return Ok(report);
        }
        let group = p.group()?;
        let s = parse_set(group, p.required("set")?)?;
        let k = parse_set(group, p.required("K")?)?;
        let cert = is_k_spread(&s, &k)?;
        let mut report = Report::new(
            self.name(),
            p,
            seed,
            json!({"mode": "spread", "set_size": s.len(), "k_size": k.len(), "certificate": cert}),
        )?;
        if let Some((a, b)) = &cert.worst_pair {
            report.fail(format!(
                "not K-spread: {} offending ordered pairs, first {a} and {b}",
                cert.offending_pairs
            ));
        }
        Ok(report)
    }
}

fn dump_distribution<P: Probability + Display>(d: &Distribution<P>) -> Result<String, CliError> {
    let mut t = Table::new(&["name", "probability"]);
    for (code, prob) in d.entries() {
        t.push(vec![d.format_name(*code), prob.to_string()]);
    }
    t.to_csv()
}

pub struct Entropy;

fn entropy_run<P: Probability + Display>(
    p: &Params,
    spec: &SystemSpec,
    seed: u64,
    exact: bool,
) -> Result<serde_json::Value, CliError> {
    let sys: SymbolicSystem<P> = spec.build()?;
    let group = sys.group();
    let part = partition(p, group)?;
    let window = parse_set(group, p.required("window")?)?;
    let budget = budget(p)?;
    let samples: Option<u64> = p.get("samples").map(|_| p.parse_required("samples")).transpose()?;
    let (entropy, names, method, dump) = match samples {
        Some(n) => {
            let d = monte_carlo_distribution(&sys, &part, &window, n, seed)?;
            (d.entropy(), Some(d.len()), "monte-carlo", Some(d))
        }
        None if p.has("dump") => {
            let d = window_distribution(&sys, &part, &window, budget)?;
            (d.entropy(), Some(d.len()), "exact-enumeration", Some(d))
        }
        None => (window_entropy(&sys, &part, &window, budget)?, None, "exact-enumeration", None),
    };
    let mut result = json!({
        "group": group,
        "mode": mode_name(exact),
        "tolerance": tolerance(exact),
        "method": method,
        "window_size": window.len(),
        "names": names,
        "entropy_bits": entropy,
        "rate": entropy / window.len() as f64,
    });
    if let (Some(path), Some(d)) = (p.get("dump"), dump) {
        result["dump"] = json!(path);
        result["dump_csv"] = json!(dump_distribution(&d)?);
    }
    if let Some(scales) = p.get("scales") {
        let scales = parse_int_list(scales)?;
        result["process_entropy"] = json!(process_entropy(&sys, &part, &scales, budget)?);
    }
    Ok(result)
}

impl Scenario for Entropy {
    fn name(&self) -> &'static str {
        "entropy"
    }
    fn about(&self) -> &'static str {
        "window entropy of a symbolic system, optionally dumping the name distribution"
    }
    fn required(&self) -> &'static [&'static str] {
        &["system", "window"]
    }
    fn optional(&self) -> &'static [&'static str] {
        &["partition", "mode", "budget", "samples", "dump", "scales"]
    }

    fn run(&self, p: &Params, seed: u64) -> Result<Report, CliError> {
        let spec = system_text(p)?;
        let exact = exact_mode(p)?;
        let mut result = if exact {
            entropy_run::<BigRational>(p, &spec, seed, exact)?
        } else {
            entropy_run::<f64>(p, &spec, seed, exact)?
        };
        let mut report = Report::new(self.name(), p, seed, json!({}))?;
        if let Some(csv) = result.as_object_mut().and_then(|o| o.remove("dump_csv")) {
            let path = PathBuf::from(p.required("dump")?);
            report.extra_files.push((path, csv.as_str().unwrap_or_default().to_string()));
        }
        report.summary = Some(format!(
            "H = {} bits over {} cells",
            num(result["entropy_bits"].as_f64().unwrap_or(f64::NAN)),
            result["window_size"]
        ));
        report.result = result;
        Ok(report)
    }
}

pub struct MixingScan;

fn progression(group: GroupSpec, gap: i64, size: usize) -> Result<FiniteSubset, CliError> {
    let elems = (0..size as i64)
        .map(|i| {
            let mut c = vec![0; group.rank()];
            c[0] = i * gap;
            group.element(&c)
        })
        .collect::<amenable::Result<Vec<GroupElement>>>()?;
    Ok(FiniteSubset::new(group, elems)?)
}

fn mixing_rows<P: Probability>(p: &Params, spec: &SystemSpec, gaps: &[i64], size: usize) -> Result<(f64, Vec<f64>), CliError> {
    let sys: SymbolicSystem<P> = spec.build()?;
    let group = sys.group();
    let part = partition(p, group)?;
    let budget = budget(p)?;
    let site = window_entropy(&sys, &part, &FiniteSubset::identity(group), budget)?;
    let rates = grid(gaps, |&g| {
        Ok(spread_entropy_rate(&sys, &part, &progression(group, g, size)?, budget)?)
    })?;
    Ok((site, rates))
}

impl Scenario for MixingScan {
    fn name(&self) -> &'static str {
        "mixing-scan"
    }
    fn about(&self) -> &'static str {
        "entropy rate over {0, g, 2g, ...} against the gap g"
    }
    fn required(&self) -> &'static [&'static str] {
        &["system", "gaps"]
    }
    fn optional(&self) -> &'static [&'static str] {
        &["partition", "mode", "budget", "set-size"]
    }

    fn run(&self, p: &Params, seed: u64) -> Result<Report, CliError> {
        let spec = system_text(p)?;
        let gaps = parse_int_list(p.required("gaps")?)?;
        if gaps.iter().any(|&g| g < 1) {
            return Err(CliError::usage("gaps must be positive"));
        }
        let size: usize = p.parse_or("set-size", 3)?;
        if size < 2 {
            return Err(CliError::usage("set-size must be at least 2"));
        }
        let exact = exact_mode(p)?;
        let (site, rates) = if exact {
            mixing_rows::<BigRational>(p, &spec, &gaps, size)?
        } else {
            mixing_rows::<f64>(p, &spec, &gaps, size)?
        };
        let mut table = Table::new(&["g", "rate", "gap"]);
        let mut rows = Vec::new();
        for (g, rate) in gaps.iter().zip(&rates) {
            table.push(vec![g.to_string(), num(*rate), num(site - rate)]);
            rows.push(json!({"g": g, "rate": rate, "gap": site - rate}));
        }
        let result = json!({"site_entropy": site, "set_size": size, "tolerance": tolerance(exact), "rows": rows});
        let mut report = Report::new(self.name(), p, seed, result)?.with_table(table);
        for (w, g) in rates.windows(2).zip(gaps.windows(2)) {
            if site - w[1] > site - w[0] + MONOTONE_SLACK {
                report.fail(format!("gap increases from g={} to g={}", g[0], g[1]));
            }
        }
        Ok(report)
    }
}

pub struct Flatness;

fn read_distribution<P: Probability>(text: &str, labels: Option<u32>) -> Result<Distribution<P>, CliError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CliError::usage(format!("bad distribution csv: {e}")))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CliError::usage(format!("distribution csv lacks a {name:?} column")))
    };
    let (name_col, prob_col) = (col("name")?, col("probability")?);
    let mut entries = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::usage(format!("bad distribution csv: {e}")))?;
        let name = parse_name(record.get(name_col).unwrap_or("").trim())?;
        let prob = parse_big_rational(record.get(prob_col).unwrap_or("").trim())?;
        entries.push((name, P::from_rational(&prob)));
    }
    let top = entries.iter().flat_map(|(n, _)| n.iter().copied()).max().unwrap_or(0);
    let labels = labels.unwrap_or((top + 1).max(2));
    Ok(Distribution::from_names(labels, entries)?)
}

fn flatness_run<P: Probability>(p: &Params, h: f64, delta: f64) -> Result<(serde_json::Value, bool), CliError> {
    let path = p.required("dist")?;
    let text = std::fs::read_to_string(path.strip_prefix('@').unwrap_or(path))
        .map_err(|e| CliError::usage(format!("cannot read {path}: {e}")))?;
    let labels = p.get("labels").map(|_| p.parse_required("labels")).transpose()?;
    let d: Distribution<P> = read_distribution(&text, labels)?;
    let report = is_flat(&d, h, delta);
    let pass = report.pass;
    let result = json!({
        "names": d.len(),
        "width": d.width(),
        "h_k": h_k(&d),
        "flatness": report,
        "min_flat_delta": format_ratio(&min_flat_delta(&d, h)),
        "bounds": lemma42_check(&d, h, delta),
    });
    Ok((result, pass))
}

impl Scenario for Flatness {
    fn name(&self) -> &'static str {
        "flatness"
    }
    fn about(&self) -> &'static str {
        "(h, delta)-flatness certificate for a distribution given as CSV"
    }
    fn required(&self) -> &'static [&'static str] {
        &["dist", "h", "delta"]
    }
    fn optional(&self) -> &'static [&'static str] {
        &["mode", "labels"]
    }

    fn run(&self, p: &Params, seed: u64) -> Result<Report, CliError> {
        let h: f64 = p.parse_required("h")?;
        let delta = delta_value(&p.ratio("delta")?);
        if !(h.is_finite() && h >= 0.0) || delta <= 0.0 {
            return Err(CliError::usage("h must be nonnegative and delta positive"));
        }
        let exact = exact_mode(p)?;
        let (mut result, pass) = if exact {
            flatness_run::<BigRational>(p, h, delta)?
        } else {
            flatness_run::<f64>(p, h, delta)?
        };
        result["tolerance"] = json!(tolerance(exact));
        let mut report = Report::new(self.name(), p, seed, result)?;
        if !pass {
            report.fail(format!(
                "not ({h}, {delta})-flat: best witness mass {}",
                report.result["flatness"]["achieved_mass"]
            ));
        }
        Ok(report)
    }
}

pub struct SmCheck;

fn sm_rows<P: Probability>(
    p: &Params,
    spec: &SystemSpec,
    scales: &[i64],
    delta: f64,
) -> Result<(f64, Vec<amenable::flatness::ScaleFlatness>), CliError> {
    let sys: SymbolicSystem<P> = spec.build()?;
    let part = partition(p, sys.group())?;
    let budget = budget(p)?;
    let h = match p.get("h") {
        Some(_) => p.parse_required("h")?,
        None => {
            let top = *scales.iter().max().unwrap_or(&1);
            process_entropy(&sys, &part, &[top], budget)?
                .estimate
                .ok_or_else(|| CliError::usage("entropy estimate exceeded the budget; pass h"))?
        }
    };
    let rows = grid(scales, |&n| {
        Ok(shannon_mcmillan_check(&sys, &part, &[n], h, delta, budget)?.remove(0))
    })?;
    Ok((h, rows))
}

impl Scenario for SmCheck {
    fn name(&self) -> &'static str {
        "sm-check"
    }
    fn about(&self) -> &'static str {
        "flatness of window distributions over the standard boxes as the scale grows"
    }
    fn required(&self) -> &'static [&'static str] {
        &["system", "scales", "delta"]
    }
    fn optional(&self) -> &'static [&'static str] {
        &["h", "partition", "mode", "budget"]
    }

    fn run(&self, p: &Params, seed: u64) -> Result<Report, CliError> {
        let spec = system_text(p)?;
        let scales = parse_int_list(p.required("scales")?)?;
        let delta = delta_value(&p.ratio("delta")?);
        let exact = exact_mode(p)?;
        let (h, rows) = if exact {
            sm_rows::<BigRational>(p, &spec, &scales, delta)?
        } else {
            sm_rows::<f64>(p, &spec, &scales, delta)?
        };
        let mut table = Table::new(&["n", "names", "flat", "achieved_mass", "min_flat_delta"]);
        for r in &rows {
            table.push(vec![
                r.n.to_string(),
                r.names.to_string(),
                r.flat.to_string(),
                num(r.achieved_mass),
                ratio_decimal(&r.min_flat_delta),
            ]);
        }
        let mut report = Report::new(self.name(), p, seed, json!({"h": h, "delta": delta, "tolerance": tolerance(exact), "rows": rows}))?.with_table(table);
        for w in rows.windows(2) {
            if w[1].min_flat_delta > w[0].min_flat_delta {
                report.fail(format!(
                    "smallest flat delta rises from {} at n={} to {} at n={}",
                    format_ratio(&w[0].min_flat_delta),
                    w[0].n,
                    format_ratio(&w[1].min_flat_delta),
                    w[1].n
                ));
            }
        }
        Ok(report)
    }
}

pub struct CastleSuite;

struct CastleRow {
    label: String,
    towers: usize,
    image_measure: Ratio,
    defect: Ratio,
    invariant: bool,
    discrepancy: f64,
    entropy: f64,
    image_entropy: f64,
    image_classes: usize,
    bound: f64,
}

enum CastleRecipe {
    Box(i64),
    Tiles(Vec<i64>),
}

/// `±1` with equal odds at every point.
pub fn sign_observable(points: usize, seed: u64) -> Vec<i64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..points).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect()
}

fn joint_law(p: &Params) -> Result<Vec<Vec<f64>>, CliError> {
    match p.get("joint") {
        None => Ok(vec![vec![0.36, 0.04], vec![0.3, 0.3]]),
        Some(t) => serde_json::from_str(&read_inline_or_file(t)?)
            .map_err(|e| CliError::usage(format!("joint must be a JSON matrix: {e}"))),
    }
}

impl Scenario for CastleSuite {
    fn name(&self) -> &'static str {
        "castle-suite"
    }
    fn about(&self) -> &'static str {
        "castle defect, ergodic averages and conditional entropy across the orbit change"
    }
    fn required(&self) -> &'static [&'static str] {
        &[]
    }
    fn optional(&self) -> &'static [&'static str] {
        &["torus", "dim", "sides", "tiles", "eps", "N", "joint"]
    }

    fn run(&self, p: &Params, seed: u64) -> Result<Report, CliError> {
        let side_len: i64 = p.parse_or("torus", 64)?;
        let dim: u32 = p.parse_or("dim", 2)?;
        let model = FiniteModel::torus(dim, side_len)?;
        let mut sides = parse_int_list(p.get("sides").unwrap_or("4,8,16"))?;
        sides.sort_unstable();
        let mut recipes: Vec<CastleRecipe> = sides.iter().map(|&s| CastleRecipe::Box(s)).collect();
        if let Some(t) = p.get("tiles") {
            recipes.push(CastleRecipe::Tiles(parse_int_list(t)?));
        }
        let eps = p.ratio_or("eps", Ratio::new(1, 10))?;
        let n: usize = p.parse_or("N", 4)?;
        let f = sign_observable(model.num_points(), seed);
        let labels = LabeledProductModel::sample(model.num_points(), &joint_law(p)?, seed)?;
        let cyc = boustrophedon(&model)?;
        let rows = grid(&recipes, |recipe| {
            let (label, castle): (String, Castle) = match recipe {
                CastleRecipe::Box(s) => (format!("box:{s}"), box_castle(&model, *s)?),
                CastleRecipe::Tiles(ts) => {
                    let shapes = ts
                        .iter()
                        .map(|&s| FiniteSubset::cube(model.group(), s))
                        .collect::<amenable::Result<Vec<_>>>()?;
                    let names: Vec<String> = ts.iter().map(i64::to_string).collect();
                    (format!("tiles:{}", names.join("+")), build_castle(&model, &shapes, eps)?)
                }
            };
            let defect = castle_invariance(&castle, n)?;
            let before = castle_conditional_entropy(&castle, &labels)?;
            let image = image_castle(&castle, &cyc)?;
            let after = castle_conditional_entropy(&image, &labels)?;
            Ok(CastleRow {
                label,
                towers: castle.towers().len(),
                image_measure: castle.image_measure(),
                defect,
                invariant: is_castle_invariant(defect, n),
                discrepancy: castle_average_discrepancy(&castle, &f)?.value,
                entropy: before.value,
                image_entropy: after.value,
                image_classes: image.towers().len(),
                bound: before.bound,
            })
        })?;
        let mut table = Table::new(&[
            "castle",
            "towers",
            "image_measure",
            "defect",
            "invariant",
            "discrepancy",
            "entropy",
            "image_entropy",
            "image_classes",
        ]);
        let mut json_rows = Vec::new();
        for r in &rows {
            table.push(vec![
                r.label.clone(),
                r.towers.to_string(),
                ratio_decimal(&r.image_measure),
                ratio_decimal(&r.defect),
                r.invariant.to_string(),
                num(r.discrepancy),
                num(r.entropy),
                num(r.image_entropy),
                r.image_classes.to_string(),
            ]);
            json_rows.push(json!({
                "castle": r.label,
                "towers": r.towers,
                "image_measure": format_ratio(&r.image_measure),
                "defect": format_ratio(&r.defect),
                "invariant": r.invariant,
                "discrepancy": r.discrepancy,
                "entropy": r.entropy,
                "image_entropy": r.image_entropy,
                "image_classes": r.image_classes,
                "entropy_bound": r.bound,
            }));
        }
        let result = json!({"moduli": model.moduli(), "N": n, "rows": json_rows});
        let mut report = Report::new(self.name(), p, seed, result)?.with_table(table);
        for r in &rows {
            if r.entropy.to_bits() != r.image_entropy.to_bits() {
                report.fail(format!(
                    "{}: entropy {} changes to {} across the orbit change",
                    r.label, r.entropy, r.image_entropy
                ));
            }
            if r.entropy > r.bound + MONOTONE_SLACK {
                report.fail(format!("{}: entropy {} exceeds the bound {}", r.label, r.entropy, r.bound));
            }
        }
        let boxes: Vec<&CastleRow> = rows.iter().filter(|r| r.label.starts_with("box:")).collect();
        for w in boxes.windows(2) {
            if w[1].discrepancy > w[0].discrepancy + MONOTONE_SLACK {
                report.fail(format!("discrepancy rises from {} to {}", w[0].label, w[1].label));
            }
        }
        Ok(report)
    }
}

pub struct TransferSuite;

impl Scenario for TransferSuite {
    fn name(&self) -> &'static str {
        "transfer-suite"
    }
    fn about(&self) -> &'static str {
        "cocycle identities and quasi-spreading of transferred sets M*{0,1}^d"
    }
    fn required(&self) -> &'static [&'static str] {
        &[]
    }
    fn optional(&self) -> &'static [&'static str] {
        &["torus", "dim", "spreads", "max-level", "steps"]
    }

    fn run(&self, p: &Params, seed: u64) -> Result<Report, CliError> {
        let side_len: i64 = p.parse_or("torus", 64)?;
        let dim: u32 = p.parse_or("dim", 2)?;
        let model = FiniteModel::torus(dim, side_len)?;
        let group = model.group();
        let spreads = parse_int_list(p.get("spreads").unwrap_or("2,4,8,16"))?;
        let max_level: usize = p.parse_or("max-level", 128)?;
        let steps = parse_int_list(p.get("steps").unwrap_or("-3:3"))?;
        let cyc = boustrophedon(&model)?;
        let increments = FiniteSubset::cube(group, 3)?.left_translate(&group.element(&vec![-1; dim as usize])?)?;
        let cocycle = check_cocycle(&cyc, &increments, &steps)?;
        let listing = Listing::canonical(GroupSpec::lattice(1)?);
        let rows = grid(&spreads, |&m| {
            let corners = FiniteSubset::cube(group, 2)?;
            let set = corners
                .iter()
                .map(|g| group.element(&g.coords().iter().map(|c| c * m).collect::<Vec<_>>()))
                .collect::<amenable::Result<Vec<_>>>()?;
            let s = SetValuedFunction::constant(&set, model.num_points())?;
            let v = transfer_spread(&s, &cyc)?;
            let uniform = is_uniform(&v, &cyc)?.pass;
            let level = achieved_quasi_spread_level(&v, &listing, max_level)?;
            Ok((m, level, uniform))
        })?;
        let mut table = Table::new(&["M", "level", "uniform"]);
        for (m, level, uniform) in &rows {
            table.push(vec![m.to_string(), level.to_string(), uniform.to_string()]);
        }
        let json_rows: Vec<_> = rows
            .iter()
            .map(|(m, level, uniform)| json!({"M": m, "level": level, "uniform": uniform}))
            .collect();
        let result = json!({
            "moduli": model.moduli(),
            "max_level": max_level,
            "cocycle": cocycle,
            "rows": json_rows,
        });
        let mut report = Report::new(self.name(), p, seed, result)?.with_table(table);
        for msg in cocycle.failures.iter().take(10) {
            report.fail(format!("cocycle: {msg}"));
        }
        for (m, _, uniform) in &rows {
            if !uniform {
                report.fail(format!("transferred set for M={m} is not uniform"));
            }
        }
        for w in rows.windows(2) {
            if w[1].1 < w[0].1 {
                report.fail(format!("level drops from M={} to M={}", w[0].0, w[1].0));
            }
        }
        Ok(report)
    }
}
