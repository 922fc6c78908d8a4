//! Key-value parameters shared by config files, subcommand flags and `run`.

use std::collections::BTreeMap;
use std::fs;
use std::str::FromStr;

use amenable::foelner::foelner_box;
use amenable::group::elements_from_json;
use amenable::ratio::parse_ratio;
use amenable::{FiniteSubset, GroupSpec, Ratio};

use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Params {
    values: BTreeMap<String, String>,
}

impl Params {
    pub fn new() -> Self {
        Params::default()
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
    }

    pub fn set_opt(&mut self, key: &str, value: Option<impl Into<String>>) {
        if let Some(v) = value {
            self.set(key, v);
        }
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    /// Later values win.
    pub fn merge(&mut self, other: Params) {
        self.values.extend(other.values);
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn map(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn required(&self, key: &str) -> Result<&str, CliError> {
        self.get(key)
            .ok_or_else(|| CliError::usage(format!("missing required parameter {key:?}")))
    }

    /// Parses a value with `FromStr`, falling back to `default` when absent.
    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(text) => text
                .trim()
                .parse()
                .map_err(|_| CliError::usage(format!("cannot parse {key} = {text:?}"))),
        }
    }

    pub fn parse_required<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        let text = self.required(key)?;
        text.trim()
            .parse()
            .map_err(|_| CliError::usage(format!("cannot parse {key} = {text:?}")))
    }

    pub fn group(&self) -> Result<GroupSpec, CliError> {
        Ok(GroupSpec::from_str(self.get("group").unwrap_or("z2"))?)
    }

    pub fn ratio(&self, key: &str) -> Result<Ratio, CliError> {
        Ok(parse_ratio(self.required(key)?.trim())?)
    }

    pub fn ratio_or(&self, key: &str, default: Ratio) -> Result<Ratio, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(_) => self.ratio(key),
        }
    }

    /// A JSON-bearing value: inline JSON, `@path`, or a bare path.
    pub fn text(&self, key: &str) -> Result<String, CliError> {
        let value = self.required(key)?.trim();
        if value.starts_with('{') || value.starts_with('[') {
            Ok(value.to_string())
        } else {
            read_inline_or_file(&format!("@{}", value.trim_start_matches('@')))
        }
    }
}

pub fn read_inline_or_file(value: &str) -> Result<String, CliError> {
    match value.strip_prefix('@') {
        Some(path) => fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {path}: {e}"))),
        None => Ok(value.to_string()),
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<Params, CliError> {
    let mut params = Params::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("config line {}: expected key = value", lineno + 1)))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::usage(format!("config line {}: empty key", lineno + 1)));
        }
        params.set(key, value.trim());
    }
    Ok(params)
}

/// Parses trailing `--key value` or `--key=value` pairs.
pub fn parse_flag_pairs(args: &[String]) -> Result<Params, CliError> {
    let mut params = Params::new();
    let mut i = 0;
    while i < args.len() {
        let flag = args[i]
            .strip_prefix("--")
            .ok_or_else(|| CliError::usage(format!("expected --key, found {:?}", args[i])))?;
        if let Some((k, v)) = flag.split_once('=') {
            params.set(k, v);
            i += 1;
        } else {
            let value = args
                .get(i + 1)
                .ok_or_else(|| CliError::usage(format!("flag --{flag} needs a value")))?;
            params.set(flag, value.clone());
            i += 2;
        }
    }
    Ok(params)
}

/// `a:b`, inclusive on both ends.
pub fn parse_range(text: &str) -> Result<Vec<i64>, CliError> {
    let bad = || CliError::usage(format!("bad range {text:?}; expected a:b"));
    let (a, b) = text.trim().split_once(':').ok_or_else(bad)?;
    let a: i64 = a.trim().parse().map_err(|_| bad())?;
    let b: i64 = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    Ok((a..=b).collect())
}

/// Comma-separated integers, or a range `a:b`.
pub fn parse_int_list(text: &str) -> Result<Vec<i64>, CliError> {
    if text.contains(':') {
        return parse_range(text);
    }
    text.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| CliError::usage(format!("bad integer {t:?} in list {text:?}")))
        })
        .collect()
}

/// `box:n` for the standard box, a JSON list of coordinate lists, or `@path`.
pub fn parse_set(group: GroupSpec, text: &str) -> Result<FiniteSubset, CliError> {
    let text = read_inline_or_file(text.trim())?;
    let text = text.trim();
    if let Some(n) = text.strip_prefix("box:") {
        let n: i64 = n
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("bad box size in {text:?}")))?;
        return Ok(foelner_box(group, n)?);
    }
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::usage(format!("bad set {text:?}: {e}")))?;
    Ok(FiniteSubset::new(group, elements_from_json(group, &value)?)?)
}

/// A comma-separated list of `box:n` items, or a JSON list of sets.
pub fn parse_set_list(group: GroupSpec, text: &str) -> Result<Vec<FiniteSubset>, CliError> {
    let text = read_inline_or_file(text.trim())?;
    let text = text.trim();
    if text.starts_with('[') {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::usage(format!("bad set list: {e}")))?;
        let items = value
            .as_array()
            .ok_or_else(|| CliError::usage("set list must be a JSON array"))?;
        return items
            .iter()
            .map(|v| Ok(FiniteSubset::new(group, elements_from_json(group, v)?)?))
            .collect();
    }
    text.split(',').map(|item| parse_set(group, item)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines_and_comments() {
        let p = parse_config("# header\nK = [[1,0]]\n\nn-range=1:4 # trailing\n").unwrap();
        assert_eq!(p.get("K"), Some("[[1,0]]"));
        assert_eq!(p.get("n-range"), Some("1:4"));
        assert!(parse_config("no equals sign").is_err());
    }

    #[test]
    fn later_params_override_earlier() {
        let mut file = parse_config("eps = 0.1\nF = box:8").unwrap();
        file.merge(parse_flag_pairs(&["--eps".into(), "0.2".into(), "--tiles=box:2".into()]).unwrap());
        assert_eq!(file.get("eps"), Some("0.2"));
        assert_eq!(file.get("F"), Some("box:8"));
        assert_eq!(file.get("tiles"), Some("box:2"));
    }

    #[test]
    fn flag_pairs_reject_dangling_flag() {
        assert!(parse_flag_pairs(&["--eps".into()]).is_err());
        assert!(parse_flag_pairs(&["eps".into(), "1".into()]).is_err());
    }

    #[test]
    fn ranges_are_inclusive() {
        assert_eq!(parse_range("2:5").unwrap(), vec![2, 3, 4, 5]);
        assert!(parse_range("5:2").is_err());
        assert_eq!(parse_int_list("4,8,16").unwrap(), vec![4, 8, 16]);
    }

    #[test]
    fn sets_from_box_and_json() {
        let g = GroupSpec::lattice(2).unwrap();
        assert_eq!(parse_set(g, "box:3").unwrap().len(), 9);
        let k = parse_set(g, "[[0,0],[1,0],[0,1]]").unwrap();
        assert_eq!(k.len(), 3);
        let tiles = parse_set_list(g, "box:2,box:4").unwrap();
        assert_eq!(tiles.iter().map(FiniteSubset::len).collect::<Vec<_>>(), vec![4, 16]);
    }
}
