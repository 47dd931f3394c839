//! Run configuration: command-line flags layered over an optional
//! `key = value` file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use tqft::qdilog::{param_map, params_from_hbar, QDilogParams};

use crate::error::CliError;

/// The ħ values of a default sweep.
pub const DEFAULT_GRID: [f64; 8] = [0.15, 0.12, 0.10, 0.08, 0.06, 0.05, 0.04, 0.03];

const KEYS: [&str; 7] = ["b", "hbar", "tol", "grid", "format", "out", "seed"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(format!("unknown format `{s}` (expected json or csv)")),
        }
    }
}

/// Values given on the command line; `None` means not given.
#[derive(Clone, Debug, Default)]
pub struct Flags {
    pub b: Option<f64>,
    pub hbar: Option<f64>,
    pub tol: Option<f64>,
    pub grid: Option<String>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub b: Option<f64>,
    pub hbar: Option<f64>,
    pub tol: Option<f64>,
    pub grid: Vec<f64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::usage(format!("config line {}: expected `key = value`", i + 1)));
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(CliError::usage(format!("config line {}: unknown key `{k}`", i + 1)));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(CliError::usage(format!("config line {}: duplicate key `{k}`", i + 1)));
        }
    }
    Ok(map)
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse().map_err(|_| CliError::usage(format!("invalid value `{v}` for `{key}`")))
}

pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let grid: Vec<f64> = text
        .split(',')
        .map(|s| parse_value::<f64>("grid", s.trim()))
        .collect::<Result<_, _>>()?;
    if grid.is_empty() {
        return Err(CliError::usage("empty grid"));
    }
    Ok(grid)
}

impl RunConfig {
    /// Flags win over the file.
    pub fn resolve(flags: Flags, file: Option<&Path>) -> Result<Self, CliError> {
        let map = match file {
            Some(p) => parse_config(&std::fs::read_to_string(p)?)?,
            None => BTreeMap::new(),
        };
        let get = |k: &str| map.get(k).map(String::as_str);
        let from_file = |k: &str| -> Result<Option<f64>, CliError> { get(k).map(|v| parse_value(k, v)).transpose() };
        // b and ħ are one choice: a flag for either replaces both file values
        let (b, hbar) = if flags.b.is_some() || flags.hbar.is_some() {
            (flags.b, flags.hbar)
        } else {
            (from_file("b")?, from_file("hbar")?)
        };
        let grid = match flags.grid.as_deref().or(get("grid")) {
            Some(g) => parse_grid(g)?,
            None => DEFAULT_GRID.to_vec(),
        };
        let format = match flags.format {
            Some(f) => Some(f),
            None => get("format").map(|v| v.parse().map_err(CliError::usage)).transpose()?,
        };
        Ok(RunConfig {
            b,
            hbar,
            tol: flags.tol.or(from_file("tol")?),
            grid,
            format,
            out: flags.out.or_else(|| get("out").map(PathBuf::from)),
            seed: match flags.seed {
                Some(s) => s,
                None => get("seed").map(|v| parse_value("seed", v)).transpose()?.unwrap_or(0),
            },
        })
    }

    /// Exactly one of b and ħ.
    pub fn params(&self) -> Result<QDilogParams, CliError> {
        match (self.b, self.hbar) {
            (Some(b), None) => Ok(param_map(b)?),
            (None, Some(h)) => Ok(params_from_hbar(h)?),
            (Some(_), Some(_)) => Err(CliError::usage("give only one of --b and --hbar")),
            (None, None) => Err(CliError::usage("one of --b or --hbar is required")),
        }
    }

    pub fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let dir = std::env::temp_dir().join(format!("tqft-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.conf");
        std::fs::write(&path, "# sweep\nhbar = 0.1\ntol = 1e-6\ngrid = 0.2, 0.1\nseed = 3\n").unwrap();
        let cfg = RunConfig::resolve(Flags { b: Some(1.0), tol: Some(1e-9), ..Default::default() }, Some(&path)).unwrap();
        assert_eq!(cfg.b, Some(1.0));
        assert_eq!(cfg.hbar, None);
        assert_eq!(cfg.tol, Some(1e-9));
        assert_eq!(cfg.grid, vec![0.2, 0.1]);
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.params().unwrap().b, 1.0);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn rejects_bad_config() {
        assert!(parse_config("hbar 0.1").is_err());
        assert!(parse_config("speed = 3").is_err());
        assert!(parse_config("b = 1\nb = 2").is_err());
    }

    #[test]
    fn exactly_one_parameter() {
        let both = RunConfig::resolve(Flags { b: Some(1.0), hbar: Some(0.25), ..Default::default() }, None).unwrap();
        assert_eq!(both.params().unwrap_err().code, 2);
        let none = RunConfig::resolve(Flags::default(), None).unwrap();
        assert_eq!(none.params().unwrap_err().code, 2);
        let hbar = RunConfig::resolve(Flags { hbar: Some(0.25), ..Default::default() }, None).unwrap();
        assert!((hbar.params().unwrap().b - 1.0).abs() < 1e-12);
    }
}
