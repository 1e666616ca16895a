//! Flat `key = value` experiment files.
//!
//! ```text
//! # Table cell
//! m = 10, 12
//! t_len = 5, 10
//! scheme = rook
//! n_sim = 100
//! ```
//!
//! Any design key may hold a comma-separated list; the grid is the cartesian
//! product of all lists, with the last key varying fastest. A design key with
//! an empty value gives an empty grid.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::panel::Contiguity;
use crate::sim::{Beta4Shape, DgpConfig, ErrorLaw, RhoShape};

/// Keys expanded into the grid, in expansion order.
pub const GRID_KEYS: [&str; 8] = [
    "m",
    "t_len",
    "scheme",
    "rho_shape",
    "error_law",
    "c",
    "beta4_shape",
    "noise_scale",
];

/// Run-level keys (not expanded).
pub const RUN_KEYS: [&str; 4] = ["n_sim", "k", "alphas", "seed"];

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    /// Raw value lists by key, with the line each was set on (0 for overrides).
    entries: BTreeMap<String, (usize, Vec<String>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McPlan {
    pub cells: Vec<DgpConfig>,
    pub n_sim: usize,
    pub k: usize,
    pub alphas: Vec<f64>,
    pub seed: u64,
}

fn split_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

impl McConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                message: format!("expected 'key = value', found '{content}'"),
            })?;
            let key = key.trim().to_string();
            if !GRID_KEYS.contains(&key.as_str()) && !RUN_KEYS.contains(&key.as_str()) {
                return Err(Error::Config {
                    line,
                    message: format!("unknown key '{key}'"),
                });
            }
            if entries.insert(key.clone(), (line, split_list(value))).is_some() {
                return Err(Error::Config {
                    line,
                    message: format!("key '{key}' set twice"),
                });
            }
        }
        Ok(Self { entries })
    }

    /// Applies a `key=value` override on top of the file.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| Error::Config {
            line: 0,
            message: format!("override '{assignment}' is not key=value"),
        })?;
        let key = key.trim();
        if !GRID_KEYS.contains(&key) && !RUN_KEYS.contains(&key) {
            return Err(Error::Config {
                line: 0,
                message: format!("unknown key '{key}'"),
            });
        }
        self.entries.insert(key.to_string(), (0, split_list(value)));
        Ok(())
    }

    fn values(&self, key: &str, default: &str) -> (usize, Vec<String>) {
        self.entries
            .get(key)
            .cloned()
            .unwrap_or_else(|| (0, split_list(default)))
    }

    fn scalar<T: FromStr>(&self, key: &str, default: &str) -> Result<T> {
        let (line, vals) = self.values(key, default);
        match vals.as_slice() {
            [v] => parse_at(line, key, v),
            _ => Err(Error::Config {
                line,
                message: format!("'{key}' takes exactly one value"),
            }),
        }
    }

    /// Validates every value and expands the grid.
    pub fn plan(&self) -> Result<McPlan> {
        let n_sim: usize = self.scalar("n_sim", "100")?;
        let k: usize = self.scalar("k", "200")?;
        let seed: u64 = self.scalar("seed", "1")?;
        let (line, alpha_strs) = self.values("alphas", "0.05, 0.10");
        let alphas = alpha_strs
            .iter()
            .map(|a| parse_at::<f64>(line, "alphas", a))
            .collect::<Result<Vec<_>>>()?;
        if n_sim == 0 {
            return Err(Error::Config {
                line: self.values("n_sim", "").0,
                message: "n_sim must be at least 1".into(),
            });
        }

        let defaults = ["12", "10", "rook", "rho1", "normal", "0", "sin2pi", "1"];
        let lists: Vec<(usize, Vec<String>)> = GRID_KEYS
            .iter()
            .zip(defaults)
            .map(|(key, d)| self.values(key, d))
            .collect();
        let parsed = GridValues {
            m: parse_list(&lists[0], "m")?,
            t_len: parse_list(&lists[1], "t_len")?,
            scheme: parse_list(&lists[2], "scheme")?,
            rho_shape: parse_list(&lists[3], "rho_shape")?,
            error_law: parse_list(&lists[4], "error_law")?,
            c: parse_list(&lists[5], "c")?,
            beta4_shape: parse_list(&lists[6], "beta4_shape")?,
            noise_scale: parse_list(&lists[7], "noise_scale")?,
        };
        let mut cells = Vec::new();
        for &m in &parsed.m {
            for &t_len in &parsed.t_len {
                for &scheme in &parsed.scheme {
                    for &rho_shape in &parsed.rho_shape {
                        for &error_law in &parsed.error_law {
                            for &c in &parsed.c {
                                for &beta4_shape in &parsed.beta4_shape {
                                    for &noise_scale in &parsed.noise_scale {
                                        let cell = DgpConfig {
                                            m,
                                            t_len,
                                            scheme,
                                            rho_shape,
                                            error_law,
                                            c,
                                            beta4_shape,
                                            noise_scale,
                                            seed,
                                        };
                                        cell.validate().map_err(|e| Error::Config {
                                            line: 0,
                                            message: format!("invalid grid cell: {e}"),
                                        })?;
                                        cells.push(cell);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(McPlan {
            cells,
            n_sim,
            k,
            alphas,
            seed,
        })
    }

    /// The effective settings as `key=value` lines, in a fixed order.
    pub fn echo(&self) -> Vec<String> {
        let defaults = [
            ("m", "12"),
            ("t_len", "10"),
            ("scheme", "rook"),
            ("rho_shape", "rho1"),
            ("error_law", "normal"),
            ("c", "0"),
            ("beta4_shape", "sin2pi"),
            ("noise_scale", "1"),
            ("n_sim", "100"),
            ("k", "200"),
            ("alphas", "0.05, 0.10"),
            ("seed", "1"),
        ];
        defaults
            .iter()
            .map(|(key, d)| format!("{key}={}", self.values(key, d).1.join(",")))
            .collect()
    }
}

struct GridValues {
    m: Vec<usize>,
    t_len: Vec<usize>,
    scheme: Vec<Contiguity>,
    rho_shape: Vec<RhoShape>,
    error_law: Vec<ErrorLaw>,
    c: Vec<f64>,
    beta4_shape: Vec<Beta4Shape>,
    noise_scale: Vec<f64>,
}

fn parse_at<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config {
        line,
        message: format!("invalid value '{value}' for '{key}'"),
    })
}

fn parse_list<T: FromStr>((line, vals): &(usize, Vec<String>), key: &str) -> Result<Vec<T>> {
    vals.iter().map(|v| parse_at(*line, key, v)).collect()
}
