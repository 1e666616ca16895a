//! CSV ingestion and emission for panels and weight matrices.
//!
//! Panel files have a header with `location` and `period` columns plus named
//! numeric columns, one row per (location, period) pair in any order. Labels
//! that all parse as numbers are ordered numerically; otherwise they keep
//! their order of first appearance. Weight files hold N rows of N reals, with
//! an optional header row and an optional leading label column.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::data::PanelData;
use super::weights::SpatialWeights;
use crate::error::{Error, Result};

pub const LOCATION_COLUMN: &str = "location";
pub const PERIOD_COLUMN: &str = "period";

/// Column roles for a panel CSV. The design is `[1, covariates...]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PanelLayout {
    pub response: String,
    pub covariates: Vec<String>,
}

impl PanelLayout {
    pub fn new(response: impl Into<String>, covariates: Vec<String>) -> Self {
        Self {
            response: response.into(),
            covariates,
        }
    }
}

/// A loaded panel together with the location and period labels in stacking order.
#[derive(Debug, Clone)]
pub struct LoadedPanel {
    pub data: PanelData,
    pub locations: Vec<String>,
    pub periods: Vec<String>,
}

pub fn load_panel_csv(path: impl AsRef<Path>, layout: &PanelLayout) -> Result<LoadedPanel> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_panel_csv(file, layout)
}

pub fn read_panel_csv<R: Read>(reader: R, layout: &PanelLayout) -> Result<LoadedPanel> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(e, 1))?
        .iter()
        .map(str::to_string)
        .collect();
    let find = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingData(format!("column '{name}' not found in header {header:?}")))
    };
    let loc_idx = find(LOCATION_COLUMN)?;
    let per_idx = find(PERIOD_COLUMN)?;
    let resp_idx = find(&layout.response)?;
    let cov_idx = layout
        .covariates
        .iter()
        .map(|c| find(c))
        .collect::<Result<Vec<_>>>()?;

    struct Row {
        loc: String,
        per: String,
        values: Vec<f64>,
    }
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| csv_error(e, line))?;
        let field = |idx: usize| rec.get(idx).unwrap_or("").to_string();
        let mut values = Vec::with_capacity(cov_idx.len() + 1);
        for &idx in std::iter::once(&resp_idx).chain(cov_idx.iter()) {
            values.push(parse_number(&field(idx), line, &header[idx])?);
        }
        rows.push(Row {
            loc: field(loc_idx),
            per: field(per_idx),
            values,
        });
    }
    if rows.is_empty() {
        return Err(Error::MissingData("panel file has no data rows".into()));
    }

    let locations = ordered_labels(rows.iter().map(|r| r.loc.as_str()));
    let periods = ordered_labels(rows.iter().map(|r| r.per.as_str()));
    let (n, t_len) = (locations.len(), periods.len());
    let loc_pos: HashMap<&str, usize> = locations.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let per_pos: HashMap<&str, usize> = periods.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();

    let p = cov_idx.len() + 1;
    let mut y = DVector::zeros(n * t_len);
    let mut x = DMatrix::zeros(n * t_len, p);
    let mut filled = vec![false; n * t_len];
    for r in &rows {
        let k = per_pos[r.per.as_str()] * n + loc_pos[r.loc.as_str()];
        if filled[k] {
            return Err(Error::InvalidPanel(format!(
                "duplicate row for location '{}' period '{}'",
                r.loc, r.per
            )));
        }
        filled[k] = true;
        y[k] = r.values[0];
        x[(k, 0)] = 1.0;
        for (j, v) in r.values[1..].iter().enumerate() {
            x[(k, j + 1)] = *v;
        }
    }
    if let Some(k) = filled.iter().position(|f| !f) {
        return Err(Error::MissingData(format!(
            "no row for location '{}' period '{}' (panel must be balanced)",
            locations[k % n],
            periods[k / n]
        )));
    }
    if n < 2 || t_len < 2 {
        return Err(Error::MissingData(format!(
            "panel has {n} location(s) and {t_len} period(s); at least 2 of each are required"
        )));
    }
    let mut names = vec!["intercept".to_string()];
    names.extend(layout.covariates.iter().cloned());
    let data = PanelData::new(y, x, n, t_len)?.with_names(names)?;
    Ok(LoadedPanel {
        data,
        locations,
        periods,
    })
}

pub fn load_weights_csv(path: impl AsRef<Path>) -> Result<SpatialWeights> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_weights_csv(file)
}

pub fn read_weights_csv<R: Read>(reader: R) -> Result<SpatialWeights> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut records: Vec<(usize, Vec<String>)> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(e, k + 1))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(k + 1);
        records.push((line, rec.iter().map(str::to_string).collect()));
    }
    if records.is_empty() {
        return Err(Error::MissingData("weights file is empty".into()));
    }
    let had_header = records[0].1.iter().any(|f| f.parse::<f64>().is_err());
    if had_header {
        records.remove(0);
    }
    let n = records.len();
    if n == 0 {
        return Err(Error::MissingData("weights file has a header but no rows".into()));
    }
    let skip = match records[0].1.len() {
        c if c == n => 0,
        // a label column is only recognised next to a header or by non-numeric labels
        c if c == n + 1 && (had_header || records[0].1[0].parse::<f64>().is_err()) => 1,
        c => {
            return Err(Error::InvalidWeights(format!(
                "{n} rows but {c} columns; weights must be square"
            )))
        }
    };
    let mut values = DMatrix::zeros(n, n);
    for (i, (line, fields)) in records.iter().enumerate() {
        if fields.len() != n + skip {
            return Err(Error::InvalidWeights(format!(
                "line {line} has {} columns, expected {}",
                fields.len(),
                n + skip
            )));
        }
        for (j, f) in fields[skip..].iter().enumerate() {
            values[(i, j)] = parse_number(f, *line, "weight")?;
        }
    }
    SpatialWeights::new(values)
}

pub fn write_weights_csv<W: Write>(w: &SpatialWeights, out: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in w.values().row_iter() {
        wtr.write_record(row.iter().map(|v| format_real(*v)))
            .map_err(csv_write_error)?;
    }
    wtr.flush().map_err(|e| Error::io("<weights output>", e))
}

/// Writes a panel in the long layout `location,period,<response>,<covariates>`
/// with 1-based integer labels.
pub fn write_panel_csv<W: Write>(data: &PanelData, response: &str, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec![LOCATION_COLUMN.to_string(), PERIOD_COLUMN.to_string(), response.to_string()];
    header.extend(data.names()[1..].iter().cloned());
    wtr.write_record(&header).map_err(csv_write_error)?;
    let n = data.n_locations();
    for t in 0..data.t_len() {
        for i in 0..n {
            let k = t * n + i;
            let mut rec = vec![(i + 1).to_string(), (t + 1).to_string(), format_real(data.y()[k])];
            rec.extend((1..data.n_regressors()).map(|j| format_real(data.x()[(k, j)])));
            wtr.write_record(&rec).map_err(csv_write_error)?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<panel output>", e))
}

/// Shortest representation that round-trips exactly.
pub fn format_real(v: f64) -> String {
    format!("{v:?}")
}

fn parse_number(s: &str, line: usize, column: &str) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| Error::Parse {
        line,
        message: format!("'{s}' in column '{column}' is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("non-finite value '{s}' in column '{column}'"),
        });
    }
    Ok(v)
}

fn ordered_labels<'a>(labels: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = Vec::<String>::new();
    let mut index = HashMap::<&str, ()>::new();
    for l in labels {
        if index.insert(l, ()).is_none() {
            seen.push(l.to_string());
        }
    }
    if seen.iter().all(|l| l.parse::<f64>().is_ok()) {
        seen.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()));
    }
    seen
}

fn csv_error(e: csv::Error, fallback_line: usize) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(fallback_line);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

fn csv_write_error(e: csv::Error) -> Error {
    Error::io("<csv output>", std::io::Error::other(e.to_string()))
}
