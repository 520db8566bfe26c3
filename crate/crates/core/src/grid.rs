//! Uniform grids and the CSV layout shared by every output: `# key=value`
//! metadata rows, then a header row and numeric columns.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `count` equally spaced points from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl UniformGrid {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "grid bounds must be finite, got {min}:{max}"
            )));
        }
        if count == 0 {
            return Err(Error::InvalidInput("grid needs at least one point".into()));
        }
        if count > 1 && !(max > min) {
            return Err(Error::InvalidInput(format!("grid needs max > min, got {min}:{max}")));
        }
        Ok(Self { min, max, count })
    }

    pub fn spacing(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.max - self.min) / (self.count - 1) as f64
        }
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.min + self.max)
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.max
        } else {
            self.min + self.spacing() * i as f64
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.point(i)).collect()
    }
}

impl FromStr for UniformGrid {
    type Err = Error;

    /// Parses `min:max:count`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::InvalidInput(format!("grid spec `{s}` is not min:max:count")));
        }
        let num = |p: &str, what: &str| {
            p.parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("grid spec `{s}`: {what} `{p}` is not a number")))
        };
        let min = num(parts[0], "min")?;
        let max = num(parts[1], "max")?;
        let count = parts[2].parse::<usize>().map_err(|_| {
            Error::InvalidInput(format!(
                "grid spec `{s}`: count `{}` is not a positive integer",
                parts[2]
            ))
        })?;
        Self::new(min, max, count)
    }
}

impl fmt::Display for UniformGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.min, self.max, self.count)
    }
}

/// Writes metadata rows and columns. All columns must have equal length.
pub fn write_csv<W: Write>(out: W, meta: &[(String, String)], header: &[&str], columns: &[&[f64]]) -> Result<()> {
    if header.len() != columns.len() {
        return Err(Error::InvalidInput("header and column counts differ".into()));
    }
    let rows = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != rows) {
        return Err(Error::InvalidInput("columns have different lengths".into()));
    }
    let mut out = out;
    let io = |e: std::io::Error| Error::InvalidInput(format!("write failed: {e}"));
    for (k, v) in meta {
        writeln!(out, "# {k}={}", v.replace('\n', " ")).map_err(io)?;
    }
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::InvalidInput(format!("write failed: {e}"));
    w.write_record(header).map_err(csv_err)?;
    for i in 0..rows {
        w.write_record(columns.iter().map(|c| format!("{:e}", c[i])))
            .map_err(csv_err)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

/// Parsed CSV: metadata pairs and the first two numeric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoColumn {
    pub meta: Vec<(String, String)>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Reads `x,value` data. `#` rows are metadata; a non-numeric first row is
/// treated as a header.
pub fn read_two_column<R: Read>(input: R) -> Result<TwoColumn> {
    let mut text = String::new();
    let mut input = input;
    input
        .read_to_string(&mut text)
        .map_err(|e| Error::InvalidInput(format!("read failed: {e}")))?;
    let mut meta = Vec::new();
    let mut body = String::new();
    for line in text.lines() {
        if let Some(rest) = line.trim_start().strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
        } else if !line.trim().is_empty() {
            body.push_str(line);
            body.push('\n');
        }
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
        if rec.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "csv row {} has fewer than two columns",
                i + 1
            )));
        }
        let a = rec[0].parse::<f64>();
        let b = rec[1].parse::<f64>();
        match (a, b) {
            (Ok(a), Ok(b)) => {
                x.push(a);
                y.push(b);
            }
            _ if i == 0 => continue,
            _ => {
                return Err(Error::InvalidInput(format!(
                    "csv row {}: `{},{}` is not numeric",
                    i + 1,
                    &rec[0],
                    &rec[1]
                )))
            }
        }
    }
    Ok(TwoColumn { meta, x, y })
}
