//! CSV files with metadata headers, and the plot scripts that read them.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use kfeller_core::grid;
use serde::Serialize;

use crate::CliError;

/// Ordered `key=value` header rows.
#[derive(Debug, Clone, Default)]
pub struct Meta(pub Vec<(String, String)>);

impl Meta {
    /// Starts with the command, version and config echo, plus a timestamp
    /// unless `deterministic`.
    pub fn new<C: Serialize>(command: &str, config: &C, deterministic: bool) -> Self {
        let mut m = Meta(Vec::new());
        m.push("command", command);
        m.push("version", kfeller_core::VERSION);
        m.push("config", serde_json::to_string(config).expect("config serializes"));
        if !deterministic {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
            m.push("timestamp", secs);
        }
        m
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.0.push((key.to_string(), value.to_string()));
    }

    pub fn push_num(&mut self, key: &str, v: f64) {
        self.push(key, fmt_num(v));
    }
}

/// Plain notation for moderate magnitudes, exponent otherwise; both
/// round-trip.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 || (1e-4..1e7).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// `1e-2` style numbers are awkward in file names; `0.5` stays `0.5`.
pub fn num_tag(v: f64) -> String {
    format!("{v}").replace('-', "m")
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

pub fn write_table(path: &Path, meta: &Meta, header: &[&str], columns: &[&[f64]]) -> Result<(), CliError> {
    let f = File::create(path).map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
    grid::write_csv(BufWriter::new(f), &meta.0, header, columns)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

#[derive(Debug, Clone, Serialize)]
pub struct PlotCurve {
    pub file: String,
    pub label: String,
    pub style: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlotPanel {
    pub title: String,
    pub curves: Vec<PlotCurve>,
}

const PLOT_TEMPLATE: &str = r##"#!/usr/bin/env python3
"""@TITLE@

Reads the CSV files next to this script and writes @PNG@.
Point masses are listed in the CSV headers and drawn as arrows.
"""
import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
PANELS = @PANELS@


def load(name):
    meta, rows = {}, []
    with open(os.path.join(HERE, name)) as f:
        for line in f:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key] = value
            elif line.strip():
                rows.append(line)
    reader = csv.reader(rows)
    next(reader)
    xs, ys = [], []
    for r in reader:
        xs.append(float(r[0]))
        ys.append(float(r[1]))
    return meta, xs, ys


fig, axes = plt.subplots(1, len(PANELS), figsize=(5 * len(PANELS), 4), squeeze=False)
for ax, panel in zip(axes[0], PANELS):
    top = 0.0
    for c in panel["curves"]:
        meta, xs, ys = load(c["file"])
        line, = ax.plot(xs, ys, c["style"], label=c["label"])
        top = max(top, max(ys))
        w = float(meta.get("atom_weight", "0"))
        if w > 0 and float(meta.get("atom_variance", "0")) == 0:
            at = float(meta.get("atom_location", "0"))
            ax.annotate("", xy=(at, 1.1 * top), xytext=(at, 0),
                        arrowprops=dict(arrowstyle="->", color=line.get_color()))
            ax.text(at, 1.12 * top, "%.3g delta" % w, ha="center", color=line.get_color())
    ax.set_title(panel["title"])
    ax.set_xlabel("x")
    ax.legend()
fig.tight_layout()
out = os.path.join(HERE, "@PNG@")
fig.savefig(out, dpi=150)
print(out)
"##;

/// Writes a self-contained matplotlib script next to the data files.
pub fn write_plot_script(path: &Path, title: &str, png: &str, panels: &[PlotPanel]) -> Result<PathBuf, CliError> {
    // JSON of strings and lists is also a valid Python literal
    let panels = serde_json::to_string_pretty(panels).expect("plain data serializes");
    let text = PLOT_TEMPLATE
        .replace("@TITLE@", title)
        .replace("@PNG@", png)
        .replace("@PANELS@", &panels);
    write_text(path, &text)?;
    Ok(path.to_path_buf())
}
