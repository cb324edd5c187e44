//! CSV tables and JSON run manifests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use coldcloud::{time_scales, EffNumInputs};

use crate::config::RunConfig;

pub enum Cell {
    Num(f64),
    Int(u64),
    Text(&'static str),
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Comma-separated, 17 significant digits.
    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(x) => format_number(*x),
                    Cell::Int(n) => n.to_string(),
                    Cell::Text(t) => t.to_string(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Serialize)]
pub struct Derived {
    pub tau_r: f64,
    /// Absent without gravity.
    pub tau_g: Option<f64>,
    pub tau_w: f64,
    pub zeta: f64,
    pub rayleigh_length: f64,
}

pub fn derived(inp: &EffNumInputs) -> Result<Derived> {
    let ts = time_scales(&inp.cloud, &inp.beam)?;
    let tau_g = ts.tau_g.seconds();
    Ok(Derived {
        tau_r: ts.tau_r,
        tau_g: tau_g.is_finite().then_some(tau_g),
        tau_w: ts.tau_w(),
        zeta: ts.zeta(),
        rayleigh_length: inp.beam.rayleigh_length(),
    })
}

pub struct Writer {
    pub dir: PathBuf,
    files: Vec<String>,
    pub warnings: Vec<String>,
}

impl Writer {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            warnings: Vec::new(),
        })
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> Result<()> {
        self.write_text(name, &table.render())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        let mut f = fs::File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        f.write_all(text.as_bytes())?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn warn(&mut self, msg: String) {
        eprintln!("warning: {msg}");
        self.warnings.push(msg);
    }

    /// Writes `<subcommand>.manifest.json` listing inputs, derived scales and outputs.
    pub fn finish(mut self, subcommand: &str, cfg: &RunConfig, seed: Option<u64>, extra: Value) -> Result<()> {
        let inp = cfg.inputs()?;
        let manifest = json!({
            "subcommand": subcommand,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "config": cfg,
            "derived": derived(&inp)?,
            "files": self.files,
            "warnings": self.warnings,
            "results": extra,
        });
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        let name = format!("{subcommand}.manifest.json");
        self.write_text(&name, &text)
    }
}
