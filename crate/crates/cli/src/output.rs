//! Artifact writing: CSV tables, JSON records, gnuplot data and scripts, and
//! the run manifest that hashes all of them.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::LoadedConfig;

/// One CSV cell.
pub enum Cell {
    Num(f64),
    Int(usize),
    Bool(bool),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

/// Seventeen significant digits: enough to round-trip every `f64`.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_num(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Serialize)]
struct OutputEntry {
    file: String,
    sha256: String,
    bytes: usize,
}

/// The output directory of one command, tracking every file written.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<OutputEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.written.retain(|e| e.file != name);
        self.written.push(OutputEntry {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<Cell>>) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        let bytes = w.into_inner().context("flushing CSV")?;
        self.put(name, &bytes)
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.put(name, &bytes)
    }

    /// Whitespace-separated columns for gnuplot.
    pub fn dat(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
        let mut text = format!("# {}\n", header.join(" "));
        for row in rows {
            let cols: Vec<String> = row.iter().map(|x| fmt_num(*x)).collect();
            text.push_str(&cols.join(" "));
            text.push('\n');
        }
        self.put(name, text.as_bytes())
    }

    pub fn gnuplot(&mut self, name: &str, plot: &Plot) -> Result<()> {
        self.put(name, plot.render().as_bytes())
    }
}

/// A ready-to-run gnuplot script rendering to PNG next to the data.
pub struct Plot {
    pub title: String,
    pub output: String,
    pub xlabel: String,
    pub ylabel: String,
    pub logscale: &'static str,
    /// `(data file, using clause, style, legend)`.
    pub series: Vec<(String, String, String, String)>,
}

impl Plot {
    pub fn new(title: &str, output: &str, xlabel: &str, ylabel: &str) -> Self {
        Self {
            title: title.into(),
            output: output.into(),
            xlabel: xlabel.into(),
            ylabel: ylabel.into(),
            logscale: "",
            series: Vec::new(),
        }
    }

    pub fn logscale(mut self, axes: &'static str) -> Self {
        self.logscale = axes;
        self
    }

    pub fn line(mut self, file: &str, using: &str, legend: &str) -> Self {
        self.series
            .push((file.into(), using.into(), "lines".into(), legend.into()));
        self
    }

    pub fn points(mut self, file: &str, using: &str, legend: &str) -> Self {
        self.series
            .push((file.into(), using.into(), "linespoints".into(), legend.into()));
        self
    }

    fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# gnuplot {}", self.output.replace(".png", ".gp"));
        let _ = writeln!(s, "set terminal pngcairo size 900,600");
        let _ = writeln!(s, "set output '{}'", self.output);
        let _ = writeln!(s, "set title \"{}\"", self.title);
        let _ = writeln!(s, "set xlabel \"{}\"", self.xlabel);
        let _ = writeln!(s, "set ylabel \"{}\"", self.ylabel);
        let _ = writeln!(s, "set grid");
        if !self.logscale.is_empty() {
            let _ = writeln!(s, "set logscale {}", self.logscale);
        }
        let series: Vec<String> = self
            .series
            .iter()
            .map(|(f, u, w, t)| format!("'{f}' using {u} with {w} title \"{t}\""))
            .collect();
        let _ = writeln!(s, "plot {}", series.join(", \\\n     "));
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize)]
struct InputEntry {
    file: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    status: &'a str,
    exit_code: i32,
    error: Option<String>,
    versions: Versions,
    inputs: Vec<InputEntry>,
    env_overrides: &'a std::collections::BTreeMap<String, String>,
    /// Hash over the config, auxiliary inputs and overrides, in that order.
    inputs_hash: String,
    outputs: &'a [OutputEntry],
    wall_time_seconds: f64,
}

#[derive(Serialize)]
struct Versions {
    radlog: &'static str,
    radlog_core: &'static str,
}

pub struct RunRecord<'a> {
    pub command: &'a str,
    pub started: Instant,
    pub exit_code: i32,
    pub error: Option<String>,
    /// The command ran to the end, even if a check it performed failed.
    pub finished: bool,
}

/// Writes `manifest_<command>.json`. A run aborted by an error is flagged
/// `partial` if it left any outputs behind and `failed` otherwise.
pub fn write_manifest(
    out: &mut OutputDir,
    cfg: Option<&LoadedConfig>,
    extra_inputs: &[(PathBuf, Vec<u8>)],
    run: RunRecord,
) -> Result<()> {
    let mut inputs = Vec::new();
    let mut hasher = Sha256::new();
    let empty = Default::default();
    let mut env = &empty;
    if let Some(cfg) = cfg {
        inputs.push(InputEntry {
            file: cfg.path.display().to_string(),
            sha256: sha256_hex(&cfg.raw),
        });
        hasher.update(&cfg.raw);
        for (path, bytes) in &cfg.aux_inputs {
            inputs.push(InputEntry {
                file: path.display().to_string(),
                sha256: sha256_hex(bytes),
            });
            hasher.update(bytes);
        }
        env = &cfg.env_overrides;
    }
    for (path, bytes) in extra_inputs {
        inputs.push(InputEntry {
            file: path.display().to_string(),
            sha256: sha256_hex(bytes),
        });
        hasher.update(bytes);
    }
    for (k, v) in env {
        hasher.update(format!("{k}={v}\n").as_bytes());
    }
    let status = match (run.finished, out.written.is_empty()) {
        (true, _) => "complete",
        (false, false) => "partial",
        (false, true) => "failed",
    };
    let manifest = Manifest {
        command: run.command,
        status,
        exit_code: run.exit_code,
        error: run.error,
        versions: Versions {
            radlog: env!("CARGO_PKG_VERSION"),
            radlog_core: radlog_core::VERSION,
        },
        inputs,
        env_overrides: env,
        inputs_hash: hex::encode(hasher.finalize()),
        outputs: &out.written,
        wall_time_seconds: run.started.elapsed().as_secs_f64(),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    let path = out.path(&format!("manifest_{}.json", run.command));
    std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip_with_seventeen_digits() {
        for x in [std::f64::consts::PI, 1e-300, -2.5e17, 0.1 + 0.2] {
            let s = fmt_num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(mantissa.len(), 17, "{s}");
        }
    }

    #[test]
    fn rewriting_a_file_keeps_one_manifest_entry() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.csv("a.csv", &["x"], [vec![Cell::from(1.0)]]).unwrap();
        out.csv("a.csv", &["x"], [vec![Cell::from(2.0)]]).unwrap();
        assert_eq!(out.written.len(), 1);
        let bytes = std::fs::read(dir.path().join("a.csv")).unwrap();
        assert_eq!(out.written[0].sha256, sha256_hex(&bytes));
        assert_eq!(String::from_utf8(bytes).unwrap(), "x\n2.0000000000000000e0\n");
    }

    #[test]
    fn plot_script_lists_every_series() {
        let p = Plot::new("t", "t.png", "x", "y")
            .logscale("xy")
            .line("a.dat", "1:2", "a")
            .points("b.dat", "1:3", "b");
        let s = p.render();
        assert!(s.contains("set logscale xy"));
        assert!(s.contains("'a.dat' using 1:2 with lines"));
        assert!(s.contains("'b.dat' using 1:3 with linespoints"));
    }
}
