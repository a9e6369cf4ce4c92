//! Artifact writing: CSV tables, JSON reports and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

/// 17 significant digits, enough to round-trip any f64.
pub fn g17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(usize),
    /// Written verbatim; must not contain commas or newlines.
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Real(x) => g17(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(t) => t.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i)
    }
}

struct Entry {
    file: String,
    rows: usize,
    header: Vec<String>,
}

/// Collects artifacts written into one output directory.
pub struct Artifacts {
    dir: PathBuf,
    entries: Vec<Entry>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Artifacts { dir: dir.to_path_buf(), entries: Vec::new() })
    }

    pub fn csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> std::io::Result<()>
    where
        I: IntoIterator<Item = Vec<Cell>>,
    {
        let mut out = std::io::BufWriter::new(fs::File::create(self.dir.join(name))?);
        writeln!(out, "{}", header.join(","))?;
        let mut count = 0;
        for row in rows {
            assert_eq!(row.len(), header.len(), "row width differs from header in {name}");
            let line: Vec<String> = row.iter().map(Cell::render).collect();
            writeln!(out, "{}", line.join(","))?;
            count += 1;
        }
        out.flush()?;
        self.entries.push(Entry { file: name.into(), rows: count, header: header.iter().map(|s| s.to_string()).collect() });
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &Value) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        fs::write(self.dir.join(name), text)?;
        self.entries.push(Entry { file: name.into(), rows: 0, header: Vec::new() });
        Ok(())
    }

    /// Write `manifest.json` listing every artifact with its row count
    /// and header. Contains no timestamps, so identical runs match byte
    /// for byte.
    pub fn finish(self, cfg: &RunConfig, exit_code: i32, status: &str) -> std::io::Result<()> {
        let rendered = cfg.render();
        // Output location and thread count do not change results.
        let inputs: String = rendered.lines().filter(|l| !l.starts_with("out =") && !l.starts_with("threads =")).map(|l| format!("{l}\n")).collect();
        let hash = Sha256::digest(inputs.as_bytes());
        let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
        let artifacts: Vec<Value> = self
            .entries
            .iter()
            .map(|e| json!({ "file": e.file, "rows": e.rows, "header": e.header }))
            .collect();
        let manifest = json!({
            "subcommand": cfg.subcommand.name(),
            "seed": cfg.u64("seed"),
            "inputs_sha256": hex,
            "config": rendered.lines().collect::<Vec<_>>(),
            "versions": {
                "radgas-core": radgas_core_version(),
                "radgas-cli": env!("CARGO_PKG_VERSION"),
            },
            "status": status,
            "exit_code": exit_code,
            "artifacts": artifacts,
        });
        let mut text = serde_json::to_string_pretty(&manifest).expect("serializable");
        text.push('\n');
        fs::write(self.dir.join("manifest.json"), text)
    }
}

fn radgas_core_version() -> &'static str {
    // Both crates are versioned together in this workspace.
    env!("CARGO_PKG_VERSION")
}
