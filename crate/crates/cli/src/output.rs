use std::fs;
use std::path::{Path, PathBuf};

use gapsol::dump::write_field_dump;
use gapsol::grid::PeriodicField;
use serde_json::{Map, Value};

use crate::config::{Format, RunConfig};

/// Environment variable that overrides `output.directory`.
pub const OUTPUT_DIR_ENV: &str = "GAPSOL_OUTPUT_DIR";

/// Writes artifacts of one run, each stamped with the config hash.
#[derive(Debug)]
pub struct Output {
    dir: PathBuf,
    hash: String,
    formats: Vec<Format>,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn for_config(cfg: &RunConfig) -> std::io::Result<Self> {
        let dir = std::env::var_os(OUTPUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| cfg.output.directory.clone());
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            hash: cfg.hash.clone(),
            formats: cfg.output.formats.clone(),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// CSV with a `# config_sha256=` line above the header.
    pub fn csv(&mut self, name: &str, header: &str, rows: &[String]) -> std::io::Result<()> {
        if !self.formats.contains(&Format::Csv) {
            return Ok(());
        }
        let mut text = format!("# config_sha256={}\n{header}\n", self.hash);
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
        self.write(name, text.as_bytes())
    }

    /// Pretty JSON object with a `config_hash` member added.
    pub fn json(&mut self, name: &str, body: Value) -> std::io::Result<()> {
        if !self.formats.contains(&Format::Json) {
            return Ok(());
        }
        let mut obj = match body {
            Value::Object(m) => m,
            other => {
                let mut m = Map::new();
                m.insert("data".into(), other);
                m
            }
        };
        obj.insert("config_hash".into(), Value::String(self.hash.clone()));
        let text = serde_json::to_string_pretty(&Value::Object(obj))?;
        self.write(name, format!("{text}\n").as_bytes())
    }

    pub fn field(&mut self, name: &str, u: &PeriodicField<f64>) -> gapsol::Result<()> {
        if !self.formats.contains(&Format::Dump) {
            return Ok(());
        }
        let path = self.dir.join(name);
        write_field_dump(&path, u, Some(&self.hash))?;
        self.written.push(path);
        Ok(())
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)?;
        self.written.push(path);
        Ok(())
    }
}

/// Shortest round-trip decimal; `inf`/`nan` spelled out.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(|| "inf".into(), num)
}

/// `null` for non-finite numbers would lose information; use strings.
pub fn jnum(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else {
        Value::String(num(x))
    }
}
