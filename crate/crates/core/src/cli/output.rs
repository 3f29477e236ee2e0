use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{RunConfig, SCHEMA};
use crate::error::Result;

/// Writes artifacts into one directory, each tagged with the schema
/// version and the full run configuration.
pub struct OutputDir {
    dir: PathBuf,
    config: Value,
    config_line: String,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(config: &RunConfig) -> Result<Self> {
        fs::create_dir_all(&config.out_dir)?;
        let value = serde_json::to_value(config)?;
        Ok(Self {
            dir: config.out_dir.clone(),
            config_line: serde_json::to_string(&value)?,
            config: value,
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn into_written(self) -> Vec<PathBuf> {
        self.written
    }

    /// `{"schema", "config", ...body}` as pretty JSON.
    pub fn json(&mut self, name: &str, body: impl Serialize) -> Result<()> {
        let mut doc = json!({ "schema": SCHEMA, "config": self.config });
        if let Value::Object(extra) = serde_json::to_value(body)? {
            doc.as_object_mut().expect("object").extend(extra);
        }
        let path = self.path(name);
        let mut f = fs::File::create(&path)?;
        serde_json::to_writer_pretty(&mut f, &doc)?;
        writeln!(f)?;
        self.written.push(path);
        Ok(())
    }

    /// CSV with two `#` comment lines carrying the schema and the config.
    pub fn csv<R: IntoIterator<Item = Vec<String>>>(&mut self, name: &str, header: &[&str], rows: R) -> Result<()> {
        let path = self.path(name);
        self.csv_at(&path, header, rows)
    }

    pub fn csv_at<R: IntoIterator<Item = Vec<String>>>(&mut self, path: &Path, header: &[&str], rows: R) -> Result<()> {
        let mut f = fs::File::create(path)?;
        writeln!(f, "# schema={SCHEMA}")?;
        writeln!(f, "# config={}", self.config_line)?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        self.written.push(path.to_path_buf());
        Ok(())
    }
}

/// Shortest round-trip text of a float.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}
