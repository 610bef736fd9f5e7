//! Result files. CSV files open with a timestamp line and the resolved config;
//! JSON files carry `generated_at` on their own line. Everything else is a
//! deterministic function of the config.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub enum Artifact {
    Csv(String, Table),
    Json(String, Value),
}

/// Output files for one command, written together once every method has finished.
pub struct Bundle {
    config: Value,
    artifacts: Vec<Artifact>,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

#[derive(Serialize)]
struct Envelope<'a> {
    generated_at: u64,
    config: &'a Value,
    #[serde(flatten)]
    body: &'a Value,
}

impl Bundle {
    pub fn new(config: &impl Serialize) -> Self {
        Self {
            config: serde_json::to_value(config).expect("config serializes"),
            artifacts: Vec::new(),
        }
    }

    pub fn csv(&mut self, name: &str, table: Table) {
        self.artifacts.push(Artifact::Csv(name.into(), table));
    }

    /// `body` must serialize to a JSON object.
    pub fn json(&mut self, name: &str, body: &impl Serialize) {
        let value = serde_json::to_value(body).expect("report serializes");
        self.artifacts.push(Artifact::Json(name.into(), value));
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let now = unix_now();
        let mut written = Vec::new();
        for artifact in &self.artifacts {
            let (name, contents) = match artifact {
                Artifact::Csv(name, table) => (name, self.render_csv(table, now)?),
                Artifact::Json(name, body) => {
                    let env = Envelope {
                        generated_at: now,
                        config: &self.config,
                        body,
                    };
                    (name, serde_json::to_string_pretty(&env).expect("json") + "\n")
                }
            };
            let path = dir.join(name);
            fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }

    fn render_csv(&self, table: &Table, now: u64) -> Result<String, CliError> {
        let mut out = format!("# generated_unix: {now}\n# config: {}\n", self.config);
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| CliError::Output(e.to_string());
        w.write_record(&table.header).map_err(csv_err)?;
        for row in &table.rows {
            w.write_record(row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
        out.push_str(&String::from_utf8(bytes).expect("utf-8"));
        Ok(out)
    }
}
