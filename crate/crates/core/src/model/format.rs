//! On-disk forms of a [`SampleLog`].
//!
//! JSON: one document `{"schemas": [...], "records": [...]}`.
//!
//! CSV: header `t,<agent>.<part>,...,<agent>.perf,...`, one row per time
//! step, category values written as their labels. The schemas live next to
//! the CSV in `<stem>.schema.json` as `{"schemas": [...]}`.
//!
//! Reals are written as the shortest decimal that round-trips, so
//! serialize -> parse -> serialize is byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AgentSchema, ConfigValue, SampleLog, SampleRecord, PERFORMANCE_COLUMN};

#[derive(Debug, Error)]
pub enum LogIoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}: unsupported log extension (use .json or .csv)")]
    UnsupportedFormat(PathBuf),
}

impl LogIoError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn parse(path: &Path, message: impl ToString) -> Self {
        Self::Parse {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    Json,
    Csv,
}

impl LogFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "json" => Some(Self::Json),
            "csv" => Some(Self::Csv),
            _ => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SchemaFile {
    schemas: Vec<AgentSchema>,
}

/// `runs/log.csv` -> `runs/log.schema.json`
pub fn schema_sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("schema.json")
}

impl SampleLog {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("logs contain only finite numbers");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn schemas_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&SchemaFile {
            schemas: self.schemas.clone(),
        })
        .expect("schemas serialize");
        s.push('\n');
        s
    }

    fn csv_columns(&self) -> Vec<(String, String)> {
        let mut cols: Vec<(String, String)> = self
            .schemas
            .iter()
            .flat_map(|a| a.parts.iter().map(|p| (a.agent_id.clone(), p.name.clone())))
            .collect();
        cols.extend(
            self.schemas
                .iter()
                .map(|a| (a.agent_id.clone(), PERFORMANCE_COLUMN.to_string())),
        );
        cols
    }

    /// CSV rows for the records. Missing values become empty cells.
    pub fn to_csv(&self) -> String {
        let cols = self.csv_columns();
        let mut out = String::from("t");
        for (agent, col) in &cols {
            let _ = write!(out, ",{agent}.{col}");
        }
        out.push('\n');
        for r in &self.records {
            let _ = write!(out, "{}", r.t);
            for (agent, col) in &cols {
                out.push(',');
                if col == PERFORMANCE_COLUMN {
                    if let Some(v) = r.performance.get(agent) {
                        let _ = write!(out, "{v}");
                    }
                } else if let Some(v) = r.config.get(agent).and_then(|m| m.get(col)) {
                    let _ = write!(out, "{v}");
                }
            }
            out.push('\n');
        }
        out
    }

    /// Parses CSV rows against known schemas. Cells are typed by the schema:
    /// real parts parse as numbers when possible, so that validation can
    /// report anything else as a type error.
    pub fn from_csv(text: &str, schemas: Vec<AgentSchema>) -> Result<Self, String> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| e.to_string())?.clone();
        if headers.get(0) != Some("t") {
            return Err("first column must be `t`".into());
        }
        let mut columns = Vec::with_capacity(headers.len() - 1);
        for h in headers.iter().skip(1) {
            let (agent, col) = h
                .split_once('.')
                .ok_or_else(|| format!("column `{h}` is not `<agent>.<part>`"))?;
            columns.push((agent.to_string(), col.to_string()));
        }
        let log_schemas = SampleLog::new(schemas);
        let mut records = Vec::new();
        for (row, result) in reader.records().enumerate() {
            let rec = result.map_err(|e| format!("row {}: {e}", row + 1))?;
            let t: u64 = rec
                .get(0)
                .unwrap_or_default()
                .parse()
                .map_err(|_| format!("row {}: invalid time step `{}`", row + 1, &rec[0]))?;
            let mut config: IndexMap<String, IndexMap<String, ConfigValue>> = IndexMap::new();
            let mut performance = IndexMap::new();
            for ((agent, col), cell) in columns.iter().zip(rec.iter().skip(1)) {
                if cell.is_empty() {
                    continue;
                }
                if col == PERFORMANCE_COLUMN {
                    let v: f64 = cell
                        .parse()
                        .map_err(|_| format!("row {}: invalid performance `{cell}`", row + 1))?;
                    performance.insert(agent.clone(), v);
                    continue;
                }
                let is_real = log_schemas
                    .agent(agent)
                    .and_then(|a| a.part(col))
                    .is_some_and(|p| p.kind.is_real());
                let value = match cell.parse::<f64>() {
                    Ok(v) if is_real => ConfigValue::Real(v),
                    _ => ConfigValue::Label(cell.to_string()),
                };
                config.entry(agent.clone()).or_default().insert(col.clone(), value);
            }
            records.push(SampleRecord {
                t,
                config,
                performance,
            });
        }
        Ok(SampleLog {
            schemas: log_schemas.schemas,
            records,
        })
    }
}

/// Writes a log as JSON or as CSV plus schema sidecar, by extension.
pub fn write_log(path: &Path, log: &SampleLog) -> Result<(), LogIoError> {
    match LogFormat::from_path(path) {
        Some(LogFormat::Json) => fs::write(path, log.to_json()).map_err(|e| LogIoError::io(path, e)),
        Some(LogFormat::Csv) => {
            let sidecar = schema_sidecar_path(path);
            fs::write(&sidecar, log.schemas_json()).map_err(|e| LogIoError::io(&sidecar, e))?;
            fs::write(path, log.to_csv()).map_err(|e| LogIoError::io(path, e))
        }
        None => Err(LogIoError::UnsupportedFormat(path.to_path_buf())),
    }
}

/// Reads a log written by [`write_log`]. The result is not validated.
pub fn read_log(path: &Path) -> Result<SampleLog, LogIoError> {
    let format = LogFormat::from_path(path).ok_or_else(|| LogIoError::UnsupportedFormat(path.to_path_buf()))?;
    let text = fs::read_to_string(path).map_err(|e| LogIoError::io(path, e))?;
    match format {
        LogFormat::Json => SampleLog::from_json(&text).map_err(|e| LogIoError::parse(path, e)),
        LogFormat::Csv => {
            let sidecar = schema_sidecar_path(path);
            let schema_text = fs::read_to_string(&sidecar).map_err(|e| LogIoError::io(&sidecar, e))?;
            let schemas: SchemaFile =
                serde_json::from_str(&schema_text).map_err(|e| LogIoError::parse(&sidecar, e))?;
            SampleLog::from_csv(&text, schemas.schemas).map_err(|e| LogIoError::parse(path, e))
        }
    }
}
