//! Agents, their configuration-part schemas and the sample log.
//!
//! A [`SampleLog`] is the only input the detectors consume: one record per
//! time step holding every agent's configuration-part values and one local
//! performance value per agent. Whether the performance came from the
//! environment or was assigned by hand is not modelled.

mod format;

use std::collections::HashSet;
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::{CategorySeries, RealSeries, Series};

pub use format::{read_log, schema_sidecar_path, write_log, LogFormat, LogIoError};

/// Column header suffix for an agent's performance in the CSV layout.
pub const PERFORMANCE_COLUMN: &str = "perf";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartKind {
    /// Unordered categories.
    Nominal { categories: Vec<String> },
    /// Categories listed from lowest to highest.
    Ordinal { categories: Vec<String> },
    /// Any real value in the closed interval.
    RealInterval { lower: f64, upper: f64 },
}

impl PartKind {
    pub fn categories(&self) -> Option<&[String]> {
        match self {
            PartKind::Nominal { categories } | PartKind::Ordinal { categories } => Some(categories),
            PartKind::RealInterval { .. } => None,
        }
    }

    pub fn is_real(&self) -> bool {
        matches!(self, PartKind::RealInterval { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigPartSchema {
    pub name: String,
    #[serde(flatten)]
    pub kind: PartKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSchema {
    pub agent_id: String,
    pub parts: Vec<ConfigPartSchema>,
}

impl AgentSchema {
    pub fn part(&self, name: &str) -> Option<&ConfigPartSchema> {
        self.parts.iter().find(|p| p.name == name)
    }
}

/// A configuration value: a category label or a real number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConfigValue {
    Real(f64),
    Label(String),
}

impl fmt::Display for ConfigValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigValue::Real(v) => write!(f, "{v}"),
            ConfigValue::Label(l) => f.write_str(l),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub t: u64,
    /// agent -> part -> value
    pub config: IndexMap<String, IndexMap<String, ConfigValue>>,
    /// agent -> local performance
    pub performance: IndexMap<String, f64>,
}

impl SampleRecord {
    pub fn value(&self, part: &PartRef) -> Option<&ConfigValue> {
        self.config.get(&part.agent)?.get(&part.part)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleLog {
    pub schemas: Vec<AgentSchema>,
    pub records: Vec<SampleRecord>,
}

/// One configuration part of one agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PartRef {
    pub agent: String,
    pub part: String,
}

impl PartRef {
    pub fn new(agent: impl Into<String>, part: impl Into<String>) -> Self {
        Self {
            agent: agent.into(),
            part: part.into(),
        }
    }
}

impl fmt::Display for PartRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.agent, self.part)
    }
}

/// A column of the log.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Column {
    Part(PartRef),
    Performance(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    InvalidSchema,
    TimeOrder,
    MissingValue,
    UnknownField,
    WrongType,
    UnknownCategory,
    OutOfBounds,
    MissingPerformance,
    NonFinitePerformance,
}

/// One violated log invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub kind: IssueKind,
    /// Index into `records`; `None` for schema-level issues.
    pub record: Option<usize>,
    pub t: Option<u64>,
    /// Dotted field path, e.g. `config.cam1.pan`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.record, self.t) {
            (Some(r), Some(t)) => write!(f, "record {r} (t={t}) {}: {}", self.path, self.message),
            _ => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("unknown configuration part `{0}`")]
    UnknownPart(PartRef),
    #[error("lag {lag} needs more than {records} records")]
    LagTooLarge { lag: usize, records: usize },
    #[error("log has no records")]
    EmptyLog,
    #[error("record {record}: {message}")]
    InvalidRecord { record: usize, message: String },
}

/// Names usable in the CSV header: `[A-Za-z0-9_]+`.
pub fn is_valid_name(name: &str) -> bool {
    !name.is_empty() && name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

fn is_valid_label(label: &str) -> bool {
    !label.is_empty()
        && label
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'+'))
}

impl SampleLog {
    pub fn new(schemas: Vec<AgentSchema>) -> Self {
        Self {
            schemas,
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn agent(&self, id: &str) -> Option<&AgentSchema> {
        self.schemas.iter().find(|a| a.agent_id == id)
    }

    pub fn agent_ids(&self) -> impl Iterator<Item = &str> {
        self.schemas.iter().map(|a| a.agent_id.as_str())
    }

    pub fn part_schema(&self, part: &PartRef) -> Option<&ConfigPartSchema> {
        self.agent(&part.agent)?.part(&part.part)
    }

    /// Every declared part, in schema order.
    pub fn parts(&self) -> impl Iterator<Item = (PartRef, &ConfigPartSchema)> {
        self.schemas.iter().flat_map(|a| {
            a.parts
                .iter()
                .map(move |p| (PartRef::new(a.agent_id.clone(), p.name.clone()), p))
        })
    }

    /// Lists every violated invariant; an empty list means the log is valid.
    pub fn validate(&self) -> Vec<ValidationIssue> {
        validate_log(self)
    }

    /// Extracts one column. Configuration columns cover records
    /// `0..len - lag`, performance columns `lag..len`, so the two line up
    /// with configuration at `t` paired with performance at `t + lag`.
    pub fn extract_series(&self, column: &Column, lag: usize) -> Result<Series, ModelError> {
        extract_series(self, column, lag)
    }
}

fn schema_issue(path: String, message: String) -> ValidationIssue {
    ValidationIssue {
        kind: IssueKind::InvalidSchema,
        record: None,
        t: None,
        path,
        message,
    }
}

fn validate_schemas(schemas: &[AgentSchema], issues: &mut Vec<ValidationIssue>) {
    let mut agents = HashSet::new();
    for agent in schemas {
        let base = format!("schemas.{}", agent.agent_id);
        if !is_valid_name(&agent.agent_id) {
            issues.push(schema_issue(base.clone(), "agent id must match [A-Za-z0-9_]+".into()));
        }
        if !agents.insert(agent.agent_id.as_str()) {
            issues.push(schema_issue(base.clone(), "duplicate agent id".into()));
        }
        let mut parts = HashSet::new();
        for part in &agent.parts {
            let path = format!("{base}.{}", part.name);
            if !is_valid_name(&part.name) || part.name == PERFORMANCE_COLUMN {
                issues.push(schema_issue(
                    path.clone(),
                    format!("part name must match [A-Za-z0-9_]+ and differ from `{PERFORMANCE_COLUMN}`"),
                ));
            }
            if !parts.insert(part.name.as_str()) {
                issues.push(schema_issue(path.clone(), "duplicate part name".into()));
            }
            match &part.kind {
                PartKind::Nominal { categories } | PartKind::Ordinal { categories } => {
                    if categories.len() < 2 {
                        issues.push(schema_issue(path.clone(), "needs at least 2 categories".into()));
                    }
                    let unique: HashSet<_> = categories.iter().collect();
                    if unique.len() != categories.len() {
                        issues.push(schema_issue(path.clone(), "duplicate category label".into()));
                    }
                    if let Some(bad) = categories.iter().find(|c| !is_valid_label(c)) {
                        issues.push(schema_issue(path.clone(), format!("invalid category label `{bad}`")));
                    }
                }
                PartKind::RealInterval { lower, upper } => {
                    if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                        issues.push(schema_issue(
                            path.clone(),
                            format!("interval [{lower}, {upper}] needs finite lower < upper"),
                        ));
                    }
                }
            }
        }
    }
}

/// Checks every [`SampleLog`] invariant.
pub fn validate_log(log: &SampleLog) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    validate_schemas(&log.schemas, &mut issues);

    let mut previous_t: Option<u64> = None;
    for (index, record) in log.records.iter().enumerate() {
        let mut push = |kind: IssueKind, path: String, message: String| {
            issues.push(ValidationIssue {
                kind,
                record: Some(index),
                t: Some(record.t),
                path,
                message,
            })
        };
        if let Some(prev) = previous_t {
            if record.t <= prev {
                push(
                    IssueKind::TimeOrder,
                    "t".into(),
                    format!("time step {} does not follow {prev}", record.t),
                );
            }
        }
        previous_t = Some(record.t);

        for agent in &log.schemas {
            let values = record.config.get(&agent.agent_id);
            for part in &agent.parts {
                let path = format!("config.{}.{}", agent.agent_id, part.name);
                let Some(value) = values.and_then(|v| v.get(&part.name)) else {
                    push(
                        IssueKind::MissingValue,
                        path,
                        format!("missing value for ({}, {})", agent.agent_id, part.name),
                    );
                    continue;
                };
                match (&part.kind, value) {
                    (PartKind::RealInterval { lower, upper }, ConfigValue::Real(v)) => {
                        if !v.is_finite() || v < lower || v > upper {
                            push(
                                IssueKind::OutOfBounds,
                                path,
                                format!("{v} outside [{lower}, {upper}]"),
                            );
                        }
                    }
                    (PartKind::RealInterval { .. }, ConfigValue::Label(l)) => {
                        push(IssueKind::WrongType, path, format!("expected a real value, got `{l}`"));
                    }
                    (kind, ConfigValue::Label(l)) => {
                        let categories = kind.categories().unwrap_or_default();
                        if !categories.contains(l) {
                            push(IssueKind::UnknownCategory, path, format!("unknown category `{l}`"));
                        }
                    }
                    (_, ConfigValue::Real(v)) => {
                        push(IssueKind::WrongType, path, format!("expected a category label, got {v}"));
                    }
                }
            }
            match record.performance.get(&agent.agent_id) {
                None => push(
                    IssueKind::MissingPerformance,
                    format!("performance.{}", agent.agent_id),
                    "missing performance".into(),
                ),
                Some(p) if !p.is_finite() => push(
                    IssueKind::NonFinitePerformance,
                    format!("performance.{}", agent.agent_id),
                    format!("performance {p} is not finite"),
                ),
                Some(_) => {}
            }
        }

        for (agent, values) in &record.config {
            let schema = log.agent(agent);
            for part in values.keys() {
                if schema.and_then(|s| s.part(part)).is_none() {
                    push(
                        IssueKind::UnknownField,
                        format!("config.{agent}.{part}"),
                        "not declared in any schema".into(),
                    );
                }
            }
        }
        for agent in record.performance.keys() {
            if log.agent(agent).is_none() {
                push(
                    IssueKind::UnknownField,
                    format!("performance.{agent}"),
                    "not declared in any schema".into(),
                );
            }
        }
    }
    issues
}

/// Pulls one column out of the log, aligned for `lag` (see
/// [`SampleLog::extract_series`]). Nominal and ordinal parts come out as
/// category indices in declaration order, real parts and performance as
/// reals.
pub fn extract_series(log: &SampleLog, column: &Column, lag: usize) -> Result<Series, ModelError> {
    let n = log.records.len();
    if n == 0 {
        return Err(ModelError::EmptyLog);
    }
    if lag >= n {
        return Err(ModelError::LagTooLarge { lag, records: n });
    }
    match column {
        Column::Performance(agent) => {
            if log.agent(agent).is_none() {
                return Err(ModelError::UnknownAgent(agent.clone()));
            }
            let values = log.records[lag..]
                .iter()
                .enumerate()
                .map(|(i, r)| match r.performance.get(agent) {
                    Some(v) if v.is_finite() => Ok(*v),
                    _ => Err(ModelError::InvalidRecord {
                        record: i + lag,
                        message: format!("no finite performance for `{agent}`"),
                    }),
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Series::Real(RealSeries::from_vec_unchecked(values)))
        }
        Column::Part(part) => {
            let schema = log
                .part_schema(part)
                .ok_or_else(|| ModelError::UnknownPart(part.clone()))?;
            let records = &log.records[..n - lag];
            let bad = |record: usize| ModelError::InvalidRecord {
                record,
                message: format!("invalid or missing value for {part}"),
            };
            match &schema.kind {
                PartKind::RealInterval { .. } => {
                    let values = records
                        .iter()
                        .enumerate()
                        .map(|(i, r)| match r.value(part) {
                            Some(ConfigValue::Real(v)) if v.is_finite() => Ok(*v),
                            _ => Err(bad(i)),
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    Ok(Series::Real(RealSeries::from_vec_unchecked(values)))
                }
                kind => {
                    let categories = kind.categories().unwrap_or_default();
                    let values = records
                        .iter()
                        .enumerate()
                        .map(|(i, r)| match r.value(part) {
                            Some(ConfigValue::Label(l)) => categories
                                .iter()
                                .position(|c| c == l)
                                .map(|p| p as u32)
                                .ok_or_else(|| bad(i)),
                            _ => Err(bad(i)),
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    Ok(Series::Category(CategorySeries::from_parts_unchecked(
                        values,
                        categories.len() as u32,
                    )))
                }
            }
        }
    }
}
