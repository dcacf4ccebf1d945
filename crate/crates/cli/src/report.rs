//! Text and CSV renderings of an influence matrix.

use std::cmp::Ordering;
use std::fmt::Write as _;

use influence_core::detection::{ConditionedScore, InfluenceEntry, InfluenceMatrix, JointEntry};

pub const CSV_HEADER: [&str; 8] = ["target", "remote", "part", "score", "p", "flag", "lag", "conditioning"];

/// One flat row per entry, pairwise or joint.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub target: String,
    pub remote: String,
    pub part: String,
    pub score: f64,
    pub p: f64,
    pub flag: bool,
    pub lag: usize,
    pub conditioning: String,
}

impl Row {
    fn pairwise(e: &InfluenceEntry) -> Self {
        Self {
            target: e.target.clone(),
            remote: e.remote.agent.clone(),
            part: e.remote.part.clone(),
            score: e.headline,
            p: e.p_value,
            flag: e.influenced,
            lag: e.best_lag,
            conditioning: e.headline_conditioning.as_ref().map(|p| p.to_string()).unwrap_or_default(),
        }
    }

    fn joint(e: &JointEntry) -> Self {
        Self {
            target: e.target.clone(),
            remote: format!("{}+{}", e.remote[0].agent, e.remote[1].agent),
            part: format!("{}+{}", e.remote[0].part, e.remote[1].part),
            score: e.headline,
            p: e.p_value,
            flag: e.influenced,
            lag: e.score.lag,
            conditioning: String::new(),
        }
    }

    fn label(&self) -> String {
        if self.remote.contains('+') {
            let (a, b) = self.remote.split_once('+').unwrap();
            let (p, q) = self.part.split_once('+').unwrap();
            format!("{} <- {a}.{p} & {b}.{q}", self.target)
        } else {
            format!("{} <- {}.{}", self.target, self.remote, self.part)
        }
    }
}

pub fn rows(matrix: &InfluenceMatrix) -> Vec<Row> {
    matrix
        .entries
        .iter()
        .map(Row::pairwise)
        .chain(matrix.joint_entries.iter().map(Row::joint))
        .collect()
}

/// Flagged first, then by p-value, then by score. Stable otherwise.
fn rank_order(a: &Row, b: &Row) -> Ordering {
    b.flag
        .cmp(&a.flag)
        .then(a.p.total_cmp(&b.p))
        .then(b.score.total_cmp(&a.score))
}

pub fn ranked(matrix: &InfluenceMatrix) -> Vec<Row> {
    let mut r = rows(matrix);
    r.sort_by(rank_order);
    r
}

/// Reals use the shortest round-trip form so the CSV parses back exactly.
pub fn summary_csv(matrix: &InfluenceMatrix, rank: bool) -> String {
    let rows = if rank { ranked(matrix) } else { rows(matrix) };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.target,
            r.remote,
            r.part,
            r.score.to_string(),
            r.p.to_string(),
            r.flag.to_string(),
            r.lag.to_string(),
            r.conditioning,
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn flagged_lines(matrix: &InfluenceMatrix) -> Vec<String> {
    ranked(matrix)
        .into_iter()
        .filter(|r| r.flag)
        .map(|r| format!("{}  score {:.4}  p {:.4}", r.label(), r.score, r.p))
        .collect()
}

fn partition_table(out: &mut String, c: &ConditionedScore) {
    let cond = c.conditioning_part.as_ref().map(|p| p.to_string()).unwrap_or_else(|| "(none)".into());
    match c.aggregate {
        Some(a) => writeln!(out, "  conditioned on {cond}, lag {}: aggregate {a:.6}", c.lag).unwrap(),
        None => writeln!(out, "  conditioned on {cond}, lag {}: no admissible partition", c.lag).unwrap(),
    }
    writeln!(out, "    {:<28} {:>8} {:>12}", "partition", "n", "score").unwrap();
    for p in &c.per_partition {
        let score = p.score.as_ref().map(|s| format!("{:.6}", s.value)).unwrap_or_else(|| "-".into());
        writeln!(out, "    {:<28} {:>8} {:>12}", p.partition, p.sample_count, score).unwrap();
    }
}

pub fn render(matrix: &InfluenceMatrix) -> String {
    let s = &matrix.strategy;
    let rows = ranked(matrix);
    let flagged = rows.iter().filter(|r| r.flag).count();
    let mut out = String::new();
    writeln!(out, "influence report").unwrap();
    writeln!(
        out,
        "measure {}  alpha {}  permutations {}  lags {:?}  seed {}  conditioning {}",
        s.measure, s.alpha, s.permutations, s.lag_set, s.seed, s.conditioning
    )
    .unwrap();
    writeln!(out, "{} entries, {} flagged", rows.len(), flagged).unwrap();
    writeln!(out).unwrap();
    writeln!(out, "{:>4}  {:<40} {:>10} {:>8}  flag", "rank", "influence", "score", "p").unwrap();
    for (i, r) in rows.iter().enumerate() {
        writeln!(
            out,
            "{:>4}  {:<40} {:>10.6} {:>8.4}  {}",
            i + 1,
            r.label(),
            r.score,
            r.p,
            if r.flag { "*" } else { "" }
        )
        .unwrap();
    }

    for r in &rows {
        writeln!(out).unwrap();
        writeln!(out, "{}", r.label()).unwrap();
        if let Some(e) = matrix
            .entries
            .iter()
            .find(|e| e.target == r.target && e.remote.agent == r.remote && e.remote.part == r.part)
        {
            writeln!(out, "  raw {:.6} at lag {}", e.raw.score.value, e.raw.lag).unwrap();
            if let Some(c) = e.best_conditioned() {
                partition_table(&mut out, c);
            }
        } else if let Some(j) = matrix.joint_entries.iter().find(|j| Row::joint(j) == *r) {
            partition_table(&mut out, &j.score);
        }
    }
    out
}
