//! Influence detection from a sample log.
//!
//! For a target agent and a remote configuration part, the dependency
//! between the remote part and the target's performance is scored twice:
//! directly, and separately within each value (or quantile bin) of one of the
//! target's own configuration parts. An influence that only shows for some
//! own configurations, and averages out over all of them, is invisible to the
//! direct score but not to the conditioned one.
//!
//! Conditioning uses one own part at a time rather than the full own
//! configuration, so each partition keeps as many samples as possible.
//! Within an own part, partition scores are combined by a sample-weighted
//! mean over partitions holding at least `min_partition_size` samples; across
//! own parts the best aggregate wins.
//!
//! Significance comes from a permutation test: the remote column is shuffled
//! within the partitions of the configuration that produced the headline
//! score, and the whole headline statistic (maximum over lags, direct score
//! and every own-part conditioning) is recomputed for each shuffle.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::{
    quantile_bins, CategorySeries, DependencyScore, Measure, MeasureError, MicSearchParams,
    Series, MIN_REPETITIONS,
};
use crate::model::{Column, ModelError, PartKind, PartRef, SampleLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureChoice {
    Mi,
    Mic,
    Linear,
    Rank,
}

impl fmt::Display for MeasureChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeasureChoice::Mi => "mi",
            MeasureChoice::Mic => "mic",
            MeasureChoice::Linear => "linear",
            MeasureChoice::Rank => "rank",
        })
    }
}

impl std::str::FromStr for MeasureChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mi" => Ok(Self::Mi),
            "mic" => Ok(Self::Mic),
            "linear" => Ok(Self::Linear),
            "rank" => Ok(Self::Rank),
            other => Err(format!("unknown measure `{other}` (mi, mic, linear, rank)")),
        }
    }
}

/// How influences are measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionStrategy {
    pub measure: MeasureChoice,
    /// Quantile bins for real-valued columns wherever categories are needed:
    /// own-part partitions, composite joint variables, and MI inputs.
    pub own_part_bins: usize,
    pub min_partition_size: usize,
    pub lag_set: Vec<usize>,
    pub joint_pairs: bool,
    pub alpha: f64,
    pub permutations: usize,
    pub seed: u64,
    /// When false only the direct (unconditioned) score is used.
    pub conditioning: bool,
    pub mic: MicSearchParams,
}

impl Default for DetectionStrategy {
    fn default() -> Self {
        Self {
            measure: MeasureChoice::Mi,
            own_part_bins: 3,
            min_partition_size: 25,
            lag_set: vec![0],
            joint_pairs: false,
            alpha: 0.05,
            permutations: 200,
            seed: 0,
            conditioning: true,
            mic: MicSearchParams::default(),
        }
    }
}

impl DetectionStrategy {
    pub fn validate(&self) -> Result<(), DetectionError> {
        let fail = |m: String| Err(DetectionError::InvalidStrategy(m));
        if self.own_part_bins < 2 {
            return fail(format!("own_part_bins must be at least 2, got {}", self.own_part_bins));
        }
        if self.min_partition_size < 4 {
            return fail(format!(
                "min_partition_size must be at least 4, got {}",
                self.min_partition_size
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.permutations < MIN_REPETITIONS {
            return fail(format!(
                "permutations must be at least {MIN_REPETITIONS}, got {}",
                self.permutations
            ));
        }
        if self.lag_set.is_empty() {
            return fail("lag_set must not be empty".into());
        }
        self.mic
            .validate()
            .map_err(|e| DetectionError::InvalidStrategy(e.to_string()))
    }

    pub fn measure(&self) -> Measure {
        match self.measure {
            MeasureChoice::Mi => Measure::MutualInformation {
                real_bins: self.own_part_bins,
            },
            MeasureChoice::Mic => Measure::Mic(self.mic),
            MeasureChoice::Linear => Measure::Linear,
            MeasureChoice::Rank => Measure::Rank,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectionError {
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error("invalid log: {0} validation issue(s)")]
    InvalidLog(usize),
    #[error("need at least two agents, found {0}")]
    TooFewAgents(usize),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("remote part {0} belongs to the target agent")]
    SameAgent(PartRef),
    #[error("{part} is not a configuration part of target `{target}`")]
    NotOwnPart { part: PartRef, target: String },
    #[error("joint influence requires joint_pairs to be enabled")]
    JointDisabled,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Best direct score over the lag set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawInfluence {
    pub lag: usize,
    pub score: DependencyScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionScore {
    /// Category label, or `[low, high]` range of a quantile bin.
    pub partition: String,
    pub sample_count: usize,
    /// `None` when the partition is below `min_partition_size`.
    pub score: Option<DependencyScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionedScore {
    pub remote: Vec<PartRef>,
    /// `None` means no conditioning: a single partition holding every sample.
    pub conditioning_part: Option<PartRef>,
    pub per_partition: Vec<PartitionScore>,
    /// Sample-weighted mean strength over admissible partitions.
    pub aggregate: Option<f64>,
    pub insufficient_data: bool,
    pub lag: usize,
}

impl ConditionedScore {
    /// Recomputes the aggregate from `per_partition`.
    pub fn weighted_mean(&self) -> Option<f64> {
        weighted_mean(&self.per_partition)
    }
}

fn weighted_mean(parts: &[PartitionScore]) -> Option<f64> {
    let (mut total, mut weight) = (0.0, 0usize);
    for p in parts {
        if let Some(s) = &p.score {
            total += p.sample_count as f64 * s.strength();
            weight += p.sample_count;
        }
    }
    (weight > 0).then(|| total / weight as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceEntry {
    pub target: String,
    pub remote: PartRef,
    pub raw: RawInfluence,
    /// One result per own part of the target (best lag each).
    pub conditioned: Vec<ConditionedScore>,
    /// Index into `conditioned` of the best aggregate.
    pub best_conditioned: Option<usize>,
    pub best_lag: usize,
    /// `max(raw, best conditioned aggregate)`
    pub headline: f64,
    /// Own part whose conditioning produced the headline; `None` for raw.
    pub headline_conditioning: Option<PartRef>,
    pub p_value: f64,
    pub influenced: bool,
}

impl InfluenceEntry {
    pub fn best_conditioned(&self) -> Option<&ConditionedScore> {
        self.best_conditioned.map(|i| &self.conditioned[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointEntry {
    pub target: String,
    pub remote: [PartRef; 2],
    pub score: ConditionedScore,
    pub headline: f64,
    pub p_value: f64,
    pub influenced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceMatrix {
    pub strategy: DetectionStrategy,
    pub entries: Vec<InfluenceEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub joint_entries: Vec<JointEntry>,
}

impl InfluenceMatrix {
    pub fn entry(&self, target: &str, remote: &PartRef) -> Option<&InfluenceEntry> {
        self.entries
            .iter()
            .find(|e| e.target == target && &e.remote == remote)
    }

    pub fn flagged(&self) -> impl Iterator<Item = &InfluenceEntry> {
        self.entries.iter().filter(|e| e.influenced)
    }

    /// Canonical JSON form.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("matrix contains only finite numbers");
        s.push('\n');
        s
    }
}

/// Partition of the full record range by one own part.
struct OwnPartition {
    part: PartRef,
    labels: Vec<u32>,
    names: Vec<String>,
}

impl OwnPartition {
    fn build(log: &SampleLog, part: &PartRef, bins: usize) -> Result<Self, DetectionError> {
        let schema = log
            .part_schema(part)
            .ok_or_else(|| ModelError::UnknownPart(part.clone()))?;
        let series = log.extract_series(&Column::Part(part.clone()), 0)?;
        let (labels, names) = match (&series, &schema.kind) {
            (Series::Category(c), kind) => (
                c.values().to_vec(),
                kind.categories().map(<[String]>::to_vec).unwrap_or_default(),
            ),
            (Series::Real(r), _) => match quantile_bins(r, bins.min(r.len()).max(2)) {
                Ok(b) => {
                    let k = b.series.categories() as usize;
                    let mut lo = vec![f64::INFINITY; k];
                    let mut hi = vec![f64::NEG_INFINITY; k];
                    for (&l, &v) in b.series.values().iter().zip(r.values()) {
                        lo[l as usize] = lo[l as usize].min(v);
                        hi[l as usize] = hi[l as usize].max(v);
                    }
                    let names = (0..k).map(|i| format!("[{}, {}]", lo[i], hi[i])).collect();
                    (b.series.values().to_vec(), names)
                }
                Err(MeasureError::Degenerate(_)) | Err(MeasureError::TooFewSamples { .. }) => {
                    (vec![0; r.len()], vec![format!("{}", r.values()[0])])
                }
                Err(e) => return Err(e.into()),
            },
        };
        Ok(Self {
            part: part.clone(),
            labels,
            names,
        })
    }
}

/// Rows of one partition at one lag, with the matching performance values.
struct Cell {
    rows: Vec<usize>,
    perf: Series,
}

struct LagView {
    lag: usize,
    perf: Series,
    /// `cells[own][partition]`
    cells: Vec<Vec<Cell>>,
}

/// Everything about one target that does not depend on the remote column.
struct TargetContext {
    target: String,
    n: usize,
    measure: Measure,
    min_partition: usize,
    own: Vec<OwnPartition>,
    lags: Vec<LagView>,
}

struct Evaluation {
    raw: RawInfluence,
    conditioned: Vec<ConditionedScore>,
    best_conditioned: Option<usize>,
    headline: f64,
    headline_own: Option<usize>,
}

impl TargetContext {
    fn new(log: &SampleLog, target: &str, strategy: &DetectionStrategy) -> Result<Self, DetectionError> {
        let agent = log
            .agent(target)
            .ok_or_else(|| DetectionError::UnknownAgent(target.to_string()))?;
        let n = log.len();
        let max_lag = strategy.lag_set.iter().copied().max().unwrap_or(0);
        if n == 0 {
            return Err(ModelError::EmptyLog.into());
        }
        if max_lag >= n {
            return Err(ModelError::LagTooLarge { lag: max_lag, records: n }.into());
        }
        let own = if strategy.conditioning {
            agent
                .parts
                .iter()
                .map(|p| OwnPartition::build(log, &PartRef::new(target, p.name.clone()), strategy.own_part_bins))
                .collect::<Result<Vec<_>, _>>()?
        } else {
            Vec::new()
        };
        let mut lags = Vec::new();
        for &lag in &strategy.lag_set {
            let perf = log.extract_series(&Column::Performance(target.to_string()), lag)?;
            let len = n - lag;
            let cells = own
                .iter()
                .map(|o| {
                    let mut rows = vec![Vec::new(); o.names.len()];
                    for (i, &l) in o.labels[..len].iter().enumerate() {
                        rows[l as usize].push(i);
                    }
                    rows.into_iter()
                        .map(|rows| Cell {
                            perf: perf.select(&rows),
                            rows,
                        })
                        .collect()
                })
                .collect();
            lags.push(LagView { lag, perf, cells });
        }
        Ok(Self {
            target: target.to_string(),
            n,
            measure: strategy.measure(),
            min_partition: strategy.min_partition_size,
            own,
            lags,
        })
    }

    fn evaluate(&self, remote: &Series, remote_refs: &[PartRef]) -> Result<Evaluation, DetectionError> {
        let mut raw: Option<RawInfluence> = None;
        for view in &self.lags {
            let x = remote.slice(0..self.n - view.lag);
            let score = self.measure.score(&x, &view.perf)?;
            if raw.as_ref().map_or(true, |r| score.strength() > r.score.strength()) {
                raw = Some(RawInfluence { lag: view.lag, score });
            }
        }
        let raw = raw.expect("lag set is non-empty");

        let mut conditioned = Vec::with_capacity(self.own.len());
        for (oi, own) in self.own.iter().enumerate() {
            let mut best: Option<ConditionedScore> = None;
            for view in &self.lags {
                let mut per_partition = Vec::with_capacity(own.names.len());
                for (cell, name) in view.cells[oi].iter().zip(&own.names) {
                    let count = cell.rows.len();
                    let score = if count >= self.min_partition {
                        Some(self.measure.score(&remote.select(&cell.rows), &cell.perf)?)
                    } else {
                        None
                    };
                    per_partition.push(PartitionScore {
                        partition: name.clone(),
                        sample_count: count,
                        score,
                    });
                }
                let aggregate = weighted_mean(&per_partition);
                let candidate = ConditionedScore {
                    remote: remote_refs.to_vec(),
                    conditioning_part: Some(own.part.clone()),
                    per_partition,
                    aggregate,
                    insufficient_data: aggregate.is_none(),
                    lag: view.lag,
                };
                let better = match (&best, aggregate) {
                    (None, _) => true,
                    (Some(b), Some(a)) => b.aggregate.map_or(true, |ba| a > ba),
                    (Some(_), None) => false,
                };
                if better {
                    best = Some(candidate);
                }
            }
            conditioned.push(best.expect("lag set is non-empty"));
        }

        let mut best_conditioned: Option<usize> = None;
        for (i, c) in conditioned.iter().enumerate() {
            if let Some(a) = c.aggregate {
                if best_conditioned.map_or(true, |b| a > conditioned[b].aggregate.unwrap_or(f64::NEG_INFINITY)) {
                    best_conditioned = Some(i);
                }
            }
        }
        let raw_strength = raw.score.strength();
        let (headline, headline_own) = match best_conditioned {
            Some(i) if conditioned[i].aggregate.unwrap_or(f64::NEG_INFINITY) > raw_strength => {
                (conditioned[i].aggregate.unwrap_or_default(), Some(i))
            }
            _ => (raw_strength, None),
        };
        Ok(Evaluation {
            raw,
            conditioned,
            best_conditioned,
            headline,
            headline_own,
        })
    }

    /// Permutation p-value of the headline statistic.
    fn p_value(
        &self,
        remote: &Series,
        remote_refs: &[PartRef],
        observed: &Evaluation,
        repetitions: usize,
        seed: u64,
    ) -> Result<f64, DetectionError> {
        let groups: Vec<Vec<usize>> = match observed.headline_own {
            Some(oi) => {
                let own = &self.own[oi];
                let mut groups = vec![Vec::new(); own.names.len()];
                for (i, &l) in own.labels.iter().enumerate() {
                    groups[l as usize].push(i);
                }
                groups
            }
            None => vec![(0..self.n).collect()],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..self.n).collect();
        let mut shuffled = groups.clone();
        let mut exceed = 0usize;
        for _ in 0..repetitions {
            for (group, buf) in groups.iter().zip(shuffled.iter_mut()) {
                buf.shuffle(&mut rng);
                for (&dst, &src) in group.iter().zip(buf.iter()) {
                    order[dst] = src;
                }
            }
            let permuted = remote.permuted(&order);
            if self.evaluate(&permuted, remote_refs)?.headline >= observed.headline {
                exceed += 1;
            }
        }
        Ok((1 + exceed) as f64 / (repetitions + 1) as f64)
    }
}

/// FNV-1a over the fields, finished with a splitmix step.
///
/// Agent identifiers are left out of the fields so that renaming agents
/// leaves every permutation stream, and hence every p-value, unchanged.
fn stream_seed(seed: u64, fields: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed;
    for f in fields {
        for &b in f.as_bytes().iter().chain(std::iter::once(&0xffu8)) {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

fn check_remote(log: &SampleLog, target: &str, remote: &PartRef) -> Result<(), DetectionError> {
    if log.agent(target).is_none() {
        return Err(DetectionError::UnknownAgent(target.to_string()));
    }
    if remote.agent == target {
        return Err(DetectionError::SameAgent(remote.clone()));
    }
    if log.part_schema(remote).is_none() {
        return Err(ModelError::UnknownPart(remote.clone()).into());
    }
    Ok(())
}

/// Direct dependency between a remote part and the target's performance,
/// maximised over the lag set.
pub fn raw_influence(
    log: &SampleLog,
    target: &str,
    remote: &PartRef,
    strategy: &DetectionStrategy,
) -> Result<RawInfluence, DetectionError> {
    strategy.validate()?;
    check_remote(log, target, remote)?;
    let strategy = DetectionStrategy {
        conditioning: false,
        ..strategy.clone()
    };
    let ctx = TargetContext::new(log, target, &strategy)?;
    let series = log.extract_series(&Column::Part(remote.clone()), 0)?;
    Ok(ctx.evaluate(&series, std::slice::from_ref(remote))?.raw)
}

/// Dependency between a remote part and the target's performance within
/// each partition of one of the target's own parts, best lag.
pub fn conditioned_influence(
    log: &SampleLog,
    target: &str,
    remote: &PartRef,
    own_part: &PartRef,
    strategy: &DetectionStrategy,
) -> Result<ConditionedScore, DetectionError> {
    strategy.validate()?;
    check_remote(log, target, remote)?;
    if own_part.agent != target || log.part_schema(own_part).is_none() {
        return Err(DetectionError::NotOwnPart {
            part: own_part.clone(),
            target: target.to_string(),
        });
    }
    let mut ctx = TargetContext::new(log, target, strategy)?;
    let keep = ctx.own.iter().position(|o| &o.part == own_part);
    let Some(keep) = keep else {
        // conditioning disabled in the strategy; build the one partition asked for
        let mut with = strategy.clone();
        with.conditioning = true;
        return conditioned_influence(log, target, remote, own_part, &with);
    };
    ctx.own = vec![ctx.own.swap_remove(keep)];
    for view in &mut ctx.lags {
        view.cells = vec![view.cells.swap_remove(keep)];
    }
    let series = log.extract_series(&Column::Part(remote.clone()), 0)?;
    let eval = ctx.evaluate(&series, std::slice::from_ref(remote))?;
    Ok(eval.conditioned.into_iter().next().expect("one own part"))
}

fn entry_from(
    ctx: &TargetContext,
    log: &SampleLog,
    remote: &PartRef,
    strategy: &DetectionStrategy,
) -> Result<InfluenceEntry, DetectionError> {
    let series = log.extract_series(&Column::Part(remote.clone()), 0)?;
    let refs = std::slice::from_ref(remote);
    let eval = ctx.evaluate(&series, refs)?;
    let seed = stream_seed(strategy.seed, &[&remote.part]);
    let p_value = ctx.p_value(&series, refs, &eval, strategy.permutations, seed)?;
    let best_lag = match eval.headline_own {
        Some(i) => eval.conditioned[i].lag,
        None => eval.raw.lag,
    };
    Ok(InfluenceEntry {
        target: ctx.target.clone(),
        remote: remote.clone(),
        raw: eval.raw,
        best_lag,
        headline: eval.headline,
        headline_conditioning: eval.headline_own.map(|i| ctx.own[i].part.clone()),
        conditioned: eval.conditioned,
        best_conditioned: eval.best_conditioned,
        p_value,
        influenced: p_value < strategy.alpha,
    })
}

/// Scores and tests a single (target, remote part) pair.
pub fn influence_entry(
    log: &SampleLog,
    target: &str,
    remote: &PartRef,
    strategy: &DetectionStrategy,
) -> Result<InfluenceEntry, DetectionError> {
    strategy.validate()?;
    check_remote(log, target, remote)?;
    let ctx = TargetContext::new(log, target, strategy)?;
    entry_from(&ctx, log, remote, strategy)
}

/// Encodes two remote parts as one nominal variable; reals are first split
/// into `bins` quantile bins.
fn composite(log: &SampleLog, parts: &[PartRef; 2], bins: usize) -> Result<CategorySeries, DetectionError> {
    let mut coded = Vec::with_capacity(2);
    for part in parts {
        let series = log.extract_series(&Column::Part(part.clone()), 0)?;
        let c = match series {
            Series::Category(c) => c,
            Series::Real(r) => match quantile_bins(&r, bins.min(r.len()).max(2)) {
                Ok(b) => b.series,
                Err(MeasureError::Degenerate(_)) | Err(MeasureError::TooFewSamples { .. }) => {
                    CategorySeries::from_parts_unchecked(vec![0; r.len()], 1)
                }
                Err(e) => return Err(e.into()),
            },
        };
        coded.push(c);
    }
    let k = coded[1].categories();
    let values = coded[0]
        .values()
        .iter()
        .zip(coded[1].values())
        .map(|(&a, &b)| a * k + b)
        .collect();
    Ok(CategorySeries::from_parts_unchecked(values, coded[0].categories() * k))
}

fn check_joint(
    log: &SampleLog,
    target: &str,
    parts: &[PartRef; 2],
    strategy: &DetectionStrategy,
) -> Result<(), DetectionError> {
    strategy.validate()?;
    if !strategy.joint_pairs {
        return Err(DetectionError::JointDisabled);
    }
    for p in parts {
        check_remote(log, target, p)?;
    }
    Ok(())
}

fn joint_from(
    ctx: &TargetContext,
    log: &SampleLog,
    parts: &[PartRef; 2],
    strategy: &DetectionStrategy,
    with_p_value: bool,
) -> Result<JointEntry, DetectionError> {
    let coded = composite(log, parts, strategy.own_part_bins)?;
    let too_many = coded.categories() as usize > ctx.n / strategy.min_partition_size;
    let series = Series::Category(coded);
    let eval = ctx.evaluate(&series, parts)?;
    let score = match eval.headline_own {
        Some(i) => eval.conditioned[i].clone(),
        None => ConditionedScore {
            remote: parts.to_vec(),
            conditioning_part: None,
            per_partition: vec![PartitionScore {
                partition: "all".into(),
                sample_count: eval.raw.score.sample_count,
                score: Some(eval.raw.score.clone()),
            }],
            aggregate: Some(eval.raw.score.strength()),
            insufficient_data: false,
            lag: eval.raw.lag,
        },
    };
    let mut score = score;
    score.insufficient_data |= too_many;
    let p_value = if with_p_value && !too_many {
        let seed = stream_seed(strategy.seed, &[&parts[0].part, &parts[1].part]);
        ctx.p_value(&series, parts, &eval, strategy.permutations, seed)?
    } else {
        1.0
    };
    Ok(JointEntry {
        target: ctx.target.clone(),
        remote: parts.clone(),
        headline: eval.headline,
        score,
        p_value,
        influenced: p_value < strategy.alpha,
    })
}

/// Dependency between the target's performance and the pair of remote
/// parts taken together. Reveals influences that only show when both
/// parts are considered at once.
pub fn joint_influence(
    log: &SampleLog,
    target: &str,
    parts: &[PartRef; 2],
    strategy: &DetectionStrategy,
) -> Result<ConditionedScore, DetectionError> {
    check_joint(log, target, parts, strategy)?;
    let ctx = TargetContext::new(log, target, strategy)?;
    Ok(joint_from(&ctx, log, parts, strategy, false)?.score)
}

/// [`joint_influence`] plus its permutation p-value.
pub fn joint_entry(
    log: &SampleLog,
    target: &str,
    parts: &[PartRef; 2],
    strategy: &DetectionStrategy,
) -> Result<JointEntry, DetectionError> {
    check_joint(log, target, parts, strategy)?;
    let ctx = TargetContext::new(log, target, strategy)?;
    joint_from(&ctx, log, parts, strategy, true)
}

/// Scores every (target, remote agent, remote part) triple with target and
/// remote agents distinct. Entries are evaluated in parallel; each one has
/// its own random stream, so the result does not depend on scheduling.
pub fn influence_matrix(log: &SampleLog, strategy: &DetectionStrategy) -> Result<InfluenceMatrix, DetectionError> {
    strategy.validate()?;
    let issues = log.validate();
    if !issues.is_empty() {
        return Err(DetectionError::InvalidLog(issues.len()));
    }
    let agents = log.schemas.len();
    if agents < 2 {
        return Err(DetectionError::TooFewAgents(agents));
    }
    let contexts = log
        .schemas
        .iter()
        .map(|a| TargetContext::new(log, &a.agent_id, strategy))
        .collect::<Result<Vec<_>, _>>()?;

    let mut jobs = Vec::new();
    for (ti, ctx) in contexts.iter().enumerate() {
        for (remote, _) in log.parts().filter(|(p, _)| p.agent != ctx.target) {
            jobs.push((ti, remote));
        }
    }
    let entries = jobs
        .par_iter()
        .map(|(ti, remote)| entry_from(&contexts[*ti], log, remote, strategy))
        .collect::<Result<Vec<_>, _>>()?;

    let mut joint_jobs = Vec::new();
    if strategy.joint_pairs {
        for (ti, ctx) in contexts.iter().enumerate() {
            let remotes: Vec<PartRef> = log
                .parts()
                .filter(|(p, _)| p.agent != ctx.target)
                .map(|(p, _)| p)
                .collect();
            for i in 0..remotes.len() {
                for j in (i + 1)..remotes.len() {
                    joint_jobs.push((ti, [remotes[i].clone(), remotes[j].clone()]));
                }
            }
        }
    }
    let joint_entries = joint_jobs
        .par_iter()
        .map(|(ti, parts)| joint_from(&contexts[*ti], log, parts, strategy, true))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(InfluenceMatrix {
        strategy: strategy.clone(),
        entries,
        joint_entries,
    })
}

/// True when the part is real-valued in the log's schema.
pub fn is_real_part(log: &SampleLog, part: &PartRef) -> bool {
    log.part_schema(part)
        .is_some_and(|p| matches!(p.kind, PartKind::RealInterval { .. }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{entropy, CategorySeries};
    use crate::model::ConfigValue;
    use crate::synthetic;
    use proptest::prelude::*;

    fn pr(a: &str, p: &str) -> PartRef {
        PartRef::new(a, p)
    }

    fn quick() -> DetectionStrategy {
        DetectionStrategy {
            permutations: 40,
            ..DetectionStrategy::default()
        }
    }

    #[test]
    fn strategy_validation() {
        assert!(DetectionStrategy::default().validate().is_ok());
        let bad = [
            DetectionStrategy { own_part_bins: 1, ..Default::default() },
            DetectionStrategy { min_partition_size: 3, ..Default::default() },
            DetectionStrategy { alpha: 0.0, ..Default::default() },
            DetectionStrategy { alpha: 1.0, ..Default::default() },
            DetectionStrategy { permutations: 19, ..Default::default() },
            DetectionStrategy { lag_set: vec![], ..Default::default() },
        ];
        for s in bad {
            assert!(matches!(s.validate(), Err(DetectionError::InvalidStrategy(_))), "{s:?}");
        }
    }

    #[test]
    fn strategy_json_defaults_fill_in() {
        let s: DetectionStrategy = serde_json::from_str(r#"{"measure":"mic","lag_set":[0,2]}"#).unwrap();
        assert_eq!(s.measure, MeasureChoice::Mic);
        assert_eq!(s.lag_set, vec![0, 2]);
        assert_eq!(s.permutations, 200);
        assert!(serde_json::from_str::<DetectionStrategy>(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn table_one_needs_conditioning() {
        let log = synthetic::table_one(4000, 11);
        let s = DetectionStrategy::default();
        let raw = raw_influence(&log, "B", &pr("A", "config"), &s).unwrap();
        assert!(raw.score.value < 0.005, "{}", raw.score.value);
        let cond = conditioned_influence(&log, "B", &pr("A", "config"), &pr("B", "config"), &s).unwrap();
        assert!(cond.aggregate.unwrap() > 0.98);
        for p in &cond.per_partition {
            assert!((p.score.as_ref().unwrap().value - 1.0).abs() < 1e-3);
        }

        let entry = influence_entry(&log, "B", &pr("A", "config"), &s).unwrap();
        assert!(entry.influenced && entry.p_value <= 0.01);
        assert_eq!(entry.headline_conditioning, Some(pr("B", "config")));
        let off = DetectionStrategy { conditioning: false, ..s };
        let entry = influence_entry(&log, "B", &pr("A", "config"), &off).unwrap();
        assert!(!entry.influenced);
        assert!(entry.conditioned.is_empty());
    }

    #[test]
    fn deterministic_copy_scores_entropy() {
        let mut log = synthetic::table_one(300, 2);
        let mut bits = Vec::new();
        for r in &mut log.records {
            let bit = r.config["A"]["config"] == ConfigValue::Label("c2".into());
            r.performance.insert("B".into(), f64::from(u8::from(bit)));
            bits.push(u32::from(bit));
        }
        let raw = raw_influence(&log, "B", &pr("A", "config"), &DetectionStrategy::default()).unwrap();
        let h = entropy(&CategorySeries::new(bits, 2).unwrap()).unwrap().value;
        assert!((raw.score.value - h).abs() < 1e-12);
    }

    #[test]
    fn delayed_influence_wins_at_its_lag() {
        let log = synthetic::delayed_copy(500, 1, 9);
        let s = DetectionStrategy {
            lag_set: vec![0, 1],
            ..DetectionStrategy::default()
        };
        let raw = raw_influence(&log, "B", &pr("A", "config"), &s).unwrap();
        assert_eq!(raw.lag, 1);
        assert!(raw.score.value > 0.99);
        let e = influence_entry(&log, "B", &pr("A", "config"), &DetectionStrategy { permutations: 40, ..s }).unwrap();
        assert_eq!(e.best_lag, 1);
        assert!(e.influenced);
    }

    #[test]
    fn constant_own_part_matches_raw() {
        let mut log = synthetic::independent(200, 4);
        for r in &mut log.records {
            r.config["B"].insert("level".into(), ConfigValue::Real(0.5));
            r.config["B"].insert("mode".into(), ConfigValue::Label("c1".into()));
        }
        let s = DetectionStrategy::default();
        let raw = raw_influence(&log, "B", &pr("A", "level"), &s).unwrap();
        for own in ["level", "mode"] {
            let c = conditioned_influence(&log, "B", &pr("A", "level"), &pr("B", own), &s).unwrap();
            assert_eq!(c.aggregate, Some(raw.score.value));
        }
    }

    #[test]
    fn small_partitions_are_listed_but_excluded() {
        let log = synthetic::table_one(60, 3);
        let s = DetectionStrategy {
            min_partition_size: 31,
            ..DetectionStrategy::default()
        };
        let c = conditioned_influence(&log, "B", &pr("A", "config"), &pr("B", "config"), &s).unwrap();
        assert_eq!(c.per_partition.len(), 2);
        let admitted: Vec<_> = c.per_partition.iter().filter(|p| p.score.is_some()).collect();
        assert!(admitted.len() <= 1);
        assert_eq!(c.aggregate, c.weighted_mean());

        let s = DetectionStrategy {
            min_partition_size: 61,
            ..DetectionStrategy::default()
        };
        let c = conditioned_influence(&log, "B", &pr("A", "config"), &pr("B", "config"), &s).unwrap();
        assert!(c.insufficient_data && c.aggregate.is_none());
        // the matrix still completes
        let m = influence_matrix(&log, &DetectionStrategy { permutations: 20, ..s }).unwrap();
        assert_eq!(m.entries.len(), 2);
    }

    #[test]
    fn argument_errors() {
        let log = synthetic::table_one(50, 1);
        let s = DetectionStrategy::default();
        assert!(matches!(
            raw_influence(&log, "A", &pr("A", "config"), &s),
            Err(DetectionError::SameAgent(_))
        ));
        assert!(matches!(
            raw_influence(&log, "Z", &pr("A", "config"), &s),
            Err(DetectionError::UnknownAgent(_))
        ));
        assert!(matches!(
            conditioned_influence(&log, "B", &pr("A", "config"), &pr("A", "config"), &s),
            Err(DetectionError::NotOwnPart { .. })
        ));
        let lagged = DetectionStrategy { lag_set: vec![50], ..s.clone() };
        assert!(matches!(
            raw_influence(&log, "B", &pr("A", "config"), &lagged),
            Err(DetectionError::Model(ModelError::LagTooLarge { .. }))
        ));
        assert!(matches!(
            joint_influence(&log, "B", &[pr("A", "config"), pr("A", "config")], &s),
            Err(DetectionError::JointDisabled)
        ));
    }

    #[test]
    fn joint_reveals_xor() {
        let log = synthetic::joint_xor(2000, 5);
        let s = DetectionStrategy {
            joint_pairs: true,
            ..quick()
        };
        for part in ["p", "q"] {
            let raw = raw_influence(&log, "B", &pr("A", part), &s).unwrap();
            assert!(raw.score.value < 0.01);
        }
        let pair = [pr("A", "p"), pr("A", "q")];
        let joint = joint_influence(&log, "B", &pair, &s).unwrap();
        assert!(joint.aggregate.unwrap() > 0.99);
        let e = joint_entry(&log, "B", &pair, &s).unwrap();
        assert!(e.influenced);
    }

    #[test]
    fn joint_with_one_informative_part_matches_single() {
        let mut log = synthetic::joint_xor(2000, 6);
        for r in &mut log.records {
            let p = r.config["A"]["p"] == ConfigValue::Label("c2".into());
            r.performance.insert("B".into(), f64::from(u8::from(p)));
        }
        let s = DetectionStrategy {
            joint_pairs: true,
            conditioning: false,
            ..DetectionStrategy::default()
        };
        let single = raw_influence(&log, "B", &pr("A", "p"), &s).unwrap().score.value;
        let joint = joint_influence(&log, "B", &[pr("A", "p"), pr("A", "q")], &s)
            .unwrap()
            .aggregate
            .unwrap();
        assert!((joint - single).abs() < 0.01, "{joint} vs {single}");
    }

    #[test]
    fn composite_too_fine_is_flagged() {
        let log = synthetic::joint_xor(80, 1);
        let s = DetectionStrategy {
            joint_pairs: true,
            ..quick()
        };
        // 4 composite cells > 80 / 25
        let e = joint_entry(&log, "B", &[pr("A", "p"), pr("A", "q")], &s).unwrap();
        assert!(e.score.insufficient_data);
        assert!(!e.influenced);
    }

    #[test]
    fn symmetric_coupling_flags_both_directions() {
        let log = synthetic::symmetric_table_one(2000, 8);
        let m = influence_matrix(&log, &quick()).unwrap();
        assert_eq!(m.entries.len(), 2);
        assert!(m.entries.iter().all(|e| e.influenced));
    }

    #[test]
    fn matrix_structure() {
        let log = synthetic::independent(300, 2);
        let s = DetectionStrategy {
            joint_pairs: true,
            ..quick()
        };
        let m = influence_matrix(&log, &s).unwrap();
        assert_eq!(m.entries.len(), 4);
        assert_eq!(m.joint_entries.len(), 2);
        for e in &m.entries {
            assert_ne!(e.target, e.remote.agent);
            assert_eq!(e.influenced, e.p_value < s.alpha);
            assert!(e.p_value > 0.0 && e.p_value <= 1.0);
            for c in &e.conditioned {
                match (c.aggregate, c.weighted_mean()) {
                    (Some(a), Some(b)) => assert!((a - b).abs() <= 1e-12),
                    (a, b) => assert_eq!(a, b),
                }
            }
            let best = e.best_conditioned().and_then(|c| c.aggregate).unwrap_or(f64::NEG_INFINITY);
            assert_eq!(e.headline, e.raw.score.strength().max(best));
        }
        let back: InfluenceMatrix = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn matrix_rejects_bad_input() {
        let mut log = synthetic::independent(50, 2);
        log.records[3].performance.shift_remove("A");
        assert!(matches!(
            influence_matrix(&log, &quick()),
            Err(DetectionError::InvalidLog(1))
        ));
        let mut one = synthetic::independent(50, 2);
        one.schemas.truncate(1);
        for r in &mut one.records {
            r.config.shift_remove("B");
            r.performance.shift_remove("B");
        }
        assert!(matches!(
            influence_matrix(&one, &quick()),
            Err(DetectionError::TooFewAgents(1))
        ));
    }

    #[test]
    fn parallel_and_serial_agree() {
        let log = synthetic::independent(200, 12);
        let s = quick();
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| influence_matrix(&log, &s).unwrap());
        let parallel = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap()
            .install(|| influence_matrix(&log, &s).unwrap());
        assert_eq!(serial.to_json(), parallel.to_json());
        assert_eq!(serial, influence_matrix(&log, &s).unwrap());
    }

    fn rename(log: &SampleLog, map: &[(&str, &str)], reverse: bool) -> SampleLog {
        let to = |id: &str| map.iter().find(|(f, _)| *f == id).map_or(id, |(_, t)| t).to_string();
        let mut out = log.clone();
        for a in &mut out.schemas {
            a.agent_id = to(&a.agent_id);
        }
        for r in &mut out.records {
            r.config = r.config.iter().map(|(k, v)| (to(k), v.clone())).collect();
            r.performance = r.performance.iter().map(|(k, v)| (to(k), *v)).collect();
        }
        if reverse {
            out.schemas.reverse();
        }
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

        #[test]
        fn relabeling_agents_permutes_entries(seed in 0u64..1000, reverse in any::<bool>()) {
            let log = synthetic::independent(120, seed);
            let s = DetectionStrategy { seed, ..quick() };
            let m = influence_matrix(&log, &s).unwrap();
            let renamed = rename(&log, &[("A", "B"), ("B", "A")], reverse);
            let r = influence_matrix(&renamed, &s).unwrap();
            for e in &m.entries {
                let other = if e.target == "A" { "B" } else { "A" };
                let twin = r.entry(other, &PartRef::new(e.target.clone(), e.remote.part.clone())).unwrap();
                prop_assert_eq!(twin.headline, e.headline);
                prop_assert_eq!(twin.raw.score.value, e.raw.score.value);
                prop_assert_eq!(twin.p_value, e.p_value);
                prop_assert_eq!(twin.influenced, e.influenced);
            }
        }

        #[test]
        fn monotone_reencoding_keeps_headlines(seed in 0u64..1000, measure_idx in 0usize..3) {
            let measure = [MeasureChoice::Mi, MeasureChoice::Rank, MeasureChoice::Mic][measure_idx];
            let log = synthetic::independent(100, seed);
            let mut cubed = log.clone();
            for r in &mut cubed.records {
                for a in r.config.values_mut() {
                    if let Some(ConfigValue::Real(v)) = a.get_mut("level") {
                        *v = v.powi(3);
                    }
                }
                for v in r.performance.values_mut() {
                    *v = v.exp();
                }
            }
            let s = DetectionStrategy { measure, seed, permutations: 20, ..DetectionStrategy::default() };
            let a = influence_matrix(&log, &s).unwrap();
            let b = influence_matrix(&cubed, &s).unwrap();
            for (x, y) in a.entries.iter().zip(&b.entries) {
                prop_assert_eq!(x.headline, y.headline);
                prop_assert_eq!(x.p_value, y.p_value);
            }
        }
    }
}
