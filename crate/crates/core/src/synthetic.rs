//! Small synthetic logs with known influence structure, used by tests,
//! fixtures and the CLI.

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{AgentSchema, ConfigPartSchema, ConfigValue, PartKind, SampleLog, SampleRecord};

const LABELS: [&str; 2] = ["c1", "c2"];

fn binary_part(name: &str) -> ConfigPartSchema {
    ConfigPartSchema {
        name: name.into(),
        kind: PartKind::Nominal {
            categories: LABELS.iter().map(|s| s.to_string()).collect(),
        },
    }
}

fn unit_part(name: &str) -> ConfigPartSchema {
    ConfigPartSchema {
        name: name.into(),
        kind: PartKind::RealInterval { lower: 0.0, upper: 1.0 },
    }
}

fn agent(id: &str, parts: Vec<ConfigPartSchema>) -> AgentSchema {
    AgentSchema {
        agent_id: id.into(),
        parts,
    }
}

/// One record; `config` lists (agent, part, value), `perf` lists (agent, value).
fn record(t: usize, config: &[(&str, &str, ConfigValue)], perf: &[(&str, f64)]) -> SampleRecord {
    let mut map: IndexMap<String, IndexMap<String, ConfigValue>> = IndexMap::new();
    for (a, p, v) in config {
        map.entry(a.to_string()).or_default().insert(p.to_string(), v.clone());
    }
    SampleRecord {
        t: t as u64,
        config: map,
        performance: perf.iter().map(|(a, v)| (a.to_string(), *v)).collect(),
    }
}

fn label(bit: bool) -> ConfigValue {
    ConfigValue::Label(LABELS[bit as usize].into())
}

/// Performance of B from the two binary configurations: 1 when they agree,
/// 0.5 otherwise.
pub fn table_one_performance(a: bool, b: bool) -> f64 {
    if a == b {
        1.0
    } else {
        0.5
    }
}

/// Agents A and B with one binary part `config` each, drawn uniformly and
/// independently. B's performance follows [`table_one_performance`]; A's is
/// constant.
pub fn table_one(n: usize, seed: u64) -> SampleLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = SampleLog::new(vec![
        agent("A", vec![binary_part("config")]),
        agent("B", vec![binary_part("config")]),
    ]);
    for t in 0..n {
        let (a, b): (bool, bool) = (rng.gen(), rng.gen());
        log.records.push(record(
            t,
            &[("A", "config", label(a)), ("B", "config", label(b))],
            &[("A", 1.0), ("B", table_one_performance(a, b))],
        ));
    }
    log
}

/// Like [`table_one`] but both agents' performances follow the table, so
/// each influences the other.
pub fn symmetric_table_one(n: usize, seed: u64) -> SampleLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = SampleLog::new(vec![
        agent("A", vec![binary_part("config")]),
        agent("B", vec![binary_part("config")]),
    ]);
    for t in 0..n {
        let (a, b): (bool, bool) = (rng.gen(), rng.gen());
        let p = table_one_performance(a, b);
        log.records.push(record(
            t,
            &[("A", "config", label(a)), ("B", "config", label(b))],
            &[("A", p), ("B", p)],
        ));
    }
    log
}

/// Two agents, each with a binary part `mode` and a real part `level`;
/// every value and both performances are independent uniform draws.
pub fn independent(n: usize, seed: u64) -> SampleLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = SampleLog::new(vec![
        agent("A", vec![binary_part("mode"), unit_part("level")]),
        agent("B", vec![binary_part("mode"), unit_part("level")]),
    ]);
    for t in 0..n {
        let (am, al, bm, bl) = (rng.gen(), rng.gen::<f64>(), rng.gen(), rng.gen::<f64>());
        let (pa, pb) = (rng.gen::<f64>(), rng.gen::<f64>());
        log.records.push(record(
            t,
            &[
                ("A", "mode", label(am)),
                ("A", "level", ConfigValue::Real(al)),
                ("B", "mode", label(bm)),
                ("B", "level", ConfigValue::Real(bl)),
            ],
            &[("A", pa), ("B", pb)],
        ));
    }
    log
}

/// B's performance at step t is 1 when A's `config` was c2 at step
/// `t - delay` (0 for the first `delay` steps). A's performance is constant.
pub fn delayed_copy(n: usize, delay: usize, seed: u64) -> SampleLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits: Vec<(bool, bool)> = (0..n).map(|_| (rng.gen(), rng.gen())).collect();
    let mut log = SampleLog::new(vec![
        agent("A", vec![binary_part("config")]),
        agent("B", vec![binary_part("config")]),
    ]);
    for t in 0..n {
        let perf = if t >= delay && bits[t - delay].0 { 1.0 } else { 0.0 };
        log.records.push(record(
            t,
            &[("A", "config", label(bits[t].0)), ("B", "config", label(bits[t].1))],
            &[("A", 0.0), ("B", perf)],
        ));
    }
    log
}

/// A has binary parts `p` and `q`; B's performance is `p XOR q`, so neither
/// part alone carries information about it. A's performance is constant.
pub fn joint_xor(n: usize, seed: u64) -> SampleLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = SampleLog::new(vec![
        agent("A", vec![binary_part("p"), binary_part("q")]),
        agent("B", vec![binary_part("config")]),
    ]);
    for t in 0..n {
        let (p, q, b): (bool, bool, bool) = (rng.gen(), rng.gen(), rng.gen());
        log.records.push(record(
            t,
            &[("A", "p", label(p)), ("A", "q", label(q)), ("B", "config", label(b))],
            &[("A", 0.0), ("B", f64::from(u8::from(p ^ q)))],
        ));
    }
    log
}
