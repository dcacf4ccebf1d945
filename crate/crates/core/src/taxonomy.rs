//! System descriptors and the rule table that turns one into a detection
//! strategy.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detection::{DetectionStrategy, MeasureChoice};

/// Agent counts below this are `Small`.
pub const SMALL_LIMIT: usize = 10;
/// Agent counts from this on are `Large`.
pub const LARGE_FROM: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentScale {
    Small,
    Medium,
    Large,
}

impl AgentScale {
    pub fn from_count(agents: usize) -> Self {
        if agents < SMALL_LIMIT {
            Self::Small
        } else if agents < LARGE_FROM {
            Self::Medium
        } else {
            Self::Large
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartClass {
    Nominal { categories: u32 },
    Ordinal { categories: u32 },
    InfiniteReal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostLevel {
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Communication {
    Free,
    MultiHopCost { cost: CostLevel },
    NeighborsOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfluenceLocality {
    Neighborhood,
    MultiHop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Jointness {
    Pairwise,
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DependencyClass {
    Linear,
    Monotonic,
    Stochastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distinctiveness {
    Distinct,
    Subtle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Temporality {
    Immediate,
    Delayed { max_lag: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDescriptor {
    pub agent_scale: AgentScale,
    pub part_count: usize,
    pub part_kinds: Vec<PartClass>,
    /// Metadata only; no rule depends on it.
    #[serde(default)]
    pub hardware_heterogeneous: bool,
    pub communication: Communication,
    pub influence_locality: InfluenceLocality,
    pub jointness: Jointness,
    pub dependency_class: DependencyClass,
    pub distinctiveness: Distinctiveness,
    pub temporality: Temporality,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub remarks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TaxonomyError {
    #[error("unknown built-in descriptor `{0}` (known: scn)")]
    UnknownBuiltin(String),
    #[error("invalid descriptor: {0}")]
    Invalid(String),
}

impl SystemDescriptor {
    pub fn validate(&self) -> Result<(), TaxonomyError> {
        if self.part_count != self.part_kinds.len() {
            return Err(TaxonomyError::Invalid(format!(
                "part_count {} but {} part kinds listed",
                self.part_count,
                self.part_kinds.len()
            )));
        }
        for (i, k) in self.part_kinds.iter().enumerate() {
            if let PartClass::Nominal { categories } | PartClass::Ordinal { categories } = k {
                if *categories < 2 {
                    return Err(TaxonomyError::Invalid(format!(
                        "part_kinds[{i}] needs at least 2 categories"
                    )));
                }
            }
        }
        if let Temporality::Delayed { max_lag: 0 } = self.temporality {
            return Err(TaxonomyError::Invalid("Delayed needs max_lag >= 1".into()));
        }
        Ok(())
    }

    pub fn has_real_parts(&self) -> bool {
        self.part_kinds.contains(&PartClass::InfiniteReal)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyRecommendation {
    pub strategy: DetectionStrategy,
    /// Each note starts with the strategy field it concerns, or `scope:` for
    /// advice outside the strategy.
    pub notes: Vec<String>,
}

pub const SUBTLE_PERMUTATIONS: usize = 500;
pub const SUBTLE_MIN_PARTITION: usize = 50;

/// Applies the rule table. Deterministic and total.
pub fn recommend_strategy(d: &SystemDescriptor) -> StrategyRecommendation {
    let mut strategy = DetectionStrategy::default();
    let mut notes = Vec::new();

    strategy.measure = match d.dependency_class {
        DependencyClass::Linear => {
            notes.push("measure: linear dependencies expected, Pearson correlation suffices".into());
            MeasureChoice::Linear
        }
        DependencyClass::Monotonic => {
            notes.push("measure: monotonic dependencies expected, Spearman rank correlation".into());
            MeasureChoice::Rank
        }
        DependencyClass::Stochastic if d.has_real_parts() => {
            notes.push(
                "measure: general stochastic dependencies on real-valued parts, MIC searches the binning".into(),
            );
            MeasureChoice::Mic
        }
        DependencyClass::Stochastic => {
            notes.push("measure: general stochastic dependencies on categorical parts, plug-in mutual information".into());
            MeasureChoice::Mi
        }
    };

    if let Temporality::Delayed { max_lag } = d.temporality {
        strategy.lag_set = (0..=max_lag).collect();
        notes.push(format!("lag_set: effects may arrive up to {max_lag} step(s) late, scan lags 0..={max_lag}"));
    }

    if d.jointness == Jointness::Joint {
        strategy.joint_pairs = true;
        notes.push("joint_pairs: influences may only show when two remote parts act together".into());
    }

    if d.distinctiveness == Distinctiveness::Subtle {
        strategy.permutations = SUBTLE_PERMUTATIONS;
        strategy.min_partition_size = SUBTLE_MIN_PARTITION;
        notes.push(format!(
            "permutations: weak dependencies need finer p-values, raised to {SUBTLE_PERMUTATIONS}"
        ));
        notes.push(format!(
            "min_partition_size: weak dependencies need larger partitions, raised to {SUBTLE_MIN_PARTITION}"
        ));
    }

    if d.agent_scale == AgentScale::Large && d.communication == Communication::NeighborsOnly {
        notes.push(
            "scope: many agents that only talk to neighbours; restrict candidate remote agents to each agent's declared neighbourhood".into(),
        );
    }

    StrategyRecommendation { strategy, notes }
}

/// Smart-camera network: three real-valued parts per camera (pan, tilt,
/// zoom), wireless multi-hop links, spatially local pairwise influences.
pub fn builtin_descriptor(name: &str) -> Result<SystemDescriptor, TaxonomyError> {
    match name {
        "scn" => Ok(SystemDescriptor {
            agent_scale: AgentScale::Medium,
            part_count: 3,
            part_kinds: vec![PartClass::InfiniteReal; 3],
            hardware_heterogeneous: false,
            communication: Communication::MultiHopCost { cost: CostLevel::High },
            influence_locality: InfluenceLocality::Neighborhood,
            jointness: Jointness::Pairwise,
            dependency_class: DependencyClass::Stochastic,
            distinctiveness: Distinctiveness::Distinct,
            temporality: Temporality::Immediate,
            remarks: vec![
                "agent_scale: camera networks come in every size; Medium is a placeholder, not a classification".into(),
            ],
        }),
        other => Err(TaxonomyError::UnknownBuiltin(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn plain(class: DependencyClass) -> SystemDescriptor {
        SystemDescriptor {
            agent_scale: AgentScale::Small,
            part_count: 1,
            part_kinds: vec![PartClass::Nominal { categories: 2 }],
            hardware_heterogeneous: false,
            communication: Communication::Free,
            influence_locality: InfluenceLocality::Neighborhood,
            jointness: Jointness::Pairwise,
            dependency_class: class,
            distinctiveness: Distinctiveness::Distinct,
            temporality: Temporality::Immediate,
            remarks: vec![],
        }
    }

    #[test]
    fn scn_builtin() {
        let d = builtin_descriptor("scn").unwrap();
        assert_eq!(d, builtin_descriptor("scn").unwrap());
        d.validate().unwrap();
        assert_eq!(d.part_kinds, vec![PartClass::InfiniteReal; 3]);
        let r = recommend_strategy(&d);
        assert_eq!(r.strategy.measure, MeasureChoice::Mic);
        assert_eq!(r.strategy.lag_set, vec![0]);
        assert!(!r.strategy.joint_pairs);
        assert!(matches!(builtin_descriptor("foo"), Err(TaxonomyError::UnknownBuiltin(_))));
    }

    #[test]
    fn linear_only() {
        let r = recommend_strategy(&plain(DependencyClass::Linear));
        let expected = DetectionStrategy {
            measure: MeasureChoice::Linear,
            ..DetectionStrategy::default()
        };
        assert_eq!(r.strategy, expected);
        assert_eq!(r.notes.len(), 1);
    }

    #[test]
    fn stochastic_nominal_delayed_joint() {
        let mut d = plain(DependencyClass::Stochastic);
        d.temporality = Temporality::Delayed { max_lag: 2 };
        d.jointness = Jointness::Joint;
        let r = recommend_strategy(&d);
        assert_eq!(r.strategy.measure, MeasureChoice::Mi);
        assert_eq!(r.strategy.lag_set, vec![0, 1, 2]);
        assert!(r.strategy.joint_pairs);
    }

    #[test]
    fn scale_boundaries() {
        assert_eq!(AgentScale::from_count(9), AgentScale::Small);
        assert_eq!(AgentScale::from_count(10), AgentScale::Medium);
        assert_eq!(AgentScale::from_count(299), AgentScale::Medium);
        assert_eq!(AgentScale::from_count(300), AgentScale::Large);
    }

    #[test]
    fn descriptor_validation() {
        let mut d = plain(DependencyClass::Linear);
        d.part_count = 2;
        assert!(d.validate().is_err());
        let mut d = plain(DependencyClass::Linear);
        d.temporality = Temporality::Delayed { max_lag: 0 };
        assert!(d.validate().is_err());
        let mut d = plain(DependencyClass::Linear);
        d.part_kinds = vec![PartClass::Ordinal { categories: 1 }];
        assert!(d.validate().is_err());
    }

    #[test]
    fn descriptor_json_round_trip() {
        let d = builtin_descriptor("scn").unwrap();
        let text = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<SystemDescriptor>(&text).unwrap(), d);
    }

    fn noted(notes: &[String], field: &str) -> bool {
        notes.iter().any(|n| n.starts_with(&format!("{field}:")))
    }

    fn check(d: &SystemDescriptor) {
        let r = recommend_strategy(d);
        assert_eq!(r, recommend_strategy(d));
        r.strategy.validate().unwrap();
        let base = DetectionStrategy::default();
        let s = &r.strategy;
        assert!(s.measure == base.measure || noted(&r.notes, "measure"));
        assert!(s.lag_set == base.lag_set || noted(&r.notes, "lag_set"));
        assert!(s.joint_pairs == base.joint_pairs || noted(&r.notes, "joint_pairs"));
        assert!(s.permutations == base.permutations || noted(&r.notes, "permutations"));
        assert!(s.min_partition_size == base.min_partition_size || noted(&r.notes, "min_partition_size"));
        assert_eq!(s.own_part_bins, base.own_part_bins);
        assert_eq!(s.alpha, base.alpha);
        assert_eq!(s.seed, base.seed);
        assert!(noted(&r.notes, "measure"));
    }

    #[test]
    fn every_enum_combination() {
        use AgentScale::*;
        let comms = [
            Communication::Free,
            Communication::MultiHopCost { cost: CostLevel::Low },
            Communication::MultiHopCost { cost: CostLevel::Medium },
            Communication::MultiHopCost { cost: CostLevel::High },
            Communication::NeighborsOnly,
        ];
        let kinds = [
            vec![PartClass::InfiniteReal],
            vec![PartClass::Nominal { categories: 3 }, PartClass::Ordinal { categories: 5 }],
            vec![PartClass::Nominal { categories: 2 }, PartClass::InfiniteReal],
        ];
        let mut count = 0;
        for scale in [Small, Medium, Large] {
            for comm in comms {
                for loc in [InfluenceLocality::Neighborhood, InfluenceLocality::MultiHop] {
                    for joint in [Jointness::Pairwise, Jointness::Joint] {
                        for class in [DependencyClass::Linear, DependencyClass::Monotonic, DependencyClass::Stochastic] {
                            for dist in [Distinctiveness::Distinct, Distinctiveness::Subtle] {
                                for temp in [Temporality::Immediate, Temporality::Delayed { max_lag: 3 }] {
                                    for parts in &kinds {
                                        for hw in [false, true] {
                                            let d = SystemDescriptor {
                                                agent_scale: scale,
                                                part_count: parts.len(),
                                                part_kinds: parts.clone(),
                                                hardware_heterogeneous: hw,
                                                communication: comm,
                                                influence_locality: loc,
                                                jointness: joint,
                                                dependency_class: class,
                                                distinctiveness: dist,
                                                temporality: temp,
                                                remarks: vec![],
                                            };
                                            d.validate().unwrap();
                                            check(&d);
                                            count += 1;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        assert_eq!(count, 3 * 5 * 2 * 2 * 3 * 2 * 2 * 3 * 2);
    }

    proptest! {
        #[test]
        fn sampled_integer_fields(max_lag in 1usize..50, cats in 2u32..100, n_real in 0usize..5, agents in 0usize..2000) {
            let mut d = plain(DependencyClass::Stochastic);
            d.agent_scale = AgentScale::from_count(agents);
            d.temporality = Temporality::Delayed { max_lag };
            d.part_kinds = vec![PartClass::Ordinal { categories: cats }];
            d.part_kinds.extend(std::iter::repeat(PartClass::InfiniteReal).take(n_real));
            d.part_count = d.part_kinds.len();
            check(&d);
            let r = recommend_strategy(&d);
            prop_assert_eq!(r.strategy.lag_set.len(), max_lag + 1);
            prop_assert_eq!(r.strategy.measure == MeasureChoice::Mic, n_real > 0);
        }
    }
}
