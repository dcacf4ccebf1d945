//! Dependency measures between two sampled variables.
//!
//! Everything here is a pure function of its inputs. Mutual information is a
//! plug-in (frequency count) estimate reported in bits; continuous variables
//! are only ever handled through rank-based binning. The maximal information
//! coefficient normalises binned mutual information by `log2(min(n_x, n_y))`
//! and maximises over grids with `n_x * n_y < B(N)`.
//!
//! The plug-in estimator carries a positive bias of roughly
//! `(r - 1)(c - 1) / (2 N ln 2)` bits for an `r x c` table. It is not
//! corrected; the detection layer compares against permutation nulls that
//! carry the same bias.

mod binning;
mod correlation;
mod information;
mod mic;
mod permutation;
mod series;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use binning::{quantile_bins, Binning};
pub use correlation::{linear_correlation, rank_correlation};
pub use information::{discrete_mutual_information, entropy, JointDistribution};
pub use mic::{mic, MicSearchParams, SearchMode, MIN_BINS_PER_AXIS};
pub use permutation::{permutation_pvalue, MIN_REPETITIONS};
pub use series::{CategorySeries, RealSeries, Series};

pub(crate) use information::mutual_information_from_table;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("series is empty")]
    Empty,
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {required} samples, got {actual}")]
    TooFewSamples { required: usize, actual: usize },
    #[error("category {value} at index {index} is not below the declared count {categories}")]
    CategoryOutOfRange {
        index: usize,
        value: u32,
        categories: u32,
    },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("internal consistency violation: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, MeasureError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    MutualInformation,
    Entropy,
    Mic,
    Linear,
    Rank,
}

/// Grid chosen by a binned measure. Cut points are the largest value of
/// every bin except the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinLayout {
    pub x_bins: usize,
    pub y_bins: usize,
    pub x_cuts: Vec<f64>,
    pub y_cuts: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependencyScore {
    pub value: f64,
    pub measure: MeasureKind,
    pub sample_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_layout: Option<BinLayout>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    /// Set when one input was constant and the value is 0 by convention.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

impl DependencyScore {
    pub(crate) fn new(measure: MeasureKind, value: f64, sample_count: usize) -> Self {
        Self {
            value,
            measure,
            sample_count,
            bin_layout: None,
            p_value: None,
            degenerate: false,
        }
    }

    pub(crate) fn degenerate(measure: MeasureKind, sample_count: usize) -> Self {
        Self {
            degenerate: true,
            ..Self::new(measure, 0.0, sample_count)
        }
    }

    /// Magnitude used for ranking and significance: the value itself for
    /// information measures, its absolute value for correlations.
    pub fn strength(&self) -> f64 {
        match self.measure {
            MeasureKind::Linear | MeasureKind::Rank => self.value.abs(),
            _ => self.value,
        }
    }
}

/// A dependency measure together with its parameters, usable on any pair
/// of series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "measure", rename_all = "snake_case")]
pub enum Measure {
    /// Plug-in mutual information; real series are first split into
    /// `real_bins` equal-frequency bins.
    MutualInformation { real_bins: usize },
    Mic(MicSearchParams),
    Linear,
    Rank,
}

impl Measure {
    pub fn kind(&self) -> MeasureKind {
        match self {
            Measure::MutualInformation { .. } => MeasureKind::MutualInformation,
            Measure::Mic(_) => MeasureKind::Mic,
            Measure::Linear => MeasureKind::Linear,
            Measure::Rank => MeasureKind::Rank,
        }
    }

    /// Scores the pair. Constant inputs give a degenerate score of 0 rather
    /// than an error.
    pub fn score(&self, x: &Series, y: &Series) -> Result<DependencyScore> {
        if x.len() != y.len() {
            return Err(MeasureError::LengthMismatch(x.len(), y.len()));
        }
        if x.is_empty() {
            return Err(MeasureError::Empty);
        }
        let n = x.len();
        match self {
            Measure::MutualInformation { real_bins } => {
                let (Some(xc), Some(yc)) = (discretize(x, *real_bins)?, discretize(y, *real_bins)?)
                else {
                    return Ok(DependencyScore::degenerate(MeasureKind::MutualInformation, n));
                };
                discrete_mutual_information(&xc, &yc)
            }
            Measure::Mic(params) => mic(x, y, params),
            Measure::Linear | Measure::Rank => {
                if n < 2 || x.is_constant() || y.is_constant() {
                    return Ok(DependencyScore::degenerate(self.kind(), n));
                }
                let xr = RealSeries::from_vec_unchecked(x.to_reals());
                let yr = RealSeries::from_vec_unchecked(y.to_reals());
                if matches!(self, Measure::Linear) {
                    linear_correlation(&xr, &yr)
                } else {
                    rank_correlation(&xr, &yr)
                }
            }
        }
    }
}

/// Category view of a series: categories pass through, reals are binned by
/// rank. `None` when the series is constant.
pub(crate) fn discretize(series: &Series, real_bins: usize) -> Result<Option<CategorySeries>> {
    if series.is_constant() {
        return Ok(None);
    }
    match series {
        Series::Category(c) => Ok(Some(c.clone())),
        Series::Real(r) => {
            let bins = real_bins.min(r.len()).max(2);
            match quantile_bins(r, bins) {
                Ok(b) => Ok(Some(b.series)),
                Err(MeasureError::Degenerate(_)) => Ok(None),
                Err(e) => Err(e),
            }
        }
    }
}

/// Clamps floating-point residue of a non-negative quantity.
pub(crate) fn clamp_non_negative(value: f64, what: &str) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -1e-12 {
        Ok(0.0)
    } else {
        Err(MeasureError::Internal(format!("{what} evaluated to {value}")))
    }
}
