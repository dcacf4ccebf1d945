use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{CategorySeries, MeasureError, RealSeries, Result};

/// Output of [`quantile_bins`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub series: CategorySeries,
    /// Largest value of every bin but the last.
    pub cut_points: Vec<f64>,
}

/// Samples in ascending order with their tie groups.
#[derive(Debug, Clone)]
pub(crate) struct RankOrder {
    /// Sample indices sorted by value; ties keep index order.
    pub order: Vec<usize>,
    /// Exclusive end position (in `order`) of every tie group.
    pub group_ends: Vec<usize>,
    pub sorted: Vec<f64>,
}

impl RankOrder {
    pub fn new(values: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        // Finite inputs only, so partial_cmp never fails; -0.0 and 0.0 tie.
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
        let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        let mut group_ends = Vec::new();
        for pos in 1..sorted.len() {
            if sorted[pos] != sorted[pos - 1] {
                group_ends.push(pos);
            }
        }
        if !sorted.is_empty() {
            group_ends.push(sorted.len());
        }
        Self {
            order,
            group_ends,
            sorted,
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn distinct(&self) -> usize {
        self.group_ends.len()
    }

    /// Equal-frequency bin ends (exclusive positions in sorted order).
    pub fn equipartition(&self, n_bins: usize) -> Vec<usize> {
        equipartition_ends(&self.group_ends, n_bins)
    }

    /// Per-sample bin labels (in original index order) for the given ends.
    pub fn labels(&self, ends: &[usize]) -> Vec<u32> {
        let mut labels = vec![0u32; self.len()];
        let mut start = 0;
        for (bin, &end) in ends.iter().enumerate() {
            for &idx in &self.order[start..end] {
                labels[idx] = bin as u32;
            }
            start = end;
        }
        labels
    }

    pub fn cut_points(&self, ends: &[usize]) -> Vec<f64> {
        ends[..ends.len().saturating_sub(1)]
            .iter()
            .map(|&e| self.sorted[e - 1])
            .collect()
    }
}

/// Merges consecutive groups (given by their exclusive end positions, the
/// last being the total count) into at most `n_bins` bins of roughly equal
/// mass. Groups are never split; a group straddling a boundary stays in the
/// lower bin. With at least `n_bins` groups every bin receives one.
pub(crate) fn equipartition_ends(group_ends: &[usize], n_bins: usize) -> Vec<usize> {
    let Some(&n) = group_ends.last() else {
        return Vec::new();
    };
    let groups = group_ends.len();
    let mut ends = Vec::with_capacity(n_bins);
    let mut bin = 0usize;
    for (j, &end) in group_ends.iter().enumerate() {
        let remaining_groups = groups - 1 - j;
        let remaining_bins = n_bins - 1 - bin;
        if remaining_groups == 0 || remaining_bins == 0 {
            break;
        }
        if end * n_bins >= (bin + 1) * n || remaining_groups == remaining_bins {
            ends.push(end);
            bin += 1;
        }
    }
    ends.push(n);
    ends
}

/// Equal-frequency binning by rank.
///
/// Fails with [`MeasureError::Degenerate`] when fewer than two distinct
/// values occur; callers treat such a variable as constant.
pub fn quantile_bins(x: &RealSeries, n_bins: usize) -> Result<Binning> {
    if n_bins < 2 {
        return Err(MeasureError::InvalidParameter(format!(
            "n_bins must be at least 2, got {n_bins}"
        )));
    }
    if x.len() < n_bins {
        return Err(MeasureError::TooFewSamples {
            required: n_bins,
            actual: x.len(),
        });
    }
    let ranks = RankOrder::new(x.values());
    if ranks.distinct() < 2 {
        return Err(MeasureError::Degenerate("fewer than two distinct values"));
    }
    let ends = ranks.equipartition(n_bins);
    let labels = ranks.labels(&ends);
    Ok(Binning {
        series: CategorySeries::from_parts_unchecked(labels, ends.len() as u32),
        cut_points: ranks.cut_points(&ends),
    })
}
