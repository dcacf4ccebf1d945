//! Maximal information coefficient.
//!
//! Grids are built on ranks only, so every search mode except `Exhaustive`
//! is invariant under strictly increasing re-encodings of either variable.
//! `AxisOptimized` keeps every equipartition grid and adds, for each
//! equipartition of one axis, the cut points on the other axis found by
//! dynamic programming over clumps of consecutive samples. `Exhaustive`
//! tries every rank cut on both axes and exists as a small-N oracle.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::binning::{equipartition_ends, RankOrder};
use super::{
    mutual_information_from_table, BinLayout, DependencyScore, MeasureError, MeasureKind, Result,
    Series,
};

pub const MIN_BINS_PER_AXIS: usize = 2;
const MIN_SAMPLES: usize = 4;
const EXHAUSTIVE_MAX_SAMPLES: usize = 12;
/// Upper bound on DP candidates per allowed column, as a multiple of the
/// column count.
const CLUMP_FACTOR: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    Equipartition,
    AxisOptimized,
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicSearchParams {
    pub b_exponent: f64,
    pub search_mode: SearchMode,
}

impl Default for MicSearchParams {
    fn default() -> Self {
        Self {
            b_exponent: 0.6,
            search_mode: SearchMode::Equipartition,
        }
    }
}

impl MicSearchParams {
    pub fn with_mode(search_mode: SearchMode) -> Self {
        Self {
            search_mode,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b_exponent > 0.0 && self.b_exponent < 1.0) {
            return Err(MeasureError::InvalidParameter(format!(
                "b_exponent must lie in (0, 1), got {}",
                self.b_exponent
            )));
        }
        Ok(())
    }

    /// Grid-size limit `B`: admissible grids satisfy `n_x * n_y < B`.
    /// Raised to just above 4 so that the 2x2 grid is always admissible.
    pub fn bin_limit(&self, n: usize) -> f64 {
        (n as f64).powf(self.b_exponent).max(4.0 * (1.0 + 1e-9))
    }
}

/// One candidate partition of an axis.
struct Layout {
    ends: Vec<usize>,
    labels: Vec<u32>,
}

impl Layout {
    fn bins(&self) -> usize {
        self.ends.len()
    }
}

struct Axis {
    ranks: RankOrder,
}

impl Axis {
    fn new(values: &[f64]) -> Self {
        Self {
            ranks: RankOrder::new(values),
        }
    }

    fn layout(&self, ends: Vec<usize>) -> Layout {
        let labels = self.ranks.labels(&ends);
        Layout { ends, labels }
    }

    /// Distinct equal-frequency layouts with 2 up to `max_bins` bins.
    fn equipartitions(&self, max_bins: usize) -> Vec<Layout> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for k in MIN_BINS_PER_AXIS..=max_bins {
            let ends = self.ranks.equipartition(k);
            let bins = ends.len();
            if bins >= MIN_BINS_PER_AXIS && seen.insert(ends.clone()) {
                out.push(self.layout(ends));
            }
            if bins == self.ranks.distinct() {
                break;
            }
        }
        out
    }
}

#[derive(Default)]
struct Best {
    value: f64,
    grid: Option<(Vec<usize>, Vec<usize>)>,
}

impl Best {
    fn offer(&mut self, value: f64, x_ends: &[usize], y_ends: &[usize]) {
        if self.grid.is_none() || value > self.value {
            self.value = value;
            self.grid = Some((x_ends.to_vec(), y_ends.to_vec()));
        }
    }
}

struct Grid {
    limit: f64,
    table: Vec<u32>,
}

impl Grid {
    fn admissible(&self, nx: usize, ny: usize) -> bool {
        nx >= MIN_BINS_PER_AXIS && ny >= MIN_BINS_PER_AXIS && ((nx * ny) as f64) < self.limit
    }

    /// Normalised mutual information of one grid.
    fn score(&mut self, x: &[u32], nx: usize, y: &[u32], ny: usize) -> Result<f64> {
        self.table.clear();
        self.table.resize(nx * ny, 0);
        for (&a, &b) in x.iter().zip(y) {
            self.table[a as usize * ny + b as usize] += 1;
        }
        let mi = mutual_information_from_table(&self.table, nx, ny)?;
        Ok((mi / (nx.min(ny) as f64).log2()).min(1.0))
    }
}

/// Largest per-axis bin count that can appear in an admissible grid.
fn max_axis_bins(limit: f64) -> usize {
    let mut k = MIN_BINS_PER_AXIS;
    while (((k + 1) * MIN_BINS_PER_AXIS) as f64) < limit {
        k += 1;
    }
    k
}

/// Maximal information coefficient of two series of equal length.
///
/// Returns 0 (flagged degenerate) when either input is constant.
pub fn mic(x: &Series, y: &Series, params: &MicSearchParams) -> Result<DependencyScore> {
    params.validate()?;
    if x.len() != y.len() {
        return Err(MeasureError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < MIN_SAMPLES {
        return Err(MeasureError::TooFewSamples {
            required: MIN_SAMPLES,
            actual: n,
        });
    }
    if params.search_mode == SearchMode::Exhaustive && n > EXHAUSTIVE_MAX_SAMPLES {
        return Err(MeasureError::InvalidParameter(format!(
            "exhaustive search is limited to {EXHAUSTIVE_MAX_SAMPLES} samples, got {n}"
        )));
    }
    let ax = Axis::new(&x.to_reals());
    let ay = Axis::new(&y.to_reals());
    if ax.ranks.distinct() < 2 || ay.ranks.distinct() < 2 {
        return Ok(DependencyScore::degenerate(MeasureKind::Mic, n));
    }

    let limit = params.bin_limit(n);
    let mut grid = Grid {
        limit,
        table: Vec::new(),
    };
    let mut best = Best::default();
    match params.search_mode {
        SearchMode::Equipartition => {
            let (lx, ly) = equipartition_layouts(&ax, &ay, limit);
            search_equipartitions(&lx, &ly, &mut grid, &mut best)?;
        }
        SearchMode::AxisOptimized => {
            let (lx, ly) = equipartition_layouts(&ax, &ay, limit);
            search_equipartitions(&lx, &ly, &mut grid, &mut best)?;
            optimize_axis(&ax, &ly, &mut grid, &mut best, false)?;
            optimize_axis(&ay, &lx, &mut grid, &mut best, true)?;
        }
        SearchMode::Exhaustive => search_exhaustive(&ax, &ay, &mut grid, &mut best)?,
    }

    let mut score = DependencyScore::new(MeasureKind::Mic, best.value, n);
    if let Some((x_ends, y_ends)) = best.grid {
        score.bin_layout = Some(BinLayout {
            x_bins: x_ends.len(),
            y_bins: y_ends.len(),
            x_cuts: ax.ranks.cut_points(&x_ends),
            y_cuts: ay.ranks.cut_points(&y_ends),
        });
    }
    Ok(score)
}

fn equipartition_layouts(ax: &Axis, ay: &Axis, limit: f64) -> (Vec<Layout>, Vec<Layout>) {
    let max_bins = max_axis_bins(limit);
    (ax.equipartitions(max_bins), ay.equipartitions(max_bins))
}

fn search_equipartitions(
    lx: &[Layout],
    ly: &[Layout],
    grid: &mut Grid,
    best: &mut Best,
) -> Result<()> {
    for a in lx {
        for b in ly {
            if grid.admissible(a.bins(), b.bins()) {
                let v = grid.score(&a.labels, a.bins(), &b.labels, b.bins())?;
                best.offer(v, &a.ends, &b.ends);
            }
        }
    }
    Ok(())
}

/// For every fixed layout of the other axis, finds the best partition of
/// `free` into exactly `k` bins for each admissible `k`, then scores the
/// resulting grid like any other. `swapped` means `free` is the y axis.
fn optimize_axis(
    free: &Axis,
    fixed_layouts: &[Layout],
    grid: &mut Grid,
    best: &mut Best,
    swapped: bool,
) -> Result<()> {
    for fixed in fixed_layouts {
        let q = fixed.bins();
        let Some(kmax) = (MIN_BINS_PER_AXIS..)
            .take_while(|&k| grid.admissible(k, q))
            .last()
        else {
            continue;
        };
        let candidates = candidate_ends(free, &fixed.labels, kmax * CLUMP_FACTOR);
        let partitions = best_partitions(&candidates, &free.ranks.order, &fixed.labels, q, kmax);
        for ends in partitions {
            let layout = free.layout(ends);
            let (x, y) = if swapped { (fixed, &layout) } else { (&layout, fixed) };
            let v = grid.score(&x.labels, x.bins(), &y.labels, y.bins())?;
            best.offer(v, &x.ends, &y.ends);
        }
    }
    Ok(())
}

/// Candidate cut positions on the free axis: boundaries between runs of
/// samples sharing one label on the fixed axis, never splitting ties, and
/// merged by mass when there are more than `max_candidates`.
fn candidate_ends(free: &Axis, fixed_labels: &[u32], max_candidates: usize) -> Vec<usize> {
    let ranks = &free.ranks;
    let mut clump_ends: Vec<usize> = Vec::new();
    let mut clump_label: Option<u32> = None;
    let mut start = 0;
    for &end in &ranks.group_ends {
        let first = fixed_labels[ranks.order[start]];
        let pure = ranks.order[start..end]
            .iter()
            .all(|&i| fixed_labels[i] == first);
        let label = pure.then_some(first);
        match (clump_label, label) {
            (Some(a), Some(b)) if a == b && !clump_ends.is_empty() => {
                *clump_ends.last_mut().expect("non-empty") = end;
            }
            _ => clump_ends.push(end),
        }
        clump_label = label;
        start = end;
    }
    if clump_ends.len() > max_candidates {
        equipartition_ends(&clump_ends, max_candidates)
    } else {
        clump_ends
    }
}

/// Dynamic program over candidate ends: for each `k` in `2..=kmax`, the
/// partition into exactly `k` bins minimising the conditional entropy of the
/// fixed-axis labels, which maximises mutual information for that `k`.
fn best_partitions(
    candidates: &[usize],
    order: &[usize],
    fixed_labels: &[u32],
    q: usize,
    kmax: usize,
) -> Vec<Vec<usize>> {
    let m = candidates.len();
    // prefix[i][l]: count of label l among the first i candidates
    let mut prefix = vec![vec![0u32; q]; m + 1];
    let mut start = 0;
    for (i, &end) in candidates.iter().enumerate() {
        let mut row = prefix[i].clone();
        for &idx in &order[start..end] {
            row[fixed_labels[idx] as usize] += 1;
        }
        prefix[i + 1] = row;
        start = end;
    }
    let cost = |s: usize, e: usize| -> f64 {
        let mut total = 0u32;
        for l in 0..q {
            total += prefix[e][l] - prefix[s][l];
        }
        let total = f64::from(total);
        (0..q)
            .map(|l| f64::from(prefix[e][l] - prefix[s][l]))
            .filter(|&c| c > 0.0)
            .map(|c| c * (total / c).log2())
            .sum()
    };

    let kmax = kmax.min(m);
    let mut out = Vec::new();
    if kmax < MIN_BINS_PER_AXIS {
        return out;
    }
    // table[k][i]: best cost of the first i candidates in k + 1 bins
    let mut table = vec![vec![f64::INFINITY; m + 1]; kmax];
    let mut back = vec![vec![0usize; m + 1]; kmax];
    for i in 1..=m {
        table[0][i] = cost(0, i);
    }
    for k in 1..kmax {
        for i in (k + 1)..=m {
            let mut best = f64::INFINITY;
            let mut arg = k;
            for s in k..i {
                let c = table[k - 1][s] + cost(s, i);
                if c < best {
                    best = c;
                    arg = s;
                }
            }
            table[k][i] = best;
            back[k][i] = arg;
        }
        let mut cuts = Vec::with_capacity(k + 1);
        let mut i = m;
        for level in (1..=k).rev() {
            cuts.push(candidates[i - 1]);
            i = back[level][i];
        }
        cuts.push(candidates[i - 1]);
        cuts.reverse();
        out.push(cuts);
    }
    out
}

fn search_exhaustive(ax: &Axis, ay: &Axis, grid: &mut Grid, best: &mut Best) -> Result<()> {
    let n = ax.ranks.len();
    let cx = &ax.ranks.group_ends[..ax.ranks.distinct() - 1];
    let cy = &ay.ranks.group_ends[..ay.ranks.distinct() - 1];
    let ends_for = |cands: &[usize], mask: u32| -> Vec<usize> {
        let mut e: Vec<usize> = cands
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &c)| c)
            .collect();
        e.push(n);
        e
    };
    for mx in 1u32..(1 << cx.len()) {
        let nx = mx.count_ones() as usize + 1;
        if !grid.admissible(nx, MIN_BINS_PER_AXIS) {
            continue;
        }
        let xe = ends_for(cx, mx);
        let xl = ax.ranks.labels(&xe);
        for my in 1u32..(1 << cy.len()) {
            let ny = my.count_ones() as usize + 1;
            if !grid.admissible(nx, ny) {
                continue;
            }
            let ye = ends_for(cy, my);
            let yl = ay.ranks.labels(&ye);
            let v = grid.score(&xl, nx, &yl, ny)?;
            best.offer(v, &xe, &ye);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{CategorySeries, RealSeries};

    fn real(v: Vec<f64>) -> Series {
        RealSeries::new(v).unwrap().into()
    }

    #[test]
    fn identity_scores_one_in_every_mode() {
        let x: Vec<f64> = (0..200).map(|i| f64::from(i) * 0.37 - 3.0).collect();
        for mode in [SearchMode::Equipartition, SearchMode::AxisOptimized] {
            let s = mic(&real(x.clone()), &real(x.clone()), &MicSearchParams::with_mode(mode)).unwrap();
            assert!((s.value - 1.0).abs() < 1e-9, "{mode:?}: {}", s.value);
        }
        let small: Vec<f64> = (0..12).map(f64::from).collect();
        let s = mic(
            &real(small.clone()),
            &real(small),
            &MicSearchParams::with_mode(SearchMode::Exhaustive),
        )
        .unwrap();
        assert!((s.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_input_is_zero() {
        let x = real(vec![3.0; 50]);
        let y = real((0..50).map(f64::from).collect());
        let s = mic(&x, &y, &MicSearchParams::default()).unwrap();
        assert_eq!(s.value, 0.0);
        assert!(s.degenerate);
    }

    #[test]
    fn input_errors() {
        let p = MicSearchParams::default();
        assert!(matches!(
            mic(&real(vec![1.0, 2.0, 3.0]), &real(vec![1.0, 2.0, 3.0]), &p),
            Err(MeasureError::TooFewSamples { .. })
        ));
        assert!(matches!(
            mic(&real(vec![1.0; 5]), &real(vec![1.0; 6]), &p),
            Err(MeasureError::LengthMismatch(5, 6))
        ));
        let big: Vec<f64> = (0..13).map(f64::from).collect();
        assert!(mic(
            &real(big.clone()),
            &real(big),
            &MicSearchParams::with_mode(SearchMode::Exhaustive)
        )
        .is_err());
        let bad = MicSearchParams {
            b_exponent: 1.0,
            ..MicSearchParams::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn bin_limit_admits_two_by_two() {
        let p = MicSearchParams::default();
        assert!(p.bin_limit(4) > 4.0);
        assert!((p.bin_limit(1000) - 1000f64.powf(0.6)).abs() < 1e-9);
        assert_eq!(max_axis_bins(p.bin_limit(4)), 2);
        // 200^0.6 ~ 24.02: 2 x 12 is admissible, 2 x 13 is not
        assert_eq!(max_axis_bins(p.bin_limit(200)), 12);
    }

    #[test]
    fn records_layout() {
        let x: Vec<f64> = (0..40).map(f64::from).collect();
        let s = mic(&real(x.clone()), &real(x), &MicSearchParams::default()).unwrap();
        let layout = s.bin_layout.unwrap();
        assert!(layout.x_bins * layout.y_bins < 40f64.powf(0.6).ceil() as usize + 1);
        assert_eq!(layout.x_cuts.len(), layout.x_bins - 1);
    }

    #[test]
    fn categories_use_their_natural_partition() {
        let x: Series = CategorySeries::from_values(vec![0, 1, 0, 1, 0, 1, 0, 1]).unwrap().into();
        let y = real(vec![0.1, 5.0, 0.2, 6.0, 0.3, 7.0, 0.4, 8.0]);
        let s = mic(&x, &y, &MicSearchParams::default()).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
    }
}
