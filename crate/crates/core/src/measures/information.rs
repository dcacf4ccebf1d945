use serde::{Deserialize, Serialize};

use super::{clamp_non_negative, CategorySeries, DependencyScore, MeasureError, MeasureKind, Result};

/// Empirical joint and marginal distributions of two category series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    /// `joint[x][y]`
    pub joint: Vec<Vec<f64>>,
    pub marginal_x: Vec<f64>,
    pub marginal_y: Vec<f64>,
    pub sample_count: usize,
}

impl JointDistribution {
    pub fn from_series(x: &CategorySeries, y: &CategorySeries) -> Result<Self> {
        check_pair(x, y)?;
        let rows = x.categories() as usize;
        let cols = y.categories() as usize;
        let table = contingency(x.values(), rows, y.values(), cols);
        let n = x.len() as f64;
        let joint: Vec<Vec<f64>> = table
            .chunks(cols.max(1))
            .map(|row| row.iter().map(|&c| f64::from(c) / n).collect())
            .collect();
        let mut marginal_x = vec![0.0; rows];
        let mut marginal_y = vec![0.0; cols];
        for &v in x.values() {
            marginal_x[v as usize] += 1.0;
        }
        for &v in y.values() {
            marginal_y[v as usize] += 1.0;
        }
        marginal_x.iter_mut().for_each(|p| *p /= n);
        marginal_y.iter_mut().for_each(|p| *p /= n);
        Ok(Self {
            joint,
            marginal_x,
            marginal_y,
            sample_count: x.len(),
        })
    }
}

fn check_pair(x: &CategorySeries, y: &CategorySeries) -> Result<()> {
    if x.len() != y.len() {
        return Err(MeasureError::LengthMismatch(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(MeasureError::Empty);
    }
    Ok(())
}

pub(crate) fn contingency(x: &[u32], rows: usize, y: &[u32], cols: usize) -> Vec<u32> {
    let mut table = vec![0u32; rows * cols];
    for (&a, &b) in x.iter().zip(y) {
        table[a as usize * cols + b as usize] += 1;
    }
    table
}

/// Plug-in mutual information in bits.
///
/// Symmetric in its arguments bit for bit: the cell terms are summed in an
/// order that does not depend on which variable indexes the rows.
pub fn discrete_mutual_information(
    x: &CategorySeries,
    y: &CategorySeries,
) -> Result<DependencyScore> {
    check_pair(x, y)?;
    let rows = x.categories() as usize;
    let cols = y.categories() as usize;
    let table = contingency(x.values(), rows, y.values(), cols);
    let value = mutual_information_from_table(&table, rows, cols)?;
    Ok(DependencyScore::new(
        MeasureKind::MutualInformation,
        value,
        x.len(),
    ))
}

/// Mutual information in bits of a row-major `rows x cols` count table.
pub(crate) fn mutual_information_from_table(table: &[u32], rows: usize, cols: usize) -> Result<f64> {
    debug_assert_eq!(table.len(), rows * cols);
    let mut row_sums = vec![0u64; rows];
    let mut col_sums = vec![0u64; cols];
    let mut total = 0u64;
    for r in 0..rows {
        for c in 0..cols {
            let v = u64::from(table[r * cols + c]);
            row_sums[r] += v;
            col_sums[c] += v;
            total += v;
        }
    }
    if total == 0 {
        return Err(MeasureError::Empty);
    }
    // (cell count, product of its marginals)
    let mut cells: Vec<(u64, u64)> = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let v = u64::from(table[r * cols + c]);
            if v > 0 {
                cells.push((v, row_sums[r] * col_sums[c]));
            }
        }
    }
    cells.sort_unstable();
    let n = total as f64;
    let sum: f64 = cells
        .iter()
        .map(|&(v, prod)| {
            let v = v as f64;
            (v / n) * (v * n / prod as f64).log2()
        })
        .sum();
    clamp_non_negative(sum, "mutual information")
}

/// Plug-in Shannon entropy in bits.
pub fn entropy(x: &CategorySeries) -> Result<DependencyScore> {
    if x.is_empty() {
        return Err(MeasureError::Empty);
    }
    let mut counts = vec![0u64; x.categories() as usize];
    for &v in x.values() {
        counts[v as usize] += 1;
    }
    counts.retain(|&c| c > 0);
    counts.sort_unstable();
    let n = x.len() as f64;
    let h: f64 = counts
        .iter()
        .map(|&c| {
            let c = c as f64;
            (c / n) * (n / c).log2()
        })
        .sum();
    Ok(DependencyScore::new(MeasureKind::Entropy, h, x.len()))
}
