use super::binning::RankOrder;
use super::{DependencyScore, MeasureError, MeasureKind, RealSeries, Result};

fn check(x: &RealSeries, y: &RealSeries) -> Result<()> {
    if x.len() != y.len() {
        return Err(MeasureError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(MeasureError::TooFewSamples {
            required: 2,
            actual: x.len(),
        });
    }
    Ok(())
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxx += da * da;
        syy += db * db;
        sxy += da * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MeasureError::Degenerate("constant series has no correlation"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson product-moment correlation.
pub fn linear_correlation(x: &RealSeries, y: &RealSeries) -> Result<DependencyScore> {
    check(x, y)?;
    let r = pearson(x.values(), y.values())?;
    Ok(DependencyScore::new(MeasureKind::Linear, r, x.len()))
}

/// Ranks starting at 1; tied samples share the mean of their positions.
pub(crate) fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let ranks = RankOrder::new(values);
    let mut out = vec![0.0; values.len()];
    let mut start = 0;
    for &end in &ranks.group_ends {
        let mid = (start + 1 + end) as f64 / 2.0;
        for &idx in &ranks.order[start..end] {
            out[idx] = mid;
        }
        start = end;
    }
    out
}

/// Spearman rank correlation: Pearson on mid-ranks.
pub fn rank_correlation(x: &RealSeries, y: &RealSeries) -> Result<DependencyScore> {
    check(x, y)?;
    let r = pearson(&mid_ranks(x.values()), &mid_ranks(y.values()))?;
    Ok(DependencyScore::new(MeasureKind::Rank, r, x.len()))
}
