use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Measure, MeasureError, Result, Series};

pub const MIN_REPETITIONS: usize = 20;

/// Permutation p-value `(1 + #{permuted >= observed}) / (repetitions + 1)`,
/// shuffling `y` with a generator seeded from `seed`. Scores are compared by
/// [`DependencyScore::strength`](super::DependencyScore::strength).
pub fn permutation_pvalue(
    measure: &Measure,
    x: &Series,
    y: &Series,
    repetitions: usize,
    seed: u64,
) -> Result<f64> {
    if repetitions < MIN_REPETITIONS {
        return Err(MeasureError::InvalidParameter(format!(
            "need at least {MIN_REPETITIONS} repetitions, got {repetitions}"
        )));
    }
    let observed = measure.score(x, y)?.strength();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..y.len()).collect();
    let mut exceed = 0usize;
    for _ in 0..repetitions {
        order.shuffle(&mut rng);
        let permuted = y.permuted(&order);
        if measure.score(x, &permuted)?.strength() >= observed {
            exceed += 1;
        }
    }
    Ok((1 + exceed) as f64 / (repetitions + 1) as f64)
}
