use influence_core::measures::{
    discrete_mutual_information, mic, CategorySeries, MicSearchParams, RealSeries, SearchMode, Series,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn real(v: Vec<f64>) -> Series {
    Series::Real(RealSeries::new(v).unwrap())
}

fn score(x: &Series, y: &Series, mode: SearchMode) -> f64 {
    mic(x, y, &MicSearchParams::with_mode(mode)).unwrap().value
}

/// Small inputs with some ties, so tie handling is exercised too.
fn small_input(rng: &mut ChaCha8Rng) -> (Series, Series) {
    let n = rng.gen_range(4..=12);
    let levels = rng.gen_range(3..=12) as f64;
    let x: Vec<f64> = (0..n).map(|_| (rng.gen::<f64>() * levels).floor()).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|v| if rng.gen_bool(0.5) { v * v } else { (rng.gen::<f64>() * levels).floor() })
        .collect();
    (real(x), real(y))
}

#[test]
fn search_modes_are_ordered() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..100 {
        let (x, y) = small_input(&mut rng);
        let equi = score(&x, &y, SearchMode::Equipartition);
        let axis = score(&x, &y, SearchMode::AxisOptimized);
        let full = score(&x, &y, SearchMode::Exhaustive);
        assert!(equi <= axis && axis <= full, "case {case}: {equi} {axis} {full}");
    }
}

#[test]
fn exhaustive_refuses_large_inputs() {
    let x = real((0..13).map(f64::from).collect());
    assert!(mic(&x, &x, &MicSearchParams::with_mode(SearchMode::Exhaustive)).is_err());
}

fn reals(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64), n)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn symmetric_and_bounded(pairs in reals(4..120), mode_idx in 0usize..2) {
        let mode = [SearchMode::Equipartition, SearchMode::AxisOptimized][mode_idx];
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let (x, y) = (real(x), real(y));
        let a = score(&x, &y, mode);
        let b = score(&y, &x, mode);
        prop_assert_eq!(a, b);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn rank_invariant(pairs in reals(4..120), mode_idx in 0usize..2) {
        let mode = [SearchMode::Equipartition, SearchMode::AxisOptimized][mode_idx];
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let a = score(&real(x.clone()), &real(y.clone()), mode);
        let x2: Vec<f64> = x.iter().map(|v| (v / 50.0).exp()).collect();
        let y2: Vec<f64> = y.iter().map(|v| 3.0 * v - 7.0).collect();
        prop_assert_eq!(a, score(&real(x2), &real(y2), mode));
    }

    #[test]
    fn mi_nonnegative_and_symmetric(pairs in prop::collection::vec((0u32..5, 0u32..4), 1..200)) {
        let (x, y): (Vec<u32>, Vec<u32>) = pairs.into_iter().unzip();
        let x = CategorySeries::new(x, 5).unwrap();
        let y = CategorySeries::new(y, 4).unwrap();
        let a = discrete_mutual_information(&x, &y).unwrap().value;
        prop_assert!(a >= 0.0);
        prop_assert_eq!(a, discrete_mutual_information(&y, &x).unwrap().value);
    }
}
