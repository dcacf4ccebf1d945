use influence_core::camera::{builtin_scenario, run_scenario, system_performance, Policy};
use influence_core::model::SampleLog;
use sha2::{Digest, Sha256};

/// sha256 of the CSV form of overlap-pair, 5000 steps, seed 42.
const OVERLAP_PAIR_GOLDEN: &str = "83a29554354cd6b8ffabca69da6196b7ce97793de939a61aa619dd384cdade93";

fn mean_system_performance(log: &SampleLog) -> f64 {
    let total: f64 = log
        .records
        .iter()
        .map(|r| system_performance(&r.performance.values().copied().collect::<Vec<_>>()))
        .sum();
    total / log.len() as f64
}

#[test]
fn golden_log() {
    let spec = builtin_scenario("overlap-pair").unwrap();
    let log = run_scenario(&spec, 5000, &Policy::UniformRandomPtz, 42).unwrap();
    assert_eq!(log.len(), 5000);
    assert!(log.validate().is_empty());
    let digest = format!("{:x}", Sha256::digest(log.to_csv().as_bytes()));
    assert_eq!(digest, OVERLAP_PAIR_GOLDEN);
}

#[test]
fn logs_validate_across_seeds() {
    let spec = builtin_scenario("overlap-pair").unwrap();
    for seed in 0..10 {
        let log = run_scenario(&spec, 300, &Policy::UniformRandomPtz, seed).unwrap();
        assert!(log.validate().is_empty(), "seed {seed}");
    }
}

#[test]
fn doubling_arrivals_doubles_performance() {
    let base = builtin_scenario("overlap-pair").unwrap();
    let mut double = base.clone();
    double.arrival_rate *= 2.0;
    let (mut a, mut b) = (0.0, 0.0);
    for seed in 0..10 {
        a += mean_system_performance(&run_scenario(&base, 5000, &Policy::UniformRandomPtz, seed).unwrap());
        b += mean_system_performance(&run_scenario(&double, 5000, &Policy::UniformRandomPtz, seed).unwrap());
    }
    let ratio = b / a;
    assert!((ratio - 2.0).abs() <= 0.3, "ratio {ratio}");
}
