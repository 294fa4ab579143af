use svpkit::sde::{sample_jump_times, JumpMeasure, Mark};
use svpkit::Vector;

const SEEDS: u64 = 100_000;

#[test]
fn poisson_mean_count() {
    let jumps = JumpMeasure::single(Vector::from_element(1, 1.0), 1.0).unwrap();
    let mut total = 0usize;
    for seed in 0..SEEDS {
        let times = sample_jump_times(&jumps, 0.0, 1.0, seed);
        assert!(times.windows(2).all(|w| w[0].0 <= w[1].0));
        assert!(times.iter().all(|(t, _)| *t > 0.0 && *t <= 1.0));
        total += times.len();
    }
    let mean = total as f64 / SEEDS as f64;
    assert!((0.98..=1.02).contains(&mean), "{mean}");
}

#[test]
fn mark_frequencies() {
    let jumps = JumpMeasure::new(vec![
        Mark {
            value: Vector::from_element(1, -1.0),
            weight: 0.25,
        },
        Mark {
            value: Vector::from_element(1, 1.0),
            weight: 0.75,
        },
    ])
    .unwrap();
    assert_eq!(jumps.total_mass(), 1.0);
    let mut counts = [0usize; 2];
    for seed in 0..SEEDS {
        for (_, k) in sample_jump_times(&jumps, 0.0, 1.0, seed) {
            counts[k] += 1;
        }
    }
    let n = (counts[0] + counts[1]) as f64;
    let p = counts[0] as f64 / n;
    let sigma = (0.25 * 0.75 / n).sqrt();
    assert!(
        (p - 0.25).abs() <= 3.0 * sigma,
        "{p} vs 0.25 ± {}",
        3.0 * sigma
    );
}

#[test]
fn empty_measure_never_jumps() {
    for seed in 0..100 {
        assert!(sample_jump_times(&JumpMeasure::empty(), 0.0, 10.0, seed).is_empty());
    }
}

#[test]
fn total_mass_is_exact_sum() {
    let weights = [0.1, 0.2, 0.7, 1e-3];
    let jumps = JumpMeasure::new(
        weights
            .iter()
            .map(|&w| Mark {
                value: Vector::from_element(2, w),
                weight: w,
            })
            .collect(),
    )
    .unwrap();
    assert_eq!(jumps.total_mass(), weights.iter().sum::<f64>());
    assert!(JumpMeasure::single(Vector::zeros(1), 0.0).is_err());
    assert!(JumpMeasure::single(Vector::zeros(1), f64::INFINITY).is_err());
}
