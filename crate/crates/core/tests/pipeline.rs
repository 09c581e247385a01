use std::collections::HashMap;
use std::time::Duration;

use emgnet::bench::{benchmark, BenchConfig};
use emgnet::pipeline::folds::all_partitions;
use emgnet::pipeline::{extract_all, make_fold_plans, read_dataset, split_windows, write_dataset, Window, WindowConfig};
use emgnet::synth::{generate_dataset, Difficulty, SynthConfig};
use emgnet::tensor::Shape;
use emgnet::Device;

fn rms_signature(config: &SynthConfig) -> Vec<Vec<f64>> {
    let ds = generate_dataset(config).unwrap();
    let n = config.channels;
    let mut sums = vec![vec![0.0; n]; config.num_gestures];
    for r in &ds.recordings {
        for (c, sum) in sums[r.gesture].iter_mut().enumerate().take(n) {
            let ms = (0..r.len()).map(|t| r.row(t)[c].powi(2)).sum::<f64>() / r.len() as f64;
            *sum += ms.sqrt() / config.num_repetitions as f64;
        }
    }
    sums
}

#[test]
fn separable_gestures_have_distinct_rms_signatures() {
    for device in [Device::Myo, Device::Delsys] {
        let config = SynthConfig {
            hold_seconds: 2.0,
            ..SynthConfig::for_device(device, Difficulty::Separable)
        };
        let rms = rms_signature(&config);
        let floor = 5.0 * config.noise_std();
        for a in 0..rms.len() {
            for b in a + 1..rms.len() {
                let d = rms[a].iter().zip(&rms[b]).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                assert!(d > floor, "{device} gestures {a} and {b}: distance {d}");
            }
        }
    }
}

#[test]
fn dataset_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let config = SynthConfig {
        hold_seconds: 0.3,
        ..SynthConfig::for_device(Device::Delsys, Difficulty::Realistic)
    };
    let ds = generate_dataset(&config).unwrap();
    write_dataset(dir.path(), &ds).unwrap();
    assert!(dir.path().join("g0_r1.csv").exists());
    assert!(dir.path().join("g14_r6.csv").exists());
    assert_eq!(read_dataset(dir.path()).unwrap(), ds);
}

fn overlapping_pairs(a: &[&Window], b: &[&Window]) -> usize {
    let mut by_source: HashMap<(usize, usize), Vec<std::ops::Range<usize>>> = HashMap::new();
    for w in b {
        by_source.entry((w.gesture, w.repetition)).or_default().push(w.sample_range());
    }
    a.iter()
        .map(|w| {
            let r = w.sample_range();
            by_source
                .get(&(w.gesture, w.repetition))
                .map_or(0, |rs| rs.iter().filter(|s| s.start < r.end && r.start < s.end).count())
        })
        .sum()
}

#[test]
fn fold_splits_never_share_samples() {
    let config = SynthConfig {
        hold_seconds: 1.0,
        ..SynthConfig::for_device(Device::Myo, Difficulty::Separable)
    };
    let ds = generate_dataset(&config).unwrap();
    let windows = extract_all(&ds.recordings, &WindowConfig::default()).unwrap();
    for plan in make_fold_plans(12, 3).unwrap() {
        let (train, val, test) = split_windows(&windows, &plan);
        assert_eq!(train.len() + val.len() + test.len(), windows.len());
        assert_eq!(overlapping_pairs(&train, &val), 0);
        assert_eq!(overlapping_pairs(&train, &test), 0);
        assert_eq!(overlapping_pairs(&val, &test), 0);
        // Windows inside one split do overlap; the scan would catch leakage.
        assert!(overlapping_pairs(&train, &train) > train.len());
    }
}

#[test]
fn fold_plans_are_seeded_and_distinct() {
    let a = make_fold_plans(12, 7).unwrap();
    assert_eq!(a, make_fold_plans(12, 7).unwrap());
    assert_ne!(a, make_fold_plans(12, 8).unwrap());
    let all = all_partitions();
    for p in &a {
        assert!(all.iter().any(|q| (&q.train_reps, &q.val_reps, &q.test_reps) == (&p.train_reps, &p.val_reps, &p.test_reps)));
    }
    assert!(make_fold_plans(61, 0).is_err());
}

#[test]
fn stub_benchmark_follows_protocol() {
    let config = BenchConfig {
        trials: 4,
        predictions_per_trial: 50,
        warmup_predictions: 5,
        seed: 0,
    };
    let mut calls = 0usize;
    let report = benchmark(
        "stub",
        0,
        Shape::new(30, 8, 1),
        |_| {
            calls += 1;
            std::thread::sleep(Duration::from_millis(1));
            Ok(())
        },
        &config,
    )
    .unwrap();
    assert_eq!(calls, 5 + 4 * 50);
    assert_eq!(report.trial_mean_ms.len(), 4);
    assert!(report.trial_mean_ms.iter().all(|&m| m >= report.min_mean_latency_ms));
    assert!(report.min_mean_latency_ms >= 1.0 && report.min_mean_latency_ms <= 1.5, "{}", report.min_mean_latency_ms);
}
