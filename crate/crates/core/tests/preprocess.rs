use std::f64::consts::TAU;

use cardiomix_core::preprocess::{preprocess_pipeline, preprocess_probs, PreprocessConfig};
use cardiomix_core::rng::SplitMix64;
use cardiomix_core::{EcgRecord, LabelSequence, ProbabilityMap, NUM_CLASSES};
use proptest::prelude::*;

fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Baseline wander, a few tones and noise.
fn signal(seed: u64, rate: u32, len: usize) -> Vec<f64> {
    let mut rng = SplitMix64::new(seed);
    let tones: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| (0.5 + 30.0 * rng.unit(), rng.unit(), TAU * rng.unit()))
        .collect();
    (0..len)
        .map(|i| {
            let t = i as f64 / rate as f64;
            let wave: f64 = tones.iter().map(|(f, a, p)| a * (TAU * f * t + p).sin()).sum();
            0.7 + 0.4 * (0.6 * t).sin() + wave + 0.1 * (rng.unit() - 0.5)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn output_shape_and_normalisation(
        rate in prop::sample::select(vec![100u32, 128, 250, 256, 360, 400, 500, 1000]),
        seconds in 1.0f64..20.0,
        seed in any::<u64>(),
    ) {
        let len = (seconds * rate as f64).round() as usize;
        let rec = EcgRecord::new("r", "II", rate, signal(seed, rate, len)).unwrap();
        let mut rng = SplitMix64::new(seed ^ 1);
        let labels = LabelSequence::new((0..len).map(|_| rng.below(NUM_CLASSES as u64) as u8).collect()).unwrap();
        let cfg = PreprocessConfig::default();
        let (out, out_labels) = preprocess_pipeline(&rec, Some(&labels), &cfg).unwrap();
        prop_assert_eq!(out.len(), 2500);
        prop_assert_eq!(out.sample_rate(), 250);
        prop_assert_eq!(out_labels.len(), 2500);
        let (m, s) = mean_std(out.samples());
        prop_assert!(m.abs() < 1e-9, "mean {}", m);
        prop_assert!((s - 1.0).abs() < 1e-9, "std {}", s);

        // output k reads source round(k * rate / 250) of the cropped or padded
        // record, clamped to its end; past the input it is padding
        let fixed = 10 * rate as usize;
        for (k, &c) in out_labels.as_slice().iter().enumerate() {
            let src = ((k as f64 * rate as f64 / 250.0).round() as usize).min(fixed - 1);
            let want = if src < len { labels.as_slice()[src] } else { 0 };
            prop_assert_eq!(c, want, "k {}", k);
        }

        let probs = ProbabilityMap::one_hot(&labels);
        let p = preprocess_probs(&probs, rate, &cfg).unwrap();
        prop_assert_eq!(p.argmax_labels(), out_labels);
    }

    #[test]
    fn flat_input_is_zero_or_unit_variance(
        rate in prop::sample::select(vec![125u32, 250, 500]),
        level in -5.0f64..5.0,
        seconds in 2.0f64..12.0,
    ) {
        let len = (seconds * rate as f64).round() as usize;
        let rec = EcgRecord::new("flat", "II", rate, vec![level; len]).unwrap();
        let (out, labels) = preprocess_pipeline(&rec, None, &PreprocessConfig::default()).unwrap();
        prop_assert_eq!(out.len(), 2500);
        let (m, s) = mean_std(out.samples());
        let zeros = out.samples().iter().all(|&v| v == 0.0);
        prop_assert!(zeros || (m.abs() < 1e-9 && (s - 1.0).abs() < 1e-9), "mean {} std {}", m, s);
        let silent = EcgRecord::new("zero", "II", rate, vec![0.0; len]).unwrap();
        let (out, _) = preprocess_pipeline(&silent, None, &PreprocessConfig::default()).unwrap();
        prop_assert!(out.samples().iter().all(|&v| v == 0.0));
        prop_assert_eq!(labels, LabelSequence::background(2500));
    }

    #[test]
    fn pipeline_is_deterministic(seed in any::<u64>()) {
        let rec = EcgRecord::new("r", "II", 360, signal(seed, 360, 3600)).unwrap();
        let cfg = PreprocessConfig::default();
        let a = preprocess_pipeline(&rec, None, &cfg).unwrap();
        let b = preprocess_pipeline(&rec, None, &cfg).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn custom_config_lengths() {
    let rec = EcgRecord::new("r", "II", 500, signal(9, 500, 3000)).unwrap();
    let cfg = PreprocessConfig {
        target_rate: 100,
        lo_hz: 0.5,
        hi_hz: 30.0,
        seconds: 4.0,
    };
    let (out, labels) = preprocess_pipeline(&rec, None, &cfg).unwrap();
    assert_eq!(out.len(), 400);
    assert_eq!(labels.len(), 400);
}
