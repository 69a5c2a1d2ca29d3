#![allow(dead_code)]

use cardiomix_core::fusion::{LabeledSample, UnlabeledSample};
use cardiomix_core::rng::stream;
use cardiomix_core::synth::{corrupt_labels, synth_ecg, CorruptParams, SynthParams};
use cardiomix_core::{EcgRecord, LabelSequence, ProbabilityMap};

/// Synthetic record `i` of a corpus: heart rate in [50, 110) bpm, random
/// phase, light noise.
pub fn record(seed: u64, i: usize, seconds: f64) -> (EcgRecord, LabelSequence) {
    let mut rng = stream(seed, &[i as u64]);
    let params = SynthParams {
        heart_rate_bpm: 50.0 + 60.0 * rng.unit(),
        phase: rng.unit(),
        duration_s: seconds,
        noise_std: 0.03,
        ..Default::default()
    };
    synth_ecg(&format!("r{i}"), &params, &mut rng).unwrap()
}

pub fn labeled_batch(seed: u64, n: usize, seconds: f64) -> Vec<LabeledSample> {
    (0..n)
        .map(|i| {
            let (r, l) = record(seed, i, seconds);
            LabeledSample {
                signal: r.into_samples(),
                labels: l,
            }
        })
        .collect()
}

/// Unlabeled samples whose probabilities come from corrupting the labels.
pub fn unlabeled_batch(seed: u64, n: usize, seconds: f64, corrupt: CorruptParams) -> Vec<UnlabeledSample> {
    (0..n)
        .map(|i| {
            let (r, l) = record(seed, 1000 + i, seconds);
            let mut rng = stream(seed ^ 0x5eed, &[i as u64]);
            UnlabeledSample {
                signal: r.into_samples(),
                probs: corrupt_labels(&l, &corrupt, &mut rng).unwrap(),
            }
        })
        .collect()
}

pub fn one_hot_batch(seed: u64, n: usize, seconds: f64) -> Vec<UnlabeledSample> {
    labeled_batch(seed ^ 0xabc, n, seconds)
        .into_iter()
        .map(|s| UnlabeledSample {
            probs: ProbabilityMap::one_hot(&s.labels),
            signal: s.signal,
        })
        .collect()
}

pub const CLEAN: CorruptParams = CorruptParams {
    boundary_jitter: 0,
    flip_rate: 0.0,
    sharpness: 1.0,
};
