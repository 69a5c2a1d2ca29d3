//! Desk-scale data: synthetic P-QRS-T traces and a teacher simulator.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::labels::{LabelSequence, Run, Wave, NUM_CLASSES};
use crate::probs::ProbabilityMap;
use crate::record::EcgRecord;
use crate::rng::SplitMix64;

/// Beat template and recording parameters. Wave positions and widths are
/// fractions of the beat period, laid out in order: lead-in background,
/// P, PR segment, QRS, ST segment, T, trailing background.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub heart_rate_bpm: f64,
    pub duration_s: f64,
    pub sample_rate: u32,
    /// Beat phase at the first sample, in `[0, 1)`.
    pub phase: f64,
    pub lead_in: f64,
    pub p_width: f64,
    pub pr_segment: f64,
    pub qrs_width: f64,
    pub st_segment: f64,
    pub t_width: f64,
    pub p_amp: f64,
    pub qrs_amp: f64,
    pub t_amp: f64,
    pub noise_std: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            heart_rate_bpm: 60.0,
            duration_s: 10.0,
            sample_rate: 250,
            phase: 0.0,
            lead_in: 0.10,
            p_width: 0.10,
            pr_segment: 0.06,
            qrs_width: 0.10,
            st_segment: 0.10,
            t_width: 0.18,
            p_amp: 0.15,
            qrs_amp: 1.0,
            t_amp: 0.3,
            noise_std: 0.0,
        }
    }
}

impl SynthParams {
    fn layout(&self) -> [(f64, f64, Wave); 3] {
        let p0 = self.lead_in;
        let q0 = p0 + self.p_width + self.pr_segment;
        let t0 = q0 + self.qrs_width + self.st_segment;
        [
            (p0, self.p_width, Wave::P),
            (q0, self.qrs_width, Wave::Qrs),
            (t0, self.t_width, Wave::T),
        ]
    }

    fn validate(&self) -> Result<()> {
        if !(self.heart_rate_bpm > 0.0) || !(self.duration_s > 0.0) || self.sample_rate == 0 {
            return Err(Error::arg("heart rate, duration and sample rate must be positive"));
        }
        let parts = [
            self.lead_in,
            self.p_width,
            self.pr_segment,
            self.qrs_width,
            self.st_segment,
            self.t_width,
        ];
        if parts.iter().any(|f| !(*f >= 0.0)) || [self.p_width, self.qrs_width, self.t_width].iter().any(|w| *w <= 0.0) {
            return Err(Error::arg("wave fractions must be non-negative and wave widths positive"));
        }
        let total: f64 = parts.iter().sum();
        if total > 1.0 {
            return Err(Error::arg(format!(
                "wave fractions sum to {total}, exceeding the beat period"
            )));
        }
        if !(0.0..1.0).contains(&self.phase) {
            return Err(Error::arg("phase must be in [0, 1)"));
        }
        if !(self.noise_std >= 0.0) {
            return Err(Error::arg("noise std must be non-negative"));
        }
        Ok(())
    }
}

/// Periodic P-QRS-T trace with labels marking the exact template supports.
///
/// P and T are raised-cosine bumps; QRS is a sharp biphasic deflection
/// (tall R, shallower S). White Gaussian noise is added when `noise_std > 0`.
pub fn synth_ecg(record_id: &str, params: &SynthParams, rng: &mut SplitMix64) -> Result<(EcgRecord, LabelSequence)> {
    params.validate()?;
    let fs = params.sample_rate as f64;
    let len = (params.duration_s * fs).round() as usize;
    if len == 0 {
        return Err(Error::arg("duration yields no samples"));
    }
    let period = 60.0 / params.heart_rate_bpm * fs;
    let layout = params.layout();

    let mut samples = Vec::with_capacity(len);
    let mut classes = Vec::with_capacity(len);
    for t in 0..len {
        let u = (t as f64 / period + params.phase).fract();
        let mut value = 0.0;
        let mut class = Wave::Background;
        for &(start, width, wave) in &layout {
            if u >= start && u < start + width {
                let v = (u - start) / width;
                class = wave;
                value = match wave {
                    Wave::P => params.p_amp * raised_cosine(v),
                    Wave::T => params.t_amp * raised_cosine(v),
                    _ => {
                        let s = (2.0 * std::f64::consts::PI * v).sin().powi(3);
                        params.qrs_amp * if s >= 0.0 { s } else { 0.35 * s }
                    }
                };
            }
        }
        if params.noise_std > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            value += params.noise_std * z;
        }
        samples.push(value);
        classes.push(class.id());
    }
    let record = EcgRecord::new(record_id, "synthetic", params.sample_rate, samples)?;
    Ok((record, LabelSequence::from_trusted(classes)))
}

fn raised_cosine(v: f64) -> f64 {
    0.5 * (1.0 - (2.0 * std::f64::consts::PI * v).cos())
}

/// Teacher-output simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptParams {
    /// Each run boundary moves by a uniform integer in `[-jitter, jitter]`.
    pub boundary_jitter: usize,
    /// Per-timestep probability of switching to a uniformly chosen other class.
    pub flip_rate: f64,
    /// Probability placed on the (possibly corrupted) class; the remainder
    /// is spread evenly over the other classes.
    pub sharpness: f64,
}

/// Simulated probability map: boundary jitter, then random flips, then a
/// softened one-hot encoding.
pub fn corrupt_labels(labels: &LabelSequence, params: &CorruptParams, rng: &mut SplitMix64) -> Result<ProbabilityMap> {
    if !(0.0..=1.0).contains(&params.flip_rate) {
        return Err(Error::arg(format!("flip rate {} must be in [0, 1]", params.flip_rate)));
    }
    if !(params.sharpness > 0.0 && params.sharpness <= 1.0) {
        return Err(Error::arg(format!("sharpness {} must be in (0, 1]", params.sharpness)));
    }
    let len = labels.len();
    let runs = labels.to_runs();
    let runs = runs.runs();

    // boundaries between consecutive runs; moved boundaries stay strictly
    // increasing so every run keeps at least one sample
    let jitter = params.boundary_jitter as i64;
    let mut moved: Vec<usize> = Vec::with_capacity(runs.len().saturating_sub(1));
    for k in 1..runs.len() {
        let b = runs[k].start as i64;
        let d = if jitter > 0 {
            rng.inclusive(0, 2 * jitter as u64) as i64 - jitter
        } else {
            0
        };
        let lo = moved.last().map_or(1, |&m| m as i64 + 1);
        let hi = runs.get(k + 1).map_or(len as i64 - 1, |r| r.start as i64 - 1);
        moved.push((b + d).clamp(lo, hi) as usize);
    }

    let mut classes = Vec::with_capacity(len);
    let mut start = 0;
    for (k, run) in runs.iter().enumerate() {
        let end = moved.get(k).copied().unwrap_or(len);
        classes.extend(std::iter::repeat_n(run.class, end - start));
        start = end;
    }

    if params.flip_rate > 0.0 {
        for c in classes.iter_mut() {
            if rng.unit() < params.flip_rate {
                let other = rng.index(NUM_CLASSES - 1) as u8;
                *c = if other >= *c { other + 1 } else { other };
            }
        }
    }
    Ok(ProbabilityMap::sharpened(&LabelSequence::from_trusted(classes), params.sharpness))
}

/// QRS runs of a label sequence; handy for counting beats.
pub fn qrs_runs(labels: &LabelSequence) -> Vec<Run> {
    labels
        .to_runs()
        .runs()
        .iter()
        .copied()
        .filter(|r| r.class == Wave::Qrs.id())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consistency::{find_violations, ConsistencyOptions};
    use crate::fusion::segment_confidence;
    use crate::rng::stream;

    #[test]
    fn sixty_bpm_has_ten_clean_beats() {
        let (rec, labels) = synth_ecg("s", &SynthParams::default(), &mut stream(1, &[])).unwrap();
        assert_eq!(rec.len(), 2500);
        assert_eq!(qrs_runs(&labels).len(), 10);
        assert!(find_violations(&labels, ConsistencyOptions::default()).is_empty());
        // P -> QRS -> T order in every beat
        let order: Vec<u8> = labels
            .to_runs()
            .runs()
            .iter()
            .map(|r| r.class)
            .filter(|&c| c != 0)
            .collect();
        assert!(order.chunks(3).all(|c| c == [1, 2, 3]));
    }

    #[test]
    fn one_twenty_bpm_has_twenty_qrs_runs() {
        let params = SynthParams {
            heart_rate_bpm: 120.0,
            ..SynthParams::default()
        };
        let (_, labels) = synth_ecg("s", &params, &mut stream(1, &[])).unwrap();
        assert_eq!(qrs_runs(&labels).len(), 20);
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let params = SynthParams {
            noise_std: 0.05,
            ..SynthParams::default()
        };
        let a = synth_ecg("s", &params, &mut stream(9, &[])).unwrap();
        let b = synth_ecg("s", &params, &mut stream(9, &[])).unwrap();
        assert_eq!(a, b);
        let c = synth_ecg("s", &params, &mut stream(10, &[])).unwrap();
        assert_ne!(a.0, c.0);
        let clean = synth_ecg("s", &SynthParams::default(), &mut stream(3, &[])).unwrap();
        let clean2 = synth_ecg("s", &SynthParams::default(), &mut stream(4, &[])).unwrap();
        assert_eq!(clean, clean2);
    }

    #[test]
    fn oversized_template_is_rejected() {
        let params = SynthParams {
            t_width: 0.9,
            ..SynthParams::default()
        };
        assert!(synth_ecg("s", &params, &mut stream(1, &[])).is_err());
    }

    #[test]
    fn identity_corruption() {
        let (_, labels) = synth_ecg("s", &SynthParams::default(), &mut stream(1, &[])).unwrap();
        let params = CorruptParams {
            boundary_jitter: 0,
            flip_rate: 0.0,
            sharpness: 1.0,
        };
        let map = corrupt_labels(&labels, &params, &mut stream(2, &[])).unwrap();
        assert_eq!(map.argmax_labels(), labels);
        assert_eq!(map, ProbabilityMap::one_hot(&labels));
    }

    #[test]
    fn sharpness_sets_confidence() {
        let (_, labels) = synth_ecg("s", &SynthParams::default(), &mut stream(1, &[])).unwrap();
        let params = CorruptParams {
            boundary_jitter: 3,
            flip_rate: 0.0,
            sharpness: 0.7,
        };
        let map = corrupt_labels(&labels, &params, &mut stream(2, &[])).unwrap();
        for start in [0, 17, 1000, 2250] {
            assert_eq!(segment_confidence(&map, start, 250).unwrap(), 0.7);
        }
    }

    #[test]
    fn disagreement_rate_matches_expectation() {
        // 60 bpm keeps every run >= 15 samples, so +-5 jitter never clamps
        let mut agree_total = 0usize;
        let mut total = 0usize;
        let mut boundaries = 0usize;
        let params = CorruptParams {
            boundary_jitter: 5,
            flip_rate: 0.05,
            sharpness: 0.9,
        };
        for i in 0..4 {
            let synth = SynthParams {
                phase: 0.1 * i as f64,
                ..SynthParams::default()
            };
            let (_, labels) = synth_ecg("s", &synth, &mut stream(i, &[])).unwrap();
            boundaries += labels.to_runs().len() - 1;
            let map = corrupt_labels(&labels, &params, &mut stream(100 + i, &[])).unwrap();
            let pred = map.argmax_labels();
            agree_total += pred
                .as_slice()
                .iter()
                .zip(labels.as_slice())
                .filter(|(a, b)| a == b)
                .count();
            total += labels.len();
        }
        // E|d| for d uniform on {-5..5} is 30/11 samples per boundary
        let moved = boundaries as f64 * 30.0 / 11.0 / total as f64;
        // a moved sample only agrees again if the flip lands on the original class
        let expected = moved * (1.0 - 0.05 / 3.0) + (1.0 - moved) * 0.05;
        let observed = 1.0 - agree_total as f64 / total as f64;
        assert!(total >= 10_000);
        assert!((observed - expected).abs() < 0.015, "observed {observed}, expected {expected}");
    }
}
