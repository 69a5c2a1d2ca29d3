//! Signal conditioning: duration fix, resampling, zero-phase band-pass and
//! z-score normalisation.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::labels::{LabelSequence, NUM_CLASSES};
use crate::probs::ProbabilityMap;
use crate::record::EcgRecord;

pub const DEFAULT_RATE: u32 = 250;
pub const DEFAULT_LO_HZ: f64 = 0.67;
pub const DEFAULT_HI_HZ: f64 = 40.0;
pub const DEFAULT_SECONDS: f64 = 10.0;

/// Anti-alias cutoff as a fraction of the new Nyquist frequency.
const ANTI_ALIAS_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreprocessConfig {
    pub target_rate: u32,
    pub lo_hz: f64,
    pub hi_hz: f64,
    pub seconds: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            target_rate: DEFAULT_RATE,
            lo_hz: DEFAULT_LO_HZ,
            hi_hz: DEFAULT_HI_HZ,
            seconds: DEFAULT_SECONDS,
        }
    }
}

/// Second-order section, normalised so `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    /// Butterworth (Q = 1/sqrt 2) low-pass via the bilinear transform.
    pub fn lowpass(cutoff_hz: f64, sample_rate: f64) -> Self {
        let (cos, alpha) = Self::prewarp(cutoff_hz, sample_rate);
        let k = (1.0 - cos) / 2.0;
        Self::normalised([k, 1.0 - cos, k], [1.0 + alpha, -2.0 * cos, 1.0 - alpha])
    }

    /// Butterworth (Q = 1/sqrt 2) high-pass via the bilinear transform.
    pub fn highpass(cutoff_hz: f64, sample_rate: f64) -> Self {
        let (cos, alpha) = Self::prewarp(cutoff_hz, sample_rate);
        let k = (1.0 + cos) / 2.0;
        Self::normalised([k, -(1.0 + cos), k], [1.0 + alpha, -2.0 * cos, 1.0 - alpha])
    }

    fn prewarp(cutoff_hz: f64, sample_rate: f64) -> (f64, f64) {
        let w0 = 2.0 * PI * cutoff_hz / sample_rate;
        (w0.cos(), w0.sin() / (2.0 * FRAC_1_SQRT_2))
    }

    fn normalised(b: [f64; 3], a: [f64; 3]) -> Self {
        Self {
            b: b.map(|v| v / a[0]),
            a: [a[1] / a[0], a[2] / a[0]],
        }
    }

    /// Gain at DC.
    fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / (1.0 + self.a[0] + self.a[1])
    }

    /// Transposed direct-form II state for a unit step in steady state.
    fn steady_state(&self) -> [f64; 2] {
        let g = self.dc_gain();
        let z2 = self.b[2] - self.a[1] * g;
        let z1 = self.b[1] - self.a[0] * g + z2;
        [z1, z2]
    }

    fn run(&self, x: &mut [f64], mut z: [f64; 2]) {
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        for v in x.iter_mut() {
            let input = *v;
            let y = b0 * input + z[0];
            z[0] = b1 * input - a1 * y + z[1];
            z[1] = b2 * input - a2 * y;
            *v = y;
        }
    }
}

/// Runs the cascade once, starting each section in steady state for a
/// constant input equal to `x[0]`.
fn cascade(sections: &[Biquad], x: &mut [f64]) {
    let Some(&first) = x.first() else { return };
    let mut level = first;
    for s in sections {
        let zi = s.steady_state().map(|z| z * level);
        s.run(x, zi);
        level *= s.dc_gain();
    }
}

/// Forward-backward application of a cascade with odd-extension padding.
pub fn filtfilt(sections: &[Biquad], x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let pad = pad.min(n - 1);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

    cascade(sections, &mut ext);
    ext.reverse();
    cascade(sections, &mut ext);
    ext.reverse();
    ext[pad..pad + n].to_vec()
}

/// Zero-phase band-pass: 2nd-order Butterworth high-pass at `lo` cascaded
/// with a 2nd-order Butterworth low-pass at `hi`, applied forward and backward.
pub fn bandpass(rec: &EcgRecord, lo_hz: f64, hi_hz: f64) -> Result<EcgRecord> {
    let fs = rec.sample_rate() as f64;
    let nyquist = fs / 2.0;
    if !(lo_hz > 0.0 && lo_hz < hi_hz) {
        return Err(Error::arg(format!(
            "band edges must satisfy 0 < lo < hi, got lo={lo_hz} hi={hi_hz}"
        )));
    }
    if hi_hz >= nyquist {
        return Err(Error::arg(format!(
            "high cutoff {hi_hz} Hz must be below Nyquist ({nyquist} Hz)"
        )));
    }
    let sections = [Biquad::highpass(lo_hz, fs), Biquad::lowpass(hi_hz, fs)];
    // three periods of the high-pass corner
    let pad = (3.0 * fs / lo_hz).ceil() as usize;
    rec.with_samples(rec.sample_rate(), filtfilt(&sections, rec.samples(), pad))
}

/// Output length for a rate change: `round(T * target / source)`, at least 1.
pub fn resampled_len(len: usize, source_rate: u32, target_rate: u32) -> usize {
    let n = (len as f64 * target_rate as f64 / source_rate as f64).round() as usize;
    n.max(1)
}

/// Nearest source index for every output sample of a rate change.
pub fn nearest_indices(len: usize, source_rate: u32, target_rate: u32) -> Vec<usize> {
    let step = source_rate as f64 / target_rate as f64;
    (0..resampled_len(len, source_rate, target_rate))
        .map(|i| ((i as f64 * step).round() as usize).min(len - 1))
        .collect()
}

/// Changes the sample rate. Downsampling low-passes below the new Nyquist
/// first; values are then read off by linear interpolation.
pub fn resample(rec: &EcgRecord, target_rate: u32) -> Result<EcgRecord> {
    if target_rate == 0 {
        return Err(Error::arg("target rate must be >= 1"));
    }
    let source_rate = rec.sample_rate();
    if target_rate == source_rate {
        return Ok(rec.clone());
    }
    let filtered;
    let x = if target_rate < source_rate {
        let fs = source_rate as f64;
        let cutoff = ANTI_ALIAS_FRACTION * target_rate as f64 / 2.0;
        let pad = (3.0 * fs / cutoff).ceil() as usize;
        filtered = filtfilt(&[Biquad::lowpass(cutoff, fs)], rec.samples(), pad);
        filtered.as_slice()
    } else {
        rec.samples()
    };

    let n = x.len();
    let step = source_rate as f64 / target_rate as f64;
    let out = (0..resampled_len(n, source_rate, target_rate))
        .map(|i| {
            let pos = i as f64 * step;
            let i0 = pos.floor() as usize;
            if i0 + 1 >= n {
                return x[n - 1];
            }
            let frac = pos - i0 as f64;
            x[i0] + frac * (x[i0 + 1] - x[i0])
        })
        .collect();
    rec.with_samples(target_rate, out)
}

/// Labels follow a rate change by nearest source index.
pub fn resample_labels(labels: &LabelSequence, source_rate: u32, target_rate: u32) -> LabelSequence {
    if source_rate == target_rate {
        return labels.clone();
    }
    let src = labels.as_slice();
    let classes = nearest_indices(src.len(), source_rate, target_rate)
        .into_iter()
        .map(|i| src[i])
        .collect();
    LabelSequence::from_trusted(classes)
}

/// Zero mean, unit population standard deviation; flat input maps to zeros.
pub fn zscore(rec: &EcgRecord) -> EcgRecord {
    let x = rec.samples();
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    let out = if std == 0.0 {
        vec![0.0; x.len()]
    } else {
        x.iter().map(|v| (v - mean) / std).collect()
    };
    rec.with_samples(rec.sample_rate(), out)
        .expect("normalised samples are finite")
}

/// Crops (keeping the head) or right-pads to `seconds * sample_rate`
/// samples. Signal pads with zeros, labels with background.
pub fn fix_duration(
    rec: &EcgRecord,
    labels: Option<&LabelSequence>,
    seconds: f64,
) -> Result<(EcgRecord, Option<LabelSequence>)> {
    if let Some(l) = labels {
        if l.len() != rec.len() {
            return Err(Error::arg(format!(
                "record {}: {} labels for {} samples",
                rec.record_id(),
                l.len(),
                rec.len()
            )));
        }
    }
    let target = (seconds * rec.sample_rate() as f64).round();
    if !(target >= 1.0) {
        return Err(Error::arg(format!("duration {seconds} s yields no samples")));
    }
    let target = target as usize;

    let mut samples = rec.samples().to_vec();
    samples.resize(target, 0.0);
    let labels = labels.map(|l| {
        let mut classes = l.as_slice().to_vec();
        classes.resize(target, 0);
        LabelSequence::from_trusted(classes)
    });
    Ok((rec.with_samples(rec.sample_rate(), samples)?, labels))
}

/// Duration fix, resample, band-pass, z-score, in that order.
///
/// Labels pass through the duration fix and nearest-index resampling. A
/// record without labels gets all-background labels of the output length.
pub fn preprocess_pipeline(
    rec: &EcgRecord,
    labels: Option<&LabelSequence>,
    cfg: &PreprocessConfig,
) -> Result<(EcgRecord, LabelSequence)> {
    let (fixed, fixed_labels) = fix_duration(rec, labels, cfg.seconds)?;
    let resampled = resample(&fixed, cfg.target_rate)?;
    let labels = match fixed_labels {
        Some(l) => resample_labels(&l, fixed.sample_rate(), cfg.target_rate),
        None => LabelSequence::background(resampled.len()),
    };
    let filtered = bandpass(&resampled, cfg.lo_hz, cfg.hi_hz)?;
    let normalised = zscore(&filtered);
    debug_assert_eq!(normalised.len(), labels.len());
    Ok((normalised, labels))
}

/// Applies the pipeline's duration fix and nearest-index resampling to a
/// probability map, so it stays aligned with the preprocessed signal.
/// Padded rows are certain background.
pub fn preprocess_probs(probs: &ProbabilityMap, source_rate: u32, cfg: &PreprocessConfig) -> Result<ProbabilityMap> {
    if source_rate == 0 || cfg.target_rate == 0 {
        return Err(Error::arg("sample rates must be >= 1"));
    }
    let target = (cfg.seconds * source_rate as f64).round();
    if !(target >= 1.0) {
        return Err(Error::arg(format!("duration {} s yields no samples", cfg.seconds)));
    }
    let target = target as usize;
    let mut data = probs.as_flat()[..probs.len().min(target) * NUM_CLASSES].to_vec();
    let background = ProbabilityMap::one_hot(&LabelSequence::background(1));
    while data.len() < target * NUM_CLASSES {
        data.extend_from_slice(background.as_flat());
    }
    let fixed = ProbabilityMap::new(data)?;
    if source_rate == cfg.target_rate {
        return Ok(fixed);
    }
    Ok(fixed.gather(nearest_indices(target, source_rate, cfg.target_rate)))
}
