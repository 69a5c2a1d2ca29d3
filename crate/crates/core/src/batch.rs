//! Batch entry points over flat buffers.
//!
//! Sequences are stored back to back: `n` sequences of length `len` take
//! `n * len` elements, probabilities `n * len * C`. These functions only
//! check shapes and delegate, so results match the typed API exactly.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::consistency::{consistency_ratio, ConsistencyOptions};
use crate::error::{Error, Result};
use crate::fusion::{
    cardiomix_step, fuse_l2u, fuse_u2l, vanilla_cutmix, FusionOutcome, FusionParams, LabeledSample,
    UnlabeledSample,
};
use crate::labels::{LabelSequence, NUM_CLASSES};
use crate::metrics::{confusion, IntervalAccumulator, IntervalErrors};
use crate::probs::ProbabilityMap;
use crate::similarity::{sim, SimMode};

fn check_len(name: &str, got: usize, n: usize, per: usize) -> Result<()> {
    if got != n * per {
        return Err(Error::arg(format!(
            "{name}: buffer holds {got} elements, expected {n} x {per} = {}",
            n * per
        )));
    }
    Ok(())
}

fn count(name: &str, total: usize, len: usize) -> Result<usize> {
    if len == 0 {
        return Err(Error::arg("sequence length must be >= 1"));
    }
    if !total.is_multiple_of(len) {
        return Err(Error::arg(format!(
            "{name}: buffer of {total} elements is not a whole number of length-{len} sequences"
        )));
    }
    Ok(total / len)
}

/// Splits a flat label buffer into sequences of length `len`.
pub fn split_labels(buf: &[u8], len: usize) -> Result<Vec<LabelSequence>> {
    count("labels", buf.len(), len)?;
    buf.chunks_exact(len)
        .enumerate()
        .map(|(i, c)| LabelSequence::new(c.to_vec()).map_err(|e| Error::arg(format!("sequence {i}: {e}"))))
        .collect()
}

/// Splits a flat `n x len x C` probability buffer into maps.
pub fn split_probs(buf: &[f64], len: usize) -> Result<Vec<ProbabilityMap>> {
    count("probabilities", buf.len(), len * NUM_CLASSES)?;
    buf.chunks_exact(len * NUM_CLASSES)
        .enumerate()
        .map(|(i, c)| ProbabilityMap::new(c.to_vec()).map_err(|e| Error::arg(format!("sequence {i}: {e}"))))
        .collect()
}

/// Class-averaged IoU of two label buffers of equal length.
pub fn sim_buffers(a: &[u8], b: &[u8], mode: SimMode) -> Result<f64> {
    let a = LabelSequence::new(a.to_vec())?;
    let b = LabelSequence::new(b.to_vec())?;
    Ok(sim(a.as_slice(), b.as_slice(), mode)?.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FuseMode {
    /// L2U followed by gated U2L.
    #[default]
    Cardiomix,
    L2u,
    U2l,
    Vanilla,
}

impl FuseMode {
    pub fn name(self) -> &'static str {
        match self {
            FuseMode::Cardiomix => "cardiomix",
            FuseMode::L2u => "l2u",
            FuseMode::U2l => "u2l",
            FuseMode::Vanilla => "vanilla",
        }
    }
}

impl FromStr for FuseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [FuseMode::Cardiomix, FuseMode::L2u, FuseMode::U2l, FuseMode::Vanilla]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::arg(format!("unknown fusion mode {s:?}")))
    }
}

/// One mini-batch in flat form.
#[derive(Debug, Clone, Copy)]
pub struct BatchBuffers<'a> {
    pub len: usize,
    pub labeled_signals: &'a [f64],
    pub labeled_labels: &'a [u8],
    pub unlabeled_signals: &'a [f64],
    pub unlabeled_probs: &'a [f64],
}

impl BatchBuffers<'_> {
    pub fn to_samples(&self) -> Result<(Vec<LabeledSample>, Vec<UnlabeledSample>)> {
        let n_l = count("labeled signals", self.labeled_signals.len(), self.len)?;
        let n_u = count("unlabeled signals", self.unlabeled_signals.len(), self.len)?;
        check_len("labeled labels", self.labeled_labels.len(), n_l, self.len)?;
        check_len("unlabeled probabilities", self.unlabeled_probs.len(), n_u, self.len * NUM_CLASSES)?;
        let labeled = self
            .labeled_signals
            .chunks_exact(self.len)
            .zip(split_labels(self.labeled_labels, self.len)?)
            .map(|(s, labels)| LabeledSample {
                signal: s.to_vec(),
                labels,
            })
            .collect();
        let unlabeled = self
            .unlabeled_signals
            .chunks_exact(self.len)
            .zip(split_probs(self.unlabeled_probs, self.len)?)
            .map(|(s, probs)| UnlabeledSample {
                signal: s.to_vec(),
                probs,
            })
            .collect();
        Ok((labeled, unlabeled))
    }
}

/// Result of one fused mini-batch. For cardiomix the L2U outcomes come
/// first, then U2L.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedBatch {
    pub mode: FuseMode,
    pub width: usize,
    pub outcomes: Vec<FusionOutcome>,
}

impl FusedBatch {
    pub fn signals(&self) -> Vec<f64> {
        self.outcomes.iter().flat_map(|o| o.signal.iter().copied()).collect()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.outcomes
            .iter()
            .flat_map(|o| o.labels.as_slice().iter().copied())
            .collect()
    }

    /// Outcomes table with numeric ids `<direction>.<target>`.
    pub fn outcomes_csv(&self) -> String {
        let mut out = outcomes_header();
        for o in &self.outcomes {
            out.push_str(&outcome_line(&format!("{}.{}", o.direction.name(), o.target), o));
        }
        out
    }
}

/// Runs one mini-batch in the given mode.
pub fn fuse_samples(
    labeled: &[LabeledSample],
    unlabeled: &[UnlabeledSample],
    mode: FuseMode,
    params: &FusionParams,
    step: u64,
) -> Result<FusedBatch> {
    let outcomes = match mode {
        FuseMode::Cardiomix => {
            let out = cardiomix_step(labeled, unlabeled, params, step)?;
            out.l2u.into_iter().chain(out.u2l).collect()
        }
        FuseMode::L2u => fuse_l2u(unlabeled, labeled, params, step)?,
        FuseMode::U2l => fuse_u2l(labeled, unlabeled, params, step)?,
        FuseMode::Vanilla => vanilla_cutmix(unlabeled, params, step)?,
    };
    Ok(FusedBatch {
        mode,
        width: params.window_width(step),
        outcomes,
    })
}

pub fn fuse_batch(buffers: &BatchBuffers<'_>, mode: FuseMode, params: &FusionParams, step: u64) -> Result<FusedBatch> {
    let (labeled, unlabeled) = buffers.to_samples()?;
    fuse_samples(&labeled, &unlabeled, mode, params, step)
}

pub const OUTCOME_COLUMNS: [&str; 8] = [
    "record_id",
    "s_q",
    "j_star",
    "s_k_star",
    "width",
    "score",
    "confidence",
    "gated",
];

pub fn outcomes_header() -> String {
    let mut s = OUTCOME_COLUMNS.join(",");
    s.push('\n');
    s
}

/// One CSV row; confidence and gated are empty outside U2L.
pub fn outcome_line(record_id: &str, o: &FusionOutcome) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "{record_id},{},{},{},{},{}",
        o.query_start,
        o.source,
        o.key_start,
        o.width,
        o.score.value()
    );
    match o.confidence {
        Some(c) => {
            let _ = write!(s, ",{c}");
        }
        None => s.push(','),
    }
    match o.gated {
        Some(g) => {
            let _ = write!(s, ",{g}");
        }
        None => s.push(','),
    }
    s.push('\n');
    s
}

/// Consistency ratio of `n` label sequences stored back to back.
pub fn consistency_ratio_buffer(labels: &[u8], len: usize, opts: ConsistencyOptions) -> Result<f64> {
    consistency_ratio(&split_labels(labels, len)?, opts)
}

/// Segmentation and interval metrics over a set of records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub miou: f64,
    pub class_iou: [f64; NUM_CLASSES],
    pub intervals: IntervalErrors,
}

pub fn evaluate(preds: &[LabelSequence], gts: &[LabelSequence], sample_rate: u32, match_tol_ms: f64) -> Result<MetricsReport> {
    let cm = confusion(preds, gts)?;
    let mut acc = IntervalAccumulator::default();
    for (i, (p, g)) in preds.iter().zip(gts).enumerate() {
        acc.add(p, g, sample_rate, match_tol_ms)
            .map_err(|e| Error::arg(format!("sequence {i}: {e}")))?;
    }
    Ok(MetricsReport {
        miou: cm.miou(),
        class_iou: cm.per_class_iou(),
        intervals: acc.finish(),
    })
}

pub fn evaluate_buffers(
    preds: &[u8],
    gts: &[u8],
    len: usize,
    sample_rate: u32,
    match_tol_ms: f64,
) -> Result<MetricsReport> {
    if preds.len() != gts.len() {
        return Err(Error::arg(format!(
            "prediction buffer has {} elements, ground truth {}",
            preds.len(),
            gts.len()
        )));
    }
    evaluate(&split_labels(preds, len)?, &split_labels(gts, len)?, sample_rate, match_tol_ms)
}
