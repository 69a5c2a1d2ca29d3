//! Cardiac-pattern-guided CutMix between labeled and unlabeled batches.
//!
//! * [`fuse_l2u`] pastes the best-matching labeled segment into each
//!   unlabeled sample, replacing its pseudo-labels inside the window with
//!   ground truth.
//! * [`fuse_u2l`] does the reverse, pasting unlabeled signal and
//!   pseudo-labels into labeled samples, but only when the teacher's mean
//!   maximum probability over the key segment exceeds `tau`.
//! * [`cardiomix_step`] runs both for one mini-batch.
//! * [`vanilla_cutmix`] is the unguided baseline between unlabeled samples.
//!
//! The window width is drawn once per step; query starts and random
//! choices come from per-sample streams (see [`crate::rng`]), so results do
//! not depend on how samples are scheduled across threads.

mod search;
mod splice;

use rayon::prelude::*;

pub use search::{search_best_key, Criterion, KeyMatch, KeyPool, PoolEntry};
pub use splice::{segment_confidence, splice};

use crate::error::{Error, Result};
use crate::labels::LabelSequence;
use crate::probs::ProbabilityMap;
use crate::rng::{stream, SplitMix64};
use crate::similarity::{sim, SimMode, SimScore};

pub const DEFAULT_W_MIN: usize = 250;
pub const DEFAULT_W_MAX: usize = 1250;
pub const DEFAULT_TAU: f64 = 0.8;

const TAG_WIDTH: u64 = 0;

/// Fusion direction; doubles as the stream tag for per-sample draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    L2u = 1,
    U2l = 2,
    Vanilla = 3,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::L2u => "l2u",
            Direction::U2l => "u2l",
            Direction::Vanilla => "vanilla",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionParams {
    pub w_min: usize,
    pub w_max: usize,
    pub tau: f64,
    pub criterion: Criterion,
    pub sim_mode: SimMode,
    pub seed: u64,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self {
            w_min: DEFAULT_W_MIN,
            w_max: DEFAULT_W_MAX,
            tau: DEFAULT_TAU,
            criterion: Criterion::Pattern,
            sim_mode: SimMode::PresentClasses,
            seed: 0,
        }
    }
}

impl FusionParams {
    pub fn validate(&self) -> Result<()> {
        if self.w_min == 0 || self.w_min > self.w_max {
            return Err(Error::arg(format!(
                "window range [{}, {}] must satisfy 1 <= wmin <= wmax",
                self.w_min, self.w_max
            )));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::arg(format!("tau {} must be in [0, 1]", self.tau)));
        }
        Ok(())
    }

    fn validate_for(&self, len: usize) -> Result<()> {
        self.validate()?;
        if self.w_max > len {
            return Err(Error::arg(format!(
                "window range [{}, {}] exceeds sequence length {len}",
                self.w_min, self.w_max
            )));
        }
        Ok(())
    }

    /// Window width of mini-batch `step`, uniform in `[w_min, w_max]`.
    pub fn window_width(&self, step: u64) -> usize {
        let mut rng = stream(self.seed, &[step, TAG_WIDTH]);
        rng.inclusive(self.w_min as u64, self.w_max as u64) as usize
    }

    /// Stream for sample `index` of `direction` in mini-batch `step`.
    pub fn sample_rng(&self, step: u64, direction: Direction, index: usize) -> SplitMix64 {
        stream(self.seed, &[step, direction as u64, index as u64])
    }
}

/// Key-search stride for a window width.
pub fn stride_for(width: usize) -> usize {
    (width / 2).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub signal: Vec<f64>,
    pub labels: LabelSequence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledSample {
    pub signal: Vec<f64>,
    pub probs: ProbabilityMap,
}

/// One fused sample and where its window came from.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionOutcome {
    pub direction: Direction,
    /// Index of the target sample in its batch.
    pub target: usize,
    pub query_start: usize,
    pub width: usize,
    /// Index of the source sample in the pool batch.
    pub source: usize,
    pub key_start: usize,
    pub score: SimScore,
    pub signal_similarity: Option<f64>,
    /// Key-segment confidence (U2L only).
    pub confidence: Option<f64>,
    /// Whether the gate let the splice through (U2L only).
    pub gated: Option<bool>,
    pub signal: Vec<f64>,
    pub labels: LabelSequence,
}

fn common_len(lens: impl IntoIterator<Item = (usize, usize)>) -> Result<usize> {
    let mut expected = None;
    for (i, (signal, labels)) in lens.into_iter().enumerate() {
        if signal != labels {
            return Err(Error::arg(format!(
                "sample {i}: {signal} samples but {labels} labels"
            )));
        }
        match expected {
            None => expected = Some(signal),
            Some(t) if t != signal => {
                return Err(Error::arg(format!(
                    "sample {i} has length {signal}, expected {t}"
                )))
            }
            _ => {}
        }
    }
    expected.ok_or_else(|| Error::arg("empty batch"))
}

fn check_batches(labeled: &[LabeledSample], unlabeled: &[UnlabeledSample]) -> Result<usize> {
    let t_l = common_len(labeled.iter().map(|s| (s.signal.len(), s.labels.len())))
        .map_err(|e| Error::arg(format!("labeled batch: {e}")))?;
    let t_u = common_len(unlabeled.iter().map(|s| (s.signal.len(), s.probs.len())))
        .map_err(|e| Error::arg(format!("unlabeled batch: {e}")))?;
    if t_l != t_u {
        return Err(Error::arg(format!(
            "labeled length {t_l} differs from unlabeled length {t_u}"
        )));
    }
    Ok(t_l)
}

fn pool_entries<'a>(labels: &'a [LabelSequence], signals: impl Iterator<Item = &'a [f64]>) -> Vec<PoolEntry<'a>> {
    labels
        .iter()
        .zip(signals)
        .map(|(l, s)| PoolEntry {
            labels: l.as_slice(),
            signal: Some(s),
        })
        .collect()
}

/// Labeled-to-unlabeled fusion of mini-batch `step`.
pub fn fuse_l2u(
    unlabeled: &[UnlabeledSample],
    labeled: &[LabeledSample],
    params: &FusionParams,
    step: u64,
) -> Result<Vec<FusionOutcome>> {
    let len = check_batches(labeled, unlabeled)?;
    params.validate_for(len)?;
    fuse_l2u_with_width(unlabeled, labeled, params, step, params.window_width(step))
}

fn fuse_l2u_with_width(
    unlabeled: &[UnlabeledSample],
    labeled: &[LabeledSample],
    params: &FusionParams,
    step: u64,
    width: usize,
) -> Result<Vec<FusionOutcome>> {
    let len = unlabeled[0].signal.len();
    let stride = stride_for(width);
    let key_labels: Vec<LabelSequence> = labeled.iter().map(|s| s.labels.clone()).collect();
    let pool = KeyPool::new(pool_entries(&key_labels, labeled.iter().map(|s| s.signal.as_slice())))?;

    unlabeled
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            let mut rng = params.sample_rng(step, Direction::L2u, i);
            let pseudo = u.probs.argmax_labels();
            let s_q = rng.index(len - width + 1);
            let q = s_q..s_q + width;
            let key = search_best_key(
                &pseudo.as_slice()[q.clone()],
                Some(&u.signal[q]),
                &pool,
                stride,
                params.criterion,
                params.sim_mode,
                &mut rng,
            )?;
            let src = &labeled[key.source];
            let (signal, labels) = splice(&u.signal, &pseudo, &src.signal, &src.labels, s_q, key.key_start, width)?;
            Ok(FusionOutcome {
                direction: Direction::L2u,
                target: i,
                query_start: s_q,
                width,
                source: key.source,
                key_start: key.key_start,
                score: key.score,
                signal_similarity: key.signal_similarity,
                confidence: None,
                gated: None,
                signal,
                labels,
            })
        })
        .collect()
}

/// Unlabeled-to-labeled fusion of mini-batch `step`, gated on key-segment
/// confidence `> tau`. A closed gate returns the labeled pair unchanged.
pub fn fuse_u2l(
    labeled: &[LabeledSample],
    unlabeled: &[UnlabeledSample],
    params: &FusionParams,
    step: u64,
) -> Result<Vec<FusionOutcome>> {
    let len = check_batches(labeled, unlabeled)?;
    params.validate_for(len)?;
    fuse_u2l_with_width(labeled, unlabeled, params, step, params.window_width(step))
}

fn fuse_u2l_with_width(
    labeled: &[LabeledSample],
    unlabeled: &[UnlabeledSample],
    params: &FusionParams,
    step: u64,
    width: usize,
) -> Result<Vec<FusionOutcome>> {
    let len = labeled[0].signal.len();
    let stride = stride_for(width);
    let pseudo: Vec<LabelSequence> = unlabeled.iter().map(|u| u.probs.argmax_labels()).collect();
    let pool = KeyPool::new(pool_entries(&pseudo, unlabeled.iter().map(|u| u.signal.as_slice())))?;

    labeled
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let mut rng = params.sample_rng(step, Direction::U2l, i);
            let s_q = rng.index(len - width + 1);
            let q = s_q..s_q + width;
            let key = search_best_key(
                &x.labels.as_slice()[q.clone()],
                Some(&x.signal[q]),
                &pool,
                stride,
                params.criterion,
                params.sim_mode,
                &mut rng,
            )?;
            let confidence = segment_confidence(&unlabeled[key.source].probs, key.key_start, width)?;
            let gated = confidence > params.tau;
            let (signal, labels) = if gated {
                let src = &unlabeled[key.source];
                splice(&x.signal, &x.labels, &src.signal, &pseudo[key.source], s_q, key.key_start, width)?
            } else {
                (x.signal.clone(), x.labels.clone())
            };
            Ok(FusionOutcome {
                direction: Direction::U2l,
                target: i,
                query_start: s_q,
                width,
                source: key.source,
                key_start: key.key_start,
                score: key.score,
                signal_similarity: key.signal_similarity,
                confidence: Some(confidence),
                gated: Some(gated),
                signal,
                labels,
            })
        })
        .collect()
}

/// Both directions of one mini-batch.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub width: usize,
    /// Augmented unlabeled samples (signal, pseudo-labels), in batch order.
    pub l2u: Vec<FusionOutcome>,
    /// Augmented labeled samples (signal, labels), in batch order.
    pub u2l: Vec<FusionOutcome>,
}

impl StepOutput {
    pub fn augmented_labeled(&self) -> impl Iterator<Item = (&[f64], &LabelSequence)> {
        self.u2l.iter().map(|o| (o.signal.as_slice(), &o.labels))
    }

    pub fn augmented_unlabeled(&self) -> impl Iterator<Item = (&[f64], &LabelSequence)> {
        self.l2u.iter().map(|o| (o.signal.as_slice(), &o.labels))
    }
}

/// L2U then gated U2L on one mini-batch, sharing one window width.
pub fn cardiomix_step(
    labeled: &[LabeledSample],
    unlabeled: &[UnlabeledSample],
    params: &FusionParams,
    step: u64,
) -> Result<StepOutput> {
    let len = check_batches(labeled, unlabeled)?;
    params.validate_for(len)?;
    let width = params.window_width(step);
    let l2u = fuse_l2u_with_width(unlabeled, labeled, params, step, width)?;
    let u2l = fuse_u2l_with_width(labeled, unlabeled, params, step, width)?;
    Ok(StepOutput { width, l2u, u2l })
}

/// Plain CutMix between unlabeled samples: each sample takes the same
/// window from a random other sample, signal and pseudo-labels.
pub fn vanilla_cutmix(unlabeled: &[UnlabeledSample], params: &FusionParams, step: u64) -> Result<Vec<FusionOutcome>> {
    if unlabeled.len() < 2 {
        return Err(Error::arg("vanilla CutMix needs at least two samples"));
    }
    let len = common_len(unlabeled.iter().map(|s| (s.signal.len(), s.probs.len())))?;
    params.validate_for(len)?;
    let width = params.window_width(step);
    let pseudo: Vec<LabelSequence> = unlabeled.iter().map(|u| u.probs.argmax_labels()).collect();
    let n = unlabeled.len();

    unlabeled
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            let mut rng = params.sample_rng(step, Direction::Vanilla, i);
            let mut partner = rng.index(n - 1);
            if partner >= i {
                partner += 1;
            }
            let s = rng.index(len - width + 1);
            let src = &unlabeled[partner];
            let score = sim(
                &pseudo[i].as_slice()[s..s + width],
                &pseudo[partner].as_slice()[s..s + width],
                params.sim_mode,
            )?;
            let (signal, labels) = splice(&u.signal, &pseudo[i], &src.signal, &pseudo[partner], s, s, width)?;
            Ok(FusionOutcome {
                direction: Direction::Vanilla,
                target: i,
                query_start: s,
                width,
                source: partner,
                key_start: s,
                score,
                signal_similarity: None,
                confidence: None,
                gated: None,
                signal,
                labels,
            })
        })
        .collect()
}
