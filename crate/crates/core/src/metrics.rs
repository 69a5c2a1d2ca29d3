//! Segmentation and clinical-interval metrics.

use crate::error::{Error, Result};
use crate::labels::{LabelSequence, Wave, NUM_CLASSES};

pub const DEFAULT_MATCH_TOL_MS: f64 = 150.0;

/// Timestep confusion counts, indexed `[gt][pred]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, pred: &LabelSequence, gt: &LabelSequence) -> Result<()> {
        if pred.len() != gt.len() {
            return Err(Error::arg(format!(
                "prediction length {} differs from ground truth length {}",
                pred.len(),
                gt.len()
            )));
        }
        for (&p, &g) in pred.as_slice().iter().zip(gt.as_slice()) {
            self.counts[g as usize][p as usize] += 1;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (row, other_row) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(other_row) {
                *c += o;
            }
        }
    }

    pub fn get(&self, gt: usize, pred: usize) -> u64 {
        self.counts[gt][pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// `TP / (TP + FP + FN)`; a class absent from both sides scores 1.
    pub fn class_iou(&self, c: usize) -> f64 {
        let tp = self.counts[c][c];
        let gt_total: u64 = self.counts[c].iter().sum();
        let pred_total: u64 = self.counts.iter().map(|row| row[c]).sum();
        let union = gt_total + pred_total - tp;
        if union == 0 {
            1.0
        } else {
            tp as f64 / union as f64
        }
    }

    pub fn per_class_iou(&self) -> [f64; NUM_CLASSES] {
        std::array::from_fn(|c| self.class_iou(c))
    }

    pub fn miou(&self) -> f64 {
        self.per_class_iou().iter().sum::<f64>() / NUM_CLASSES as f64
    }
}

/// Micro-averaged mIoU: one confusion matrix over every timestep of every pair.
pub fn miou(preds: &[LabelSequence], gts: &[LabelSequence]) -> Result<f64> {
    Ok(confusion(preds, gts)?.miou())
}

pub fn confusion(preds: &[LabelSequence], gts: &[LabelSequence]) -> Result<ConfusionMatrix> {
    if preds.len() != gts.len() {
        return Err(Error::arg(format!(
            "{} predictions for {} ground truths",
            preds.len(),
            gts.len()
        )));
    }
    let mut cm = ConfusionMatrix::new();
    for (i, (p, g)) in preds.iter().zip(gts).enumerate() {
        cm.add(p, g).map_err(|e| Error::arg(format!("pair {i}: {e}")))?;
    }
    Ok(cm)
}

/// Fiducial points of one beat, as sample indices. Offsets are exclusive
/// run ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeatFiducials {
    pub p_onset: Option<usize>,
    pub qrs_onset: usize,
    pub qrs_offset: usize,
    pub t_offset: Option<usize>,
}

impl BeatFiducials {
    pub fn pr(&self) -> Option<usize> {
        self.p_onset.map(|p| self.qrs_onset - p)
    }

    pub fn qrs(&self) -> usize {
        self.qrs_offset - self.qrs_onset
    }

    pub fn qt(&self) -> Option<usize> {
        self.t_offset.map(|t| t - self.qrs_onset)
    }
}

/// Beats anchored on QRS runs.
///
/// The P onset is the start of the last P run between the previous QRS run
/// (or the sequence start) and this one. The T offset is the end of the
/// first T run before the next QRS run (or the sequence end).
pub fn extract_fiducials(labels: &LabelSequence) -> Vec<BeatFiducials> {
    let runs = labels.to_runs();
    let runs = runs.runs();
    let qrs: Vec<usize> = runs
        .iter()
        .enumerate()
        .filter(|(_, r)| r.class == Wave::Qrs.id())
        .map(|(i, _)| i)
        .collect();

    qrs.iter()
        .enumerate()
        .map(|(k, &ri)| {
            let prev = if k == 0 { 0 } else { qrs[k - 1] + 1 };
            let next = qrs.get(k + 1).copied().unwrap_or(runs.len());
            let p_onset = runs[prev..ri]
                .iter()
                .rev()
                .find(|r| r.class == Wave::P.id())
                .map(|r| r.start);
            let t_offset = runs[ri + 1..next]
                .iter()
                .find(|r| r.class == Wave::T.id())
                .map(|r| r.end);
            BeatFiducials {
                p_onset,
                qrs_onset: runs[ri].start,
                qrs_offset: runs[ri].end,
                t_offset,
            }
        })
        .collect()
}

/// Greedy one-to-one pairing of beats by nearest QRS onset within
/// `tol_samples`. Returns `(gt_index, pred_index)` pairs in gt order.
pub fn match_beats(gt: &[BeatFiducials], pred: &[BeatFiducials], tol_samples: f64) -> Vec<(usize, usize)> {
    let mut candidates: Vec<(usize, usize, usize)> = Vec::new();
    for (i, g) in gt.iter().enumerate() {
        for (j, p) in pred.iter().enumerate() {
            let d = g.qrs_onset.abs_diff(p.qrs_onset);
            if d as f64 <= tol_samples {
                candidates.push((d, i, j));
            }
        }
    }
    candidates.sort_unstable();
    let mut gt_used = vec![false; gt.len()];
    let mut pred_used = vec![false; pred.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in candidates {
        if !gt_used[i] && !pred_used[j] {
            gt_used[i] = true;
            pred_used[j] = true;
            pairs.push((i, j));
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Mean absolute interval errors in milliseconds. `None` where no matched
/// beat pair defines the interval on both sides.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IntervalErrors {
    pub pr_ms: Option<f64>,
    pub qrs_ms: Option<f64>,
    pub qt_ms: Option<f64>,
    pub matched: usize,
    pub gt_beats: usize,
    pub pred_beats: usize,
}

impl IntervalErrors {
    /// Mean of the defined interval MAEs.
    pub fn average_ms(&self) -> Option<f64> {
        let defined: Vec<f64> = [self.pr_ms, self.qrs_ms, self.qt_ms].into_iter().flatten().collect();
        (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
    }
}

/// Running sums for interval MAEs over many records.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IntervalAccumulator {
    sums: [f64; 3],
    counts: [usize; 3],
    matched: usize,
    gt_beats: usize,
    pred_beats: usize,
}

impl IntervalAccumulator {
    pub fn add(&mut self, pred: &LabelSequence, gt: &LabelSequence, sample_rate: u32, match_tol_ms: f64) -> Result<()> {
        if pred.len() != gt.len() {
            return Err(Error::arg(format!(
                "prediction length {} differs from ground truth length {}",
                pred.len(),
                gt.len()
            )));
        }
        if sample_rate == 0 {
            return Err(Error::arg("sample rate must be >= 1"));
        }
        let ms_per_sample = 1000.0 / sample_rate as f64;
        let gt_beats = extract_fiducials(gt);
        let pred_beats = extract_fiducials(pred);
        let pairs = match_beats(&gt_beats, &pred_beats, match_tol_ms / ms_per_sample);
        for &(i, j) in &pairs {
            let (g, p) = (&gt_beats[i], &pred_beats[j]);
            let intervals = [
                g.pr().zip(p.pr()),
                Some((g.qrs(), p.qrs())),
                g.qt().zip(p.qt()),
            ];
            for (k, pair) in intervals.into_iter().enumerate() {
                if let Some((a, b)) = pair {
                    self.sums[k] += a.abs_diff(b) as f64 * ms_per_sample;
                    self.counts[k] += 1;
                }
            }
        }
        self.matched += pairs.len();
        self.gt_beats += gt_beats.len();
        self.pred_beats += pred_beats.len();
        Ok(())
    }

    pub fn finish(&self) -> IntervalErrors {
        let mae = |k: usize| (self.counts[k] > 0).then(|| self.sums[k] / self.counts[k] as f64);
        IntervalErrors {
            pr_ms: mae(0),
            qrs_ms: mae(1),
            qt_ms: mae(2),
            matched: self.matched,
            gt_beats: self.gt_beats,
            pred_beats: self.pred_beats,
        }
    }
}

/// PR, QRS and QT mean absolute errors of one prediction.
pub fn interval_mae(pred: &LabelSequence, gt: &LabelSequence, sample_rate: u32, match_tol_ms: f64) -> Result<IntervalErrors> {
    let mut acc = IntervalAccumulator::default();
    acc.add(pred, gt, sample_rate, match_tol_ms)?;
    Ok(acc.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn l(s: &str) -> LabelSequence {
        s.parse().unwrap()
    }

    /// Dense sequence from `(class, length)` pieces.
    fn build(pieces: &[(u8, usize)]) -> LabelSequence {
        LabelSequence::new(
            pieces
                .iter()
                .flat_map(|&(c, n)| std::iter::repeat_n(c, n))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn miou_examples() {
        let x = vec![l("0112203300")];
        assert_eq!(miou(&x, &x).unwrap(), 1.0);
        assert_eq!(miou(&[l("2222")], &[l("0000")]).unwrap(), 0.5);
        assert!(miou(&[l("22")], &[l("000")]).is_err());
    }

    #[test]
    fn fiducial_examples() {
        let beats = extract_fiducials(&l("011220330"));
        assert_eq!(
            beats,
            vec![BeatFiducials {
                p_onset: Some(1),
                qrs_onset: 3,
                qrs_offset: 5,
                t_offset: Some(8),
            }]
        );
        assert!(extract_fiducials(&l("0000")).is_empty());

        let two = extract_fiducials(&l("0112033001120330"));
        assert_eq!(two.len(), 2);
        assert_eq!((two[0].qrs_onset, two[1].qrs_onset), (3, 11));
        assert_eq!(two[1].p_onset, Some(9));
        assert_eq!(two[1].t_offset, Some(15));
    }

    #[test]
    fn beat_without_p_or_t() {
        let beats = extract_fiducials(&l("0220220330"));
        assert_eq!(beats[0].p_onset, None);
        assert_eq!(beats[0].t_offset, None);
        assert_eq!(beats[1].t_offset, Some(9));
    }

    #[test]
    fn two_sample_shift_is_eight_ms() {
        // beat with QRS onset at sample 500, 250 Hz
        let gt = build(&[(0, 460), (1, 25), (0, 15), (2, 25), (0, 40), (3, 45), (0, 390)]);
        let pred = build(&[(0, 460), (1, 25), (0, 17), (2, 23), (0, 40), (3, 45), (0, 390)]);
        assert_eq!(extract_fiducials(&gt)[0].qrs_onset, 500);
        let e = interval_mae(&pred, &gt, 250, DEFAULT_MATCH_TOL_MS).unwrap();
        assert_eq!(e.pr_ms, Some(8.0));
        assert_eq!(e.qrs_ms, Some(8.0));
        assert_eq!(e.qt_ms, Some(8.0));
        assert_eq!(e.average_ms(), Some(8.0));
        assert_eq!(e.matched, 1);
    }

    #[test]
    fn identical_and_missing() {
        let gt = build(&[(0, 50), (1, 20), (0, 10), (2, 25), (0, 30), (3, 40), (0, 60)]);
        let e = interval_mae(&gt, &gt, 250, DEFAULT_MATCH_TOL_MS).unwrap();
        assert_eq!((e.pr_ms, e.qrs_ms, e.qt_ms), (Some(0.0), Some(0.0), Some(0.0)));

        let none = interval_mae(&LabelSequence::background(gt.len()), &gt, 250, DEFAULT_MATCH_TOL_MS).unwrap();
        assert_eq!((none.pr_ms, none.qrs_ms, none.qt_ms), (None, None, None));
        assert_eq!(none.matched, 0);
        assert_eq!(none.average_ms(), None);
    }

    #[test]
    fn matching_respects_tolerance_and_uniqueness() {
        let beat = |onset| BeatFiducials {
            p_onset: None,
            qrs_onset: onset,
            qrs_offset: onset + 10,
            t_offset: None,
        };
        let gt = [beat(100), beat(300)];
        let pred = [beat(105), beat(110), beat(500)];
        assert_eq!(match_beats(&gt, &pred, 37.5), vec![(0, 0)]);
        assert_eq!(match_beats(&gt, &pred, 250.0), vec![(0, 0), (1, 1)]);
    }

    proptest! {
        #[test]
        fn miou_matches_set_counting(
            pairs in prop::collection::vec(
                (1usize..64).prop_flat_map(|n| (
                    prop::collection::vec(0u8..4, n),
                    prop::collection::vec(0u8..4, n),
                )),
                1..4,
            )
        ) {
            let preds: Vec<LabelSequence> = pairs.iter().map(|(p, _)| LabelSequence::new(p.clone()).unwrap()).collect();
            let gts: Vec<LabelSequence> = pairs.iter().map(|(_, g)| LabelSequence::new(g.clone()).unwrap()).collect();
            let mut expected = 0.0;
            for c in 0..4u8 {
                let (mut inter, mut union) = (0, 0);
                for (p, g) in &pairs {
                    for (a, b) in p.iter().zip(g) {
                        inter += (*a == c && *b == c) as usize;
                        union += (*a == c || *b == c) as usize;
                    }
                }
                expected += if union == 0 { 1.0 } else { inter as f64 / union as f64 };
            }
            expected /= 4.0;
            let got = miou(&preds, &gts).unwrap();
            prop_assert!((got - expected).abs() < 1e-12);
            let swapped = miou(&gts, &preds).unwrap();
            prop_assert!((got - swapped).abs() < 1e-12);
        }

        #[test]
        fn shifting_both_leaves_metrics_unchanged(
            pieces in prop::collection::vec((0u8..4, 5usize..40), 1..20),
            jitter in prop::collection::vec(0usize..3, 20),
            offset in 1usize..50,
        ) {
            let gt = build(&pieces);
            let pred_pieces: Vec<(u8, usize)> = pieces.iter().zip(&jitter).map(|(&(c, n), &j)| (c, n + j)).collect();
            let pred_full = build(&pred_pieces);
            let pred = LabelSequence::new(pred_full.as_slice()[..gt.len()].to_vec()).unwrap();
            let shift = |s: &LabelSequence| {
                let mut v = vec![0u8; offset];
                v.extend_from_slice(s.as_slice());
                LabelSequence::new(v).unwrap()
            };
            let a = interval_mae(&pred, &gt, 250, 150.0).unwrap();
            let b = interval_mae(&shift(&pred), &shift(&gt), 250, 150.0).unwrap();
            prop_assert_eq!(a, b);
            let qrs = extract_fiducials(&gt);
            prop_assert!(qrs.windows(2).all(|w| w[0].qrs_onset < w[1].qrs_onset));
        }
    }
}
