//! Pattern similarity between label segments.
//!
//! Similarity is the class-averaged IoU of two equal-width label segments.
//! Scores keep their integer intersection/union counts so comparisons are
//! exact and argmax tie-breaking does not depend on float rounding.
//!
//! A class absent from both segments has an undefined (0/0) IoU. By default
//! such classes are left out of the average ([`SimMode::PresentClasses`]);
//! [`SimMode::Literal`] averages over all `C` classes and scores absent
//! classes as 1.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::labels::{runs_of, Run, NUM_CLASSES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SimMode {
    #[default]
    PresentClasses,
    Literal,
}

/// Intersection and union counts of one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Iou {
    pub intersection: u32,
    pub union: u32,
}

impl Iou {
    pub fn value(&self) -> f64 {
        self.intersection as f64 / self.union as f64
    }
}

/// Class-averaged IoU with its per-class counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SimScore {
    counts: [Iou; NUM_CLASSES],
    mode: SimMode,
}

impl SimScore {
    pub fn from_counts(counts: [Iou; NUM_CLASSES], mode: SimMode) -> Self {
        debug_assert!(counts.iter().all(|c| c.intersection <= c.union));
        Self { counts, mode }
    }

    pub fn counts(&self) -> &[Iou; NUM_CLASSES] {
        &self.counts
    }

    pub fn mode(&self) -> SimMode {
        self.mode
    }

    /// IoU of class `c`, or `None` when the class is in neither segment.
    pub fn class_iou(&self, c: usize) -> Option<Iou> {
        let iou = self.counts[c];
        (iou.union > 0).then_some(iou)
    }

    /// Terms entering the average as `(numerator, denominator)` pairs.
    fn terms(&self) -> impl Iterator<Item = (u128, u128)> + '_ {
        let mode = self.mode;
        self.counts.iter().filter_map(move |iou| match (iou.union, mode) {
            (0, SimMode::PresentClasses) => None,
            (0, SimMode::Literal) => Some((1, 1)),
            (u, _) => Some((iou.intersection as u128, u as u128)),
        })
    }

    /// Exact value as `numerator / denominator`, `None` on u128 overflow.
    fn ratio(&self) -> Option<(u128, u128)> {
        let mut num: u128 = 0;
        let mut den: u128 = 1;
        let mut n: u128 = 0;
        for (i, u) in self.terms() {
            // num/den + i/u
            num = num.checked_mul(u)?.checked_add(i.checked_mul(den)?)?;
            den = den.checked_mul(u)?;
            n += 1;
        }
        if n == 0 {
            return Some((1, 1));
        }
        Some((num, den.checked_mul(n)?))
    }

    pub fn value(&self) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for (i, u) in self.terms() {
            sum += i as f64 / u as f64;
            n += 1;
        }
        if n == 0 {
            1.0
        } else {
            sum / n as f64
        }
    }

    /// Exact comparison of the two averages.
    pub fn cmp_value(&self, other: &Self) -> Ordering {
        match (self.ratio(), other.ratio()) {
            (Some((na, da)), Some((nb, db))) => match (na.checked_mul(db), nb.checked_mul(da)) {
                (Some(l), Some(r)) => l.cmp(&r),
                _ => self.value().total_cmp(&other.value()),
            },
            _ => self.value().total_cmp(&other.value()),
        }
    }

    pub fn is_perfect(&self) -> bool {
        self.terms().all(|(i, u)| i == u)
    }
}

fn check_widths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::arg(format!("segment widths differ: {a} vs {b}")));
    }
    Ok(())
}

/// IoU of class `c` between two segments; `None` when `c` is in neither.
pub fn iou_class(a: &[u8], b: &[u8], c: u8) -> Result<Option<Iou>> {
    check_widths(a.len(), b.len())?;
    let mut iou = Iou::default();
    for (&x, &y) in a.iter().zip(b) {
        iou.intersection += (x == c && y == c) as u32;
        iou.union += (x == c || y == c) as u32;
    }
    Ok((iou.union > 0).then_some(iou))
}

/// Class-averaged IoU of two equal-width segments.
pub fn sim(a: &[u8], b: &[u8], mode: SimMode) -> Result<SimScore> {
    check_widths(a.len(), b.len())?;
    let mut in_a = [0u32; NUM_CLASSES];
    let mut in_b = [0u32; NUM_CLASSES];
    let mut both = [0u32; NUM_CLASSES];
    for (&x, &y) in a.iter().zip(b) {
        in_a[x as usize] += 1;
        in_b[y as usize] += 1;
        if x == y {
            both[x as usize] += 1;
        }
    }
    Ok(SimScore::from_counts(combine(&in_a, &in_b, &both), mode))
}

fn combine(
    in_a: &[u32; NUM_CLASSES],
    in_b: &[u32; NUM_CLASSES],
    both: &[u32; NUM_CLASSES],
) -> [Iou; NUM_CLASSES] {
    std::array::from_fn(|c| Iou {
        intersection: both[c],
        union: in_a[c] + in_b[c] - both[c],
    })
}

/// Candidate window starts of one width over a sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowScan {
    width: usize,
    stride: usize,
    starts: Vec<usize>,
}

impl WindowScan {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn starts(&self) -> &[usize] {
        &self.starts
    }

    /// Length of the sequence this scan was built for.
    pub fn seq_len(&self) -> usize {
        self.starts.last().map_or(0, |s| s + self.width)
    }
}

/// Starts `0, S, 2S, ...` up to `T - W`, with `T - W` appended if the
/// stride skips it.
pub fn enumerate_windows(len: usize, width: usize, stride: usize) -> Result<WindowScan> {
    if width == 0 {
        return Err(Error::arg("window width must be >= 1"));
    }
    if stride == 0 {
        return Err(Error::arg("stride must be >= 1"));
    }
    if width > len {
        return Err(Error::arg(format!(
            "window width {width} exceeds sequence length {len}"
        )));
    }
    let last = len - width;
    let mut starts: Vec<usize> = (0..=last).step_by(stride).collect();
    if starts.last() != Some(&last) {
        starts.push(last);
    }
    Ok(WindowScan {
        width,
        stride,
        starts,
    })
}

/// Run-length view of a key sequence, reusable across queries.
#[derive(Debug, Clone)]
pub struct RunIndex {
    runs: Vec<Run>,
    len: usize,
}

impl RunIndex {
    pub fn new(classes: &[u8]) -> Self {
        Self {
            runs: runs_of(classes),
            len: classes.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Runs intersecting `[start, start + width)`, clipped and shifted to
    /// window coordinates.
    fn clipped(&self, start: usize, width: usize) -> impl Iterator<Item = Run> + '_ {
        let end = start + width;
        let first = self.runs.partition_point(|r| r.end <= start);
        self.runs[first..]
            .iter()
            .take_while(move |r| r.start < end)
            .map(move |r| Run::new(r.start.max(start) - start, r.end.min(end) - start, r.class))
    }
}

/// Query segment prepared for repeated scoring.
#[derive(Debug, Clone)]
pub struct Query {
    runs: Vec<Run>,
    counts: [u32; NUM_CLASSES],
    width: usize,
}

impl Query {
    pub fn new(classes: &[u8]) -> Self {
        let mut counts = [0u32; NUM_CLASSES];
        for &c in classes {
            counts[c as usize] += 1;
        }
        Self {
            runs: runs_of(classes),
            counts,
            width: classes.len(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Score against the key window starting at `start`. Cost is linear in
    /// the number of runs in the two segments, not in the width.
    pub fn score_at(&self, key: &RunIndex, start: usize, mode: SimMode) -> SimScore {
        let mut key_counts = [0u32; NUM_CLASSES];
        let mut both = [0u32; NUM_CLASSES];
        let mut q = self.runs.iter().peekable();
        for k in key.clipped(start, self.width) {
            key_counts[k.class as usize] += k.len() as u32;
            // both run lists tile [0, width); walk the query runs under k
            while let Some(r) = q.peek() {
                let lo = r.start.max(k.start);
                let hi = r.end.min(k.end);
                if r.class == k.class && hi > lo {
                    both[k.class as usize] += (hi - lo) as u32;
                }
                if r.end <= k.end {
                    q.next();
                } else {
                    break;
                }
            }
        }
        SimScore::from_counts(combine(&self.counts, &key_counts, &both), mode)
    }
}

/// One score per window of `scan`, identical to calling [`sim`] on each
/// window.
pub fn sliding_sim(query: &[u8], key: &[u8], scan: &WindowScan, mode: SimMode) -> Result<Vec<SimScore>> {
    check_widths(query.len(), scan.width())?;
    if scan.seq_len() > key.len() {
        return Err(Error::arg(format!(
            "scan reaches index {} but key has length {}",
            scan.seq_len(),
            key.len()
        )));
    }
    let q = Query::new(query);
    let index = RunIndex::new(key);
    Ok(scan
        .starts()
        .iter()
        .map(|&s| q.score_at(&index, s, mode))
        .collect())
}

/// Cosine similarity of two signal segments; 0 when either is all zeros.
pub fn cosine_signal_sim(a: &[f64], b: &[f64]) -> Result<f64> {
    check_widths(a.len(), b.len())?;
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}
