//! Per-timestep wave labels in dense and run-length form.
//!
//! Class ids are 0-based: background, P wave, QRS complex, T wave. All
//! intervals in this crate are half-open `[start, end)`.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Number of wave classes.
pub const NUM_CLASSES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Wave {
    Background = 0,
    P = 1,
    Qrs = 2,
    T = 3,
}

impl Wave {
    pub const ALL: [Wave; NUM_CLASSES] = [Wave::Background, Wave::P, Wave::Qrs, Wave::T];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Wave> {
        Wave::ALL.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Wave::Background => "bg",
            Wave::P => "p",
            Wave::Qrs => "qrs",
            Wave::T => "t",
        }
    }
}

/// Dense per-timestep class ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelSequence {
    classes: Vec<u8>,
}

impl LabelSequence {
    pub fn new(classes: Vec<u8>) -> Result<Self> {
        if let Some(t) = classes.iter().position(|&c| c as usize >= NUM_CLASSES) {
            return Err(Error::arg(format!(
                "class id {} at index {t} is out of range (C = {NUM_CLASSES})",
                classes[t]
            )));
        }
        Ok(Self { classes })
    }

    pub fn background(len: usize) -> Self {
        Self {
            classes: vec![Wave::Background.id(); len],
        }
    }

    pub(crate) fn from_trusted(classes: Vec<u8>) -> Self {
        debug_assert!(classes.iter().all(|&c| (c as usize) < NUM_CLASSES));
        Self { classes }
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn get(&self, t: usize) -> Option<u8> {
        self.classes.get(t).copied()
    }

    pub fn slice(&self, window: Window) -> &[u8] {
        &self.classes[window.range()]
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.classes
    }

    /// Minimal run list covering the whole sequence.
    pub fn to_runs(&self) -> LabelRuns {
        LabelRuns {
            runs: runs_of(&self.classes),
        }
    }
}

impl FromStr for LabelSequence {
    type Err = Error;

    /// Parses a digit string such as `"00022"`.
    fn from_str(s: &str) -> Result<Self> {
        let classes = s
            .chars()
            .map(|ch| {
                ch.to_digit(10)
                    .map(|d| d as u8)
                    .ok_or_else(|| Error::arg(format!("invalid class digit {ch:?}")))
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(classes)
    }
}

impl fmt::Display for LabelSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.classes {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// One maximal (or not yet validated) run `[start, end)` of a single class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Run {
    pub start: usize,
    pub end: usize,
    pub class: u8,
}

impl Run {
    pub fn new(start: usize, end: usize, class: u8) -> Self {
        Self { start, end, class }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Scans a class slice into maximal runs.
pub(crate) fn runs_of(classes: &[u8]) -> Vec<Run> {
    let mut runs = Vec::new();
    let mut start = 0;
    for t in 1..=classes.len() {
        if t == classes.len() || classes[t] != classes[start] {
            runs.push(Run::new(start, t, classes[start]));
            start = t;
        }
    }
    runs
}

/// Run-length form of a label sequence. Runs must tile `[0, T)` exactly.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelRuns {
    runs: Vec<Run>,
}

impl LabelRuns {
    /// Wraps a run list as read from disk; validated by [`LabelRuns::to_dense`].
    pub fn new(runs: Vec<Run>) -> Self {
        Self { runs }
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn len(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    /// Expands the runs into a dense sequence of length `len`.
    ///
    /// Fails on the first run that overlaps its predecessor, leaves a gap,
    /// is empty, carries an unknown class or runs past `len`, and when the
    /// runs do not reach `len`.
    pub fn to_dense(&self, len: usize) -> Result<LabelSequence> {
        if len == 0 {
            return Err(Error::format("empty sequence"));
        }
        let mut classes = Vec::with_capacity(len);
        for (i, run) in self.runs.iter().enumerate() {
            let cursor = classes.len();
            if run.start > cursor {
                return Err(Error::format(format!(
                    "run {i} ({},{},{}): gap at index {cursor}",
                    run.start, run.end, run.class
                )));
            }
            if run.start < cursor {
                return Err(Error::format(format!(
                    "run {i} ({},{},{}): overlaps previous run at index {}",
                    run.start, run.end, run.class, run.start
                )));
            }
            if run.is_empty() {
                return Err(Error::format(format!(
                    "run {i} ({},{},{}): empty run",
                    run.start, run.end, run.class
                )));
            }
            if run.class as usize >= NUM_CLASSES {
                return Err(Error::format(format!(
                    "run {i} ({},{},{}): class id out of range",
                    run.start, run.end, run.class
                )));
            }
            if run.end > len {
                return Err(Error::format(format!(
                    "run {i} ({},{},{}): extends past sequence length {len}",
                    run.start, run.end, run.class
                )));
            }
            classes.resize(run.end, run.class);
        }
        if classes.len() != len {
            return Err(Error::format(format!(
                "runs cover {} of {len} samples; gap at index {}",
                classes.len(),
                classes.len()
            )));
        }
        Ok(LabelSequence { classes })
    }
}

/// Half-open index interval `[start, start + width)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Window {
    pub start: usize,
    pub width: usize,
}

impl Window {
    /// Checks `width >= 1` and `start + width <= len`.
    pub fn new(start: usize, width: usize, len: usize) -> Result<Self> {
        if width == 0 {
            return Err(Error::arg("window width must be >= 1"));
        }
        if start.checked_add(width).is_none_or(|end| end > len) {
            return Err(Error::arg(format!(
                "window [{start}, {start}+{width}) out of bounds for length {len}"
            )));
        }
        Ok(Self { start, width })
    }

    pub fn end(&self) -> usize {
        self.start + self.width
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.end()
    }

    pub fn contains(&self, t: usize) -> bool {
        self.range().contains(&t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(s: &str) -> LabelSequence {
        s.parse().unwrap()
    }

    #[test]
    fn to_dense_examples() {
        let runs = LabelRuns::new(vec![Run::new(0, 3, 0), Run::new(3, 5, 2)]);
        assert_eq!(runs.to_dense(5).unwrap(), seq("00022"));

        let runs = LabelRuns::new(vec![Run::new(0, 5, 1)]);
        assert_eq!(runs.to_dense(5).unwrap(), seq("11111"));

        let runs = LabelRuns::new(vec![Run::new(0, 3, 0), Run::new(4, 5, 2)]);
        let err = runs.to_dense(5).unwrap_err().to_string();
        assert!(err.contains("gap at index 3"), "{err}");
        assert!(err.contains("run 1"), "{err}");
    }

    #[test]
    fn to_dense_errors() {
        let overlap = LabelRuns::new(vec![Run::new(0, 3, 0), Run::new(2, 5, 2)]);
        assert!(overlap.to_dense(5).unwrap_err().to_string().contains("overlaps"));

        let short = LabelRuns::new(vec![Run::new(0, 3, 0)]);
        assert!(short.to_dense(5).is_err());

        let long = LabelRuns::new(vec![Run::new(0, 6, 0)]);
        assert!(long.to_dense(5).is_err());

        let bad_class = LabelRuns::new(vec![Run::new(0, 5, 7)]);
        assert!(bad_class.to_dense(5).is_err());

        let empty = LabelRuns::new(vec![]);
        assert!(empty.to_dense(0).unwrap_err().to_string().contains("empty sequence"));
    }

    #[test]
    fn to_runs_examples() {
        assert_eq!(
            seq("00022").to_runs().runs(),
            &[Run::new(0, 3, 0), Run::new(3, 5, 2)]
        );
        assert_eq!(seq("1").to_runs().runs(), &[Run::new(0, 1, 1)]);
    }

    #[test]
    fn rejects_bad_class() {
        assert!(LabelSequence::new(vec![0, 4]).is_err());
        assert!("0a".parse::<LabelSequence>().is_err());
    }

    #[test]
    fn window_bounds() {
        assert!(Window::new(0, 5, 5).is_ok());
        assert!(Window::new(1, 5, 5).is_err());
        assert!(Window::new(0, 0, 5).is_err());
        assert_eq!(Window::new(2, 3, 5).unwrap().range(), 2..5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn dense_runs_round_trip(classes in prop::collection::vec(0u8..4, 1..=64)) {
            let dense = LabelSequence::new(classes).unwrap();
            let runs = dense.to_runs();
            prop_assert_eq!(runs.to_dense(dense.len()).unwrap(), dense.clone());
            // canonical: adjacent runs differ, and re-encoding is stable
            for w in runs.runs().windows(2) {
                prop_assert_ne!(w[0].class, w[1].class);
            }
            prop_assert_eq!(runs.to_dense(dense.len()).unwrap().to_runs(), runs);
        }
    }
}
