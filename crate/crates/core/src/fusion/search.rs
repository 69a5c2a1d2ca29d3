use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::similarity::{cosine_signal_sim, enumerate_windows, sim, Query, RunIndex, SimMode, SimScore, WindowScan};

/// How the key segment is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Criterion {
    /// Highest class-averaged IoU in label space.
    #[default]
    Pattern,
    /// Highest cosine similarity in signal space.
    Signal,
    /// Uniform draw over the scan.
    Random,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::Pattern => "pattern",
            Criterion::Signal => "signal",
            Criterion::Random => "random",
        }
    }
}

/// One sequence in the search pool.
#[derive(Debug, Clone, Copy)]
pub struct PoolEntry<'a> {
    pub labels: &'a [u8],
    pub signal: Option<&'a [f64]>,
}

/// Search pool with per-entry run indexes, built once and reused for every
/// query of a batch.
#[derive(Debug, Clone)]
pub struct KeyPool<'a> {
    entries: Vec<PoolEntry<'a>>,
    index: Vec<RunIndex>,
}

impl<'a> KeyPool<'a> {
    pub fn new(entries: Vec<PoolEntry<'a>>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::arg("search pool is empty"));
        }
        for (j, e) in entries.iter().enumerate() {
            if let Some(s) = e.signal {
                if s.len() != e.labels.len() {
                    return Err(Error::arg(format!(
                        "pool entry {j}: {} samples for {} labels",
                        s.len(),
                        e.labels.len()
                    )));
                }
            }
        }
        let index = entries.iter().map(|e| RunIndex::new(e.labels)).collect();
        Ok(Self { entries, index })
    }

    pub fn entries(&self) -> &[PoolEntry<'a>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn scans(&self, width: usize, stride: usize) -> Result<Vec<WindowScan>> {
        self.entries
            .iter()
            .enumerate()
            .map(|(j, e)| {
                enumerate_windows(e.labels.len(), width, stride)
                    .map_err(|err| Error::arg(format!("pool entry {j}: {err}")))
            })
            .collect()
    }
}

/// Winning key: pool index, window start and its pattern score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyMatch {
    pub source: usize,
    pub key_start: usize,
    pub score: SimScore,
    /// Cosine similarity of the signal segments (signal criterion only).
    pub signal_similarity: Option<f64>,
}

/// Finds the key window in `pool` that best matches the query.
///
/// Pattern and signal criteria take the argmax over every `(j, start)` of
/// the stride-`stride` scan, ties going to the lowest `(j, start)`. The
/// random criterion draws `(j, start)` uniformly from the same scan using
/// `rng`, which is otherwise untouched.
pub fn search_best_key(
    query_labels: &[u8],
    query_signal: Option<&[f64]>,
    pool: &KeyPool<'_>,
    stride: usize,
    criterion: Criterion,
    mode: SimMode,
    rng: &mut SplitMix64,
) -> Result<KeyMatch> {
    let width = query_labels.len();
    let scans = pool.scans(width, stride)?;
    match criterion {
        Criterion::Pattern => {
            let query = Query::new(query_labels);
            let mut best: Option<KeyMatch> = None;
            for (j, scan) in scans.iter().enumerate() {
                for &start in scan.starts() {
                    let score = query.score_at(&pool.index[j], start, mode);
                    let better = best
                        .as_ref()
                        .is_none_or(|b| score.cmp_value(&b.score) == Ordering::Greater);
                    if better {
                        best = Some(KeyMatch {
                            source: j,
                            key_start: start,
                            score,
                            signal_similarity: None,
                        });
                    }
                }
            }
            Ok(best.expect("non-empty pool has at least one window"))
        }
        Criterion::Signal => {
            let query_signal = query_signal
                .ok_or_else(|| Error::arg("signal criterion needs the query signal"))?;
            if query_signal.len() != width {
                return Err(Error::arg(format!(
                    "query signal width {} differs from label width {width}",
                    query_signal.len()
                )));
            }
            let mut best: Option<(usize, usize, f64)> = None;
            for (j, scan) in scans.iter().enumerate() {
                let signal = pool.entries[j]
                    .signal
                    .ok_or_else(|| Error::arg(format!("signal criterion: pool entry {j} has no signal")))?;
                for &start in scan.starts() {
                    let cos = cosine_signal_sim(query_signal, &signal[start..start + width])?;
                    if best.is_none_or(|(_, _, b)| cos > b) {
                        best = Some((j, start, cos));
                    }
                }
            }
            let (j, start, cos) = best.expect("non-empty pool has at least one window");
            let score = sim(query_labels, &pool.entries[j].labels[start..start + width], mode)?;
            Ok(KeyMatch {
                source: j,
                key_start: start,
                score,
                signal_similarity: Some(cos),
            })
        }
        Criterion::Random => {
            let total: usize = scans.iter().map(|s| s.starts().len()).sum();
            let mut pick = rng.index(total);
            let mut j = 0;
            while pick >= scans[j].starts().len() {
                pick -= scans[j].starts().len();
                j += 1;
            }
            let start = scans[j].starts()[pick];
            let score = sim(query_labels, &pool.entries[j].labels[start..start + width], mode)?;
            Ok(KeyMatch {
                source: j,
                key_start: start,
                score,
                signal_similarity: None,
            })
        }
    }
}
