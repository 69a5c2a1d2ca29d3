//! Slow reference implementations used to check the fast paths.
//!
//! Nothing here shares code with [`crate::similarity`] or
//! [`crate::fusion`]: IoU is computed from explicit position sets, scores
//! are compared as reduced fractions, and window starts are enumerated
//! from scratch.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::labels::NUM_CLASSES;
use crate::rng::{stream, SplitMix64};
use crate::similarity::{
    enumerate_windows, iou_class, sim, sliding_sim, Iou, SimMode, SimScore,
};
use crate::fusion::{search_best_key, Criterion, KeyPool, PoolEntry};

fn positions(seq: &[u8], c: u8) -> BTreeSet<usize> {
    seq.iter()
        .enumerate()
        .filter(|&(_, &x)| x == c)
        .map(|(i, _)| i)
        .collect()
}

/// `|A ∩ B|` and `|A ∪ B|` for the position sets of class `c`.
pub fn naive_iou_class(a: &[u8], b: &[u8], c: u8) -> Iou {
    assert_eq!(a.len(), b.len(), "segment widths differ");
    let pa = positions(a, c);
    let pb = positions(b, c);
    Iou {
        intersection: pa.intersection(&pb).count() as u32,
        union: pa.union(&pb).count() as u32,
    }
}

pub fn naive_sim(a: &[u8], b: &[u8], mode: SimMode) -> SimScore {
    let counts = std::array::from_fn(|c| naive_iou_class(a, b, c as u8));
    SimScore::from_counts(counts, mode)
}

/// Non-negative fraction in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fraction {
    pub num: u128,
    pub den: u128,
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Fraction {
    pub fn new(num: u128, den: u128) -> Self {
        assert!(den > 0);
        let g = gcd(num, den).max(1);
        Self { num: num / g, den: den / g }
    }

    fn add(self, other: Self) -> Self {
        Self::new(self.num * other.den + other.num * self.den, self.den * other.den)
    }
}

impl Ord for Fraction {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

impl PartialOrd for Fraction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The class-averaged IoU as an exact fraction, straight from the
/// definition.
pub fn exact_sim(a: &[u8], b: &[u8], mode: SimMode) -> Fraction {
    let mut total = Fraction::new(0, 1);
    let mut n = 0u128;
    for c in 0..NUM_CLASSES as u8 {
        let iou = naive_iou_class(a, b, c);
        match (iou.union, mode) {
            (0, SimMode::PresentClasses) => continue,
            (0, SimMode::Literal) => total = total.add(Fraction::new(1, 1)),
            (u, _) => total = total.add(Fraction::new(iou.intersection as u128, u as u128)),
        }
        n += 1;
    }
    if n == 0 {
        return Fraction::new(1, 1);
    }
    Fraction::new(total.num, total.den * n)
}

/// `0, stride, 2 stride, ...` while the window fits, then `len - width` if
/// it was skipped.
pub fn naive_starts(len: usize, width: usize, stride: usize) -> Vec<usize> {
    let mut starts = Vec::new();
    let mut s = 0;
    while s + width <= len {
        starts.push(s);
        s += stride;
    }
    if starts.last() != Some(&(len - width)) {
        starts.push(len - width);
    }
    starts
}

/// Exhaustive argmax over every pool entry and window start, keeping the
/// first maximum in `(j, start)` order.
pub fn brute_force_search(query: &[u8], pool: &[&[u8]], stride: usize, mode: SimMode) -> (usize, usize, Fraction) {
    let w = query.len();
    let mut best: Option<(usize, usize, Fraction)> = None;
    for (j, key) in pool.iter().enumerate() {
        for s in naive_starts(key.len(), w, stride) {
            let v = exact_sim(query, &key[s..s + w], mode);
            if best.is_none_or(|(_, _, b)| v > b) {
                best = Some((j, s, v));
            }
        }
    }
    best.expect("pool has at least one window")
}

/// Label sequence made of runs with random lengths in `1..=max_run`.
pub fn random_runs(rng: &mut SplitMix64, len: usize, max_run: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let class = rng.below(NUM_CLASSES as u64) as u8;
        let run = 1 + rng.index(max_run);
        out.extend(std::iter::repeat_n(class, run.min(len - out.len())));
    }
    out
}

/// Labels drawn i.i.d. or as runs, chosen at random.
pub fn random_labels(rng: &mut SplitMix64, len: usize) -> Vec<u8> {
    if rng.below(4) == 0 {
        (0..len).map(|_| rng.below(NUM_CLASSES as u64) as u8).collect()
    } else {
        let max_run = 1 + rng.index(len.clamp(1, 40));
        random_runs(rng, len, max_run)
    }
}

/// One random search problem: a query cut from a random sequence and a
/// pool of sequences of a shared length.
#[derive(Debug, Clone)]
pub struct SearchInstance {
    pub query: Vec<u8>,
    pub pool: Vec<Vec<u8>>,
    pub stride: usize,
    pub mode: SimMode,
}

impl SearchInstance {
    pub fn random(rng: &mut SplitMix64, max_len: usize, max_pool: usize, max_width: usize) -> Self {
        let len = 1 + rng.index(max_len);
        let width = 1 + rng.index(max_width.min(len));
        let stride = match rng.below(3) {
            0 => 1,
            1 => (width / 2).max(1),
            _ => 1 + rng.index(width),
        };
        let n = 1 + rng.index(max_pool);
        let pool: Vec<Vec<u8>> = (0..n).map(|_| random_labels(rng, len)).collect();
        // half the time the query is a slice of a pool entry, so exact
        // matches and ties show up
        let query = if rng.below(2) == 0 {
            let j = rng.index(n);
            let s = rng.index(len - width + 1);
            pool[j][s..s + width].to_vec()
        } else {
            random_labels(rng, width)
        };
        let mode = if rng.below(4) == 0 { SimMode::Literal } else { SimMode::PresentClasses };
        Self { query, pool, stride, mode }
    }

    /// `None` when the fast search agrees with brute force, otherwise a
    /// description of the disagreement.
    pub fn check_search(&self) -> Option<String> {
        let refs: Vec<&[u8]> = self.pool.iter().map(Vec::as_slice).collect();
        let (bj, bs, _) = brute_force_search(&self.query, &refs, self.stride, self.mode);
        let entries = refs.iter().map(|l| PoolEntry { labels: l, signal: None }).collect();
        let found = KeyPool::new(entries).and_then(|pool| {
            search_best_key(
                &self.query,
                None,
                &pool,
                self.stride,
                Criterion::Pattern,
                self.mode,
                &mut SplitMix64::new(0),
            )
        });
        match found {
            Ok(m) if (m.source, m.key_start) == (bj, bs) => None,
            Ok(m) => Some(format!(
                "search returned ({}, {}), brute force ({bj}, {bs})",
                m.source, m.key_start
            )),
            Err(e) => Some(format!("search failed: {e}")),
        }
    }

    /// Compares `sliding_sim`, `sim` and `iou_class` against the naive
    /// counts for every window of every pool entry.
    pub fn check_scores(&self) -> Option<String> {
        let w = self.query.len();
        for (j, key) in self.pool.iter().enumerate() {
            let scan = match enumerate_windows(key.len(), w, self.stride) {
                Ok(s) => s,
                Err(e) => return Some(format!("entry {j}: {e}")),
            };
            if scan.starts() != naive_starts(key.len(), w, self.stride) {
                return Some(format!("entry {j}: window starts differ"));
            }
            let fast = match sliding_sim(&self.query, key, &scan, self.mode) {
                Ok(v) => v,
                Err(e) => return Some(format!("entry {j}: {e}")),
            };
            for (&s, got) in scan.starts().iter().zip(&fast) {
                let slice = &key[s..s + w];
                let want = naive_sim(&self.query, slice, self.mode);
                if *got != want {
                    return Some(format!("entry {j} start {s}: sliding counts {got:?}, naive {want:?}"));
                }
                if sim(&self.query, slice, self.mode).ok() != Some(want) {
                    return Some(format!("entry {j} start {s}: sim disagrees with naive counts"));
                }
                for c in 0..NUM_CLASSES as u8 {
                    let naive = naive_iou_class(&self.query, slice, c);
                    let fast = iou_class(&self.query, slice, c).ok().flatten();
                    if fast != (naive.union > 0).then_some(naive) {
                        return Some(format!("entry {j} start {s}: iou_class({c}) disagrees"));
                    }
                }
            }
        }
        None
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OracleReport {
    pub trials: usize,
    pub search_mismatches: Vec<String>,
    pub score_mismatches: Vec<String>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.search_mismatches.is_empty() && self.score_mismatches.is_empty()
    }
}

/// Runs `trials` random instances (T <= 200, pool <= 4, W <= 64) through
/// both checks. Trial `i` uses its own stream, so a failure can be replayed
/// on its own.
pub fn run_oracle_suite(seed: u64, trials: usize) -> OracleReport {
    let mut report = OracleReport {
        trials,
        ..Default::default()
    };
    for i in 0..trials {
        let mut rng = stream(seed, &[i as u64]);
        let inst = SearchInstance::random(&mut rng, 200, 4, 64);
        if let Some(m) = inst.check_search() {
            report.search_mismatches.push(format!("trial {i}: {m}"));
        }
        if let Some(m) = inst.check_scores() {
            report.score_mismatches.push(format!("trial {i}: {m}"));
        }
    }
    report
}
