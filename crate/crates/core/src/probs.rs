use crate::error::{Error, Result};
use crate::labels::{LabelSequence, NUM_CLASSES};

/// Tolerance on the per-timestep sum of a probability vector.
pub const SUM_TOLERANCE: f64 = 1e-6;

/// Per-timestep class distribution, stored row-major `T x C`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    data: Vec<f64>,
}

impl ProbabilityMap {
    /// Validates a flat row-major buffer of `T * C` probabilities.
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::arg("empty probability map"));
        }
        if !data.len().is_multiple_of(NUM_CLASSES) {
            return Err(Error::arg(format!(
                "probability buffer of {} values is not a multiple of C = {NUM_CLASSES}",
                data.len()
            )));
        }
        for (t, row) in data.chunks_exact(NUM_CLASSES).enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::arg(format!("probability outside [0, 1] at timestep {t}")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(Error::arg(format!(
                    "probabilities at timestep {t} sum to {sum}, expected 1"
                )));
            }
        }
        Ok(Self { data })
    }

    /// One-hot map of a label sequence.
    pub fn one_hot(labels: &LabelSequence) -> Self {
        Self::sharpened(labels, 1.0)
    }

    /// `sharpness` on the labelled class, the rest spread evenly.
    pub(crate) fn sharpened(labels: &LabelSequence, sharpness: f64) -> Self {
        let rest = (1.0 - sharpness) / (NUM_CLASSES - 1) as f64;
        let mut data = Vec::with_capacity(labels.len() * NUM_CLASSES);
        for &c in labels.as_slice() {
            data.extend((0..NUM_CLASSES).map(|k| if k == c as usize { sharpness } else { rest }));
        }
        Self { data }
    }

    pub fn len(&self) -> usize {
        self.data.len() / NUM_CLASSES
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * NUM_CLASSES..(t + 1) * NUM_CLASSES]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(NUM_CLASSES)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Largest class probability at `t`.
    pub fn max_prob(&self, t: usize) -> f64 {
        self.row(t).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Per-timestep argmax; ties go to the lowest class id.
    pub fn argmax_labels(&self) -> LabelSequence {
        let classes = self
            .rows()
            .map(|row| {
                let mut best = 0;
                for k in 1..row.len() {
                    if row[k] > row[best] {
                        best = k;
                    }
                }
                best as u8
            })
            .collect();
        LabelSequence::from_trusted(classes)
    }

    /// Rows picked by index, e.g. for nearest-index resampling.
    pub fn gather(&self, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut data = Vec::new();
        for t in indices {
            data.extend_from_slice(self.row(t));
        }
        Self { data }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_hot_argmax() {
        let labels = LabelSequence::new(vec![2; 10]).unwrap();
        let map = ProbabilityMap::one_hot(&labels);
        assert_eq!(map.argmax_labels(), labels);
    }

    #[test]
    fn uniform_ties_go_to_background() {
        let map = ProbabilityMap::new(vec![0.25; 4 * 6]).unwrap();
        assert_eq!(map.argmax_labels(), LabelSequence::background(6));
    }

    #[test]
    fn validation() {
        assert!(ProbabilityMap::new(vec![0.5, 0.5, 0.0]).is_err());
        assert!(ProbabilityMap::new(vec![0.5, 0.5, 0.5, 0.0]).is_err());
        assert!(ProbabilityMap::new(vec![1.5, -0.5, 0.0, 0.0]).is_err());
        assert!(ProbabilityMap::new(vec![]).is_err());
    }

    fn arb_map(max_len: usize) -> impl Strategy<Value = ProbabilityMap> {
        prop::collection::vec(prop::array::uniform4(0u32..5), 1..=max_len).prop_map(|rows| {
            let data = rows
                .into_iter()
                .flat_map(|r| {
                    let r = if r.iter().all(|&x| x == 0) { [1, 0, 0, 0] } else { r };
                    let s: u32 = r.iter().sum();
                    r.map(|x| x as f64 / s as f64)
                })
                .collect();
            ProbabilityMap::new(data).unwrap()
        })
    }

    proptest! {
        #[test]
        fn argmax_matches_naive_scan(map in arb_map(32)) {
            let labels = map.argmax_labels();
            for t in 0..map.len() {
                let row = map.row(t);
                let max = row.iter().copied().fold(f64::MIN, f64::max);
                let naive = row.iter().position(|&p| p == max).unwrap();
                prop_assert_eq!(labels.get(t).unwrap() as usize, naive);
            }
        }
    }
}
