use crate::error::{Error, Result};
use crate::labels::{LabelSequence, Window};
use crate::probs::ProbabilityMap;

/// Pastes `source[s_k .. s_k + width]` over `target[s_q .. s_q + width]`,
/// signal and labels alike. Everything outside the query window is the
/// target, untouched.
pub fn splice(
    target_signal: &[f64],
    target_labels: &LabelSequence,
    source_signal: &[f64],
    source_labels: &LabelSequence,
    s_q: usize,
    s_k: usize,
    width: usize,
) -> Result<(Vec<f64>, LabelSequence)> {
    if target_signal.len() != target_labels.len() {
        return Err(Error::arg(format!(
            "target has {} samples but {} labels",
            target_signal.len(),
            target_labels.len()
        )));
    }
    if source_signal.len() != source_labels.len() {
        return Err(Error::arg(format!(
            "source has {} samples but {} labels",
            source_signal.len(),
            source_labels.len()
        )));
    }
    let q = Window::new(s_q, width, target_signal.len())?;
    let k = Window::new(s_k, width, source_signal.len())?;

    let mut signal = target_signal.to_vec();
    signal[q.range()].copy_from_slice(&source_signal[k.range()]);
    let mut labels = target_labels.as_slice().to_vec();
    labels[q.range()].copy_from_slice(&source_labels.as_slice()[k.range()]);
    Ok((signal, LabelSequence::from_trusted(labels)))
}

/// Mean over the window of the per-timestep maximum class probability.
pub fn segment_confidence(probs: &ProbabilityMap, start: usize, width: usize) -> Result<f64> {
    let w = Window::new(start, width, probs.len())?;
    // shifted mean: exact when every maximum is equal
    let base = probs.max_prob(start);
    let dev: f64 = w.range().map(|t| probs.max_prob(t) - base).sum();
    Ok(base + dev / width as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(s: &str) -> LabelSequence {
        s.parse().unwrap()
    }

    #[test]
    fn self_splice_is_identity() {
        let sig: Vec<f64> = (0..8).map(f64::from).collect();
        let lab = l("00122330");
        for w in 1..=8 {
            for s in 0..=8 - w {
                let (x, y) = splice(&sig, &lab, &sig, &lab, s, s, w).unwrap();
                assert_eq!(x, sig);
                assert_eq!(y, lab);
            }
        }
    }

    #[test]
    fn full_replacement() {
        let (x, y) = splice(&[0.0; 4], &l("0000"), &[1.0, 2.0, 3.0, 4.0], &l("1223"), 0, 0, 4).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(y, l("1223"));
    }

    #[test]
    fn index_arithmetic() {
        let target = l("00022000");
        let source = l("11111111");
        let src_sig: Vec<f64> = (10..18).map(f64::from).collect();
        let (x, y) = splice(&[0.0; 8], &target, &src_sig, &source, 2, 0, 3).unwrap();
        assert_eq!(y.to_string(), "00111000");
        assert_eq!(x, vec![0.0, 0.0, 10.0, 11.0, 12.0, 0.0, 0.0, 0.0]);

        let (x, _) = splice(&[0.0; 8], &target, &src_sig, &source, 0, 5, 3).unwrap();
        assert_eq!(&x[..3], &[15.0, 16.0, 17.0]);
    }

    #[test]
    fn out_of_bounds() {
        let lab = l("0000");
        assert!(splice(&[0.0; 4], &lab, &[0.0; 4], &lab, 2, 0, 3).is_err());
        assert!(splice(&[0.0; 4], &lab, &[0.0; 4], &lab, 0, 2, 3).is_err());
        assert!(splice(&[0.0; 3], &lab, &[0.0; 4], &lab, 0, 0, 2).is_err());
    }

    #[test]
    fn confidence_examples() {
        let labels = l("0123");
        assert_eq!(segment_confidence(&ProbabilityMap::one_hot(&labels), 0, 4).unwrap(), 1.0);
        let uniform = ProbabilityMap::new(vec![0.25; 16]).unwrap();
        assert_eq!(segment_confidence(&uniform, 1, 3).unwrap(), 0.25);
        let map = ProbabilityMap::new(vec![0.9, 0.1, 0.0, 0.0, 0.1, 0.7, 0.2, 0.0]).unwrap();
        assert!((segment_confidence(&map, 0, 2).unwrap() - 0.8).abs() < 1e-15);
        assert!(segment_confidence(&map, 1, 2).is_err());
    }
}
