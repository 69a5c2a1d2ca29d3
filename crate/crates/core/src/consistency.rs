//! Cardiac-cycle validity: a T wave must be preceded by a QRS complex.

use crate::error::{Error, Result};
use crate::labels::{LabelSequence, Wave};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationReason {
    NoPrecedingQrs,
}

/// A maximal T run `[start, end)` that breaks the cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Violation {
    pub start: usize,
    pub end: usize,
    pub reason: ViolationReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConsistencyOptions {
    /// Skip the check for the first non-background run when it is a T wave;
    /// recordings may start mid-beat.
    pub start_exemption: bool,
}

impl Default for ConsistencyOptions {
    fn default() -> Self {
        Self {
            start_exemption: true,
        }
    }
}

/// T runs with no QRS run since the previous T run (or the sequence start).
/// Background and P runs do not affect the scan.
pub fn find_violations(labels: &LabelSequence, opts: ConsistencyOptions) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut qrs_since_t = false;
    let mut first_wave = true;
    for run in labels.to_runs().runs() {
        match Wave::from_id(run.class) {
            Some(Wave::Qrs) => qrs_since_t = true,
            Some(Wave::T) => {
                let exempt = first_wave && opts.start_exemption;
                if !qrs_since_t && !exempt {
                    violations.push(Violation {
                        start: run.start,
                        end: run.end,
                        reason: ViolationReason::NoPrecedingQrs,
                    });
                }
                qrs_since_t = false;
            }
            _ => {}
        }
        if run.class != Wave::Background.id() {
            first_wave = false;
        }
    }
    violations
}

/// Fraction of sequences without violations.
pub fn consistency_ratio(batch: &[LabelSequence], opts: ConsistencyOptions) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::arg("consistency ratio of an empty batch"));
    }
    let clean = batch
        .iter()
        .filter(|l| find_violations(l, opts).is_empty())
        .count();
    Ok(clean as f64 / batch.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn l(s: &str) -> LabelSequence {
        s.parse().unwrap()
    }

    fn v(s: &str) -> Vec<(usize, usize)> {
        find_violations(&l(s), ConsistencyOptions::default())
            .into_iter()
            .map(|v| (v.start, v.end))
            .collect()
    }

    #[test]
    fn examples() {
        assert!(v("00220330").is_empty());
        assert_eq!(v("00110330"), vec![(5, 7)]);
        assert!(v("33002233").is_empty());
    }

    #[test]
    fn consecutive_t_runs_need_their_own_qrs() {
        assert_eq!(v("0220330330"), vec![(7, 9)]);
        assert!(v("02203302330").is_empty());
    }

    #[test]
    fn literal_rule_flags_leading_t() {
        let literal = ConsistencyOptions {
            start_exemption: false,
        };
        assert_eq!(find_violations(&l("33002233"), literal).len(), 1);
        assert_eq!(find_violations(&l("00330"), literal).len(), 1);
        // leading P means the T run is not the first wave run
        assert_eq!(v("1033"), vec![(2, 4)]);
    }

    #[test]
    fn ratio() {
        let batch = [l("00220330"), l("00110330")];
        let opts = ConsistencyOptions::default();
        assert_eq!(consistency_ratio(&batch, opts).unwrap(), 0.5);
        assert_eq!(consistency_ratio(&batch[..1], opts).unwrap(), 1.0);
        assert!(consistency_ratio(&[], opts).is_err());
        let swapped = [batch[1].clone(), batch[0].clone()];
        assert_eq!(consistency_ratio(&swapped, opts).unwrap(), 0.5);
    }

    proptest! {
        #[test]
        fn no_t_runs_no_violations(classes in prop::collection::vec(0u8..3, 1..64)) {
            let labels = LabelSequence::new(classes).unwrap();
            prop_assert!(find_violations(&labels, ConsistencyOptions::default()).is_empty());
        }

        #[test]
        fn qrs_before_violation_fixes_exactly_it(
            classes in prop::collection::vec(0u8..4, 1..64),
            exempt in any::<bool>(),
        ) {
            let opts = ConsistencyOptions { start_exemption: exempt };
            let labels = LabelSequence::new(classes.clone()).unwrap();
            let before = find_violations(&labels, opts);
            if let Some(target) = before.first() {
                let mut fixed = classes[..target.start].to_vec();
                fixed.push(Wave::Qrs.id());
                fixed.extend_from_slice(&classes[target.start..]);
                let after = find_violations(&LabelSequence::new(fixed).unwrap(), opts);
                let shifted: Vec<(usize, usize)> = before[1..]
                    .iter()
                    .map(|v| (v.start + 1, v.end + 1))
                    .collect();
                let got: Vec<(usize, usize)> = after.iter().map(|v| (v.start, v.end)).collect();
                prop_assert_eq!(got, shifted);
            }
        }
    }
}
