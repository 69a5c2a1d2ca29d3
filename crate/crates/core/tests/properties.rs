use cardiomix_core::consistency::{consistency_ratio, find_violations, ConsistencyOptions};
use cardiomix_core::metrics::{extract_fiducials, miou};
use cardiomix_core::preprocess::bandpass;
use cardiomix_core::rng::SplitMix64;
use cardiomix_core::synth::{synth_ecg, SynthParams};
use cardiomix_core::{EcgRecord, LabelRuns, LabelSequence, ProbabilityMap, Run, Wave, NUM_CLASSES};
use proptest::prelude::*;

fn labels(max_len: usize) -> impl Strategy<Value = LabelSequence> {
    prop::collection::vec((0u8..NUM_CLASSES as u8, 1usize..12), 1..max_len).prop_map(|runs| {
        let classes = runs
            .into_iter()
            .flat_map(|(c, n)| std::iter::repeat_n(c, n))
            .collect();
        LabelSequence::new(classes).unwrap()
    })
}

fn pairs(max_pairs: usize) -> impl Strategy<Value = Vec<(LabelSequence, LabelSequence)>> {
    prop::collection::vec(
        (1usize..80).prop_flat_map(|n| {
            (
                prop::collection::vec(0u8..NUM_CLASSES as u8, n),
                prop::collection::vec(0u8..NUM_CLASSES as u8, n),
            )
        }),
        1..max_pairs,
    )
    .prop_map(|v| {
        v.into_iter()
            .map(|(a, b)| (LabelSequence::new(a).unwrap(), LabelSequence::new(b).unwrap()))
            .collect()
    })
}

/// Classes of the non-background runs, in order.
fn wave_order(l: &LabelSequence) -> Vec<u8> {
    l.to_runs()
        .runs()
        .iter()
        .map(|r| r.class)
        .filter(|&c| c != Wave::Background.id())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn canonical_runs_round_trip(l in labels(40)) {
        let runs = l.to_runs();
        let merged = runs.runs().windows(2).all(|w| w[0].class != w[1].class && w[0].end == w[1].start);
        prop_assert!(merged);
        let dense = runs.to_dense(l.len()).unwrap();
        prop_assert_eq!(&dense, &l);
        prop_assert_eq!(dense.to_runs(), runs);
    }

    #[test]
    fn split_runs_densify_the_same(l in labels(40), cut in any::<prop::sample::Index>()) {
        // a non-canonical list (one run split in two) still densifies to the same labels
        let mut runs = l.to_runs().runs().to_vec();
        let i = cut.index(runs.len());
        let r = runs[i];
        if r.len() > 1 {
            let mid = r.start + r.len() / 2;
            runs.splice(i..=i, [Run::new(r.start, mid, r.class), Run::new(mid, r.end, r.class)]);
        }
        prop_assert_eq!(LabelRuns::new(runs).to_dense(l.len()).unwrap(), l);
    }

    #[test]
    fn argmax_commutes_with_reordering(rows in prop::collection::vec(prop::collection::vec(0u8..5, NUM_CLASSES), 1..40),
                                        seed in any::<u64>()) {
        let flat: Vec<f64> = rows
            .iter()
            .flat_map(|r| {
                let total: f64 = r.iter().map(|&x| x as f64).sum();
                r.iter().map(move |&x| if total == 0.0 { 0.25 } else { x as f64 / total }).collect::<Vec<_>>()
            })
            .collect();
        let map = ProbabilityMap::new(flat).unwrap();
        let mut order: Vec<usize> = (0..map.len()).collect();
        let mut rng = SplitMix64::new(seed);
        for i in (1..order.len()).rev() {
            order.swap(i, rng.index(i + 1));
        }
        let whole = map.argmax_labels();
        let permuted = map.gather(order.iter().copied()).argmax_labels();
        let expect: Vec<u8> = order.iter().map(|&t| whole.as_slice()[t]).collect();
        prop_assert_eq!(permuted.as_slice(), &expect[..]);
        prop_assert_eq!(map.argmax_labels(), whole);
    }

    #[test]
    fn ratio_ignores_batch_order(batch in prop::collection::vec(labels(30), 1..12), seed in any::<u64>()) {
        let opts = ConsistencyOptions::default();
        let a = consistency_ratio(&batch, opts).unwrap();
        let mut shuffled = batch.clone();
        let mut rng = SplitMix64::new(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.index(i + 1));
        }
        prop_assert_eq!(a, consistency_ratio(&shuffled, opts).unwrap());
    }

    #[test]
    fn miou_symmetric_and_order_free(ps in pairs(8)) {
        let (preds, gts): (Vec<_>, Vec<_>) = ps.iter().cloned().unzip();
        let m = miou(&preds, &gts).unwrap();
        prop_assert_eq!(m, miou(&gts, &preds).unwrap());
        let (rp, rg): (Vec<_>, Vec<_>) = ps.iter().rev().cloned().unzip();
        prop_assert_eq!(m, miou(&rp, &rg).unwrap());
        prop_assert!((0.0..=1.0).contains(&m));
        prop_assert_eq!(miou(&gts, &gts).unwrap(), 1.0);
    }

    #[test]
    fn fiducials_are_ordered(l in labels(60)) {
        let beats = extract_fiducials(&l);
        for b in &beats {
            if let Some(p) = b.p_onset {
                prop_assert!(p < b.qrs_onset);
            }
            prop_assert!(b.qrs_onset < b.qrs_offset);
            if let Some(t) = b.t_offset {
                prop_assert!(b.qrs_offset <= t);
            }
        }
        prop_assert!(beats.windows(2).all(|w| w[0].qrs_onset < w[1].qrs_onset));
        prop_assert_eq!(beats.len(), l.to_runs().runs().iter().filter(|r| r.class == Wave::Qrs.id()).count());
    }

    #[test]
    fn bandpass_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut rng = SplitMix64::new(seed);
        let x: Vec<f64> = (0..1000).map(|_| rng.unit() - 0.5).collect();
        let y: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.05).sin() + 2.0).collect();
        let mix: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
        let f = |s: &[f64]| bandpass(&EcgRecord::new("r", "II", 250, s.to_vec()).unwrap(), 0.67, 40.0).unwrap();
        let (fx, fy, fm) = (f(&x), f(&y), f(&mix));
        let want: Vec<f64> = fx.samples().iter().zip(fy.samples()).map(|(u, v)| a * u + b * v).collect();
        let scale = want.iter().map(|v| v.abs()).fold(1e-12, f64::max);
        let err = fm.samples().iter().zip(&want).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-6 * scale, "err {} scale {}", err, scale);
    }

    #[test]
    fn synthetic_beats_are_valid(bpm in 40.0f64..150.0, phase in 0.0f64..1.0,
                                 rate in prop::sample::select(vec![100u32, 250, 360, 500]), seed in any::<u64>()) {
        let params = SynthParams { heart_rate_bpm: bpm, phase, sample_rate: rate, noise_std: 0.05, ..Default::default() };
        let (rec, l) = synth_ecg("s", &params, &mut SplitMix64::new(seed)).unwrap();
        prop_assert_eq!(rec.len(), 10 * rate as usize);
        prop_assert_eq!(l.len(), rec.len());
        prop_assert!(find_violations(&l, ConsistencyOptions::default()).is_empty());
        let order = wave_order(&l);
        let next = |c: u8| match Wave::from_id(c).unwrap() {
            Wave::P => Wave::Qrs.id(),
            Wave::Qrs => Wave::T.id(),
            _ => Wave::P.id(),
        };
        prop_assert!(order.windows(2).all(|w| w[1] == next(w[0])), "{:?}", order);
    }
}
