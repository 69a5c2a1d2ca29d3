use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cardiomix_core::batch::{fuse_samples, outcome_line, outcomes_header, FuseMode};
use cardiomix_core::consistency::{find_violations, ConsistencyOptions};
use cardiomix_core::fusion::{Direction, FusionParams, LabeledSample, UnlabeledSample};
use cardiomix_core::io::{load_dataset, save_dataset, Dataset, DatasetRecord, Split};
use cardiomix_core::metrics::{ConfusionMatrix, IntervalAccumulator};
use cardiomix_core::oracle::run_oracle_suite;
use cardiomix_core::preprocess::{preprocess_pipeline, preprocess_probs, PreprocessConfig};
use cardiomix_core::rng::stream;
use cardiomix_core::similarity::SimMode;
use cardiomix_core::synth::{corrupt_labels, synth_ecg, CorruptParams, SynthParams};
use cardiomix_core::{EcgRecord, Error, LabelSequence, Wave, NUM_CLASSES};
use rayon::prelude::*;

use super::{
    ConsistencyArgs, CorruptArgs, EvaluateArgs, Failure, FuseArgs, OracleArgs, PreprocessArgs, SynthArgs,
};

type Outcome = Result<(), Failure>;

fn argument(e: impl ToString) -> Failure {
    Failure::Argument(e.to_string())
}

fn data(e: impl ToString) -> Failure {
    Failure::Data(e.to_string())
}

fn load(path: &Path) -> Result<Dataset, Failure> {
    load_dataset(path).map_err(data)
}

fn save(dir: &Path, records: &[DatasetRecord]) -> Outcome {
    save_dataset(dir, records).map(|_| ()).map_err(data)
}

fn write_csv(path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| data(format!("{}: {e}", dir.display())))?;
            }
            fs::write(p, text).map_err(|e| data(format!("{}: {e}", p.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// A prediction is the argmax of the record's probabilities when it has
/// them, otherwise its labels.
fn prediction_of(rec: &DatasetRecord) -> Result<LabelSequence, Failure> {
    rec.probs
        .as_ref()
        .map(|p| p.argmax_labels())
        .or_else(|| rec.labels.clone())
        .ok_or_else(|| data(format!("record {}: no labels or probabilities", rec.id())))
}

fn labels_of(rec: &DatasetRecord) -> Result<LabelSequence, Failure> {
    rec.best_labels()
        .ok_or_else(|| data(format!("record {}: no labels or probabilities", rec.id())))
}

pub(crate) fn preprocess(a: PreprocessArgs) -> Outcome {
    let cfg = PreprocessConfig {
        target_rate: a.rate,
        lo_hz: a.lo,
        hi_hz: a.hi,
        seconds: a.seconds,
    };
    if a.rate == 0 || !(a.seconds > 0.0) || !(a.lo > 0.0 && a.lo < a.hi && a.hi < a.rate as f64 / 2.0) {
        return Err(argument(format!(
            "need rate >= 1, seconds > 0 and 0 < lo < hi < rate/2 (got rate {}, seconds {}, lo {}, hi {})",
            a.rate, a.seconds, a.lo, a.hi
        )));
    }
    let ds = load(&a.manifest)?;
    let out: Vec<DatasetRecord> = ds
        .records
        .par_iter()
        .map(|r| {
            let (record, labels) = preprocess_pipeline(&r.record, r.labels.as_ref(), &cfg)?;
            let probs = r
                .probs
                .as_ref()
                .map(|p| preprocess_probs(p, r.record.sample_rate(), &cfg))
                .transpose()?;
            Ok(DatasetRecord {
                record,
                labels: r.labels.is_some().then_some(labels),
                probs,
                split: r.split,
                labeled: r.labeled,
            })
        })
        .collect::<Result<_, Error>>()
        .map_err(data)?;
    save(&a.out, &out)
}

/// Mini-batch `step` takes `batch` consecutive samples starting at
/// `step * batch`, wrapping around; never more than the set holds.
fn batch_indices(n: usize, batch: usize, step: u64) -> Vec<usize> {
    let start = (step as u128 * batch as u128 % n as u128) as usize;
    (0..batch.min(n)).map(|k| (start + k) % n).collect()
}

pub(crate) fn fuse(a: FuseArgs) -> Outcome {
    let mode = FuseMode::from(a.mode);
    let params = FusionParams {
        w_min: a.wmin,
        w_max: a.wmax,
        tau: a.tau,
        criterion: a.criterion.into(),
        sim_mode: if a.literal_sim { SimMode::Literal } else { SimMode::PresentClasses },
        seed: a.seed,
    };
    params.validate().map_err(argument)?;
    if a.batch == 0 {
        return Err(argument("--batch must be >= 1"));
    }

    let ds = load(&a.manifest)?;
    let labeled: Vec<(&DatasetRecord, LabeledSample)> = ds
        .labeled()
        .map(|r| {
            let labels = r.labels.clone().expect("loader requires labels on labeled records");
            let sample = LabeledSample {
                signal: r.record.samples().to_vec(),
                labels,
            };
            (r, sample)
        })
        .collect();
    let unlabeled: Vec<(&DatasetRecord, UnlabeledSample)> = ds
        .unlabeled()
        .map(|r| {
            let probs = r
                .probs
                .clone()
                .ok_or_else(|| data(format!("record {}: unlabeled record without probs_path", r.id())))?;
            let sample = UnlabeledSample {
                signal: r.record.samples().to_vec(),
                probs,
            };
            Ok((r, sample))
        })
        .collect::<Result<_, Failure>>()?;

    match mode {
        FuseMode::Vanilla if unlabeled.len() < 2 => {
            return Err(data("vanilla CutMix needs at least two unlabeled records"))
        }
        FuseMode::Vanilla => {}
        _ if labeled.is_empty() || unlabeled.is_empty() => {
            return Err(data("fusion needs at least one labeled and one unlabeled record"))
        }
        _ => {}
    }
    let used = labeled
        .iter()
        .filter(|_| mode != FuseMode::Vanilla)
        .map(|(r, _)| *r)
        .chain(unlabeled.iter().map(|(r, _)| *r));
    let mut len = None;
    for r in used {
        match len {
            None => len = Some(r.record.len()),
            Some(t) if t != r.record.len() => {
                return Err(data(format!(
                    "record {} has {} samples, expected {t}; preprocess first",
                    r.id(),
                    r.record.len()
                )))
            }
            _ => {}
        }
    }
    let len = len.expect("non-empty");
    if params.w_max > len {
        return Err(argument(format!("--wmax {} exceeds record length {len}", params.w_max)));
    }

    let mut records = Vec::new();
    let mut csv = outcomes_header();
    for step in 0..a.steps {
        let li = if labeled.is_empty() { Vec::new() } else { batch_indices(labeled.len(), a.batch, step) };
        let ui = batch_indices(unlabeled.len(), a.batch, step);
        let lb: Vec<LabeledSample> = li.iter().map(|&i| labeled[i].1.clone()).collect();
        let ub: Vec<UnlabeledSample> = ui.iter().map(|&i| unlabeled[i].1.clone()).collect();
        let fused = fuse_samples(&lb, &ub, mode, &params, step).map_err(data)?;
        for o in &fused.outcomes {
            let target = match o.direction {
                Direction::U2l => labeled[li[o.target]].0,
                Direction::L2u | Direction::Vanilla => unlabeled[ui[o.target]].0,
            };
            let id = format!("{}.s{step}.{}", target.id(), o.direction.name());
            csv.push_str(&outcome_line(&id, o));
            let record = EcgRecord::new(id, target.record.lead_id(), target.record.sample_rate(), o.signal.clone())
                .map_err(data)?;
            records.push(DatasetRecord {
                record,
                labels: Some(o.labels.clone()),
                probs: None,
                split: target.split,
                labeled: o.direction == Direction::U2l,
            });
        }
    }
    save(&a.out, &records)?;
    write_csv(Some(&a.out.join("outcomes.csv")), &csv)
}

pub(crate) fn consistency(a: ConsistencyArgs) -> Outcome {
    let opts = ConsistencyOptions {
        start_exemption: !a.no_start_exemption,
    };
    let ds = load(&a.manifest)?;
    if ds.records.is_empty() {
        return Err(data("manifest lists no records"));
    }
    let counts: Vec<usize> = ds
        .records
        .par_iter()
        .map(|r| labels_of(r).map(|l| find_violations(&l, opts).len()))
        .collect::<Result<_, _>>()?;
    let mut csv = String::from("record_id,violations,consistent\n");
    for (r, &n) in ds.records.iter().zip(&counts) {
        let _ = writeln!(csv, "{},{n},{}", r.id(), (n == 0) as u8);
    }
    let clean = counts.iter().filter(|&&n| n == 0).count();
    let _ = writeln!(
        csv,
        "ALL,{},{}",
        counts.iter().sum::<usize>(),
        clean as f64 / counts.len() as f64
    );
    write_csv(a.out.as_deref(), &csv)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub(crate) fn evaluate(a: EvaluateArgs) -> Outcome {
    if !(a.match_tol_ms >= 0.0) {
        return Err(argument("--match-tol-ms must be >= 0"));
    }
    let pred = load(&a.pred_manifest)?;
    let gt = load(&a.gt_manifest)?;
    if gt.records.is_empty() {
        return Err(data("ground-truth manifest lists no records"));
    }
    let mut cm = ConfusionMatrix::new();
    let mut acc = IntervalAccumulator::default();
    for g in &gt.records {
        let p = pred
            .records
            .iter()
            .find(|p| p.id() == g.id())
            .ok_or_else(|| data(format!("record {}: missing from prediction manifest", g.id())))?;
        let gl = g
            .labels
            .as_ref()
            .ok_or_else(|| data(format!("record {}: ground truth has no labels", g.id())))?;
        let pl = prediction_of(p)?;
        let wrap = |e: Error| data(e.in_record(g.id()));
        cm.add(&pl, gl).map_err(wrap)?;
        acc.add(&pl, gl, g.record.sample_rate(), a.match_tol_ms).map_err(wrap)?;
    }
    let iv = acc.finish();
    let mut csv = String::from("metric,value\n");
    for (c, iou) in cm.per_class_iou().iter().enumerate() {
        let name = Wave::from_id(c as u8).map_or("?", Wave::name);
        let _ = writeln!(csv, "iou_{},{iou}", name.to_lowercase());
    }
    let _ = writeln!(csv, "miou,{}", cm.miou());
    let _ = writeln!(csv, "pr_mae_ms,{}", opt(iv.pr_ms));
    let _ = writeln!(csv, "qrs_mae_ms,{}", opt(iv.qrs_ms));
    let _ = writeln!(csv, "qt_mae_ms,{}", opt(iv.qt_ms));
    let _ = writeln!(csv, "avg_mae_ms,{}", opt(iv.average_ms()));
    let _ = writeln!(csv, "matched_beats,{}", iv.matched);
    let _ = writeln!(csv, "gt_beats,{}", iv.gt_beats);
    let _ = writeln!(csv, "pred_beats,{}", iv.pred_beats);
    debug_assert_eq!(cm.per_class_iou().len(), NUM_CLASSES);
    write_csv(a.out.as_deref(), &csv)
}

pub(crate) fn synth(a: SynthArgs) -> Outcome {
    let max_bpm = a.max_bpm.unwrap_or(a.bpm);
    if a.n == 0 || !(a.bpm > 0.0) || !(max_bpm >= a.bpm) || !(0.0..=1.0).contains(&a.labeled_ratio) {
        return Err(argument("need --n >= 1, 0 < --bpm <= --max-bpm and --labeled-ratio in [0, 1]"));
    }
    let n_labeled = (a.n as f64 * a.labeled_ratio).round() as usize;
    let records: Vec<DatasetRecord> = (0..a.n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(a.seed, &[i as u64]);
            let bpm = a.bpm + (max_bpm - a.bpm) * rng.unit();
            let params = SynthParams {
                heart_rate_bpm: bpm,
                duration_s: a.seconds,
                sample_rate: a.rate,
                phase: rng.unit(),
                noise_std: a.noise,
                ..Default::default()
            };
            let (record, labels) = synth_ecg(&format!("synth-{i:04}"), &params, &mut rng)?;
            Ok(DatasetRecord {
                record,
                labels: Some(labels),
                probs: None,
                split: Split::Train,
                labeled: i < n_labeled,
            })
        })
        .collect::<Result<_, Error>>()
        .map_err(argument)?;
    save(&a.out, &records)
}

pub(crate) fn corrupt(a: CorruptArgs) -> Outcome {
    let params = CorruptParams {
        boundary_jitter: a.jitter,
        flip_rate: a.flip,
        sharpness: a.sharpness,
    };
    if !(0.0..=1.0).contains(&a.flip) || !(a.sharpness > 0.0 && a.sharpness <= 1.0) {
        return Err(argument("need --flip in [0, 1] and --sharpness in (0, 1]"));
    }
    let ds = load(&a.manifest)?;
    let records: Vec<DatasetRecord> = ds
        .records
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            let labels = r
                .labels
                .as_ref()
                .ok_or_else(|| data(format!("record {}: no labels to corrupt", r.id())))?;
            let mut rng = stream(a.seed, &[i as u64]);
            let probs = corrupt_labels(labels, &params, &mut rng).map_err(data)?;
            Ok(DatasetRecord {
                probs: Some(probs),
                ..r.clone()
            })
        })
        .collect::<Result<_, Failure>>()?;
    save(&a.out, &records)
}

pub(crate) fn oracle_check(a: OracleArgs) -> Outcome {
    let report = run_oracle_suite(a.seed, a.trials);
    let failures: Vec<&String> = report
        .search_mismatches
        .iter()
        .chain(&report.score_mismatches)
        .collect();
    println!(
        "trials={} search_mismatches={} score_mismatches={}",
        report.trials,
        report.search_mismatches.len(),
        report.score_mismatches.len()
    );
    if failures.is_empty() {
        return Ok(());
    }
    for f in failures.iter().take(10) {
        println!("{f}");
    }
    Err(Failure::Mismatch(format!("{} oracle mismatches; first: {}", failures.len(), failures[0])))
}
