//! Cardiac-pattern-guided bidirectional CutMix for ECG delineation.
//!
//! The crate is organised around the data that flows through a
//! semi-supervised delineation pipeline:
//!
//! * [`record`], [`labels`], [`probs`]: signals, per-timestep wave labels
//!   (dense and run-length) and teacher probability maps.
//! * [`preprocess`]: duration fixing, resampling, zero-phase band-pass and
//!   z-score normalisation.
//! * [`similarity`]: class-averaged IoU between label segments and its
//!   sliding-window evaluation.
//! * [`fusion`]: labeled-to-unlabeled and confidence-gated
//!   unlabeled-to-labeled splicing, plus the random/signal baselines.
//! * [`consistency`], [`metrics`]: cardiac-cycle validity and evaluation.
//! * [`io`], [`synth`]: on-disk formats and desk-scale data sources.
//! * [`oracle`]: brute-force references for the search and scoring code.
//! * [`batch`]: coarse entry points over flat numeric buffers, for foreign
//!   language bindings.

// `!(x > 0.0)` style checks are there to reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch;
pub mod consistency;
pub mod error;
pub mod fusion;
pub mod io;
pub mod labels;
pub mod metrics;
pub mod oracle;
pub mod preprocess;
pub mod probs;
pub mod record;
pub mod rng;
pub mod similarity;
pub mod synth;

pub use error::{Error, Result};
pub use labels::{LabelRuns, LabelSequence, Run, Wave, Window, NUM_CLASSES};
pub use probs::ProbabilityMap;
pub use record::EcgRecord;
