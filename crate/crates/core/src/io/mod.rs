//! On-disk dataset layout.
//!
//! A dataset is a TOML manifest listing records. Each record has a signal
//! file (raw little-endian f32), optionally a run-length label CSV and a
//! probability file (little-endian f32, row-major `T x C`). Paths are
//! relative to the manifest's directory. See `docs/FORMAT.md`.

mod files;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use files::{
    format_label_runs, parse_label_runs, read_labels, read_probs, read_signal, write_labels, write_probs,
    write_signal, LABELS_HEADER,
};

use crate::error::{Error, Result};
use crate::labels::LabelSequence;
use crate::probs::ProbabilityMap;
use crate::record::EcgRecord;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub record_id: String,
    pub lead_id: String,
    pub sample_rate: u32,
    pub signal_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs_path: Option<String>,
    pub split: Split,
    pub labeled: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format_version: u32,
    #[serde(default)]
    pub records: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn parse(text: &str) -> Result<Self> {
        let manifest: DatasetManifest =
            toml::from_str(text).map_err(|e| Error::format(format!("manifest: {e}")))?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(Error::format(format!(
                "unsupported manifest format_version {} (expected {FORMAT_VERSION})",
                manifest.format_version
            )));
        }
        Ok(manifest)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serialises")
    }
}

/// A record with its optional labels and teacher probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub record: EcgRecord,
    pub labels: Option<LabelSequence>,
    pub probs: Option<ProbabilityMap>,
    pub split: Split,
    pub labeled: bool,
}

impl DatasetRecord {
    pub fn id(&self) -> &str {
        self.record.record_id()
    }

    /// Ground truth when present, otherwise the argmax of the probabilities.
    pub fn best_labels(&self) -> Option<LabelSequence> {
        self.labels
            .clone()
            .or_else(|| self.probs.as_ref().map(ProbabilityMap::argmax_labels))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub records: Vec<DatasetRecord>,
}

impl Dataset {
    pub fn labeled(&self) -> impl Iterator<Item = &DatasetRecord> {
        self.records.iter().filter(|r| r.labeled)
    }

    pub fn unlabeled(&self) -> impl Iterator<Item = &DatasetRecord> {
        self.records.iter().filter(|r| !r.labeled)
    }
}

/// Signal, labels and probabilities of one record, each optional except the
/// signal.
pub fn load_record(entry: &ManifestEntry, base: &Path) -> Result<DatasetRecord> {
    let id = &entry.record_id;
    let signal = read_signal(&base.join(&entry.signal_path)).map_err(|e| e.in_record(id))?;
    let record = EcgRecord::new(id.clone(), entry.lead_id.clone(), entry.sample_rate, signal)
        .map_err(|e| Error::format(e.to_string()))?;
    let labels = entry
        .labels_path
        .as_ref()
        .map(|p| read_labels(&base.join(p), record.len()))
        .transpose()
        .map_err(|e| e.in_record(id))?;
    let probs = entry
        .probs_path
        .as_ref()
        .map(|p| read_probs(&base.join(p)))
        .transpose()
        .map_err(|e| e.in_record(id))?;
    if let Some(p) = &probs {
        if p.len() != record.len() {
            return Err(Error::format(format!(
                "record {id}: probability map has {} rows for {} samples",
                p.len(),
                record.len()
            )));
        }
    }
    if entry.labeled && labels.is_none() {
        return Err(Error::format(format!("record {id}: labeled record without labels_path")));
    }
    Ok(DatasetRecord {
        record,
        labels,
        probs,
        split: entry.split,
        labeled: entry.labeled,
    })
}

/// Reads a manifest and every record it lists.
pub fn load_dataset(manifest_path: &Path) -> Result<Dataset> {
    let text = files::read_text(manifest_path)?;
    let manifest = DatasetManifest::parse(&text)
        .map_err(|e| Error::format(format!("{}: {e}", manifest_path.display())))?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let records = manifest
        .records
        .iter()
        .map(|entry| load_record(entry, base))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { manifest, records })
}

fn file_stem(record_id: &str) -> String {
    record_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect()
}

/// Writes a record's files under `dir/records/` and returns its manifest entry.
pub fn save_record(dir: &Path, rec: &DatasetRecord) -> Result<ManifestEntry> {
    let stem = file_stem(rec.id());
    let rel = |suffix: &str| format!("records/{stem}.{suffix}");
    let signal_path = rel("signal.f32");
    write_signal(&dir.join(&signal_path), rec.record.samples())?;
    let labels_path = match &rec.labels {
        Some(l) => {
            let p = rel("labels.csv");
            write_labels(&dir.join(&p), l)?;
            Some(p)
        }
        None => None,
    };
    let probs_path = match &rec.probs {
        Some(m) => {
            let p = rel("probs.f32");
            write_probs(&dir.join(&p), m)?;
            Some(p)
        }
        None => None,
    };
    Ok(ManifestEntry {
        record_id: rec.id().to_string(),
        lead_id: rec.record.lead_id().to_string(),
        sample_rate: rec.record.sample_rate(),
        signal_path,
        labels_path,
        probs_path,
        split: rec.split,
        labeled: rec.labeled,
    })
}

/// Writes every record plus `dir/manifest.toml`; returns the manifest path.
pub fn save_dataset(dir: &Path, records: &[DatasetRecord]) -> Result<PathBuf> {
    let entries = records
        .iter()
        .map(|r| save_record(dir, r))
        .collect::<Result<Vec<_>>>()?;
    let manifest = DatasetManifest {
        format_version: FORMAT_VERSION,
        records: entries,
    };
    let path = dir.join(MANIFEST_FILE);
    files::write_text(&path, &manifest.to_toml())?;
    Ok(path)
}
