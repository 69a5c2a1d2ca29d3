use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::labels::{LabelRuns, LabelSequence, Run, NUM_CLASSES};
use crate::probs::ProbabilityMap;

const F32_WIDTH: usize = 4;
pub const LABELS_HEADER: [&str; 3] = ["start", "end_exclusive", "class_id"];

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn decode_f32(bytes: &[u8], path: &Path) -> Result<Vec<f64>> {
    if !bytes.len().is_multiple_of(F32_WIDTH) {
        return Err(Error::format(format!(
            "{}: size {} is not a multiple of {F32_WIDTH} bytes",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(F32_WIDTH)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect())
}

fn encode_f32(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect()
}

/// Raw little-endian f32 samples.
pub fn read_signal(path: &Path) -> Result<Vec<f64>> {
    let values = decode_f32(&read_bytes(path)?, path)?;
    if values.is_empty() {
        return Err(Error::format(format!("{}: empty signal", path.display())));
    }
    Ok(values)
}

pub fn write_signal(path: &Path, samples: &[f64]) -> Result<()> {
    write_bytes(path, &encode_f32(samples))
}

/// Row-major `T x C` little-endian f32 probabilities.
pub fn read_probs(path: &Path) -> Result<ProbabilityMap> {
    let values = decode_f32(&read_bytes(path)?, path)?;
    if values.len() % NUM_CLASSES != 0 {
        return Err(Error::format(format!(
            "{}: {} values do not form rows of C = {NUM_CLASSES}",
            path.display(),
            values.len()
        )));
    }
    ProbabilityMap::new(values).map_err(|e| Error::format(format!("{}: {e}", path.display())))
}

pub fn write_probs(path: &Path, probs: &ProbabilityMap) -> Result<()> {
    write_bytes(path, &encode_f32(probs.as_flat()))
}

/// Parses the run-length CSV (`start,end_exclusive,class_id` with header).
pub fn parse_label_runs(text: &str, origin: &Path) -> Result<LabelRuns> {
    let ctx = |msg: String| Error::format(format!("{}: {msg}", origin.display()));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| ctx(e.to_string()))?;
    if headers.iter().ne(LABELS_HEADER) {
        return Err(ctx(format!(
            "expected header {}, found {}",
            LABELS_HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut runs = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| ctx(format!("run {i}: {e}")))?;
        let field = |k: usize| -> Result<u64> {
            row.get(k)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| ctx(format!("run {i}: bad field {:?}", row.get(k).unwrap_or(""))))
        };
        let class = field(2)?;
        if class >= NUM_CLASSES as u64 {
            return Err(ctx(format!("run {i}: class id {class} out of range")));
        }
        runs.push(Run::new(field(0)? as usize, field(1)? as usize, class as u8));
    }
    Ok(LabelRuns::new(runs))
}

pub fn read_labels(path: &Path, len: usize) -> Result<LabelSequence> {
    let bytes = read_bytes(path)?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
    let runs = parse_label_runs(text, path)?;
    if runs.is_empty() {
        return Err(Error::format(format!("{}: empty sequence", path.display())));
    }
    runs.to_dense(len)
        .map_err(|e| Error::format(format!("{}: {e}", path.display())))
}

pub fn format_label_runs(labels: &LabelSequence) -> String {
    let mut out = LABELS_HEADER.join(",");
    out.push('\n');
    for r in labels.to_runs().runs() {
        out.push_str(&format!("{},{},{}\n", r.start, r.end, r.class));
    }
    out
}

pub fn write_labels(path: &Path, labels: &LabelSequence) -> Result<()> {
    write_bytes(path, format_label_runs(labels).as_bytes())
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    write_bytes(path, text.as_bytes())
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
