use crate::error::{Error, Result};

/// A single-lead ECG trace.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord {
    record_id: String,
    lead_id: String,
    sample_rate: u32,
    samples: Vec<f64>,
}

impl EcgRecord {
    /// Builds a record, rejecting empty traces, a zero rate and non-finite samples.
    pub fn new(
        record_id: impl Into<String>,
        lead_id: impl Into<String>,
        sample_rate: u32,
        samples: Vec<f64>,
    ) -> Result<Self> {
        let record_id = record_id.into();
        if sample_rate == 0 {
            return Err(Error::arg(format!("record {record_id}: sample rate must be >= 1")));
        }
        if samples.is_empty() {
            return Err(Error::arg(format!("record {record_id}: empty signal")));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::arg(format!(
                "record {record_id}: non-finite sample at index {i}"
            )));
        }
        Ok(Self {
            record_id,
            lead_id: lead_id.into(),
            sample_rate,
            samples,
        })
    }

    pub fn record_id(&self) -> &str {
        &self.record_id
    }

    pub fn lead_id(&self) -> &str {
        &self.lead_id
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Same identity, new samples (and possibly a new rate).
    pub fn with_samples(&self, sample_rate: u32, samples: Vec<f64>) -> Result<Self> {
        Self::new(self.record_id.clone(), self.lead_id.clone(), sample_rate, samples)
    }

    pub fn with_id(mut self, record_id: impl Into<String>) -> Self {
        self.record_id = record_id.into();
        self
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}
