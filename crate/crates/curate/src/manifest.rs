//! Line-delimited JSON manifest of every scored clip, plus corpus stats.
//!
//! Serialization is canonical: keys sorted, floats rounded to 6 decimal
//! places before encoding, one UTF-8 line per record flushed atomically.
//! Identical records produce identical bytes on every platform, which is
//! what makes resume and worker-count invariance checkable.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::caption::CaptionRecord;
use crate::motion::{LabelProvenance, MotionClass};
use crate::quality::{Decision, ScoreRecord};
use crate::sampler::SamplingPlan;
use crate::segmenter::ClipSpan;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("record {clip_id} invalid at {field}: {message}")]
    Validation { clip_id: String, field: String, message: String },
    #[error("malformed manifest line {line_no}: {message}")]
    MalformedLine { line_no: usize, message: String },
    #[error("sink failure: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClipManifestRecord {
    pub schema_version: String,
    pub clip_id: String,
    pub source_id: String,
    pub span: ClipSpan,
    pub fps: f64,
    pub duration_s: f64,
    pub motion_label: MotionClass,
    pub motion_confidence: f64,
    pub label_provenance: LabelProvenance,
    pub scores: Option<ScoreRecord>,
    pub sampling_plan: Option<SamplingPlan>,
    pub caption: Option<CaptionRecord>,
    pub decision: Decision,
    pub pipeline_version: String,
}

/// Content-addressed clip id: 128-bit hash of source id and span.
pub fn clip_id(source_id: &str, start_frame: u64, end_frame: u64) -> String {
    let mut hasher = Sha256::new();
    hasher.update(source_id.as_bytes());
    hasher.update([0u8]);
    hasher.update(start_frame.to_be_bytes());
    hasher.update(end_frame.to_be_bytes());
    let digest = hasher.finalize();
    hex_lower(&digest[..16])
}

fn hex_lower(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl ClipManifestRecord {
    pub fn validate(&self) -> Result<(), ManifestError> {
        let fail = |field: &str, message: String| {
            Err(ManifestError::Validation {
                clip_id: self.clip_id.clone(),
                field: field.into(),
                message,
            })
        };
        if self.fps <= 0.0 {
            return fail("fps", format!("{} not positive", self.fps));
        }
        if self.span.end_frame <= self.span.start_frame {
            return fail("span", format!("{:?} empty or reversed", self.span));
        }
        let expect = self.span.frame_count() as f64 / self.fps;
        if (self.duration_s - expect).abs() > 1e-6 {
            return fail(
                "duration_s",
                format!("{} but span/fps gives {expect}", self.duration_s),
            );
        }
        if !(0.0..=1.0).contains(&self.motion_confidence) {
            return fail("motion_confidence", format!("{} out of [0,1]", self.motion_confidence));
        }
        if let Some(s) = &self.scores {
            if !(0.0..=10.0).contains(&s.aesthetic) || !(0.0..=10.0).contains(&s.quality) {
                return fail("scores", format!("({}, {}) out of [0,10]", s.aesthetic, s.quality));
            }
        }
        if let Some(p) = &self.sampling_plan {
            if p.indices.len() != p.n as usize {
                return fail("sampling_plan.indices", "length differs from N".into());
            }
            if !p.indices.windows(2).all(|w| w[0] < w[1]) {
                return fail("sampling_plan.indices", "not strictly increasing".into());
            }
            let m = p.n as f64 * p.fps / p.clip_n as f64;
            // Tolerance covers the 6-decimal wire rounding of floats.
            if (p.motion_intensity - m).abs() > 1e-6 {
                return fail(
                    "sampling_plan.motion_intensity",
                    format!("{} but N*FPS/clip_n gives {m}", p.motion_intensity),
                );
            }
            let trim = (p.trim_fraction * p.clip_n as f64).floor() as u64;
            if let (Some(&first), Some(&last)) = (p.indices.first(), p.indices.last()) {
                if first < trim || last > p.clip_n - 1 - trim {
                    return fail("sampling_plan.indices", "outside trimmed range".into());
                }
            }
        }
        if let Some(c) = &self.caption {
            let wc = crate::caption::word_count(&c.text);
            if wc != c.word_count {
                return fail("caption.word_count", format!("{} but text has {wc}", c.word_count));
            }
        }
        Ok(())
    }

    /// Canonical single-line JSON encoding.
    pub fn to_canonical_line(&self) -> String {
        let mut value = serde_json::to_value(self).expect("record serializes");
        round_floats(&mut value);
        serde_json::to_string(&value).expect("canonical value serializes")
    }
}

/// Rounds every JSON number to 6 decimal places in place.
fn round_floats(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.as_i64().is_none() && n.as_u64().is_none() {
                    let rounded = (f * 1e6).round() / 1e6;
                    if let Some(num) = serde_json::Number::from_f64(rounded) {
                        *n = num;
                    }
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_floats),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Validates and appends records as canonical JSONL; returns the count
/// written. Each line is flushed before the next is produced.
pub fn write_records<W: Write>(
    records: &[ClipManifestRecord],
    sink: &mut W,
) -> Result<usize, ManifestError> {
    let mut n = 0;
    for record in records {
        record.validate()?;
        let line = record.to_canonical_line();
        sink.write_all(line.as_bytes())?;
        sink.write_all(b"\n")?;
        sink.flush()?;
        n += 1;
    }
    Ok(n)
}

#[derive(Debug)]
pub struct ReadOutcome {
    pub records: Vec<ClipManifestRecord>,
    /// (line number, message) for lines skipped in lenient mode.
    pub warnings: Vec<(usize, String)>,
}

/// Parses and re-validates every line. In strict mode the first bad line
/// aborts with its line number; otherwise bad lines become warnings.
pub fn read_records<R: BufRead>(source: R, strict: bool) -> Result<ReadOutcome, ManifestError> {
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Result<ClipManifestRecord, _> = serde_json::from_str(&line);
        let outcome = parsed
            .map_err(|e| e.to_string())
            .and_then(|r| r.validate().map(|_| r).map_err(|e| e.to_string()));
        match outcome {
            Ok(record) => records.push(record),
            Err(message) if strict => {
                return Err(ManifestError::MalformedLine { line_no, message })
            }
            Err(message) => warnings.push((line_no, message)),
        }
    }
    Ok(ReadOutcome { records, warnings })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub kept_clips: u64,
    pub total_duration_hr: f64,
    pub avg_duration_s: f64,
    pub avg_caption_words: f64,
    pub label_histogram: BTreeMap<String, u64>,
}

/// Table-style corpus statistics over kept records only.
pub fn compute_stats(records: &[ClipManifestRecord]) -> DatasetStats {
    let kept: Vec<_> = records.iter().filter(|r| r.decision.keep).collect();
    let n = kept.len() as u64;
    let total_s: f64 = kept.iter().map(|r| r.duration_s).sum();
    let captioned: Vec<usize> = kept
        .iter()
        .filter_map(|r| r.caption.as_ref().map(|c| c.word_count))
        .collect();
    let mut label_histogram = BTreeMap::new();
    for r in &kept {
        *label_histogram.entry(r.motion_label.as_str().to_string()).or_insert(0) += 1;
    }
    DatasetStats {
        kept_clips: n,
        total_duration_hr: total_s / 3600.0,
        avg_duration_s: if n == 0 { 0.0 } else { total_s / n as f64 },
        avg_caption_words: if captioned.is_empty() {
            0.0
        } else {
            captioned.iter().sum::<usize>() as f64 / captioned.len() as f64
        },
        label_histogram,
    }
}
