//! Canonical manifest lines and dataset statistics from in-memory records.
//!
//!     cargo run --example manifest_stats [manifest.jsonl]
//!
//! With a path argument it reads that manifest instead of the built-in
//! fixture records.

use std::io::BufReader;

use curate::manifest::{self, ClipManifestRecord};
use curate::motion::{LabelProvenance, MotionClass};
use curate::quality::{Decision, Reason, ScoreRecord, ScorerProvenance};
use curate::segmenter::ClipSpan;

fn fixture(i: u64) -> ClipManifestRecord {
    let source = format!("source{i}");
    let (start, end) = (10 * i, 10 * i + 72);
    let id = manifest::clip_id(&source, start, end);
    ClipManifestRecord {
        schema_version: manifest::SCHEMA_VERSION.into(),
        clip_id: id.clone(),
        source_id: source.clone(),
        span: ClipSpan { source_id: source, start_frame: start, end_frame: end },
        fps: 10.0,
        duration_s: 7.3,
        motion_label: MotionClass::C4,
        motion_confidence: 0.8,
        label_provenance: LabelProvenance::Heuristic,
        scores: Some(ScoreRecord {
            clip_id: id.clone(),
            aesthetic: 5.0 + i as f64 / 10.0,
            quality: 6.0,
            scorer_provenance: ScorerProvenance::BuiltinProxy,
        }),
        sampling_plan: None,
        caption: None,
        decision: Decision { clip_id: id, keep: true, reason: Reason::Passed },
        pipeline_version: "example".into(),
    }
}

fn main() {
    let records = match std::env::args().nth(1) {
        Some(path) => {
            let file = std::fs::File::open(&path).expect("open manifest");
            manifest::read_records(BufReader::new(file), false).expect("read manifest").records
        }
        None => (0..5).map(fixture).collect(),
    };
    for r in records.iter().take(2) {
        println!("{}", r.to_canonical_line());
    }
    let stats = manifest::compute_stats(&records);
    println!("\nkept {} clips, {:.4} h total, avg {:.2} s", stats.kept_clips, stats.total_duration_hr, stats.avg_duration_s);
    println!("labels {:?}", stats.label_histogram);
}
