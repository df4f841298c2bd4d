//! End-to-end orchestration: sources -> traces -> spans -> labels ->
//! scores -> decisions -> sampling plans -> captions -> manifest.
//!
//! One source video is one work unit; a fixed worker pool pulls sources
//! from a shared queue and funnels finished records through a single
//! serialized manifest writer over a bounded channel. Records already in
//! the manifest are skipped, which makes interrupted runs resumable.

use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::mpsc;
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::caption::CaptionClient;
use crate::config::PipelineConfig;
use crate::manifest::{
    self, clip_id, ClipManifestRecord, ManifestError, SCHEMA_VERSION,
};
use crate::media::{self, FrameBuffer};
use crate::motion::{
    self, ClassifierClient, LabelProvenance, MotionLabel, PairObservation,
};
use crate::quality::{self, Decision, Reason, ScoreRecord, ScorerClient};
use crate::sampler;
use crate::segmenter::{self, ClipSpan, MotionTrace};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Media(#[from] crate::media::MediaError),
    #[error("manifest sink failure: {0}")]
    Sink(String),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RunReport {
    pub sources: u64,
    pub source_errors: Vec<(String, String)>,
    pub clips_found: u64,
    pub records_written: u64,
    pub kept: u64,
    pub dropped_by_reason: BTreeMap<String, u64>,
    pub clips_per_source_avg: f64,
}

struct Shared {
    cfg: PipelineConfig,
    existing: HashSet<String>,
    classifier_client: Option<ClassifierClient>,
    scorer_client: Option<ScorerClient>,
    caption_client: Option<CaptionClient>,
}

/// Runs the full pipeline over the configured source manifest.
pub fn run(cfg: &PipelineConfig) -> Result<RunReport, PipelineError> {
    cfg.check()?;
    let sources = media::read_source_manifest(Path::new(&cfg.sources))?;

    let existing: HashSet<String> = if Path::new(&cfg.manifest_path).exists() {
        let file = File::open(&cfg.manifest_path)
            .map_err(|e| PipelineError::Sink(e.to_string()))?;
        manifest::read_records(BufReader::new(file), false)?
            .records
            .into_iter()
            .map(|r| r.clip_id)
            .collect()
    } else {
        HashSet::new()
    };

    let sink = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&cfg.manifest_path)
        .map_err(|e| PipelineError::Sink(e.to_string()))?;

    let shared = Arc::new(Shared {
        cfg: cfg.clone(),
        existing,
        classifier_client: (!cfg.classifier_client.url.is_empty())
            .then(|| ClassifierClient::new(cfg.classifier_client.clone())),
        scorer_client: (!cfg.scorer.url.is_empty())
            .then(|| ScorerClient::new(cfg.scorer.clone())),
        caption_client: (cfg.stages.caption && !cfg.caption.url.is_empty())
            .then(|| CaptionClient::new(cfg.caption.clone())),
    });

    // Serialized writer; bounded channel gives decode/compute backpressure.
    let (tx, rx) = mpsc::sync_channel::<ClipManifestRecord>(64);
    let writer_path = cfg.manifest_path.clone();
    let writer = std::thread::spawn(move || -> Result<u64, String> {
        let _ = &writer_path;
        let mut sink = BufWriter::new(sink);
        let mut written = 0u64;
        for record in rx {
            manifest::write_records(std::slice::from_ref(&record), &mut sink)
                .map_err(|e| e.to_string())?;
            written += 1;
        }
        sink.flush().map_err(|e| e.to_string())?;
        Ok(written)
    });

    let queue: Arc<Mutex<Vec<String>>> = Arc::new(Mutex::new(sources.clone()));
    let errors: Arc<Mutex<Vec<(String, String)>>> = Arc::new(Mutex::new(Vec::new()));
    let found = Arc::new(Mutex::new(0u64));
    let tally: Arc<Mutex<BTreeMap<String, u64>>> = Arc::new(Mutex::new(BTreeMap::new()));
    let kept = Arc::new(Mutex::new(0u64));

    std::thread::scope(|scope| {
        for _ in 0..cfg.workers.max(1) {
            let shared = Arc::clone(&shared);
            let queue = Arc::clone(&queue);
            let errors = Arc::clone(&errors);
            let found = Arc::clone(&found);
            let tally = Arc::clone(&tally);
            let kept = Arc::clone(&kept);
            let tx = tx.clone();
            scope.spawn(move || loop {
                let source = match queue.lock().unwrap().pop() {
                    Some(s) => s,
                    None => break,
                };
                match process_source(&shared, &source) {
                    Ok(records) => {
                        *found.lock().unwrap() += records.len() as u64;
                        for record in records {
                            if shared.existing.contains(&record.clip_id) {
                                continue;
                            }
                            if record.decision.keep {
                                *kept.lock().unwrap() += 1;
                            } else {
                                *tally
                                    .lock()
                                    .unwrap()
                                    .entry(format!("{:?}", record.decision.reason))
                                    .or_insert(0) += 1;
                            }
                            if tx.send(record).is_err() {
                                break;
                            }
                        }
                    }
                    Err(e) => errors.lock().unwrap().push((source, e)),
                }
            });
        }
    });
    drop(tx);

    let records_written = writer
        .join()
        .map_err(|_| PipelineError::Sink("writer thread panicked".into()))?
        .map_err(PipelineError::Sink)?;

    let sources_n = sources.len() as u64;
    let clips_found = *found.lock().unwrap();
    let kept_n = *kept.lock().unwrap();
    let report = RunReport {
        sources: sources_n,
        source_errors: Arc::try_unwrap(errors).unwrap().into_inner().unwrap(),
        clips_found,
        records_written,
        kept: kept_n,
        dropped_by_reason: Arc::try_unwrap(tally).unwrap().into_inner().unwrap(),
        clips_per_source_avg: if sources_n == 0 {
            0.0
        } else {
            clips_found as f64 / sources_n as f64
        },
    };
    Ok(report)
}

/// All manifest records for one source. Isolated so one bad source never
/// affects another; errors are reported as strings in the run report.
fn process_source(shared: &Shared, source: &str) -> Result<Vec<ClipManifestRecord>, String> {
    let cfg = &shared.cfg;
    let meta = media::probe(source).map_err(|e| e.to_string())?;
    let fps = meta.fps();

    let stream =
        media::open_stream(&meta, cfg.target_height, false).map_err(|e| e.to_string())?;
    let trace = segmenter::build_trace(&meta.source_id, fps, stream, &cfg.flow)
        .map_err(|e| e.to_string())?;
    let cuts = segmenter::detect_cuts(&trace, &cfg.segmenter);
    let spans = segmenter::extract_spans_with_cuts(&trace, &cfg.segmenter, &cuts);
    if spans.is_empty() {
        return Ok(Vec::new());
    }

    // Plans first, so the color pass decodes only the frames it needs.
    let mut plans: Vec<Option<sampler::SamplingPlan>> = Vec::with_capacity(spans.len());
    let mut wanted: Vec<Vec<u64>> = Vec::with_capacity(spans.len());
    for span in &spans {
        let clip_n = span.frame_count();
        let plan = if cfg.stages.sample {
            sampler::plan_samples(clip_n, cfg.sample_n.min(clip_n), fps, cfg.trim_fraction).ok()
        } else {
            None
        };
        // Frames fed to scorer/captioner: the plan's picks, else a small
        // uniform fallback, capped at 16 absolute indices.
        let rel: Vec<u64> = match &plan {
            Some(p) => p.indices.clone(),
            None => sampler::plan_samples(clip_n, 8.min(clip_n), fps, 0.0)
                .map(|p| p.indices)
                .unwrap_or_default(),
        };
        let step = rel.len().div_ceil(16).max(1);
        wanted.push(
            rel.iter()
                .step_by(step)
                .map(|i| span.start_frame + i)
                .collect(),
        );
        plans.push(plan);
    }

    let need_color = cfg.stages.score || cfg.stages.caption;
    let color_frames: BTreeMap<u64, FrameBuffer> = if need_color {
        let all: HashSet<u64> = wanted.iter().flatten().copied().collect();
        let stream =
            media::open_stream(&meta, cfg.target_height, true).map_err(|e| e.to_string())?;
        let mut map = BTreeMap::new();
        for frame in stream {
            let frame = frame.map_err(|e| e.to_string())?;
            if all.contains(&frame.index) {
                map.insert(frame.index, frame);
            }
        }
        map
    } else {
        BTreeMap::new()
    };

    let mut records = Vec::with_capacity(spans.len());
    for ((span, plan), wanted) in spans.iter().zip(plans).zip(&wanted) {
        let id = clip_id(&meta.source_id, span.start_frame, span.end_frame);
        let clip_frames: Vec<FrameBuffer> = wanted
            .iter()
            .filter_map(|i| color_frames.get(i).cloned())
            .collect();
        records.push(build_record(
            shared, &trace, &cuts, span, id, fps, plan, &clip_frames,
        )?);
    }
    Ok(records)
}

#[allow(clippy::too_many_arguments)]
fn build_record(
    shared: &Shared,
    trace: &MotionTrace,
    cuts: &[usize],
    span: &ClipSpan,
    id: String,
    fps: f64,
    plan: Option<sampler::SamplingPlan>,
    clip_frames: &[FrameBuffer],
) -> Result<ClipManifestRecord, String> {
    let cfg = &shared.cfg;
    let pairs: Vec<PairObservation> = span
        .pair_range()
        .map(|i| {
            let s = &trace.pair_stats[i];
            PairObservation {
                motion: s.motion.unwrap_or(motion::GlobalMotion {
                    affine: [1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
                    divergence: 0.0,
                    curl: 0.0,
                    translation: (0.0, 0.0),
                    inlier_fraction: 0.0,
                    rms_residual: f64::MAX,
                }),
                center_magnitude: s.center_magnitude,
                border_magnitude: s.border_magnitude,
                luma_jump: cuts.binary_search(&i).is_ok(),
            }
        })
        .collect();

    let label: MotionLabel = if cfg.stages.classify {
        match &shared.classifier_client {
            Some(client) => client
                .classify_remote(clip_frames, &pairs, &cfg.classifier)
                .map_err(|e| e.to_string())?,
            None => motion::classify_clip(&pairs, &cfg.classifier).map_err(|e| e.to_string())?,
        }
    } else {
        MotionLabel {
            class: motion::MotionClass::C4,
            confidence: 0.0,
            provenance: LabelProvenance::Heuristic,
        }
    };

    let scores: Option<ScoreRecord> = if cfg.stages.score && !clip_frames.is_empty() {
        let record = match &shared.scorer_client {
            Some(client) => client.score_remote(&id, clip_frames).map_err(|e| e.to_string())?,
            None => quality::score_builtin(&id, clip_frames).map_err(|e| e.to_string())?,
        };
        Some(record)
    } else {
        None
    };

    let decision = if cfg.stages.filter {
        match &scores {
            Some(s) => quality::apply_filter(&[(s.clone(), label.class)], &cfg.filter)
                .pop()
                .expect("one decision per record"),
            None => Decision { clip_id: id.clone(), keep: true, reason: Reason::Unfiltered },
        }
    } else {
        Decision { clip_id: id.clone(), keep: true, reason: Reason::Unfiltered }
    };

    let caption = match (&shared.caption_client, decision.keep) {
        (Some(client), true) => {
            let n = clip_frames.len().clamp(0, 32);
            if n >= 4 {
                Some(
                    client
                        .request_caption(&id, &clip_frames[..n])
                        .map_err(|e| e.to_string())?,
                )
            } else {
                None
            }
        }
        _ => None,
    };

    Ok(ClipManifestRecord {
        schema_version: SCHEMA_VERSION.into(),
        clip_id: id,
        source_id: trace.source_id.clone(),
        span: span.clone(),
        fps,
        duration_s: span.frame_count() as f64 / fps,
        motion_label: label.class,
        motion_confidence: label.confidence,
        label_provenance: label.provenance,
        scores,
        sampling_plan: plan,
        caption,
        decision,
        pipeline_version: cfg.pipeline_version.clone(),
    })
}

// --- reporting ---------------------------------------------------------

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
}

/// Emits dataset stats plus score/label/caption histograms for a manifest.
///
/// Score histograms cover the full scored population, kept and dropped,
/// so threshold effects stay visible in the distributions.
pub fn report(manifest_path: &Path, out_dir: &Path) -> Result<(), ReportError> {
    let file = File::open(manifest_path).map_err(ManifestError::Io)?;
    let outcome = manifest::read_records(BufReader::new(file), true)?;
    let records = outcome.records;
    std::fs::create_dir_all(out_dir)?;

    let stats = manifest::compute_stats(&records);
    std::fs::write(
        out_dir.join("stats.json"),
        serde_json::to_string_pretty(&stats).expect("stats serialize"),
    )?;

    write_histogram(
        &out_dir.join("aesthetic_hist.csv"),
        records.iter().filter_map(|r| r.scores.as_ref().map(|s| s.aesthetic)),
        0.0,
        10.0,
        20,
    )?;
    write_histogram(
        &out_dir.join("quality_hist.csv"),
        records.iter().filter_map(|r| r.scores.as_ref().map(|s| s.quality)),
        0.0,
        10.0,
        20,
    )?;
    write_histogram(
        &out_dir.join("caption_words_hist.csv"),
        records
            .iter()
            .filter_map(|r| r.caption.as_ref().map(|c| c.word_count as f64)),
        0.0,
        400.0,
        20,
    )?;

    let mut labels: BTreeMap<&str, u64> = BTreeMap::new();
    for r in &records {
        *labels.entry(r.motion_label.as_str()).or_insert(0) += 1;
    }
    let mut out = String::from("label,count\n");
    for (label, count) in labels {
        out.push_str(&format!("{label},{count}\n"));
    }
    std::fs::write(out_dir.join("label_hist.csv"), out)?;
    Ok(())
}

fn write_histogram(
    path: &Path,
    values: impl Iterator<Item = f64>,
    lo: f64,
    hi: f64,
    bins: usize,
) -> Result<(), std::io::Error> {
    let mut counts = vec![0u64; bins];
    let width = (hi - lo) / bins as f64;
    for v in values {
        let idx = (((v - lo) / width).floor() as i64).clamp(0, bins as i64 - 1) as usize;
        counts[idx] += 1;
    }
    let mut file = File::create(path)?;
    writeln!(file, "bin_left,bin_right,count")?;
    for (i, c) in counts.iter().enumerate() {
        writeln!(
            file,
            "{:.6},{:.6},{c}",
            lo + i as f64 * width,
            lo + (i + 1) as f64 * width
        )?;
    }
    Ok(())
}
