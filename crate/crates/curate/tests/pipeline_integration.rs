//! End-to-end pipeline behavior on a synthetic Y4M corpus: decode
//! contracts, span bookkeeping, resume idempotence, worker-count
//! invariance and report output.

use std::fs;
use std::path::{Path, PathBuf};

use curate::config::PipelineConfig;
use curate::media::{self, MediaError};
use curate::segmenter::{self, SegmenterConfig};
use curate::synth::{self, ClipKind, Texture};
use curate::{flow, manifest, pipeline};

const W: usize = 160;
const H: usize = 96;
const FPS: u32 = 10;

/// One fixture source: static lead-in, 40 moving frames, static tail,
/// all rendered from one texture so scene content stays continuous.
fn write_fixture_source(dir: &Path, name: &str, seed: u64, kind: ClipKind) -> PathBuf {
    let tex = Texture::noise(seed, 512, 512);
    let subject = Texture::noise(seed ^ 0x77, 256, 256);
    let motion = 40usize;
    // Offset of motion-frame t relative to the lead-in.
    let offset = |t: usize| -> (f32, f32) {
        let t = t as f32;
        match kind {
            ClipKind::Oscillation => {
                (8.0 * (std::f32::consts::TAU * t / 16.0).sin(), 0.0)
            }
            _ => (2.2 * t, 0.0),
        }
    };
    let mut frames: Vec<Vec<u8>> = Vec::new();
    let mut push = |t: Option<usize>| {
        let t = t.unwrap_or(0);
        let frame = match kind {
            ClipKind::Rotation => {
                let angle = 0.02 * t as f32;
                let (s, c) = angle.sin_cos();
                let (cx, cy) = (W as f32 / 2.0, H as f32 / 2.0);
                tex.render_warp(W, H, |x, y| {
                    let (rx, ry) = (x - cx, y - cy);
                    (cx + c * rx - s * ry, cy + s * rx + c * ry)
                })
            }
            ClipKind::Tracking => {
                let (ox, oy) = offset(t);
                let mut frame = tex.render(W, H, ox, oy);
                for y in (H * 3 / 10)..(H * 7 / 10) {
                    for x in (W * 3 / 10)..(W * 7 / 10) {
                        frame[y * W + x] = (subject.sample(x as f32, y as f32) + 0.5) as u8;
                    }
                }
                frame
            }
            _ => {
                let (ox, oy) = offset(t);
                tex.render(W, H, ox, oy)
            }
        };
        frames.push(frame);
    };
    for _ in 0..8 {
        push(None);
    }
    for t in 0..motion {
        push(Some(t));
    }
    for _ in 0..8 {
        push(Some(motion - 1));
    }
    let path = dir.join(format!("{name}.y4m"));
    synth::write_y4m_gray(&path, &frames, W, H, FPS, 1).unwrap();
    path
}

fn fixture_corpus(dir: &Path) -> Vec<PathBuf> {
    vec![
        write_fixture_source(dir, "pan_a", 11, ClipKind::Pan),
        write_fixture_source(dir, "pan_b", 22, ClipKind::Pan),
        write_fixture_source(dir, "osc_a", 33, ClipKind::Oscillation),
        write_fixture_source(dir, "rot_a", 44, ClipKind::Rotation),
        write_fixture_source(dir, "track_a", 55, ClipKind::Tracking),
    ]
}

fn corpus_config(dir: &Path, manifest_name: &str) -> PipelineConfig {
    let sources: Vec<String> = fixture_corpus(dir)
        .iter()
        .map(|p| p.display().to_string())
        .collect();
    let sources_path = dir.join("sources.txt");
    fs::write(&sources_path, format!("# fixtures\n{}\n", sources.join("\n"))).unwrap();

    let mut cfg = PipelineConfig::default();
    cfg.sources = sources_path.display().to_string();
    cfg.manifest_path = dir.join(manifest_name).display().to_string();
    cfg.target_height = H as u32;
    cfg.sample_n = 8;
    cfg.segmenter.min_len_s = 2.0;
    // The rotation and oscillation fixtures dip below 1 px/frame mean flow.
    cfg.segmenter.theta_motion = 0.3;
    // Mono fixtures have zero colorfulness; keep decisions alive anyway.
    cfg.filter.theta_aes = 0.5;
    cfg.filter.theta_qual = 0.5;
    cfg
}

fn canonical_sorted_lines(path: &str) -> Vec<String> {
    let file = fs::File::open(path).unwrap();
    let outcome = manifest::read_records(std::io::BufReader::new(file), true).unwrap();
    let mut lines: Vec<String> = outcome
        .records
        .iter()
        .map(|r| r.to_canonical_line())
        .collect();
    lines.sort();
    lines
}

/// Independent single-threaded span counter: probe + trace + a fresh
/// maximal-run scan, sharing no code with the pipeline's span logic.
fn reference_clip_count(sources: &[String], cfg: &PipelineConfig) -> u64 {
    let mut total = 0u64;
    for src in sources {
        let meta = media::probe(src).unwrap();
        let stream = media::open_stream(&meta, cfg.target_height, false).unwrap();
        let trace =
            segmenter::build_trace(&meta.source_id, meta.fps(), stream, &cfg.flow).unwrap();
        total += reference_scan(&trace, &cfg.segmenter) as u64;
    }
    total
}

fn reference_scan(trace: &segmenter::MotionTrace, cfg: &SegmenterConfig) -> usize {
    let mags: Vec<f64> = trace.pair_stats.iter().map(|p| p.mean_magnitude).collect();
    let lumas: Vec<f64> = trace.pair_stats.iter().map(|p| p.mean_luma).collect();
    let n = mags.len();
    let cut: Vec<bool> = (0..n)
        .map(|i| {
            mags[i] > cfg.theta_cut
                || (i + 1 < n && (lumas[i + 1] - lumas[i]).abs() > cfg.luma_jump_max)
        })
        .collect();
    let min_pairs = ((cfg.min_len_s * trace.fps).ceil() as usize).max(1);
    let max_pairs = ((cfg.max_len_s * trace.fps).floor() as usize).max(min_pairs);
    let mut count = 0;
    let mut run = 0usize;
    for i in 0..=n {
        let ok = i < n && mags[i] >= cfg.theta_motion && !cut[i];
        if ok {
            run += 1;
        } else {
            let full = run / max_pairs;
            count += full;
            if run % max_pairs >= min_pairs {
                count += 1;
            }
            run = 0;
        }
    }
    count
}

#[test]
fn probe_reports_exact_frame_count() {
    let dir = tempfile::tempdir().unwrap();
    let tex = Texture::noise(5, 256, 256);
    let frames: Vec<Vec<u8>> = (0..300).map(|_| tex.render(W, H, 0.0, 0.0)).collect();
    let path = dir.path().join("ten_seconds.y4m");
    synth::write_y4m_gray(&path, &frames, W, H, 30, 1).unwrap();

    let meta = media::probe(path.to_str().unwrap()).unwrap();
    assert_eq!(meta.frame_count, 300);
    assert_eq!(meta.fps(), 30.0);
    assert!((meta.duration_s - 10.0).abs() < 1e-9);
}

#[test]
fn probe_single_frame_video() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("single.y4m");
    synth::write_y4m_gray(&path, &[vec![100u8; W * H]], W, H, 24, 1).unwrap();
    let meta = media::probe(path.to_str().unwrap()).unwrap();
    assert_eq!(meta.frame_count, 1);
    assert!((meta.duration_s - 1.0 / 24.0).abs() < 1e-12);
}

#[test]
fn probe_text_file_is_undecodable() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("notes.y4m");
    fs::write(&path, "this is not a video\n").unwrap();
    assert!(matches!(
        media::probe(path.to_str().unwrap()),
        Err(MediaError::UndecodableStream(..))
    ));
}

#[test]
fn stream_yields_every_frame_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_fixture_source(dir.path(), "det", 77, ClipKind::Pan);
    let meta = media::probe(path.to_str().unwrap()).unwrap();

    let collect = || -> Vec<_> {
        media::open_stream(&meta, H as u32, false)
            .unwrap()
            .map(|f| f.unwrap())
            .collect()
    };
    let a = collect();
    let b = collect();
    assert_eq!(a.len() as u64, meta.frame_count);
    for (i, f) in a.iter().enumerate() {
        assert_eq!(f.index, i as u64);
        assert!((f.timestamp_s - i as f64 / meta.fps()).abs() < 1e-6);
    }
    for (fa, fb) in a.iter().zip(&b) {
        assert_eq!(fa.luma, fb.luma);
    }
}

#[test]
fn downscale_shape_contract() {
    let dir = tempfile::tempdir().unwrap();
    let tex = Texture::noise(6, 512, 512);
    let frames: Vec<Vec<u8>> = (0..3).map(|_| tex.render(1920, 1080, 0.0, 0.0)).collect();
    let path = dir.path().join("fullhd.y4m");
    synth::write_y4m_gray(&path, &frames, 1920, 1080, 30, 1).unwrap();
    let meta = media::probe(path.to_str().unwrap()).unwrap();
    let frame = media::open_stream(&meta, 270, false)
        .unwrap()
        .next()
        .unwrap()
        .unwrap();
    assert_eq!((frame.width, frame.height), (480, 270));
    assert_eq!(frame.luma.len(), 480 * 270);
}

#[test]
fn full_run_matches_reference_count_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = corpus_config(dir.path(), "manifest.jsonl");

    let report = pipeline::run(&cfg).unwrap();
    assert!(report.source_errors.is_empty(), "{:?}", report.source_errors);
    assert_eq!(report.sources, 5);
    assert!(report.clips_found >= 5, "{report:?}");
    assert_eq!(report.records_written, report.clips_found);

    let sources = media::read_source_manifest(Path::new(&cfg.sources)).unwrap();
    let expected = reference_clip_count(&sources, &cfg);
    assert_eq!(report.clips_found, expected);

    // Resume: second run finds the same clips but writes nothing new.
    let again = pipeline::run(&cfg).unwrap();
    assert_eq!(again.records_written, 0, "{again:?}");
    assert_eq!(again.clips_found, report.clips_found);
}

#[test]
fn worker_count_does_not_change_manifest_content() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg1 = corpus_config(dir.path(), "manifest_w1.jsonl");
    cfg1.workers = 1;
    pipeline::run(&cfg1).unwrap();

    let mut cfg8 = corpus_config(dir.path(), "manifest_w8.jsonl");
    cfg8.workers = 8;
    pipeline::run(&cfg8).unwrap();

    let a = canonical_sorted_lines(&cfg1.manifest_path);
    let b = canonical_sorted_lines(&cfg8.manifest_path);
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn interrupted_run_resumes_to_identical_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_full = corpus_config(dir.path(), "manifest_full.jsonl");
    pipeline::run(&cfg_full).unwrap();
    let full = fs::read_to_string(&cfg_full.manifest_path).unwrap();
    let lines: Vec<&str> = full.lines().collect();
    assert!(lines.len() >= 3);

    // Simulate a crash after k records, then resume into the same sink.
    let cfg_resume = corpus_config(dir.path(), "manifest_resumed.jsonl");
    let k = lines.len() / 2;
    fs::write(
        &cfg_resume.manifest_path,
        lines[..k].join("\n") + "\n",
    )
    .unwrap();
    pipeline::run(&cfg_resume).unwrap();

    assert_eq!(
        canonical_sorted_lines(&cfg_full.manifest_path),
        canonical_sorted_lines(&cfg_resume.manifest_path)
    );
}

#[test]
fn per_source_failure_is_isolated() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = corpus_config(dir.path(), "manifest_iso.jsonl");
    let bad = dir.path().join("broken.y4m");
    fs::write(&bad, "YUV4MPEG2 W160").unwrap();
    let mut sources = fs::read_to_string(&cfg.sources).unwrap();
    sources.push_str(&format!("{}\n", bad.display()));
    fs::write(&cfg.sources, sources).unwrap();
    cfg.workers = 2;

    let report = pipeline::run(&cfg).unwrap();
    assert_eq!(report.sources, 6);
    assert_eq!(report.source_errors.len(), 1);
    assert!(report.source_errors[0].0.contains("broken"));
    assert!(report.records_written > 0);
}

#[test]
fn report_emits_consistent_histograms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = corpus_config(dir.path(), "manifest_rep.jsonl");
    pipeline::run(&cfg).unwrap();

    let out = dir.path().join("reports");
    pipeline::report(Path::new(&cfg.manifest_path), &out).unwrap();

    let stats: manifest::DatasetStats =
        serde_json::from_str(&fs::read_to_string(out.join("stats.json")).unwrap()).unwrap();
    let records = canonical_sorted_lines(&cfg.manifest_path).len() as u64;
    assert!(stats.kept_clips <= records);

    for name in ["aesthetic_hist.csv", "quality_hist.csv"] {
        let csv = fs::read_to_string(out.join(name)).unwrap();
        let total: u64 = csv
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
            .sum();
        assert_eq!(total, records, "{name}");
        assert_eq!(csv.lines().count(), 21, "{name}");
    }

    let labels = fs::read_to_string(out.join("label_hist.csv")).unwrap();
    let total: u64 = labels
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, records);
}

#[test]
fn report_on_empty_manifest_is_zeroed() {
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = dir.path().join("empty.jsonl");
    fs::write(&manifest_path, "").unwrap();
    let out = dir.path().join("reports");
    pipeline::report(&manifest_path, &out).unwrap();
    let stats: manifest::DatasetStats =
        serde_json::from_str(&fs::read_to_string(out.join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats.kept_clips, 0);
    assert_eq!(stats.avg_duration_s, 0.0);
}

#[test]
fn flow_config_flows_into_trace() {
    // Sanity: a pan fixture yields a trace whose magnitudes sit near the
    // rendered speed for the configured flow parameters.
    let dir = tempfile::tempdir().unwrap();
    let tex = Texture::noise(123, 512, 512);
    let frames: Vec<Vec<u8>> = (0..10).map(|i| tex.render(W, H, 2.0 * i as f32, 0.0)).collect();
    let path = dir.path().join("pan.y4m");
    synth::write_y4m_gray(&path, &frames, W, H, FPS, 1).unwrap();
    let meta = media::probe(path.to_str().unwrap()).unwrap();
    let stream = media::open_stream(&meta, H as u32, false).unwrap();
    let trace =
        segmenter::build_trace(&meta.source_id, meta.fps(), stream, &flow::FlowConfig::default())
            .unwrap();
    assert_eq!(trace.pair_stats.len(), 9);
    for p in &trace.pair_stats {
        assert!((p.mean_magnitude - 2.0).abs() < 0.5, "{}", p.mean_magnitude);
    }
}
