//! End-to-end pipeline run over a generated corpus: renders sources,
//! writes a manifest, then prints the report and the kept clips.
//!
//!     cargo run --example run_pipeline [work_dir]

use std::fs;
use std::io::BufReader;
use std::path::PathBuf;

use curate::config::PipelineConfig;
use curate::manifest;
use curate::pipeline;
use curate::synth::{self, ClipKind};

fn main() {
    let work: PathBuf =
        std::env::args().nth(1).unwrap_or_else(|| "pipeline_demo".into()).into();
    fs::create_dir_all(&work).expect("create work dir");

    // Three short sources: two pans and a tracking shot, padded with
    // static lead-ins so the segmenter has something to trim.
    let mut sources = Vec::new();
    for (i, kind) in [ClipKind::Pan, ClipKind::Pan, ClipKind::Tracking].iter().enumerate() {
        let mut frames = synth::render_clip(ClipKind::Static, 50 + i as u64, 160, 96, 6);
        frames.extend(synth::render_clip(*kind, 50 + i as u64, 160, 96, 36));
        let path = work.join(format!("source{i}.y4m"));
        synth::write_y4m_gray(&path, &frames, 160, 96, 10, 1).expect("write source");
        sources.push(path.display().to_string());
    }
    let list = work.join("sources.txt");
    fs::write(&list, sources.join("\n")).expect("write source list");

    let mut cfg = PipelineConfig::default();
    cfg.sources = list.display().to_string();
    cfg.manifest_path = work.join("manifest.jsonl").display().to_string();
    cfg.target_height = 96;
    cfg.sample_n = 8;
    cfg.segmenter.min_len_s = 2.0;
    cfg.filter.theta_aes = 0.5; // mono fixtures score low on colorfulness
    cfg.filter.theta_qual = 0.5;

    let report = pipeline::run(&cfg).expect("pipeline run");
    println!("{report:#?}");

    let file = fs::File::open(&cfg.manifest_path).expect("open manifest");
    let outcome = manifest::read_records(BufReader::new(file), true).expect("read manifest");
    for r in outcome.records.iter().filter(|r| r.decision.keep) {
        println!(
            "kept {} frames {}..={} label {} conf {:.2}",
            r.clip_id,
            r.span.start_frame,
            r.span.end_frame,
            r.motion_label.as_str(),
            r.motion_confidence
        );
    }

    let report_dir = work.join("report");
    pipeline::report(cfg.manifest_path.as_ref(), &report_dir).expect("report");
    println!("report written to {}", report_dir.display());
}
