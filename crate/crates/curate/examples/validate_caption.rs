//! Offline caption validation: word count, camera-term detection and the
//! checks a captioning response must pass before it enters the manifest.
//!
//!     cargo run --example validate_caption ["caption text"]

use curate::caption::{self, CaptionConfig, CaptionRecord};

fn main() {
    let text = std::env::args().nth(1).unwrap_or_else(|| {
        "The camera pans slowly to the right across a harbor at dusk, then \
         tilts upward to follow a flock of gulls."
            .into()
    });
    let cfg = CaptionConfig::default();
    let record = CaptionRecord {
        clip_id: "demo".into(),
        word_count: caption::word_count(&text),
        camera_terms_found: caption::find_camera_terms(&text, &cfg.vocabulary),
        language_tag: "en".into(),
        model_id: "offline".into(),
        attempts: 0,
        text,
    };
    println!("words        {}", record.word_count);
    println!("camera terms {:?}", record.camera_terms_found);
    let report = caption::validate_caption(&record, &cfg);
    println!("too_short          {}", report.too_short);
    println!("no_camera_terms    {}", report.no_camera_terms);
    println!("non_target_language {}", report.non_target_language);
}
