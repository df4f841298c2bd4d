//! External service client contracts against a scripted HTTP server:
//! classifier, scorer and captioner payloads, fallback and retry behavior.

mod common;

use common::spawn_mock_server;
use curate::caption::{CaptionClient, CaptionConfig, CaptionError};
use curate::media::FrameBuffer;
use curate::motion::{
    ClassifierClient, ClassifierClientConfig, ClassifierConfig, GlobalMotion, LabelProvenance,
    MotionClass, MotionError, PairObservation,
};
use curate::quality::{QualityError, ScorerClient, ScorerClientConfig, ScorerProvenance};
use curate::synth;

fn color_frames(n: usize) -> Vec<FrameBuffer> {
    (0..n)
        .map(|i| {
            let rgb = synth::rgb_noise(i as u64, 32, 32);
            FrameBuffer {
                index: i as u64,
                timestamp_s: i as f64 / 30.0,
                width: 32,
                height: 32,
                luma: vec![128; 32 * 32],
                rgb: Some(rgb),
            }
        })
        .collect()
}

fn pan_pairs(n: usize) -> Vec<PairObservation> {
    (0..n)
        .map(|_| PairObservation {
            motion: GlobalMotion {
                affine: [1.0, 0.0, 0.0, 1.0, 3.0, 0.0],
                divergence: 0.0,
                curl: 0.0,
                translation: (3.0, 0.0),
                inlier_fraction: 0.95,
                rms_residual: 0.1,
            },
            center_magnitude: 3.0,
            border_magnitude: 3.0,
            luma_jump: false,
        })
        .collect()
}

#[test]
fn classifier_echoes_remote_label() {
    let url = spawn_mock_server(vec![(200, r#"{"label":"C3","confidence":0.9}"#.into())]);
    let client = ClassifierClient::new(ClassifierClientConfig { url, timeout_s: 5.0, retries: 0 });
    let label = client
        .classify_remote(&color_frames(4), &pan_pairs(10), &ClassifierConfig::default())
        .unwrap();
    assert_eq!(label.class, MotionClass::C3);
    assert_eq!(label.confidence, 0.9);
    assert_eq!(label.provenance, LabelProvenance::External);
}

#[test]
fn classifier_falls_back_on_503() {
    let url = spawn_mock_server(vec![(503, "overloaded".into())]);
    let client = ClassifierClient::new(ClassifierClientConfig { url, timeout_s: 5.0, retries: 0 });
    let cfg = ClassifierConfig { fallback: true, ..Default::default() };
    let label = client.classify_remote(&color_frames(4), &pan_pairs(10), &cfg).unwrap();
    assert_eq!(label.class, MotionClass::C4);
    assert_eq!(label.provenance, LabelProvenance::Fallback);
}

#[test]
fn classifier_no_fallback_surfaces_unavailable() {
    let url = spawn_mock_server(vec![(503, "down".into())]);
    let client = ClassifierClient::new(ClassifierClientConfig { url, timeout_s: 5.0, retries: 0 });
    let cfg = ClassifierConfig { fallback: false, ..Default::default() };
    let err = client
        .classify_remote(&color_frames(4), &pan_pairs(10), &cfg)
        .unwrap_err();
    assert!(matches!(err, MotionError::ServiceUnavailable(_)));
}

#[test]
fn classifier_malformed_body_is_not_retried_as_fallback() {
    let url = spawn_mock_server(vec![(200, r#"{"nonsense":true}"#.into())]);
    let client = ClassifierClient::new(ClassifierClientConfig { url, timeout_s: 5.0, retries: 0 });
    let err = client
        .classify_remote(&color_frames(4), &pan_pairs(10), &ClassifierConfig::default())
        .unwrap_err();
    assert!(matches!(err, MotionError::MalformedResponse(_)));
}

#[test]
fn scorer_echoes_remote_scores() {
    let url = spawn_mock_server(vec![(200, r#"{"aesthetic":5.2,"quality":6.0}"#.into())]);
    let client = ScorerClient::new(ScorerClientConfig {
        url,
        timeout_s: 5.0,
        retries: 0,
        fallback: false,
    });
    let rec = client.score_remote("clip-1", &color_frames(3)).unwrap();
    assert_eq!(rec.aesthetic, 5.2);
    assert_eq!(rec.quality, 6.0);
    assert_eq!(rec.scorer_provenance, ScorerProvenance::External);
}

#[test]
fn scorer_falls_back_to_builtin() {
    let url = spawn_mock_server(vec![(503, "down".into())]);
    let client = ScorerClient::new(ScorerClientConfig {
        url,
        timeout_s: 5.0,
        retries: 0,
        fallback: true,
    });
    let rec = client.score_remote("clip-1", &color_frames(3)).unwrap();
    assert_eq!(rec.scorer_provenance, ScorerProvenance::BuiltinProxy);
    assert!((0.0..=10.0).contains(&rec.aesthetic));
}

#[test]
fn scorer_rejects_out_of_range_scores() {
    let url = spawn_mock_server(vec![(200, r#"{"aesthetic":12.0,"quality":6.0}"#.into())]);
    let client = ScorerClient::new(ScorerClientConfig {
        url,
        timeout_s: 5.0,
        retries: 0,
        fallback: true,
    });
    let err = client.score_remote("clip-1", &color_frames(3)).unwrap_err();
    assert!(matches!(err, QualityError::MalformedResponse(_)));
}

fn caption_cfg(url: String) -> CaptionConfig {
    CaptionConfig {
        url,
        timeout_s: 5.0,
        rps_limit: 0.0,
        backoff_s: vec![0.01, 0.01, 0.01],
        ..Default::default()
    }
}

#[test]
fn caption_206_word_fixture() {
    let mut words: Vec<String> =
        ["The", "camera", "pans", "right", "then", "tilts", "up"].map(String::from).to_vec();
    while words.len() < 206 {
        words.push(format!("w{}", words.len()));
    }
    let text = words.join(" ");
    let body = serde_json::json!({"text": text, "model_id": "mock-vlm"}).to_string();
    let url = spawn_mock_server(vec![(200, body)]);
    let client = CaptionClient::new(caption_cfg(url));
    let rec = client.request_caption("clip-1", &color_frames(8)).unwrap();
    assert_eq!(rec.word_count, 206);
    assert!(rec.camera_terms_found.contains(&"pan".to_string()));
    assert!(rec.camera_terms_found.contains(&"tilt".to_string()));
    assert_eq!(rec.model_id, "mock-vlm");
}

#[test]
fn caption_empty_text_is_error() {
    let url = spawn_mock_server(vec![(200, r#"{"text":""}"#.into())]);
    let client = CaptionClient::new(caption_cfg(url));
    let err = client.request_caption("clip-1", &color_frames(8)).unwrap_err();
    assert!(matches!(err, CaptionError::EmptyCaption));
}

#[test]
fn caption_retries_then_succeeds() {
    let url = spawn_mock_server(vec![
        (500, "transient".into()),
        (200, r#"{"text":"the camera pans left over water"}"#.into()),
    ]);
    let client = CaptionClient::new(caption_cfg(url));
    let rec = client.request_caption("clip-1", &color_frames(8)).unwrap();
    assert_eq!(rec.attempts, 2);
    assert_eq!(rec.word_count, 6);
}

#[test]
fn caption_frame_count_bounds() {
    let url = spawn_mock_server(vec![(200, r#"{"text":"x"}"#.into())]);
    let client = CaptionClient::new(caption_cfg(url));
    assert!(matches!(
        client.request_caption("clip-1", &color_frames(3)),
        Err(CaptionError::BadFrameCount(3))
    ));
    assert!(matches!(
        client.request_caption("clip-1", &color_frames(33)),
        Err(CaptionError::BadFrameCount(33))
    ));
}
