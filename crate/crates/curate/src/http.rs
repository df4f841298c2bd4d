//! Shared blocking JSON-over-HTTP helper for the external service clients.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum HttpError {
    #[error("service unavailable: {0}")]
    Unavailable(String),
    #[error("malformed response body: {0}")]
    BadBody(String),
}

/// POSTs `body` as JSON and parses the JSON response.
///
/// Transport errors and 5xx statuses are retried up to `retries` extra
/// attempts, sleeping `backoff_s[i]` seconds before retry i (last entry
/// reused when the schedule runs out). A 2xx with an unparsable body is
/// not retried; the contract is broken, not the transport.
pub fn post_json<B: Serialize, T: DeserializeOwned>(
    url: &str,
    body: &B,
    timeout_s: f64,
    retries: u32,
    backoff_s: &[f64],
) -> Result<T, HttpError> {
    let (value, _attempts) = post_json_with_attempts(url, body, timeout_s, retries, backoff_s)?;
    Ok(value)
}

pub fn post_json_with_attempts<B: Serialize, T: DeserializeOwned>(
    url: &str,
    body: &B,
    timeout_s: f64,
    retries: u32,
    backoff_s: &[f64],
) -> Result<(T, u32), HttpError> {
    let client = reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs_f64(timeout_s.max(0.001)))
        .build()
        .map_err(|e| HttpError::Unavailable(e.to_string()))?;

    let mut last_err = String::new();
    for attempt in 0..=retries {
        if attempt > 0 {
            let idx = (attempt as usize - 1).min(backoff_s.len().saturating_sub(1));
            let wait = backoff_s.get(idx).copied().unwrap_or(0.0);
            if wait > 0.0 {
                std::thread::sleep(Duration::from_secs_f64(wait));
            }
        }
        match client.post(url).json(body).send() {
            Ok(resp) => {
                let status = resp.status();
                if status.is_success() {
                    let text = resp
                        .text()
                        .map_err(|e| HttpError::Unavailable(e.to_string()))?;
                    return serde_json::from_str(&text)
                        .map(|v| (v, attempt + 1))
                        .map_err(|e| HttpError::BadBody(format!("{e}: {text:.200}")));
                }
                last_err = format!("HTTP {status}");
                if status.is_client_error() {
                    // 4xx will not improve on retry.
                    break;
                }
            }
            Err(e) => last_err = e.to_string(),
        }
    }
    Err(HttpError::Unavailable(last_err))
}
