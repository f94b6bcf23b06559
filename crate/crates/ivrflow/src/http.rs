//! Single-shot JSON POST used by the remote backend adapters.

use std::time::Duration;

/// POST `body` to `endpoint + path`, expect a 200 with a JSON body.
/// Errors come back as plain reasons; the adapters wrap them in their
/// own unavailable-backend variants.
pub(crate) fn post_json(
    endpoint: &str,
    path: &str,
    body: &serde_json::Value,
    timeout: Duration,
) -> std::result::Result<serde_json::Value, String> {
    let url = format!("{}{}", endpoint.trim_end_matches('/'), path);
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .build()
        .into();
    let mut response = agent
        .post(&url)
        .header("content-type", "application/json")
        .send(body.to_string().as_bytes())
        .map_err(|e| format!("POST {url}: {e}"))?;
    if response.status() != 200 {
        return Err(format!("POST {url}: status {}", response.status()));
    }
    let text = response
        .body_mut()
        .read_to_string()
        .map_err(|e| format!("POST {url}: read body: {e}"))?;
    serde_json::from_str(&text).map_err(|e| format!("POST {url}: invalid JSON reply: {e}"))
}
