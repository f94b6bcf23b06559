//! Text-to-speech adapter boundary and confirmation-prompt templating.
//!
//! TTS failure is never fatal: the session degrades to sending prompt text
//! for the bridge to render, so a dead synthesizer cannot block a call.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{EngineError, Result};
use crate::http;
use crate::nlu::IntentClass;

/// One synthesis call.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SynthesisRequest {
    pub text: String,
    pub language: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub voice: Option<String>,
}

/// Backend selection for [`synthesize`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TtsBackendConfig {
    /// Deterministic mock: the audio reference is a stable content hash.
    Mock,
    /// HTTP backend speaking the `/v1/synthesize` contract.
    Remote {
        endpoint: String,
        #[serde(default = "crate::asr::default_timeout_ms")]
        timeout_ms: u64,
    },
}

/// Render the spoken confirmation for a classified intent.
///
/// Substitutes `{class_name}` with the class display name for `language`;
/// a class with no display name for that language falls back to its
/// `class_id` and a warning is recorded.
pub fn render_confirmation(class: &IntentClass, language: &str, template: &str) -> String {
    let name = match class.display_name.get(language) {
        Some(name) => name.as_str(),
        None => {
            log::warn!(
                "class {} has no display name for language {language}; using class_id",
                class.class_id
            );
            class.class_id.as_str()
        }
    };
    template.replace("{class_name}", name)
}

#[derive(Deserialize)]
struct SynthesizeReply {
    audio_ref: String,
}

/// Produce an audio reference for the request.
///
/// Mock: `mock-audio:` plus a stable hash of `(text, language)`, so equal
/// prompts always share a reference. Remote: POST to `/v1/synthesize`;
/// failure maps to [`EngineError::TtsUnavailable`] and the caller degrades
/// to text playback.
pub fn synthesize(request: &SynthesisRequest, backend: &TtsBackendConfig) -> Result<String> {
    if request.text.is_empty() {
        return Err(EngineError::Config {
            path: "(runtime)".to_string(),
            field: "text".to_string(),
            reason: "synthesis request with empty text".to_string(),
        });
    }
    match backend {
        TtsBackendConfig::Mock => {
            let mut hash = crate::seed::fnv1a(request.text.as_bytes());
            hash = crate::seed::fnv1a_continue(hash, b"\x1f");
            hash = crate::seed::fnv1a_continue(hash, request.language.as_bytes());
            Ok(format!("mock-audio:{hash:016x}"))
        }
        TtsBackendConfig::Remote {
            endpoint,
            timeout_ms,
        } => {
            let body = serde_json::to_value(request).expect("request serializes");
            let reply = http::post_json(
                endpoint,
                "/v1/synthesize",
                &body,
                Duration::from_millis(*timeout_ms),
            )
            .map_err(|reason| EngineError::TtsUnavailable { reason })?;
            let reply: SynthesizeReply =
                serde_json::from_value(reply).map_err(|e| EngineError::TtsUnavailable {
                    reason: format!("malformed reply: {e}"),
                })?;
            Ok(reply.audio_ref)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;
    use std::collections::HashSet;

    fn class_with(display: &[(&str, &str)]) -> IntentClass {
        IntentClass {
            class_id: "card_lost".to_string(),
            display_name: display
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect::<BTreeMap<_, _>>(),
            queue_id: "Q17".to_string(),
            keywords: vec!["карта".to_string()],
        }
    }

    #[test]
    fn confirmation_substitutes_display_name() {
        let class = class_with(&[("kk", "карта жоғалды")]);
        let text = render_confirmation(&class, "kk", "Сіздің мәселеңіз: {class_name}. Дұрыс па?");
        assert_eq!(text, "Сіздің мәселеңіз: карта жоғалды. Дұрыс па?");
    }

    #[test]
    fn confirmation_falls_back_to_class_id() {
        let class = class_with(&[("ru", "карта утеряна")]);
        let text = render_confirmation(&class, "kk", "{class_name}?");
        assert_eq!(text, "card_lost?");
    }

    fn request(text: &str) -> SynthesisRequest {
        SynthesisRequest {
            text: text.to_string(),
            language: "kk".to_string(),
            voice: None,
        }
    }

    #[test]
    fn mock_synthesis_is_pure() {
        let a = synthesize(&request("Дұрыс па?"), &TtsBackendConfig::Mock).unwrap();
        let b = synthesize(&request("Дұрыс па?"), &TtsBackendConfig::Mock).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("mock-audio:"));
    }

    #[test]
    fn mock_synthesis_distinguishes_language() {
        let kk = synthesize(&request("иә"), &TtsBackendConfig::Mock).unwrap();
        let ru = synthesize(
            &SynthesisRequest {
                text: "иә".to_string(),
                language: "ru".to_string(),
                voice: None,
            },
            &TtsBackendConfig::Mock,
        )
        .unwrap();
        assert_ne!(kk, ru);
    }

    #[test]
    fn mock_synthesis_has_no_collisions_on_random_strings() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4242);
        let mut seen = HashSet::new();
        let mut texts = HashSet::new();
        for _ in 0..10_000 {
            let len = rng.random_range(1..24);
            let text: String = (0..len)
                .map(|_| char::from_u32(rng.random_range(0x430..0x450)).unwrap())
                .collect();
            if !texts.insert(text.clone()) {
                continue;
            }
            let audio = synthesize(&request(&text), &TtsBackendConfig::Mock).unwrap();
            assert!(seen.insert(audio), "collision for {text}");
        }
    }

    #[test]
    fn empty_text_is_rejected() {
        assert!(matches!(
            synthesize(&request(""), &TtsBackendConfig::Mock),
            Err(EngineError::Config { .. })
        ));
    }
}
