//! Speech-to-text adapter boundary.
//!
//! Two backends live behind one contract: a remote HTTP service
//! (`POST /v1/transcribe`) and a deterministic mock that treats the audio
//! reference as scenario text and corrupts it at a calibrated word-error
//! rate. The mock is what desk-scale tests and the simulator run against;
//! no audio stack is involved.

use std::sync::OnceLock;
use std::time::Duration;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{EngineError, Result};
use crate::http;

/// Where a transcript came from.
#[derive(Debug, Clone, PartialEq)]
pub enum TranscriptSource {
    RemoteBackend,
    MockIdentity,
    MockNoisy { rate: f64, seed: u64 },
}

/// Normalized ASR output consumed by the rest of the pipeline.
///
/// `tokens` is always `normalize(raw_text)`; construction goes through
/// [`Transcript::new`] so the invariant cannot drift.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    raw_text: String,
    tokens: Vec<String>,
    language: String,
    source: TranscriptSource,
}

impl Transcript {
    pub fn new(
        raw_text: impl Into<String>,
        language: impl Into<String>,
        source: TranscriptSource,
    ) -> Self {
        let raw_text = raw_text.into();
        let tokens = normalize(&raw_text);
        Transcript {
            raw_text,
            tokens,
            language: language.into(),
            source,
        }
    }

    pub fn raw_text(&self) -> &str {
        &self.raw_text
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn source(&self) -> &TranscriptSource {
        &self.source
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Backend selection for [`transcribe`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AsrBackendConfig {
    /// Deterministic mock: the audio reference is scenario text, corrupted
    /// at `error_rate` with a seeded generator.
    Mock { error_rate: f64, seed: u64 },
    /// HTTP backend speaking the `/v1/transcribe` contract.
    Remote {
        endpoint: String,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
    },
}

pub(crate) fn default_timeout_ms() -> u64 {
    5000
}

impl AsrBackendConfig {
    /// Same backend with the mock seed replaced. Sessions derive a private
    /// seed per utterance so concurrency cannot reorder randomness.
    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            AsrBackendConfig::Mock { error_rate, .. } => AsrBackendConfig::Mock {
                error_rate: *error_rate,
                seed,
            },
            remote => remote.clone(),
        }
    }
}

fn punctuation() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\p{P}+").expect("punctuation class"))
}

/// Case-fold, strip Unicode punctuation and collapse whitespace into a
/// token list. Total function; Kazakh Cyrillic letters pass through.
pub fn normalize(raw_text: &str) -> Vec<String> {
    let lowered: String = raw_text.chars().flat_map(char::to_lowercase).collect();
    let stripped = punctuation().replace_all(&lowered, "");
    stripped.split_whitespace().map(str::to_owned).collect()
}

/// Which edit kinds the corruptor may apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditProfile {
    /// Substitution, deletion or insertion, chosen uniformly.
    Mixed,
    /// Substitution only; at rate 1.0 the measured WER is exactly 1.0.
    SubstitutionOnly,
}

/// Corrupt `tokens` at the given per-token error rate.
///
/// Each token is hit with probability `rate`; a hit applies one edit from
/// the profile. Garbage tokens are `⟨errK⟩` markers so corrupted output
/// never collides with taxonomy keywords. Deterministic for fixed
/// `(tokens, rate, seed)`: the generator advances a fixed number of draws
/// per token, so the set of corrupted positions is nested as `rate` grows.
pub fn inject_errors(tokens: &[String], rate: f64, seed: u64) -> Result<Vec<String>> {
    inject_errors_with_profile(tokens, rate, seed, EditProfile::Mixed)
}

/// [`inject_errors`] with an explicit edit profile.
pub fn inject_errors_with_profile(
    tokens: &[String],
    rate: f64,
    seed: u64,
    profile: EditProfile,
) -> Result<Vec<String>> {
    if !(0.0..=1.0).contains(&rate) || rate.is_nan() {
        return Err(EngineError::Config {
            path: "(runtime)".to_string(),
            field: "error_rate".to_string(),
            reason: format!("rate {rate} outside [0, 1]"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(tokens.len());
    for token in tokens {
        // Fixed draw count per token keeps corruption sets nested across rates.
        let roll: f64 = rng.random();
        let kind: u32 = rng.random_range(0..3);
        let marker: u32 = rng.random_range(0..1_000_000);
        if roll >= rate {
            out.push(token.clone());
            continue;
        }
        let kind = match profile {
            EditProfile::SubstitutionOnly => 0,
            EditProfile::Mixed => kind,
        };
        match kind {
            0 => out.push(garbage(marker)),
            1 => {}
            _ => {
                out.push(token.clone());
                out.push(garbage(marker));
            }
        }
    }
    Ok(out)
}

fn garbage(marker: u32) -> String {
    format!("⟨err{marker}⟩")
}

#[derive(Serialize)]
struct TranscribeRequest<'a> {
    audio_ref: &'a str,
    language: &'a str,
}

#[derive(Deserialize)]
struct TranscribeReply {
    text: String,
}

/// Convert an audio reference into a [`Transcript`].
///
/// Mock backends treat `audio_ref` as the scenario's reference text and
/// pass it through [`inject_errors`]. Remote backends POST
/// `{"audio_ref", "language"}` to `<endpoint>/v1/transcribe` and expect
/// `{"text"}` back; any non-200 or transport failure maps to
/// [`EngineError::AsrUnavailable`].
pub fn transcribe(
    audio_ref: &str,
    language: &str,
    backend: &AsrBackendConfig,
) -> Result<Transcript> {
    if audio_ref.trim().is_empty() {
        return Err(EngineError::EmptyUtterance);
    }
    match backend {
        AsrBackendConfig::Mock { error_rate, seed } => {
            if *error_rate == 0.0 {
                return Ok(Transcript::new(
                    audio_ref,
                    language,
                    TranscriptSource::MockIdentity,
                ));
            }
            let reference = normalize(audio_ref);
            let corrupted = inject_errors(&reference, *error_rate, *seed)?;
            Ok(Transcript::new(
                corrupted.join(" "),
                language,
                TranscriptSource::MockNoisy {
                    rate: *error_rate,
                    seed: *seed,
                },
            ))
        }
        AsrBackendConfig::Remote {
            endpoint,
            timeout_ms,
        } => {
            let body = serde_json::to_value(TranscribeRequest {
                audio_ref,
                language,
            })
            .expect("request serializes");
            let reply = http::post_json(
                endpoint,
                "/v1/transcribe",
                &body,
                Duration::from_millis(*timeout_ms),
            )
            .map_err(|reason| EngineError::AsrUnavailable { reason })?;
            let reply: TranscribeReply =
                serde_json::from_value(reply).map_err(|e| EngineError::AsrUnavailable {
                    reason: format!("malformed reply: {e}"),
                })?;
            Ok(Transcript::new(
                reply.text,
                language,
                TranscriptSource::RemoteBackend,
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_casefolds_and_strips_punctuation() {
        assert_eq!(normalize("Сәлем,  ӘЛЕМ!"), vec!["сәлем", "әлем"]);
    }

    #[test]
    fn normalize_empty_is_empty() {
        assert_eq!(normalize(""), Vec::<String>::new());
        assert_eq!(normalize("   \t "), Vec::<String>::new());
    }

    #[test]
    fn normalize_keeps_kazakh_letters() {
        assert_eq!(
            normalize("Қайырлы таң, Ұлан! Өтінішіңіз не?"),
            vec!["қайырлы", "таң", "ұлан", "өтінішіңіз", "не"]
        );
    }

    #[test]
    fn mock_zero_rate_is_identity() {
        let backend = AsrBackendConfig::Mock {
            error_rate: 0.0,
            seed: 7,
        };
        let t = transcribe("мен картамды жоғалттым", "kk", &backend).unwrap();
        assert_eq!(t.raw_text(), "мен картамды жоғалттым");
        assert_eq!(t.tokens(), ["мен", "картамды", "жоғалттым"]);
        assert_eq!(*t.source(), TranscriptSource::MockIdentity);
    }

    #[test]
    fn empty_audio_is_rejected() {
        let backend = AsrBackendConfig::Mock {
            error_rate: 0.0,
            seed: 7,
        };
        assert!(matches!(
            transcribe("  ", "kk", &backend),
            Err(EngineError::EmptyUtterance)
        ));
    }

    #[test]
    fn inject_rate_zero_is_identity() {
        let tokens: Vec<String> = ["бір", "екі", "үш"].iter().map(|s| s.to_string()).collect();
        assert_eq!(inject_errors(&tokens, 0.0, 99).unwrap(), tokens);
    }

    #[test]
    fn inject_is_deterministic() {
        let tokens: Vec<String> = (0..200).map(|i| format!("сөз{i}")).collect();
        let a = inject_errors(&tokens, 0.3, 1234).unwrap();
        let b = inject_errors(&tokens, 0.3, 1234).unwrap();
        assert_eq!(a, b);
        let c = inject_errors(&tokens, 0.3, 1235).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn inject_rejects_bad_rate() {
        let tokens = vec!["а".to_string()];
        assert!(matches!(
            inject_errors(&tokens, 1.5, 0),
            Err(EngineError::Config { .. })
        ));
        assert!(matches!(
            inject_errors(&tokens, -0.1, 0),
            Err(EngineError::Config { .. })
        ));
    }

    #[test]
    fn substitution_only_at_rate_one_replaces_everything() {
        let tokens: Vec<String> = (0..50).map(|i| format!("т{i}")).collect();
        let out =
            inject_errors_with_profile(&tokens, 1.0, 5, EditProfile::SubstitutionOnly).unwrap();
        assert_eq!(out.len(), tokens.len());
        for t in &out {
            assert!(t.starts_with("⟨err"), "expected garbage marker, got {t}");
        }
    }

    #[test]
    fn corruption_sets_are_nested_across_rates() {
        let tokens: Vec<String> = (0..500).map(|i| format!("сөз{i}")).collect();
        let low = inject_errors(&tokens, 0.2, 77).unwrap();
        // Every token surviving at the higher rate also survives at the lower.
        let high = inject_errors(&tokens, 0.6, 77).unwrap();
        let high_set: std::collections::HashSet<&String> =
            high.iter().filter(|t| !t.starts_with("⟨err")).collect();
        for kept in high_set {
            assert!(
                low.contains(kept),
                "token {kept} kept at 0.6 but lost at 0.2"
            );
        }
    }

    #[test]
    fn measured_wer_is_monotone_in_rate() {
        let corpus = crate::synth::reference_corpus(2000, 5150);
        let mut last = -1.0;
        for step in 0..=10 {
            let rate = step as f64 / 10.0;
            let pairs: Vec<(Vec<String>, Vec<String>)> = corpus
                .iter()
                .enumerate()
                .map(|(i, reference)| {
                    let hyp = inject_errors(reference, rate, 100 + i as u64).unwrap();
                    (reference.clone(), hyp)
                })
                .collect();
            let wer = crate::metrics::corpus_wer(&pairs).unwrap().pooled_wer;
            assert!(
                wer >= last,
                "WER dropped from {last} to {wer} at rate {rate}"
            );
            last = wer;
        }
    }

    #[test]
    fn garbage_markers_stay_single_foreign_tokens() {
        // The bracket glyphs are Unicode punctuation, so normalization
        // reduces "⟨err42⟩" to "err42" — still one token that can never
        // collide with Cyrillic vocabulary or taxonomy keywords.
        assert_eq!(normalize(&garbage(42)), vec!["err42".to_string()]);
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC{0,60}") {
            let once = normalize(&s);
            let again = normalize(&once.join(" "));
            prop_assert_eq!(once, again);
        }

        #[test]
        fn transcript_invariant_holds(s in "\\PC{0,60}") {
            let t = Transcript::new(s.clone(), "kk", TranscriptSource::MockIdentity);
            prop_assert_eq!(t.tokens().to_vec(), normalize(&s));
        }
    }
}
