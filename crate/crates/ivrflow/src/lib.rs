//! Dialog orchestration engine for an AI-assisted call-center IVR.
//!
//! The pipeline: caller speech is transcribed (pluggable ASR backend),
//! the text is classified against a ~200-class routable taxonomy
//! (pluggable LLM backend with BM25 retrieval context), the detected
//! intent is spoken back for confirmation (pluggable TTS backend), and
//! the call is transferred to the matching queue — or to a human operator
//! on low confidence, rejected confirmation or backend failure.
//!
//! Every backend has a deterministic mock, so the whole pipeline runs and
//! verifies at desk scale with no models and no audio stack:
//!
//! - mock ASR corrupts scenario text at a calibrated word-error rate,
//! - the mock classifier scores keyword overlap against the taxonomy,
//! - mock TTS returns stable content-hash audio references.
//!
//! Entry points:
//!
//! - [`session::advance`] — the pure per-call state machine.
//! - [`engine::CallEngine`] — stateful front for the telephony bridge.
//! - [`bridge::serve`] — NDJSON-over-TCP wire boundary.
//! - [`simulator::run_scenario`] / [`simulator::run_batch`] — scripted
//!   callers and seeded batch evaluation.
//! - [`metrics`] — WER computation and batch reports.
//!
//! See the crate examples for one runnable program per capability:
//!
//! ```bash
//! cargo run --example happy_path
//! cargo run --example escalation_paths
//! cargo run --example noisy_transcription
//! cargo run --example retrieval_prompt
//! cargo run --example batch_report
//! cargo run --example bridge_session
//! ```

pub mod asr;
pub mod bridge;
pub mod config;
pub mod engine;
pub mod error;
mod http;
pub mod metrics;
pub mod nlu;
pub mod seed;
pub mod session;
pub mod simulator;
pub mod synth;
pub mod tts;

pub use error::{EngineError, Result};
