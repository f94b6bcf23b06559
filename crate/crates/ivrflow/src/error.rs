//! Error types shared across the engine.

use thiserror::Error;

/// Every failure mode the engine surfaces to callers.
///
/// Backend failures (`AsrUnavailable`, `ClassifierUnavailable`,
/// `BackendContract`, `UnroutableClass`) are recoverable at the dialog
/// level: the orchestrator converts them into operator escalation instead
/// of dropping the call. Everything else is a caller bug or a startup
/// problem.
#[derive(Debug, Error)]
pub enum EngineError {
    /// An event was applied to a session already in a terminal phase.
    #[error("session {call_id} is terminal ({phase}); no further events accepted")]
    TerminalSession { call_id: String, phase: String },

    /// The event is not valid in the session's current phase.
    #[error("event {event} is not valid in phase {phase}")]
    ProtocolViolation { phase: String, event: String },

    /// The routing table has no queue for the class.
    #[error("class {class_id} has no routing entry")]
    UnroutableClass { class_id: String },

    /// The ASR backend timed out or answered with a failure.
    #[error("asr backend unavailable: {reason}")]
    AsrUnavailable { reason: String },

    /// An utterance carried no usable content.
    #[error("empty utterance")]
    EmptyUtterance,

    /// The classifier backend timed out or answered with a failure.
    #[error("classifier backend unavailable: {reason}")]
    ClassifierUnavailable { reason: String },

    /// A remote backend replied outside its wire contract.
    #[error("backend contract violation: {reason}")]
    BackendContract { reason: String },

    /// The TTS backend timed out or answered with a failure.
    #[error("tts backend unavailable: {reason}")]
    TtsUnavailable { reason: String },

    /// A template is missing a required placeholder.
    #[error("template error: {reason}")]
    Template { reason: String },

    /// Configuration failed validation. Always names the file and field.
    #[error("config error in {path} ({field}): {reason}")]
    Config {
        path: String,
        field: String,
        reason: String,
    },

    /// WER was requested against an empty reference.
    #[error("empty reference in pair {pair_index}; WER is undefined")]
    EmptyReference { pair_index: usize },

    /// A batch report was requested over a session that never terminated.
    #[error("incomplete batch: {reason}")]
    IncompleteBatch { reason: String },

    /// An inbound bridge frame could not be decoded.
    #[error("frame error: {reason}")]
    Frame { reason: String },

    /// An outbound bridge command violated its invariants.
    #[error("encode error: {reason}")]
    Encode { reason: String },

    /// A scenario ran out of scripted steps before the session terminated.
    #[error("scenario {scenario_id} exhausted before the session terminated")]
    ScenarioUnderrun { scenario_id: String },

    /// Bad input to a CLI-level operation.
    #[error("input error: {reason}")]
    Input { reason: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, EngineError>;

impl EngineError {
    /// True for backend failures the dialog layer absorbs by escalating
    /// to an operator rather than failing the call.
    pub fn escalates(&self) -> bool {
        matches!(
            self,
            EngineError::AsrUnavailable { .. }
                | EngineError::ClassifierUnavailable { .. }
                | EngineError::BackendContract { .. }
                | EngineError::UnroutableClass { .. }
                | EngineError::EmptyUtterance
        )
    }
}
