//! Per-call dialog state machine.
//!
//! The pipeline is: listen, classify, speak the classification back for
//! confirmation, then route to a queue — with operator escalation on low
//! confidence, repeated rejection, unparseable confirmations or backend
//! failure. [`advance`] is a pure function of `(session, event, context)`;
//! all per-call mutation flows through it, so replaying an event sequence
//! always reproduces the same session.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::asr::Transcript;
use crate::error::{EngineError, Result};
use crate::nlu::{ClassificationResult, IntentTaxonomy};
use crate::tts;

/// Dialog phase. `Routed`, `Escalated` and `Abandoned` are terminal:
/// no transition ever leaves them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Listening,
    Classifying,
    Confirming,
    Routed,
    Escalated,
    Abandoned,
}

impl Phase {
    pub fn is_terminal(&self) -> bool {
        self.terminal_state().is_some()
    }

    pub fn terminal_state(&self) -> Option<TerminalState> {
        match self {
            Phase::Routed => Some(TerminalState::Routed),
            Phase::Escalated => Some(TerminalState::Escalated),
            Phase::Abandoned => Some(TerminalState::Abandoned),
            _ => None,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Phase::Listening => "listening",
            Phase::Classifying => "classifying",
            Phase::Confirming => "confirming",
            Phase::Routed => "routed",
            Phase::Escalated => "escalated",
            Phase::Abandoned => "abandoned",
        };
        f.write_str(name)
    }
}

/// How a completed session ended. Abandoned (caller hung up) is kept
/// distinct from Escalated (system handoff) so batch metrics can separate
/// caller-initiated drops from operator load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalState {
    Routed,
    Escalated,
    Abandoned,
}

/// One inbound stimulus for [`advance`].
#[derive(Debug, Clone, PartialEq)]
pub enum DialogEvent {
    SessionStart,
    UtteranceReceived(Transcript),
    ClassificationReady(ClassificationResult),
    ConfirmYes,
    ConfirmNo,
    ConfirmUnclear,
    Hangup,
}

impl DialogEvent {
    pub fn name(&self) -> &'static str {
        match self {
            DialogEvent::SessionStart => "session_start",
            DialogEvent::UtteranceReceived(_) => "utterance_received",
            DialogEvent::ClassificationReady(_) => "classification_ready",
            DialogEvent::ConfirmYes => "confirm_yes",
            DialogEvent::ConfirmNo => "confirm_no",
            DialogEvent::ConfirmUnclear => "confirm_unclear",
            DialogEvent::Hangup => "hangup",
        }
    }
}

/// One outbound instruction for the telephony side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DialogAction {
    PlayPrompt(String),
    Listen,
    Transfer(String),
    TransferOperator,
    LogOnly,
}

/// Append-only (tick, event, actions) record. Ticks are logical
/// timestamps — strictly increasing per session — so replays stay
/// byte-identical; wall-clock stamps are added by the call-log writer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub tick: u64,
    pub event: String,
    pub actions: Vec<DialogAction>,
}

/// Per-call dialog state.
#[derive(Debug, Clone, PartialEq)]
pub struct CallSession {
    pub call_id: String,
    pub language: String,
    pub phase: Phase,
    pub confirm_attempts: u32,
    /// The single in-session budget for replaying an unclear confirmation.
    unclear_replays: u32,
    pub last_classification: Option<ClassificationResult>,
    pub event_log: Vec<EventRecord>,
}

impl CallSession {
    pub fn new(call_id: impl Into<String>, language: impl Into<String>) -> Self {
        CallSession {
            call_id: call_id.into(),
            language: language.into(),
            phase: Phase::Listening,
            confirm_attempts: 0,
            unclear_replays: 0,
            last_classification: None,
            event_log: Vec::new(),
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.phase.is_terminal()
    }

    fn record(&mut self, event: impl Into<String>, actions: &[DialogAction]) {
        self.event_log.push(EventRecord {
            tick: self.event_log.len() as u64,
            event: event.into(),
            actions: actions.to_vec(),
        });
    }
}

/// Class-to-queue routing table.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(transparent)]
pub struct RoutingTable {
    entries: BTreeMap<String, String>,
}

impl RoutingTable {
    pub fn new(entries: BTreeMap<String, String>) -> Self {
        RoutingTable { entries }
    }

    pub fn queue_ids(&self) -> impl Iterator<Item = &String> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Queue for a class, or [`EngineError::UnroutableClass`]; the session
/// layer converts the latter into operator escalation.
pub fn route(class_id: &str, routing: &RoutingTable) -> Result<String> {
    routing
        .entries
        .get(class_id)
        .cloned()
        .ok_or_else(|| EngineError::UnroutableClass {
            class_id: class_id.to_string(),
        })
}

/// Per-language prompt texts keyed by language tag.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(transparent)]
pub struct TemplateSet {
    texts: BTreeMap<String, String>,
}

impl TemplateSet {
    pub fn new(texts: BTreeMap<String, String>) -> Self {
        TemplateSet { texts }
    }

    /// Exact language, then "kk", then the lexicographically first entry.
    pub fn for_language(&self, language: &str) -> &str {
        self.texts
            .get(language)
            .or_else(|| self.texts.get("kk"))
            .or_else(|| self.texts.values().next())
            .map(String::as_str)
            .unwrap_or("")
    }

    pub fn languages(&self) -> impl Iterator<Item = (&String, &String)> {
        self.texts.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }
}

/// Spoken-dialog wording: greeting, confirmation (with `{class_name}`)
/// and the re-ask prompt after a rejected classification.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct DialogTemplates {
    pub greeting: TemplateSet,
    pub confirm: TemplateSet,
    pub reask: TemplateSet,
}

/// Everything [`advance`] reads besides the session and the event.
#[derive(Clone, Copy)]
pub struct DialogContext<'a> {
    /// Proceed to confirmation iff classifier confidence ≥ this (inclusive).
    pub confidence_threshold: f64,
    pub max_confirm_attempts: u32,
    pub taxonomy: &'a IntentTaxonomy,
    pub routing: &'a RoutingTable,
    pub templates: &'a DialogTemplates,
}

fn confirmation_prompt(
    result: &ClassificationResult,
    language: &str,
    ctx: &DialogContext<'_>,
) -> String {
    let template = ctx.templates.confirm.for_language(language);
    match ctx.taxonomy.get(&result.class_id) {
        Some(class) => tts::render_confirmation(class, language, template),
        // A result referencing an unknown class is a backend bug upstream;
        // keep the dialog alive and let routing escalate on confirm.
        None => template.replace("{class_name}", &result.class_id),
    }
}

/// Apply one event to a session, returning the successor session and the
/// ordered actions to emit.
///
/// Transition table: Listening + utterance → Classifying (classification
/// requested, no actions); Classifying + classification at or above the
/// threshold → Confirming (speak confirmation, listen), below → Escalated;
/// Confirming + yes → Routed (transfer to the class queue); + no → back to
/// Listening until the confirm budget runs out, then Escalated; + unclear →
/// one replay, then Escalated; hangup anywhere → Abandoned.
pub fn advance(
    session: &CallSession,
    event: &DialogEvent,
    ctx: &DialogContext<'_>,
) -> Result<(CallSession, Vec<DialogAction>)> {
    if session.is_terminal() {
        return Err(EngineError::TerminalSession {
            call_id: session.call_id.clone(),
            phase: session.phase.to_string(),
        });
    }
    let mut next = session.clone();
    let actions: Vec<DialogAction> = match (session.phase, event) {
        (_, DialogEvent::Hangup) => {
            next.phase = Phase::Abandoned;
            Vec::new()
        }
        (Phase::Listening, DialogEvent::SessionStart) if session.event_log.is_empty() => {
            vec![
                DialogAction::PlayPrompt(
                    ctx.templates
                        .greeting
                        .for_language(&session.language)
                        .to_string(),
                ),
                DialogAction::Listen,
            ]
        }
        (Phase::Listening, DialogEvent::UtteranceReceived(transcript)) => {
            if transcript.is_empty() {
                return Err(EngineError::EmptyUtterance);
            }
            next.phase = Phase::Classifying;
            Vec::new()
        }
        (Phase::Classifying, DialogEvent::ClassificationReady(result)) => {
            if result.confidence >= ctx.confidence_threshold {
                next.phase = Phase::Confirming;
                next.last_classification = Some(result.clone());
                vec![
                    DialogAction::PlayPrompt(confirmation_prompt(result, &session.language, ctx)),
                    DialogAction::Listen,
                ]
            } else {
                next.phase = Phase::Escalated;
                vec![DialogAction::TransferOperator]
            }
        }
        (Phase::Confirming, DialogEvent::ConfirmYes) => {
            let class_id = session
                .last_classification
                .as_ref()
                .map(|r| r.class_id.clone())
                .unwrap_or_default();
            match route(&class_id, ctx.routing) {
                Ok(queue_id) => {
                    next.phase = Phase::Routed;
                    vec![DialogAction::Transfer(queue_id)]
                }
                Err(_) => {
                    next.phase = Phase::Escalated;
                    vec![DialogAction::TransferOperator]
                }
            }
        }
        (Phase::Confirming, DialogEvent::ConfirmNo) => {
            next.confirm_attempts += 1;
            if next.confirm_attempts < ctx.max_confirm_attempts {
                next.phase = Phase::Listening;
                vec![
                    DialogAction::PlayPrompt(
                        ctx.templates
                            .reask
                            .for_language(&session.language)
                            .to_string(),
                    ),
                    DialogAction::Listen,
                ]
            } else {
                next.phase = Phase::Escalated;
                vec![DialogAction::TransferOperator]
            }
        }
        (Phase::Confirming, DialogEvent::ConfirmUnclear) => {
            if session.unclear_replays == 0 {
                next.unclear_replays = 1;
                let result = session
                    .last_classification
                    .as_ref()
                    .expect("confirming phase implies a classification");
                vec![
                    DialogAction::PlayPrompt(confirmation_prompt(result, &session.language, ctx)),
                    DialogAction::Listen,
                ]
            } else {
                next.phase = Phase::Escalated;
                vec![DialogAction::TransferOperator]
            }
        }
        _ => {
            return Err(EngineError::ProtocolViolation {
                phase: session.phase.to_string(),
                event: event.name().to_string(),
            })
        }
    };
    next.record(event.name(), &actions);
    Ok((next, actions))
}

/// Escalate a live session after an unrecoverable backend failure
/// (ASR or classifier down, contract violation, unroutable class).
pub fn escalate_for_failure(
    session: &CallSession,
    reason: &str,
) -> Result<(CallSession, Vec<DialogAction>)> {
    if session.is_terminal() {
        return Err(EngineError::TerminalSession {
            call_id: session.call_id.clone(),
            phase: session.phase.to_string(),
        });
    }
    let mut next = session.clone();
    next.phase = Phase::Escalated;
    let actions = vec![DialogAction::TransferOperator];
    next.record(format!("backend_failure:{reason}"), &actions);
    Ok((next, actions))
}
