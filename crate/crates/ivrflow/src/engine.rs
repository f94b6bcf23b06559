//! Pipeline orchestration.
//!
//! [`apply_transcript`] drives one caller input through the state machine:
//! in Listening it requests classification and feeds the result back as an
//! event; in Confirming it parses the reply through the confirmation
//! lexicon. Backend failures never error the call — they convert to
//! operator escalation.
//!
//! [`CallEngine`] is the stateful wrapper the telephony bridge talks to:
//! it owns the per-call session map, derives per-utterance mock seeds,
//! writes the call log and maps dialog actions onto wire commands.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::asr::{self, Transcript, TranscriptSource};
use crate::bridge::{BridgeCommand, BridgeMessage};
use crate::config::{CallLogRecord, CallLogWriter, EngineConfig};
use crate::error::{EngineError, Result};
use crate::nlu::{self, ConfirmationOutcome};
use crate::seed;
use crate::session::{
    advance, escalate_for_failure, CallSession, DialogAction, DialogEvent, Phase, TerminalState,
};
use crate::tts::{self, SynthesisRequest};

/// Apply one transcribed caller input to a session.
///
/// Listening: utterance → classification request → classification event.
/// Confirming: the transcript is parsed as a yes/no/unclear reply.
/// Backend errors that [`EngineError::escalates`] become operator
/// escalation; protocol-level errors propagate.
pub fn apply_transcript(
    session: &CallSession,
    transcript: &Transcript,
    config: &EngineConfig,
) -> Result<(CallSession, Vec<DialogAction>)> {
    let ctx = config.dialog_context();
    match session.phase {
        Phase::Listening => {
            let event = DialogEvent::UtteranceReceived(transcript.clone());
            let (after_utterance, mut actions) = match advance(session, &event, &ctx) {
                Ok(ok) => ok,
                Err(e) if e.escalates() => {
                    return escalate_for_failure(session, &e.to_string());
                }
                Err(e) => return Err(e),
            };
            match nlu::classify(
                transcript,
                &config.classifier,
                &config.knowledge,
                &config.taxonomy,
                &config.prompt_template,
                config.rag_k,
            ) {
                Ok(result) => {
                    let event = DialogEvent::ClassificationReady(result);
                    let (done, more) = advance(&after_utterance, &event, &ctx)?;
                    actions.extend(more);
                    Ok((done, actions))
                }
                Err(e) if e.escalates() => {
                    let (done, more) = escalate_for_failure(&after_utterance, &e.to_string())?;
                    actions.extend(more);
                    Ok((done, actions))
                }
                Err(e) => Err(e),
            }
        }
        Phase::Confirming => {
            let outcome = nlu::parse_confirmation(transcript, &config.lexicon);
            let event = match outcome {
                ConfirmationOutcome::Yes => DialogEvent::ConfirmYes,
                ConfirmationOutcome::No => DialogEvent::ConfirmNo,
                ConfirmationOutcome::Unclear => DialogEvent::ConfirmUnclear,
            };
            advance(session, &event, &ctx)
        }
        phase => Err(EngineError::ProtocolViolation {
            phase: phase.to_string(),
            event: "utterance_received".to_string(),
        }),
    }
}

struct CallSlot {
    session: CallSession,
    utterances_heard: u64,
}

/// Stateful engine front for the telephony bridge. Sessions share no
/// mutable state with each other; per-call transitions are serialized by
/// the slot map lock.
pub struct CallEngine {
    config: Arc<EngineConfig>,
    calls: Mutex<HashMap<String, CallSlot>>,
    call_log: Option<Arc<CallLogWriter>>,
}

impl CallEngine {
    pub fn new(config: Arc<EngineConfig>, call_log: Option<Arc<CallLogWriter>>) -> Self {
        CallEngine {
            config,
            calls: Mutex::new(HashMap::new()),
            call_log,
        }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn phase(&self, call_id: &str) -> Option<Phase> {
        self.calls
            .lock()
            .expect("call map lock")
            .get(call_id)
            .map(|slot| slot.session.phase)
    }

    /// Handle one inbound bridge message and produce the wire commands.
    pub fn handle_message(&self, message: &BridgeMessage) -> Result<Vec<BridgeCommand>> {
        match message {
            BridgeMessage::SessionStart { call_id, language } => {
                self.start_session(call_id, language)
            }
            BridgeMessage::Utterance {
                call_id,
                audio_ref,
                text,
            } => self.handle_utterance(call_id, audio_ref.as_deref(), text.as_deref()),
            BridgeMessage::Hangup { call_id } => self.hangup(call_id),
        }
    }

    fn start_session(&self, call_id: &str, language: &str) -> Result<Vec<BridgeCommand>> {
        let mut calls = self.calls.lock().expect("call map lock");
        if let Some(slot) = calls.get(call_id) {
            if !slot.session.is_terminal() {
                return Err(EngineError::ProtocolViolation {
                    phase: slot.session.phase.to_string(),
                    event: "session_start".to_string(),
                });
            }
        }
        let session = CallSession::new(call_id, language);
        let phase_before = session.phase;
        let (next, actions) = advance(
            &session,
            &DialogEvent::SessionStart,
            &self.config.dialog_context(),
        )?;
        let commands = self.emit(&phase_before, &next, "session_start", &actions);
        calls.insert(
            call_id.to_string(),
            CallSlot {
                session: next,
                utterances_heard: 0,
            },
        );
        Ok(commands)
    }

    fn handle_utterance(
        &self,
        call_id: &str,
        audio_ref: Option<&str>,
        text: Option<&str>,
    ) -> Result<Vec<BridgeCommand>> {
        let mut calls = self.calls.lock().expect("call map lock");
        let slot = calls.get_mut(call_id).ok_or_else(|| EngineError::Frame {
            reason: format!("unknown call_id {call_id}"),
        })?;
        if slot.session.is_terminal() {
            return Err(EngineError::TerminalSession {
                call_id: call_id.to_string(),
                phase: slot.session.phase.to_string(),
            });
        }
        let utterance_index = slot.utterances_heard;
        slot.utterances_heard += 1;
        let language = slot.session.language.clone();
        let transcript: Result<Transcript> = match (text, audio_ref) {
            (Some(text), None) => Ok(Transcript::new(
                text,
                &language,
                TranscriptSource::MockIdentity,
            )),
            (None, Some(audio_ref)) => {
                let call_seed = seed::utterance_seed(
                    seed::session_seed(self.config.seed, call_id),
                    utterance_index,
                );
                asr::transcribe(audio_ref, &language, &self.config.asr.with_seed(call_seed))
            }
            _ => Err(EngineError::Frame {
                reason: "utterance carries exactly one of audio_ref/text".to_string(),
            }),
        };
        let phase_before = slot.session.phase;
        let (next, actions) = match transcript {
            Ok(transcript) => apply_transcript(&slot.session, &transcript, &self.config)?,
            Err(e) if e.escalates() => escalate_for_failure(&slot.session, &e.to_string())?,
            Err(e) => return Err(e),
        };
        let commands = self.emit(&phase_before, &next, "utterance", &actions);
        slot.session = next;
        Ok(commands)
    }

    fn hangup(&self, call_id: &str) -> Result<Vec<BridgeCommand>> {
        let mut calls = self.calls.lock().expect("call map lock");
        let slot = calls.get_mut(call_id).ok_or_else(|| EngineError::Frame {
            reason: format!("unknown call_id {call_id}"),
        })?;
        if slot.session.is_terminal() {
            return Err(EngineError::TerminalSession {
                call_id: call_id.to_string(),
                phase: slot.session.phase.to_string(),
            });
        }
        let phase_before = slot.session.phase;
        let (next, actions) = advance(
            &slot.session,
            &DialogEvent::Hangup,
            &self.config.dialog_context(),
        )?;
        let commands = self.emit(&phase_before, &next, "hangup", &actions);
        slot.session = next;
        Ok(commands)
    }

    /// Hang up every live session in `call_ids`; used when a bridge
    /// connection drops with calls still in flight.
    pub fn abandon_all(&self, call_ids: &[String]) {
        let mut calls = self.calls.lock().expect("call map lock");
        for call_id in call_ids {
            if let Some(slot) = calls.get_mut(call_id) {
                if slot.session.is_terminal() {
                    continue;
                }
                let phase_before = slot.session.phase;
                if let Ok((next, actions)) = advance(
                    &slot.session,
                    &DialogEvent::Hangup,
                    &self.config.dialog_context(),
                ) {
                    self.emit(&phase_before, &next, "hangup", &actions);
                    slot.session = next;
                }
            }
        }
    }

    /// Map dialog actions onto bridge commands, log the event, and append
    /// the trailing hangup that releases a routed/escalated call leg.
    fn emit(
        &self,
        phase_before: &Phase,
        session: &CallSession,
        event: &str,
        actions: &[DialogAction],
    ) -> Vec<BridgeCommand> {
        if let Some(log) = &self.call_log {
            log.append(CallLogRecord {
                ts: None,
                call_id: session.call_id.clone(),
                phase_before: phase_before.to_string(),
                event: event.to_string(),
                actions: actions.to_vec(),
                phase_after: session.phase.to_string(),
            });
        }
        let call_id = &session.call_id;
        let mut commands = Vec::new();
        for action in actions {
            match action {
                DialogAction::PlayPrompt(text) => {
                    let request = SynthesisRequest {
                        text: text.clone(),
                        language: session.language.clone(),
                        voice: None,
                    };
                    match tts::synthesize(&request, &self.config.tts) {
                        Ok(audio_ref) => commands.push(BridgeCommand::Play {
                            call_id: call_id.clone(),
                            text: None,
                            audio_ref: Some(audio_ref),
                        }),
                        Err(e) => {
                            // Degrade to text playback; the dialog never blocks on TTS.
                            log::warn!("tts degraded to text for {call_id}: {e}");
                            commands.push(BridgeCommand::Play {
                                call_id: call_id.clone(),
                                text: Some(text.clone()),
                                audio_ref: None,
                            });
                        }
                    }
                }
                DialogAction::Listen => commands.push(BridgeCommand::Listen {
                    call_id: call_id.clone(),
                }),
                DialogAction::Transfer(queue_id) => commands.push(BridgeCommand::Transfer {
                    call_id: call_id.clone(),
                    queue_id: queue_id.clone(),
                }),
                DialogAction::TransferOperator => commands.push(BridgeCommand::Transfer {
                    call_id: call_id.clone(),
                    queue_id: self.config.operator_queue_id.clone(),
                }),
                DialogAction::LogOnly => {}
            }
        }
        match session.phase.terminal_state() {
            Some(TerminalState::Routed) | Some(TerminalState::Escalated) => {
                commands.push(BridgeCommand::Hangup {
                    call_id: call_id.clone(),
                });
            }
            _ => {}
        }
        commands
    }
}
