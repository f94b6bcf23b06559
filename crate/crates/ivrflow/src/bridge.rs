//! Telephony wire boundary: NDJSON over TCP.
//!
//! The protocol replaces a platform-specific Asterisk integration with a
//! desk-testable shim: one JSON object per LF-terminated line, UTF-8,
//! many calls multiplexed per connection by `call_id`. An external AGI
//! adapter can translate this to a real PBX without touching the engine.
//!
//! Inbound frames are [`BridgeMessage`]; outbound are [`BridgeCommand`].
//! Encoding is bit-exact: fixed key order (`type`, `call_id`, payload),
//! no extra whitespace, exactly one trailing LF.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::engine::CallEngine;
use crate::error::{EngineError, Result};

/// Inbound frame from the telephony side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BridgeMessage {
    SessionStart {
        call_id: String,
        language: String,
    },
    /// Caller speech: either an opaque `audio_ref` (live path, goes
    /// through the ASR gateway) or direct `text` (simulator path).
    Utterance {
        call_id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        audio_ref: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        text: Option<String>,
    },
    Hangup {
        call_id: String,
    },
}

impl BridgeMessage {
    pub fn call_id(&self) -> &str {
        match self {
            BridgeMessage::SessionStart { call_id, .. }
            | BridgeMessage::Utterance { call_id, .. }
            | BridgeMessage::Hangup { call_id } => call_id,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.call_id().is_empty() {
            return Err(EngineError::Frame {
                reason: "missing field call_id".to_string(),
            });
        }
        match self {
            BridgeMessage::SessionStart { language, .. } if language.is_empty() => {
                Err(EngineError::Frame {
                    reason: "missing field language".to_string(),
                })
            }
            BridgeMessage::Utterance {
                audio_ref, text, ..
            } if audio_ref.is_some() == text.is_some() => Err(EngineError::Frame {
                reason: "utterance carries exactly one of audio_ref/text".to_string(),
            }),
            _ => Ok(()),
        }
    }
}

/// Outbound frame to the telephony side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BridgeCommand {
    /// Speak to the caller: exactly one of `text` / `audio_ref`.
    Play {
        call_id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        text: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        audio_ref: Option<String>,
    },
    Listen {
        call_id: String,
    },
    Transfer {
        call_id: String,
        queue_id: String,
    },
    Hangup {
        call_id: String,
    },
}

impl BridgeCommand {
    pub fn call_id(&self) -> &str {
        match self {
            BridgeCommand::Play { call_id, .. }
            | BridgeCommand::Listen { call_id }
            | BridgeCommand::Transfer { call_id, .. }
            | BridgeCommand::Hangup { call_id } => call_id,
        }
    }

    fn validate(&self) -> Result<()> {
        let err = |reason: &str| {
            Err(EngineError::Encode {
                reason: reason.to_string(),
            })
        };
        if self.call_id().is_empty() {
            return err("command requires a call_id");
        }
        match self {
            BridgeCommand::Play {
                text, audio_ref, ..
            } if text.is_some() == audio_ref.is_some() => {
                err("play carries exactly one of text/audio_ref")
            }
            BridgeCommand::Transfer { queue_id, .. } if queue_id.is_empty() => {
                err("transfer requires a queue_id")
            }
            _ => Ok(()),
        }
    }
}

/// Encode a command as one LF-terminated frame.
pub fn encode(command: &BridgeCommand) -> Result<String> {
    command.validate()?;
    let mut line = serde_json::to_string(command).map_err(|e| EngineError::Encode {
        reason: e.to_string(),
    })?;
    line.push('\n');
    Ok(line)
}

/// Decode one inbound frame (with or without the trailing LF).
pub fn decode(line: &str) -> Result<BridgeMessage> {
    let message: BridgeMessage = serde_json::from_str(line.trim_end_matches(['\r', '\n']))
        .map_err(|e| EngineError::Frame {
            reason: e.to_string(),
        })?;
    message.validate()?;
    Ok(message)
}

/// Encode an inbound-direction message; used by clients and tests.
pub fn encode_message(message: &BridgeMessage) -> Result<String> {
    message.validate().map_err(|e| EngineError::Encode {
        reason: e.to_string(),
    })?;
    let mut line = serde_json::to_string(message).map_err(|e| EngineError::Encode {
        reason: e.to_string(),
    })?;
    line.push('\n');
    Ok(line)
}

/// Decode an outbound-direction frame; used by clients and tests.
pub fn decode_command(line: &str) -> Result<BridgeCommand> {
    let command: BridgeCommand = serde_json::from_str(line.trim_end_matches(['\r', '\n']))
        .map_err(|e| EngineError::Frame {
            reason: e.to_string(),
        })?;
    command.validate().map_err(|e| EngineError::Frame {
        reason: e.to_string(),
    })?;
    Ok(command)
}

fn error_frame(reason: &str) -> String {
    let mut line = serde_json::json!({ "type": "error", "reason": reason }).to_string();
    line.push('\n');
    line
}

/// Running bridge service; dropping it without [`BridgeServer::shutdown`]
/// leaves the accept thread running until process exit.
pub struct BridgeServer {
    local_addr: std::net::SocketAddr,
    stop: Arc<AtomicBool>,
    accept_thread: Option<JoinHandle<()>>,
}

impl BridgeServer {
    pub fn local_addr(&self) -> std::net::SocketAddr {
        self.local_addr
    }

    /// Stop accepting connections. Established connections finish on
    /// their own threads; their sessions are abandoned on disconnect.
    pub fn shutdown(mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(handle) = self.accept_thread.take() {
            let _ = handle.join();
        }
    }
}

/// Bind `addr` and serve bridge connections until shutdown.
///
/// Each connection is handled on its own thread; frames within a
/// connection are processed in arrival order and replies for one
/// connection are written serially, so per-call command order matches
/// what the session produced.
pub fn serve(addr: &str, engine: Arc<CallEngine>) -> Result<BridgeServer> {
    let listener = TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    let local_addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let stop_flag = Arc::clone(&stop);
    let accept_thread = std::thread::spawn(move || {
        log::info!("bridge listening on {local_addr}");
        loop {
            if stop_flag.load(Ordering::SeqCst) {
                break;
            }
            match listener.accept() {
                Ok((stream, peer)) => {
                    log::info!("connection from {peer}");
                    let engine = Arc::clone(&engine);
                    std::thread::spawn(move || handle_connection(stream, engine));
                }
                Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                    std::thread::sleep(Duration::from_millis(20));
                }
                Err(e) => {
                    log::error!("accept failed: {e}");
                    std::thread::sleep(Duration::from_millis(100));
                }
            }
        }
    });
    Ok(BridgeServer {
        local_addr,
        stop,
        accept_thread: Some(accept_thread),
    })
}

fn handle_connection(stream: TcpStream, engine: Arc<CallEngine>) {
    let peer = stream
        .peer_addr()
        .map(|a| a.to_string())
        .unwrap_or_default();
    let mut writer = match stream.try_clone() {
        Ok(w) => w,
        Err(e) => {
            log::error!("cannot clone stream for {peer}: {e}");
            return;
        }
    };
    stream
        .set_nodelay(true)
        .unwrap_or_else(|e| log::warn!("set_nodelay: {e}"));
    let reader = BufReader::new(stream);
    let mut connection_calls: Vec<String> = Vec::new();
    for line in reader.lines() {
        let line = match line {
            Ok(line) => line,
            Err(e) => {
                log::warn!("read from {peer} failed: {e}");
                break;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        let reply = match decode(&line) {
            Ok(message) => {
                if let BridgeMessage::SessionStart { call_id, .. } = &message {
                    if !connection_calls.contains(call_id) {
                        connection_calls.push(call_id.clone());
                    }
                }
                match engine.handle_message(&message) {
                    Ok(commands) => {
                        let mut out = String::new();
                        for command in &commands {
                            match encode(command) {
                                Ok(frame) => out.push_str(&frame),
                                Err(e) => {
                                    log::error!("encode failed: {e}");
                                    out.push_str(&error_frame(&e.to_string()));
                                }
                            }
                        }
                        out
                    }
                    Err(e) => error_frame(&e.to_string()),
                }
            }
            Err(e) => error_frame(&e.to_string()),
        };
        if !reply.is_empty() {
            if let Err(e) = writer
                .write_all(reply.as_bytes())
                .and_then(|()| writer.flush())
            {
                log::warn!("write to {peer} failed: {e}");
                break;
            }
        }
    }
    // Connection gone: every in-flight call on it is abandoned.
    engine.abandon_all(&connection_calls);
    log::info!("connection {peer} closed");
}
