//! Configuration loading, eager validation and call-log persistence.
//!
//! Everything is validated at startup — taxonomy/routing cross-references,
//! template placeholders, lexicon shape — so a live call can never hit a
//! config hole. All surfaces are JSON; paths inside the config file are
//! resolved relative to the file itself.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::asr::AsrBackendConfig;
use crate::error::{EngineError, Result};
use crate::nlu::{
    ClassifierBackendConfig, ConfirmationLexicon, IntentTaxonomy, KnowledgeDoc, KnowledgeStore,
    PromptTemplate,
};
use crate::session::{route, DialogAction, DialogContext, DialogTemplates, RoutingTable};
use crate::tts::TtsBackendConfig;

pub const DEFAULT_BIND_ADDR: &str = "127.0.0.1:8573";

fn default_confidence_threshold() -> f64 {
    0.7
}
fn default_max_confirm_attempts() -> u32 {
    2
}
fn default_rag_k() -> usize {
    3
}
fn default_seed() -> u64 {
    42
}
fn default_bind_addr() -> String {
    DEFAULT_BIND_ADDR.to_string()
}
fn default_operator_queue() -> String {
    "operator".to_string()
}

/// On-disk shape of the engine config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EngineConfigFile {
    #[serde(default = "default_confidence_threshold")]
    confidence_threshold: f64,
    #[serde(default = "default_max_confirm_attempts")]
    max_confirm_attempts: u32,
    #[serde(default = "default_rag_k")]
    rag_k: usize,
    #[serde(default = "default_seed")]
    seed: u64,
    asr: AsrBackendConfig,
    classifier: ClassifierBackendConfig,
    tts: TtsBackendConfig,
    taxonomy_path: String,
    routing_path: String,
    #[serde(default)]
    knowledge_path: Option<String>,
    prompt_template_path: String,
    dialog_templates_path: String,
    lexicon_path: String,
    #[serde(default)]
    call_log_path: Option<String>,
    #[serde(default = "default_bind_addr")]
    bind_addr: String,
    #[serde(default = "default_operator_queue")]
    operator_queue_id: String,
}

/// Fully loaded and validated engine configuration. Immutable after load.
#[derive(Debug)]
pub struct EngineConfig {
    pub confidence_threshold: f64,
    pub max_confirm_attempts: u32,
    pub rag_k: usize,
    pub seed: u64,
    pub asr: AsrBackendConfig,
    pub classifier: ClassifierBackendConfig,
    pub tts: TtsBackendConfig,
    pub taxonomy: IntentTaxonomy,
    pub routing: RoutingTable,
    pub knowledge: KnowledgeStore,
    pub prompt_template: PromptTemplate,
    pub templates: DialogTemplates,
    pub lexicon: ConfirmationLexicon,
    pub call_log_path: Option<PathBuf>,
    pub bind_addr: String,
    pub operator_queue_id: String,
}

impl EngineConfig {
    pub fn dialog_context(&self) -> DialogContext<'_> {
        DialogContext {
            confidence_threshold: self.confidence_threshold,
            max_confirm_attempts: self.max_confirm_attempts,
            taxonomy: &self.taxonomy,
            routing: &self.routing,
            templates: &self.templates,
        }
    }

    /// Cross-validate the aggregate; `origin` names the config file in
    /// error messages.
    pub fn validate(&self, origin: &str) -> Result<()> {
        let err = |field: &str, reason: String| EngineError::Config {
            path: origin.to_string(),
            field: field.to_string(),
            reason,
        };
        if !(0.0..=1.0).contains(&self.confidence_threshold) {
            return Err(err(
                "confidence_threshold",
                format!("{} outside [0, 1]", self.confidence_threshold),
            ));
        }
        if self.max_confirm_attempts < 1 {
            return Err(err(
                "max_confirm_attempts",
                "must be at least 1".to_string(),
            ));
        }
        if self.rag_k < 1 {
            return Err(err("rag_k", "must be at least 1".to_string()));
        }
        if let AsrBackendConfig::Mock { error_rate, .. } = &self.asr {
            if !(0.0..=1.0).contains(error_rate) {
                return Err(err(
                    "asr.error_rate",
                    format!("{error_rate} outside [0, 1]"),
                ));
            }
        }
        if let AsrBackendConfig::Remote { endpoint, .. } = &self.asr {
            if endpoint.is_empty() {
                return Err(err(
                    "asr.endpoint",
                    "remote backend requires endpoint".to_string(),
                ));
            }
        }
        if let ClassifierBackendConfig::Remote { endpoint, .. } = &self.classifier {
            if endpoint.is_empty() {
                return Err(err(
                    "classifier.endpoint",
                    "remote backend requires endpoint".to_string(),
                ));
            }
        }
        if let TtsBackendConfig::Remote { endpoint, .. } = &self.tts {
            if endpoint.is_empty() {
                return Err(err(
                    "tts.endpoint",
                    "remote backend requires endpoint".to_string(),
                ));
            }
        }
        if self.taxonomy.is_empty() {
            return Err(err("taxonomy", "taxonomy has no classes".to_string()));
        }
        for class in self.taxonomy.classes() {
            if class.keywords.is_empty() {
                return Err(err(
                    "taxonomy.keywords",
                    format!("class {} has no keywords", class.class_id),
                ));
            }
            for kw in &class.keywords {
                if crate::asr::normalize(kw) != vec![kw.clone()] {
                    return Err(err(
                        "taxonomy.keywords",
                        format!(
                            "class {}: keyword {kw:?} is not a normalized token",
                            class.class_id
                        ),
                    ));
                }
            }
            for lang in ["kk", "ru"] {
                if !class.display_name.contains_key(lang) {
                    return Err(err(
                        "taxonomy.display_name",
                        format!("class {} lacks display name for {lang}", class.class_id),
                    ));
                }
            }
            let queue = route(&class.class_id, &self.routing).map_err(|_| {
                err(
                    "routing",
                    format!(
                        "taxonomy class {} is absent from the routing table",
                        class.class_id
                    ),
                )
            })?;
            if queue != class.queue_id {
                return Err(err(
                    "routing",
                    format!(
                        "class {} declares queue {} but the routing table maps it to {queue}",
                        class.class_id, class.queue_id
                    ),
                ));
            }
        }
        for template_set in [
            ("dialog_templates.greeting", &self.templates.greeting),
            ("dialog_templates.confirm", &self.templates.confirm),
            ("dialog_templates.reask", &self.templates.reask),
        ] {
            if template_set.1.is_empty() {
                return Err(err(template_set.0, "no languages defined".to_string()));
            }
        }
        for (lang, text) in self.templates.confirm.languages() {
            if !text.contains("{class_name}") {
                return Err(err(
                    "dialog_templates.confirm",
                    format!("template for {lang} is missing {{class_name}}"),
                ));
            }
        }
        if self.lexicon.languages.is_empty() {
            return Err(err("lexicon", "no languages defined".to_string()));
        }
        for (lang, entry) in &self.lexicon.languages {
            if entry.yes.is_empty() || entry.no.is_empty() {
                return Err(err(
                    "lexicon",
                    format!("language {lang} needs non-empty yes and no token lists"),
                ));
            }
            for token in entry.yes.iter().chain(entry.no.iter()) {
                if crate::asr::normalize(token) != vec![token.clone()] {
                    return Err(err(
                        "lexicon",
                        format!("language {lang}: {token:?} is not a normalized token"),
                    ));
                }
            }
            if let Some(clash) = entry.yes.iter().find(|t| entry.no.contains(t)) {
                return Err(err(
                    "lexicon",
                    format!("language {lang}: {clash:?} appears in both yes and no"),
                ));
            }
        }
        Ok(())
    }
}

fn read_file(path: &Path, origin: &str, field: &str) -> Result<String> {
    fs::read_to_string(path).map_err(|e| EngineError::Config {
        path: origin.to_string(),
        field: field.to_string(),
        reason: format!("cannot read {}: {e}", path.display()),
    })
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, path: &Path, field: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| EngineError::Config {
        path: path.display().to_string(),
        field: field.to_string(),
        reason: format!("invalid JSON: {e}"),
    })
}

/// Load and validate an engine configuration.
///
/// Referenced files (taxonomy, routing, knowledge base, templates,
/// lexicon) are loaded eagerly and cross-checked; any failure refuses
/// startup with an error naming the file and field.
pub fn load_config(path: impl AsRef<Path>) -> Result<EngineConfig> {
    let path = path.as_ref();
    let origin = path.display().to_string();
    let raw = read_file(path, &origin, "(file)")?;
    let file: EngineConfigFile = serde_json::from_str(&raw).map_err(|e| EngineError::Config {
        path: origin.clone(),
        field: "(file)".to_string(),
        reason: format!("invalid JSON: {e}"),
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let resolve = |rel: &str| base.join(rel);

    let taxonomy_path = resolve(&file.taxonomy_path);
    let classes: Vec<crate::nlu::IntentClass> = parse_json(
        &read_file(&taxonomy_path, &origin, "taxonomy_path")?,
        &taxonomy_path,
        "taxonomy",
    )?;
    let taxonomy = IntentTaxonomy::new(classes)?;

    let routing_path = resolve(&file.routing_path);
    let routing: RoutingTable = parse_json(
        &read_file(&routing_path, &origin, "routing_path")?,
        &routing_path,
        "routing",
    )?;

    let knowledge = match &file.knowledge_path {
        Some(rel) => {
            let knowledge_path = resolve(rel);
            let text = read_file(&knowledge_path, &origin, "knowledge_path")?;
            let mut docs = Vec::new();
            for (lineno, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let doc: KnowledgeDoc =
                    serde_json::from_str(line).map_err(|e| EngineError::Config {
                        path: knowledge_path.display().to_string(),
                        field: format!("line {}", lineno + 1),
                        reason: format!("invalid JSONL: {e}"),
                    })?;
                if let Some(hint) = &doc.class_hint {
                    if !taxonomy.contains(hint) {
                        return Err(EngineError::Config {
                            path: knowledge_path.display().to_string(),
                            field: format!("line {}", lineno + 1),
                            reason: format!("class_hint {hint} missing from taxonomy"),
                        });
                    }
                }
                docs.push(doc);
            }
            KnowledgeStore::build(docs)?
        }
        None => KnowledgeStore::build(Vec::new())?,
    };

    let prompt_path = resolve(&file.prompt_template_path);
    let prompt_template =
        PromptTemplate::new(read_file(&prompt_path, &origin, "prompt_template_path")?).map_err(
            |e| EngineError::Config {
                path: prompt_path.display().to_string(),
                field: "prompt_template".to_string(),
                reason: e.to_string(),
            },
        )?;

    let dialog_path = resolve(&file.dialog_templates_path);
    let templates: DialogTemplates = parse_json(
        &read_file(&dialog_path, &origin, "dialog_templates_path")?,
        &dialog_path,
        "dialog_templates",
    )?;

    let lexicon_path = resolve(&file.lexicon_path);
    let lexicon: ConfirmationLexicon = parse_json(
        &read_file(&lexicon_path, &origin, "lexicon_path")?,
        &lexicon_path,
        "lexicon",
    )?;

    let config = EngineConfig {
        confidence_threshold: file.confidence_threshold,
        max_confirm_attempts: file.max_confirm_attempts,
        rag_k: file.rag_k,
        seed: file.seed,
        asr: file.asr,
        classifier: file.classifier,
        tts: file.tts,
        taxonomy,
        routing,
        knowledge,
        prompt_template,
        templates,
        lexicon,
        call_log_path: file.call_log_path.map(|rel| resolve(&rel)),
        bind_addr: file.bind_addr,
        operator_queue_id: file.operator_queue_id,
    };
    config.validate(&origin)?;
    Ok(config)
}

/// One line of the append-only JSONL call log.
#[derive(Debug, Serialize, Deserialize)]
pub struct CallLogRecord {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ts: Option<String>,
    pub call_id: String,
    pub phase_before: String,
    pub event: String,
    pub actions: Vec<DialogAction>,
    pub phase_after: String,
}

/// Serialized writer for the call log. Appends are whole-line atomic:
/// one `write_all` per record, flushed, behind a single lock. Logging
/// failures are reported to stderr and never take down a call.
pub struct CallLogWriter {
    sink: Mutex<Box<dyn Write + Send>>,
    timestamps: bool,
}

impl CallLogWriter {
    pub fn to_file(path: impl AsRef<Path>, timestamps: bool) -> Result<Self> {
        let file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path.as_ref())?;
        Ok(CallLogWriter {
            sink: Mutex::new(Box::new(file)),
            timestamps,
        })
    }

    pub fn to_writer(writer: Box<dyn Write + Send>, timestamps: bool) -> Self {
        CallLogWriter {
            sink: Mutex::new(writer),
            timestamps,
        }
    }

    pub fn append(&self, mut record: CallLogRecord) {
        if self.timestamps {
            record.ts =
                Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true));
        } else {
            record.ts = None;
        }
        let line = match serde_json::to_string(&record) {
            Ok(line) => line,
            Err(e) => {
                eprintln!("call log: cannot serialize record: {e}");
                return;
            }
        };
        let mut sink = match self.sink.lock() {
            Ok(sink) => sink,
            Err(poisoned) => poisoned.into_inner(),
        };
        let mut framed = line.into_bytes();
        framed.push(b'\n');
        if let Err(e) = sink.write_all(&framed).and_then(|()| sink.flush()) {
            eprintln!("call log: append failed: {e}");
        }
    }
}
