//! Intent classification over the routable taxonomy.
//!
//! The classifier is pluggable: a remote LLM backend speaking the
//! `/v1/classify` contract, or a deterministic keyword-overlap mock used
//! for desk-scale verification. Both run behind the same retrieval step:
//! top-k knowledge documents by BM25 feed the prompt (remote) and the
//! `context_docs` audit trail (both).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::asr::Transcript;
use crate::error::{EngineError, Result};
use crate::http;

/// BM25 term-frequency saturation.
pub const BM25_K1: f64 = 1.2;
/// BM25 length normalization.
pub const BM25_B: f64 = 0.75;

/// One routable problem category.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct IntentClass {
    pub class_id: String,
    /// Spoken name per language tag; falls back to `class_id` when a
    /// language is missing.
    pub display_name: BTreeMap<String, String>,
    pub queue_id: String,
    /// Normalized tokens the mock classifier matches on.
    pub keywords: Vec<String>,
}

/// The loaded taxonomy: ordered classes plus an id index.
#[derive(Debug, Clone, Default)]
pub struct IntentTaxonomy {
    classes: Vec<IntentClass>,
    by_id: HashMap<String, usize>,
}

impl IntentTaxonomy {
    /// Build from a class list, rejecting duplicate ids.
    pub fn new(classes: Vec<IntentClass>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(classes.len());
        for (i, class) in classes.iter().enumerate() {
            if by_id.insert(class.class_id.clone(), i).is_some() {
                return Err(EngineError::Config {
                    path: "(taxonomy)".to_string(),
                    field: "class_id".to_string(),
                    reason: format!("duplicate class_id {}", class.class_id),
                });
            }
        }
        Ok(IntentTaxonomy { classes, by_id })
    }

    pub fn get(&self, class_id: &str) -> Option<&IntentClass> {
        self.by_id.get(class_id).map(|&i| &self.classes[i])
    }

    pub fn contains(&self, class_id: &str) -> bool {
        self.by_id.contains_key(class_id)
    }

    /// Classes in file order; `{classes}` in prompts renders this order.
    pub fn classes(&self) -> &[IntentClass] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

/// Classifier output: winning class plus ranked alternates.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ClassificationResult {
    pub class_id: String,
    pub confidence: f64,
    /// `(class_id, confidence)` sorted by confidence descending; never
    /// outranks the winner.
    pub alternates: Vec<(String, f64)>,
    /// Knowledge documents offered to the backend for this decision.
    pub context_docs: Vec<String>,
}

impl ClassificationResult {
    /// Validate the structural invariants against a taxonomy.
    pub fn validate(&self, taxonomy: &IntentTaxonomy) -> Result<()> {
        let check = |cond: bool, reason: String| -> Result<()> {
            if cond {
                Ok(())
            } else {
                Err(EngineError::BackendContract { reason })
            }
        };
        check(
            taxonomy.contains(&self.class_id),
            format!("unknown class_id {}", self.class_id),
        )?;
        check(
            (0.0..=1.0).contains(&self.confidence),
            format!("confidence {} outside [0, 1]", self.confidence),
        )?;
        let mut prev = self.confidence;
        for (id, conf) in &self.alternates {
            check(
                taxonomy.contains(id),
                format!("unknown alternate class_id {id}"),
            )?;
            check(
                (0.0..=1.0).contains(conf),
                format!("alternate confidence {conf} outside [0, 1]"),
            )?;
            check(
                *conf <= prev + 1e-12,
                format!("alternate {id} ({conf}) outranks its predecessor ({prev})"),
            )?;
            prev = *conf;
        }
        Ok(())
    }
}

/// One knowledge-base document.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct KnowledgeDoc {
    pub doc_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_hint: Option<String>,
}

#[derive(Debug)]
struct IndexedDoc {
    term_freq: HashMap<String, usize>,
    len: usize,
}

/// BM25-indexed knowledge base. Immutable after build.
#[derive(Debug, Default)]
pub struct KnowledgeStore {
    docs: Vec<KnowledgeDoc>,
    indexed: Vec<IndexedDoc>,
    doc_freq: HashMap<String, usize>,
    avg_len: f64,
    by_id: HashMap<String, usize>,
}

impl KnowledgeStore {
    /// Index a document collection; duplicate doc_ids are rejected.
    pub fn build(docs: Vec<KnowledgeDoc>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(docs.len());
        let mut indexed = Vec::with_capacity(docs.len());
        let mut doc_freq: HashMap<String, usize> = HashMap::new();
        let mut total_len = 0usize;
        for (i, doc) in docs.iter().enumerate() {
            if by_id.insert(doc.doc_id.clone(), i).is_some() {
                return Err(EngineError::Config {
                    path: "(knowledge)".to_string(),
                    field: "doc_id".to_string(),
                    reason: format!("duplicate doc_id {}", doc.doc_id),
                });
            }
            let tokens = crate::asr::normalize(&doc.text);
            let mut term_freq: HashMap<String, usize> = HashMap::new();
            for t in &tokens {
                *term_freq.entry(t.clone()).or_insert(0) += 1;
            }
            for term in term_freq.keys() {
                *doc_freq.entry(term.clone()).or_insert(0) += 1;
            }
            total_len += tokens.len();
            indexed.push(IndexedDoc {
                term_freq,
                len: tokens.len(),
            });
        }
        let avg_len = if docs.is_empty() {
            0.0
        } else {
            total_len as f64 / docs.len() as f64
        };
        Ok(KnowledgeStore {
            docs,
            indexed,
            doc_freq,
            avg_len,
            by_id,
        })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn get(&self, doc_id: &str) -> Option<&KnowledgeDoc> {
        self.by_id.get(doc_id).map(|&i| &self.docs[i])
    }

    fn idf(&self, term: &str) -> f64 {
        let n = self.docs.len() as f64;
        let df = self.doc_freq.get(term).copied().unwrap_or(0) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    fn score(&self, doc_index: usize, query_terms: &BTreeSet<&str>) -> f64 {
        let doc = &self.indexed[doc_index];
        let mut score = 0.0;
        for term in query_terms {
            let tf = doc.term_freq.get(*term).copied().unwrap_or(0) as f64;
            if tf == 0.0 {
                continue;
            }
            let norm = 1.0 - BM25_B + BM25_B * doc.len as f64 / self.avg_len;
            score += self.idf(term) * tf * (BM25_K1 + 1.0) / (tf + BM25_K1 * norm);
        }
        score
    }
}

/// Top-k documents by BM25, score descending, ties by ascending doc_id.
/// Zero-score documents never appear; an empty store yields an empty list.
pub fn retrieve(query: &[String], store: &KnowledgeStore, k: usize) -> Vec<(String, f64)> {
    if store.is_empty() || k == 0 {
        return Vec::new();
    }
    let query_terms: BTreeSet<&str> = query.iter().map(String::as_str).collect();
    let mut scored: Vec<(String, f64)> = (0..store.docs.len())
        .filter_map(|i| {
            let s = store.score(i, &query_terms);
            (s > 0.0).then(|| (store.docs[i].doc_id.clone(), s))
        })
        .collect();
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("finite scores")
            .then_with(|| a.0.cmp(&b.0))
    });
    scored.truncate(k);
    scored
}

/// Validated prompt template with `{utterance}`, `{context}`, `{classes}`.
#[derive(Debug, Clone)]
pub struct PromptTemplate {
    text: String,
}

impl PromptTemplate {
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        for placeholder in ["{utterance}", "{context}", "{classes}"] {
            if !text.contains(placeholder) {
                return Err(EngineError::Template {
                    reason: format!("prompt template missing {placeholder}"),
                });
            }
        }
        Ok(PromptTemplate { text })
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

/// Deterministic prompt substitution. The utterance renders in normalized
/// form, so transcripts differing only in whitespace or punctuation
/// produce byte-identical prompts.
pub fn build_prompt(
    transcript: &Transcript,
    docs: &[&KnowledgeDoc],
    taxonomy: &IntentTaxonomy,
    template: &PromptTemplate,
) -> String {
    let context = docs
        .iter()
        .map(|d| format!("{}: {}", d.doc_id, d.text))
        .collect::<Vec<_>>()
        .join("\n");
    let classes = taxonomy
        .classes()
        .iter()
        .map(|c| c.class_id.as_str())
        .collect::<Vec<_>>()
        .join(", ");
    template
        .text
        .replace("{utterance}", &transcript.tokens().join(" "))
        .replace("{context}", &context)
        .replace("{classes}", &classes)
}

/// Backend selection for [`classify`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierBackendConfig {
    /// Deterministic keyword-overlap scorer.
    Mock,
    /// HTTP backend speaking the `/v1/classify` contract.
    Remote {
        endpoint: String,
        #[serde(default = "crate::asr::default_timeout_ms")]
        timeout_ms: u64,
    },
}

#[derive(Deserialize)]
struct ClassifyReply {
    class_id: String,
    confidence: f64,
    #[serde(default)]
    alternates: Vec<(String, f64)>,
}

/// Classify a transcript against the taxonomy.
///
/// Mock: `score(c) = |tokens ∩ keywords(c)| / |keywords(c)|`, winner by
/// (score desc, class_id asc), confidence = best score over the sum of the
/// top-3 scores. Remote: retrieval-augmented prompt POSTed to the backend;
/// the reply is validated against the taxonomy and the result invariants.
pub fn classify(
    transcript: &Transcript,
    backend: &ClassifierBackendConfig,
    store: &KnowledgeStore,
    taxonomy: &IntentTaxonomy,
    template: &PromptTemplate,
    rag_k: usize,
) -> Result<ClassificationResult> {
    if transcript.is_empty() {
        return Err(EngineError::EmptyUtterance);
    }
    let retrieved = retrieve(transcript.tokens(), store, rag_k);
    let context_docs: Vec<String> = retrieved.iter().map(|(id, _)| id.clone()).collect();
    match backend {
        ClassifierBackendConfig::Mock => Ok(mock_classify(transcript, taxonomy, context_docs)),
        ClassifierBackendConfig::Remote {
            endpoint,
            timeout_ms,
        } => {
            let docs: Vec<&KnowledgeDoc> =
                context_docs.iter().filter_map(|id| store.get(id)).collect();
            let prompt = build_prompt(transcript, &docs, taxonomy, template);
            let body = serde_json::json!({ "prompt": prompt });
            let reply = http::post_json(
                endpoint,
                "/v1/classify",
                &body,
                Duration::from_millis(*timeout_ms),
            )
            .map_err(|reason| EngineError::ClassifierUnavailable { reason })?;
            let reply: ClassifyReply =
                serde_json::from_value(reply).map_err(|e| EngineError::BackendContract {
                    reason: format!("malformed classify reply: {e}"),
                })?;
            let mut alternates = reply.alternates;
            alternates.sort_by(|a, b| {
                b.1.partial_cmp(&a.1)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| a.0.cmp(&b.0))
            });
            let result = ClassificationResult {
                class_id: reply.class_id,
                confidence: reply.confidence,
                alternates,
                context_docs,
            };
            result.validate(taxonomy)?;
            Ok(result)
        }
    }
}

fn mock_classify(
    transcript: &Transcript,
    taxonomy: &IntentTaxonomy,
    context_docs: Vec<String>,
) -> ClassificationResult {
    let tokens: BTreeSet<&str> = transcript.tokens().iter().map(String::as_str).collect();
    let mut ranked: Vec<(&str, f64)> = taxonomy
        .classes()
        .iter()
        .map(|class| {
            let keywords: BTreeSet<&str> = class.keywords.iter().map(String::as_str).collect();
            let hits = keywords.intersection(&tokens).count();
            let score = if keywords.is_empty() {
                0.0
            } else {
                hits as f64 / keywords.len() as f64
            };
            (class.class_id.as_str(), score)
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("finite scores")
            .then_with(|| a.0.cmp(b.0))
    });
    let top3_sum: f64 = ranked.iter().take(3).map(|(_, s)| s).sum();
    let best = ranked.first().expect("non-empty taxonomy");
    let confidence = if top3_sum > 0.0 {
        best.1 / top3_sum
    } else {
        0.0
    };
    let alternates: Vec<(String, f64)> = ranked
        .iter()
        .skip(1)
        .take(2)
        .filter(|(_, s)| *s > 0.0)
        .map(|(id, s)| (id.to_string(), s / top3_sum))
        .collect();
    ClassificationResult {
        class_id: best.0.to_string(),
        confidence,
        alternates,
        context_docs,
    }
}

/// Caller reply to the spoken confirmation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfirmationOutcome {
    Yes,
    No,
    Unclear,
}

/// Per-language yes/no token sets.
#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
pub struct ConfirmationLexicon {
    pub languages: BTreeMap<String, YesNoTokens>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
pub struct YesNoTokens {
    pub yes: Vec<String>,
    pub no: Vec<String>,
}

impl ConfirmationLexicon {
    /// Tokens for a language; unknown languages fall back to the union of
    /// every shipped language so a stray tag never silences the caller.
    fn tokens_for(&self, language: &str) -> (BTreeSet<&str>, BTreeSet<&str>) {
        if let Some(entry) = self.languages.get(language) {
            (
                entry.yes.iter().map(String::as_str).collect(),
                entry.no.iter().map(String::as_str).collect(),
            )
        } else {
            let mut yes = BTreeSet::new();
            let mut no = BTreeSet::new();
            for entry in self.languages.values() {
                yes.extend(entry.yes.iter().map(String::as_str));
                no.extend(entry.no.iter().map(String::as_str));
            }
            (yes, no)
        }
    }
}

/// Yes if any yes-token and no no-token; No symmetrically; Unclear
/// otherwise (both present, or neither). Total function.
pub fn parse_confirmation(
    transcript: &Transcript,
    lexicon: &ConfirmationLexicon,
) -> ConfirmationOutcome {
    let (yes, no) = lexicon.tokens_for(transcript.language());
    let tokens: BTreeSet<&str> = transcript.tokens().iter().map(String::as_str).collect();
    let has_yes = tokens.iter().any(|t| yes.contains(t));
    let has_no = tokens.iter().any(|t| no.contains(t));
    match (has_yes, has_no) {
        (true, false) => ConfirmationOutcome::Yes,
        (false, true) => ConfirmationOutcome::No,
        _ => ConfirmationOutcome::Unclear,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asr::TranscriptSource;

    fn t(text: &str) -> Transcript {
        Transcript::new(text, "kk", TranscriptSource::MockIdentity)
    }

    fn toy_taxonomy() -> IntentTaxonomy {
        IntentTaxonomy::new(vec![
            class("card_lost", "Q1", &["карта", "жоғалттым"]),
            class("card_block", "Q2", &["карта", "бұғаттау"]),
            class("deposit_open", "Q3", &["депозит", "ашу"]),
        ])
        .unwrap()
    }

    fn class(id: &str, queue: &str, keywords: &[&str]) -> IntentClass {
        IntentClass {
            class_id: id.to_string(),
            display_name: BTreeMap::from([
                ("kk".to_string(), format!("{id} kk")),
                ("ru".to_string(), format!("{id} ru")),
            ]),
            queue_id: queue.to_string(),
            keywords: keywords.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn doc(id: &str, text: &str) -> KnowledgeDoc {
        KnowledgeDoc {
            doc_id: id.to_string(),
            text: text.to_string(),
            class_hint: None,
        }
    }

    #[test]
    fn retrieve_zero_overlap_is_empty() {
        let store =
            KnowledgeStore::build(vec![doc("d1", "карта жоғалды"), doc("d2", "депозит ашу")])
                .unwrap();
        let hits = retrieve(&["несие".to_string()], &store, 5);
        assert!(hits.is_empty());
    }

    #[test]
    fn retrieve_respects_corpus_bound() {
        let store = KnowledgeStore::build(vec![
            doc("d1", "карта карта"),
            doc("d2", "карта"),
            doc("d3", "карта депозит"),
        ])
        .unwrap();
        let hits = retrieve(&["карта".to_string()], &store, 5);
        assert_eq!(hits.len(), 3);
    }

    #[test]
    fn retrieve_matches_hand_evaluated_bm25() {
        // Five docs, single-term query; expectations computed by hand from
        // idf = ln(1 + (N - df + 0.5) / (df + 0.5)) and the standard tf part.
        let store = KnowledgeStore::build(vec![
            doc("a", "карта жоғалды кеше"),
            doc("b", "карта карта бұғаттау"),
            doc("c", "депозит ашу"),
            doc("d", "карта"),
            doc("e", "несие төлеу мерзімі өтті"),
        ])
        .unwrap();
        let hits = retrieve(&["карта".to_string()], &store, 5);
        let idf = (1.0_f64 + (5.0 - 3.0 + 0.5) / (3.0 + 0.5)).ln();
        let avg = (3.0 + 3.0 + 2.0 + 1.0 + 4.0) / 5.0;
        let score = |tf: f64, dl: f64| {
            idf * tf * (BM25_K1 + 1.0) / (tf + BM25_K1 * (1.0 - BM25_B + BM25_B * dl / avg))
        };
        // Length normalization puts the one-word doc above the tf=2 doc:
        // d scores 2.2/1.646, b scores 4.4/3.338, a scores 2.2/2.338.
        let expected = [
            ("d".to_string(), score(1.0, 1.0)),
            ("b".to_string(), score(2.0, 3.0)),
            ("a".to_string(), score(1.0, 3.0)),
        ];
        assert_eq!(hits.len(), expected.len());
        for ((id, s), (eid, es)) in hits.iter().zip(expected.iter()) {
            assert_eq!(id, eid);
            assert!((s - es).abs() < 1e-12, "{id}: {s} vs {es}");
        }
    }

    #[test]
    fn retrieve_breaks_ties_by_doc_id() {
        let store = KnowledgeStore::build(vec![
            doc("z", "карта"),
            doc("a", "карта"),
            doc("m", "карта"),
        ])
        .unwrap();
        let hits = retrieve(&["карта".to_string()], &store, 3);
        let ids: Vec<&str> = hits.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(ids, ["a", "m", "z"]);
    }

    #[test]
    fn empty_store_yields_empty_result() {
        let store = KnowledgeStore::build(Vec::new()).unwrap();
        assert!(retrieve(&["карта".to_string()], &store, 3).is_empty());
    }

    #[test]
    fn prompt_renders_empty_context() {
        let template = PromptTemplate::new("U:{utterance}\nC:{context}\nK:{classes}").unwrap();
        let prompt = build_prompt(&t("Картам жоғалды!"), &[], &toy_taxonomy(), &template);
        assert_eq!(
            prompt,
            "U:картам жоғалды\nC:\nK:card_lost, card_block, deposit_open"
        );
    }

    #[test]
    fn prompt_is_whitespace_insensitive() {
        let template = PromptTemplate::new("{utterance}|{context}|{classes}").unwrap();
        let tax = toy_taxonomy();
        let a = build_prompt(&t("карта  жоғалды"), &[], &tax, &template);
        let b = build_prompt(&t("карта жоғалды "), &[], &tax, &template);
        assert_eq!(a, b);
    }

    #[test]
    fn template_without_placeholder_is_rejected() {
        assert!(matches!(
            PromptTemplate::new("{utterance} {context}"),
            Err(EngineError::Template { .. })
        ));
    }

    #[test]
    fn mock_full_unique_overlap_is_confident() {
        let store = KnowledgeStore::build(Vec::new()).unwrap();
        let template = PromptTemplate::new("{utterance}{context}{classes}").unwrap();
        let result = classify(
            &t("мен жоғалттым дедім"),
            &ClassifierBackendConfig::Mock,
            &store,
            &toy_taxonomy(),
            &template,
            3,
        )
        .unwrap();
        // "жоғалттым" hits only card_lost (1 of 2 keywords); nothing else scores.
        assert_eq!(result.class_id, "card_lost");
        assert!((result.confidence - 1.0).abs() < 1e-12);
        assert!(result.alternates.is_empty());
    }

    #[test]
    fn mock_zero_overlap_has_zero_confidence() {
        let store = KnowledgeStore::build(Vec::new()).unwrap();
        let template = PromptTemplate::new("{utterance}{context}{classes}").unwrap();
        let result = classify(
            &t("балмұздақ сатып алдым"),
            &ClassifierBackendConfig::Mock,
            &store,
            &toy_taxonomy(),
            &template,
            3,
        )
        .unwrap();
        assert_eq!(result.confidence, 0.0);
        assert!(result.alternates.is_empty());
    }

    #[test]
    fn mock_breaks_score_ties_by_class_id() {
        let store = KnowledgeStore::build(Vec::new()).unwrap();
        let template = PromptTemplate::new("{utterance}{context}{classes}").unwrap();
        // "карта" is one of two keywords for both card classes: exact tie.
        let result = classify(
            &t("карта туралы"),
            &ClassifierBackendConfig::Mock,
            &store,
            &toy_taxonomy(),
            &template,
            3,
        )
        .unwrap();
        assert_eq!(result.class_id, "card_block");
        assert_eq!(result.alternates.len(), 1);
        assert_eq!(result.alternates[0].0, "card_lost");
    }

    #[test]
    fn classify_rejects_empty_transcript() {
        let store = KnowledgeStore::build(Vec::new()).unwrap();
        let template = PromptTemplate::new("{utterance}{context}{classes}").unwrap();
        assert!(matches!(
            classify(
                &t(""),
                &ClassifierBackendConfig::Mock,
                &store,
                &toy_taxonomy(),
                &template,
                3
            ),
            Err(EngineError::EmptyUtterance)
        ));
    }

    #[test]
    fn classification_invariants_hold_for_mock() {
        let store = KnowledgeStore::build(Vec::new()).unwrap();
        let template = PromptTemplate::new("{utterance}{context}{classes}").unwrap();
        let tax = toy_taxonomy();
        for text in ["карта жоғалттым", "депозит ашу керек", "карта", "жоқ нәрсе"]
        {
            let r = classify(
                &t(text),
                &ClassifierBackendConfig::Mock,
                &store,
                &tax,
                &template,
                3,
            )
            .unwrap();
            r.validate(&tax).unwrap();
        }
    }

    #[test]
    fn mock_is_invariant_under_taxonomy_permutation() {
        let store = KnowledgeStore::build(Vec::new()).unwrap();
        let template = PromptTemplate::new("{utterance}{context}{classes}").unwrap();
        let forward = toy_taxonomy();
        let mut reversed_classes = forward.classes().to_vec();
        reversed_classes.reverse();
        let reversed = IntentTaxonomy::new(reversed_classes).unwrap();
        for text in ["карта жоғалттым", "карта туралы", "депозит ашу", "ештеңе"]
        {
            let a = classify(
                &t(text),
                &ClassifierBackendConfig::Mock,
                &store,
                &forward,
                &template,
                3,
            )
            .unwrap();
            let b = classify(
                &t(text),
                &ClassifierBackendConfig::Mock,
                &store,
                &reversed,
                &template,
                3,
            )
            .unwrap();
            assert_eq!(a.class_id, b.class_id, "{text}");
            assert_eq!(a.confidence, b.confidence, "{text}");
        }
    }

    proptest::proptest! {
        #[test]
        fn mock_results_always_satisfy_invariants(
            words in proptest::collection::vec("[а-є]{1,8}", 1..8)
        ) {
            let store = KnowledgeStore::build(Vec::new()).unwrap();
            let template = PromptTemplate::new("{utterance}{context}{classes}").unwrap();
            let tax = toy_taxonomy();
            let transcript = t(&words.join(" "));
            if transcript.is_empty() {
                return Ok(());
            }
            let r = classify(&transcript, &ClassifierBackendConfig::Mock, &store, &tax, &template, 3)
                .unwrap();
            proptest::prop_assert!(r.validate(&tax).is_ok());
        }

        #[test]
        fn confirmation_parsing_ignores_case(s in "[а-яіәғқңөұүһ ]{0,20}") {
            let lex = lexicon();
            let upper = Transcript::new(s.to_uppercase(), "kk", TranscriptSource::MockIdentity);
            let lower = Transcript::new(s.clone(), "kk", TranscriptSource::MockIdentity);
            proptest::prop_assert_eq!(
                parse_confirmation(&upper, &lex),
                parse_confirmation(&lower, &lex)
            );
        }
    }

    fn lexicon() -> ConfirmationLexicon {
        ConfirmationLexicon {
            languages: BTreeMap::from([
                (
                    "kk".to_string(),
                    YesNoTokens {
                        yes: vec!["иә".into(), "дұрыс".into()],
                        no: vec!["жоқ".into(), "қате".into()],
                    },
                ),
                (
                    "ru".to_string(),
                    YesNoTokens {
                        yes: vec!["да".into(), "верно".into()],
                        no: vec!["нет".into(), "неверно".into()],
                    },
                ),
            ]),
        }
    }

    #[test]
    fn confirmation_yes_no_unclear() {
        let lex = lexicon();
        assert_eq!(
            parse_confirmation(&t("иә солай"), &lex),
            ConfirmationOutcome::Yes
        );
        assert_eq!(
            parse_confirmation(&t("жоқ қате"), &lex),
            ConfirmationOutcome::No
        );
        assert_eq!(
            parse_confirmation(&t("иә жоқ білмеймін"), &lex),
            ConfirmationOutcome::Unclear
        );
        assert_eq!(
            parse_confirmation(&t(""), &lex),
            ConfirmationOutcome::Unclear
        );
    }

    #[test]
    fn confirmation_is_case_insensitive() {
        let lex = lexicon();
        assert_eq!(
            parse_confirmation(&t("ИӘ!"), &lex),
            ConfirmationOutcome::Yes
        );
    }

    #[test]
    fn confirmation_unknown_language_uses_union() {
        let lex = lexicon();
        let reply = Transcript::new("да", "en", TranscriptSource::MockIdentity);
        assert_eq!(parse_confirmation(&reply, &lex), ConfirmationOutcome::Yes);
    }
}
