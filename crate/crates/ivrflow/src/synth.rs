//! Deterministic sample data: fixture taxonomies, scripted scenarios,
//! knowledge docs and reference corpora.
//!
//! Everything here is index- or seed-driven so fixtures regenerate
//! byte-identically. Class keywords are agglutinative compounds of a
//! domain and an action word, which keeps the keyword sets of the ~200
//! fixture classes pairwise disjoint — exactly what a keyword-routed
//! taxonomy needs to stay separable.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::asr::AsrBackendConfig;
use crate::config::{EngineConfig, DEFAULT_BIND_ADDR};
use crate::nlu::{
    ClassifierBackendConfig, ConfirmationLexicon, IntentClass, IntentTaxonomy, KnowledgeDoc,
    KnowledgeStore, PromptTemplate, YesNoTokens,
};
use crate::session::{DialogTemplates, RoutingTable, TemplateSet, TerminalState};
use crate::simulator::{Scenario, ScenarioStep};
use crate::tts::TtsBackendConfig;

/// (class id stem, Kazakh word, Russian genitive) per product domain.
const DOMAINS: [(&str, &str, &str); 20] = [
    ("card", "карта", "карты"),
    ("loan", "несие", "кредита"),
    ("deposit", "депозит", "депозита"),
    ("transfer", "аударым", "перевода"),
    ("account", "шот", "счета"),
    ("savings", "салым", "вклада"),
    ("payment", "төлем", "платежа"),
    ("limit", "лимит", "лимита"),
    ("bonus", "бонус", "бонуса"),
    ("tariff", "тариф", "тарифа"),
    ("app", "қосымша", "приложения"),
    ("internet", "интернет", "интернета"),
    ("terminal", "терминал", "терминала"),
    ("atm", "банкомат", "банкомата"),
    ("cashback", "кэшбек", "кэшбека"),
    ("currency", "валюта", "валюты"),
    ("pledge", "кепіл", "залога"),
    ("insurance", "сақтандыру", "страховки"),
    ("pension", "зейнетақы", "пенсии"),
    ("fee", "комиссия", "комиссии"),
];

/// (class id stem, Kazakh word, Russian noun) per request kind.
const ACTIONS: [(&str, &str, &str); 10] = [
    ("lost", "жоғалту", "утеря"),
    ("block", "бұғаттау", "блокировка"),
    ("open", "ашу", "открытие"),
    ("close", "жабу", "закрытие"),
    ("change", "өзгерту", "изменение"),
    ("verify", "тексеру", "проверка"),
    ("restore", "қалпынакелтіру", "восстановление"),
    ("renew", "жаңарту", "продление"),
    ("dispute", "даулау", "оспаривание"),
    ("delay", "кешіктіру", "задержка"),
];

pub const MAX_FIXTURE_CLASSES: usize = DOMAINS.len() * ACTIONS.len();

fn class_for(domain_index: usize, action_index: usize) -> IntentClass {
    let (domain_id, domain_kk, domain_ru) = DOMAINS[domain_index];
    let (action_id, action_kk, action_ru) = ACTIONS[action_index];
    IntentClass {
        class_id: format!("{domain_id}_{action_id}"),
        display_name: BTreeMap::from([
            ("kk".to_string(), format!("{domain_kk} {action_kk}")),
            ("ru".to_string(), format!("{action_ru} {domain_ru}")),
        ]),
        queue_id: format!("Q{:02}", domain_index + 1),
        keywords: vec![
            format!("{domain_kk}{action_kk}"),
            format!("{action_kk}{domain_kk}"),
        ],
    }
}

/// Fixture taxonomy of `n` classes (≤ [`MAX_FIXTURE_CLASSES`]) with its
/// routing table. Small fixtures spread across domains; larger ones
/// enumerate the full domain × action grid.
pub fn taxonomy_fixture(n: usize) -> (Vec<IntentClass>, RoutingTable) {
    assert!(
        (1..=MAX_FIXTURE_CLASSES).contains(&n),
        "fixture supports 1..={MAX_FIXTURE_CLASSES} classes"
    );
    let mut classes = Vec::with_capacity(n);
    if n <= DOMAINS.len() {
        for i in 0..n {
            classes.push(class_for(i, i % ACTIONS.len()));
        }
    } else {
        'outer: for d in 0..DOMAINS.len() {
            for a in 0..ACTIONS.len() {
                if classes.len() == n {
                    break 'outer;
                }
                classes.push(class_for(d, a));
            }
        }
    }
    let routing = RoutingTable::new(
        classes
            .iter()
            .map(|c| (c.class_id.clone(), c.queue_id.clone()))
            .collect(),
    );
    (classes, routing)
}

/// Default spoken-dialog wording shipped with the engine.
pub fn default_dialog_templates() -> DialogTemplates {
    let set = |kk: &str, ru: &str| {
        TemplateSet::new(BTreeMap::from([
            ("kk".to_string(), kk.to_string()),
            ("ru".to_string(), ru.to_string()),
        ]))
    };
    DialogTemplates {
        greeting: set(
            "Сәлеметсіз бе! Мәселеңізді айтып беріңіз.",
            "Здравствуйте! Опишите вашу проблему.",
        ),
        confirm: set(
            "Сіздің мәселеңіз: {class_name}. Дұрыс па?",
            "Ваша проблема: {class_name}. Верно?",
        ),
        reask: set(
            "Түсінбедім. Мәселеңізді басқаша айтып беріңізші.",
            "Я не понял. Опишите проблему другими словами.",
        ),
    }
}

/// Default yes/no confirmation lexicon (kk + ru).
pub fn default_lexicon() -> ConfirmationLexicon {
    ConfirmationLexicon {
        languages: BTreeMap::from([
            (
                "kk".to_string(),
                YesNoTokens {
                    yes: vec!["иә".into(), "дұрыс".into(), "солай".into(), "ия".into()],
                    no: vec!["жоқ".into(), "қате".into(), "емес".into()],
                },
            ),
            (
                "ru".to_string(),
                YesNoTokens {
                    yes: vec![
                        "да".into(),
                        "верно".into(),
                        "правильно".into(),
                        "ага".into(),
                    ],
                    no: vec!["нет".into(), "неверно".into(), "неправильно".into()],
                },
            ),
        ]),
    }
}

/// Default classification prompt template.
pub fn default_prompt_template() -> PromptTemplate {
    PromptTemplate::new(
        "Клиент айтты: {utterance}\n\nҚосымша контекст:\n{context}\n\nМына кластардың біреуін таңдаңыз: {classes}\n\nЖауап JSON түрінде болсын.",
    )
    .expect("default template has all placeholders")
}

/// One knowledge doc per class, hinting the doc back at its class.
pub fn knowledge_fixture(classes: &[IntentClass]) -> Vec<KnowledgeDoc> {
    classes
        .iter()
        .map(|class| KnowledgeDoc {
            doc_id: format!("kb_{}", class.class_id),
            text: format!(
                "{} бойынша нұсқаулық: {} деп айтылса, {} кезегіне бағыттау керек.",
                class.display_name["kk"], class.keywords[0], class.queue_id
            ),
            class_hint: Some(class.class_id.clone()),
        })
        .collect()
}

/// In-memory engine config over an `n`-class fixture taxonomy, noiseless
/// mock backends, defaults everywhere.
pub fn test_config(n_classes: usize) -> EngineConfig {
    let (classes, routing) = taxonomy_fixture(n_classes);
    let knowledge = KnowledgeStore::build(knowledge_fixture(&classes)).expect("unique doc ids");
    let taxonomy = IntentTaxonomy::new(classes).expect("unique class ids");
    let config = EngineConfig {
        confidence_threshold: 0.7,
        max_confirm_attempts: 2,
        rag_k: 3,
        seed: 42,
        asr: AsrBackendConfig::Mock {
            error_rate: 0.0,
            seed: 42,
        },
        classifier: ClassifierBackendConfig::Mock,
        tts: TtsBackendConfig::Mock,
        taxonomy,
        routing,
        knowledge,
        prompt_template: default_prompt_template(),
        templates: default_dialog_templates(),
        lexicon: default_lexicon(),
        call_log_path: None,
        bind_addr: DEFAULT_BIND_ADDR.to_string(),
        operator_queue_id: "operator".to_string(),
    };
    config
        .validate("(synthetic)")
        .expect("fixture config is valid");
    config
}

/// One happy-path scenario per class: a clear utterance, then "иә".
pub fn happy_scenarios(taxonomy: &IntentTaxonomy) -> Vec<Scenario> {
    taxonomy
        .classes()
        .iter()
        .map(|class| Scenario {
            scenario_id: format!("happy_{}", class.class_id),
            language: "kk".to_string(),
            steps: vec![
                ScenarioStep::Say(format!(
                    "менің {} {} бойынша мәселем бар, көмектесіңізші",
                    class.keywords[0], class.keywords[1]
                )),
                ScenarioStep::Say("иә".to_string()),
            ],
            expected_class: Some(class.class_id.clone()),
            expected_terminal: TerminalState::Routed,
        })
        .collect()
}

/// A few non-happy scripts over the first fixture classes: repeated
/// rejection, mid-call hangup, an unclear reply that recovers, and a
/// nonsense utterance that escalates on zero confidence.
pub fn demo_scenarios(taxonomy: &IntentTaxonomy) -> Vec<Scenario> {
    let class = &taxonomy.classes()[0];
    let say_problem = ScenarioStep::Say(format!(
        "менің {} {} бойынша мәселем бар",
        class.keywords[0], class.keywords[1]
    ));
    vec![
        Scenario {
            scenario_id: "reject_twice_escalates".to_string(),
            language: "kk".to_string(),
            steps: vec![
                say_problem.clone(),
                ScenarioStep::Say("жоқ".to_string()),
                say_problem.clone(),
                ScenarioStep::Say("жоқ".to_string()),
            ],
            expected_class: None,
            expected_terminal: TerminalState::Escalated,
        },
        Scenario {
            scenario_id: "hangup_mid_call".to_string(),
            language: "kk".to_string(),
            steps: vec![say_problem.clone(), ScenarioStep::Hangup],
            expected_class: None,
            expected_terminal: TerminalState::Abandoned,
        },
        Scenario {
            scenario_id: "unclear_then_yes_routes".to_string(),
            language: "kk".to_string(),
            steps: vec![
                say_problem.clone(),
                ScenarioStep::Say("мүмкін шығар".to_string()),
                ScenarioStep::Say("иә дұрыс".to_string()),
            ],
            expected_class: Some(class.class_id.clone()),
            expected_terminal: TerminalState::Routed,
        },
        Scenario {
            scenario_id: "nonsense_escalates".to_string(),
            language: "kk".to_string(),
            steps: vec![ScenarioStep::Say(
                "бүгін ауа райы өте жақсы екен".to_string(),
            )],
            expected_class: None,
            expected_terminal: TerminalState::Escalated,
        },
    ]
}

const SYLLABLES: [&str; 16] = [
    "ба", "кел", "тер", "жол", "қар", "мен", "дық", "лар", "ған", "бас", "тау", "ер", "ау", "ым",
    "сөз", "құр",
];

/// Seeded pseudo-Kazakh vocabulary of `size` distinct words.
pub fn vocabulary(size: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut words = Vec::with_capacity(size);
    let mut seen = std::collections::HashSet::new();
    while words.len() < size {
        let syllable_count = rng.random_range(2..=3);
        let word: String = (0..syllable_count)
            .map(|_| SYLLABLES[rng.random_range(0..SYLLABLES.len())])
            .collect();
        let word = format!("{word}{}", words.len() % 10);
        if seen.insert(word.clone()) {
            words.push(word);
        }
    }
    words
}

/// Seeded reference corpus of short utterances totalling at least
/// `min_tokens` tokens. Utterance lengths 4..=8.
pub fn reference_corpus(min_tokens: usize, seed: u64) -> Vec<Vec<String>> {
    let vocab = vocabulary(600, seed ^ 0x5eed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corpus = Vec::new();
    let mut total = 0usize;
    while total < min_tokens {
        let len = rng.random_range(4..=8);
        let utterance: Vec<String> = (0..len)
            .map(|_| vocab[rng.random_range(0..vocab.len())].clone())
            .collect();
        total += utterance.len();
        corpus.push(utterance);
    }
    corpus
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn full_fixture_has_200_disjoint_classes() {
        let (classes, routing) = taxonomy_fixture(MAX_FIXTURE_CLASSES);
        assert_eq!(classes.len(), 200);
        let mut all_keywords = HashSet::new();
        let mut all_ids = HashSet::new();
        for class in &classes {
            assert!(
                all_ids.insert(class.class_id.clone()),
                "dup id {}",
                class.class_id
            );
            for kw in &class.keywords {
                assert!(all_keywords.insert(kw.clone()), "keyword collision: {kw}");
                assert_eq!(crate::asr::normalize(kw), vec![kw.clone()]);
            }
        }
        assert_eq!(routing.len(), 200);
    }

    #[test]
    fn small_fixture_spreads_domains() {
        let (classes, _) = taxonomy_fixture(8);
        let queues: HashSet<&String> = classes.iter().map(|c| &c.queue_id).collect();
        assert_eq!(queues.len(), 8);
    }

    #[test]
    fn test_config_validates() {
        let config = test_config(MAX_FIXTURE_CLASSES);
        assert_eq!(config.taxonomy.len(), 200);
    }

    #[test]
    fn corpus_reaches_target_and_is_deterministic() {
        let a = reference_corpus(2000, 9);
        let b = reference_corpus(2000, 9);
        assert_eq!(a, b);
        let total: usize = a.iter().map(Vec::len).sum();
        assert!(total >= 2000);
        assert!(a.iter().all(|u| (4..=8).contains(&u.len())));
    }
}
