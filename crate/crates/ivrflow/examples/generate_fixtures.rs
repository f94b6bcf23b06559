//! Regenerate the committed fixture files under `fixtures/`.
//!
//! Everything is derived deterministically from the synthetic data
//! module, so re-running this always reproduces the same bytes:
//!
//! ```bash
//! cargo run --example generate_fixtures
//! ```

use std::fs;
use std::path::Path;

use ivrflow::simulator::Scenario;
use ivrflow::synth;

fn write(path: &Path, contents: String) {
    fs::write(path, contents).unwrap_or_else(|e| panic!("write {}: {e}", path.display()));
    println!("wrote {}", path.display());
}

fn pretty<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text
}

fn config_json(taxonomy: &str, routing: &str, knowledge: &str) -> String {
    pretty(&serde_json::json!({
        "confidence_threshold": 0.7,
        "max_confirm_attempts": 2,
        "rag_k": 3,
        "seed": 42,
        "asr": { "kind": "mock", "error_rate": 0.0, "seed": 42 },
        "classifier": { "kind": "mock" },
        "tts": { "kind": "mock" },
        "taxonomy_path": taxonomy,
        "routing_path": routing,
        "knowledge_path": knowledge,
        "prompt_template_path": "prompt_template.txt",
        "dialog_templates_path": "dialog_templates.json",
        "lexicon_path": "confirmation_lexicon.json",
        "bind_addr": "127.0.0.1:8573",
        "operator_queue_id": "operator"
    }))
}

fn main() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let scenarios_dir = fixtures.join("scenarios");
    fs::create_dir_all(&scenarios_dir).expect("fixtures dir");

    // Small demo taxonomy: 8 classes spread across domains.
    let (classes, routing) = synth::taxonomy_fixture(8);
    write(&fixtures.join("taxonomy.json"), pretty(&classes));
    write(&fixtures.join("routing.json"), pretty(&routing));
    let knowledge = synth::knowledge_fixture(&classes);
    let mut jsonl = String::new();
    for doc in &knowledge {
        jsonl.push_str(&serde_json::to_string(doc).expect("doc serializes"));
        jsonl.push('\n');
    }
    write(&fixtures.join("knowledge.jsonl"), jsonl);

    // The full 200-class fixture used by batch evaluation.
    let (classes_200, routing_200) = synth::taxonomy_fixture(synth::MAX_FIXTURE_CLASSES);
    write(&fixtures.join("taxonomy_200.json"), pretty(&classes_200));
    write(&fixtures.join("routing_200.json"), pretty(&routing_200));
    let knowledge_200 = synth::knowledge_fixture(&classes_200);
    let mut jsonl = String::new();
    for doc in &knowledge_200 {
        jsonl.push_str(&serde_json::to_string(doc).expect("doc serializes"));
        jsonl.push('\n');
    }
    write(&fixtures.join("knowledge_200.jsonl"), jsonl);

    write(
        &fixtures.join("prompt_template.txt"),
        synth::default_prompt_template().text().to_string(),
    );
    write(
        &fixtures.join("dialog_templates.json"),
        pretty(&synth::default_dialog_templates()),
    );
    write(
        &fixtures.join("confirmation_lexicon.json"),
        pretty(&synth::default_lexicon()),
    );

    write(
        &fixtures.join("config.json"),
        config_json("taxonomy.json", "routing.json", "knowledge.jsonl"),
    );
    write(
        &fixtures.join("config_200.json"),
        config_json(
            "taxonomy_200.json",
            "routing_200.json",
            "knowledge_200.jsonl",
        ),
    );

    // Scripted callers: three happy paths plus the demo edge cases.
    let taxonomy = ivrflow::nlu::IntentTaxonomy::new(classes).expect("unique ids");
    let mut scenarios: Vec<Scenario> = synth::happy_scenarios(&taxonomy)
        .into_iter()
        .take(3)
        .collect();
    scenarios.extend(synth::demo_scenarios(&taxonomy));
    for scenario in &scenarios {
        write(
            &scenarios_dir.join(format!("{}.json", scenario.scenario_id)),
            pretty(scenario),
        );
    }
}
