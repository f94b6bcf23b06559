//! One clean call through the whole pipeline with mock backends:
//! greeting → utterance → classification → spoken confirmation → "иә" →
//! transfer to the class queue.
//!
//! ```bash
//! cargo run --example happy_path
//! ```

use ivrflow::session::DialogAction;
use ivrflow::simulator::{run_scenario, ScenarioStep};
use ivrflow::synth;

fn main() {
    let config = synth::test_config(8);
    let scenario = &synth::happy_scenarios(&config.taxonomy)[0];

    println!("scenario: {}", scenario.scenario_id);
    for step in &scenario.steps {
        match step {
            ScenarioStep::Say(text) => println!("  caller says: {text}"),
            ScenarioStep::Hangup => println!("  caller hangs up"),
        }
    }
    println!();

    let report = run_scenario(scenario, &config).expect("scenario runs");
    println!("engine actions:");
    for action in &report.action_trace {
        match action {
            DialogAction::PlayPrompt(text) => println!("  play   | {text}"),
            DialogAction::Listen => println!("  listen |"),
            DialogAction::Transfer(queue) => println!("  xfer   | queue {queue}"),
            DialogAction::TransferOperator => println!("  xfer   | operator"),
            DialogAction::LogOnly => println!("  log    |"),
        }
    }
    println!();
    println!(
        "terminal: {:?}, chosen class: {}, matched expectation: {}",
        report.terminal,
        report.chosen_class.as_deref().unwrap_or("-"),
        report.matched_expectation
    );
}
