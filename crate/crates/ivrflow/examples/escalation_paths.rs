//! Every road to a human operator (and the caller-initiated drop):
//! zero-confidence nonsense, double rejection, double unclear, plus the
//! unclear-then-yes recovery and a mid-call hangup.
//!
//! ```bash
//! cargo run --example escalation_paths
//! ```

use ivrflow::session::DialogAction;
use ivrflow::simulator::run_scenario;
use ivrflow::synth;

fn main() {
    let config = synth::test_config(8);
    for scenario in synth::demo_scenarios(&config.taxonomy) {
        let report = run_scenario(&scenario, &config).expect("scenario runs");
        let operator_transfers = report
            .action_trace
            .iter()
            .filter(|a| **a == DialogAction::TransferOperator)
            .count();
        println!(
            "{:<26} → {:<9?} (expected {:<9?}) operator transfers: {}",
            scenario.scenario_id, report.terminal, scenario.expected_terminal, operator_transfers
        );
    }
}
