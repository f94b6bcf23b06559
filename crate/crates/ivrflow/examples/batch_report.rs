//! Seeded batch over the full 200-class fixture: every class gets a
//! happy-path caller, replayed under increasing ASR noise. The report
//! shows accuracy and routing degrading monotonically with the error
//! rate while the measured corpus WER tracks it.
//!
//! ```bash
//! cargo run --example batch_report
//! ```

use ivrflow::simulator::run_batch;
use ivrflow::synth;

fn main() {
    let config = synth::test_config(synth::MAX_FIXTURE_CLASSES);
    let scenarios = synth::happy_scenarios(&config.taxonomy);
    println!(
        "batch: {} scenarios × 1 seed × 3 error rates",
        scenarios.len()
    );
    let report = run_batch(&scenarios, &config, &[7], &[0.0, 0.16, 0.5]).expect("batch runs");

    println!();
    println!(
        "{:>6}  {:>5}  {:>6}  {:>14}  {:>9}  {:>10}",
        "rate", "runs", "failed", "routed-correct", "escalated", "corpus WER"
    );
    for slice in &report.by_error_rate {
        println!(
            "{:>6.2}  {:>5}  {:>6}  {:>14.3}  {:>9.3}  {:>10.4}",
            slice.error_rate,
            slice.runs,
            slice.failed_runs,
            slice.routed_correct_rate,
            slice.report.rate_escalated,
            slice.report.corpus_wer
        );
    }
    println!();
    println!(
        "overall: {} runs, {} failed, class accuracy {:?}",
        report.runs, report.failed_runs, report.overall.class_accuracy
    );
}
