//! Scripted-caller simulation and batch evaluation.
//!
//! A scenario is the desk-scale stand-in for a live caller: reference
//! utterances and confirmation replies in order, plus the expected
//! outcome. The runner drives the session exactly the way the bridge
//! does — through the mock ASR (with a per-utterance derived seed), the
//! classifier and the confirmation lexicon — so scripted runs exercise
//! the real pipeline path.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::asr::{self, AsrBackendConfig};
use crate::config::{CallLogRecord, CallLogWriter, EngineConfig};
use crate::engine::apply_transcript;
use crate::error::{EngineError, Result};
use crate::metrics::{self, EvalReport, SessionOutcome, WerSummary};
use crate::seed;
use crate::session::{
    advance, escalate_for_failure, CallSession, DialogAction, DialogEvent, Phase, TerminalState,
};

/// One scripted caller input.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioStep {
    /// Spoken reference text; an utterance in Listening, a confirmation
    /// reply in Confirming.
    Say(String),
    /// The caller hangs up.
    Hangup,
}

/// A scripted call with its expected outcome.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub scenario_id: String,
    pub language: String,
    pub steps: Vec<ScenarioStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_class: Option<String>,
    pub expected_terminal: TerminalState,
}

impl Scenario {
    pub fn validate(&self, config: &EngineConfig) -> Result<()> {
        let err = |reason: String| EngineError::Input {
            reason: format!("scenario {}: {reason}", self.scenario_id),
        };
        if self.scenario_id.is_empty() {
            return Err(EngineError::Input {
                reason: "scenario_id must be non-empty".to_string(),
            });
        }
        let says = self
            .steps
            .iter()
            .filter(|s| matches!(s, ScenarioStep::Say(_)))
            .count();
        if says == 0 {
            return Err(err("needs at least one utterance".to_string()));
        }
        for step in &self.steps {
            if let ScenarioStep::Say(text) = step {
                if asr::normalize(text).is_empty() {
                    return Err(err(format!("utterance {text:?} normalizes to nothing")));
                }
            }
        }
        if self.expected_terminal == TerminalState::Routed {
            match &self.expected_class {
                None => {
                    return Err(err(
                        "expected_terminal routed requires expected_class".to_string()
                    ))
                }
                Some(class_id) if !config.taxonomy.contains(class_id) => {
                    return Err(err(format!(
                        "expected_class {class_id} missing from taxonomy"
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Per-run knobs; `None` falls back to the engine config.
#[derive(Default, Clone)]
pub struct RunOptions {
    pub error_rate: Option<f64>,
    pub seed: Option<u64>,
    pub call_log: Option<Arc<CallLogWriter>>,
}

/// Outcome of one scripted run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SessionReport {
    pub scenario_id: String,
    pub terminal: TerminalState,
    pub chosen_class: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_class: Option<String>,
    pub expected_terminal: TerminalState,
    pub matched_expectation: bool,
    pub action_trace: Vec<DialogAction>,
    /// Pooled WER of the mock ASR over this run's utterances.
    pub asr_wer: f64,
    #[serde(skip)]
    pub wer_pairs: Vec<(Vec<String>, Vec<String>)>,
}

impl SessionReport {
    pub fn routed_correct(&self) -> bool {
        self.terminal == TerminalState::Routed
            && self.expected_class.is_some()
            && self.chosen_class == self.expected_class
    }
}

/// Run one scenario against the configured (mock) backends.
pub fn run_scenario(scenario: &Scenario, config: &EngineConfig) -> Result<SessionReport> {
    run_scenario_with(scenario, config, &RunOptions::default())
}

pub fn run_scenario_with(
    scenario: &Scenario,
    config: &EngineConfig,
    options: &RunOptions,
) -> Result<SessionReport> {
    scenario.validate(config)?;
    let asr_backend = match (&config.asr, options.error_rate) {
        (AsrBackendConfig::Mock { seed, .. }, Some(rate)) => AsrBackendConfig::Mock {
            error_rate: rate,
            seed: *seed,
        },
        (backend, _) => backend.clone(),
    };
    let base_seed = options.seed.unwrap_or(config.seed);
    let session_seed = seed::session_seed(base_seed, &scenario.scenario_id);
    let ctx = config.dialog_context();

    let mut session = CallSession::new(scenario.scenario_id.clone(), scenario.language.clone());
    let mut trace: Vec<DialogAction> = Vec::new();
    let mut wer_pairs: Vec<(Vec<String>, Vec<String>)> = Vec::new();
    let mut utterance_index = 0u64;

    let log_step = |before: Phase, session: &CallSession, event: &str, actions: &[DialogAction]| {
        if let Some(log) = &options.call_log {
            log.append(CallLogRecord {
                ts: None,
                call_id: session.call_id.clone(),
                phase_before: before.to_string(),
                event: event.to_string(),
                actions: actions.to_vec(),
                phase_after: session.phase.to_string(),
            });
        }
    };

    let (started, actions) = advance(&session, &DialogEvent::SessionStart, &ctx)?;
    log_step(session.phase, &started, "session_start", &actions);
    trace.extend(actions);
    session = started;

    let mut steps = scenario.steps.iter();
    while !session.is_terminal() {
        let step = steps.next().ok_or_else(|| EngineError::ScenarioUnderrun {
            scenario_id: scenario.scenario_id.clone(),
        })?;
        let before = session.phase;
        let (next, actions, event_name) = match step {
            ScenarioStep::Hangup => {
                let (next, actions) = advance(&session, &DialogEvent::Hangup, &ctx)?;
                (next, actions, "hangup".to_string())
            }
            ScenarioStep::Say(text) => {
                let utterance_seed = seed::utterance_seed(session_seed, utterance_index);
                utterance_index += 1;
                match asr::transcribe(
                    text,
                    &scenario.language,
                    &asr_backend.with_seed(utterance_seed),
                ) {
                    Ok(transcript) => {
                        wer_pairs.push((asr::normalize(text), transcript.tokens().to_vec()));
                        let (next, actions) = apply_transcript(&session, &transcript, config)?;
                        (next, actions, "utterance".to_string())
                    }
                    Err(e) if e.escalates() => {
                        let (next, actions) = escalate_for_failure(&session, &e.to_string())?;
                        (next, actions, format!("backend_failure:{e}"))
                    }
                    Err(e) => return Err(e),
                }
            }
        };
        log_step(before, &next, &event_name, &actions);
        trace.extend(actions);
        session = next;
    }

    let terminal = session
        .phase
        .terminal_state()
        .expect("loop exits on terminal");
    let chosen_class = session
        .last_classification
        .as_ref()
        .map(|r| r.class_id.clone());
    let matched_expectation = terminal == scenario.expected_terminal
        && match scenario.expected_terminal {
            TerminalState::Routed => chosen_class == scenario.expected_class,
            _ => true,
        };
    let wer = metrics::corpus_wer(&wer_pairs)?;
    Ok(SessionReport {
        scenario_id: scenario.scenario_id.clone(),
        terminal,
        chosen_class,
        expected_class: scenario.expected_class.clone(),
        expected_terminal: scenario.expected_terminal,
        matched_expectation,
        action_trace: trace,
        asr_wer: wer.pooled_wer,
        wer_pairs,
    })
}

/// A run that errored instead of terminating.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunFailure {
    pub scenario_id: String,
    pub seed: u64,
    pub error_rate: f64,
    pub error: String,
}

/// Batch results for one noise level.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RateSlice {
    pub error_rate: f64,
    pub runs: usize,
    pub failed_runs: usize,
    /// Routed-to-the-right-queue rate over all runs at this level,
    /// counting failed runs as incorrect.
    pub routed_correct_rate: f64,
    pub report: EvalReport,
}

/// Aggregated results of scenarios × seeds × error rates.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BatchReport {
    pub runs: usize,
    pub failed_runs: usize,
    pub seeds: Vec<u64>,
    pub error_rates: Vec<f64>,
    pub by_error_rate: Vec<RateSlice>,
    pub overall: EvalReport,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<RunFailure>,
}

/// Run every scenario × seed × error rate with the noisy mock ASR and
/// aggregate. Per-run failures (e.g. script underrun under heavy noise)
/// are counted, not fatal. Deterministic for fixed inputs: scenarios are
/// sorted by id, rates ascending, and per-run seeds depend only on
/// `(seed, scenario_id)`.
pub fn run_batch(
    scenarios: &[Scenario],
    config: &EngineConfig,
    seeds: &[u64],
    error_rates: &[f64],
) -> Result<BatchReport> {
    if scenarios.is_empty() {
        return Err(EngineError::Input {
            reason: "batch needs at least one scenario".to_string(),
        });
    }
    let mut scenarios: Vec<&Scenario> = scenarios.iter().collect();
    scenarios.sort_by(|a, b| a.scenario_id.cmp(&b.scenario_id));
    let mut seeds: Vec<u64> = if seeds.is_empty() {
        vec![config.seed]
    } else {
        seeds.to_vec()
    };
    seeds.dedup();
    let mut rates: Vec<f64> = if error_rates.is_empty() {
        match config.asr {
            AsrBackendConfig::Mock { error_rate, .. } => vec![error_rate],
            _ => vec![0.0],
        }
    } else {
        error_rates.to_vec()
    };
    rates.sort_by(|a, b| a.partial_cmp(b).expect("finite rates"));
    rates.dedup();

    let mut slices = Vec::with_capacity(rates.len());
    let mut all_outcomes: Vec<SessionOutcome> = Vec::new();
    let mut all_pairs: Vec<(Vec<String>, Vec<String>)> = Vec::new();
    let mut failures: Vec<RunFailure> = Vec::new();
    let mut total_runs = 0usize;

    for &rate in &rates {
        let mut outcomes = Vec::new();
        let mut pairs = Vec::new();
        let mut routed_correct = 0usize;
        let mut failed = 0usize;
        let mut runs = 0usize;
        for &seed in &seeds {
            for scenario in &scenarios {
                runs += 1;
                let options = RunOptions {
                    error_rate: Some(rate),
                    seed: Some(seed),
                    call_log: None,
                };
                match run_scenario_with(scenario, config, &options) {
                    Ok(report) => {
                        if report.routed_correct() {
                            routed_correct += 1;
                        }
                        outcomes.push(SessionOutcome {
                            id: format!("{}@{}", report.scenario_id, seed),
                            terminal: Some(report.terminal),
                            chosen_class: report.chosen_class.clone(),
                            expected_class: report.expected_class.clone(),
                        });
                        pairs.extend(report.wer_pairs);
                    }
                    Err(e) => {
                        failed += 1;
                        failures.push(RunFailure {
                            scenario_id: scenario.scenario_id.clone(),
                            seed,
                            error_rate: rate,
                            error: e.to_string(),
                        });
                    }
                }
            }
        }
        total_runs += runs;
        let report = metrics::build_report(&outcomes, &pairs)?;
        all_outcomes.extend(outcomes);
        all_pairs.extend(pairs);
        slices.push(RateSlice {
            error_rate: rate,
            runs,
            failed_runs: failed,
            routed_correct_rate: if runs == 0 {
                0.0
            } else {
                routed_correct as f64 / runs as f64
            },
            report,
        });
    }

    let overall = metrics::build_report(&all_outcomes, &all_pairs)?;
    Ok(BatchReport {
        runs: total_runs,
        failed_runs: slices.iter().map(|s| s.failed_runs).sum(),
        seeds,
        error_rates: rates,
        by_error_rate: slices,
        overall,
        failures,
    })
}

/// Load one scenario from a JSON file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| EngineError::Config {
        path: path.display().to_string(),
        field: "(file)".to_string(),
        reason: format!("cannot read: {e}"),
    })?;
    serde_json::from_str(&text).map_err(|e| EngineError::Config {
        path: path.display().to_string(),
        field: "scenario".to_string(),
        reason: format!("invalid JSON: {e}"),
    })
}

/// Load every `*.json` scenario in a directory, sorted by scenario_id.
pub fn load_scenario_dir(dir: impl AsRef<Path>) -> Result<Vec<Scenario>> {
    let dir = dir.as_ref();
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(|e| EngineError::Config {
            path: dir.display().to_string(),
            field: "(dir)".to_string(),
            reason: format!("cannot read directory: {e}"),
        })?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    paths.sort();
    let mut scenarios = Vec::with_capacity(paths.len());
    for path in paths {
        scenarios.push(load_scenario(&path)?);
    }
    scenarios.sort_by(|a, b| a.scenario_id.cmp(&b.scenario_id));
    for window in scenarios.windows(2) {
        if window[0].scenario_id == window[1].scenario_id {
            return Err(EngineError::Input {
                reason: format!("duplicate scenario_id {}", window[0].scenario_id),
            });
        }
    }
    Ok(scenarios)
}

/// Corpus WER from two line-aligned text files (one utterance per line).
pub fn eval_asr_files(
    ref_path: impl AsRef<Path>,
    hyp_path: impl AsRef<Path>,
) -> Result<WerSummary> {
    let read = |path: &Path| -> Result<Vec<String>> {
        Ok(fs::read_to_string(path)
            .map_err(|e| EngineError::Input {
                reason: format!("cannot read {}: {e}", path.display()),
            })?
            .lines()
            .map(str::to_owned)
            .collect())
    };
    let refs = read(ref_path.as_ref())?;
    let hyps = read(hyp_path.as_ref())?;
    if refs.len() != hyps.len() {
        return Err(EngineError::Input {
            reason: format!(
                "line counts differ: {} reference lines vs {} hypothesis lines",
                refs.len(),
                hyps.len()
            ),
        });
    }
    let pairs: Vec<(Vec<String>, Vec<String>)> = refs
        .iter()
        .zip(hyps.iter())
        .map(|(r, h)| (asr::normalize(r), asr::normalize(h)))
        .collect();
    metrics::corpus_wer(&pairs)
}

/// Corpus WER from one TSV file (`reference<TAB>hypothesis` per line).
pub fn eval_asr_tsv(path: impl AsRef<Path>) -> Result<WerSummary> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| EngineError::Input {
        reason: format!("cannot read {}: {e}", path.display()),
    })?;
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let (r, h) = line.split_once('\t').ok_or_else(|| EngineError::Input {
            reason: format!(
                "{}: line {} has no tab separator",
                path.display(),
                lineno + 1
            ),
        })?;
        pairs.push((asr::normalize(r), asr::normalize(h)));
    }
    metrics::corpus_wer(&pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    #[test]
    fn happy_scenario_routes_to_expected_class() {
        let config = synth::test_config(8);
        let scenario = &synth::happy_scenarios(&config.taxonomy)[0];
        let report = run_scenario(scenario, &config).unwrap();
        assert_eq!(report.terminal, TerminalState::Routed);
        assert!(report.matched_expectation);
        assert_eq!(report.chosen_class, scenario.expected_class);
        assert_eq!(report.asr_wer, 0.0);
        assert!(matches!(
            report.action_trace.last(),
            Some(DialogAction::Transfer(_))
        ));
    }

    #[test]
    fn repeated_rejection_escalates() {
        let config = synth::test_config(8);
        let scenarios = synth::demo_scenarios(&config.taxonomy);
        let reject = scenarios
            .iter()
            .find(|s| s.scenario_id == "reject_twice_escalates")
            .unwrap();
        let report = run_scenario(reject, &config).unwrap();
        assert_eq!(report.terminal, TerminalState::Escalated);
        assert!(report.matched_expectation);
        let operator_transfers = report
            .action_trace
            .iter()
            .filter(|a| **a == DialogAction::TransferOperator)
            .count();
        assert_eq!(operator_transfers, 1);
    }

    #[test]
    fn hangup_scenario_abandons() {
        let config = synth::test_config(8);
        let scenarios = synth::demo_scenarios(&config.taxonomy);
        let hangup = scenarios
            .iter()
            .find(|s| s.scenario_id == "hangup_mid_call")
            .unwrap();
        let report = run_scenario(hangup, &config).unwrap();
        assert_eq!(report.terminal, TerminalState::Abandoned);
        assert!(report.matched_expectation);
    }

    #[test]
    fn unclear_reply_consumes_replay_then_routes() {
        let config = synth::test_config(8);
        let scenarios = synth::demo_scenarios(&config.taxonomy);
        let unclear = scenarios
            .iter()
            .find(|s| s.scenario_id == "unclear_then_yes_routes")
            .unwrap();
        let report = run_scenario(unclear, &config).unwrap();
        assert_eq!(report.terminal, TerminalState::Routed);
        assert!(report.matched_expectation);
    }

    #[test]
    fn exhausted_script_is_an_underrun() {
        let config = synth::test_config(8);
        let class = &config.taxonomy.classes()[0];
        let scenario = Scenario {
            scenario_id: "underrun".to_string(),
            language: "kk".to_string(),
            steps: vec![ScenarioStep::Say(format!("{} мәселесі", class.keywords[0]))],
            expected_class: Some(class.class_id.clone()),
            expected_terminal: TerminalState::Routed,
        };
        assert!(matches!(
            run_scenario(&scenario, &config),
            Err(EngineError::ScenarioUnderrun { .. })
        ));
    }

    #[test]
    fn noiseless_batch_is_perfect_and_deterministic() {
        let config = synth::test_config(8);
        let scenarios = synth::happy_scenarios(&config.taxonomy);
        let a = run_batch(&scenarios, &config, &[1], &[0.0]).unwrap();
        let b = run_batch(&scenarios, &config, &[1], &[0.0]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.failed_runs, 0);
        assert_eq!(a.overall.class_accuracy, Some(1.0));
        assert_eq!(a.overall.rate_escalated, 0.0);
        assert_eq!(a.by_error_rate[0].routed_correct_rate, 1.0);
    }

    #[test]
    fn scenario_validation_catches_bad_scripts() {
        let config = synth::test_config(8);
        let no_utterance = Scenario {
            scenario_id: "bad".to_string(),
            language: "kk".to_string(),
            steps: vec![ScenarioStep::Hangup],
            expected_class: None,
            expected_terminal: TerminalState::Abandoned,
        };
        assert!(no_utterance.validate(&config).is_err());
        let unknown_class = Scenario {
            scenario_id: "bad2".to_string(),
            language: "kk".to_string(),
            steps: vec![ScenarioStep::Say("сөз".to_string())],
            expected_class: Some("nope".to_string()),
            expected_terminal: TerminalState::Routed,
        };
        assert!(unknown_class.validate(&config).is_err());
    }

    #[test]
    fn eval_asr_rejects_mismatched_line_counts() {
        let dir = tempfile::tempdir().unwrap();
        let ref_path = dir.path().join("ref.txt");
        let hyp_path = dir.path().join("hyp.txt");
        fs::write(&ref_path, "а б в\nг д\n").unwrap();
        fs::write(&hyp_path, "а б в\n").unwrap();
        assert!(matches!(
            eval_asr_files(&ref_path, &hyp_path),
            Err(EngineError::Input { .. })
        ));
    }

    #[test]
    fn eval_asr_scores_identical_files_zero() {
        let dir = tempfile::tempdir().unwrap();
        let ref_path = dir.path().join("ref.txt");
        let hyp_path = dir.path().join("hyp.txt");
        fs::write(&ref_path, "Сәлем әлем!\nкарта жоғалды\n").unwrap();
        fs::write(&hyp_path, "сәлем әлем\nкарта жоғалды\n").unwrap();
        let summary = eval_asr_files(&ref_path, &hyp_path).unwrap();
        assert_eq!(summary.pooled_wer, 0.0);
        assert_eq!(summary.utterance_count, 2);
    }

    #[test]
    fn eval_asr_tsv_matches_hand_enumerated_edits() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.tsv");
        // Edits per line: 1 sub of 3; 1 del of 2; 0 of 1 → pooled 2/6.
        fs::write(&path, "а б в\tа х в\nг д\tг\nе\tе\n").unwrap();
        let summary = eval_asr_tsv(&path).unwrap();
        assert!((summary.pooled_wer - 2.0 / 6.0).abs() < 1e-12);
        assert_eq!(summary.substitutions, 1);
        assert_eq!(summary.deletions, 1);
    }
}
