//! Word-error-rate computation and batch reporting.
//!
//! WER follows the community-standard definition
//! `(S + D + I) / reference length` from a minimal-cost word alignment
//! with unit edit costs. Corpus WER pools edits over the whole batch
//! (`Σ errors / Σ ref_len`) rather than averaging per-utterance rates;
//! the per-utterance mean is reported alongside for comparison.

use serde::{Deserialize, Serialize};

use crate::error::{EngineError, Result};
use crate::session::TerminalState;

/// Edit decomposition of one alignment.
///
/// Among cost-equal alignments the backtrace prefers substitution over
/// deletion over insertion, so the decomposition is deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditCounts {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub ref_len: usize,
}

impl EditCounts {
    pub fn total(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }
}

/// Minimal-cost word alignment via dynamic programming, unit costs.
pub fn word_edit_distance(reference: &[String], hypothesis: &[String]) -> EditCounts {
    let n = reference.len();
    let m = hypothesis.len();
    let mut dp = vec![vec![0u32; m + 1]; n + 1];
    for (i, row) in dp.iter_mut().enumerate() {
        row[0] = i as u32;
    }
    for (j, cell) in dp[0].iter_mut().enumerate() {
        *cell = j as u32;
    }
    for i in 1..=n {
        for j in 1..=m {
            let cost = u32::from(reference[i - 1] != hypothesis[j - 1]);
            dp[i][j] = (dp[i - 1][j - 1] + cost)
                .min(dp[i - 1][j] + 1)
                .min(dp[i][j - 1] + 1);
        }
    }

    // Backtrace; preference order fixes the S/D/I split among ties.
    let (mut i, mut j) = (n, m);
    let mut counts = EditCounts {
        substitutions: 0,
        deletions: 0,
        insertions: 0,
        ref_len: n,
    };
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let cost = u32::from(reference[i - 1] != hypothesis[j - 1]);
            if dp[i][j] == dp[i - 1][j - 1] + cost {
                if cost == 1 {
                    counts.substitutions += 1;
                }
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && dp[i][j] == dp[i - 1][j] + 1 {
            counts.deletions += 1;
            i -= 1;
            continue;
        }
        counts.insertions += 1;
        j -= 1;
    }
    counts
}

/// `(S + D + I) / ref_len` for one utterance.
///
/// An empty reference is only meaningful against an empty hypothesis
/// (WER 0); against a non-empty one the rate has no denominator and the
/// caller must exclude the pair.
pub fn utterance_wer(counts: &EditCounts) -> Result<f64> {
    if counts.ref_len == 0 {
        if counts.total() == 0 {
            return Ok(0.0);
        }
        return Err(EngineError::EmptyReference { pair_index: 0 });
    }
    Ok(counts.total() as f64 / counts.ref_len as f64)
}

/// Pooled corpus WER over `(reference, hypothesis)` token pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WerSummary {
    /// `Σ(S+D+I) / Σ ref_len` over the batch.
    pub pooled_wer: f64,
    /// Mean of per-utterance WERs, reported for comparison with pooled.
    pub mean_utterance_wer: f64,
    pub utterance_count: usize,
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub ref_tokens: usize,
}

pub fn corpus_wer(pairs: &[(Vec<String>, Vec<String>)]) -> Result<WerSummary> {
    let mut totals = EditCounts {
        substitutions: 0,
        deletions: 0,
        insertions: 0,
        ref_len: 0,
    };
    let mut wer_sum = 0.0;
    for (index, (reference, hypothesis)) in pairs.iter().enumerate() {
        if reference.is_empty() {
            return Err(EngineError::EmptyReference { pair_index: index });
        }
        let counts = word_edit_distance(reference, hypothesis);
        wer_sum += counts.total() as f64 / counts.ref_len as f64;
        totals.substitutions += counts.substitutions;
        totals.deletions += counts.deletions;
        totals.insertions += counts.insertions;
        totals.ref_len += counts.ref_len;
    }
    let pooled = if totals.ref_len == 0 {
        0.0
    } else {
        totals.total() as f64 / totals.ref_len as f64
    };
    Ok(WerSummary {
        pooled_wer: pooled,
        mean_utterance_wer: if pairs.is_empty() {
            0.0
        } else {
            wer_sum / pairs.len() as f64
        },
        utterance_count: pairs.len(),
        substitutions: totals.substitutions,
        deletions: totals.deletions,
        insertions: totals.insertions,
        ref_tokens: totals.ref_len,
    })
}

/// How one completed session ended, for batch aggregation.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SessionOutcome {
    pub id: String,
    pub terminal: Option<TerminalState>,
    /// Last classification the session settled on, if any.
    pub chosen_class: Option<String>,
    /// Ground-truth label from the driving scenario, if any.
    pub expected_class: Option<String>,
}

/// Corpus-level report for a batch run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalReport {
    pub session_count: usize,
    pub rate_routed: f64,
    pub rate_escalated: f64,
    pub rate_abandoned: f64,
    /// Fraction of sessions that routed to the ground-truth class.
    pub rate_routed_correct: f64,
    /// Fraction of labeled sessions whose final classification matched the
    /// label; absent when nothing was labeled.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class_accuracy: Option<f64>,
    pub utterance_count: usize,
    pub corpus_wer: f64,
    pub mean_utterance_wer: f64,
}

/// Aggregate terminal rates, label accuracy and corpus WER for a batch.
///
/// Every session must have terminated; WER pairs are the per-utterance
/// `(reference, hypothesis)` token lists observed during the batch.
pub fn build_report(
    outcomes: &[SessionOutcome],
    wer_pairs: &[(Vec<String>, Vec<String>)],
) -> Result<EvalReport> {
    let mut routed = 0usize;
    let mut escalated = 0usize;
    let mut abandoned = 0usize;
    let mut routed_correct = 0usize;
    let mut labeled = 0usize;
    let mut labeled_correct = 0usize;
    for outcome in outcomes {
        let terminal = outcome
            .terminal
            .ok_or_else(|| EngineError::IncompleteBatch {
                reason: format!("session {} did not terminate", outcome.id),
            })?;
        match terminal {
            TerminalState::Routed => routed += 1,
            TerminalState::Escalated => escalated += 1,
            TerminalState::Abandoned => abandoned += 1,
        }
        if let Some(expected) = &outcome.expected_class {
            labeled += 1;
            let correct = outcome.chosen_class.as_deref() == Some(expected.as_str());
            if correct {
                labeled_correct += 1;
                if terminal == TerminalState::Routed {
                    routed_correct += 1;
                }
            }
        }
    }
    let total = outcomes.len();
    let rate = |count: usize| {
        if total == 0 {
            0.0
        } else {
            count as f64 / total as f64
        }
    };
    let wer = corpus_wer(wer_pairs)?;
    Ok(EvalReport {
        session_count: total,
        rate_routed: rate(routed),
        rate_escalated: rate(escalated),
        rate_abandoned: rate(abandoned),
        rate_routed_correct: rate(routed_correct),
        class_accuracy: (labeled > 0).then(|| labeled_correct as f64 / labeled as f64),
        utterance_count: wer.utterance_count,
        corpus_wer: wer.pooled_wer,
        mean_utterance_wer: wer.mean_utterance_wer,
    })
}
