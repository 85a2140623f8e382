//! Perplexity, the expected output-layer size E and the training-cost
//! estimators that quantify the factorization speedup.

use std::fmt::Write as _;

use crate::corpus::{TokenSequence, Vocabulary};
use crate::error::{Error, Result};
use crate::packing::{LayerAssignment, TShirtConfig};
use crate::rnn::Model;

/// Which layer-size measure feeds the expectation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeMode {
    /// Category capacity: overlap between follow lists ignored.
    Nominal,
    /// Actual packed member counts.
    Effective,
}

/// Token-frequency-weighted expected output-layer size.
///
/// Each word contributes its layer-size measure weighted by
/// `unigram_count / total_tokens`, so the result equals the plain average
/// of layer size over every corpus token position.
pub fn expected_layer_size(
    assignment: &LayerAssignment,
    vocab: &Vocabulary,
    config: &TShirtConfig,
    mode: SizeMode,
) -> Result<f64> {
    let total = vocab.total_tokens();
    if total == 0 {
        return Err(Error::EmptyInput("expected layer size is undefined on zero tokens".into()));
    }
    let mut e = 0.0;
    for w in 0..vocab.len() {
        let layer = assignment.layer_of(w);
        let size = match mode {
            SizeMode::Nominal => config.capacity(layer.category()),
            SizeMode::Effective => layer.size(),
        };
        e += vocab.count(w) as f64 / total as f64 * size as f64;
    }
    Ok(e)
}

/// Per-time-step training cost of the unfactorized softmax.
pub fn cost_full(hidden: usize, tau: usize, vocab_size: usize) -> f64 {
    recurrence_cost(hidden, tau) + (hidden * vocab_size) as f64
}

/// Per-time-step training cost of class-layer factorization with `classes`
/// classes (estimator only; the class architecture itself is not built).
pub fn cost_class(hidden: usize, tau: usize, classes: usize) -> f64 {
    recurrence_cost(hidden, tau) + (hidden * classes) as f64
}

/// Per-time-step training cost of the follow-list factorization with
/// expected layer size `e`.
pub fn cost_factored(hidden: usize, tau: usize, e: f64) -> f64 {
    recurrence_cost(hidden, tau) + hidden as f64 * e
}

fn recurrence_cost(hidden: usize, tau: usize) -> f64 {
    ((1 + hidden) * hidden * tau) as f64
}

/// The speedup summary: both expectations, their |V|/E ratios and the three
/// cost estimates.
#[derive(Debug, Clone)]
pub struct SpeedupReport {
    pub vocab_size: usize,
    pub e_nominal: f64,
    pub e_effective: f64,
    pub speedup_nominal: f64,
    pub speedup_effective: f64,
    pub cost_full: f64,
    pub cost_class: f64,
    pub cost_factored: f64,
}

impl SpeedupReport {
    /// Assemble a report from already-measured expectations.
    pub fn from_expectations(
        vocab_size: usize,
        e_nominal: f64,
        e_effective: f64,
        hidden: usize,
        tau: usize,
        classes: usize,
    ) -> SpeedupReport {
        SpeedupReport {
            vocab_size,
            e_nominal,
            e_effective,
            speedup_nominal: vocab_size as f64 / e_nominal,
            speedup_effective: vocab_size as f64 / e_effective,
            cost_full: cost_full(hidden, tau, vocab_size),
            cost_class: cost_class(hidden, tau, classes),
            cost_factored: cost_factored(hidden, tau, e_effective),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "vocab_size,e_nominal,e_effective,speedup_nominal,speedup_effective,cost_full,cost_class,cost_factored\n",
        );
        let _ = writeln!(
            s,
            "{},{:.4},{:.4},{:.4},{:.4},{:.1},{:.1},{:.1}",
            self.vocab_size,
            self.e_nominal,
            self.e_effective,
            self.speedup_nominal,
            self.speedup_effective,
            self.cost_full,
            self.cost_class,
            self.cost_factored
        );
        s
    }
}

/// Measure both expectations on an assignment and fill in the ratios and
/// cost estimates.
pub fn speedup_report(
    assignment: &LayerAssignment,
    vocab: &Vocabulary,
    config: &TShirtConfig,
    hidden: usize,
    tau: usize,
    classes: usize,
) -> Result<SpeedupReport> {
    let e_nominal = expected_layer_size(assignment, vocab, config, SizeMode::Nominal)?;
    let e_effective = expected_layer_size(assignment, vocab, config, SizeMode::Effective)?;
    Ok(SpeedupReport::from_expectations(vocab.len(), e_nominal, e_effective, hidden, tau, classes))
}

/// Per-token perplexity over a test set: 2 to the mean negative log2
/// probability. `count_eos` controls whether the final `</s>` prediction of
/// each sentence is tallied.
pub fn perplexity(model: &Model, test_set: &[TokenSequence], count_eos: bool) -> Result<f64> {
    if test_set.is_empty() {
        return Err(Error::EmptyInput("perplexity is undefined on an empty test set".into()));
    }
    let loss = model.corpus_nll(test_set, count_eos)?;
    if loss.tokens == 0 {
        return Err(Error::EmptyInput("perplexity is undefined on zero predicted tokens".into()));
    }
    Ok(loss.perplexity())
}
