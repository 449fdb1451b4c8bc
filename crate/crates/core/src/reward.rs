//! Composite reward for gaze traces and the group-relative policy update
//! scalars.
//!
//! The total reward of a completion is the plain sum of six components:
//!
//! | component | value |
//! |-----------|-------|
//! | correct   | +1.5 / +0.7 / −0.2 / −0.5 by (answer matches × gaze used); −1.0 with no answer |
//! | format    | +0.15 with at least one THINK, one LOOK and one ANSWER |
//! | bbox      | +0.10 × valid boxes / LOOK blocks |
//! | overlap   | −0.15 × mean pairwise IoU |
//! | excess    | −0.15 with 11 or more LOOK blocks |
//! | length    | −0.05 × max(0, words − 500) / 500 |
//!
//! A trace "uses gaze" when at least one LOOK has a usable box (area within
//! `[0.005, 0.95]`) and a non-blank observation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{is_geometrically_valid_within, AreaBounds};
use crate::trace::{parse_trace, trace_stats, ParseError, Tag, Trace, TraceStats};

/// Added to the group standard deviation when normalizing advantages.
pub const ADVANTAGE_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewardError {
    #[error("advantages need a group of at least 2 rewards, got {0}")]
    GroupTooSmall(usize),
    #[error("length mismatch: {log_probs} log-probabilities vs {advantages} advantages")]
    LengthMismatch { log_probs: usize, advantages: usize },
    #[error("loss needs at least one completion")]
    EmptyGroup,
    #[error("KL value must be non-negative")]
    NegativeKl,
    #[error("step {step} outside 0..={total_steps}")]
    StepOutOfRange { step: usize, total_steps: usize },
    #[error("total_steps must be at least 1")]
    NoSteps,
}

/// Every reward scalar. Defaults are the standard settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub correct_with_gaze: f64,
    pub correct_no_gaze: f64,
    pub wrong_with_gaze: f64,
    pub wrong_no_gaze: f64,
    pub no_answer: f64,
    pub format_bonus: f64,
    pub bbox_bonus: f64,
    pub overlap_coeff: f64,
    pub excess_penalty: f64,
    pub excess_threshold: usize,
    pub length_coeff: f64,
    pub w0: usize,
    pub area_min: f64,
    pub area_max: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            correct_with_gaze: 1.5,
            correct_no_gaze: 0.7,
            wrong_with_gaze: -0.2,
            wrong_no_gaze: -0.5,
            no_answer: -1.0,
            format_bonus: 0.15,
            bbox_bonus: 0.10,
            overlap_coeff: 0.15,
            excess_penalty: 0.15,
            excess_threshold: 11,
            length_coeff: 0.05,
            w0: 500,
            area_min: 0.005,
            area_max: 0.95,
        }
    }
}

impl RewardConfig {
    pub fn area_bounds(&self) -> AreaBounds {
        AreaBounds {
            min: self.area_min,
            max: self.area_max,
        }
    }
}

/// Decides whether a predicted answer matches the ground truth.
pub trait AnswerMatcher {
    fn matches(&self, predicted: &str, expected: &str) -> bool;
}

impl<F> AnswerMatcher for F
where
    F: Fn(&str, &str) -> bool,
{
    fn matches(&self, predicted: &str, expected: &str) -> bool {
        self(predicted, expected)
    }
}

/// Deterministic matcher: case-folded, trimmed, whitespace-collapsed strings
/// with trailing punctuation removed must be equal, or both must parse as
/// numbers within `numeric_tolerance`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedMatcher {
    pub numeric_tolerance: f64,
}

impl Default for NormalizedMatcher {
    fn default() -> Self {
        Self {
            numeric_tolerance: 1e-6,
        }
    }
}

pub fn normalize_answer(s: &str) -> String {
    let collapsed = s
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase();
    collapsed
        .trim_end_matches(['.', ',', '!', '?', ';', ':'])
        .trim_end()
        .to_string()
}

impl AnswerMatcher for NormalizedMatcher {
    fn matches(&self, predicted: &str, expected: &str) -> bool {
        let (p, e) = (normalize_answer(predicted), normalize_answer(expected));
        if p == e {
            return true;
        }
        match (p.parse::<f64>(), e.parse::<f64>()) {
            (Ok(a), Ok(b)) if a.is_finite() && b.is_finite() => {
                (a - b).abs() <= self.numeric_tolerance
            }
            _ => false,
        }
    }
}

/// True when some LOOK has a usable box and a non-blank observation.
pub fn gaze_indicator(t: &Trace, cfg: &RewardConfig) -> bool {
    let bounds = cfg.area_bounds();
    t.looks()
        .any(|l| is_geometrically_valid_within(l.bbox, bounds) && !l.observation.trim().is_empty())
}

pub fn correctness_reward(
    t: &Trace,
    y_star: &str,
    matcher: &dyn AnswerMatcher,
    cfg: &RewardConfig,
) -> f64 {
    let Some(answer) = t.answer() else {
        return cfg.no_answer;
    };
    match (matcher.matches(answer, y_star), gaze_indicator(t, cfg)) {
        (true, true) => cfg.correct_with_gaze,
        (true, false) => cfg.correct_no_gaze,
        (false, true) => cfg.wrong_with_gaze,
        (false, false) => cfg.wrong_no_gaze,
    }
}

/// At least one THINK, at least one LOOK and exactly one ANSWER. Nesting and
/// answer placement are already enforced by the parser.
pub fn has_full_format(t: &Trace) -> bool {
    t.count(Tag::Think) >= 1 && t.count(Tag::Look) >= 1 && t.count(Tag::Answer) == 1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub correct: f64,
    pub format: f64,
    pub bbox: f64,
    pub overlap: f64,
    pub excess: f64,
    pub length: f64,
    pub total: f64,
    pub gaze_indicator: bool,
    pub stats: TraceStats,
}

impl RewardBreakdown {
    /// The score given to text that does not parse: no answer, nothing else.
    pub fn unparseable(cfg: &RewardConfig) -> Self {
        Self::from_components(
            [cfg.no_answer, 0.0, 0.0, 0.0, 0.0, 0.0],
            false,
            TraceStats {
                look_count: 0,
                valid_box_count: 0,
                word_count: 0,
                has_think: false,
                has_answer: false,
                mean_pairwise_iou: 0.0,
            },
        )
    }

    fn from_components(c: [f64; 6], gaze_indicator: bool, stats: TraceStats) -> Self {
        let [correct, format, bbox, overlap, excess, length] = c;
        Self {
            correct,
            format,
            bbox,
            overlap,
            excess,
            length,
            total: correct + format + bbox + overlap + excess + length,
            gaze_indicator,
            stats,
        }
    }
}

pub fn score_completion(
    t: &Trace,
    y_star: &str,
    matcher: &dyn AnswerMatcher,
    cfg: &RewardConfig,
) -> RewardBreakdown {
    let mut stats = trace_stats(t);
    // Validity under the configured area bounds, which may differ from the
    // defaults used by `trace_stats`.
    stats.valid_box_count = t
        .looks()
        .filter(|l| is_geometrically_valid_within(l.bbox, cfg.area_bounds()))
        .count();

    let correct = correctness_reward(t, y_star, matcher, cfg);
    let format = if has_full_format(t) {
        cfg.format_bonus
    } else {
        0.0
    };
    let bbox = if stats.look_count == 0 {
        0.0
    } else {
        cfg.bbox_bonus * (stats.valid_box_count as f64 / stats.look_count as f64)
    };
    let overlap = -cfg.overlap_coeff * stats.mean_pairwise_iou;
    let excess = if stats.look_count >= cfg.excess_threshold {
        -cfg.excess_penalty
    } else {
        0.0
    };
    let w0 = cfg.w0 as f64;
    let extra_words = stats.word_count.saturating_sub(cfg.w0) as f64;
    let length = -cfg.length_coeff * (extra_words / w0);

    RewardBreakdown::from_components(
        [correct, format, bbox, overlap, excess, length],
        gaze_indicator(t, cfg),
        stats,
    )
}

/// Parses and scores raw completion text. Text that fails to parse gets
/// [`RewardBreakdown::unparseable`]; the parse error is returned alongside.
pub fn score_text(
    text: &str,
    y_star: &str,
    matcher: &dyn AnswerMatcher,
    cfg: &RewardConfig,
) -> (RewardBreakdown, Option<ParseError>) {
    match parse_trace(text) {
        Ok(t) => (score_completion(&t, y_star, matcher, cfg), None),
        Err(e) => (RewardBreakdown::unparseable(cfg), Some(e)),
    }
}

/// Group-normalized advantages `(R_i − μ) / (σ + ε)` with the population
/// standard deviation.
pub fn advantages(rewards: &[f64]) -> Result<Vec<f64>, RewardError> {
    let g = rewards.len();
    if g < 2 {
        return Err(RewardError::GroupTooSmall(g));
    }
    let n = g as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    let denom = var.sqrt() + ADVANTAGE_EPS;
    Ok(rewards.iter().map(|r| (r - mean) / denom).collect())
}

/// `−(1/G) Σ A_i · log π(c_i) + β · KL`.
pub fn grpo_loss(
    log_probs: &[f64],
    advantages: &[f64],
    kl_value: f64,
    beta: f64,
) -> Result<f64, RewardError> {
    if log_probs.len() != advantages.len() {
        return Err(RewardError::LengthMismatch {
            log_probs: log_probs.len(),
            advantages: advantages.len(),
        });
    }
    if log_probs.is_empty() {
        return Err(RewardError::EmptyGroup);
    }
    if kl_value < 0.0 {
        return Err(RewardError::NegativeKl);
    }
    let g = log_probs.len() as f64;
    let policy: f64 = advantages.iter().zip(log_probs).map(|(a, lp)| a * lp).sum();
    Ok(-policy / g + beta * kl_value)
}

/// Linear decay of the KL coefficient from `start` to `end` over the first
/// `decay_fraction` of training, constant afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KlSchedule {
    pub kl_start: f64,
    pub kl_end: f64,
    pub kl_decay_fraction: f64,
}

impl Default for KlSchedule {
    fn default() -> Self {
        Self {
            kl_start: 0.04,
            kl_end: 0.01,
            kl_decay_fraction: 0.5,
        }
    }
}

impl KlSchedule {
    pub fn at(&self, step: usize, total_steps: usize) -> Result<f64, RewardError> {
        if total_steps == 0 {
            return Err(RewardError::NoSteps);
        }
        if step > total_steps {
            return Err(RewardError::StepOutOfRange { step, total_steps });
        }
        let t = step as f64 / (total_steps as f64 * self.kl_decay_fraction);
        if t >= 1.0 {
            Ok(self.kl_end)
        } else {
            Ok(self.kl_start + (self.kl_end - self.kl_start) * t)
        }
    }
}

/// KL coefficient at `step` under the default schedule (0.04 → 0.01 over the
/// first half of training).
pub fn kl_schedule(step: usize, total_steps: usize) -> Result<f64, RewardError> {
    KlSchedule::default().at(step, total_steps)
}

/// A scored completion within a rollout group.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCompletion {
    pub trace: Option<Trace>,
    pub reward: RewardBreakdown,
}

/// `G` completions for one question.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutGroup {
    pub question_id: String,
    pub ground_truth: String,
    pub completions: Vec<ScoredCompletion>,
}

impl RolloutGroup {
    /// Scores each completion text against the group's ground truth.
    pub fn score<S: AsRef<str>>(
        question_id: impl Into<String>,
        ground_truth: impl Into<String>,
        texts: &[S],
        matcher: &dyn AnswerMatcher,
        cfg: &RewardConfig,
    ) -> Self {
        let ground_truth = ground_truth.into();
        let completions = texts
            .iter()
            .map(|text| match parse_trace(text.as_ref()) {
                Ok(t) => {
                    let reward = score_completion(&t, &ground_truth, matcher, cfg);
                    ScoredCompletion {
                        trace: Some(t),
                        reward,
                    }
                }
                Err(_) => ScoredCompletion {
                    trace: None,
                    reward: RewardBreakdown::unparseable(cfg),
                },
            })
            .collect();
        Self {
            question_id: question_id.into(),
            ground_truth,
            completions,
        }
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.completions.iter().map(|c| c.reward.total).collect()
    }

    pub fn advantages(&self) -> Result<Vec<f64>, RewardError> {
        advantages(&self.rewards())
    }
}
