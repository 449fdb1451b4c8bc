//! Data-pipeline heuristics: structural scoring of candidate traces, the
//! spatial grounding gate, and rollout-difficulty filtering.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reward::{has_full_format, AnswerMatcher};
use crate::trace::{Look, Segment, Tag, Trace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurationError {
    #[error("difficulty bounds must satisfy 0 <= low < high <= 1, got low={low}, high={high}")]
    InvalidBounds { low: f64, high: f64 },
    #[error("record `{id}`: successes ({successes}) exceed rollouts ({rollouts})")]
    TooManySuccesses {
        id: String,
        rollouts: u32,
        successes: u32,
    },
    #[error("record `{id}`: rollouts must be at least 1")]
    NoRollouts { id: String },
}

/// Shape of the structural score. `look_score` peaks at 2–3 LOOKs and decays
/// past 5.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StructuralConfig {
    pub look_score_none: f64,
    pub look_score_single: f64,
    pub look_score_peak: f64,
    pub look_score_extended: f64,
    pub look_score_decay: f64,
    pub think_bonus: f64,
}

impl Default for StructuralConfig {
    fn default() -> Self {
        Self {
            look_score_none: 0.0,
            look_score_single: 1.0,
            look_score_peak: 2.0,
            look_score_extended: 1.5,
            look_score_decay: 0.5,
            think_bonus: 0.5,
        }
    }
}

impl StructuralConfig {
    pub fn look_score(&self, n_looks: usize) -> f64 {
        match n_looks {
            0 => self.look_score_none,
            1 => self.look_score_single,
            2 | 3 => self.look_score_peak,
            4 | 5 => self.look_score_extended,
            n => (self.look_score_extended - self.look_score_decay * (n - 5) as f64).max(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    InvalidFormat,
    WrongAnswer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructuralScore {
    Reject(RejectReason),
    Score(f64),
}

impl StructuralScore {
    pub fn value(self) -> Option<f64> {
        match self {
            Self::Score(s) => Some(s),
            Self::Reject(_) => None,
        }
    }
}

pub fn structural_score(
    t: &Trace,
    y_star: &str,
    matcher: &dyn AnswerMatcher,
    cfg: &StructuralConfig,
) -> StructuralScore {
    if !has_full_format(t) {
        return StructuralScore::Reject(RejectReason::InvalidFormat);
    }
    let answer = t.answer().unwrap_or_default();
    if !matcher.matches(answer, y_star) {
        return StructuralScore::Reject(RejectReason::WrongAnswer);
    }
    let bonus = if t.count(Tag::Think) > 0 {
        cfg.think_bonus
    } else {
        0.0
    };
    StructuralScore::Score(cfg.look_score(t.count(Tag::Look)) + bonus)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub trace: Trace,
    pub score: StructuralScore,
}

/// Candidate traces for one sample, scored against its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub sample_id: String,
    pub ground_truth: String,
    pub candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub fn new(
        sample_id: impl Into<String>,
        ground_truth: impl Into<String>,
        traces: Vec<Trace>,
        matcher: &dyn AnswerMatcher,
        cfg: &StructuralConfig,
    ) -> Self {
        let ground_truth = ground_truth.into();
        let candidates = traces
            .into_iter()
            .map(|trace| {
                let score = structural_score(&trace, &ground_truth, matcher, cfg);
                Candidate { trace, score }
            })
            .collect();
        Self {
            sample_id: sample_id.into(),
            ground_truth,
            candidates,
        }
    }
}

/// Sort order over `(score, look_count)` pairs: score descending, then fewer
/// LOOKs, then input order. Returns input indices.
pub fn rank_order(keys: &[(f64, usize)]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| {
        let (sa, na) = keys[a];
        let (sb, nb) = keys[b];
        sb.total_cmp(&sa).then(na.cmp(&nb))
    });
    idx
}

/// Accepted candidates, best first. Rejected candidates are omitted.
pub fn rank_candidates(cs: &CandidateSet) -> Vec<&Candidate> {
    let accepted: Vec<&Candidate> = cs
        .candidates
        .iter()
        .filter(|c| c.score.value().is_some())
        .collect();
    let keys: Vec<(f64, usize)> = accepted
        .iter()
        .map(|c| {
            (
                c.score.value().unwrap_or_default(),
                c.trace.count(Tag::Look),
            )
        })
        .collect();
    rank_order(&keys).into_iter().map(|i| accepted[i]).collect()
}

/// Failure to obtain a verdict, as opposed to a negative verdict.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("verifier unavailable: {0}")]
pub struct VerifierError(pub String);

/// Confirms that a LOOK's observation holds for its box. `look_index` is
/// 1-based.
pub trait RegionVerifier {
    fn verify(&mut self, look_index: usize, look: &Look) -> Result<bool, VerifierError>;
}

/// Proposes new coordinates for a LOOK whose claim was not confirmed.
pub trait Refiner {
    fn refine(&mut self, trace: &Trace, look_index: usize) -> Result<[f64; 4], VerifierError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "decision")]
pub enum GateDecision {
    Accept,
    RefineRequest { look_index: usize },
    Reject { look_index: usize },
}

/// Retry state for one sample. Each [`check`](Self::check) that finds an
/// unconfirmed LOOK spends one retry; with none left the trace is rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroundingGate {
    retries_left: usize,
}

impl GroundingGate {
    pub fn new(retries: usize) -> Self {
        Self {
            retries_left: retries,
        }
    }

    pub fn retries_left(&self) -> usize {
        self.retries_left
    }

    pub fn check(
        &mut self,
        t: &Trace,
        verifier: &mut dyn RegionVerifier,
    ) -> Result<GateDecision, VerifierError> {
        for (i, look) in t.looks().enumerate() {
            if !verifier.verify(i + 1, look)? {
                let look_index = i + 1;
                return Ok(if self.retries_left == 0 {
                    GateDecision::Reject { look_index }
                } else {
                    self.retries_left -= 1;
                    GateDecision::RefineRequest { look_index }
                });
            }
        }
        Ok(GateDecision::Accept)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateOutcome {
    /// `Accept` or `Reject`.
    pub decision: GateDecision,
    pub trace: Trace,
    /// LOOK indices that were sent for refinement, in order.
    pub refinements: Vec<usize>,
}

/// Replaces the box of the `look_index`-th (1-based) LOOK. Returns `false`
/// when there is no such LOOK.
pub fn set_look_bbox(t: &mut Trace, look_index: usize, bbox: [f64; 4]) -> bool {
    let look = t
        .segments
        .iter_mut()
        .filter_map(|s| match s {
            Segment::Look(l) => Some(l),
            _ => None,
        })
        .nth(look_index.wrapping_sub(1));
    match look {
        Some(l) => {
            l.bbox = bbox;
            true
        }
        None => false,
    }
}

/// Runs the gate to a final decision, applying refinements between checks.
pub fn grounding_gate(
    mut t: Trace,
    verifier: &mut dyn RegionVerifier,
    refiner: &mut dyn Refiner,
    retries: usize,
) -> Result<GateOutcome, VerifierError> {
    let mut gate = GroundingGate::new(retries);
    let mut refinements = Vec::new();
    loop {
        match gate.check(&t, verifier)? {
            GateDecision::RefineRequest { look_index } => {
                let bbox = refiner.refine(&t, look_index)?;
                set_look_bbox(&mut t, look_index, bbox);
                refinements.push(look_index);
            }
            decision => {
                return Ok(GateOutcome {
                    decision,
                    trace: t,
                    refinements,
                })
            }
        }
    }
}

#[derive(Debug, Deserialize)]
struct RawDifficultyRecord {
    id: String,
    rollouts: u32,
    successes: u32,
}

/// Rollout outcome counts for one sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDifficultyRecord")]
pub struct DifficultyRecord {
    id: String,
    rollouts: u32,
    successes: u32,
}

impl TryFrom<RawDifficultyRecord> for DifficultyRecord {
    type Error = CurationError;
    fn try_from(r: RawDifficultyRecord) -> Result<Self, CurationError> {
        Self::new(r.id, r.rollouts, r.successes)
    }
}

impl DifficultyRecord {
    pub fn new(
        id: impl Into<String>,
        rollouts: u32,
        successes: u32,
    ) -> Result<Self, CurationError> {
        let id = id.into();
        if rollouts == 0 {
            return Err(CurationError::NoRollouts { id });
        }
        if successes > rollouts {
            return Err(CurationError::TooManySuccesses {
                id,
                rollouts,
                successes,
            });
        }
        Ok(Self {
            id,
            rollouts,
            successes,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn rollouts(&self) -> u32 {
        self.rollouts
    }

    pub fn successes(&self) -> u32 {
        self.successes
    }

    pub fn success_rate(&self) -> f64 {
        f64::from(self.successes) / f64::from(self.rollouts)
    }
}

/// Strict bounds on the success rate for keeping a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DifficultyBounds {
    pub difficulty_low: f64,
    pub difficulty_high: f64,
}

impl Default for DifficultyBounds {
    fn default() -> Self {
        Self {
            difficulty_low: 0.0,
            difficulty_high: 1.0,
        }
    }
}

/// Ids of records with `low < success_rate < high`, in input order.
pub fn difficulty_filter(
    records: &[DifficultyRecord],
    low: f64,
    high: f64,
) -> Result<Vec<String>, CurationError> {
    if !(0.0 <= low && low < high && high <= 1.0) {
        return Err(CurationError::InvalidBounds { low, high });
    }
    Ok(records
        .iter()
        .filter(|r| {
            let rate = r.success_rate();
            low < rate && rate < high
        })
        .map(|r| r.id.clone())
        .collect())
}
