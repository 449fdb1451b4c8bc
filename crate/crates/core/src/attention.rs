//! Reference attention kernel with gaze bias, and the gaze lifecycle.
//!
//! Scores are `q·k/√d`. For a query that comes from text, each visual key `i`
//! additionally receives the bias `β_i`; queries from visual tokens and all
//! text keys are left alone. After the row softmax this scales the weight of
//! visual key `i` by `exp(β_i)` before renormalization.
//!
//! [`GazeState`] tracks whether a LOOK block is open and which boxes have
//! been fixated so far. The bias is live only while a block is open, and it
//! covers every box seen in the trace up to that point.

use thiserror::Error;

use crate::gazefield::{field_for_grid, GazeBiasField, GazeParams};
use crate::geometry::{NormalizedBBox, TokenGrid};
use crate::trace::TraceEvent;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttentionError {
    #[error("head dimension must be at least 1")]
    ZeroHeadDim,
    #[error("vector has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("visual key {index} has no entry in a field of {field_len} tokens")]
    MisalignedField { index: usize, field_len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryOrigin {
    Text,
    Vision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyKind {
    /// A visual token, by its index in the token grid.
    Visual(usize),
    Text,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub origin: QueryOrigin,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Key {
    pub kind: KeyKind,
    pub vector: Vec<f64>,
}

/// A set of queries and keys sharing one head dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionInput {
    queries: Vec<Query>,
    keys: Vec<Key>,
    head_dim: usize,
}

impl AttentionInput {
    pub fn new(
        queries: Vec<Query>,
        keys: Vec<Key>,
        head_dim: usize,
    ) -> Result<Self, AttentionError> {
        if head_dim == 0 {
            return Err(AttentionError::ZeroHeadDim);
        }
        let dims = queries
            .iter()
            .map(|q| q.vector.len())
            .chain(keys.iter().map(|k| k.vector.len()));
        for found in dims {
            if found != head_dim {
                return Err(AttentionError::DimensionMismatch {
                    expected: head_dim,
                    found,
                });
            }
        }
        Ok(Self {
            queries,
            keys,
            head_dim,
        })
    }

    pub fn queries(&self) -> &[Query] {
        &self.queries
    }

    pub fn keys(&self) -> &[Key] {
        &self.keys
    }

    pub fn head_dim(&self) -> usize {
        self.head_dim
    }
}

/// Scaled dot product `q·k/√d`.
pub fn raw_score(q: &[f64], k: &[f64], head_dim: usize) -> Result<f64, AttentionError> {
    if head_dim == 0 {
        return Err(AttentionError::ZeroHeadDim);
    }
    for v in [q, k] {
        if v.len() != head_dim {
            return Err(AttentionError::DimensionMismatch {
                expected: head_dim,
                found: v.len(),
            });
        }
    }
    let dot: f64 = q.iter().zip(k).map(|(a, b)| a * b).sum();
    Ok(dot / (head_dim as f64).sqrt())
}

/// Unbiased score matrix, one row per query.
pub fn raw_scores(input: &AttentionInput) -> Vec<Vec<f64>> {
    let scale = (input.head_dim as f64).sqrt();
    input
        .queries
        .iter()
        .map(|q| {
            input
                .keys
                .iter()
                .map(|k| {
                    q.vector
                        .iter()
                        .zip(&k.vector)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                        / scale
                })
                .collect()
        })
        .collect()
}

/// Scores with the gaze bias added to text-query / visual-key entries.
pub fn modulated_scores(
    input: &AttentionInput,
    field: &GazeBiasField,
) -> Result<Vec<Vec<f64>>, AttentionError> {
    let bias = key_bias(input, field)?;
    let mut scores = raw_scores(input);
    for (q, row) in input.queries.iter().zip(&mut scores) {
        if q.origin == QueryOrigin::Text {
            for (s, b) in row.iter_mut().zip(&bias) {
                *s += b;
            }
        }
    }
    Ok(scores)
}

/// Bias per key: the field value for visual keys, zero for text keys.
pub fn key_bias(input: &AttentionInput, field: &GazeBiasField) -> Result<Vec<f64>, AttentionError> {
    let values = field.values();
    input
        .keys
        .iter()
        .map(|k| match k.kind {
            KeyKind::Text => Ok(0.0),
            KeyKind::Visual(index) => {
                values
                    .get(index)
                    .copied()
                    .ok_or(AttentionError::MisalignedField {
                        index,
                        field_len: values.len(),
                    })
            }
        })
        .collect()
}

/// Numerically stable softmax of one row.
pub fn softmax(row: &[f64]) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Row-wise softmax of a score matrix.
pub fn attention_weights(scores: &[Vec<f64>]) -> Vec<Vec<f64>> {
    scores.iter().map(|r| softmax(r)).collect()
}

/// Jacobian of one softmax row with respect to an additive bias vector, where
/// `biased[k]` says whether key `k` receives the bias. Entry `[j][k]` is
/// `∂w_j/∂β_k = w_j(δ_jk − w_k)` for biased keys and zero otherwise.
pub fn softmax_bias_jacobian(weights: &[f64], biased: &[bool]) -> Vec<Vec<f64>> {
    weights
        .iter()
        .enumerate()
        .map(|(j, wj)| {
            weights
                .iter()
                .zip(biased)
                .enumerate()
                .map(|(k, (wk, on))| {
                    if !on {
                        0.0
                    } else {
                        let delta = if j == k { 1.0 } else { 0.0 };
                        wj * (delta - wk)
                    }
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LifecycleError {
    #[error("LOOK opened while another LOOK is still open")]
    NestedLook,
    #[error("</LOOK> without a matching <LOOK>")]
    UnmatchedClose,
}

/// Per-stream gaze state.
#[derive(Debug, Clone, PartialEq)]
pub struct GazeState {
    active: bool,
    boxes: Vec<NormalizedBBox>,
    fixations: usize,
    params: GazeParams,
}

impl GazeState {
    pub fn new(params: GazeParams) -> Self {
        Self {
            active: false,
            boxes: Vec::new(),
            fixations: 0,
            params,
        }
    }

    pub fn is_active(&self) -> bool {
        self.active
    }

    /// Every usable box fixated so far, in order.
    pub fn boxes(&self) -> &[NormalizedBBox] {
        &self.boxes
    }

    /// Number of LOOK blocks opened, including ones whose box was unusable.
    pub fn fixations(&self) -> usize {
        self.fixations
    }

    pub fn params(&self) -> &GazeParams {
        &self.params
    }

    /// Advances the state by one trace event.
    ///
    /// A LOOK whose box is malformed or leaves the unit square still opens a
    /// fixation but contributes no region, so the field it sees is the one
    /// built from earlier boxes.
    pub fn step(&mut self, event: &TraceEvent) -> Result<(), LifecycleError> {
        match event {
            TraceEvent::LookOpen { bbox, .. } => {
                if self.active {
                    return Err(LifecycleError::NestedLook);
                }
                self.active = true;
                self.fixations += 1;
                if let Ok(b) = NormalizedBBox::try_from(*bbox) {
                    self.boxes.push(b);
                }
            }
            TraceEvent::LookClose => {
                if !self.active {
                    return Err(LifecycleError::UnmatchedClose);
                }
                self.active = false;
            }
            _ => {}
        }
        Ok(())
    }

    /// The bias currently in force over `grid`: zero when no LOOK is open.
    pub fn effective_field(&self, grid: &TokenGrid) -> GazeBiasField {
        if self.active {
            field_for_grid(grid, &self.boxes, &self.params)
        } else {
            GazeBiasField::zeros(grid, self.params)
        }
    }
}

/// Value-style step: consumes a state and returns the next one.
pub fn gaze_step(mut state: GazeState, event: &TraceEvent) -> Result<GazeState, LifecycleError> {
    state.step(event)?;
    Ok(state)
}

pub fn effective_field(state: &GazeState, grid: &TokenGrid) -> GazeBiasField {
    state.effective_field(grid)
}

/// Replays `events` from a fresh state, returning the state after each event.
pub fn replay<'a>(
    events: impl IntoIterator<Item = &'a TraceEvent>,
    params: GazeParams,
) -> Result<Vec<GazeState>, LifecycleError> {
    let mut state = GazeState::new(params);
    let mut out = Vec::new();
    for ev in events {
        state.step(ev)?;
        out.push(state.clone());
    }
    Ok(out)
}
