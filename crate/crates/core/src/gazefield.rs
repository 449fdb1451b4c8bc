//! Plateau suppression bias over visual tokens.
//!
//! A fixation box leaves every token on the closed box untouched and pushes
//! tokens outside it down by a Gaussian-shaped penalty in their distance to
//! the box's nearest edge:
//!
//! ```text
//! β(p, b) = −α_s · D²(p, b) / (2σ²)
//! ```
//!
//! Several boxes combine by pointwise maximum, so a token stays unsuppressed
//! as long as it lies in any box fixated so far.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{edge_distance_sq, NormalizedBBox, Point, TokenGrid};
use crate::numfmt::sig6;

pub const DEFAULT_ALPHA_S: f64 = 4.0;
pub const DEFAULT_SIGMA: f64 = 0.25;

/// Threshold on the multiplicative attention factor `exp(β)` below which a
/// token counts as suppressed in sweep summaries.
pub const SUPPRESSED_FACTOR: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("suppression strength must be finite and non-negative, got {0}")]
    InvalidAlpha(f64),
    #[error("spatial falloff sigma must be finite and positive, got {0}")]
    InvalidSigma(f64),
    #[error("accumulated bias needs at least one box")]
    EmptyBoxSet,
    #[error("sweep needs at least one alpha value")]
    EmptySweep,
}

/// Suppression strength `alpha_s` and spatial falloff `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGazeParams")]
pub struct GazeParams {
    alpha_s: f64,
    sigma: f64,
}

#[derive(Deserialize)]
struct RawGazeParams {
    #[serde(default = "default_alpha")]
    alpha_s: f64,
    #[serde(default = "default_sigma")]
    sigma: f64,
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA_S
}

fn default_sigma() -> f64 {
    DEFAULT_SIGMA
}

impl TryFrom<RawGazeParams> for GazeParams {
    type Error = FieldError;

    fn try_from(raw: RawGazeParams) -> Result<Self, Self::Error> {
        GazeParams::new(raw.alpha_s, raw.sigma)
    }
}

impl GazeParams {
    pub fn new(alpha_s: f64, sigma: f64) -> Result<Self, FieldError> {
        if !(alpha_s.is_finite() && alpha_s >= 0.0) {
            return Err(FieldError::InvalidAlpha(alpha_s));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(FieldError::InvalidSigma(sigma));
        }
        Ok(Self { alpha_s, sigma })
    }

    pub fn alpha_s(&self) -> f64 {
        self.alpha_s
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn with_alpha(&self, alpha_s: f64) -> Result<Self, FieldError> {
        Self::new(alpha_s, self.sigma)
    }

    /// Bias for a token at squared edge distance `d2`.
    pub fn bias_at_distance_sq(&self, d2: f64) -> f64 {
        -(self.alpha_s * d2) / (2.0 * self.sigma * self.sigma)
    }
}

impl Default for GazeParams {
    fn default() -> Self {
        Self {
            alpha_s: DEFAULT_ALPHA_S,
            sigma: DEFAULT_SIGMA,
        }
    }
}

/// Bias contributed by a single fixation box.
pub fn bias_single(p: Point, b: &NormalizedBBox, params: &GazeParams) -> f64 {
    params.bias_at_distance_sq(edge_distance_sq(p, b))
}

/// Bias under temporal accumulation: the maximum over all boxes.
pub fn bias_accumulated(
    p: Point,
    boxes: &[NormalizedBBox],
    params: &GazeParams,
) -> Result<f64, FieldError> {
    boxes
        .iter()
        .map(|b| bias_single(p, b, params))
        .reduce(f64::max)
        .ok_or(FieldError::EmptyBoxSet)
}

/// Per-token bias values over a [`TokenGrid`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GazeBiasField {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    params: GazeParams,
    boxes: Vec<NormalizedBBox>,
}

impl GazeBiasField {
    /// The field with no active gaze.
    pub fn zeros(grid: &TokenGrid, params: GazeParams) -> Self {
        Self {
            rows: grid.rows(),
            cols: grid.cols(),
            values: vec![0.0; grid.len()],
            params,
            boxes: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        (row < self.rows && col < self.cols).then(|| self.values[row * self.cols + col])
    }

    pub fn params(&self) -> &GazeParams {
        &self.params
    }

    pub fn boxes(&self) -> &[NormalizedBBox] {
        &self.boxes
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// Row-major CSV, one line per grid row, values at six significant
    /// digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.values.chunks(self.cols) {
            let line: Vec<String> = row.iter().map(|v| sig6(*v)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Grayscale intensity for one bias value:
    /// `round(255 · exp(β / alpha_s))` clamped to `[0, 255]`. With
    /// `alpha_s = 0` every value is 0 and maps to 255.
    pub fn pixel_value(&self, beta: f64) -> u8 {
        let alpha = self.params.alpha_s;
        if alpha == 0.0 {
            return 255;
        }
        (255.0 * (beta / alpha).exp()).round().clamp(0.0, 255.0) as u8
    }

    /// Binary 8-bit PGM (`P5`). The header comment records the mapping.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut header = String::from("P5\n");
        let _ = writeln!(
            header,
            "# gaze bias field: pixel = round(255*exp(beta/alpha_s)) clamped to [0,255]; alpha_s={} sigma={}",
            sig6(self.params.alpha_s),
            sig6(self.params.sigma)
        );
        let _ = write!(header, "{} {}\n255\n", self.cols, self.rows);
        let mut out = header.into_bytes();
        out.extend(self.values.iter().map(|v| self.pixel_value(*v)));
        out
    }
}

/// Evaluates the accumulated bias at every token of `grid`. An empty box set
/// gives the all-zero field.
pub fn field_for_grid(
    grid: &TokenGrid,
    boxes: &[NormalizedBBox],
    params: &GazeParams,
) -> GazeBiasField {
    if boxes.is_empty() {
        return GazeBiasField::zeros(grid, *params);
    }
    let values = grid
        .positions()
        .iter()
        .map(|p| {
            boxes
                .iter()
                .map(|b| bias_single(*p, b, params))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    GazeBiasField {
        rows: grid.rows(),
        cols: grid.cols(),
        values,
        params: *params,
        boxes: boxes.to_vec(),
    }
}

/// Summary of one field in a suppression-strength sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha_s: f64,
    /// Most negative bias among tokens outside every box (0 if none).
    pub min_bias_outside: f64,
    /// Mean bias over tokens outside every box (0 if none).
    pub mean_bias_outside: f64,
    /// Fraction of all tokens whose attention factor `exp(β)` is below
    /// [`SUPPRESSED_FACTOR`].
    pub suppressed_fraction: f64,
}

/// Builds the field for each `alpha_s` in turn with a fixed box set and
/// `sigma`, and summarizes it.
pub fn sweep(
    grid: &TokenGrid,
    boxes: &[NormalizedBBox],
    sigma: f64,
    alphas: &[f64],
) -> Result<Vec<SweepRow>, FieldError> {
    if alphas.is_empty() {
        return Err(FieldError::EmptySweep);
    }
    let outside: Vec<bool> = grid
        .positions()
        .iter()
        .map(|p| !boxes.iter().any(|b| b.contains(*p)))
        .collect();
    alphas
        .iter()
        .map(|&alpha| {
            let params = GazeParams::new(alpha, sigma)?;
            let field = field_for_grid(grid, boxes, &params);
            let outside_vals: Vec<f64> = field
                .values()
                .iter()
                .zip(&outside)
                .filter_map(|(v, out)| out.then_some(*v))
                .collect();
            let (min, mean) = if outside_vals.is_empty() {
                (0.0, 0.0)
            } else {
                let min = outside_vals.iter().copied().fold(f64::INFINITY, f64::min);
                let mean = outside_vals.iter().sum::<f64>() / outside_vals.len() as f64;
                (min, mean)
            };
            let suppressed = field
                .values()
                .iter()
                .filter(|v| v.exp() < SUPPRESSED_FACTOR)
                .count();
            Ok(SweepRow {
                alpha_s: alpha,
                min_bias_outside: min,
                mean_bias_outside: mean,
                suppressed_fraction: suppressed as f64 / field.len() as f64,
            })
        })
        .collect()
}
