//! Gaze-steered attention toolkit.
//!
//! Modules, bottom up:
//!
//! - [`geometry`]: normalized boxes, token grids, edge distance, IoU.
//! - [`gazefield`]: the plateau suppression bias and its accumulation over
//!   several fixations.
//! - [`attention`]: a reference attention kernel with the bias applied to
//!   text queries, and the gaze lifecycle that switches it on and off.
//! - [`trace`]: the THINK / LOOK / ANSWER trace grammar, batch and streaming.
//! - [`reward`]: the composite reward, group-relative advantages, loss and
//!   KL schedule.
//! - [`curation`]: candidate scoring, grounding gate and difficulty filter.
//! - [`config`]: flat TOML configuration.

pub mod attention;
pub mod config;
pub mod curation;
pub mod gazefield;
pub mod geometry;
pub mod numfmt;
pub mod reward;
pub mod trace;

pub use gazefield::{GazeBiasField, GazeParams};
pub use geometry::{NormalizedBBox, Point, TokenGrid};
pub use reward::{RewardBreakdown, RewardConfig};
pub use trace::{parse_trace, serialize_trace, Segment, Trace, TraceEvent};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/bias-field.md")]
    mod bias_field {}
    #[doc = include_str!("../../../book/src/attention.md")]
    mod attention {}
    #[doc = include_str!("../../../book/src/traces.md")]
    mod traces {}
    #[doc = include_str!("../../../book/src/reward.md")]
    mod reward {}
    #[doc = include_str!("../../../book/src/curation.md")]
    mod curation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
