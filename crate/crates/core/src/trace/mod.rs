//! The gaze-trace grammar.
//!
//! ```text
//! trace   := (plain | think | look)* answer? plain*
//! think   := "<THINK>" text "</THINK>"
//! look    := "<LOOK at=\"" target "\" bbox=[" num "," num "," num "," num "]>" text "</LOOK>"
//! answer  := "<ANSWER>" text "</ANSWER>"
//! ```
//!
//! Whitespace is tolerated around `=` and inside the box list, and
//! coordinates may be integers or decimals. Block bodies run to the first
//! closing tag; there is no escaping, so a literal `</LOOK>` always ends an
//! observation. A `<` that does not start one of the six tags is ordinary
//! text.
//!
//! [`parse_trace`] reads a complete text. [`StreamParser`] reads the same
//! grammar chunk by chunk and emits [`TraceEvent`]s as soon as they are
//! certain.

mod lexer;
mod parse;
mod stream;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{iou, is_geometrically_valid, NormalizedBBox};

pub use parse::{parse_trace, parse_trace_spanned, parse_trace_with, ParseOptions, SpannedSegment};
pub use stream::{stream_events, StreamParser};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tag {
    Think,
    Look,
    Answer,
}

impl Tag {
    pub fn name(self) -> &'static str {
        match self {
            Tag::Think => "THINK",
            Tag::Look => "LOOK",
            Tag::Answer => "ANSWER",
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Grammar violations. Every variant carries the byte offset of the `<` that
/// starts the offending tag.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unclosed <{tag}> opened at byte {offset}")]
    UnclosedTag { tag: Tag, offset: usize },
    #[error("malformed bbox in LOOK tag at byte {offset}: {reason}")]
    MalformedBbox { offset: usize, reason: String },
    #[error("malformed LOOK tag at byte {offset}: {reason}")]
    MalformedLookTag { offset: usize, reason: String },
    #[error("nested <LOOK> at byte {offset}")]
    NestedLook { offset: usize },
    #[error("<{tag}> at byte {offset} inside an open <{inside}> block")]
    NestedTag {
        tag: Tag,
        inside: Tag,
        offset: usize,
    },
    #[error("unexpected </{tag}> at byte {offset}")]
    UnexpectedClose { tag: Tag, offset: usize },
    #[error("<{tag}> at byte {offset} after the ANSWER block")]
    ContentAfterAnswer { tag: Tag, offset: usize },
    #[error("invalid UTF-8 at byte {offset}")]
    InvalidUtf8 { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::UnclosedTag { offset, .. }
            | ParseError::MalformedBbox { offset, .. }
            | ParseError::MalformedLookTag { offset, .. }
            | ParseError::NestedLook { offset }
            | ParseError::NestedTag { offset, .. }
            | ParseError::UnexpectedClose { offset, .. }
            | ParseError::ContentAfterAnswer { offset, .. }
            | ParseError::InvalidUtf8 { offset } => *offset,
        }
    }
}

/// A fixation: what the model looks for, where, and what it reports seeing.
///
/// `bbox` holds the coordinates exactly as emitted. Whether they form a
/// usable box is decided downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Look {
    pub target: String,
    pub bbox: [f64; 4],
    pub observation: String,
}

impl Look {
    /// The emitted box, if it is well formed and inside the unit square.
    pub fn normalized_bbox(&self) -> Option<NormalizedBBox> {
        NormalizedBBox::try_from(self.bbox).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Segment {
    /// Free text outside any tag.
    Plain(String),
    Think(String),
    Look(Look),
    Answer(String),
}

impl Segment {
    pub fn tag(&self) -> Option<Tag> {
        match self {
            Segment::Plain(_) => None,
            Segment::Think(_) => Some(Tag::Think),
            Segment::Look(_) => Some(Tag::Look),
            Segment::Answer(_) => Some(Tag::Answer),
        }
    }

    /// Text between the tags (the observation for a LOOK).
    pub fn body(&self) -> &str {
        match self {
            Segment::Plain(s) | Segment::Think(s) | Segment::Answer(s) => s,
            Segment::Look(l) => &l.observation,
        }
    }
}

/// A parsed trace.
///
/// Traces produced by the parser satisfy: at most one ANSWER segment, with
/// only PLAIN text after it; no empty or adjacent PLAIN segments; bodies and
/// targets free of tag text. [`serialize_trace`] assumes the same.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub segments: Vec<Segment>,
}

impl Trace {
    pub fn new(segments: Vec<Segment>) -> Self {
        Self { segments }
    }

    pub fn answer(&self) -> Option<&str> {
        self.segments.iter().find_map(|s| match s {
            Segment::Answer(a) => Some(a.as_str()),
            _ => None,
        })
    }

    pub fn looks(&self) -> impl Iterator<Item = &Look> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Look(l) => Some(l),
            _ => None,
        })
    }

    pub fn count(&self, tag: Tag) -> usize {
        self.segments
            .iter()
            .filter(|s| s.tag() == Some(tag))
            .count()
    }

    /// The event sequence a decoder would observe while generating this
    /// trace, with each body delivered as a single text event.
    pub fn events(&self) -> Vec<TraceEvent> {
        let mut out = Vec::new();
        let text = |out: &mut Vec<TraceEvent>, s: &str| {
            if !s.is_empty() {
                out.push(TraceEvent::Text(s.to_string()));
            }
        };
        for seg in &self.segments {
            match seg {
                Segment::Plain(s) => text(&mut out, s),
                Segment::Think(s) => {
                    out.push(TraceEvent::ThinkOpen);
                    text(&mut out, s);
                    out.push(TraceEvent::ThinkClose);
                }
                Segment::Look(l) => {
                    out.push(TraceEvent::LookOpen {
                        target: l.target.clone(),
                        bbox: l.bbox,
                    });
                    text(&mut out, &l.observation);
                    out.push(TraceEvent::LookClose);
                }
                Segment::Answer(s) => {
                    out.push(TraceEvent::AnswerOpen);
                    text(&mut out, s);
                    out.push(TraceEvent::AnswerClose);
                }
            }
        }
        out
    }
}

/// One step of an incrementally decoded trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TraceEvent {
    ThinkOpen,
    ThinkClose,
    LookOpen {
        target: String,
        bbox: [f64; 4],
    },
    LookClose,
    AnswerOpen,
    AnswerClose,
    /// A run of text, either inside the current block or between blocks.
    Text(String),
}

/// Merges adjacent text events and drops empty ones. A streaming parser may
/// split one body into several deltas; after coalescing, its output is
/// directly comparable with [`Trace::events`].
pub fn coalesce_text(events: impl IntoIterator<Item = TraceEvent>) -> Vec<TraceEvent> {
    let mut out: Vec<TraceEvent> = Vec::new();
    for ev in events {
        match ev {
            TraceEvent::Text(t) if t.is_empty() => {}
            TraceEvent::Text(t) => match out.last_mut() {
                Some(TraceEvent::Text(prev)) => prev.push_str(&t),
                _ => out.push(TraceEvent::Text(t)),
            },
            other => out.push(other),
        }
    }
    out
}

/// Canonical text for a trace. Coordinates are written with four decimals.
pub fn serialize_trace(t: &Trace) -> String {
    let mut out = String::new();
    for seg in &t.segments {
        match seg {
            Segment::Plain(s) => out.push_str(s),
            Segment::Think(s) => {
                out.push_str("<THINK>");
                out.push_str(s);
                out.push_str("</THINK>");
            }
            Segment::Look(l) => {
                let [x1, y1, x2, y2] = l.bbox;
                out.push_str(&format!(
                    "<LOOK at=\"{}\" bbox=[{x1:.4}, {y1:.4}, {x2:.4}, {y2:.4}]>",
                    l.target
                ));
                out.push_str(&l.observation);
                out.push_str("</LOOK>");
            }
            Segment::Answer(s) => {
                out.push_str("<ANSWER>");
                out.push_str(s);
                out.push_str("</ANSWER>");
            }
        }
    }
    out
}

/// Per-trace counts used by the reward engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStats {
    pub look_count: usize,
    pub valid_box_count: usize,
    pub word_count: usize,
    pub has_think: bool,
    pub has_answer: bool,
    pub mean_pairwise_iou: f64,
}

/// Counts over a trace.
///
/// `word_count` splits every segment body on whitespace; tag markup and LOOK
/// targets are not words, and tags separate words. `mean_pairwise_iou` is
/// the mean over ordered pairs of distinct LOOKs, where a pair involving a
/// box that is malformed or leaves the unit square contributes zero. It is 0
/// with fewer than two LOOKs.
pub fn trace_stats(t: &Trace) -> TraceStats {
    let looks: Vec<&Look> = t.looks().collect();
    let n = looks.len();
    let valid = looks
        .iter()
        .filter(|l| is_geometrically_valid(l.bbox))
        .count();
    let words = t
        .segments
        .iter()
        .map(|s| s.body().split_whitespace().count())
        .sum();

    let mean_pairwise_iou = if n < 2 {
        0.0
    } else {
        let boxes: Vec<Option<NormalizedBBox>> =
            looks.iter().map(|l| l.normalized_bbox()).collect();
        let mut total = 0.0;
        for (i, a) in boxes.iter().enumerate() {
            for (j, b) in boxes.iter().enumerate() {
                if i == j {
                    continue;
                }
                if let (Some(a), Some(b)) = (a, b) {
                    total += iou(a, b);
                }
            }
        }
        total / (n * (n - 1)) as f64
    };

    TraceStats {
        look_count: n,
        valid_box_count: valid,
        word_count: words,
        has_think: t.count(Tag::Think) > 0,
        has_answer: t.answer().is_some(),
        mean_pairwise_iou,
    }
}
