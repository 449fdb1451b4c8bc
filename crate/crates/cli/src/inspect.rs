use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read};
use std::path::Path;

use gazekit::attention::GazeState;
use gazekit::config::Config;
use gazekit::numfmt::sig6;
use gazekit::trace::{
    coalesce_text, parse_trace_spanned, trace_stats, ParseError, SpannedSegment, StreamParser,
    Trace,
};
use gazekit::{Segment, TraceEvent};

use crate::{io_failure, Failure};

/// Reads a trace file in one piece, or stdin one byte at a time through the
/// streaming parser, and renders the dump.
pub fn run(path: Option<&Path>, cfg: &Config) -> Result<String, Failure> {
    let (name, bytes) = match path {
        Some(p) => (
            p.display().to_string(),
            fs::read(p).map_err(|e| io_failure("read", p, e))?,
        ),
        None => {
            let mut buf = Vec::new();
            io::stdin()
                .read_to_end(&mut buf)
                .map_err(|e| Failure::Io(format!("cannot read stdin: {e}")))?;
            ("<stdin>".to_string(), buf)
        }
    };
    let diag = |e: ParseError| Failure::Invalid(diagnostic(&name, &bytes, &e));

    let (text, events) = match path {
        Some(_) => {
            let text = std::str::from_utf8(&bytes).map_err(|e| {
                diag(ParseError::InvalidUtf8 {
                    offset: e.valid_up_to(),
                })
            })?;
            let segments = parse_trace_spanned(text).map_err(diag)?;
            let events = Trace::new(segments.into_iter().map(|s| s.segment).collect()).events();
            (text, events)
        }
        None => {
            let mut parser = StreamParser::new();
            let mut events = Vec::new();
            for b in &bytes {
                events.extend(parser.push_bytes(std::slice::from_ref(b)).map_err(diag)?);
            }
            events.extend(parser.finish().map_err(diag)?);
            let text = std::str::from_utf8(&bytes).expect("stream parser validated UTF-8");
            (text, coalesce_text(events))
        }
    };
    let segments = parse_trace_spanned(text).map_err(diag)?;
    render(&segments, &events, cfg)
}

fn bbox_text(b: &[f64; 4]) -> String {
    format!("[{:.4}, {:.4}, {:.4}, {:.4}]", b[0], b[1], b[2], b[3])
}

fn render(
    segments: &[SpannedSegment],
    events: &[TraceEvent],
    cfg: &Config,
) -> Result<String, Failure> {
    let mut out = String::new();
    let _ = writeln!(out, "segments: {}", segments.len());
    for s in segments {
        let span = format!("{}..{}", s.span.start, s.span.end);
        let _ = match &s.segment {
            Segment::Plain(t) => writeln!(out, "  {span:<12} PLAIN  {t:?}"),
            Segment::Think(t) => writeln!(out, "  {span:<12} THINK  {t:?}"),
            Segment::Look(l) => writeln!(
                out,
                "  {span:<12} LOOK   at={:?} bbox={} {:?}",
                l.target,
                bbox_text(&l.bbox),
                l.observation
            ),
            Segment::Answer(t) => writeln!(out, "  {span:<12} ANSWER {t:?}"),
        };
    }

    let trace = Trace::new(segments.iter().map(|s| s.segment.clone()).collect());
    let st = trace_stats(&trace);
    let _ = writeln!(out, "stats:");
    let _ = writeln!(out, "  look_count {}", st.look_count);
    let _ = writeln!(out, "  valid_box_count {}", st.valid_box_count);
    let _ = writeln!(out, "  word_count {}", st.word_count);
    let _ = writeln!(out, "  has_think {}", st.has_think);
    let _ = writeln!(out, "  has_answer {}", st.has_answer);
    let _ = writeln!(out, "  mean_pairwise_iou {}", sig6(st.mean_pairwise_iou));
    if let Some(a) = trace.answer() {
        let _ = writeln!(out, "answer: {:?}", a);
    }

    let _ = writeln!(out, "events: {}", events.len());
    let mut state = GazeState::new(cfg.gaze);
    for ev in events {
        state
            .step(ev)
            .map_err(|e| Failure::Invalid(e.to_string()))?;
        let label = match ev {
            TraceEvent::ThinkOpen => "think_open".to_string(),
            TraceEvent::ThinkClose => "think_close".to_string(),
            TraceEvent::LookOpen { target, bbox } => {
                format!("look_open at={target:?} bbox={}", bbox_text(bbox))
            }
            TraceEvent::LookClose => "look_close".to_string(),
            TraceEvent::AnswerOpen => "answer_open".to_string(),
            TraceEvent::AnswerClose => "answer_close".to_string(),
            TraceEvent::Text(t) => format!("text {t:?}"),
        };
        let _ = writeln!(
            out,
            "  active={:<5} boxes={} {label}",
            state.is_active(),
            state.boxes().len()
        );
    }
    Ok(out)
}

/// `error: ...` followed by the offending line with a caret under the byte
/// offset.
fn diagnostic(name: &str, bytes: &[u8], e: &ParseError) -> String {
    let offset = e.offset().min(bytes.len());
    let text = String::from_utf8_lossy(&bytes[..offset]);
    let line_no = text.matches('\n').count() + 1;
    let line_start = text.rfind('\n').map_or(0, |i| i + 1);
    let col = text[line_start..].chars().count() + 1;

    let rest = &bytes[offset..];
    let line_end = offset + rest.iter().position(|&b| b == b'\n').unwrap_or(rest.len());
    let full = String::from_utf8_lossy(&bytes[..line_end]);
    let line_text = &full[line_start.min(full.len())..];

    let gutter = " ".repeat(line_no.to_string().len());
    format!(
        "{e}\n{gutter}--> {name}:{line_no}:{col} (byte {})\n{gutter} |\n{line_no} | {line_text}\n{gutter} | {}^",
        e.offset(),
        " ".repeat(col - 1)
    )
}
