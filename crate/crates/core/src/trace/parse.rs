use std::ops::Range;

use super::lexer::{match_token, parse_look_header, Header, HeaderFault, Token, TokenMatch};
use super::{Look, ParseError, Segment, Tag, Trace};

/// Batch parser settings.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Clamp every LOOK coordinate into `[0, 1]`. Off by default so that
    /// downstream scoring sees exactly what was emitted. Corner order is never
    /// changed.
    pub clip_coordinates: bool,
}

/// A segment with the byte range it occupies in the source, tags included.
#[derive(Debug, Clone, PartialEq)]
pub struct SpannedSegment {
    pub segment: Segment,
    pub span: Range<usize>,
}

pub fn parse_trace(text: &str) -> Result<Trace, ParseError> {
    parse_trace_with(text, ParseOptions::default())
}

pub fn parse_trace_with(text: &str, opts: ParseOptions) -> Result<Trace, ParseError> {
    let mut segments: Vec<Segment> = parse_trace_spanned(text)?
        .into_iter()
        .map(|s| s.segment)
        .collect();
    if opts.clip_coordinates {
        for seg in &mut segments {
            if let Segment::Look(l) = seg {
                for c in &mut l.bbox {
                    *c = c.clamp(0.0, 1.0);
                }
            }
        }
    }
    Ok(Trace::new(segments))
}

/// Finds the next complete tag at or after `from`. A `<` that is only the
/// prefix of a tag when the text ends is literal text.
fn next_token(text: &str, from: usize) -> Option<(usize, Token, usize)> {
    let mut at = from;
    while let Some(rel) = text[at..].find('<') {
        let i = at + rel;
        if let TokenMatch::Complete(tok, len) = match_token(&text[i..]) {
            return Some((i, tok, len));
        }
        at = i + 1;
    }
    None
}

fn header_error(fault: HeaderFault, offset: usize) -> ParseError {
    match fault {
        HeaderFault::Tag(reason) => ParseError::MalformedLookTag { offset, reason },
        HeaderFault::Bbox(reason) => ParseError::MalformedBbox { offset, reason },
    }
}

/// Parses a full trace, keeping each segment's source span.
pub fn parse_trace_spanned(text: &str) -> Result<Vec<SpannedSegment>, ParseError> {
    let mut out = Vec::new();
    let mut pos = 0;
    let mut answered = false;

    while let Some((start, tok, tok_len)) = next_token(text, pos) {
        if start > pos {
            out.push(SpannedSegment {
                segment: Segment::Plain(text[pos..start].to_string()),
                span: pos..start,
            });
        }
        let tag = match tok {
            Token::Close(tag) => return Err(ParseError::UnexpectedClose { tag, offset: start }),
            Token::Open(tag) => tag,
        };
        if answered {
            return Err(ParseError::ContentAfterAnswer { tag, offset: start });
        }

        let (body_start, look_header) = if tag == Tag::Look {
            match parse_look_header(&text[start..]) {
                Header::Complete { target, bbox, len } => (start + len, Some((target, bbox))),
                Header::Incomplete => return Err(ParseError::UnclosedTag { tag, offset: start }),
                Header::Fault(f) => return Err(header_error(f, start)),
            }
        } else {
            (start + tok_len, None)
        };

        let (close_at, close_len) = match next_token(text, body_start) {
            None => return Err(ParseError::UnclosedTag { tag, offset: start }),
            Some((j, Token::Close(t), len)) if t == tag => (j, len),
            Some((j, Token::Close(t), _)) => {
                return Err(ParseError::UnexpectedClose { tag: t, offset: j })
            }
            Some((j, Token::Open(Tag::Look), _)) if tag == Tag::Look => {
                return Err(ParseError::NestedLook { offset: j })
            }
            Some((j, Token::Open(t), _)) => {
                return Err(ParseError::NestedTag {
                    tag: t,
                    inside: tag,
                    offset: j,
                })
            }
        };

        let body = text[body_start..close_at].to_string();
        let segment = match (tag, look_header) {
            (Tag::Think, _) => Segment::Think(body),
            (Tag::Answer, _) => {
                answered = true;
                Segment::Answer(body)
            }
            (Tag::Look, Some((target, bbox))) => Segment::Look(Look {
                target,
                bbox,
                observation: body,
            }),
            (Tag::Look, None) => unreachable!("LOOK header parsed above"),
        };
        pos = close_at + close_len;
        out.push(SpannedSegment {
            segment,
            span: start..pos,
        });
    }

    if pos < text.len() {
        out.push(SpannedSegment {
            segment: Segment::Plain(text[pos..].to_string()),
            span: pos..text.len(),
        });
    }
    Ok(out)
}
