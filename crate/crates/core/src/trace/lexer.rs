//! Tag recognition shared by the batch and streaming parsers.
//!
//! Both parsers see the same input one `<` at a time, so the only shared
//! pieces are the answers to "is this a tag?" and "is this LOOK header
//! complete and well formed?". Each answer is prefix-consistent: a prefix of
//! a longer input either yields the same answer or asks for more input.

use super::Tag;

pub(crate) const LOOK_PREFIX: &str = "<LOOK";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Token {
    Open(Tag),
    Close(Tag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TokenMatch {
    /// A complete tag token. For `Open(Look)` the length covers only the
    /// `<LOOK` prefix; the header parser consumes the rest.
    Complete(Token, usize),
    /// The input is a strict prefix of some tag.
    Incomplete,
    /// The leading `<` is literal text.
    NotATag,
}

const FIXED: [(&str, Token); 5] = [
    ("<THINK>", Token::Open(Tag::Think)),
    ("</THINK>", Token::Close(Tag::Think)),
    ("</LOOK>", Token::Close(Tag::Look)),
    ("<ANSWER>", Token::Open(Tag::Answer)),
    ("</ANSWER>", Token::Close(Tag::Answer)),
];

/// Classifies the input, which must start with `<`.
pub(crate) fn match_token(s: &str) -> TokenMatch {
    debug_assert!(s.starts_with('<'));
    let mut incomplete = false;
    for (lit, tok) in FIXED {
        if s.starts_with(lit) {
            return TokenMatch::Complete(tok, lit.len());
        }
        incomplete |= lit.starts_with(s);
    }
    if let Some(rest) = s.strip_prefix(LOOK_PREFIX) {
        return match rest.chars().next() {
            None => TokenMatch::Incomplete,
            Some(c) if c.is_whitespace() || c == '>' => {
                TokenMatch::Complete(Token::Open(Tag::Look), LOOK_PREFIX.len())
            }
            Some(_) => TokenMatch::NotATag,
        };
    }
    if incomplete || LOOK_PREFIX.starts_with(s) {
        TokenMatch::Incomplete
    } else {
        TokenMatch::NotATag
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum HeaderFault {
    /// Defect in the attribute syntax around the box list.
    Tag(String),
    /// Defect inside (or at the start of) the `bbox=[...]` list.
    Bbox(String),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Header {
    Complete {
        target: String,
        bbox: [f64; 4],
        len: usize,
    },
    Incomplete,
    Fault(HeaderFault),
}

enum Stop {
    More,
    Fault(HeaderFault),
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Result<char, Stop> {
        self.s[self.pos..].chars().next().ok_or(Stop::More)
    }

    fn bump(&mut self) -> Result<char, Stop> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Ok(c)
    }

    fn skip_ws(&mut self) -> Result<usize, Stop> {
        let mut n = 0;
        loop {
            let c = self.peek()?;
            if !c.is_whitespace() {
                return Ok(n);
            }
            self.pos += c.len_utf8();
            n += 1;
        }
    }

    fn lit(&mut self, lit: &str, fault: impl FnOnce() -> HeaderFault) -> Result<(), Stop> {
        let rest = &self.s[self.pos..];
        if rest.starts_with(lit) {
            self.pos += lit.len();
            Ok(())
        } else if lit.starts_with(rest) {
            Err(Stop::More)
        } else {
            Err(Stop::Fault(fault()))
        }
    }
}

fn tag_fault(msg: &str) -> impl FnOnce() -> HeaderFault + '_ {
    move || HeaderFault::Tag(msg.to_string())
}

fn bbox_fault(msg: impl Into<String>) -> Stop {
    Stop::Fault(HeaderFault::Bbox(msg.into()))
}

/// Decimal literal: optional sign, digits with an optional fraction, or a
/// bare fraction. No exponents, no `inf`/`nan`.
pub(crate) fn parse_decimal(tok: &str) -> Option<f64> {
    let body = tok.strip_prefix(['+', '-']).unwrap_or(tok);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    let ok = digits(int)
        && frac.is_none_or(digits)
        && (!int.is_empty() || frac.is_some_and(|f| !f.is_empty()));
    if ok {
        tok.parse().ok()
    } else {
        None
    }
}

/// Parses `<LOOK at="target" bbox=[x1, y1, x2, y2]>` at the start of `s`.
pub(crate) fn parse_look_header(s: &str) -> Header {
    debug_assert!(s.starts_with(LOOK_PREFIX));
    let mut c = Cursor {
        s,
        pos: LOOK_PREFIX.len(),
    };
    match look_header(&mut c) {
        Ok((target, bbox)) => Header::Complete {
            target,
            bbox,
            len: c.pos,
        },
        Err(Stop::More) => Header::Incomplete,
        Err(Stop::Fault(f)) => Header::Fault(f),
    }
}

fn look_header(c: &mut Cursor<'_>) -> Result<(String, [f64; 4]), Stop> {
    if c.skip_ws()? == 0 {
        return Err(Stop::Fault(HeaderFault::Tag(
            "expected attributes after `<LOOK`".into(),
        )));
    }
    c.lit("at", tag_fault("expected the `at` attribute"))?;
    c.skip_ws()?;
    c.lit("=", tag_fault("expected `=` after `at`"))?;
    c.skip_ws()?;
    c.lit("\"", tag_fault("expected a quoted target"))?;
    let mut target = String::new();
    loop {
        match c.bump()? {
            '"' => break,
            ch => target.push(ch),
        }
    }
    c.skip_ws()?;
    c.lit("bbox", tag_fault("expected the `bbox` attribute"))?;
    c.skip_ws()?;
    c.lit("=", tag_fault("expected `=` after `bbox`"))?;
    c.skip_ws()?;
    c.lit("[", || {
        HeaderFault::Bbox("expected `[` opening the box".into())
    })?;

    let mut coords = Vec::with_capacity(4);
    loop {
        c.skip_ws()?;
        let start = c.pos;
        while matches!(c.peek()?, '0'..='9' | '.' | '+' | '-') {
            c.bump()?;
        }
        let tok = &c.s[start..c.pos];
        if tok.is_empty() {
            let found = c.peek()?;
            return Err(bbox_fault(format!(
                "expected a coordinate, found `{found}`"
            )));
        }
        let v =
            parse_decimal(tok).ok_or_else(|| bbox_fault(format!("invalid coordinate `{tok}`")))?;
        if coords.len() == 4 {
            return Err(bbox_fault("more than 4 coordinates"));
        }
        coords.push(v);
        c.skip_ws()?;
        match c.bump()? {
            ',' => continue,
            ']' => break,
            other => return Err(bbox_fault(format!("unexpected `{other}` in box"))),
        }
    }
    if coords.len() != 4 {
        return Err(bbox_fault(format!(
            "expected 4 coordinates, found {}",
            coords.len()
        )));
    }
    c.skip_ws()?;
    c.lit(">", tag_fault("expected `>` closing the LOOK tag"))?;
    Ok((target, [coords[0], coords[1], coords[2], coords[3]]))
}
