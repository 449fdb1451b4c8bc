use super::lexer::{match_token, parse_look_header, Header, HeaderFault, Token, TokenMatch};
use super::{ParseError, Tag, TraceEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Outside,
    Inside { tag: Tag, opened_at: usize },
}

/// Incremental trace parser for a single decode stream.
///
/// Feed text with [`push`](Self::push) as it is generated; each call returns
/// the events that became certain. A tag split across chunks stays buffered
/// until it can be classified. Text may arrive as several consecutive
/// [`TraceEvent::Text`] deltas. After an error the parser is poisoned and
/// keeps returning that error.
#[derive(Debug, Clone)]
pub struct StreamParser {
    buf: String,
    /// Trailing bytes of an incomplete UTF-8 sequence from `push_bytes`.
    carry: Vec<u8>,
    /// Absolute byte offset of `buf[0]` in the whole stream.
    base: usize,
    state: State,
    answered: bool,
    failed: Option<ParseError>,
}

impl Default for StreamParser {
    fn default() -> Self {
        Self::new()
    }
}

impl StreamParser {
    pub fn new() -> Self {
        Self {
            buf: String::new(),
            carry: Vec::new(),
            base: 0,
            state: State::Outside,
            answered: false,
            failed: None,
        }
    }

    pub fn push(&mut self, chunk: &str) -> Result<Vec<TraceEvent>, ParseError> {
        if let Some(e) = &self.failed {
            return Err(e.clone());
        }
        self.buf.push_str(chunk);
        let mut events = Vec::new();
        let res = self.drain(false, &mut events);
        self.settle(res).map(|_| events)
    }

    /// Like [`push`](Self::push) for raw bytes; a UTF-8 sequence may be split
    /// across calls.
    pub fn push_bytes(&mut self, bytes: &[u8]) -> Result<Vec<TraceEvent>, ParseError> {
        if let Some(e) = &self.failed {
            return Err(e.clone());
        }
        self.carry.extend_from_slice(bytes);
        let valid = match std::str::from_utf8(&self.carry) {
            Ok(s) => s.len(),
            Err(e) if e.error_len().is_none() => e.valid_up_to(),
            Err(e) => {
                let offset = self.base + self.buf.len() + e.valid_up_to();
                let err = ParseError::InvalidUtf8 { offset };
                self.failed = Some(err.clone());
                return Err(err);
            }
        };
        let rest = self.carry.split_off(valid);
        let text = String::from_utf8(std::mem::replace(&mut self.carry, rest))
            .expect("prefix validated above");
        self.push(&text)
    }

    /// Signals end of input and returns the remaining events.
    pub fn finish(mut self) -> Result<Vec<TraceEvent>, ParseError> {
        if let Some(e) = self.failed.take() {
            return Err(e);
        }
        if !self.carry.is_empty() {
            return Err(ParseError::InvalidUtf8 {
                offset: self.base + self.buf.len(),
            });
        }
        let mut events = Vec::new();
        self.drain(true, &mut events)?;
        if let State::Inside { tag, opened_at } = self.state {
            return Err(ParseError::UnclosedTag {
                tag,
                offset: opened_at,
            });
        }
        Ok(events)
    }

    /// True when input is buffered awaiting classification or a block is
    /// still open, i.e. the stream so far is a proper prefix of a trace.
    pub fn is_pending(&self) -> bool {
        !self.buf.is_empty() || matches!(self.state, State::Inside { .. })
    }

    /// The block currently open, if any.
    pub fn open_block(&self) -> Option<Tag> {
        match self.state {
            State::Inside { tag, .. } => Some(tag),
            State::Outside => None,
        }
    }

    fn settle(&mut self, res: Result<(), ParseError>) -> Result<(), ParseError> {
        if let Err(e) = &res {
            self.failed = Some(e.clone());
        }
        res
    }

    fn consume(&mut self, n: usize) -> String {
        self.base += n;
        self.buf.drain(..n).collect()
    }

    fn drain(&mut self, eof: bool, events: &mut Vec<TraceEvent>) -> Result<(), ParseError> {
        while !self.buf.is_empty() {
            match self.buf.find('<') {
                None => {
                    let n = self.buf.len();
                    events.push(TraceEvent::Text(self.consume(n)));
                }
                Some(i) if i > 0 => events.push(TraceEvent::Text(self.consume(i))),
                Some(_) => match match_token(&self.buf) {
                    TokenMatch::NotATag => events.push(TraceEvent::Text(self.consume(1))),
                    TokenMatch::Incomplete if eof => {
                        let n = self.buf.len();
                        events.push(TraceEvent::Text(self.consume(n)));
                    }
                    TokenMatch::Incomplete => return Ok(()),
                    TokenMatch::Complete(tok, len) => {
                        if !self.on_token(tok, len, eof, events)? {
                            return Ok(());
                        }
                    }
                },
            }
        }
        Ok(())
    }

    /// Handles a tag at the head of the buffer. Returns `false` when more
    /// input is needed.
    fn on_token(
        &mut self,
        tok: Token,
        len: usize,
        eof: bool,
        events: &mut Vec<TraceEvent>,
    ) -> Result<bool, ParseError> {
        let offset = self.base;
        match (self.state, tok) {
            (State::Inside { tag, .. }, Token::Close(t)) if t == tag => {
                self.consume(len);
                self.state = State::Outside;
                events.push(match tag {
                    Tag::Think => TraceEvent::ThinkClose,
                    Tag::Look => TraceEvent::LookClose,
                    Tag::Answer => TraceEvent::AnswerClose,
                });
            }
            (_, Token::Close(tag)) => return Err(ParseError::UnexpectedClose { tag, offset }),
            (State::Inside { tag: Tag::Look, .. }, Token::Open(Tag::Look)) => {
                return Err(ParseError::NestedLook { offset })
            }
            (State::Inside { tag: inside, .. }, Token::Open(tag)) => {
                return Err(ParseError::NestedTag {
                    tag,
                    inside,
                    offset,
                })
            }
            (State::Outside, Token::Open(tag)) if self.answered => {
                return Err(ParseError::ContentAfterAnswer { tag, offset })
            }
            (State::Outside, Token::Open(Tag::Look)) => match parse_look_header(&self.buf) {
                Header::Incomplete if eof => {
                    return Err(ParseError::UnclosedTag {
                        tag: Tag::Look,
                        offset,
                    })
                }
                Header::Incomplete => return Ok(false),
                Header::Fault(HeaderFault::Tag(reason)) => {
                    return Err(ParseError::MalformedLookTag { offset, reason })
                }
                Header::Fault(HeaderFault::Bbox(reason)) => {
                    return Err(ParseError::MalformedBbox { offset, reason })
                }
                Header::Complete { target, bbox, len } => {
                    self.consume(len);
                    self.state = State::Inside {
                        tag: Tag::Look,
                        opened_at: offset,
                    };
                    events.push(TraceEvent::LookOpen { target, bbox });
                }
            },
            (State::Outside, Token::Open(tag)) => {
                self.consume(len);
                self.state = State::Inside {
                    tag,
                    opened_at: offset,
                };
                if tag == Tag::Answer {
                    self.answered = true;
                }
                events.push(match tag {
                    Tag::Think => TraceEvent::ThinkOpen,
                    Tag::Answer => TraceEvent::AnswerOpen,
                    Tag::Look => unreachable!("handled above"),
                });
            }
        }
        Ok(true)
    }
}

/// Runs a [`StreamParser`] over `chunks` to completion.
pub fn stream_events<I, S>(chunks: I) -> Result<Vec<TraceEvent>, ParseError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut parser = StreamParser::new();
    let mut events = Vec::new();
    for chunk in chunks {
        events.extend(parser.push(chunk.as_ref())?);
    }
    events.extend(parser.finish()?);
    Ok(events)
}
