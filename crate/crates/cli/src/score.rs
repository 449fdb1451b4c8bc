use std::collections::HashMap;
use std::fs;
use std::path::Path;

use gazekit::config::Config;
use gazekit::numfmt::sig6;
use gazekit::reward::{advantages, score_text, NormalizedMatcher, RewardBreakdown};
use gazekit::trace::{ParseError, TraceStats};
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::{io_failure, Failure};

#[derive(Deserialize)]
struct Record {
    id: String,
    #[serde(default)]
    ground_truth: Option<String>,
    trace: String,
}

#[derive(Deserialize)]
struct Truth {
    id: String,
    ground_truth: String,
}

/// A float rendered at 6 significant digits.
struct Num(f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw = RawValue::from_string(sig6(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

#[derive(Serialize)]
struct StatsOut {
    look_count: usize,
    valid_box_count: usize,
    word_count: usize,
    has_think: bool,
    has_answer: bool,
    mean_pairwise_iou: Num,
}

impl From<&TraceStats> for StatsOut {
    fn from(s: &TraceStats) -> Self {
        Self {
            look_count: s.look_count,
            valid_box_count: s.valid_box_count,
            word_count: s.word_count,
            has_think: s.has_think,
            has_answer: s.has_answer,
            mean_pairwise_iou: Num(s.mean_pairwise_iou),
        }
    }
}

#[derive(Serialize)]
struct TraceLine<'a> {
    id: &'a str,
    line: usize,
    parsed: bool,
    correct: Num,
    format: Num,
    bbox: Num,
    overlap: Num,
    excess: Num,
    length: Num,
    total: Num,
    gaze_indicator: bool,
    trace_stats: StatsOut,
}

#[derive(Serialize)]
struct GroupLine<'a> {
    group: &'a str,
    size: usize,
    rewards: Vec<Num>,
    advantages: Vec<Num>,
}

pub struct Report {
    pub body: String,
    pub warnings: Vec<String>,
    pub invalid_lines: usize,
}

struct Entry {
    line: usize,
    id: String,
    ground_truth: String,
    trace: String,
}

fn load_truths(path: &Path) -> Result<HashMap<String, String>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure("read", path, e))?;
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let t: Truth = serde_json::from_str(line).map_err(|e| {
            Failure::Invalid(format!(
                "{}:{}: malformed ground-truth record: {e}",
                path.display(),
                i + 1
            ))
        })?;
        map.insert(t.id, t.ground_truth);
    }
    Ok(map)
}

pub fn run(corpus: &Path, truths: Option<&Path>, cfg: &Config) -> Result<Report, Failure> {
    let text = fs::read_to_string(corpus).map_err(|e| io_failure("read", corpus, e))?;
    let truths = truths.map(load_truths).transpose()?.unwrap_or_default();

    let mut warnings = Vec::new();
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let rec: Record = match serde_json::from_str(raw) {
            Ok(r) => r,
            Err(e) => {
                warnings.push((line, format!("malformed record: {e}")));
                continue;
            }
        };
        let Some(ground_truth) = truths.get(&rec.id).cloned().or(rec.ground_truth) else {
            warnings.push((line, format!("no ground truth for id `{}`", rec.id)));
            continue;
        };
        entries.push(Entry {
            line,
            id: rec.id,
            ground_truth,
            trace: rec.trace,
        });
    }
    let invalid_lines = warnings.len();

    let matcher = NormalizedMatcher::default();
    let scored: Vec<(RewardBreakdown, Option<ParseError>)> = entries
        .par_iter()
        .map(|e| score_text(&e.trace, &e.ground_truth, &matcher, &cfg.reward))
        .collect();

    let mut body = String::new();
    let mut groups: Vec<(&str, Vec<f64>)> = Vec::new();
    let mut group_index: HashMap<&str, usize> = HashMap::new();
    for (e, (r, err)) in entries.iter().zip(&scored) {
        if let Some(err) = err {
            warnings.push((
                e.line,
                format!("trace does not parse ({err}); scored as unparseable"),
            ));
        }
        let out = TraceLine {
            id: &e.id,
            line: e.line,
            parsed: err.is_none(),
            correct: Num(r.correct),
            format: Num(r.format),
            bbox: Num(r.bbox),
            overlap: Num(r.overlap),
            excess: Num(r.excess),
            length: Num(r.length),
            total: Num(r.total),
            gaze_indicator: r.gaze_indicator,
            trace_stats: StatsOut::from(&r.stats),
        };
        body.push_str(&serde_json::to_string(&out).expect("report lines serialize"));
        body.push('\n');

        let slot = *group_index.entry(&e.id).or_insert_with(|| {
            groups.push((&e.id, Vec::new()));
            groups.len() - 1
        });
        groups[slot].1.push(r.total);
    }
    warnings.sort_by_key(|(line, _)| *line);

    for (id, rewards) in &groups {
        let Ok(adv) = advantages(rewards) else {
            continue;
        };
        let out = GroupLine {
            group: id,
            size: rewards.len(),
            rewards: rewards.iter().map(|r| Num(*r)).collect(),
            advantages: adv.into_iter().map(Num).collect(),
        };
        body.push_str(&serde_json::to_string(&out).expect("group lines serialize"));
        body.push('\n');
    }

    Ok(Report {
        body,
        warnings: warnings
            .into_iter()
            .map(|(line, msg)| format!("line {line}: {msg}"))
            .collect(),
        invalid_lines,
    })
}
