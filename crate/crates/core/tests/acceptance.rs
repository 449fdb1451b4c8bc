//! Acceptance criteria. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.

// Negated comparisons make NaN fail a check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use gazekit::attention::{
    attention_weights, gaze_step, key_bias, modulated_scores, raw_scores, softmax,
    softmax_bias_jacobian, AttentionInput, GazeState, Key, KeyKind, Query, QueryOrigin,
};
use gazekit::curation::{
    difficulty_filter, rank_candidates, rank_order, CandidateSet, DifficultyRecord,
    StructuralConfig,
};
use gazekit::gazefield::{bias_accumulated, bias_single, field_for_grid, sweep};
use gazekit::geometry::make_grid;
use gazekit::reward::{advantages, kl_schedule, score_text, NormalizedMatcher, RewardConfig};
use gazekit::trace::{coalesce_text, Look, StreamParser, Tag};
use gazekit::{
    parse_trace, serialize_trace, GazeParams, NormalizedBBox, Point, Segment, Trace, TraceEvent,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const CORPUS: &str = include_str!("data/golden_corpus.jsonl");
const EXPECTED: &str = include_str!("data/golden_expected.jsonl");

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(label: &str, start: Instant, limit: Duration) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure!(took < limit, "{label} took {took:?}, limit {limit:?}");
    Ok(took)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_box(r: &mut ChaCha8Rng) -> NormalizedBBox {
    let (a, b) = (r.gen::<f64>(), r.gen::<f64>());
    let (c, d) = (r.gen::<f64>(), r.gen::<f64>());
    NormalizedBBox::new(a.min(b), c.min(d), a.max(b), c.max(d)).unwrap()
}

/// Distance-to-box and bias written out with branches instead of max.
fn oracle_bias(px: f64, py: f64, b: [f64; 4], alpha: f64, sigma: f64) -> f64 {
    let dx = if px < b[0] {
        b[0] - px
    } else if px > b[2] {
        px - b[2]
    } else {
        0.0
    };
    let dy = if py < b[1] {
        b[1] - py
    } else if py > b[3] {
        py - b[3]
    } else {
        0.0
    };
    -alpha * (dx * dx + dy * dy) / (2.0 * sigma * sigma)
}

fn c1_bias_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let b = random_box(&mut r);
        let p = Point::new(r.gen(), r.gen());
        let params = GazeParams::new(r.gen_range(0.0..20.0), r.gen_range(0.05..1.0)).unwrap();
        let got = bias_single(p, &b, &params);
        let want = oracle_bias(p.x, p.y, b.to_array(), params.alpha_s(), params.sigma());
        worst = worst.max((got - want).abs());
    }
    ensure!(worst <= 1e-12, "max deviation {worst:e}");

    let field = field_for_grid(
        &make_grid(2, 2).unwrap(),
        &[NormalizedBBox::new(0.0, 0.0, 0.5, 0.5).unwrap()],
        &GazeParams::default(),
    );
    ensure!(
        field.values() == [0.0, -2.0, -2.0, -4.0],
        "2x2 field {:?}",
        field.values()
    );

    // The inputs 0.1 and 0.3 are not binary fractions; -2.5600000000000005 is
    // the correctly rounded value of the exact expression on those inputs.
    let v = bias_single(
        Point::new(0.5, 0.5),
        &NormalizedBBox::new(0.1, 0.1, 0.3, 0.3).unwrap(),
        &GazeParams::default(),
    );
    ensure!(v == -2.5600000000000005_f64, "worked value {v:?}");
    ensure!(
        (v - -2.56).abs() <= f64::EPSILON * 2.56,
        "worked value {v:?} vs -2.56"
    );
    let took = within("criterion", start, Duration::from_secs(1))?;
    Ok(format!(
        "1000 pairs, max |err| {worst:e}; 0/-2/-2/-4 and -2.56 reproduced; {took:?}"
    ))
}

fn c2_field_properties() -> Outcome {
    let start = Instant::now();
    let mut r = rng(2);
    const CASES: usize = 10_000;
    for case in 0..CASES {
        let b = random_box(&mut r);
        let a1 = r.gen_range(0.01..20.0);
        let a2 = a1 + r.gen_range(0.0..20.0);
        let sigma = r.gen_range(0.05..1.0);
        let p1 = GazeParams::new(a1, sigma).unwrap();
        let p2 = GazeParams::new(a2, sigma).unwrap();

        let inside = Point::new(r.gen_range(b.x1()..=b.x2()), r.gen_range(b.y1()..=b.y2()));
        ensure!(
            bias_single(inside, &b, &p1) == 0.0,
            "case {case}: nonzero inside box"
        );

        let q = Point::new(r.gen(), r.gen());
        if !b.contains(q) {
            ensure!(
                bias_single(q, &b, &p1) < 0.0,
                "case {case}: outside point not suppressed"
            );
        }
        ensure!(
            bias_single(q, &b, &p2) <= bias_single(q, &b, &p1),
            "case {case}: not monotone in alpha_s"
        );

        let n = r.gen_range(1..=5);
        let boxes: Vec<NormalizedBBox> = (0..n).map(|_| random_box(&mut r)).collect();
        let acc = bias_accumulated(q, &boxes, &p1).unwrap();
        let singles: Vec<f64> = boxes.iter().map(|bb| bias_single(q, bb, &p1)).collect();
        ensure!(
            singles.iter().all(|s| acc >= *s),
            "case {case}: accumulation below a single box"
        );
        ensure!(
            singles.contains(&acc),
            "case {case}: accumulation is not the max"
        );
    }
    let took = within("criterion", start, Duration::from_secs(10))?;
    Ok(format!("{CASES} generated cases; {took:?}"))
}

fn random_vec(r: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| r.gen_range(-1.0..1.0)).collect()
}

fn c3_attention_contract() -> Outcome {
    let mut r = rng(3);
    let grid = make_grid(2, 4).unwrap();
    let d = 16;
    let (mut rows_a, mut rows_b, mut jac_entries) = (0usize, 0usize, 0usize);
    let (mut worst_b, mut worst_c) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let boxes: Vec<NormalizedBBox> = (0..r.gen_range(1..=3))
            .map(|_| random_box(&mut r))
            .collect();
        let field = field_for_grid(&grid, &boxes, &GazeParams::default());
        let queries: Vec<Query> = (0..8)
            .map(|i| Query {
                origin: if i % 2 == 0 {
                    QueryOrigin::Text
                } else {
                    QueryOrigin::Vision
                },
                vector: random_vec(&mut r, d),
            })
            .collect();
        let keys: Vec<Key> = (0..8)
            .map(|j| Key {
                kind: if j < 6 {
                    KeyKind::Visual(j)
                } else {
                    KeyKind::Text
                },
                vector: random_vec(&mut r, d),
            })
            .collect();
        let input = AttentionInput::new(queries, keys, d).unwrap();
        let raw = raw_scores(&input);
        let modded = modulated_scores(&input, &field).unwrap();
        let w_raw = attention_weights(&raw);
        let w_mod = attention_weights(&modded);
        let beta = key_bias(&input, &field).unwrap();
        let biased: Vec<bool> = input
            .keys()
            .iter()
            .map(|k| matches!(k.kind, KeyKind::Visual(_)))
            .collect();

        for (i, q) in input.queries().iter().enumerate() {
            match q.origin {
                QueryOrigin::Vision => {
                    let same_scores = raw[i]
                        .iter()
                        .zip(&modded[i])
                        .all(|(a, b)| a.to_bits() == b.to_bits());
                    let same_weights = w_raw[i]
                        .iter()
                        .zip(&w_mod[i])
                        .all(|(a, b)| a.to_bits() == b.to_bits());
                    ensure!(
                        same_scores && same_weights,
                        "vision row {i} changed under the field"
                    );
                    rows_a += 1;
                }
                QueryOrigin::Text => {
                    let scaled: Vec<f64> = w_raw[i]
                        .iter()
                        .zip(&beta)
                        .map(|(w, b)| w * b.exp())
                        .collect();
                    let z: f64 = scaled.iter().sum();
                    for (j, s) in scaled.iter().enumerate() {
                        worst_b = worst_b.max((w_mod[i][j] - s / z).abs());
                    }
                    rows_b += 1;

                    let jac = softmax_bias_jacobian(&w_mod[i], &biased);
                    let h = 1e-5;
                    for k in 0..beta.len() {
                        let shifted = |delta: f64| {
                            let row: Vec<f64> = raw[i]
                                .iter()
                                .zip(&beta)
                                .enumerate()
                                .map(|(m, (s, b))| {
                                    if biased[m] {
                                        s + b + if m == k { delta } else { 0.0 }
                                    } else {
                                        *s
                                    }
                                })
                                .collect();
                            softmax(&row)
                        };
                        let (plus, minus) = (shifted(h), shifted(-h));
                        for j in 0..beta.len() {
                            let fd = if biased[k] {
                                (plus[j] - minus[j]) / (2.0 * h)
                            } else {
                                0.0
                            };
                            worst_c = worst_c.max((jac[j][k] - fd).abs());
                            jac_entries += 1;
                        }
                    }
                }
            }
        }
    }
    ensure!(worst_b <= 1e-10, "(b) max deviation {worst_b:e}");
    ensure!(worst_c <= 1e-6, "(c) max Jacobian deviation {worst_c:e}");
    Ok(format!(
        "(a) {rows_a} vision rows bit-identical; (b) {rows_b} text rows, max |err| {worst_b:e}; (c) {jac_entries} entries, max |err| {worst_c:e}"
    ))
}

struct Golden {
    trace: String,
    truth: String,
    expected: Value,
}

fn golden() -> Vec<Golden> {
    CORPUS
        .lines()
        .zip(EXPECTED.lines())
        .map(|(c, e)| {
            let rec: Value = serde_json::from_str(c).unwrap();
            Golden {
                trace: rec["trace"].as_str().unwrap().to_string(),
                truth: rec["ground_truth"].as_str().unwrap().to_string(),
                expected: serde_json::from_str(e).unwrap(),
            }
        })
        .collect()
}

fn exp_f64(v: &Value, key: &str) -> f64 {
    v[key]
        .as_str()
        .and_then(|s| s.parse().ok())
        .unwrap_or(f64::NAN)
}

fn c4_golden_corpus() -> Outcome {
    let cases = golden();
    ensure!(cases.len() == 50, "corpus has {} records", cases.len());
    let cfg = RewardConfig::default();
    let m = NormalizedMatcher::default();
    let mut cells = std::collections::BTreeSet::new();
    let mut formats = std::collections::BTreeSet::new();
    let mut looks = std::collections::BTreeSet::new();
    let (mut ious, mut under, mut over) = (Vec::new(), false, false);
    for (i, g) in cases.iter().enumerate() {
        let (r, err) = score_text(&g.trace, &g.truth, &m, &cfg);
        let e = &g.expected;
        ensure!(
            e["parsed"].as_bool() == Some(err.is_none()),
            "line {}: parse status",
            i + 1
        );
        let pairs = [
            ("correct", r.correct),
            ("format", r.format),
            ("bbox", r.bbox),
            ("overlap", r.overlap),
            ("excess", r.excess),
            ("length", r.length),
            ("total", r.total),
            ("mean_iou", r.stats.mean_pairwise_iou),
        ];
        for (k, got) in pairs {
            let want = exp_f64(e, k);
            ensure!(
                got == want,
                "line {}: {k} = {got:?}, oracle {want:?}",
                i + 1
            );
        }
        ensure!(
            e["gaze"].as_bool() == Some(r.gaze_indicator),
            "line {}: gaze",
            i + 1
        );
        for (k, got) in [
            ("look_count", r.stats.look_count),
            ("valid_box_count", r.stats.valid_box_count),
            ("word_count", r.stats.word_count),
        ] {
            ensure!(e[k].as_u64() == Some(got as u64), "line {}: {k}", i + 1);
        }
        cells.insert(format!("{}", r.correct));
        formats.insert(r.format > 0.0);
        looks.insert(r.stats.look_count);
        ious.push(r.stats.mean_pairwise_iou);
        under |= err.is_none() && r.stats.word_count < 500;
        over |= r.stats.word_count > 500;
    }
    let (first, _) = score_text(&cases[0].trace, &cases[0].truth, &m, &cfg);
    ensure!(first.total == 1.75, "canonical trace total {}", first.total);
    let (floor, _) = score_text(&cases[5].trace, &cases[5].truth, &m, &cfg);
    ensure!(floor.total == -1.0, "no-answer trace total {}", floor.total);

    for c in ["1.5", "0.7", "-0.2", "-0.5", "-1"] {
        ensure!(cells.contains(c), "correctness cell {c} not covered");
    }
    ensure!(formats.len() == 2, "format on/off not both covered");
    for n in [0, 1, 2, 5, 11] {
        ensure!(looks.contains(&n), "N_L = {n} not covered");
    }
    for target in [0.0, 1.0 / 3.0, 1.0] {
        ensure!(
            ious.iter().any(|v| (v - target).abs() < 1e-12),
            "overlap {target} not covered"
        );
    }
    ensure!(under && over, "word counts do not straddle 500");
    Ok("50 traces equal to the oracle; best 1.75, no-answer floor -1.0; all cases covered".into())
}

fn c5_advantages() -> Outcome {
    let mut r = rng(5);
    let (mut worst_mean, mut worst_sd, mut groups) = (0.0f64, 0.0f64, 0);
    while groups < 1000 {
        let g = r.gen_range(2..=16);
        let rewards: Vec<f64> = (0..g).map(|_| r.gen_range(-1.3..1.75)).collect();
        let n = g as f64;
        let mu = rewards.iter().sum::<f64>() / n;
        let sigma = (rewards.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / n).sqrt();
        if sigma <= 1e-3 {
            continue;
        }
        let a = advantages(&rewards).unwrap();
        let mean = a.iter().sum::<f64>() / n;
        let sd = (a.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
        worst_mean = worst_mean.max(mean.abs());
        worst_sd = worst_sd.max((sd - sigma / (sigma + 1e-8)).abs());
        groups += 1;
    }
    ensure!(worst_mean <= 1e-12, "max |mean| {worst_mean:e}");
    ensure!(worst_sd <= 1e-6, "max std deviation {worst_sd:e}");
    let a = advantages(&[1.75, -0.5, 1.75, -0.5]).unwrap();
    for (x, e) in a.iter().zip([1.0, -1.0, 1.0, -1.0]) {
        ensure!((x - e).abs() <= 1e-7, "two-level group gave {a:?}");
    }
    Ok(format!(
        "{groups} groups, max |mean| {worst_mean:e}, max std err {worst_sd:e}"
    ))
}

fn c6_kl_schedule() -> Outcome {
    for total in [4usize, 100, 1000, 40_000] {
        let at = |s| kl_schedule(s, total).unwrap();
        ensure!(at(0) == 0.04, "total {total}: step 0 gave {}", at(0));
        ensure!(
            at(total / 4) == 0.025,
            "total {total}: 25% gave {}",
            at(total / 4)
        );
        ensure!(
            at(total / 2) == 0.01,
            "total {total}: 50% gave {}",
            at(total / 2)
        );
        ensure!(at(total) == 0.01, "total {total}: 100% gave {}", at(total));
    }
    Ok("0.04 / 0.025 / 0.01 / 0.01 exact for 4 run lengths".into())
}

const ALPHABET: &[char] = &[
    'a', 'e', 'k', 'z', ' ', ' ', '\n', '\t', '<', '>', '/', '"', '=', '[', ']', ',', '.', '0',
    '7', 'é', 'ß', '图',
];

fn random_text(r: &mut ChaCha8Rng, min: usize, max: usize, quote_ok: bool) -> String {
    let n = r.gen_range(min..=max);
    (0..n)
        .map(|_| ALPHABET[r.gen_range(0..ALPHABET.len())])
        .filter(|c| quote_ok || *c != '"')
        .collect()
}

fn coord(r: &mut ChaCha8Rng) -> f64 {
    let k: u32 = r.gen_range(0..=12_000);
    format!("{:.4}", f64::from(k) / 10_000.0).parse().unwrap()
}

fn random_trace(r: &mut ChaCha8Rng) -> Trace {
    let mut segs = Vec::new();
    let mut last_plain = false;
    for _ in 0..r.gen_range(0..8) {
        let seg = match r.gen_range(0..3) {
            0 if !last_plain => Segment::Plain(random_text(r, 1, 12, true)),
            0 | 1 => Segment::Think(random_text(r, 0, 20, true)),
            _ => Segment::Look(Look {
                target: random_text(r, 0, 6, false),
                bbox: [coord(r), coord(r), coord(r), coord(r)],
                observation: random_text(r, 0, 15, true),
            }),
        };
        last_plain = matches!(seg, Segment::Plain(_));
        segs.push(seg);
    }
    if r.gen_bool(0.7) {
        segs.push(Segment::Answer(random_text(r, 0, 8, true)));
        last_plain = false;
    }
    if !last_plain && r.gen_bool(0.3) {
        segs.push(Segment::Plain(random_text(r, 1, 6, true)));
    }
    // A PLAIN made only of filtered characters can come out empty.
    segs.retain(|s| !matches!(s, Segment::Plain(p) if p.is_empty()));
    let mut out: Vec<Segment> = Vec::new();
    for s in segs {
        match (out.last_mut(), s) {
            (Some(Segment::Plain(prev)), Segment::Plain(p)) => prev.push_str(&p),
            (_, s) => out.push(s),
        }
    }
    Trace::new(out)
}

fn stream_chunked(
    text: &str,
    r: &mut ChaCha8Rng,
    bytewise: bool,
) -> Result<Vec<TraceEvent>, String> {
    let mut p = StreamParser::new();
    let mut events = Vec::new();
    if bytewise {
        for b in text.as_bytes() {
            events.extend(
                p.push_bytes(std::slice::from_ref(b))
                    .map_err(|e| e.to_string())?,
            );
        }
    } else {
        let mut rest = text;
        while !rest.is_empty() {
            let mut cut = r.gen_range(1..=rest.len().min(16));
            while !rest.is_char_boundary(cut) {
                cut += 1;
            }
            let (head, tail) = rest.split_at(cut);
            events.extend(p.push(head).map_err(|e| e.to_string())?);
            rest = tail;
        }
    }
    events.extend(p.finish().map_err(|e| e.to_string())?);
    Ok(coalesce_text(events))
}

fn c7_parser_fuzz() -> Outcome {
    let start = Instant::now();
    let mut r = rng(7);
    for i in 0..10_000 {
        let t = random_trace(&mut r);
        let text = serialize_trace(&t);
        let back = parse_trace(&text).map_err(|e| format!("case {i}: {e} in {text:?}"))?;
        ensure!(back == t, "case {i}: round trip changed {text:?}");
    }
    let mut bytewise = 0;
    for i in 0..1000 {
        let t = random_trace(&mut r);
        let text = serialize_trace(&t);
        let one_byte = i % 5 == 0;
        bytewise += usize::from(one_byte);
        let streamed =
            stream_chunked(&text, &mut r, one_byte).map_err(|e| format!("chunking {i}: {e}"))?;
        ensure!(
            streamed == t.events(),
            "chunking {i}: stream differs from batch for {text:?}"
        );
    }
    let took = within("criterion", start, Duration::from_secs(30))?;
    Ok(format!(
        "10000 round trips, 1000 chunkings ({bytewise} byte-wise); {took:?}"
    ))
}

fn c8_gaze_lifecycle() -> Outcome {
    let grid = make_grid(32, 32).unwrap();
    let mut checked = 0;
    for (i, g) in golden().iter().enumerate() {
        let Ok(t) = parse_trace(&g.trace) else {
            continue;
        };
        let mut state = GazeState::new(GazeParams::default());
        let mut boxes = 0;
        for ev in t.events() {
            state = gaze_step(state, &ev).map_err(|e| format!("line {}: {e}", i + 1))?;
            ensure!(
                state.boxes().len() >= boxes,
                "line {}: box set shrank",
                i + 1
            );
            boxes = state.boxes().len();
            if ev == TraceEvent::LookClose {
                ensure!(
                    state.effective_field(&grid).is_zero(),
                    "line {}: field after </LOOK>",
                    i + 1
                );
            }
        }
        ensure!(!state.is_active(), "line {}: ends with gaze active", i + 1);
        ensure!(
            state.effective_field(&grid).is_zero(),
            "line {}: final field not zero",
            i + 1
        );
        checked += 1;
    }
    Ok(format!("{checked} valid golden traces replayed"))
}

fn c9_sweep() -> Outcome {
    let grid = make_grid(32, 32).unwrap();
    let boxes = [NormalizedBBox::new(0.25, 0.25, 0.5, 0.5).unwrap()];
    let alphas = [0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 20.0];
    let rows = sweep(&grid, &boxes, 0.25, &alphas).map_err(|e| e.to_string())?;
    ensure!(
        rows[0].suppressed_fraction == 0.0,
        "suppression at alpha_s=0"
    );
    for w in rows.windows(2) {
        ensure!(
            w[1].suppressed_fraction >= w[0].suppressed_fraction,
            "suppression fell from alpha_s={} to {}",
            w[0].alpha_s,
            w[1].alpha_s
        );
    }
    let (r4, r8) = (&rows[3], &rows[4]);
    ensure!(
        r8.min_bias_outside == 2.0 * r4.min_bias_outside,
        "min not doubled"
    );
    ensure!(
        r8.mean_bias_outside == 2.0 * r4.mean_bias_outside,
        "mean not doubled"
    );
    let f4 = field_for_grid(&grid, &boxes, &GazeParams::new(4.0, 0.25).unwrap());
    let f8 = field_for_grid(&grid, &boxes, &GazeParams::new(8.0, 0.25).unwrap());
    ensure!(
        f4.values()
            .iter()
            .zip(f8.values())
            .all(|(a, b)| *b == 2.0 * a),
        "field values not doubled"
    );
    let fractions: Vec<String> = rows
        .iter()
        .map(|r| format!("{:.3}", r.suppressed_fraction))
        .collect();
    Ok(format!(
        "suppressed fraction [{}]; alpha_s 4 -> 8 exactly doubles",
        fractions.join(", ")
    ))
}

fn c10_curation() -> Outcome {
    let recs: Vec<DifficultyRecord> = (0..=8)
        .map(|k| DifficultyRecord::new(format!("s{k}"), 8, k).unwrap())
        .collect();
    let kept = difficulty_filter(&recs, 0.0, 1.0).map_err(|e| e.to_string())?;
    let want: Vec<String> = (1..=7).map(|k| format!("s{k}")).collect();
    ensure!(kept == want, "kept {kept:?}");

    ensure!(rank_order(&[(1.0, 1)]) == [0], "single candidate");
    ensure!(
        rank_order(&[(2.0, 1), (3.0, 1), (1.0, 1)]) == [1, 0, 2],
        "score order"
    );
    ensure!(
        rank_order(&[(2.0, 4), (2.0, 2)]) == [1, 0],
        "LOOK-count tie-break"
    );

    // Same score for 2 and 4 LOOKs, so only the tie-break separates them.
    let cfg = StructuralConfig {
        look_score_extended: 2.0,
        ..StructuralConfig::default()
    };
    let trace = |looks: usize| {
        let mut s = String::from("<THINK>plan</THINK>");
        for i in 0..looks {
            s.push_str(&format!(
                "<LOOK at=\"r\" bbox=[0.{i}, 0.1, 0.{i}5, 0.5]>seen</LOOK>"
            ));
        }
        s.push_str("<ANSWER>left</ANSWER>");
        parse_trace(&s).unwrap()
    };
    let cs = CandidateSet::new(
        "img-1",
        "left",
        vec![trace(4), trace(2), trace(1)],
        &NormalizedMatcher::default(),
        &cfg,
    );
    let order: Vec<usize> = rank_candidates(&cs)
        .iter()
        .map(|c| c.trace.count(Tag::Look))
        .collect();
    ensure!(order == [2, 4, 1], "ranked LOOK counts {order:?}");
    Ok("0/8 and 8/8 dropped, 1/8..7/8 kept; tie-break order matches".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("bias-field oracle", c1_bias_oracle),
        ("plateau and accumulation invariants", c2_field_properties),
        ("text-query bias contract", c3_attention_contract),
        ("reward golden corpus", c4_golden_corpus),
        ("advantage normalization", c5_advantages),
        ("KL schedule", c6_kl_schedule),
        ("parser round trip and stream equivalence", c7_parser_fuzz),
        ("gaze lifecycle", c8_gaze_lifecycle),
        ("sweep monotonicity", c9_sweep),
        ("curation filters", c10_curation),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  criterion {:>2}  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {:>2}  {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
