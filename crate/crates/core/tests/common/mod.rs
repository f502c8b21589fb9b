//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use std::sync::Arc;

use proptest::prelude::*;
use tutorbot::decoder::{ObservationFrame, Search, SearchConfig};
use tutorbot::grammar::{compile_grammar, Expr, GrammarAst, GrammarFst, Rule};
use tutorbot::SILENCE;

/// Posterior floor shared by the decoder under test and the oracle.
pub const FLOOR: f64 = 1e-8;

/// Every (sentence, path weight) the grammar generates, expanded straight
/// from the AST. An n-way choice costs ln(n) per branch, an optional ln(2)
/// on both sides; the public rules' top-level choices and the silence
/// sentence form a single choice.
pub fn weighted_language(ast: &GrammarAst, silence: bool) -> Vec<(Vec<String>, f64)> {
    let mut top: Vec<Expr> = Vec::new();
    for rule in ast.rules.iter().filter(|r| r.public) {
        match &rule.expr {
            Expr::Alternation(bs) => top.extend(bs.iter().cloned()),
            e => top.push(e.clone()),
        }
    }
    if silence {
        top.push(Expr::Token(SILENCE.to_string()));
    }
    if top.len() == 1 {
        expand(ast, &top[0])
    } else {
        expand(ast, &Expr::Alternation(top))
    }
}

fn expand(ast: &GrammarAst, e: &Expr) -> Vec<(Vec<String>, f64)> {
    match e {
        Expr::Token(w) => vec![(vec![w.clone()], 0.0)],
        Expr::RuleRef(name) => {
            let rule = ast.rules.iter().find(|r| &r.name == name).expect("resolved");
            expand(ast, &rule.expr)
        }
        Expr::Sequence(items) => {
            let mut acc = vec![(Vec::new(), 0.0)];
            for item in items {
                let tails = expand(ast, item);
                let mut next = Vec::new();
                for (h, hw) in &acc {
                    for (t, tw) in &tails {
                        let mut s: Vec<String> = h.clone();
                        s.extend(t.iter().cloned());
                        next.push((s, hw + tw));
                    }
                }
                acc = next;
            }
            acc
        }
        Expr::Alternation(bs) => {
            let c = (bs.len() as f64).ln();
            bs.iter()
                .flat_map(|b| expand(ast, b))
                .map(|(s, w)| (s, w + c))
                .collect()
        }
        Expr::Optional(inner) => {
            let c = 2f64.ln();
            let mut out = vec![(Vec::new(), c)];
            out.extend(expand(ast, inner).into_iter().map(|(s, w)| (s, w + c)));
            out
        }
    }
}

pub fn language_set(ast: &GrammarAst, silence: bool) -> BTreeSet<String> {
    weighted_language(ast, silence)
        .into_iter()
        .map(|(s, _)| s.join(" "))
        .collect()
}

/// Cheapest sentence under every frame alignment
/// `sil* w1+ sil* w2+ ... wn+ sil*`, found by enumerating all alignments.
/// Returns (sentence, cost, runner-up cost of a different sentence).
pub fn brute_force_decode(
    sentences: &[(Vec<String>, f64)],
    frames: &[ObservationFrame],
    floor: f64,
) -> Option<(Vec<String>, f64, f64)> {
    let cost = |f: &ObservationFrame, s: &str| -(f.prob(s).max(floor)).ln();
    let mut per_sentence: BTreeMap<Vec<String>, f64> = BTreeMap::new();
    for (words, weight) in sentences {
        let mut best = f64::INFINITY;
        enumerate_alignments(words.len(), frames.len(), &mut Vec::new(), &mut |labels| {
            let mut c = *weight;
            for (f, l) in frames.iter().zip(labels) {
                c += match l {
                    Some(k) => cost(f, &words[*k]),
                    None => cost(f, SILENCE),
                };
            }
            best = best.min(c);
        });
        let e = per_sentence.entry(words.clone()).or_insert(f64::INFINITY);
        *e = e.min(best);
    }
    let mut ranked: Vec<(Vec<String>, f64)> = per_sentence
        .into_iter()
        .filter(|(_, c)| c.is_finite())
        .collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (words, c) = ranked.first()?.clone();
    let second = ranked.get(1).map_or(f64::INFINITY, |r| r.1);
    Some((words, c, second))
}

/// Calls `visit` with every frame labelling: `None` = silence, `Some(k)` =
/// word k. Words appear in order, each on at least one consecutive frame.
fn enumerate_alignments(
    n_words: usize,
    n_frames: usize,
    labels: &mut Vec<Option<usize>>,
    visit: &mut dyn FnMut(&[Option<usize>]),
) {
    if labels.len() == n_frames {
        let used = labels.iter().flatten().max().map_or(0, |m| m + 1);
        if used == n_words {
            visit(labels);
        }
        return;
    }
    // Index of the next word not yet started.
    let next = labels.iter().flatten().max().map_or(0, |m| m + 1);
    let current = labels.last().copied().flatten();
    // Silence.
    labels.push(None);
    enumerate_alignments(n_words, n_frames, labels, visit);
    labels.pop();
    // Continue the current word.
    if let Some(k) = current {
        labels.push(Some(k));
        enumerate_alignments(n_words, n_frames, labels, visit);
        labels.pop();
    }
    // Start the next word.
    if next < n_words {
        labels.push(Some(next));
        enumerate_alignments(n_words, n_frames, labels, visit);
        labels.pop();
    }
}

/// Search with a beam wide enough that nothing is ever pruned.
pub fn exhaustive_search(fst: &Arc<GrammarFst>, frames: &[ObservationFrame]) -> Search {
    let nodes = fst.num_states() + fst.arcs().len();
    let mut search = Search::new(
        Arc::clone(fst),
        SearchConfig {
            beam: nodes,
            min_posterior: FLOOR,
        },
        frames[0].index,
    );
    for f in frames {
        search.advance(f);
    }
    search
}

/// Compares the decoder's best complete path with exhaustive enumeration.
/// The word sequence is only compared when the oracle's best is unique.
pub fn decoder_agrees(ast: &GrammarAst, frames: &[ObservationFrame]) -> Result<(), String> {
    let fst = Arc::new(compile_grammar(ast, true).map_err(|e| e.to_string())?);
    let got = exhaustive_search(&fst, frames)
        .best_complete()
        .ok_or("no complete path")?;
    let sentences = weighted_language(ast, true);
    let (words, cost, runner_up) = brute_force_decode(&sentences, frames, FLOOR).ok_or("oracle found no path")?;
    if (got.score - cost).abs() >= 1e-9 {
        return Err(format!("score {} vs oracle {cost}", got.score));
    }
    if runner_up - cost > 1e-9 && got.words != words {
        return Err(format!("words {:?} vs oracle {words:?}", got.words));
    }
    Ok(())
}

/// Minimum number of edits over every alignment path of the two sequences.
pub fn brute_force_edits(r: &[String], h: &[String]) -> usize {
    fn go(r: &[String], h: &[String], cost: usize, best: &mut usize) {
        if r.is_empty() && h.is_empty() {
            *best = (*best).min(cost);
            return;
        }
        if let (Some((a, rr)), Some((b, hh))) = (r.split_first(), h.split_first()) {
            go(rr, hh, cost + usize::from(a != b), best);
        }
        if let Some((_, rr)) = r.split_first() {
            go(rr, h, cost + 1, best);
        }
        if let Some((_, hh)) = h.split_first() {
            go(r, hh, cost + 1, best);
        }
    }
    let mut best = usize::MAX;
    go(r, h, 0, &mut best);
    best
}

/// RMS computed with a compensated sum, separate from the library's.
pub fn rms(samples: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &x in samples {
        let y = x * x - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    (sum / samples.len() as f64).sqrt()
}

const VOCAB: &[&str] = &["red", "blue", "green", "fast", "slow", "up", "down"];

fn arb_word() -> impl Strategy<Value = Expr> {
    proptest::sample::select(VOCAB).prop_map(|w| Expr::Token(w.to_string()))
}

/// Small expressions in the parser's normal form: no single-item sequences
/// or alternations, no sequence directly inside a sequence.
pub fn arb_expr() -> impl Strategy<Value = Expr> {
    arb_word().prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(|items| {
                let mut flat = Vec::new();
                for e in items {
                    match e {
                        Expr::Sequence(s) => flat.extend(s),
                        e => flat.push(e),
                    }
                }
                Expr::Sequence(flat)
            }),
            prop::collection::vec(inner.clone(), 2..4).prop_map(|bs| {
                let mut flat = Vec::new();
                for e in bs {
                    match e {
                        Expr::Alternation(a) => flat.extend(a),
                        e => flat.push(e),
                    }
                }
                Expr::Alternation(flat)
            }),
            inner.prop_map(|e| Expr::Optional(Box::new(e))),
        ]
    })
}

/// A grammar with one public rule that may reference one private rule.
pub fn arb_grammar() -> impl Strategy<Value = GrammarAst> {
    (arb_expr(), arb_expr(), any::<bool>()).prop_map(|(main, helper, use_ref)| {
        let mut rules = Vec::new();
        let expr = if use_ref {
            rules.push(Rule {
                name: "part".into(),
                public: false,
                expr: helper,
            });
            match main {
                Expr::Sequence(mut s) => {
                    s.push(Expr::RuleRef("part".into()));
                    Expr::Sequence(s)
                }
                e => Expr::Sequence(vec![e, Expr::RuleRef("part".into())]),
            }
        } else {
            main
        };
        rules.insert(
            0,
            Rule {
                name: "main".into(),
                public: true,
                expr,
            },
        );
        GrammarAst {
            name: "g".into(),
            rules,
        }
    })
}
