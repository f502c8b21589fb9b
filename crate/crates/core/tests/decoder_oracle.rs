mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tutorbot::decoder::ObservationFrame;
use tutorbot::grammar::{compile_grammar, parse_jsgf, GrammarAst};
use tutorbot::SILENCE;

fn check(ast: &GrammarAst, frames: &[ObservationFrame]) {
    if let Err(e) = common::decoder_agrees(ast, frames) {
        panic!("{e}");
    }
}

/// Frames whose posteriors come from a fixed confusion matrix row of the
/// true symbol.
fn confused_stream(truth: &[&str], symbols: &[&str], keep: f64) -> Vec<ObservationFrame> {
    truth
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let others = (symbols.len() - 1) as f64;
            let p: BTreeMap<String, f64> = symbols
                .iter()
                .map(|s| {
                    let v = if s == t { keep } else { (1.0 - keep) / others };
                    (s.to_string(), v)
                })
                .collect();
            ObservationFrame::new(i as u64, p)
        })
        .collect()
}

#[test]
fn three_sentences_five_frames() {
    let ast = parse_jsgf(
        "#JSGF V1.0; grammar g; public <s> = testing a b c | testing one two three | hello zeeno;",
    )
    .unwrap();
    let symbols = ["testing", "a", "b", "c", "one", "two", "three", "hello", "zeeno", SILENCE];
    let frames = confused_stream(&["hello", "hello", "zeeno", "zeeno", SILENCE], &symbols, 0.7);
    check(&ast, &frames);
    let fst = Arc::new(compile_grammar(&ast, true).unwrap());
    let best = common::exhaustive_search(&fst, &frames).best_complete().unwrap();
    assert_eq!(best.text(), "hello zeeno");
    assert_eq!(best.spans[0].start_frame, 0);
    assert_eq!(best.spans[1].end_frame, 4);
}

#[test]
fn yes_no_argmax() {
    let ast = parse_jsgf("#JSGF V1.0; grammar g; public <s> = yes | no;").unwrap();
    let fst = Arc::new(compile_grammar(&ast, true).unwrap());
    let f = ObservationFrame::new(0, [("yes".into(), 0.9), ("no".into(), 0.1)].into());
    let search = common::exhaustive_search(&fst, &[f]);
    assert_eq!(search.best().unwrap().text(), "yes");
}

#[test]
fn seeded_instances_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let grammars = [
        "public <s> = testing a b c | testing one two three | hello zeeno i am ready;",
        "public <s> = put your (left | right) arm up | make a (happy | sad) face;",
        "public <s> = (stood still | moved (slowly | quickly)) for ten seconds;",
        "public <s> = a [b] c | b c;",
    ];
    for src in grammars {
        let ast = parse_jsgf(&format!("#JSGF V1.0; grammar g; {src}")).unwrap();
        let fst = compile_grammar(&ast, true).unwrap();
        let mut symbols: Vec<&str> = fst.symbols().words().map(|(_, w)| w).collect();
        symbols.sort();
        for _ in 0..10 {
            let len = rng.random_range(3..9);
            let truth: Vec<&str> = (0..len)
                .map(|_| symbols[rng.random_range(0..symbols.len())])
                .collect();
            let keep = rng.random_range(0.3..0.95);
            check(&ast, &confused_stream(&truth, &symbols, keep));
        }
    }
}

fn arb_frames(symbols: Vec<String>) -> impl Strategy<Value = Vec<ObservationFrame>> {
    let n = symbols.len();
    prop::collection::vec(prop::collection::vec(0.0f64..1.0, n), 1..8).prop_map(move |rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, row)| {
                let total: f64 = row.iter().sum::<f64>().max(1e-12);
                let p = symbols
                    .iter()
                    .zip(&row)
                    .map(|(s, v)| (s.clone(), v / total))
                    .collect();
                ObservationFrame::new(i as u64, p)
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_grammar_and_stream(
        (ast, frames) in common::arb_grammar()
            .prop_filter("bounded language", |a| common::weighted_language(a, true).len() <= 200)
            .prop_flat_map(|ast| {
                let mut symbols: Vec<String> = common::language_set(&ast, true)
                    .iter()
                    .flat_map(|s| s.split(' ').map(str::to_string).collect::<Vec<_>>())
                    .filter(|w| !w.is_empty())
                    .collect();
                symbols.sort();
                symbols.dedup();
                (Just(ast), arb_frames(symbols))
            })
    ) {
        check(&ast, &frames);
    }
}
