//! JSGF-subset grammars compiled to weighted word FSTs.
//!
//! The pipeline is `parse_jsgf` → [`build_fsm`] (epsilon automaton) →
//! [`remove_epsilons`] → [`GrammarFst`]; [`compile_grammar`] runs it end to
//! end. The subset is non-recursive, so every language is a finite phrase
//! list and [`enumerate_language`] is exact.

mod fst;
mod lexicon;
mod parse;

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

pub use fst::{
    build_fsm, compile_grammar, enumerate_language, remove_epsilons, Fsm, FsmArc, FstArc,
    GrammarFst, StateId, SymbolId, SymbolTable, EPSILON, EPSILON_SYMBOL,
};
pub use lexicon::{Lexicon, Pronunciations};
pub use parse::{parse_jsgf, Expr, GrammarAst, Rule};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrammarError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("rule <{rule}> references undefined rule <{missing}>")]
    UnresolvedRule { rule: String, missing: String },
    #[error("rule <{0}> is recursive")]
    RecursiveRule(String),
    #[error("rule <{0}> is defined twice")]
    DuplicateRule(String),
    #[error("grammar has no public rule")]
    NoPublicRule,
    #[error("language has more than {0} sentences")]
    LimitExceeded(usize),
    #[error("fst contains a cycle")]
    Cyclic,
    #[error("malformed fst text (line {line}): {message}")]
    FstFormat { line: usize, message: String },
    #[error("malformed lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
    #[error("empty word")]
    EmptyWord,
    #[error("unknown grammar id '{0}'")]
    UnknownGrammar(String),
}

/// Grammar sources shipped with the crate, keyed by grammar id.
pub const BUILTIN_GRAMMARS: &[(&str, &str)] = &[
    ("adapt1", include_str!("../../grammars/adapt1.gram")),
    ("adapt2", include_str!("../../grammars/adapt2.gram")),
    ("adapt3", include_str!("../../grammars/adapt3.gram")),
    ("quiz_start", include_str!("../../grammars/quiz_start.gram")),
    ("q1", include_str!("../../grammars/q1.gram")),
    ("q2", include_str!("../../grammars/q2.gram")),
    ("q3", include_str!("../../grammars/q3.gram")),
    ("q4", include_str!("../../grammars/q4.gram")),
    ("commands1", include_str!("../../grammars/commands1.gram")),
    ("commands2", include_str!("../../grammars/commands2.gram")),
];

/// Pronunciations for the interaction vocabulary ("zeeno" deliberately absent).
pub const BUILTIN_LEXICON: &str = include_str!("../../data/lexicon.txt");

/// Precompiled grammars the dialogue can switch between at run time.
#[derive(Debug, Clone, Default)]
pub struct GrammarLibrary {
    grammars: BTreeMap<String, Arc<GrammarFst>>,
}

impl GrammarLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Compiles every built-in grammar with the silence option and the
    /// built-in lexicon attached.
    pub fn builtin() -> Self {
        let lexicon = Lexicon::parse(BUILTIN_LEXICON).expect("built-in lexicon parses");
        let mut lib = Self::new();
        for (id, src) in BUILTIN_GRAMMARS {
            let ast = parse_jsgf(src).expect("built-in grammar parses");
            let fst = compile_grammar(&ast, true)
                .expect("built-in grammar compiles")
                .with_lexicon(&lexicon);
            lib.insert(id, fst);
        }
        lib
    }

    pub fn insert(&mut self, id: &str, fst: GrammarFst) {
        self.grammars.insert(id.to_string(), Arc::new(fst));
    }

    pub fn get(&self, id: &str) -> Result<Arc<GrammarFst>, GrammarError> {
        self.grammars
            .get(id)
            .cloned()
            .ok_or_else(|| GrammarError::UnknownGrammar(id.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.grammars.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SILENCE;

    #[test]
    fn builtin_grammars_compile() {
        let lib = GrammarLibrary::builtin();
        assert_eq!(lib.ids().count(), BUILTIN_GRAMMARS.len());
        let q1 = lib.get("q1").unwrap();
        let lang = enumerate_language(&q1, 100).unwrap();
        assert_eq!(lang.len(), 5);
        assert!(lang.contains("moved quickly for twenty seconds"));
        assert!(lang.contains(SILENCE));
        let adapt2 = enumerate_language(&lib.get("adapt2").unwrap(), 10).unwrap();
        assert_eq!(
            adapt2.into_iter().collect::<Vec<_>>(),
            vec!["!SIL".to_string(), "testing a b c".to_string()]
        );
        assert!(matches!(lib.get("nope"), Err(GrammarError::UnknownGrammar(_))));
    }

    #[test]
    fn builtin_lexicon_falls_back_only_for_the_robot_name() {
        let lib = GrammarLibrary::builtin();
        let fst = lib.get("adapt1").unwrap();
        let fallbacks: Vec<&String> = fst
            .pronunciations()
            .iter()
            .filter(|(_, p)| p.fallback)
            .map(|(w, _)| w)
            .collect();
        assert_eq!(fallbacks, vec!["zeeno"]);
    }
}
