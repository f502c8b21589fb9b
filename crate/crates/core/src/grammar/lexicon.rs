use std::collections::{BTreeMap, BTreeSet};

use super::GrammarError;
use crate::SILENCE;

/// Phone sequences for one word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pronunciations {
    pub variants: Vec<Vec<String>>,
    /// True when the word was missing and the letters were used as phones.
    pub fallback: bool,
}

/// Pronunciation dictionary in the `WORD ph1 ph2 ...` line format.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: BTreeMap<String, Vec<Vec<String>>>,
    phones: BTreeSet<String>,
}

impl Lexicon {
    /// Parses dictionary text. Blank lines and lines starting with `#` are
    /// skipped; repeated words add pronunciation variants.
    pub fn parse(text: &str) -> Result<Self, GrammarError> {
        let mut lex = Lexicon::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let word = parts.next().expect("non-empty line").to_lowercase();
            let phones: Vec<String> = parts.map(str::to_string).collect();
            if phones.is_empty() {
                return Err(GrammarError::Lexicon {
                    line: n + 1,
                    message: format!("word '{word}' has no phones"),
                });
            }
            lex.insert(&word, phones);
        }
        Ok(lex)
    }

    pub fn insert(&mut self, word: &str, phones: Vec<String>) {
        self.phones.extend(phones.iter().cloned());
        let variants = self.entries.entry(word.to_lowercase()).or_default();
        if !variants.contains(&phones) {
            variants.push(phones);
        }
    }

    pub fn phone_inventory(&self) -> &BTreeSet<String> {
        &self.phones
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Dictionary entry for `word`, or one phone per letter flagged as a
    /// fallback. The silence word maps to the `sil` phone.
    pub fn lookup(&self, word: &str) -> Result<Pronunciations, GrammarError> {
        if word.is_empty() {
            return Err(GrammarError::EmptyWord);
        }
        if word == SILENCE {
            return Ok(Pronunciations {
                variants: vec![vec!["sil".to_string()]],
                fallback: false,
            });
        }
        let key = word.to_lowercase();
        if let Some(v) = self.entries.get(&key) {
            return Ok(Pronunciations {
                variants: v.clone(),
                fallback: false,
            });
        }
        let letters: Vec<String> = key
            .chars()
            .filter(|c| c.is_alphanumeric())
            .map(|c| c.to_string())
            .collect();
        if letters.is_empty() {
            return Err(GrammarError::EmptyWord);
        }
        Ok(Pronunciations {
            variants: vec![letters],
            fallback: true,
        })
    }
}
