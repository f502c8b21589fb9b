//! Frame-synchronous token passing over a [`GrammarFst`].
//!
//! Every FST state `s` owns a silence node that absorbs non-speech frames
//! (leading, inter-word and trailing silence) and every arc owns a word node
//! that emits one or more frames of its word. Between frames a token may move
//! from a word node to the silence node of the arc's destination and from a
//! silence node into any outgoing word node, paying the arc weight. Each
//! emitted frame costs `-ln(max(posterior, floor))` of the node's symbol.

use std::sync::Arc;

use super::ObservationFrame;
use crate::grammar::{GrammarFst, SymbolId};
use crate::SILENCE;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Maximum number of live tokens kept after each frame.
    pub beam: usize,
    /// Posterior floor; keeps every path finite.
    pub min_posterior: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            beam: 64,
            min_posterior: 1e-8,
        }
    }
}

#[derive(Debug)]
struct Trace {
    /// `None` marks a silence stretch.
    word: Option<SymbolId>,
    start_frame: u64,
    prev: Option<Arc<Trace>>,
}

#[derive(Debug, Clone)]
struct Token {
    cost: f64,
    words: Arc<Vec<SymbolId>>,
    trace: Option<Arc<Trace>>,
}

/// One word of a hypothesis with its frame span `[start_frame, end_frame)`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct WordSpan {
    pub word: String,
    pub start_frame: u64,
    pub end_frame: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub words: Vec<String>,
    /// Accumulated cost, plus the final weight when the token is complete.
    pub score: f64,
    /// The token sits in the silence node of a final state.
    pub in_final: bool,
    pub spans: Vec<WordSpan>,
}

impl Hypothesis {
    pub fn text(&self) -> String {
        self.words.join(" ")
    }

    pub fn is_silence_only(&self) -> bool {
        self.words.iter().all(|w| w == SILENCE)
    }
}

#[derive(Debug)]
pub struct Search {
    fst: Arc<GrammarFst>,
    config: SearchConfig,
    tokens: Vec<Option<Token>>,
    frames_done: u64,
    first_frame: u64,
}

impl Search {
    pub fn new(fst: Arc<GrammarFst>, config: SearchConfig, first_frame: u64) -> Self {
        let nodes = fst.num_states() + fst.arcs().len();
        let mut tokens = vec![None; nodes];
        tokens[fst.start()] = Some(Token {
            cost: 0.0,
            words: Arc::new(Vec::new()),
            trace: Some(Arc::new(Trace {
                word: None,
                start_frame: first_frame,
                prev: None,
            })),
        });
        Self {
            fst,
            config,
            tokens,
            frames_done: 0,
            first_frame,
        }
    }

    pub fn fst(&self) -> &Arc<GrammarFst> {
        &self.fst
    }

    pub fn frames_decoded(&self) -> u64 {
        self.frames_done
    }

    fn num_states(&self) -> usize {
        self.fst.num_states()
    }

    fn relax(slot: &mut Option<Token>, cand: Token) {
        match slot {
            Some(t) if t.cost <= cand.cost => {}
            _ => *slot = Some(cand),
        }
    }

    /// Consumes one frame.
    pub fn advance(&mut self, frame: &ObservationFrame) {
        let frame_no = self.first_frame + self.frames_done;
        let ns = self.num_states();
        let fst = Arc::clone(&self.fst);

        // Word node -> silence node of the arc's destination.
        for (ai, arc) in fst.arcs().iter().enumerate() {
            if let Some(tok) = &self.tokens[ns + ai] {
                let cand = Token {
                    cost: tok.cost,
                    words: Arc::clone(&tok.words),
                    trace: Some(Arc::new(Trace {
                        word: None,
                        start_frame: frame_no,
                        prev: tok.trace.clone(),
                    })),
                };
                Self::relax(&mut self.tokens[arc.to], cand);
            }
        }
        // Silence node -> outgoing word nodes. Entries proposed here must not
        // feed further word entries before emitting, so collect first.
        let mut entries: Vec<(usize, Token)> = Vec::new();
        for s in 0..ns {
            let Some(tok) = &self.tokens[s] else { continue };
            for ai in fst.arc_range(s) {
                let arc = &fst.arcs()[ai];
                let mut words = (*tok.words).clone();
                words.push(arc.olabel);
                entries.push((
                    ns + ai,
                    Token {
                        cost: tok.cost + arc.weight,
                        words: Arc::new(words),
                        trace: Some(Arc::new(Trace {
                            word: Some(arc.olabel),
                            start_frame: frame_no,
                            prev: tok.trace.clone(),
                        })),
                    },
                ));
            }
        }
        for (node, cand) in entries {
            Self::relax(&mut self.tokens[node], cand);
        }

        // Emission.
        let floor = self.config.min_posterior;
        let cost_of = |sym: &str| -> f64 { -(frame.prob(sym).max(floor)).ln() };
        let sil_cost = cost_of(SILENCE);
        let mut word_cost = vec![f64::NAN; fst.symbols().len()];
        for (id, w) in fst.symbols().words() {
            word_cost[id as usize] = cost_of(w);
        }
        for (node, slot) in self.tokens.iter_mut().enumerate() {
            if let Some(tok) = slot {
                tok.cost += if node < ns {
                    sil_cost
                } else {
                    word_cost[fst.arcs()[node - ns].ilabel as usize]
                };
            }
        }
        self.prune();
        self.frames_done += 1;
    }

    fn prune(&mut self) {
        let live: usize = self.tokens.iter().filter(|t| t.is_some()).count();
        if live <= self.config.beam {
            return;
        }
        let mut costs: Vec<(f64, usize)> = self
            .tokens
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.as_ref().map(|t| (t.cost, i)))
            .collect();
        costs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, i) in &costs[self.config.beam..] {
            self.tokens[i] = None;
        }
    }

    fn hypothesis(&self, node: usize, score: f64) -> Hypothesis {
        let tok = self.tokens[node].as_ref().expect("live token");
        let ns = self.num_states();
        Hypothesis {
            words: tok
                .words
                .iter()
                .map(|&id| self.fst.word(id).to_string())
                .collect(),
            score,
            in_final: node < ns && self.fst.is_final(node),
            spans: self.spans(tok),
        }
    }

    fn spans(&self, tok: &Token) -> Vec<WordSpan> {
        let mut entries = Vec::new();
        let mut cur = tok.trace.clone();
        while let Some(t) = cur {
            entries.push((t.word, t.start_frame));
            cur = t.prev.clone();
        }
        entries.reverse();
        let end_all = self.first_frame + self.frames_done;
        let mut spans = Vec::new();
        for (k, &(word, start)) in entries.iter().enumerate() {
            let end = entries.get(k + 1).map_or(end_all, |e| e.1);
            if let Some(w) = word {
                if end > start {
                    spans.push(WordSpan {
                        word: self.fst.word(w).to_string(),
                        start_frame: start,
                        end_frame: end,
                    });
                }
            }
        }
        spans
    }

    /// Best live token. Tokens resting in a final state's silence node are
    /// ranked with their final weight added.
    pub fn best(&self) -> Option<Hypothesis> {
        let ns = self.num_states();
        let mut best: Option<(f64, usize)> = None;
        for (node, slot) in self.tokens.iter().enumerate() {
            let Some(tok) = slot else { continue };
            let rank = if node < ns {
                tok.cost + self.fst.final_weight(node).unwrap_or(0.0)
            } else {
                tok.cost
            };
            if best.is_none_or(|(b, _)| rank < b) {
                best = Some((rank, node));
            }
        }
        best.map(|(score, node)| self.hypothesis(node, score))
    }

    /// Best token that has completed a sentence, either resting in a final
    /// silence node or inside the last word of a sentence.
    pub fn best_complete(&self) -> Option<Hypothesis> {
        let ns = self.num_states();
        let mut best: Option<(f64, usize)> = None;
        for (node, slot) in self.tokens.iter().enumerate() {
            let Some(tok) = slot else { continue };
            let dest = if node < ns {
                node
            } else {
                self.fst.arcs()[node - ns].to
            };
            let Some(fw) = self.fst.final_weight(dest) else { continue };
            let score = tok.cost + fw;
            if best.is_none_or(|(b, _)| score < b) {
                best = Some((score, node));
            }
        }
        best.map(|(score, node)| self.hypothesis(node, score))
    }
}
