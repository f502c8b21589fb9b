use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use super::lexicon::{Lexicon, Pronunciations};
use super::parse::{Expr, GrammarAst};
use super::GrammarError;
use crate::SILENCE;

pub type StateId = usize;
pub type SymbolId = u32;

/// Reserved id of the epsilon symbol.
pub const EPSILON: SymbolId = 0;
pub const EPSILON_SYMBOL: &str = "<eps>";

/// Word-labelled automaton straight out of the AST, epsilon arcs included.
///
/// Epsilon arcs that open an alternation branch carry the branch cost
/// `ln(branch count)`; all other arcs cost nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct Fsm {
    pub num_states: usize,
    pub start: StateId,
    pub finals: BTreeSet<StateId>,
    pub arcs: Vec<FsmArc>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FsmArc {
    pub from: StateId,
    pub to: StateId,
    /// `None` is epsilon.
    pub label: Option<String>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SymbolTable {
    words: Vec<String>,
    ids: BTreeMap<String, SymbolId>,
}

impl SymbolTable {
    fn from_words<'a>(words: impl IntoIterator<Item = &'a str>) -> Self {
        let mut table = SymbolTable::default();
        table.words.push(EPSILON_SYMBOL.to_string());
        table.ids.insert(EPSILON_SYMBOL.to_string(), EPSILON);
        let sorted: BTreeSet<&str> = words.into_iter().collect();
        for w in sorted {
            let id = table.words.len() as SymbolId;
            table.words.push(w.to_string());
            table.ids.insert(w.to_string(), id);
        }
        table
    }

    pub fn id(&self, word: &str) -> Option<SymbolId> {
        self.ids.get(word).copied()
    }

    pub fn word(&self, id: SymbolId) -> Option<&str> {
        self.words.get(id as usize).map(String::as_str)
    }

    /// Number of symbols including epsilon.
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.len() <= 1
    }

    /// Word symbols, epsilon excluded, in id order.
    pub fn words(&self) -> impl Iterator<Item = (SymbolId, &str)> {
        self.words
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, w)| (i as SymbolId, w.as_str()))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, w) in self.words.iter().enumerate() {
            let _ = writeln!(out, "{w} {i}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, GrammarError> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(word), Some(id), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(fst_format(n + 1, "expected 'word id'"));
            };
            let id: SymbolId = id.parse().map_err(|_| fst_format(n + 1, "bad symbol id"))?;
            entries.push((id, word.to_string()));
        }
        entries.sort();
        let mut table = SymbolTable::default();
        for (expect, (id, word)) in entries.into_iter().enumerate() {
            if id as usize != expect {
                return Err(fst_format(0, "symbol ids must be dense from 0"));
            }
            if table.ids.insert(word.clone(), id).is_some() {
                return Err(fst_format(0, format!("duplicate symbol '{word}'")));
            }
            table.words.push(word);
        }
        if table.word(EPSILON) != Some(EPSILON_SYMBOL) {
            return Err(fst_format(0, "symbol 0 must be <eps>"));
        }
        Ok(table)
    }
}

fn fst_format(line: usize, message: impl Into<String>) -> GrammarError {
    GrammarError::FstFormat {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FstArc {
    pub from: StateId,
    pub to: StateId,
    pub ilabel: SymbolId,
    pub olabel: SymbolId,
    /// Negative log probability.
    pub weight: f64,
}

/// Weighted word transducer: the recognizer's search space.
///
/// Arcs are stored grouped by source state. There are no epsilon arcs; final
/// states carry a final weight.
#[derive(Debug, Clone, PartialEq)]
pub struct GrammarFst {
    grammar_id: String,
    num_states: usize,
    start: StateId,
    finals: BTreeMap<StateId, f64>,
    arcs: Vec<FstArc>,
    offsets: Vec<usize>,
    symbols: SymbolTable,
    pronunciations: BTreeMap<String, Pronunciations>,
}

impl GrammarFst {
    fn build(
        grammar_id: String,
        num_states: usize,
        start: StateId,
        finals: BTreeMap<StateId, f64>,
        mut arcs: Vec<FstArc>,
        symbols: SymbolTable,
    ) -> Self {
        // Stable: keeps generation order within a state.
        arcs.sort_by_key(|a| a.from);
        let mut offsets = vec![0; num_states + 1];
        for a in &arcs {
            offsets[a.from + 1] += 1;
        }
        for s in 0..num_states {
            offsets[s + 1] += offsets[s];
        }
        Self {
            grammar_id,
            num_states,
            start,
            finals,
            arcs,
            offsets,
            symbols,
            pronunciations: BTreeMap::new(),
        }
    }

    pub fn grammar_id(&self) -> &str {
        &self.grammar_id
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn start(&self) -> StateId {
        self.start
    }

    pub fn is_final(&self, s: StateId) -> bool {
        self.finals.contains_key(&s)
    }

    pub fn final_weight(&self, s: StateId) -> Option<f64> {
        self.finals.get(&s).copied()
    }

    pub fn finals(&self) -> impl Iterator<Item = (StateId, f64)> + '_ {
        self.finals.iter().map(|(s, w)| (*s, *w))
    }

    pub fn arcs(&self) -> &[FstArc] {
        &self.arcs
    }

    pub fn arcs_from(&self, s: StateId) -> &[FstArc] {
        &self.arcs[self.arc_range(s)]
    }

    /// Index range of `s`'s outgoing arcs within [`GrammarFst::arcs`].
    pub fn arc_range(&self, s: StateId) -> std::ops::Range<usize> {
        self.offsets[s]..self.offsets[s + 1]
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }

    pub fn word(&self, id: SymbolId) -> &str {
        self.symbols.word(id).unwrap_or("<unk>")
    }

    /// Attaches phone sequences for every word symbol (fallback spelling for
    /// words missing from the lexicon). The reference decoder works on word
    /// symbols; the expansion is kept for phone-level front-ends.
    pub fn with_lexicon(mut self, lexicon: &Lexicon) -> Self {
        self.pronunciations = self
            .symbols
            .words()
            .filter_map(|(_, w)| lexicon.lookup(w).ok().map(|p| (w.to_string(), p)))
            .collect();
        self
    }

    pub fn pronunciations(&self) -> &BTreeMap<String, Pronunciations> {
        &self.pronunciations
    }

    /// All complete paths as (words, total weight including the final weight).
    pub fn complete_paths(&self, limit: usize) -> Result<Vec<(Vec<String>, f64)>, GrammarError> {
        let mut out = Vec::new();
        let mut words = Vec::new();
        let mut on_path = vec![false; self.num_states];
        self.walk(self.start, 0.0, &mut words, &mut on_path, &mut |w, cost| {
            if out.len() >= limit {
                return Err(GrammarError::LimitExceeded(limit));
            }
            out.push((w.to_vec(), cost));
            Ok(())
        })?;
        Ok(out)
    }

    fn walk(
        &self,
        s: StateId,
        cost: f64,
        words: &mut Vec<String>,
        on_path: &mut [bool],
        emit: &mut dyn FnMut(&[String], f64) -> Result<(), GrammarError>,
    ) -> Result<(), GrammarError> {
        if on_path[s] {
            return Err(GrammarError::Cyclic);
        }
        on_path[s] = true;
        if let Some(fw) = self.final_weight(s) {
            emit(words, cost + fw)?;
        }
        for arc in self.arcs_from(s) {
            words.push(self.word(arc.olabel).to_string());
            self.walk(arc.to, cost + arc.weight, words, on_path, emit)?;
            words.pop();
        }
        on_path[s] = false;
        Ok(())
    }

    /// Serialises to the AT&T-style text format: one arc per line
    /// `from to input output weight`, then `state weight` per final state.
    /// Symbols are written separately by [`SymbolTable::to_text`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for a in &self.arcs {
            let _ = writeln!(
                out,
                "{} {} {} {} {}",
                a.from, a.to, a.ilabel, a.olabel, a.weight
            );
        }
        for (s, w) in &self.finals {
            let _ = writeln!(out, "{s} {w}");
        }
        out
    }

    /// Reads the text format produced by [`GrammarFst::to_text`]. The start
    /// state is the source of the first arc (state 0 for arc-less FSTs).
    pub fn from_text(
        grammar_id: &str,
        fst_text: &str,
        symbols_text: &str,
    ) -> Result<Self, GrammarError> {
        let symbols = SymbolTable::from_text(symbols_text)?;
        let mut arcs = Vec::new();
        let mut finals = BTreeMap::new();
        let mut max_state = 0;
        for (n, line) in fst_text.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            let state = |i: usize| -> Result<StateId, GrammarError> {
                fields[i].parse().map_err(|_| fst_format(n + 1, "bad state id"))
            };
            let weight = |i: usize| -> Result<f64, GrammarError> {
                let w: f64 = fields[i].parse().map_err(|_| fst_format(n + 1, "bad weight"))?;
                if !(w.is_finite() && w >= 0.0) {
                    return Err(fst_format(n + 1, "weights must be finite and >= 0"));
                }
                Ok(w)
            };
            match fields.len() {
                0 => continue,
                2 => {
                    let s = state(0)?;
                    max_state = max_state.max(s);
                    finals.insert(s, weight(1)?);
                }
                5 => {
                    let (from, to) = (state(0)?, state(1)?);
                    let label = |i: usize| -> Result<SymbolId, GrammarError> {
                        let id: SymbolId =
                            fields[i].parse().map_err(|_| fst_format(n + 1, "bad label"))?;
                        if id == EPSILON || symbols.word(id).is_none() {
                            return Err(fst_format(n + 1, "label missing from symbol table"));
                        }
                        Ok(id)
                    };
                    let (ilabel, olabel) = (label(2)?, label(3)?);
                    max_state = max_state.max(from).max(to);
                    arcs.push(FstArc {
                        from,
                        to,
                        ilabel,
                        olabel,
                        weight: weight(4)?,
                    });
                }
                _ => return Err(fst_format(n + 1, "expected 2 or 5 fields")),
            }
        }
        let start = arcs.first().map_or(0, |a| a.from);
        Ok(Self::build(
            grammar_id.to_string(),
            max_state + 1,
            start,
            finals,
            arcs,
            symbols,
        ))
    }
}

/// Builds the epsilon automaton for the grammar's public rules, optionally
/// adding the single-word silence sentence.
///
/// The top level is an alternation over the alternatives of every public rule
/// (plus silence), so silence competes with each top-level choice on equal
/// footing.
pub fn build_fsm(ast: &GrammarAst, silence: bool) -> Fsm {
    let mut top: Vec<&Expr> = Vec::new();
    for rule in ast.public_rules() {
        match &rule.expr {
            Expr::Alternation(branches) => top.extend(branches.iter()),
            other => top.push(other),
        }
    }
    let sil = Expr::Token(SILENCE.to_string());
    if silence {
        top.push(&sil);
    }

    let mut b = FsmBuilder {
        ast,
        num_states: 1,
        arcs: Vec::new(),
    };
    let end = if top.len() == 1 {
        b.expr(top[0], 0)
    } else {
        b.alternation(&top, 0)
    };
    Fsm {
        num_states: b.num_states,
        start: 0,
        finals: [end].into_iter().collect(),
        arcs: b.arcs,
    }
}

struct FsmBuilder<'a> {
    ast: &'a GrammarAst,
    num_states: usize,
    arcs: Vec<FsmArc>,
}

impl FsmBuilder<'_> {
    fn state(&mut self) -> StateId {
        self.num_states += 1;
        self.num_states - 1
    }

    fn arc(&mut self, from: StateId, to: StateId, label: Option<String>, weight: f64) {
        self.arcs.push(FsmArc {
            from,
            to,
            label,
            weight,
        });
    }

    fn alternation(&mut self, branches: &[&Expr], from: StateId) -> StateId {
        let cost = (branches.len() as f64).ln();
        let end = self.state();
        for branch in branches {
            let entry = self.state();
            self.arc(from, entry, None, cost);
            let exit = self.expr(branch, entry);
            self.arc(exit, end, None, 0.0);
        }
        end
    }

    fn expr(&mut self, expr: &Expr, from: StateId) -> StateId {
        match expr {
            Expr::Token(w) => {
                let to = self.state();
                self.arc(from, to, Some(w.clone()), 0.0);
                to
            }
            Expr::RuleRef(name) => {
                let rule = self.ast.rule(name).expect("validated grammar");
                self.expr(&rule.expr, from)
            }
            Expr::Sequence(items) => items.iter().fold(from, |s, e| self.expr(e, s)),
            Expr::Alternation(branches) => {
                let refs: Vec<&Expr> = branches.iter().collect();
                self.alternation(&refs, from)
            }
            Expr::Optional(inner) => {
                // Two-way choice between the inner expression and nothing.
                let cost = 2f64.ln();
                let end = self.state();
                let entry = self.state();
                self.arc(from, entry, None, cost);
                let exit = self.expr(inner, entry);
                self.arc(exit, end, None, 0.0);
                self.arc(from, end, None, cost);
                end
            }
        }
    }
}

/// Removes epsilon arcs (tropical shortest distance over the acyclic epsilon
/// graph), trims dead states and renumbers states breadth-first from start.
pub fn remove_epsilons(fsm: &Fsm, grammar_id: &str) -> GrammarFst {
    let n = fsm.num_states;
    let mut eps_out: Vec<Vec<(StateId, f64)>> = vec![Vec::new(); n];
    let mut word_out: Vec<Vec<(StateId, &str, f64)>> = vec![Vec::new(); n];
    for a in &fsm.arcs {
        match &a.label {
            None => eps_out[a.from].push((a.to, a.weight)),
            Some(w) => word_out[a.from].push((a.to, w.as_str(), a.weight)),
        }
    }

    // Epsilon closure with shortest distances, memoised over the DAG.
    fn closure(
        s: StateId,
        eps_out: &[Vec<(StateId, f64)>],
        memo: &mut Vec<Option<BTreeMap<StateId, f64>>>,
    ) -> BTreeMap<StateId, f64> {
        if let Some(c) = &memo[s] {
            return c.clone();
        }
        let mut c = BTreeMap::new();
        c.insert(s, 0.0);
        for &(t, w) in &eps_out[s] {
            for (q, d) in closure(t, eps_out, memo) {
                let e = c.entry(q).or_insert(f64::INFINITY);
                if w + d < *e {
                    *e = w + d;
                }
            }
        }
        memo[s] = Some(c.clone());
        c
    }
    let mut memo = vec![None; n];

    let symbols = SymbolTable::from_words(
        fsm.arcs.iter().filter_map(|a| a.label.as_deref()),
    );

    // Explore from start; only the start state and word-arc targets survive.
    let mut new_id: BTreeMap<StateId, StateId> = BTreeMap::new();
    let mut queue = VecDeque::new();
    new_id.insert(fsm.start, 0);
    queue.push_back(fsm.start);
    let mut arcs = Vec::new();
    let mut finals = BTreeMap::new();
    while let Some(s) = queue.pop_front() {
        let from = new_id[&s];
        let cl = closure(s, &eps_out, &mut memo);
        let mut final_weight: Option<f64> = None;
        for (&q, &d) in &cl {
            if fsm.finals.contains(&q) {
                final_weight = Some(final_weight.map_or(d, |f: f64| f.min(d)));
            }
            for &(t, word, w) in &word_out[q] {
                let next = new_id.len();
                let to = *new_id.entry(t).or_insert_with(|| {
                    queue.push_back(t);
                    next
                });
                let id = symbols.id(word).expect("symbol collected above");
                arcs.push(FstArc {
                    from,
                    to,
                    ilabel: id,
                    olabel: id,
                    weight: d + w,
                });
            }
        }
        if let Some(f) = final_weight {
            finals.insert(from, f);
        }
    }

    // Co-accessibility trim: drop states that cannot reach a final state.
    let count = new_id.len();
    let mut alive = vec![false; count];
    for &f in finals.keys() {
        alive[f] = true;
    }
    let mut changed = true;
    while changed {
        changed = false;
        for a in &arcs {
            if alive[a.to] && !alive[a.from] {
                alive[a.from] = true;
                changed = true;
            }
        }
    }
    let keep: Vec<StateId> = (0..count).filter(|&s| alive[s]).collect();
    let remap: BTreeMap<StateId, StateId> =
        keep.iter().enumerate().map(|(new, &old)| (old, new)).collect();
    let arcs: Vec<FstArc> = arcs
        .into_iter()
        .filter(|a| alive[a.from] && alive[a.to])
        .map(|a| FstArc {
            from: remap[&a.from],
            to: remap[&a.to],
            ..a
        })
        .collect();
    let finals = finals
        .into_iter()
        .filter(|(s, _)| alive[*s])
        .map(|(s, w)| (remap[&s], w))
        .collect();

    GrammarFst::build(grammar_id.to_string(), keep.len().max(1), 0, finals, arcs, symbols)
}

/// AST → FSM → epsilon-free weighted FST.
///
/// Branch weights are uniform: each alternation branch costs
/// `ln(branch count)`, an optional costs `ln 2` either way. With `silence`
/// the language additionally contains the single-word sentence `!SIL`.
pub fn compile_grammar(ast: &GrammarAst, silence: bool) -> Result<GrammarFst, GrammarError> {
    ast.validate()?;
    let fsm = build_fsm(ast, silence);
    Ok(remove_epsilons(&fsm, &ast.name))
}

/// Every accepted sentence (words joined by single spaces), failing once the
/// language grows beyond `limit` distinct sentences.
pub fn enumerate_language(
    fst: &GrammarFst,
    limit: usize,
) -> Result<BTreeSet<String>, GrammarError> {
    let mut out = BTreeSet::new();
    let mut words = Vec::new();
    let mut on_path = vec![false; fst.num_states()];
    fst.walk(fst.start(), 0.0, &mut words, &mut on_path, &mut |w, _| {
        out.insert(w.join(" "));
        if out.len() > limit {
            return Err(GrammarError::LimitExceeded(limit));
        }
        Ok(())
    })?;
    Ok(out)
}
