use std::collections::{BTreeSet, HashMap};
use std::fmt;

use super::GrammarError;

/// Right-hand side of a grammar rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Token(String),
    RuleRef(String),
    Sequence(Vec<Expr>),
    Alternation(Vec<Expr>),
    Optional(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub name: String,
    pub public: bool,
    pub expr: Expr,
}

/// Parsed and validated JSGF-subset grammar.
///
/// Rules keep their source order. Every rule reference resolves and the rule
/// graph is acyclic, so the language is finite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrammarAst {
    pub name: String,
    pub rules: Vec<Rule>,
}

impl GrammarAst {
    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }

    pub fn public_rules(&self) -> impl Iterator<Item = &Rule> {
        self.rules.iter().filter(|r| r.public)
    }

    /// Checks the structural invariants: at least one public rule, unique
    /// names, resolvable references and no recursion.
    pub fn validate(&self) -> Result<(), GrammarError> {
        let mut seen = BTreeSet::new();
        for rule in &self.rules {
            if !seen.insert(rule.name.as_str()) {
                return Err(GrammarError::DuplicateRule(rule.name.clone()));
            }
        }
        if self.public_rules().next().is_none() {
            return Err(GrammarError::NoPublicRule);
        }
        for rule in &self.rules {
            let mut refs = Vec::new();
            collect_refs(&rule.expr, &mut refs);
            for r in refs {
                if self.rule(r).is_none() {
                    return Err(GrammarError::UnresolvedRule {
                        rule: rule.name.clone(),
                        missing: r.to_string(),
                    });
                }
            }
        }
        // Depth-first cycle check over the rule reference graph.
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Active,
            Done,
        }
        fn visit<'a>(
            ast: &'a GrammarAst,
            name: &'a str,
            marks: &mut HashMap<&'a str, Mark>,
        ) -> Result<(), GrammarError> {
            match marks.get(name) {
                Some(Mark::Done) => return Ok(()),
                Some(Mark::Active) => return Err(GrammarError::RecursiveRule(name.to_string())),
                None => {}
            }
            marks.insert(name, Mark::Active);
            let rule = ast.rule(name).expect("references resolved above");
            let mut refs = Vec::new();
            collect_refs(&rule.expr, &mut refs);
            for r in refs {
                visit(ast, r, marks)?;
            }
            marks.insert(name, Mark::Done);
            Ok(())
        }
        let mut marks = HashMap::new();
        for rule in &self.rules {
            visit(self, &rule.name, &mut marks)?;
        }
        Ok(())
    }
}

fn collect_refs<'a>(expr: &'a Expr, out: &mut Vec<&'a str>) {
    match expr {
        Expr::Token(_) => {}
        Expr::RuleRef(name) => out.push(name),
        Expr::Sequence(items) | Expr::Alternation(items) => {
            items.iter().for_each(|e| collect_refs(e, out))
        }
        Expr::Optional(inner) => collect_refs(inner, out),
    }
}

/// Parses JSGF text into a validated [`GrammarAst`].
///
/// Supported: the `#JSGF` header, `grammar` declaration, `public` and private
/// rules, sequences, `|` alternation, `( )` grouping, `[ ]` optionals and
/// `<rule>` references. Words are lowercased.
pub fn parse_jsgf(text: &str) -> Result<GrammarAst, GrammarError> {
    let tokens = lex(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        eof: eof_position(text),
    };
    let ast = parser.grammar()?;
    ast.validate()?;
    Ok(ast)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Header(String),
    Word(String),
    RuleName(String),
    Semi,
    Equals,
    Bar,
    LParen,
    RParen,
    LBracket,
    RBracket,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Header(h) => write!(f, "header '{h}'"),
            Tok::Word(w) => write!(f, "'{w}'"),
            Tok::RuleName(r) => write!(f, "<{r}>"),
            Tok::Semi => f.write_str("';'"),
            Tok::Equals => f.write_str("'='"),
            Tok::Bar => f.write_str("'|'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::LBracket => f.write_str("'['"),
            Tok::RBracket => f.write_str("']'"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Pos {
    line: usize,
    column: usize,
}

fn syntax(pos: Pos, message: impl Into<String>) -> GrammarError {
    GrammarError::Syntax {
        line: pos.line,
        column: pos.column,
        message: message.into(),
    }
}

fn eof_position(text: &str) -> Pos {
    // Report end-of-input errors on the last non-blank line.
    let trimmed = text.trim_end();
    let line = trimmed.lines().count().max(1);
    let column = trimmed.lines().last().map_or(0, |l| l.chars().count()) + 1;
    Pos { line, column }
}

const SPECIAL: &[char] = &[';', '=', '|', '(', ')', '[', ']', '<', '>'];
const UNSUPPORTED: &[(char, &str)] = &[
    ('*', "Kleene star"),
    ('+', "Kleene plus"),
    ('{', "tags"),
    ('}', "tags"),
    ('/', "weights"),
    ('"', "quoted tokens"),
];

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, GrammarError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column: col };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            bump!();
            bump!();
            loop {
                if i >= chars.len() {
                    return Err(syntax(pos, "unterminated comment"));
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
            continue;
        }
        if c == '#' {
            let mut header = String::new();
            while i < chars.len() && chars[i] != ';' {
                if chars[i] == '\n' {
                    return Err(syntax(pos, "header must end with ';'"));
                }
                header.push(chars[i]);
                bump!();
            }
            if i >= chars.len() {
                return Err(syntax(pos, "header must end with ';'"));
            }
            bump!();
            out.push((Tok::Header(header), pos));
            continue;
        }
        let simple = match c {
            ';' => Some(Tok::Semi),
            '=' => Some(Tok::Equals),
            '|' => Some(Tok::Bar),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            _ => None,
        };
        if let Some(tok) = simple {
            bump!();
            out.push((tok, pos));
            continue;
        }
        if c == '<' {
            bump!();
            let mut name = String::new();
            while i < chars.len() && chars[i] != '>' {
                if chars[i].is_whitespace() {
                    return Err(syntax(pos, "rule name contains whitespace"));
                }
                name.push(chars[i]);
                bump!();
            }
            if i >= chars.len() {
                return Err(syntax(pos, "unterminated rule name"));
            }
            bump!();
            if name.is_empty() {
                return Err(syntax(pos, "empty rule name"));
            }
            if name.contains('.') {
                return Err(syntax(pos, "imports are not supported"));
            }
            out.push((Tok::RuleName(name), pos));
            continue;
        }
        if let Some((_, what)) = UNSUPPORTED.iter().find(|(u, _)| *u == c) {
            return Err(syntax(pos, format!("unsupported JSGF feature: {what}")));
        }
        if c == '>' {
            return Err(syntax(pos, "unexpected '>'"));
        }
        let mut word = String::new();
        while i < chars.len()
            && !chars[i].is_whitespace()
            && !SPECIAL.contains(&chars[i])
            && !UNSUPPORTED.iter().any(|(u, _)| *u == chars[i])
        {
            word.push(chars[i]);
            bump!();
        }
        out.push((Tok::Word(word), pos));
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(Tok, Pos)>,
    pos: usize,
    eof: Pos,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> Pos {
        self.tokens.get(self.pos).map_or(self.eof, |(_, p)| *p)
    }

    fn next(&mut self) -> Option<(Tok, Pos)> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), GrammarError> {
        let at = self.here();
        match self.next() {
            Some((t, _)) if t == want => Ok(()),
            Some((t, p)) => Err(syntax(p, format!("expected {want}, found {t}"))),
            None => Err(syntax(at, format!("expected {want}, found end of input"))),
        }
    }

    fn grammar(&mut self) -> Result<GrammarAst, GrammarError> {
        let at = self.here();
        match self.next() {
            Some((Tok::Header(h), p)) => {
                let mut parts = h.split_whitespace();
                if parts.next() != Some("#JSGF") {
                    return Err(syntax(p, "header must start with '#JSGF'"));
                }
                match parts.next() {
                    Some(v) if v.starts_with('V') => {}
                    _ => return Err(syntax(p, "header is missing the version, e.g. V1.0")),
                }
            }
            _ => return Err(syntax(at, "missing '#JSGF V1.0;' header")),
        }

        let at = self.here();
        match self.next() {
            Some((Tok::Word(w), _)) if w == "grammar" => {}
            Some((t, p)) => return Err(syntax(p, format!("expected 'grammar', found {t}"))),
            None => return Err(syntax(at, "expected 'grammar' declaration")),
        }
        let at = self.here();
        let name = match self.next() {
            Some((Tok::Word(w), _)) => w,
            Some((t, p)) => return Err(syntax(p, format!("expected grammar name, found {t}"))),
            None => return Err(syntax(at, "expected grammar name")),
        };
        self.expect(Tok::Semi)?;

        let mut rules = Vec::new();
        while self.peek().is_some() {
            rules.push(self.rule()?);
        }
        Ok(GrammarAst { name, rules })
    }

    fn rule(&mut self) -> Result<Rule, GrammarError> {
        let mut public = false;
        if let Some(Tok::Word(w)) = self.peek() {
            if w == "import" {
                return Err(syntax(self.here(), "imports are not supported"));
            }
            if w == "public" {
                public = true;
                self.pos += 1;
            }
        }
        let at = self.here();
        let name = match self.next() {
            Some((Tok::RuleName(n), _)) => n,
            Some((t, p)) => return Err(syntax(p, format!("expected rule name, found {t}"))),
            None => return Err(syntax(at, "expected rule name")),
        };
        self.expect(Tok::Equals)?;
        let expr = self.alternation()?;
        self.expect(Tok::Semi)?;
        Ok(Rule { name, public, expr })
    }

    fn alternation(&mut self) -> Result<Expr, GrammarError> {
        let mut branches = vec![self.sequence()?];
        while self.peek() == Some(&Tok::Bar) {
            self.pos += 1;
            branches.push(self.sequence()?);
        }
        Ok(if branches.len() == 1 {
            branches.pop().unwrap()
        } else {
            Expr::Alternation(branches)
        })
    }

    fn sequence(&mut self) -> Result<Expr, GrammarError> {
        let mut items = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Word(_)) | Some(Tok::RuleName(_)) | Some(Tok::LParen)
                | Some(Tok::LBracket) => items.push(self.item()?),
                _ => break,
            }
        }
        match items.len() {
            0 => {
                let at = self.here();
                let found = self
                    .peek()
                    .map_or_else(|| "end of input".to_string(), |t| t.to_string());
                Err(syntax(at, format!("expected a word, rule or group, found {found}")))
            }
            1 => Ok(items.pop().unwrap()),
            _ => Ok(Expr::Sequence(items)),
        }
    }

    fn item(&mut self) -> Result<Expr, GrammarError> {
        match self.next() {
            Some((Tok::Word(w), _)) => Ok(Expr::Token(w.to_lowercase())),
            Some((Tok::RuleName(r), _)) => Ok(Expr::RuleRef(r)),
            Some((Tok::LParen, _)) => {
                let inner = self.alternation()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Some((Tok::LBracket, _)) => {
                let inner = self.alternation()?;
                self.expect(Tok::RBracket)?;
                Ok(Expr::Optional(Box::new(inner)))
            }
            _ => unreachable!("sequence() only calls item() on item starts"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &Expr, wrap: bool) -> fmt::Result {
            if wrap {
                write!(f, "( {e} )")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Token(w) => f.write_str(w),
            Expr::RuleRef(r) => write!(f, "<{r}>"),
            Expr::Optional(inner) => write!(f, "[ {inner} ]"),
            Expr::Sequence(items) => {
                for (i, e) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    let wrap = matches!(e, Expr::Sequence(_) | Expr::Alternation(_));
                    child(f, e, wrap)?;
                }
                Ok(())
            }
            Expr::Alternation(branches) => {
                for (i, e) in branches.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    child(f, e, matches!(e, Expr::Alternation(_)))?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for GrammarAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "#JSGF V1.0;")?;
        writeln!(f, "grammar {};", self.name)?;
        for rule in &self.rules {
            let vis = if rule.public { "public " } else { "" };
            writeln!(f, "{vis}<{}> = {};", rule.name, rule.expr)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> Vec<Expr> {
        s.split_whitespace().map(|w| Expr::Token(w.into())).collect()
    }

    #[test]
    fn single_phrase_rule() {
        let ast =
            parse_jsgf("#JSGF V1.0; grammar g; public <s> = hello zeeno i am ready to start;")
                .unwrap();
        assert_eq!(ast.name, "g");
        assert_eq!(ast.rules.len(), 1);
        assert!(ast.rules[0].public);
        assert_eq!(
            ast.rules[0].expr,
            Expr::Sequence(words("hello zeeno i am ready to start"))
        );
    }

    #[test]
    fn alternation_inside_sequence() {
        let ast = parse_jsgf("#JSGF V1.0;\ngrammar g;\npublic <c> = put your (left|right) arm up;")
            .unwrap();
        let Expr::Sequence(items) = &ast.rules[0].expr else {
            panic!("expected a sequence");
        };
        assert_eq!(items.len(), 5);
        assert_eq!(items[2], Expr::Alternation(words("left right")));
    }

    #[test]
    fn words_are_lowercased() {
        let ast = parse_jsgf("#JSGF V1.0; grammar g; public <s> = Hello ZEENO;").unwrap();
        assert_eq!(ast.rules[0].expr, Expr::Sequence(words("hello zeeno")));
    }

    #[test]
    fn missing_semicolon_names_line() {
        let err = parse_jsgf("#JSGF V1.0;\ngrammar g;\npublic <s> = hello zeeno\n").unwrap_err();
        match err {
            GrammarError::Syntax { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("';'"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_is_required() {
        let err = parse_jsgf("grammar g; public <s> = a;").unwrap_err();
        assert!(matches!(err, GrammarError::Syntax { line: 1, .. }));
    }

    #[test]
    fn unresolved_and_recursive_rules() {
        let err = parse_jsgf("#JSGF V1.0; grammar g; public <s> = a <x>;").unwrap_err();
        assert_eq!(
            err,
            GrammarError::UnresolvedRule {
                rule: "s".into(),
                missing: "x".into()
            }
        );
        let err =
            parse_jsgf("#JSGF V1.0; grammar g; public <s> = a <t>; <t> = b | c <s>;").unwrap_err();
        assert!(matches!(err, GrammarError::RecursiveRule(_)));
        let err = parse_jsgf("#JSGF V1.0; grammar g; public <s> = a [<s>];").unwrap_err();
        assert!(matches!(err, GrammarError::RecursiveRule(_)));
    }

    #[test]
    fn rejects_empty_and_private_only_grammars() {
        assert!(matches!(
            parse_jsgf("#JSGF V1.0; grammar g; public <s> = ;"),
            Err(GrammarError::Syntax { .. })
        ));
        assert!(matches!(
            parse_jsgf("#JSGF V1.0; grammar g; <s> = a;"),
            Err(GrammarError::NoPublicRule)
        ));
        assert!(matches!(
            parse_jsgf("#JSGF V1.0; grammar g; public <s> = a | ;"),
            Err(GrammarError::Syntax { .. })
        ));
    }

    #[test]
    fn unsupported_features_are_reported() {
        for src in [
            "#JSGF V1.0; grammar g; public <s> = a*;",
            "#JSGF V1.0; grammar g; public <s> = a {tag};",
            "#JSGF V1.0; grammar g; public <s> = /0.5/ a | b;",
            "#JSGF V1.0; grammar g; import <other.rule>; public <s> = a;",
        ] {
            let err = parse_jsgf(src).unwrap_err();
            assert!(matches!(err, GrammarError::Syntax { .. }), "{src}: {err:?}");
        }
    }

    #[test]
    fn comments_are_skipped() {
        let src = "#JSGF V1.0;\n// comment\ngrammar g; /* block\n comment */ public <s> = a [b] c;";
        let ast = parse_jsgf(src).unwrap();
        assert_eq!(
            ast.rules[0].expr,
            Expr::Sequence(vec![
                Expr::Token("a".into()),
                Expr::Optional(Box::new(Expr::Token("b".into()))),
                Expr::Token("c".into()),
            ])
        );
    }

    #[test]
    fn pretty_print_reparses() {
        let src = "#JSGF V1.0; grammar g; public <s> = (a b | c) [d | (e | f)] <t>; <t> = x (y z) | w;";
        let ast = parse_jsgf(src).unwrap();
        let again = parse_jsgf(&ast.to_string()).unwrap();
        assert_eq!(ast, again);
    }
}
