//! The Prolog-like rule language.
//!
//! ```text
//! %% source: directive_2010_64
//! %% jurisdiction: European Union
//! %% article: art3_2
//! %% title: Article 3.2
//! essential_document(art3_2, P, documents) :- person_document(P, charge).
//! ```
//!
//! `%%` lines carry metadata for the clauses that follow them. `source`
//! stays in effect until the next `source` line (and clears the article);
//! `article` stays in effect until the next `article` line (and clears the
//! title). Any other `%` starts a comment running to the end of the line.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::kb::{CaseFacts, KbError, KnowledgeBase, LegalSource};
use crate::term::{is_functor_name, Clause, Literal, Term};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Var(String),
    LParen,
    RParen,
    Comma,
    Neck,
    Dot,
    Meta(String, String),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> KbError {
    KbError::Syntax { line, column, message: message.into() }
}

fn lex(text: &str) -> Result<Vec<Token>, KbError> {
    let mut out = Vec::new();
    for (li, raw_line) in text.lines().enumerate() {
        let line = li + 1;
        let trimmed = raw_line.trim_start();
        if let Some(meta) = trimmed.strip_prefix("%%") {
            let column = raw_line.len() - trimmed.len() + 1;
            let (key, value) =
                meta.split_once(':').ok_or_else(|| syntax(line, column, "metadata line needs `key: value`"))?;
            out.push(Token { tok: Tok::Meta(key.trim().to_string(), value.trim().to_string()), line, column });
            continue;
        }
        let chars: Vec<(usize, char)> = raw_line.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (_, c) = chars[i];
            let column = i + 1;
            let simple = match c {
                '%' => break,
                c if c.is_whitespace() => {
                    i += 1;
                    continue;
                }
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                ',' => Some(Tok::Comma),
                '.' => Some(Tok::Dot),
                ':' if chars.get(i + 1).map(|p| p.1) == Some('-') => {
                    i += 1;
                    Some(Tok::Neck)
                }
                _ => None,
            };
            if let Some(tok) = simple {
                out.push(Token { tok, line, column });
                i += 1;
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().map(|p| p.1).collect();
                let tok = if c.is_ascii_lowercase() { Tok::Name(word) } else { Tok::Var(word) };
                out.push(Token { tok, line, column });
                continue;
            }
            return Err(syntax(line, column, format!("unexpected character {c:?}")));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof: (usize, usize),
}

enum Item {
    Meta { key: String, value: String, line: usize, column: usize },
    Clause { clause: Clause, line: usize },
}

impl Parser {
    fn new(text: &str) -> Result<Self, KbError> {
        let toks = lex(text)?;
        let last_line = text.lines().count().max(1);
        let last_col = text.lines().last().map_or(0, str::len) + 1;
        Ok(Parser { toks, pos: 0, eof: (last_line, last_col) })
    }

    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map_or(self.eof, |t| (t.line, t.column))
    }

    fn err(&self, message: impl Into<String>) -> KbError {
        let (l, c) = self.here();
        syntax(l, c, message)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), KbError> {
        match self.peek() {
            Some(t) if t.tok == tok => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn items(&mut self) -> Result<Vec<Item>, KbError> {
        let mut items = Vec::new();
        while let Some(t) = self.peek() {
            if let Tok::Meta(key, value) = &t.tok {
                items.push(Item::Meta { key: key.clone(), value: value.clone(), line: t.line, column: t.column });
                self.pos += 1;
                continue;
            }
            let line = t.line;
            let clause = self.clause()?;
            items.push(Item::Clause { clause, line });
        }
        Ok(items)
    }

    fn clause(&mut self) -> Result<Clause, KbError> {
        let (hl, hc) = self.here();
        let head = self.term()?;
        if head.is_var() {
            return Err(syntax(hl, hc, "clause head must not be a variable"));
        }
        if head.functor() == Some("not") {
            return Err(KbError::NegatedHead { clause: format!("{head}") });
        }
        let mut body = Vec::new();
        if matches!(self.peek(), Some(Token { tok: Tok::Neck, .. })) {
            self.pos += 1;
            loop {
                body.push(self.literal()?);
                match self.peek().map(|t| &t.tok) {
                    Some(Tok::Comma) => self.pos += 1,
                    _ => break,
                }
            }
        }
        self.expect(Tok::Dot, "`.` at end of clause")?;
        Ok(Clause::new(head, body))
    }

    fn literal(&mut self) -> Result<Literal, KbError> {
        let (l, c) = self.here();
        let term = self.term()?;
        match term {
            Term::App { functor, mut args } if functor == "not" => {
                if args.len() != 1 {
                    return Err(syntax(l, c, "not/1 takes exactly one goal"));
                }
                let inner = args.pop().unwrap_or_else(|| Term::atom("true"));
                if inner.is_var() || inner.functor() == Some("not") {
                    return Err(syntax(l, c, "not/1 must wrap a positive goal"));
                }
                Ok(Literal::neg(inner))
            }
            Term::Var(_) => Err(syntax(l, c, "a body literal must not be a variable")),
            term => Ok(Literal::pos(term)),
        }
    }

    fn term(&mut self) -> Result<Term, KbError> {
        let Some(t) = self.peek().cloned() else {
            return Err(self.err("unexpected end of input, expected a term"));
        };
        self.pos += 1;
        match t.tok {
            Tok::Var(v) => Ok(Term::Var(v)),
            Tok::Name(name) => {
                if !matches!(self.peek(), Some(Token { tok: Tok::LParen, .. })) {
                    return Ok(Term::atom(name));
                }
                self.pos += 1;
                let mut args = Vec::new();
                loop {
                    args.push(self.term()?);
                    match self.peek().map(|t| &t.tok) {
                        Some(Tok::Comma) => self.pos += 1,
                        Some(Tok::RParen) => {
                            self.pos += 1;
                            break;
                        }
                        _ => return Err(self.err("expected `,` or `)`")),
                    }
                }
                Ok(Term::app(name, args))
            }
            _ => Err(syntax(t.line, t.column, "expected a term")),
        }
    }
}

/// Parses a rule file into a validated knowledge base.
pub fn parse_rules(text: &str) -> Result<KnowledgeBase, KbError> {
    let items = Parser::new(text)?.items()?;
    let mut sources: Vec<LegalSource> = Vec::new();
    let mut source: Option<String> = None;
    let mut article: Option<String> = None;
    let mut title: Option<String> = None;
    let mut clauses = Vec::new();
    for item in items {
        match item {
            Item::Meta { key, value, line, column } => match key.as_str() {
                "source" => {
                    if !is_functor_name(&value) {
                        return Err(syntax(line, column, format!("invalid source id {value:?}")));
                    }
                    if !sources.iter().any(|s| s.id == value) {
                        sources.push(LegalSource::new(value.clone(), ""));
                    }
                    source = Some(value);
                    article = None;
                    title = None;
                }
                "jurisdiction" => {
                    let Some(id) = &source else {
                        return Err(syntax(line, column, "jurisdiction before any source"));
                    };
                    let entry = sources.iter_mut().find(|s| &s.id == id);
                    if let Some(s) = entry {
                        if !s.jurisdiction.is_empty() && s.jurisdiction != value {
                            return Err(KbError::ConflictingSource { id: id.clone() });
                        }
                        s.jurisdiction = value;
                    }
                }
                "article" => {
                    if !is_functor_name(&value) {
                        return Err(syntax(line, column, format!("invalid article id {value:?}")));
                    }
                    article = Some(value);
                    title = None;
                }
                "title" => {
                    if article.is_none() {
                        return Err(syntax(line, column, "title before any article"));
                    }
                    if value.is_empty() {
                        return Err(syntax(line, column, "empty title"));
                    }
                    title = Some(value);
                }
                other => {
                    return Err(syntax(line, column, format!("unknown metadata key {other:?}")));
                }
            },
            Item::Clause { mut clause, line } => {
                if let Some(v) = clause.unsafe_variable() {
                    return Err(KbError::UnsafeVariable {
                        variable: v.to_string(),
                        clause: format!("{clause} (line {line})"),
                    });
                }
                clause.source = source.clone();
                clause.article = article.clone();
                clause.title = title.clone();
                clauses.push(clause);
            }
        }
    }
    KnowledgeBase::new(clauses, sources)
}

/// Parses a facts file: ground terms, each terminated by `.`.
pub fn parse_facts(text: &str) -> Result<CaseFacts, KbError> {
    let items = Parser::new(text)?.items()?;
    let mut facts = Vec::new();
    for item in items {
        match item {
            Item::Meta { line, column, .. } => {
                return Err(syntax(line, column, "metadata is not allowed in a facts file"));
            }
            Item::Clause { clause, line } => {
                if !clause.body.is_empty() {
                    return Err(syntax(line, 1, "facts cannot have a body"));
                }
                if !clause.head.is_ground() {
                    return Err(KbError::NonGroundFact { line, fact: clause.head.to_string() });
                }
                facts.push(clause.head);
            }
        }
    }
    CaseFacts::new(facts)
}

/// Parses a single term, tolerating whitespace between tokens.
pub fn parse_term(text: &str) -> Result<Term, KbError> {
    let mut p = Parser::new(text)?;
    if p.toks.iter().any(|t| matches!(t.tok, Tok::Meta(..))) {
        return Err(syntax(1, 1, "expected a term"));
    }
    let t = p.term()?;
    if p.peek().is_some() {
        return Err(p.err("trailing input after term"));
    }
    Ok(t)
}

/// Renders a knowledge base in the rule language; `parse_rules` of the
/// result yields an equal knowledge base. Metadata is sticky in the text
/// form, so a clause without a source cannot follow one with a source;
/// `parse_rules` never produces such a knowledge base.
pub fn serialize_rules(kb: &KnowledgeBase) -> String {
    let mut out = String::new();
    let jurisdiction: BTreeMap<&str, &str> = kb.sources().map(|s| (s.id.as_str(), s.jurisdiction.as_str())).collect();
    let mut declared: Vec<&str> = Vec::new();
    let mut source: Option<&str> = None;
    let mut article: Option<&str> = None;
    let mut title: Option<&str> = None;

    let declare = |out: &mut String, id: &str| {
        let _ = writeln!(out, "%% source: {id}");
        if let Some(j) = jurisdiction.get(id).filter(|j| !j.is_empty()) {
            let _ = writeln!(out, "%% jurisdiction: {j}");
        }
    };

    for c in kb.clauses() {
        let c_source = c.source.as_deref();
        let c_article = c.article.as_deref();
        let c_title = c.title.as_deref();
        // Only a source line clears the article, so dropping back to no
        // article repeats it.
        if c_source != source || (c_article.is_none() && article.is_some()) {
            if let Some(id) = c_source {
                if !out.is_empty() {
                    out.push('\n');
                }
                if declared.contains(&id) {
                    let _ = writeln!(out, "%% source: {id}");
                } else {
                    declare(&mut out, id);
                    declared.push(id);
                }
            }
            source = c_source;
            article = None;
            title = None;
        }
        if c_article != article || c_title != title {
            if let Some(a) = c_article {
                let _ = writeln!(out, "%% article: {a}");
                if let Some(t) = c_title {
                    let _ = writeln!(out, "%% title: {t}");
                }
            }
            article = c_article;
            title = c_title;
        }
        let _ = writeln!(out, "{c}");
    }
    // Sources without clauses go last, where no clause can pick them up.
    for s in kb.sources() {
        if !declared.contains(&s.id.as_str()) {
            if !out.is_empty() {
                out.push('\n');
            }
            declare(&mut out, &s.id);
        }
    }
    out
}
