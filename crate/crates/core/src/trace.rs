//! The textual trace of a rights bundle.
//!
//! ```text
//! directive_2010_64 - art3_1
//!
//! Article 3
//! Option: essentialDocument
//!
//! Explanation:
//!
//! has_right(right_to_translation, dir, art3_1, mario, essentialDocument)
//!     has_right(art3_1, mario, right_to_translation, essentialDocument)
//!         proceeding_language(mario, polish) [FACT]
//!         ...
//!
//! Auxiliaries:
//!
//! art4 - cost - state
//!
//! Article 4
//! Explanation:
//!
//! auxiliary_right(art4, art3_1, mario, cost, state)
//!     auxiliary_right(art4, mario, cost, state)
//! ```
//!
//! A `Properties:` part follows the auxiliaries with the same section
//! layout. Empty parts are left out. Trees are indented by four spaces per
//! level, case facts carry a ` [FACT]` suffix and negated goals print as
//! `not(...)`. Lines end with `\n`, the last one included, and never carry
//! trailing whitespace.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::dsl::parse_term;
use crate::engine::{Justification, ProofTree};
use crate::kb::KnowledgeBase;
use crate::rights::RightsBundle;
use crate::term::{is_functor_name, Term};

const INDENT: &str = "    ";
const FACT_MARK: &str = " [FACT]";
const AUXILIARIES: &str = "Auxiliaries:";
const PROPERTIES: &str = "Properties:";
const EXPLANATION: &str = "Explanation:";
const OPTION: &str = "Option: ";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("line {line}: indentation must be a multiple of four spaces, one level at a time")]
    BadIndentation { line: usize },
    #[error("line {line}: unknown section header {header:?}")]
    UnknownSection { line: usize, header: String },
    #[error("line {line}: malformed term {text:?}")]
    MalformedTerm { line: usize, text: String },
    #[error("line {line}: expected {expected}, found {found:?}")]
    Unexpected { line: usize, expected: &'static str, found: String },
    #[error("no display title for article `{0}`")]
    MissingTitle(String),
    #[error("invalid trace bundle: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeMark {
    Rule,
    Fact,
    Naf,
}

/// One line of a proof tree and the lines nested under it. For `Naf`
/// nodes `term` is the goal inside `not(...)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceNode {
    pub term: Term,
    pub mark: NodeMark,
    pub children: Vec<TraceNode>,
}

impl TraceNode {
    pub fn rule(term: Term, children: Vec<TraceNode>) -> Self {
        TraceNode { term, mark: NodeMark::Rule, children }
    }

    pub fn fact(term: Term) -> Self {
        TraceNode { term, mark: NodeMark::Fact, children: Vec::new() }
    }

    pub fn naf(term: Term) -> Self {
        TraceNode { term, mark: NodeMark::Naf, children: Vec::new() }
    }

    /// The node as printed, without indentation or the fact marker.
    pub fn text(&self) -> String {
        match self.mark {
            NodeMark::Naf => format!("not({})", self.term),
            _ => self.term.to_string(),
        }
    }

    fn from_proof(p: &ProofTree) -> Self {
        let mark = match p.justification {
            Justification::Rule { .. } => NodeMark::Rule,
            Justification::Fact => NodeMark::Fact,
            Justification::Naf => NodeMark::Naf,
        };
        TraceNode {
            term: p.literal.term.clone(),
            mark,
            children: p.children.iter().map(TraceNode::from_proof).collect(),
        }
    }

    fn render_into(&self, depth: usize, out: &mut String) {
        for _ in 0..depth {
            out.push_str(INDENT);
        }
        out.push_str(&self.text());
        if self.mark == NodeMark::Fact {
            out.push_str(FACT_MARK);
        }
        out.push('\n');
        for c in &self.children {
            c.render_into(depth + 1, out);
        }
    }

    fn validate(&self) -> Result<(), TraceError> {
        if !self.term.is_ground() || self.term.is_var() || self.term.functor() == Some("not") {
            return Err(TraceError::Invalid(format!("bad node term {}", self.term)));
        }
        if self.mark != NodeMark::Rule && !self.children.is_empty() {
            return Err(TraceError::Invalid(format!("leaf {} has children", self.text())));
        }
        self.children.iter().try_for_each(TraceNode::validate)
    }
}

/// An auxiliary-right or right-property section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceSection {
    pub article: String,
    pub kind: String,
    pub value: String,
    pub title: String,
    pub explanation: TraceNode,
}

/// The structured content of a trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceBundle {
    pub source: String,
    pub article: String,
    pub title: String,
    pub option: String,
    pub explanation: TraceNode,
    pub auxiliaries: Vec<TraceSection>,
    pub properties: Vec<TraceSection>,
}

impl TraceBundle {
    /// `<source> - <article>`, the first line of the trace.
    pub fn header(&self) -> String {
        format!("{} - {}", self.source, self.article)
    }

    /// The explanation tree of every section, main one first.
    pub fn trees(&self) -> impl Iterator<Item = &TraceNode> {
        core::iter::once(&self.explanation)
            .chain(self.auxiliaries.iter().map(|s| &s.explanation))
            .chain(self.properties.iter().map(|s| &s.explanation))
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        let ids = [&self.source, &self.article, &self.option];
        let section_ids = self.auxiliaries.iter().chain(&self.properties).flat_map(|s| [&s.article, &s.kind, &s.value]);
        if let Some(bad) = ids.into_iter().chain(section_ids).find(|id| !is_functor_name(id)) {
            return Err(TraceError::Invalid(format!("{bad:?} is not an atom")));
        }
        let titles =
            core::iter::once(&self.title).chain(self.auxiliaries.iter().chain(&self.properties).map(|s| &s.title));
        for t in titles {
            if t.is_empty() || t.contains('\n') || t.trim() != t {
                return Err(TraceError::Invalid(format!("bad title {t:?}")));
            }
        }
        self.trees().try_for_each(TraceNode::validate)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header());
        out.push_str("\n\n");
        out.push_str(&self.title);
        out.push('\n');
        out.push_str(OPTION);
        out.push_str(&self.option);
        out.push_str("\n\n");
        out.push_str(EXPLANATION);
        out.push_str("\n\n");
        self.explanation.render_into(0, &mut out);
        for (label, sections) in [(AUXILIARIES, &self.auxiliaries), (PROPERTIES, &self.properties)] {
            if sections.is_empty() {
                continue;
            }
            out.push('\n');
            out.push_str(label);
            out.push('\n');
            for s in sections {
                out.push('\n');
                out.push_str(&format!("{} - {} - {}\n\n", s.article, s.kind, s.value));
                out.push_str(&s.title);
                out.push('\n');
                out.push_str(EXPLANATION);
                out.push_str("\n\n");
                s.explanation.render_into(0, &mut out);
            }
        }
        out
    }
}

/// A trace as text together with its structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceDocument {
    pub raw_text: String,
    pub bundle: TraceBundle,
}

impl TraceDocument {
    pub fn new(bundle: TraceBundle) -> Result<Self, TraceError> {
        bundle.validate()?;
        Ok(TraceDocument { raw_text: bundle.render(), bundle })
    }

    /// `<source> - <article>`.
    pub fn id(&self) -> String {
        self.bundle.header()
    }
}

/// Renders a rights bundle, taking display titles from the knowledge base.
pub fn render_trace(bundle: &RightsBundle, kb: &KnowledgeBase) -> Result<TraceDocument, TraceError> {
    let title = |article: &str| {
        kb.title(article).map(str::to_string).ok_or_else(|| TraceError::MissingTitle(article.to_string()))
    };
    let section = |p: &ProofTree| -> Result<TraceSection, TraceError> {
        let arg = |i: usize| {
            p.term()
                .args()
                .get(i)
                .and_then(Term::as_atom)
                .map(str::to_string)
                .ok_or_else(|| TraceError::Invalid(format!("{} has no atom at position {i}", p.term())))
        };
        let article = arg(0)?;
        Ok(TraceSection {
            title: title(&article)?,
            article,
            kind: arg(3)?,
            value: arg(4)?,
            explanation: TraceNode::from_proof(p),
        })
    };
    let trace = TraceBundle {
        source: bundle.source.id.clone(),
        article: bundle.article().to_string(),
        title: title(bundle.article())?,
        option: bundle.option().to_string(),
        explanation: TraceNode::from_proof(&bundle.primary),
        auxiliaries: bundle.auxiliaries.iter().map(section).collect::<Result<_, _>>()?,
        properties: bundle.properties.iter().map(section).collect::<Result<_, _>>()?,
    };
    TraceDocument::new(trace)
}

struct Lines<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn peek(&self) -> Option<&'a str> {
        self.lines.get(self.pos).copied()
    }

    /// 1-based number of the next line.
    fn number(&self) -> usize {
        self.pos + 1
    }

    fn next(&mut self, expected: &'static str) -> Result<&'a str, TraceError> {
        let line = self.peek().ok_or(TraceError::Unexpected {
            line: self.number(),
            expected,
            found: String::from("end of input"),
        })?;
        self.pos += 1;
        Ok(line)
    }

    fn exact(&mut self, want: &'static str, expected: &'static str) -> Result<(), TraceError> {
        let line = self.number();
        let got = self.next(expected)?;
        if got != want {
            return Err(TraceError::Unexpected { line, expected, found: got.to_string() });
        }
        Ok(())
    }

    fn blank(&mut self) -> Result<(), TraceError> {
        self.exact("", "a blank line")
    }
}

fn split_ids<const N: usize>(line: &str) -> Option<[String; N]> {
    let parts: Vec<&str> = line.split(" - ").collect();
    if parts.len() != N || !parts.iter().all(|p| is_functor_name(p)) {
        return None;
    }
    Some(core::array::from_fn(|i| parts[i].to_string()))
}

fn parse_node_text(line: usize, text: &str) -> Result<(Term, NodeMark), TraceError> {
    let malformed = || TraceError::MalformedTerm { line, text: text.to_string() };
    let (body, fact) = match text.strip_suffix(FACT_MARK) {
        Some(b) => (b, true),
        None => (text, false),
    };
    let term = parse_term(body).map_err(|_| malformed())?;
    if term.to_string() != body || !term.is_ground() || term.is_var() {
        return Err(malformed());
    }
    if term.functor() == Some("not") {
        let [inner] = term.args() else { return Err(malformed()) };
        if fact || inner.functor().is_none() || inner.functor() == Some("not") {
            return Err(malformed());
        }
        return Ok((inner.clone(), NodeMark::Naf));
    }
    Ok((term, if fact { NodeMark::Fact } else { NodeMark::Rule }))
}

fn parse_tree(lines: &mut Lines<'_>) -> Result<TraceNode, TraceError> {
    // (depth, node) for the current path from the root.
    let mut stack: Vec<(usize, TraceNode)> = Vec::new();
    let mut root: Option<TraceNode> = None;
    fn pop_into(stack: &mut Vec<(usize, TraceNode)>, root: &mut Option<TraceNode>) {
        if let Some((_, node)) = stack.pop() {
            match stack.last_mut() {
                Some((_, parent)) => parent.children.push(node),
                None => *root = Some(node),
            }
        }
    }
    while let Some(raw) = lines.peek() {
        if raw.is_empty() {
            break;
        }
        let line = lines.number();
        let text = raw.trim_start_matches(' ');
        let spaces = raw.len() - text.len();
        if text.starts_with(char::is_whitespace) || spaces % INDENT.len() != 0 {
            return Err(TraceError::BadIndentation { line });
        }
        let depth = spaces / INDENT.len();
        match stack.last() {
            None if depth != 0 => return Err(TraceError::BadIndentation { line }),
            Some(_) if depth == 0 => {
                return Err(TraceError::Unexpected {
                    line,
                    expected: "a single root per tree",
                    found: raw.to_string(),
                });
            }
            Some((top, _)) if depth > top + 1 => return Err(TraceError::BadIndentation { line }),
            _ => {}
        }
        let (term, mark) = parse_node_text(line, text)?;
        while stack.last().is_some_and(|(d, _)| *d >= depth) {
            pop_into(&mut stack, &mut root);
        }
        if let Some((_, parent)) = stack.last() {
            if parent.mark != NodeMark::Rule {
                return Err(TraceError::Unexpected {
                    line,
                    expected: "no children under a FACT or negated node",
                    found: raw.to_string(),
                });
            }
        }
        stack.push((depth, TraceNode { term, mark, children: Vec::new() }));
        lines.pos += 1;
    }
    while !stack.is_empty() {
        pop_into(&mut stack, &mut root);
    }
    root.ok_or(TraceError::Unexpected {
        line: lines.number(),
        expected: "a proof tree",
        found: lines.peek().unwrap_or("end of input").to_string(),
    })
}

fn parse_title(lines: &mut Lines<'_>) -> Result<String, TraceError> {
    let line = lines.number();
    let title = lines.next("a display title")?;
    if title.is_empty() || title.trim() != title {
        return Err(TraceError::Unexpected { line, expected: "a display title", found: title.to_string() });
    }
    Ok(title.to_string())
}

fn parse_section(lines: &mut Lines<'_>) -> Result<TraceSection, TraceError> {
    let line = lines.number();
    let header = lines.next("a section header")?;
    let [article, kind, value] =
        split_ids::<3>(header).ok_or_else(|| TraceError::UnknownSection { line, header: header.to_string() })?;
    lines.blank()?;
    let title = parse_title(lines)?;
    lines.exact(EXPLANATION, "`Explanation:`")?;
    lines.blank()?;
    let explanation = parse_tree(lines)?;
    Ok(TraceSection { article, kind, value, title, explanation })
}

/// Parses trace text. Carriage returns before line feeds are dropped and a
/// missing final newline is supplied; everything else must be exactly in
/// the rendered form, so rendering the result gives back `raw_text`.
pub fn parse_trace(text: &str) -> Result<TraceDocument, TraceError> {
    let mut raw = text.replace("\r\n", "\n");
    if !raw.ends_with('\n') {
        raw.push('\n');
    }
    let mut lines = Lines { lines: raw[..raw.len() - 1].split('\n').collect(), pos: 0 };
    if let Some(i) = lines.lines.iter().position(|l| l.contains('\t')) {
        return Err(TraceError::BadIndentation { line: i + 1 });
    }
    if let Some((i, l)) = lines.lines.iter().enumerate().find(|(_, l)| l.ends_with(' ')) {
        return Err(TraceError::Unexpected { line: i + 1, expected: "no trailing whitespace", found: l.to_string() });
    }

    let header = lines.next("`<source> - <article>`")?;
    let [source, article] = split_ids::<2>(header).ok_or(TraceError::Unexpected {
        line: 1,
        expected: "`<source> - <article>`",
        found: header.to_string(),
    })?;
    lines.blank()?;
    let title = parse_title(&mut lines)?;
    let line = lines.number();
    let option_line = lines.next("`Option: <atom>`")?;
    let option = option_line
        .strip_prefix(OPTION)
        .filter(|o| is_functor_name(o))
        .ok_or(TraceError::Unexpected { line, expected: "`Option: <atom>`", found: option_line.to_string() })?
        .to_string();
    lines.blank()?;
    lines.exact(EXPLANATION, "`Explanation:`")?;
    lines.blank()?;
    let explanation = parse_tree(&mut lines)?;

    let mut auxiliaries = Vec::new();
    let mut properties = Vec::new();
    let mut part: Option<&'static str> = None;
    while lines.peek().is_some() {
        lines.blank()?;
        let line = lines.number();
        let next = lines.peek().unwrap_or_default();
        let opens = match next {
            AUXILIARIES if part.is_none() => Some(AUXILIARIES),
            PROPERTIES if part != Some(PROPERTIES) => Some(PROPERTIES),
            _ => None,
        };
        if let Some(label) = opens {
            lines.pos += 1;
            lines.blank()?;
            part = Some(label);
        } else if part.is_none() || split_ids::<3>(next).is_none() {
            return Err(TraceError::UnknownSection { line, header: next.to_string() });
        }
        let section = parse_section(&mut lines)?;
        match part {
            Some(AUXILIARIES) => auxiliaries.push(section),
            _ => properties.push(section),
        }
    }

    let bundle = TraceBundle { source, article, title, option, explanation, auxiliaries, properties };
    bundle.validate()?;
    Ok(TraceDocument { raw_text: raw, bundle })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TermRole {
    Conclusion,
    Intermediate,
    FactLeaf,
    NafLeaf,
}

/// One proof-tree line of a trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceTerm {
    /// Canonical text; `not(...)` for negated goals, no fact marker.
    pub text: String,
    pub role: TermRole,
    /// Indentation level within its section.
    pub depth: usize,
    /// Section number: 0 for the main explanation, then auxiliaries, then
    /// properties.
    pub section: usize,
    /// Index of the parent line in the extracted list.
    pub parent: Option<usize>,
}

/// Every tree line of every section, in document order.
pub fn extract_terms(doc: &TraceDocument) -> Vec<TraceTerm> {
    fn walk(n: &TraceNode, depth: usize, section: usize, parent: Option<usize>, out: &mut Vec<TraceTerm>) {
        let role = match (depth, n.mark) {
            (0, _) => TermRole::Conclusion,
            (_, NodeMark::Fact) => TermRole::FactLeaf,
            (_, NodeMark::Naf) => TermRole::NafLeaf,
            (_, NodeMark::Rule) => TermRole::Intermediate,
        };
        let me = out.len();
        out.push(TraceTerm { text: n.text(), role, depth, section, parent });
        for c in &n.children {
            walk(c, depth + 1, section, Some(me), out);
        }
    }
    let mut out = Vec::new();
    for (section, tree) in doc.bundle.trees().enumerate() {
        walk(tree, 0, section, None, &mut out);
    }
    out
}
