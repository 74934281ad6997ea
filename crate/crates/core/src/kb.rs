//! Knowledge bases of legal sources and the case facts they are applied to.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::term::{Clause, Pred, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KbError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unsafe variable {variable} in negated literal of `{clause}`")]
    UnsafeVariable { variable: String, clause: String },
    #[error("negation is only allowed in clause bodies: `{clause}`")]
    NegatedHead { clause: String },
    #[error("negation cycle through {}", .cycle.join(" -> "))]
    Stratification { cycle: Vec<String> },
    #[error("fact at line {line} is not ground: `{fact}`")]
    NonGroundFact { line: usize, fact: String },
    #[error("clause `{clause}` refers to undeclared source `{source_id}`")]
    UndeclaredSource { source_id: String, clause: String },
    #[error("source `{id}` declared with conflicting jurisdictions")]
    ConflictingSource { id: String },
    #[error("article `{article}` has conflicting titles {first:?} and {second:?}")]
    ConflictingTitle { article: String, first: String, second: String },
}

/// A legal source, e.g. `directive_2010_64`, with an explicit jurisdiction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LegalSource {
    pub id: String,
    pub jurisdiction: String,
}

impl LegalSource {
    pub fn new(id: impl Into<String>, jurisdiction: impl Into<String>) -> Self {
        LegalSource { id: id.into(), jurisdiction: jurisdiction.into() }
    }
}

/// A validated, stratified set of clauses.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KnowledgeBase {
    clauses: Vec<Clause>,
    sources: BTreeMap<String, LegalSource>,
    article_titles: BTreeMap<String, String>,
}

impl KnowledgeBase {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(clauses: Vec<Clause>, sources: impl IntoIterator<Item = LegalSource>) -> Result<Self, KbError> {
        let mut by_id: BTreeMap<String, LegalSource> = BTreeMap::new();
        for s in sources {
            match by_id.get(&s.id) {
                Some(prev) if prev.jurisdiction != s.jurisdiction => {
                    return Err(KbError::ConflictingSource { id: s.id });
                }
                Some(_) => {}
                None => {
                    by_id.insert(s.id.clone(), s);
                }
            }
        }
        let mut article_titles = BTreeMap::new();
        for c in &clauses {
            validate_clause(c)?;
            if let Some(src) = &c.source {
                if !by_id.contains_key(src) {
                    return Err(KbError::UndeclaredSource { source_id: src.clone(), clause: c.to_string() });
                }
            }
            if let (Some(article), Some(title)) = (&c.article, &c.title) {
                match article_titles.get(article) {
                    Some(prev) if prev != title => {
                        return Err(KbError::ConflictingTitle {
                            article: article.clone(),
                            first: String::clone(prev),
                            second: title.clone(),
                        });
                    }
                    Some(_) => {}
                    None => {
                        article_titles.insert(article.clone(), title.clone());
                    }
                }
            }
        }
        let kb = KnowledgeBase { clauses, sources: by_id, article_titles };
        kb.strata()?;
        Ok(kb)
    }

    /// Concatenates two knowledge bases, revalidating the result.
    pub fn merge(&self, other: &KnowledgeBase) -> Result<Self, KbError> {
        let mut clauses = self.clauses.clone();
        clauses.extend(other.clauses.iter().cloned());
        let sources = self.sources.values().chain(other.sources.values()).cloned();
        KnowledgeBase::new(clauses, sources.collect::<Vec<_>>())
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty() && self.sources.is_empty()
    }

    pub fn sources(&self) -> impl Iterator<Item = &LegalSource> {
        self.sources.values()
    }

    pub fn source(&self, id: &str) -> Option<&LegalSource> {
        self.sources.get(id)
    }

    pub fn article_titles(&self) -> &BTreeMap<String, String> {
        &self.article_titles
    }

    pub fn title(&self, article: &str) -> Option<&str> {
        self.article_titles.get(article).map(String::as_str)
    }

    /// Assigns every predicate a stratum such that positive dependencies
    /// sit in the same or a lower stratum and negative ones strictly lower.
    pub fn strata(&self) -> Result<BTreeMap<Pred, usize>, KbError> {
        let graph = DependencyGraph::build(&self.clauses);
        graph.strata()
    }
}

fn validate_clause(c: &Clause) -> Result<(), KbError> {
    if c.head.is_var() || c.head.functor() == Some("not") {
        return Err(KbError::NegatedHead { clause: c.to_string() });
    }
    if let Some(v) = c.unsafe_variable() {
        return Err(KbError::UnsafeVariable { variable: v.to_string(), clause: c.to_string() });
    }
    Ok(())
}

struct DependencyGraph {
    preds: Vec<Pred>,
    // (target, negative)
    edges: Vec<Vec<(usize, bool)>>,
}

impl DependencyGraph {
    fn build(clauses: &[Clause]) -> Self {
        let mut index: BTreeMap<Pred, usize> = BTreeMap::new();
        let mut preds = Vec::new();
        let mut edges: Vec<Vec<(usize, bool)>> = Vec::new();
        let mut id = |p: Pred, preds: &mut Vec<Pred>, edges: &mut Vec<Vec<(usize, bool)>>| {
            *index.entry(p.clone()).or_insert_with(|| {
                preds.push(p);
                edges.push(Vec::new());
                preds.len() - 1
            })
        };
        for c in clauses {
            let Some(hp) = c.head.pred() else { continue };
            let h = id(hp, &mut preds, &mut edges);
            for lit in &c.body {
                if let Some(bp) = lit.term.pred() {
                    let b = id(bp, &mut preds, &mut edges);
                    if !edges[h].contains(&(b, lit.negated)) {
                        edges[h].push((b, lit.negated));
                    }
                }
            }
        }
        DependencyGraph { preds, edges }
    }

    fn strata(&self) -> Result<BTreeMap<Pred, usize>, KbError> {
        let sccs = self.tarjan();
        let mut comp_of = vec![0usize; self.preds.len()];
        for (ci, comp) in sccs.iter().enumerate() {
            for &v in comp {
                comp_of[v] = ci;
            }
        }
        // Tarjan emits a component only after everything reachable from it.
        let mut comp_stratum = vec![0usize; sccs.len()];
        for (ci, comp) in sccs.iter().enumerate() {
            let mut s = 0;
            for &v in comp {
                for &(w, negative) in &self.edges[v] {
                    let cw = comp_of[w];
                    if cw == ci {
                        if negative {
                            let mut cycle: Vec<String> = comp.iter().map(|&u| self.preds[u].to_string()).collect();
                            cycle.sort();
                            let first = cycle[0].clone();
                            cycle.push(first);
                            return Err(KbError::Stratification { cycle });
                        }
                    } else {
                        s = s.max(comp_stratum[cw] + usize::from(negative));
                    }
                }
            }
            comp_stratum[ci] = s;
        }
        Ok(self.preds.iter().enumerate().map(|(i, p)| (p.clone(), comp_stratum[comp_of[i]])).collect())
    }

    fn tarjan(&self) -> Vec<Vec<usize>> {
        struct State {
            index: Vec<Option<usize>>,
            low: Vec<usize>,
            on_stack: Vec<bool>,
            stack: Vec<usize>,
            next: usize,
            out: Vec<Vec<usize>>,
        }
        fn visit(g: &DependencyGraph, v: usize, st: &mut State) {
            st.index[v] = Some(st.next);
            st.low[v] = st.next;
            st.next += 1;
            st.stack.push(v);
            st.on_stack[v] = true;
            for &(w, _) in &g.edges[v] {
                match st.index[w] {
                    None => {
                        visit(g, w, st);
                        st.low[v] = st.low[v].min(st.low[w]);
                    }
                    Some(iw) if st.on_stack[w] => st.low[v] = st.low[v].min(iw),
                    Some(_) => {}
                }
            }
            if Some(st.low[v]) == st.index[v] {
                let mut comp = Vec::new();
                while let Some(w) = st.stack.pop() {
                    st.on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                st.out.push(comp);
            }
        }
        let n = self.preds.len();
        let mut st = State {
            index: vec![None; n],
            low: vec![0; n],
            on_stack: vec![false; n],
            stack: Vec::new(),
            next: 0,
            out: Vec::new(),
        };
        for v in 0..n {
            if st.index[v].is_none() {
                visit(self, v, &mut st);
            }
        }
        st.out
    }
}

/// The ground facts describing one case.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CaseFacts {
    facts: BTreeSet<Term>,
}

impl CaseFacts {
    pub fn new(facts: impl IntoIterator<Item = Term>) -> Result<Self, KbError> {
        let mut set = BTreeSet::new();
        for f in facts {
            if !f.is_ground() || f.functor().is_none() {
                return Err(KbError::NonGroundFact { line: 0, fact: f.to_string() });
            }
            set.insert(f);
        }
        Ok(CaseFacts { facts: set })
    }

    pub fn iter(&self) -> impl Iterator<Item = &Term> {
        self.facts.iter()
    }

    pub fn contains(&self, t: &Term) -> bool {
        self.facts.contains(t)
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    /// A copy with one more fact.
    pub fn with(&self, fact: Term) -> Result<Self, KbError> {
        let mut facts = self.facts.clone();
        if !fact.is_ground() {
            return Err(KbError::NonGroundFact { line: 0, fact: format!("{fact}") });
        }
        facts.insert(fact);
        Ok(CaseFacts { facts })
    }
}
