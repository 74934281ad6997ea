//! SLD resolution with negation as failure, producing proof trees.
//!
//! Goals are resolved left to right. For each positive goal the case facts
//! are tried first (in their sorted order), then the clauses of the
//! knowledge base in textual order. A negated goal must be ground when it is
//! selected; it succeeds when the positive goal has no derivation at all.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::kb::{CaseFacts, KnowledgeBase};
use crate::term::{Clause, Literal, Pred, Term};

/// Derivations deeper than this fail with [`EngineError::DepthLimit`].
pub const DEFAULT_DEPTH_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("negated goal `{literal}` is not ground when selected")]
    NonGroundNegation { literal: String },
    #[error("depth limit {limit} exceeded while proving `{goal}`")]
    DepthLimit { limit: usize, goal: String },
    #[error("unknown legal source `{0}`")]
    UnknownSource(String),
    #[error("`{0}` is not an atom")]
    InvalidAtom(String),
}

/// Variable bindings. Bindings may refer to other variables; [`resolve`]
/// follows them to the end.
///
/// [`resolve`]: Substitution::resolve
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Substitution {
    bindings: BTreeMap<String, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.bindings.get(var)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Term)> {
        self.bindings.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn bind(&mut self, var: impl Into<String>, term: Term) {
        self.bindings.insert(var.into(), term);
    }

    fn walk<'a>(&'a self, mut t: &'a Term) -> &'a Term {
        while let Term::Var(v) = t {
            match self.bindings.get(v) {
                Some(next) => t = next,
                None => break,
            }
        }
        t
    }

    /// Applies the substitution fully.
    pub fn resolve(&self, t: &Term) -> Term {
        match self.walk(t) {
            Term::Var(v) => Term::Var(v.clone()),
            Term::App { functor, args } => {
                Term::App { functor: functor.clone(), args: args.iter().map(|a| self.resolve(a)).collect() }
            }
        }
    }

    /// Extends the substitution so that `a` and `b` become equal.
    pub fn unify(&mut self, a: &Term, b: &Term) -> bool {
        let a = self.walk(a).clone();
        let b = self.walk(b).clone();
        match (a, b) {
            (Term::Var(x), Term::Var(y)) if x == y => true,
            (Term::Var(x), t) | (t, Term::Var(x)) => {
                self.bindings.insert(x, t);
                true
            }
            (Term::App { functor: f, args: xs }, Term::App { functor: g, args: ys }) => {
                f == g && xs.len() == ys.len() && xs.iter().zip(ys.iter()).all(|(x, y)| self.unify(x, y))
            }
        }
    }

    /// Keeps only the given variables, each fully resolved.
    pub fn restrict(&self, vars: &[&str]) -> Substitution {
        let bindings = vars
            .iter()
            .filter_map(|v| {
                let t = self.resolve(&Term::var(*v));
                (t != Term::var(*v)).then(|| ((*v).to_string(), t))
            })
            .collect();
        Substitution { bindings }
    }
}

/// Why a proof-tree node holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Justification {
    /// Derived with the clause at this index of the knowledge base.
    Rule { clause: usize, article: Option<String> },
    /// Present in the case facts.
    Fact,
    /// A negated goal whose positive counterpart has no derivation.
    Naf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofTree {
    pub literal: Literal,
    pub justification: Justification,
    pub children: Vec<ProofTree>,
}

impl ProofTree {
    pub fn term(&self) -> &Term {
        &self.literal.term
    }

    pub fn clause_index(&self) -> Option<usize> {
        match self.justification {
            Justification::Rule { clause, .. } => Some(clause),
            _ => None,
        }
    }

    pub fn contains_naf(&self) -> bool {
        self.justification == Justification::Naf || self.children.iter().any(Self::contains_naf)
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(Self::depth).max().unwrap_or(0)
    }

    /// Checks the structural invariants of the tree against the knowledge
    /// base and facts it was derived from.
    pub fn check_shape(&self, kb: &KnowledgeBase, facts: &CaseFacts) -> Result<(), String> {
        if !self.literal.term.is_ground() {
            return Err(format!("non-ground node {}", self.literal));
        }
        match &self.justification {
            Justification::Fact => {
                if self.literal.negated || !self.children.is_empty() {
                    return Err(format!("malformed FACT node {}", self.literal));
                }
                if !facts.contains(&self.literal.term) {
                    return Err(format!("{} is not a case fact", self.literal.term));
                }
            }
            Justification::Naf => {
                if !self.literal.negated || !self.children.is_empty() {
                    return Err(format!("malformed NAF node {}", self.literal));
                }
            }
            Justification::Rule { clause, .. } => {
                let c = kb.clauses().get(*clause).ok_or("clause index out of range")?;
                if self.literal.negated || self.children.len() != c.body.len() {
                    return Err(format!("RULE node {} does not match its clause", self.literal));
                }
                for (child, lit) in self.children.iter().zip(&c.body) {
                    if child.literal.negated != lit.negated {
                        return Err(format!("child {} has the wrong polarity", child.literal));
                    }
                    child.check_shape(kb, facts)?;
                }
            }
        }
        Ok(())
    }

    fn resolve(&self, s: &Substitution) -> ProofTree {
        ProofTree {
            literal: Literal { term: s.resolve(&self.literal.term), negated: self.literal.negated },
            justification: self.justification.clone(),
            children: self.children.iter().map(|c| c.resolve(s)).collect(),
        }
    }
}

/// A successful derivation of a goal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    /// Bindings of the goal's variables only.
    pub bindings: Substitution,
    pub proof: ProofTree,
}

/// Resolution engine over a fixed knowledge base and fact set.
pub struct Solver<'a> {
    kb: &'a KnowledgeBase,
    facts: &'a CaseFacts,
    index: BTreeMap<Pred, Vec<usize>>,
    fact_index: BTreeMap<Pred, Vec<&'a Term>>,
    depth_limit: usize,
}

struct Frame {
    subst: Substitution,
    proofs: Vec<ProofTree>,
    fresh: usize,
}

impl<'a> Solver<'a> {
    pub fn new(kb: &'a KnowledgeBase, facts: &'a CaseFacts) -> Self {
        let mut index: BTreeMap<Pred, Vec<usize>> = BTreeMap::new();
        for (i, c) in kb.clauses().iter().enumerate() {
            if let Some(p) = c.head.pred() {
                index.entry(p).or_default().push(i);
            }
        }
        let mut fact_index: BTreeMap<Pred, Vec<&Term>> = BTreeMap::new();
        for f in facts.iter() {
            if let Some(p) = f.pred() {
                fact_index.entry(p).or_default().push(f);
            }
        }
        Solver { kb, facts, index, fact_index, depth_limit: DEFAULT_DEPTH_LIMIT }
    }

    pub fn with_depth_limit(mut self, limit: usize) -> Self {
        self.depth_limit = limit;
        self
    }

    pub fn kb(&self) -> &KnowledgeBase {
        self.kb
    }

    pub fn facts(&self) -> &CaseFacts {
        self.facts
    }

    /// All derivations of `goal`, in resolution order.
    pub fn solve(&self, goal: &Term) -> Result<Vec<Solution>, EngineError> {
        let start = Frame { subst: Substitution::new(), proofs: Vec::new(), fresh: 0 };
        let frames = self.solve_conj(core::slice::from_ref(&Literal::pos(goal.clone())), start, 0)?;
        let vars = goal.vars();
        Ok(frames
            .into_iter()
            .map(|mut f| {
                let proof = f.proofs.pop().expect("one proof per goal").resolve(&f.subst);
                Solution { bindings: f.subst.restrict(&vars), proof }
            })
            .collect())
    }

    /// Whether `goal` has at least one derivation.
    pub fn provable(&self, goal: &Term) -> Result<bool, EngineError> {
        Ok(!self.solve(goal)?.is_empty())
    }

    fn solve_conj(&self, goals: &[Literal], frame: Frame, depth: usize) -> Result<Vec<Frame>, EngineError> {
        let Some((first, rest)) = goals.split_first() else {
            return Ok(vec![frame]);
        };
        let mut out = Vec::new();
        for next in self.solve_one(first, frame, depth)? {
            out.extend(self.solve_conj(rest, next, depth)?);
        }
        Ok(out)
    }

    fn solve_one(&self, lit: &Literal, frame: Frame, depth: usize) -> Result<Vec<Frame>, EngineError> {
        let goal = frame.subst.resolve(&lit.term);
        if lit.negated {
            if !goal.is_ground() {
                return Err(EngineError::NonGroundNegation { literal: format!("not({goal})") });
            }
            let inner = Frame { subst: Substitution::new(), proofs: Vec::new(), fresh: frame.fresh };
            let found = self.solve_one(&Literal::pos(goal.clone()), inner, depth)?;
            if !found.is_empty() {
                return Ok(Vec::new());
            }
            let mut frame = frame;
            frame.proofs.push(ProofTree {
                literal: Literal::neg(goal),
                justification: Justification::Naf,
                children: Vec::new(),
            });
            return Ok(vec![frame]);
        }
        if depth >= self.depth_limit {
            return Err(EngineError::DepthLimit { limit: self.depth_limit, goal: goal.to_string() });
        }
        let Some(pred) = goal.pred() else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();

        for fact in self.fact_index.get(&pred).into_iter().flatten() {
            let mut subst = frame.subst.clone();
            if subst.unify(&goal, fact) {
                let mut proofs = frame.proofs.clone();
                proofs.push(ProofTree {
                    literal: Literal::pos((*fact).clone()),
                    justification: Justification::Fact,
                    children: Vec::new(),
                });
                out.push(Frame { subst, proofs, fresh: frame.fresh });
            }
        }

        for &ci in self.index.get(&pred).into_iter().flatten() {
            let clause = &self.kb.clauses()[ci];
            let mut fresh = frame.fresh;
            let (head, body) = rename(clause, &mut fresh);
            let mut subst = frame.subst.clone();
            if !subst.unify(&goal, &head) {
                continue;
            }
            let inner = Frame { subst, proofs: Vec::new(), fresh };
            for done in self.solve_conj(&body, inner, depth + 1)? {
                let mut proofs = frame.proofs.clone();
                proofs.push(ProofTree {
                    literal: Literal::pos(head.clone()),
                    justification: Justification::Rule { clause: ci, article: clause.article.clone() },
                    children: done.proofs,
                });
                out.push(Frame { subst: done.subst, proofs, fresh: done.fresh });
            }
        }
        Ok(out)
    }
}

/// Renames a clause apart. Fresh names contain `#`, which the rule
/// language cannot produce; every `_` becomes its own variable.
fn rename(clause: &Clause, fresh: &mut usize) -> (Term, Vec<Literal>) {
    let gen = *fresh;
    *fresh += 1;
    let mut anon = 0usize;
    let mut go = |t: &Term| rename_term(t, gen, &mut anon);
    let head = go(&clause.head);
    let body = clause.body.iter().map(|l| Literal { term: go(&l.term), negated: l.negated }).collect();
    (head, body)
}

fn rename_term(t: &Term, gen: usize, anon: &mut usize) -> Term {
    match t {
        Term::Var(v) if v == "_" => {
            *anon += 1;
            Term::Var(format!("_#{gen}_{anon}"))
        }
        Term::Var(v) => Term::Var(format!("{v}#{gen}")),
        Term::App { functor, args } => {
            Term::App { functor: functor.clone(), args: args.iter().map(|a| rename_term(a, gen, anon)).collect() }
        }
    }
}

/// Convenience wrapper around [`Solver::solve`] with the default depth limit.
pub fn solve(goal: &Term, kb: &KnowledgeBase, facts: &CaseFacts) -> Result<Vec<Solution>, EngineError> {
    Solver::new(kb, facts).solve(goal)
}
