//! Terms, literals and clauses of the function-free rule language.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// A term: either a variable or a functor applied to zero or more arguments.
///
/// Atoms are functors without arguments. Variables start with an uppercase
/// letter or `_`; functors with a lowercase letter.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    App { functor: String, args: Vec<Term> },
}

/// Predicate indicator, `name/arity`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pred {
    pub name: String,
    pub arity: usize,
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

pub fn is_functor_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase()) && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn is_variable_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_uppercase() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Term {
    pub fn atom(name: impl Into<String>) -> Self {
        Term::App { functor: name.into(), args: Vec::new() }
    }

    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn app(functor: impl Into<String>, args: Vec<Term>) -> Self {
        Term::App { functor: functor.into(), args }
    }

    /// Builds a compound whose arguments are all atoms.
    pub fn ground(functor: &str, args: &[&str]) -> Self {
        Term::app(functor, args.iter().map(|a| Term::atom(*a)).collect())
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn functor(&self) -> Option<&str> {
        match self {
            Term::App { functor, .. } => Some(functor),
            Term::Var(_) => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::App { args, .. } => args,
            Term::Var(_) => &[],
        }
    }

    /// The atom name if this is an argument-less functor.
    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Term::App { functor, args } if args.is_empty() => Some(functor),
            _ => None,
        }
    }

    pub fn pred(&self) -> Option<Pred> {
        match self {
            Term::App { functor, args } => Some(Pred { name: functor.clone(), arity: args.len() }),
            Term::Var(_) => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App { args, .. } => args.iter().all(Term::is_ground),
        }
    }

    /// Variables in first-occurrence order, without duplicates.
    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Term::Var(v) => {
                if !out.contains(&v.as_str()) {
                    out.push(v);
                }
            }
            Term::App { args, .. } => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    /// Every constant (argument-less functor) occurring anywhere in the term.
    pub fn constants_into(&self, out: &mut BTreeSet<String>) {
        if let Term::App { functor, args } = self {
            if args.is_empty() {
                out.insert(functor.clone());
            }
            args.iter().for_each(|a| a.constants_into(out));
        }
    }

    /// This term followed by all of its compound subterms, preorder.
    pub fn compound_subterms(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        self.collect_compounds(&mut out);
        out
    }

    fn collect_compounds<'a>(&'a self, out: &mut Vec<&'a Term>) {
        if let Term::App { args, .. } = self {
            if !args.is_empty() {
                out.push(self);
                args.iter().for_each(|a| a.collect_compounds(out));
            }
        }
    }
}

/// Canonical form: a single space after each comma, no other whitespace.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::App { functor, args } => {
                f.write_str(functor)?;
                if !args.is_empty() {
                    f.write_str("(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{a}")?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

/// A body literal, possibly under negation as failure.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub term: Term,
    pub negated: bool,
}

impl Literal {
    pub fn pos(term: Term) -> Self {
        Literal { term, negated: false }
    }

    pub fn neg(term: Term) -> Self {
        Literal { term, negated: true }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "not({})", self.term)
        } else {
            write!(f, "{}", self.term)
        }
    }
}

/// A rule or fact of a legal source, with the article it encodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    pub head: Term,
    pub body: Vec<Literal>,
    pub source: Option<String>,
    pub article: Option<String>,
    pub title: Option<String>,
}

impl Clause {
    pub fn new(head: Term, body: Vec<Literal>) -> Self {
        Clause { head, body, source: None, article: None, title: None }
    }

    pub fn is_fact(&self) -> bool {
        self.body.is_empty() && self.head.is_ground()
    }

    /// First variable of a negated literal not bound by the head or an
    /// earlier positive literal.
    pub fn unsafe_variable(&self) -> Option<&str> {
        let mut bound: Vec<&str> = self.head.vars();
        for lit in &self.body {
            if lit.negated {
                if let Some(v) = lit.term.vars().into_iter().find(|v| !bound.contains(v)) {
                    return Some(v);
                }
            } else {
                for v in lit.term.vars() {
                    if !bound.contains(&v) {
                        bound.push(v);
                    }
                }
            }
        }
        None
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        for (i, lit) in self.body.iter().enumerate() {
            f.write_str(if i == 0 { " :- " } else { ", " })?;
            write!(f, "{lit}")?;
        }
        f.write_str(".")
    }
}
