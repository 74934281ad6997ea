//! Naive bottom-up evaluation of the stratified model.
//!
//! This is the reference semantics the resolution engine is tested
//! against; it shares no code with [`crate::engine`].

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::kb::{CaseFacts, KnowledgeBase};
use crate::term::{Clause, Term};

type Env = BTreeMap<String, Term>;

/// Every ground atom that holds in the stratified model of `kb` extended
/// with `facts`. Variables not bound by a positive body literal range over
/// the constants occurring in the program and the facts.
pub fn ground_oracle(kb: &KnowledgeBase, facts: &CaseFacts) -> BTreeSet<Term> {
    let strata = kb.strata().expect("knowledge bases are validated as stratified");
    let mut domain = BTreeSet::new();
    for c in kb.clauses() {
        c.head.constants_into(&mut domain);
        c.body.iter().for_each(|l| l.term.constants_into(&mut domain));
    }
    facts.iter().for_each(|f| f.constants_into(&mut domain));
    let domain: Vec<Term> = domain.into_iter().map(Term::atom).collect();

    let mut model: BTreeSet<Term> = facts.iter().cloned().collect();
    let top = strata.values().copied().max().unwrap_or(0);
    for stratum in 0..=top {
        let layer: Vec<&Clause> = kb
            .clauses()
            .iter()
            .filter(|c| c.head.pred().and_then(|p| strata.get(&p).copied()) == Some(stratum))
            .collect();
        loop {
            let mut derived = Vec::new();
            for c in &layer {
                for head in consequences(c, &model, &domain) {
                    if !model.contains(&head) {
                        derived.push(head);
                    }
                }
            }
            if derived.is_empty() {
                break;
            }
            model.extend(derived);
        }
    }
    model
}

fn consequences(c: &Clause, model: &BTreeSet<Term>, domain: &[Term]) -> Vec<Term> {
    let c = &number_anonymous(c);
    let mut envs = alloc::vec![Env::new()];
    for lit in c.body.iter().filter(|l| !l.negated) {
        let mut next = Vec::new();
        for env in &envs {
            for fact in model {
                let mut e = env.clone();
                if matches(&lit.term, fact, &mut e) {
                    next.push(e);
                }
            }
        }
        envs = next;
    }

    let mut free: Vec<&str> = c.head.vars();
    for lit in c.body.iter().filter(|l| l.negated) {
        for v in lit.term.vars() {
            if !free.contains(&v) {
                free.push(v);
            }
        }
    }
    let mut out = Vec::new();
    for env in envs {
        let unbound: Vec<&str> = free.iter().copied().filter(|v| !env.contains_key(*v)).collect();
        for_each_grounding(&unbound, domain, env, &mut |env| {
            let blocked = c.body.iter().filter(|l| l.negated).any(|l| model.contains(&substitute(&l.term, env)));
            if !blocked {
                out.push(substitute(&c.head, env));
            }
        });
    }
    out
}

/// Gives every `_` its own name.
fn number_anonymous(c: &Clause) -> Clause {
    fn go(t: &Term, n: &mut usize) -> Term {
        match t {
            Term::Var(v) if v == "_" => {
                *n += 1;
                Term::Var(alloc::format!("_#{n}"))
            }
            Term::Var(_) => t.clone(),
            Term::App { functor, args } => {
                Term::App { functor: functor.clone(), args: args.iter().map(|a| go(a, n)).collect() }
            }
        }
    }
    let mut n = 0;
    let mut out = c.clone();
    out.head = go(&c.head, &mut n);
    for lit in &mut out.body {
        lit.term = go(&lit.term, &mut n);
    }
    out
}

fn for_each_grounding(vars: &[&str], domain: &[Term], env: Env, f: &mut impl FnMut(&Env)) {
    match vars.split_first() {
        None => f(&env),
        Some((v, rest)) => {
            for value in domain {
                let mut e = env.clone();
                e.insert(String::from(*v), value.clone());
                for_each_grounding(rest, domain, e, f);
            }
        }
    }
}

fn matches(pattern: &Term, ground: &Term, env: &mut Env) -> bool {
    match pattern {
        Term::Var(v) => match env.get(v) {
            Some(bound) => bound == ground,
            None => {
                env.insert(v.clone(), ground.clone());
                true
            }
        },
        Term::App { functor, args } => match ground {
            Term::App { functor: g, args: gargs } => {
                functor == g && args.len() == gargs.len() && args.iter().zip(gargs).all(|(p, t)| matches(p, t, env))
            }
            Term::Var(_) => false,
        },
    }
}

fn substitute(t: &Term, env: &Env) -> Term {
    match t {
        Term::Var(v) => env.get(v).cloned().unwrap_or_else(|| t.clone()),
        Term::App { functor, args } => {
            Term::App { functor: functor.clone(), args: args.iter().map(|a| substitute(a, env)).collect() }
        }
    }
}
