//! Grouping of proven rights into bundles: a primary right together with
//! the auxiliary rights and right properties attached to its article.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::engine::{EngineError, ProofTree, Solver};
use crate::kb::{CaseFacts, KnowledgeBase, LegalSource};
use crate::term::{is_functor_name, Term};

pub const PRIMARY_RIGHT: &str = "has_right";
pub const AUXILIARY_RIGHT: &str = "auxiliary_right";
pub const RIGHT_PROPERTY: &str = "right_property";

/// `has_right(Right, Tag, Article, Person, Option)`
const PRIMARY_ARTICLE: usize = 2;
const PRIMARY_OPTION: usize = 4;
/// `auxiliary_right(Article, PrimaryArticle, Person, Kind, Value)`, and the
/// same layout for `right_property/5`.
const ATTACHED_PRIMARY: usize = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RightsBundle {
    pub source: LegalSource,
    pub person: String,
    /// Proof of a `has_right/5` conclusion.
    pub primary: ProofTree,
    /// Proofs of `auxiliary_right/5` conclusions for the primary's article.
    pub auxiliaries: Vec<ProofTree>,
    /// Proofs of `right_property/5` conclusions for the primary's article.
    pub properties: Vec<ProofTree>,
}

impl RightsBundle {
    pub fn article(&self) -> &str {
        arg_atom(self.primary.term(), PRIMARY_ARTICLE)
    }

    pub fn option(&self) -> &str {
        arg_atom(self.primary.term(), PRIMARY_OPTION)
    }
}

fn arg_atom(t: &Term, i: usize) -> &str {
    t.args().get(i).and_then(Term::as_atom).unwrap_or("")
}

/// Every primary right of `person` under `source`, with its attachments.
pub fn derive_rights(
    person: &str,
    source: &str,
    kb: &KnowledgeBase,
    facts: &CaseFacts,
) -> Result<Vec<RightsBundle>, EngineError> {
    let legal_source = kb.source(source).cloned().ok_or_else(|| EngineError::UnknownSource(source.to_string()))?;
    if !is_functor_name(person) {
        return Err(EngineError::InvalidAtom(person.to_string()));
    }
    let solver = Solver::new(kb, facts);
    let v = Term::var;
    let p = Term::atom(person);

    let primaries = proofs_from(
        &solver,
        source,
        &Term::app(PRIMARY_RIGHT, alloc::vec![v("Right"), v("Tag"), v("Article"), p.clone(), v("Option")]),
    )?;
    let mut out = Vec::with_capacity(primaries.len());
    for primary in primaries {
        let article = primary.term().args()[PRIMARY_ARTICLE].clone();
        let attached = |functor: &str| {
            let goal = Term::app(functor, alloc::vec![v("Article"), article.clone(), p.clone(), v("Kind"), v("Value")]);
            proofs_from(&solver, source, &goal).map(|proofs| {
                proofs
                    .into_iter()
                    .filter(|t| t.term().args().get(ATTACHED_PRIMARY) == Some(&article))
                    .collect::<Vec<_>>()
            })
        };
        let auxiliaries = attached(AUXILIARY_RIGHT)?;
        let properties = attached(RIGHT_PROPERTY)?;
        out.push(RightsBundle {
            source: legal_source.clone(),
            person: person.to_string(),
            primary,
            auxiliaries,
            properties,
        });
    }
    Ok(out)
}

/// First proof of each distinct conclusion whose top clause belongs to `source`.
fn proofs_from(solver: &Solver<'_>, source: &str, goal: &Term) -> Result<Vec<ProofTree>, EngineError> {
    let mut seen: Vec<Term> = Vec::new();
    let mut out = Vec::new();
    for sol in solver.solve(goal)? {
        let from_source =
            sol.proof.clause_index().and_then(|i| solver.kb().clauses()[i].source.as_deref()) == Some(source);
        if from_source && !seen.contains(sol.proof.term()) {
            seen.push(sol.proof.term().clone());
            out.push(sol.proof);
        }
    }
    Ok(out)
}
