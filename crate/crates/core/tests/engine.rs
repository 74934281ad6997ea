mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use lexplain_core::engine::{EngineError, Justification};
use lexplain_core::{
    derive_rights, ground_oracle, parse_facts, parse_term, solve, CaseFacts, KnowledgeBase, ProofTree, Term,
};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn t(s: &str) -> Term {
    parse_term(s).unwrap()
}

fn lines(tree: &ProofTree) -> Vec<(usize, String, &'static str)> {
    fn go(n: &ProofTree, d: usize, out: &mut Vec<(usize, String, &'static str)>) {
        let kind = match n.justification {
            Justification::Rule { .. } => "RULE",
            Justification::Fact => "FACT",
            Justification::Naf => "NAF",
        };
        out.push((d, n.literal.to_string(), kind));
        n.children.iter().for_each(|c| go(c, d + 1, out));
    }
    let mut out = Vec::new();
    go(tree, 0, &mut out);
    out
}

#[test]
fn eu_right_to_translation() {
    let kb = eu_kb();
    let sols = solve(&t("has_right(A, mario, right_to_translation, O)"), &kb, &mario()).unwrap();
    assert_eq!(sols.len(), 1);
    let s = &sols[0];
    assert_eq!(s.bindings.get("A"), Some(&t("art3_1")));
    assert_eq!(s.bindings.get("O"), Some(&t("essentialDocument")));
    assert_eq!(
        lines(&s.proof),
        vec![
            (0, "has_right(art3_1, mario, right_to_translation, essentialDocument)".into(), "RULE"),
            (1, "proceeding_language(mario, polish)".into(), "FACT"),
            (1, "essential_document(art3_2, mario, documents)".into(), "RULE"),
            (2, "person_document(mario, charge)".into(), "FACT"),
            (1, "not(person_understands(mario, polish))".into(), "NAF"),
        ]
    );
    assert_eq!(s.proof.children[1].justification, Justification::Rule { clause: 2, article: Some("art3_2".into()) });
    s.proof.check_shape(&kb, &mario()).unwrap();
}

#[test]
fn understanding_the_language_blocks_the_right() {
    let facts = mario().with(t("person_understands(mario, polish)")).unwrap();
    for kb in [eu_kb(), pl_kb()] {
        let sols = solve(&t("has_right(A, mario, right_to_translation, O)"), &kb, &facts).unwrap();
        assert!(sols.is_empty());
    }
}

#[test]
fn polish_right_to_translation() {
    let kb = pl_kb();
    let sols = solve(&t("has_right(A, mario, right_to_translation, O)"), &kb, &mario()).unwrap();
    assert_eq!(sols.len(), 1);
    assert_eq!(sols[0].bindings.get("A"), Some(&t("article204_2")));
    assert_eq!(sols[0].bindings.get("O"), Some(&t("documents")));
    let l = lines(&sols[0].proof);
    assert_eq!(l[3], (1, "person_document(mario, translation_needed)".into(), "RULE"));
    assert_eq!(l[4], (2, "person_document(mario, charge)".into(), "FACT"));
}

#[test]
fn bundles_for_both_sources() {
    let kb = both_kbs();
    let eu = derive_rights("mario", EU, &kb, &mario()).unwrap();
    assert_eq!(eu.len(), 1);
    assert_eq!((eu[0].article(), eu[0].option()), ("art3_1", "essentialDocument"));
    assert_eq!(eu[0].source.jurisdiction, "European Union");
    let aux: Vec<String> = eu[0].auxiliaries.iter().map(|p| p.term().to_string()).collect();
    assert_eq!(aux, ["auxiliary_right(art4, art3_1, mario, cost, state)"]);
    let props: Vec<String> = eu[0].properties.iter().map(|p| p.term().to_string()).collect();
    assert_eq!(props, ["right_property(art3_7, art3_1, mario, form, oral)"]);
    assert_eq!(
        lines(&eu[0].properties[0]).last().unwrap(),
        &(2, "not(proceeding_event(mario, prejudice_fairness))".into(), "NAF")
    );

    let pl = derive_rights("mario", PL, &kb, &mario()).unwrap();
    assert_eq!(pl.len(), 1);
    assert_eq!((pl[0].article(), pl[0].option()), ("article204_2", "documents"));
    assert_eq!(pl[0].auxiliaries.len(), 1);
    assert_eq!(pl[0].auxiliaries[0].term().args()[0], t("article618_7"));
    assert!(pl[0].properties.is_empty());
}

#[test]
fn prejudicial_oral_translation_drops_only_the_property() {
    let kb = eu_kb();
    let facts = mario().with(t("proceeding_event(mario, prejudice_fairness)")).unwrap();
    let eu = derive_rights("mario", EU, &kb, &facts).unwrap();
    assert_eq!(eu.len(), 1);
    assert_eq!(eu[0].auxiliaries.len(), 1);
    assert!(eu[0].properties.is_empty());
}

#[test]
fn no_charge_document_no_bundle() {
    let facts = parse_facts("proceeding_language(mario, polish).").unwrap();
    for (kb, src) in [(eu_kb(), EU), (pl_kb(), PL)] {
        assert!(derive_rights("mario", src, &kb, &facts).unwrap().is_empty());
        let model = ground_oracle(&kb, &facts);
        assert!(!model.iter().any(|a| a.functor() == Some("has_right")));
    }
}

#[test]
fn derive_rights_errors() {
    assert_eq!(
        derive_rights("mario", "nowhere", &eu_kb(), &mario()).unwrap_err(),
        EngineError::UnknownSource("nowhere".into())
    );
    assert!(matches!(derive_rights("Mario", EU, &eu_kb(), &mario()), Err(EngineError::InvalidAtom(_))));
}

#[test]
fn oracle_on_listing_one_facts() {
    let model = ground_oracle(&eu_kb(), &mario());
    assert!(model.contains(&t("has_right(art3_1, mario, right_to_translation, essentialDocument)")));
    assert!(model.contains(&t("has_right(right_to_translation, dir, art3_1, mario, essentialDocument)")));
    assert!(model.contains(&t("essential_document(art3_2, mario, documents)")));
    assert!(!model.contains(&t("person_understands(mario, polish)")));
}

// ---------------------------------------------------------------------------
// Randomised agreement with the bottom-up model.

const PERSONS: [&str; 2] = ["mario", "anna"];
const LANGUAGES: [&str; 2] = ["polish", "italian"];
const DOCUMENTS: [&str; 3] = ["charge", "translation_needed", "summons"];

fn candidate_facts() -> Vec<Term> {
    let mut out = Vec::new();
    for p in PERSONS {
        for l in LANGUAGES {
            out.push(Term::ground("proceeding_language", &[p, l]));
            out.push(Term::ground("person_understands", &[p, l]));
        }
        for d in DOCUMENTS {
            out.push(Term::ground("person_document", &[p, d]));
        }
        out.push(Term::ground("proceeding_event", &[p, "prejudice_fairness"]));
    }
    out
}

fn random_facts(rng: &mut ChaCha8Rng) -> CaseFacts {
    let pool = candidate_facts();
    let n = rng.random_range(0..=12);
    CaseFacts::new(pool.choose_multiple(rng, n).cloned()).unwrap()
}

/// Constants of the program and the facts: the Herbrand universe.
fn universe(kb: &KnowledgeBase, facts: &CaseFacts) -> Vec<String> {
    let mut c = BTreeSet::new();
    for cl in kb.clauses() {
        cl.head.constants_into(&mut c);
        cl.body.iter().for_each(|l| l.term.constants_into(&mut c));
    }
    facts.iter().for_each(|f| f.constants_into(&mut c));
    c.into_iter().collect()
}

/// Constants seen at each argument position of each predicate.
fn positional(kb: &KnowledgeBase) -> BTreeMap<(String, usize), BTreeSet<String>> {
    let mut out: BTreeMap<(String, usize), BTreeSet<String>> = BTreeMap::new();
    let terms = kb
        .clauses()
        .iter()
        .flat_map(|c| core::iter::once(c.head.clone()).chain(c.body.iter().map(|l| l.term.clone())))
        .chain(candidate_facts());
    for t in terms {
        for (i, a) in t.args().iter().enumerate() {
            if let Some(c) = a.as_atom() {
                out.entry((t.functor().unwrap().to_string(), i)).or_default().insert(c.to_string());
            }
        }
    }
    out
}

/// Clause heads grounded with positionally plausible constants and the
/// people of the case, the candidate facts, and the whole model.
fn ground_goals(kb: &KnowledgeBase, facts: &CaseFacts, model: &BTreeSet<Term>) -> BTreeSet<Term> {
    let consts: BTreeSet<String> = universe(kb, facts).into_iter().collect();
    let pos = positional(kb);
    let mut goals: BTreeSet<Term> = candidate_facts().into_iter().chain(model.iter().cloned()).collect();
    for cl in kb.clauses() {
        let name = cl.head.functor().unwrap().to_string();
        let mut envs = vec![BTreeMap::<&str, &str>::new()];
        for (i, a) in cl.head.args().iter().enumerate() {
            let Term::Var(v) = a else { continue };
            let choices: Vec<&str> = pos
                .get(&(name.clone(), i))
                .into_iter()
                .flatten()
                .map(String::as_str)
                .chain(PERSONS)
                .filter(|c| consts.contains(*c))
                .collect();
            envs = envs
                .into_iter()
                .flat_map(|e| {
                    choices.iter().map(move |c| {
                        let mut e = e.clone();
                        e.entry(v.as_str()).or_insert(c);
                        e
                    })
                })
                .collect();
        }
        for e in envs {
            goals.insert(substitute(&cl.head, &e));
        }
    }
    goals.into_iter().filter(|g| g.args().iter().all(|a| a.as_atom().is_some_and(|c| consts.contains(c)))).collect()
}

fn substitute(t: &Term, env: &BTreeMap<&str, &str>) -> Term {
    match t {
        Term::Var(v) => Term::atom(env[v.as_str()]),
        Term::App { functor, args } => Term::app(functor.clone(), args.iter().map(|a| substitute(a, env)).collect()),
    }
}

/// Replays a proof against the clause it names, the facts, and the model.
fn replay(tree: &ProofTree, kb: &KnowledgeBase, facts: &CaseFacts, model: &BTreeSet<Term>) -> Result<(), String> {
    fn bind<'a>(p: &'a Term, g: &Term, env: &mut BTreeMap<&'a str, Term>) -> bool {
        match p {
            Term::Var(v) if v == "_" => true,
            Term::Var(v) => match env.get(v.as_str()) {
                Some(b) => b == g,
                None => {
                    env.insert(v, g.clone());
                    true
                }
            },
            Term::App { functor, args } => {
                g.functor() == Some(functor)
                    && g.args().len() == args.len()
                    && args.iter().zip(g.args()).all(|(a, b)| bind(a, b, env))
            }
        }
    }
    let term = tree.term();
    match &tree.justification {
        Justification::Fact => facts.contains(term).then_some(()).ok_or(format!("{term} not a fact")),
        Justification::Naf => (!model.contains(term)).then_some(()).ok_or(format!("not({term}) but {term} holds")),
        Justification::Rule { clause, .. } => {
            if !model.contains(term) {
                return Err(format!("{term} is not in the model"));
            }
            let c = &kb.clauses()[*clause];
            let mut env = BTreeMap::new();
            if !bind(&c.head, term, &mut env) || c.body.len() != tree.children.len() {
                return Err(format!("{term} is not an instance of clause {clause}"));
            }
            for (lit, child) in c.body.iter().zip(&tree.children) {
                if lit.negated != child.literal.negated || !bind(&lit.term, child.term(), &mut env) {
                    return Err(format!("child {} does not match {lit}", child.literal));
                }
                replay(child, kb, facts, model)?;
            }
            Ok(())
        }
    }
}

#[test]
fn solve_agrees_with_bottom_up_model() {
    let started = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut checked = 0usize;
    for kb in [eu_kb(), pl_kb()] {
        for _ in 0..200 {
            let facts = random_facts(&mut rng);
            let model = ground_oracle(&kb, &facts);
            for goal in ground_goals(&kb, &facts, &model) {
                let sols = solve(&goal, &kb, &facts).unwrap();
                assert_eq!(!sols.is_empty(), model.contains(&goal), "{goal} with {facts:?}");
                for s in &sols {
                    s.proof.check_shape(&kb, &facts).unwrap();
                    replay(&s.proof, &kb, &facts, &model).unwrap();
                }
                checked += 1;
            }
        }
    }
    assert!(checked > 2_000, "{checked}");
    assert!(started.elapsed().as_secs() < 30);
}

#[test]
fn adding_a_fact_keeps_naf_free_conclusions() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pool = candidate_facts();
    for kb in [eu_kb(), pl_kb()] {
        for _ in 0..100 {
            let facts = random_facts(&mut rng);
            let extra = facts.with(pool.choose(&mut rng).unwrap().clone()).unwrap();
            let model = ground_oracle(&kb, &facts);
            for goal in ground_goals(&kb, &facts, &model) {
                let sols = solve(&goal, &kb, &facts).unwrap();
                if sols.iter().any(|s| !s.proof.contains_naf()) {
                    assert!(!solve(&goal, &kb, &extra).unwrap().is_empty(), "{goal} lost");
                }
            }
        }
    }
}

#[test]
fn results_are_deterministic() {
    let kb = both_kbs();
    let goal = t("has_right(R, T, A, P, O)");
    let facts = parse_facts(
        "proceeding_language(mario, polish).\nperson_document(mario, charge).\n\
         proceeding_language(anna, italian).\nperson_document(anna, charge).",
    )
    .unwrap();
    let a = solve(&goal, &kb, &facts).unwrap();
    let b = solve(&goal, &kb, &facts).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 4);
}
