//! Rule-based reasoning about procedural rights, with explanations.
//!
//! The crate covers the pure half of the pipeline:
//!
//! * [`dsl`]: a Prolog-like rule language for legal sources, and case facts;
//! * [`engine`]: SLD resolution with negation as failure, yielding proof trees;
//! * [`oracle`]: a bottom-up reference model used to check the engine;
//! * [`rights`]: grouping proofs into primary rights with attached
//!   auxiliary rights and right properties;
//! * [`trace`]: the textual trace format exchanged with a language model;
//! * [`prompt`]: the explanation and comparison prompts;
//! * [`eval`]: form, completeness and groundedness checks on explanations.
//!
//! Nothing here performs IO. The `lexplain` crate provides files, the
//! completion gateway, the prompt chain and the command line.

#![no_std]

extern crate alloc;

pub mod dsl;
pub mod engine;
pub mod eval;
pub mod kb;
pub mod oracle;
pub mod prompt;
pub mod rights;
pub mod scan;
pub mod term;
pub mod trace;

pub use dsl::{parse_facts, parse_rules, parse_term, serialize_rules};
pub use engine::{solve, EngineError, Justification, ProofTree, Solution, Solver, Substitution};
pub use kb::{CaseFacts, KbError, KnowledgeBase, LegalSource};
pub use oracle::ground_oracle;
pub use rights::{derive_rights, RightsBundle};
pub use term::{Clause, Literal, Pred, Term};
pub use trace::{extract_terms, parse_trace, render_trace, TraceDocument, TraceError, TraceTerm};
