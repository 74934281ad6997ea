#![allow(dead_code)]

use std::path::PathBuf;

use lexplain_core::{parse_facts, parse_rules, parse_trace, CaseFacts, KnowledgeBase, TraceDocument};

pub const EU: &str = "directive_2010_64";
pub const PL: &str = "directive_2010_64_pl";

pub fn fixture(rel: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", rel].iter().collect();
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn eu_kb() -> KnowledgeBase {
    parse_rules(&fixture("kb/directive_2010_64.pl")).unwrap()
}

pub fn pl_kb() -> KnowledgeBase {
    parse_rules(&fixture("kb/directive_2010_64_pl.pl")).unwrap()
}

pub fn both_kbs() -> KnowledgeBase {
    eu_kb().merge(&pl_kb()).unwrap()
}

pub fn mario() -> CaseFacts {
    parse_facts(&fixture("facts/mario.facts")).unwrap()
}

pub fn listing1() -> TraceDocument {
    parse_trace(&fixture("traces/listing1.trace")).unwrap()
}

pub fn listing2() -> TraceDocument {
    parse_trace(&fixture("traces/listing2.trace")).unwrap()
}
