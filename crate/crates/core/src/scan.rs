//! Finding Prolog-shaped references such as `person_document(mario, charge)`
//! inside free text.

use alloc::string::String;
use alloc::vec::Vec;

use crate::term::Term;

/// A compound term found in text, with its byte span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Found {
    pub start: usize,
    pub end: usize,
    pub term: Term,
}

fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

/// Every compound term `name(arg, ...)` in `text`, nested ones included,
/// ordered by start position. A term must start at an identifier boundary
/// and its name must be followed directly by `(`; whitespace is allowed
/// around arguments.
pub fn scan_terms(text: &str) -> Vec<Found> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    for start in 0..bytes.len() {
        if !bytes[start].is_ascii_lowercase() || (start > 0 && is_ident_byte(bytes[start - 1])) {
            continue;
        }
        let mut p = Cursor { bytes, pos: start };
        if let Some(term) = p.compound() {
            out.push(Found { start, end: p.pos, term });
        }
    }
    out
}

/// Canonical strings of the terms found by [`scan_terms`], first
/// occurrence order, without duplicates.
pub fn scan_canonical(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for f in scan_terms(text) {
        let s = alloc::format!("{}", f.term);
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn ident(&mut self) -> Option<String> {
        let start = self.pos;
        match self.bytes.get(start) {
            Some(b) if b.is_ascii_alphabetic() || *b == b'_' => {}
            _ => return None,
        }
        while self.pos < self.bytes.len() && is_ident_byte(self.bytes[self.pos]) {
            self.pos += 1;
        }
        core::str::from_utf8(&self.bytes[start..self.pos]).ok().map(String::from)
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.bytes.get(self.pos) == Some(&b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// `name(args)` with a lowercase name.
    fn compound(&mut self) -> Option<Term> {
        let name = self.ident()?;
        if !name.as_bytes()[0].is_ascii_lowercase() || !self.eat(b'(') {
            return None;
        }
        let mut args = Vec::new();
        loop {
            self.skip_ws();
            args.push(self.arg()?);
            self.skip_ws();
            if self.eat(b')') {
                return Some(Term::app(name, args));
            }
            if !self.eat(b',') {
                return None;
            }
        }
    }

    fn arg(&mut self) -> Option<Term> {
        let save = self.pos;
        let name = self.ident()?;
        if !name.as_bytes()[0].is_ascii_lowercase() {
            return Some(Term::Var(name));
        }
        if self.bytes.get(self.pos) == Some(&b'(') {
            self.pos = save;
            return self.compound();
        }
        Some(Term::atom(name))
    }
}
