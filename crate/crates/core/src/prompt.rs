//! The two prompts of the explanation chain.
//!
//! Template texts are kept byte for byte as published, including the
//! misspelling "langaguage" and trailing spaces at the end of some lines.
//! Their SHA-256 digests are recorded so that an accidental edit (an editor
//! stripping trailing whitespace, say) is caught by the tests.

use alloc::format;
use alloc::string::String;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::trace::TraceDocument;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PromptId {
    Translation,
    Comparison,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PromptTemplate {
    pub id: PromptId,
    pub text: &'static str,
    /// Hex SHA-256 of `text`.
    pub sha256: &'static str,
}

/// Asks for Summary / What Rights do You Have / Why do You Have Them from
/// a proof trace.
pub const TRANSLATION: PromptTemplate = PromptTemplate {
    id: PromptId::Translation,
    text: include_str!("../prompts/translation.txt"),
    sha256: "3a2eb17fec8ba52bb01158388a82fad7fbd2ebc222e816d0f8923160f52437f7",
};

/// Asks for a two-step comparison of two explanations.
pub const COMPARISON: PromptTemplate = PromptTemplate {
    id: PromptId::Comparison,
    text: include_str!("../prompts/comparison.txt"),
    sha256: "fde41fe7b2466943091c25b0a72c1a6fea9d6b25a5d474a24e882415532b10dd",
};

/// Section headings the translation prompt asks for, in order.
pub const TRANSLATION_SECTIONS: [&str; 3] = ["Summary", "What Rights do You Have", "Why do You Have Them"];

/// Section headings expected in a comparison, in order.
pub const COMPARISON_SECTIONS: [&str; 2] = ["1. Comparison of differences", "2. Potential consequences"];

pub const SOURCE_1_LABEL: &str = "=== SOURCE 1 ===";
pub const SOURCE_2_LABEL: &str = "=== SOURCE 2 ===";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("explanation {0} is empty")]
    EmptyExplanation(usize),
}

impl PromptTemplate {
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.text.as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Wraps `payload` in a backtick fence longer than any backtick run inside it.
fn fenced(payload: &str) -> String {
    let mut longest = 0;
    let mut run = 0;
    for c in payload.chars() {
        run = if c == '`' { run + 1 } else { 0 };
        longest = longest.max(run);
    }
    let fence = "`".repeat(longest.max(2) + 1);
    let newline = if payload.ends_with('\n') { "" } else { "\n" };
    format!("{fence}\n{payload}{newline}{fence}")
}

/// The translation template, a blank line, then the trace in a fenced block.
pub fn build_translation_prompt(trace: &TraceDocument) -> String {
    format!("{}\n\n{}", TRANSLATION.text, fenced(&trace.raw_text))
}

/// The comparison template followed by both explanations, each under its
/// source label. Order is preserved.
pub fn build_comparison_prompt(first: &str, second: &str) -> Result<String, PromptError> {
    if first.trim().is_empty() {
        return Err(PromptError::EmptyExplanation(1));
    }
    if second.trim().is_empty() {
        return Err(PromptError::EmptyExplanation(2));
    }
    Ok(format!("{}\n\n{SOURCE_1_LABEL}\n{}\n\n{SOURCE_2_LABEL}\n{}", COMPARISON.text, fenced(first), fenced(second)))
}
