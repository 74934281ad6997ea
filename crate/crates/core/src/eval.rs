//! Automated checks of a generated explanation against its trace.
//!
//! * form: the requested section headings appear once each, in order;
//! * completeness: every term of the trace is cited in Prolog form;
//! * groundedness: every Prolog-shaped reference in the output exists in
//!   the trace.
//!
//! Whether the prose gets the law right is left to a human reviewer; the
//! report carries an empty [`ManualAnnotation`] for that.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::parse_term;
use crate::scan::scan_canonical;
use crate::trace::{extract_terms, TermRole, TraceDocument, TraceNode, TraceTerm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormResult {
    pub pass: bool,
    /// Expected headings in the order they were found, repeats included.
    #[serde(rename = "sections")]
    pub sections_found: Vec<String>,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletenessResult {
    pub coverage: f64,
    #[serde(rename = "missing")]
    pub missing_terms: Vec<String>,
    #[serde(rename = "required")]
    pub required_terms: Vec<String>,
    #[serde(rename = "cited")]
    pub cited_terms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundednessResult {
    #[serde(rename = "hallucinated")]
    pub hallucinated_terms: Vec<String>,
}

/// Filled in by a legal reviewer; `juridical_pass` stays `None` until then.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ManualAnnotation {
    pub juridical_pass: Option<bool>,
    pub notes: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub run_index: usize,
    /// `<source> - <article>` of the trace the output was checked against.
    pub trace: String,
    pub form: FormResult,
    pub completeness: CompletenessResult,
    pub groundedness: GroundednessResult,
    #[serde(default)]
    pub manual: ManualAnnotation,
}

impl EvaluationReport {
    pub fn with_run_index(mut self, run_index: usize) -> Self {
        self.run_index = run_index;
        self
    }
}

/// Drops list markers (`1.`, `a)`, `-`, `1 -`) and markdown emphasis or
/// heading marks from the start of a line.
fn strip_marker(line: &str) -> &str {
    let mut s = line.trim_start().trim_start_matches(['#', '*']).trim_start();
    for bullet in ["- ", "* ", "• "] {
        if let Some(rest) = s.strip_prefix(bullet) {
            return rest.trim_start();
        }
    }
    let digits = s.bytes().take_while(u8::is_ascii_digit).count();
    let label = if digits > 0 {
        digits
    } else if s.bytes().next().is_some_and(|b| b.is_ascii_lowercase()) {
        1
    } else {
        0
    };
    if label > 0 {
        let rest = &s[label..];
        for sep in [". ", ") ", " - "] {
            if let Some(r) = rest.strip_prefix(sep) {
                s = r.trim_start();
                return s.trim_start_matches(['*']).trim_start();
            }
        }
    }
    s
}

fn heading_matches(line: &str, section: &str) -> bool {
    let line = strip_marker(line);
    let want = strip_marker(section).trim_end_matches(':');
    if line.len() < want.len() || !line.is_char_boundary(want.len()) {
        return false;
    }
    let (head, rest) = line.split_at(want.len());
    head.eq_ignore_ascii_case(want) && rest.chars().next().is_none_or(|c| c == ':' || c == '*' || c.is_whitespace())
}

/// Checks that each expected heading starts exactly one line, in order.
pub fn check_form(output: &str, expected_sections: &[&str]) -> FormResult {
    let mut found: Vec<usize> = Vec::new();
    for line in output.lines() {
        if let Some(i) = expected_sections.iter().position(|s| heading_matches(line, s)) {
            found.push(i);
        }
    }
    let mut violations = Vec::new();
    for (i, name) in expected_sections.iter().enumerate() {
        match found.iter().filter(|&&f| f == i).count() {
            0 => violations.push(format!("missing section: {name}")),
            1 => {}
            n => violations.push(format!("section repeated {n} times: {name}")),
        }
    }
    let mut last = None;
    for &f in &found {
        if last.is_some_and(|l| f < l) {
            violations.push(format!("section out of order: {}", expected_sections[f]));
        }
        last = Some(last.map_or(f, |l: usize| l.max(f)));
    }
    FormResult {
        pass: violations.is_empty(),
        sections_found: found.iter().map(|&i| expected_sections[i].to_string()).collect(),
        violations,
    }
}

/// A depth-one line that restates its section's conclusion with one
/// argument fewer, e.g. `has_right/4` under `has_right/5`.
fn restates_conclusion(terms: &[TraceTerm], i: usize) -> Option<usize> {
    let t = &terms[i];
    let parent = t.parent?;
    let p = &terms[parent];
    if t.role != TermRole::Intermediate || t.depth != 1 || p.role != TermRole::Conclusion {
        return None;
    }
    let pred = |s: &str| parse_term(s).ok().and_then(|t| t.pred());
    let (mine, theirs) = (pred(&t.text)?, pred(&p.text)?);
    (mine.name == theirs.name && mine.arity + 1 == theirs.arity).then_some(parent)
}

/// Which trace terms the output cites in Prolog form.
pub fn check_completeness(output: &str, trace: &TraceDocument) -> CompletenessResult {
    let terms = extract_terms(trace);
    let mentioned: BTreeSet<String> = scan_canonical(output).into_iter().collect();
    let mut required: Vec<String> = Vec::new();
    let mut cited: Vec<String> = Vec::new();
    for (i, t) in terms.iter().enumerate() {
        if required.contains(&t.text) {
            continue;
        }
        required.push(t.text.clone());
        let by_conclusion = restates_conclusion(&terms, i).is_some_and(|p| mentioned.contains(&terms[p].text));
        if mentioned.contains(&t.text) || by_conclusion {
            cited.push(t.text.clone());
        }
    }
    let missing: Vec<String> = required.iter().filter(|r| !cited.contains(r)).cloned().collect();
    let coverage = if required.is_empty() { 1.0 } else { cited.len() as f64 / required.len() as f64 };
    CompletenessResult { coverage, missing_terms: missing, required_terms: required, cited_terms: cited }
}

/// Prolog-shaped references in the output that the trace does not contain,
/// either as a line or as a subterm of one.
pub fn check_groundedness(output: &str, trace: &TraceDocument) -> GroundednessResult {
    fn known_terms(n: &TraceNode, out: &mut BTreeSet<String>) {
        out.insert(n.text());
        for t in n.term.compound_subterms() {
            out.insert(t.to_string());
        }
        n.children.iter().for_each(|c| known_terms(c, out));
    }
    let mut known = BTreeSet::new();
    trace.bundle.trees().for_each(|t| known_terms(t, &mut known));
    GroundednessResult {
        hallucinated_terms: scan_canonical(output).into_iter().filter(|t| !known.contains(t)).collect(),
    }
}

/// All three checks for one output; `run_index` is 0.
pub fn evaluate(output: &str, trace: &TraceDocument, expected_sections: &[&str]) -> EvaluationReport {
    EvaluationReport {
        run_index: 0,
        trace: trace.id(),
        form: check_form(output, expected_sections),
        completeness: check_completeness(output, trace),
        groundedness: check_groundedness(output, trace),
        manual: ManualAnnotation::default(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityResult {
    pub runs: usize,
    pub form_pass_rate: f64,
    pub coverage_min: f64,
    pub coverage_mean: f64,
    pub coverage_max: f64,
    pub coverage_variance: f64,
    /// Runs whose output referenced at least one term absent from the trace.
    pub hallucinating_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StabilityError {
    #[error("stability needs at least two reports, got {0}")]
    TooFewReports(usize),
    #[error("report {index} was produced from different inputs ({found} vs {expected})")]
    DifferentInputs { index: usize, expected: String, found: String },
}

/// Spread of the checks across repeated runs on the same inputs.
pub fn stability(reports: &[EvaluationReport]) -> Result<StabilityResult, StabilityError> {
    let [first, ..] = reports else {
        return Err(StabilityError::TooFewReports(0));
    };
    if reports.len() < 2 {
        return Err(StabilityError::TooFewReports(reports.len()));
    }
    for (index, r) in reports.iter().enumerate() {
        if r.trace != first.trace || r.completeness.required_terms != first.completeness.required_terms {
            return Err(StabilityError::DifferentInputs {
                index,
                expected: first.trace.clone(),
                found: r.trace.clone(),
            });
        }
    }
    let n = reports.len() as f64;
    let coverages: Vec<f64> = reports.iter().map(|r| r.completeness.coverage).collect();
    // Shifted by the first value so that identical runs give exactly zero.
    let shift = coverages[0];
    let mean_dev = coverages.iter().map(|c| c - shift).sum::<f64>() / n;
    let mean_sq = coverages.iter().map(|c| (c - shift) * (c - shift)).sum::<f64>() / n;
    Ok(StabilityResult {
        runs: reports.len(),
        form_pass_rate: reports.iter().filter(|r| r.form.pass).count() as f64 / n,
        coverage_min: coverages.iter().copied().fold(f64::INFINITY, f64::min),
        coverage_mean: shift + mean_dev,
        coverage_max: coverages.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        coverage_variance: (mean_sq - mean_dev * mean_dev).max(0.0),
        hallucinating_runs: reports.iter().filter(|r| !r.groundedness.hallucinated_terms.is_empty()).count(),
    })
}
