mod common;

use std::collections::BTreeSet;

use common::*;
use lexplain_core::eval::{
    check_completeness, check_form, check_groundedness, evaluate, stability, EvaluationReport, StabilityError,
};
use lexplain_core::prompt::{COMPARISON_SECTIONS, TRANSLATION_SECTIONS};
use lexplain_core::TraceDocument;
use proptest::prelude::*;

/// Plain substring check over the tree lines of the raw trace. A line
/// directly under a conclusion with the same name and arity one less counts
/// when its conclusion does.
fn naive_missing(output: &str, trace: &TraceDocument) -> BTreeSet<String> {
    let mut missing = BTreeSet::new();
    let mut conclusion: Option<(String, bool)> = None;
    let mut in_tree = false;
    for line in trace.raw_text.lines() {
        if line == "Explanation:" {
            in_tree = true;
            continue;
        }
        if line.is_empty() {
            if conclusion.is_some() {
                in_tree = false;
            }
            continue;
        }
        if !in_tree {
            continue;
        }
        let depth = (line.len() - line.trim_start().len()) / 4;
        let text = line.trim_start().trim_end_matches(" [FACT]").to_string();
        let cited = output.contains(&text);
        if depth == 0 {
            conclusion = Some((text.clone(), cited));
        }
        let restated = depth == 1
            && conclusion.as_ref().is_some_and(|(c, cited)| {
                *cited
                    && c.split('(').next() == text.split('(').next()
                    && c.matches(',').count() == text.matches(',').count() + 1
            });
        if !cited && !restated {
            missing.insert(text);
        }
    }
    missing
}

#[test]
fn polish_output_is_complete_and_grounded() {
    let out = fixture("outputs/pl_explanation.txt");
    let trace = listing2();
    let report = evaluate(&out, &trace, &TRANSLATION_SECTIONS);
    assert!(report.form.pass, "{:?}", report.form);
    assert_eq!(report.form.sections_found, TRANSLATION_SECTIONS);
    assert_eq!(report.completeness.coverage, 1.0);
    assert!(report.completeness.missing_terms.is_empty());
    assert_eq!(report.completeness.required_terms.len(), 8);
    assert!(report.groundedness.hallucinated_terms.is_empty());
    assert_eq!(report.trace, "directive_2010_64_pl - article204_2");
    assert!(naive_missing(&out, &trace).is_empty());
}

#[test]
fn eu_output_skips_the_essential_document() {
    let out = fixture("outputs/eu_explanation.txt");
    let trace = listing1();
    let report = evaluate(&out, &trace, &TRANSLATION_SECTIONS);
    assert!(report.form.pass, "{:?}", report.form);
    assert!(report.completeness.missing_terms.contains(&"essential_document(art3_2, mario, documents)".to_string()));
    assert!(report.completeness.coverage < 1.0);
    let naive = naive_missing(&out, &trace);
    let ours: BTreeSet<String> = report.completeness.missing_terms.iter().cloned().collect();
    assert_eq!(ours, naive);
    let expected = (11 - naive.len()) as f64 / 11.0;
    assert!((report.completeness.coverage - expected).abs() < 1e-12);
}

#[test]
fn comparison_output_has_both_parts() {
    let out = fixture("outputs/comparison.txt");
    let form = check_form(&out, &COMPARISON_SECTIONS);
    assert!(form.pass, "{form:?}");
    assert!(!check_form(&out, &TRANSLATION_SECTIONS).pass);
}

#[test]
fn form_failures_are_named() {
    let eu = fixture("outputs/eu_explanation.txt");
    let no_summary: String = eu.lines().filter(|l| !l.starts_with("Summary")).collect::<Vec<_>>().join("\n");
    let form = check_form(&no_summary, &TRANSLATION_SECTIONS);
    assert!(!form.pass);
    assert!(form.violations.iter().any(|v| v.contains("Summary")));

    let reordered = "Why do You Have Them:\nx\nSummary: y\nWhat Rights do You Have:\nz\n";
    assert!(!check_form(reordered, &TRANSLATION_SECTIONS).pass);
    let styled = "## summary\ntext\n**What rights do you have**\n- a\n* Why do You Have Them:\n";
    assert!(check_form(styled, &TRANSLATION_SECTIONS).pass);
}

#[test]
fn invented_terms_are_reported() {
    let out = fixture("outputs/pl_explanation.txt") + "\nAlso person_understands(mario, english) holds.\n";
    let g = check_groundedness(&out, &listing2());
    assert_eq!(g.hallucinated_terms, ["person_understands(mario, english)"]);
}

#[test]
fn report_json_round_trip() {
    let report = evaluate(&fixture("outputs/eu_explanation.txt"), &listing1(), &TRANSLATION_SECTIONS).with_run_index(3);
    let json = serde_json::to_string_pretty(&report).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    for key in ["run_index", "form", "completeness", "groundedness", "manual"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert!(v["completeness"]["missing"].is_array());
    assert!(v["manual"]["juridical_pass"].is_null());
    let back: EvaluationReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, report);
}

#[test]
fn stability_over_repeated_reports() {
    let eu = fixture("outputs/eu_explanation.txt");
    let good = evaluate(&eu, &listing1(), &TRANSLATION_SECTIONS);
    let reports: Vec<EvaluationReport> = (0..10).map(|i| good.clone().with_run_index(i)).collect();
    let s = stability(&reports).unwrap();
    assert_eq!(s.runs, 10);
    assert_eq!(s.form_pass_rate, 1.0);
    assert_eq!(s.coverage_variance, 0.0);
    assert_eq!(s.coverage_min, s.coverage_max);

    let broken = eu.replacen("Summary:", "Overview:", 1);
    let mut mixed = reports.clone();
    mixed[4] = evaluate(&broken, &listing1(), &TRANSLATION_SECTIONS).with_run_index(4);
    assert_eq!(stability(&mixed).unwrap().form_pass_rate, 0.9);

    assert_eq!(stability(&reports[..1]), Err(StabilityError::TooFewReports(1)));
    let mut other = reports.clone();
    other[2] = evaluate(&fixture("outputs/pl_explanation.txt"), &listing2(), &TRANSLATION_SECTIONS);
    assert!(matches!(stability(&other), Err(StabilityError::DifferentInputs { index: 2, .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn appending_text_never_lowers_coverage(extra in "[ -~\n]{0,200}") {
        for (out, trace) in [
            (fixture("outputs/eu_explanation.txt"), listing1()),
            (fixture("outputs/pl_explanation.txt"), listing2()),
        ] {
            let before = check_completeness(&out, &trace);
            let after = check_completeness(&(out.clone() + &extra), &trace);
            prop_assert!(after.coverage >= before.coverage);
            prop_assert!((0.0..=1.0).contains(&after.coverage));
            prop_assert_eq!(check_completeness(&out, &trace), before);
        }
    }

    #[test]
    fn a_trace_cites_itself(pick in 0usize..2) {
        let trace = [listing1(), listing2()][pick].clone();
        let c = check_completeness(&trace.raw_text, &trace);
        prop_assert_eq!(c.coverage, 1.0);
        prop_assert!(check_groundedness(&trace.raw_text, &trace).hallucinated_terms.is_empty());
    }
}
