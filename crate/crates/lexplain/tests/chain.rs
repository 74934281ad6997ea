mod common;

use common::*;
use lexplain::chain::{evaluate_run, summarize, ChainError, ChainRun, ChainStage, CHAIN_CALLS};
use lexplain::gateway::{CompletionClient, GatewayError, LlmConfig, LlmResponse, MockClient};
use lexplain::{run_chain, run_repeated, run_repeated_parallel};
use lexplain_core::prompt::{build_comparison_prompt, build_translation_prompt, SOURCE_1_LABEL};

fn recorded_mock() -> MockClient {
    MockClient::new(recorded_outputs())
}

/// Answers by looking at the prompt, so runs can interleave freely.
struct ByPrompt;

impl CompletionClient for ByPrompt {
    fn complete(&self, prompt: &str, config: &LlmConfig) -> Result<LlmResponse, GatewayError> {
        let [eu, pl, cmp] = recorded_outputs();
        let text = if prompt.contains(SOURCE_1_LABEL) {
            cmp
        } else if prompt.contains("directive_2010_64_pl - ") {
            pl
        } else {
            eu
        };
        Ok(LlmResponse {
            text,
            model_id: config.model.clone(),
            latency: std::time::Duration::ZERO,
            prompt_tokens: 0,
            completion_tokens: 0,
        })
    }
}

fn same_content(a: &ChainRun, b: &ChainRun) -> bool {
    a.steps.iter().zip(&b.steps).all(|(x, y)| x.prompt == y.prompt && x.output == y.output)
        && a.inputs == b.inputs
        && a.config == b.config
}

#[test]
fn recorded_outputs_drive_a_full_chain() {
    let (a, b) = (listing1(), listing2());
    let mock = recorded_mock();
    let run = run_chain(&a, &b, &mock, &LlmConfig::default()).unwrap();
    let [eu, pl, cmp] = recorded_outputs();
    assert_eq!(run.steps.len(), CHAIN_CALLS);
    assert_eq!(mock.calls(), 3);
    assert_eq!(run.step1_outputs(), [eu.as_str(), pl.as_str()]);
    assert_eq!(run.step2_output(), cmp);

    let prompts = mock.prompts();
    assert_eq!(prompts[0], build_translation_prompt(&a));
    assert_eq!(prompts[1], build_translation_prompt(&b));
    assert_eq!(prompts[2], build_comparison_prompt(&eu, &pl).unwrap());
    assert!(prompts[2].contains(&eu) && prompts[2].contains(&pl));
    assert!(!prompts[2].contains(&a.raw_text) && !prompts[2].contains(&b.raw_text));
    for (step, p) in run.steps.iter().zip(&prompts) {
        assert_eq!(&step.prompt, p);
    }
}

#[test]
fn short_queue_fails_at_the_comparison() {
    let [eu, pl, _] = recorded_outputs();
    let mock = MockClient::new([eu.clone(), pl]);
    let err = run_chain(&listing1(), &listing2(), &mock, &LlmConfig::default()).unwrap_err();
    assert_eq!(err.stage, ChainStage::Compare);
    assert_eq!(err.completed.len(), 2);
    assert_eq!(err.completed[0].output, eu);
    assert!(matches!(err.error, ChainError::Gateway(GatewayError::Exhausted { served: 2 })));
    assert!(err.to_string().contains("step 2"));

    let one = MockClient::new([eu]);
    let err = run_chain(&listing1(), &listing2(), &one, &LlmConfig::default()).unwrap_err();
    assert_eq!(err.stage, ChainStage::Explain(2));
}

#[test]
fn repeated_runs_are_indexed_and_identical() {
    let mock = recorded_mock().cycling();
    let runs = run_repeated(&listing1(), &listing2(), &mock, &LlmConfig::default(), 10);
    assert_eq!(mock.calls(), 30);
    let runs: Vec<ChainRun> = runs.into_iter().map(Result::unwrap).collect();
    for (i, r) in runs.iter().enumerate() {
        assert_eq!(r.run_index, i);
        assert!(same_content(r, &runs[0]));
    }

    let single = run_repeated(&listing1(), &listing2(), &recorded_mock(), &LlmConfig::default(), 1);
    let chained = run_chain(&listing1(), &listing2(), &recorded_mock(), &LlmConfig::default()).unwrap();
    assert!(same_content(single[0].as_ref().unwrap(), &chained));
}

#[test]
fn failed_runs_do_not_stop_the_rest() {
    let [eu, pl, cmp] = recorded_outputs();
    // Seven responses: two full runs, then one explanation.
    let mock = MockClient::new([eu.clone(), pl.clone(), cmp.clone(), eu.clone(), pl, cmp, eu]);
    let outcomes = run_repeated(&listing1(), &listing2(), &mock, &LlmConfig::default(), 4);
    let ok: Vec<bool> = outcomes.iter().map(Result::is_ok).collect();
    assert_eq!(ok, [true, true, false, false]);
    assert_eq!(outcomes[2].as_ref().unwrap_err().stage, ChainStage::Explain(2));
    assert_eq!(outcomes[3].as_ref().unwrap_err().stage, ChainStage::Explain(1));

    let traces = [listing1(), listing2()];
    let reports: Vec<_> = outcomes.iter().flatten().map(|r| evaluate_run(r, &traces)).collect();
    let s = summarize(&outcomes, &reports, &traces);
    assert_eq!((s.runs, s.completed, s.failures.len()), (4, 2, 2));
    assert_eq!(s.failures[0].completed_steps, 1);
    assert_eq!(s.form_pass_rate, 1.0);
}

#[test]
fn parallel_runs_keep_index_order() {
    let traces = [listing1(), listing2()];
    let runs = run_repeated_parallel(&traces[0], &traces[1], &ByPrompt, &LlmConfig::default(), 12, 4);
    assert_eq!(runs.len(), 12);
    let first = runs[0].as_ref().unwrap();
    for (i, r) in runs.iter().enumerate() {
        let r = r.as_ref().unwrap();
        assert_eq!(r.run_index, i);
        assert!(same_content(r, first));
    }
    assert_eq!(first.step2_output(), recorded_outputs()[2]);
}

#[test]
fn chain_run_json() {
    let run = run_chain(&listing1(), &listing2(), &recorded_mock(), &LlmConfig::default()).unwrap();
    let json = serde_json::to_string(&run).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    for key in ["run_index", "config", "steps", "created_at", "inputs"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    for key in ["prompt", "output", "latency"] {
        assert!(v["steps"][0].get(key).is_some(), "{key}");
    }
    let back: ChainRun = serde_json::from_str(&json).unwrap();
    assert_eq!(back, run);
    assert_eq!(back.traces().unwrap(), vec![listing1(), listing2()]);
}

#[test]
fn run_reports_reproduce_the_published_verdicts() {
    let traces = [listing1(), listing2()];
    let run = run_chain(&traces[0], &traces[1], &recorded_mock(), &LlmConfig::default()).unwrap();
    let r = evaluate_run(&run, &traces);
    assert!(r.form_pass());
    assert!(r.explanations[0]
        .completeness
        .missing_terms
        .contains(&"essential_document(art3_2, mario, documents)".to_string()));
    assert_eq!(r.explanations[1].completeness.coverage, 1.0);
    assert!(r.explanations[1].groundedness.hallucinated_terms.is_empty());
}
