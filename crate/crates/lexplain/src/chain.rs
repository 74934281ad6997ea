//! The two-step prompt chain: one explanation per trace, then a comparison
//! of the two explanations.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use lexplain_core::eval::{check_form, evaluate, stability, EvaluationReport, FormResult, StabilityResult};
use lexplain_core::prompt::{
    build_comparison_prompt, build_translation_prompt, PromptError, COMPARISON_SECTIONS, TRANSLATION_SECTIONS,
};
use lexplain_core::{parse_trace, TraceDocument, TraceError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{CompletionClient, GatewayError, LlmConfig};

/// Completions in one chain run.
pub const CHAIN_CALLS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    pub prompt: String,
    pub output: String,
    /// Seconds.
    pub latency: f64,
}

/// A trace the chain was run on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainInput {
    pub trace: String,
    pub raw_text: String,
}

impl ChainInput {
    fn of(doc: &TraceDocument) -> Self {
        ChainInput { trace: doc.id(), raw_text: doc.raw_text.clone() }
    }
}

/// One complete chain run. `steps` holds the two explanations, in input
/// order, followed by the comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRun {
    pub run_index: usize,
    pub config: LlmConfig,
    pub steps: Vec<ChainStep>,
    pub created_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub inputs: Vec<ChainInput>,
}

impl ChainRun {
    pub fn step1_outputs(&self) -> [&str; 2] {
        [&self.steps[0].output, &self.steps[1].output]
    }

    pub fn step2_output(&self) -> &str {
        &self.steps[2].output
    }

    /// Parses the stored input traces back.
    pub fn traces(&self) -> Result<Vec<TraceDocument>, TraceError> {
        self.inputs.iter().map(|i| parse_trace(&i.raw_text)).collect()
    }
}

/// Where a chain stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChainStage {
    /// Explanation of input 1 or 2.
    Explain(usize),
    Compare,
}

impl std::fmt::Display for ChainStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChainStage::Explain(i) => write!(f, "step 1 (source {i})"),
            ChainStage::Compare => write!(f, "step 2"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ChainError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

#[derive(Debug, Error)]
#[error("run {run_index} failed at {stage}: {error}")]
pub struct ChainFailure {
    pub run_index: usize,
    pub stage: ChainStage,
    pub error: ChainError,
    /// Steps finished before the failure.
    pub completed: Vec<ChainStep>,
}

pub type RunOutcome = Result<ChainRun, ChainFailure>;

fn step(client: &dyn CompletionClient, config: &LlmConfig, prompt: String) -> Result<ChainStep, GatewayError> {
    let resp = client.complete(&prompt, config)?;
    Ok(ChainStep { prompt, output: resp.text, latency: resp.latency.as_secs_f64() })
}

/// Explains both traces, then compares the explanations. Makes exactly
/// three calls on success; step-1 outputs go into step 2 unchanged.
pub fn run_chain(
    trace_a: &TraceDocument,
    trace_b: &TraceDocument,
    client: &dyn CompletionClient,
    config: &LlmConfig,
) -> RunOutcome {
    run_indexed(0, trace_a, trace_b, client, config)
}

fn run_indexed(
    run_index: usize,
    trace_a: &TraceDocument,
    trace_b: &TraceDocument,
    client: &dyn CompletionClient,
    config: &LlmConfig,
) -> RunOutcome {
    let created_at = Utc::now();
    let mut steps = Vec::with_capacity(CHAIN_CALLS);
    let fail =
        |stage, error: ChainError, completed: Vec<ChainStep>| ChainFailure { run_index, stage, error, completed };
    for (i, trace) in [trace_a, trace_b].into_iter().enumerate() {
        match step(client, config, build_translation_prompt(trace)) {
            Ok(s) => steps.push(s),
            Err(e) => return Err(fail(ChainStage::Explain(i + 1), e.into(), steps)),
        }
    }
    let prompt = match build_comparison_prompt(&steps[0].output, &steps[1].output) {
        Ok(p) => p,
        Err(e) => return Err(fail(ChainStage::Compare, e.into(), steps)),
    };
    match step(client, config, prompt) {
        Ok(s) => steps.push(s),
        Err(e) => return Err(fail(ChainStage::Compare, e.into(), steps)),
    }
    Ok(ChainRun {
        run_index,
        config: config.clone(),
        steps,
        created_at,
        finished_at: Utc::now(),
        inputs: vec![ChainInput::of(trace_a), ChainInput::of(trace_b)],
    })
}

/// `n` runs one after another. A failed run does not stop the others.
pub fn run_repeated(
    trace_a: &TraceDocument,
    trace_b: &TraceDocument,
    client: &dyn CompletionClient,
    config: &LlmConfig,
    n: usize,
) -> Vec<RunOutcome> {
    (0..n).map(|i| run_indexed(i, trace_a, trace_b, client, config)).collect()
}

/// Like [`run_repeated`] with up to `jobs` runs in flight. Results are
/// ordered by run index. With a queue-driven mock the pairing of responses
/// to runs depends on scheduling, so use one job there.
pub fn run_repeated_parallel(
    trace_a: &TraceDocument,
    trace_b: &TraceDocument,
    client: &dyn CompletionClient,
    config: &LlmConfig,
    n: usize,
    jobs: usize,
) -> Vec<RunOutcome> {
    let jobs = jobs.clamp(1, n.max(1));
    if jobs == 1 {
        return run_repeated(trace_a, trace_b, client, config, n);
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<RunOutcome>>> = (0..n).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let outcome = run_indexed(i, trace_a, trace_b, client, config);
                *slots[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(outcome);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap_or_else(|e| e.into_inner()).expect("every run index is claimed once"))
        .collect()
}

// ---------------------------------------------------------------------------

/// Evaluation of one completed run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReports {
    pub run_index: usize,
    /// One report per explanation, in input order.
    pub explanations: Vec<EvaluationReport>,
    pub comparison_form: FormResult,
}

impl RunReports {
    /// Every output of the run has the requested structure.
    pub fn form_pass(&self) -> bool {
        self.comparison_form.pass && self.explanations.iter().all(|r| r.form.pass)
    }
}

pub fn evaluate_run(run: &ChainRun, traces: &[TraceDocument; 2]) -> RunReports {
    let explanations = run
        .step1_outputs()
        .iter()
        .zip(traces)
        .map(|(out, trace)| evaluate(out, trace, &TRANSLATION_SECTIONS).with_run_index(run.run_index))
        .collect();
    RunReports {
        run_index: run.run_index,
        explanations,
        comparison_form: check_form(run.step2_output(), &COMPARISON_SECTIONS),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub run_index: usize,
    pub stage: String,
    pub error: String,
    pub completed_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSummary {
    pub trace: String,
    /// Absent with fewer than two completed runs.
    pub stability: Option<StabilityResult>,
}

/// Aggregate over all runs of a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub runs: usize,
    pub completed: usize,
    /// Share of completed runs whose three outputs all pass the form check.
    pub form_pass_rate: f64,
    pub comparison_form_pass_rate: f64,
    pub sources: Vec<SourceSummary>,
    pub failures: Vec<FailureRecord>,
}

pub fn summarize(outcomes: &[RunOutcome], reports: &[RunReports], traces: &[TraceDocument; 2]) -> CompareSummary {
    let completed = reports.len();
    let rate = |pass: usize| if completed == 0 { 0.0 } else { pass as f64 / completed as f64 };
    let sources = traces
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let per_run: Vec<EvaluationReport> = reports.iter().map(|r| r.explanations[i].clone()).collect();
            SourceSummary { trace: t.id(), stability: stability(&per_run).ok() }
        })
        .collect();
    let failures = outcomes
        .iter()
        .filter_map(|o| o.as_ref().err())
        .map(|f| FailureRecord {
            run_index: f.run_index,
            stage: f.stage.to_string(),
            error: f.error.to_string(),
            completed_steps: f.completed.len(),
        })
        .collect();
    CompareSummary {
        runs: outcomes.len(),
        completed,
        form_pass_rate: rate(reports.iter().filter(|r| r.form_pass()).count()),
        comparison_form_pass_rate: rate(reports.iter().filter(|r| r.comparison_form.pass).count()),
        sources,
        failures,
    }
}
