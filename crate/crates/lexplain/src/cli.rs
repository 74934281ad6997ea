//! The `lexplain` command line.
//!
//! Exit status: 0 success, 1 usage error, 2 unreadable or malformed input,
//! 3 no right could be derived, 4 completion backend failure.

use std::ffi::OsString;
use std::fmt::Display;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use lexplain_core::eval::evaluate;
use lexplain_core::prompt::{build_translation_prompt, COMPARISON_SECTIONS, TRANSLATION_SECTIONS};
use lexplain_core::{derive_rights, parse_facts, parse_rules, parse_trace, render_trace, KnowledgeBase, TraceDocument};
use serde::{Deserialize, Serialize};

use crate::chain::{evaluate_run, run_repeated_parallel, summarize, CompareSummary, RunReports};
use crate::gateway::{CompletionClient, GatewayError, HttpClient, LlmConfig, MockClient};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NO_BUNDLE: i32 = 3;
pub const EXIT_GATEWAY: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "lexplain", version, about = "Derive rights from legal rules, explain and compare them")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derive rights and write one trace file per rights bundle.
    Solve(InputArgs),
    /// Explain one trace in plain language and evaluate the result.
    Explain {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        llm: LlmArgs,
    },
    /// Explain two traces, compare the explanations, repeat and summarise.
    Compare {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        llm: LlmArgs,
        /// Number of chain runs.
        #[arg(long)]
        repetitions: Option<usize>,
        /// Runs in flight at once.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Evaluate an explanation against the trace it was made from.
    Evaluate {
        output: PathBuf,
        trace: PathBuf,
        #[arg(long, value_enum, default_value_t = Sections::Translation)]
        sections: Sections,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Sections {
    Translation,
    Comparison,
}

#[derive(Debug, Clone, Default, Args)]
pub struct InputArgs {
    /// TOML file with defaults for any of these options.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Rule file; repeat to load several.
    #[arg(long)]
    pub kb: Vec<PathBuf>,
    #[arg(long)]
    pub facts: Option<PathBuf>,
    /// Legal source id; repeat for several.
    #[arg(long)]
    pub source: Vec<String>,
    #[arg(long)]
    pub person: Option<String>,
    /// Use an existing trace file instead of deriving one.
    #[arg(long)]
    pub trace: Vec<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct LlmArgs {
    /// Directory of canned responses (`*.txt`, replayed in name order).
    #[arg(long)]
    pub mock_dir: Option<PathBuf>,
    /// Replay the canned responses again once they run out.
    #[arg(long)]
    pub mock_cycle: bool,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_tokens: Option<u32>,
    #[arg(long)]
    pub base_url: Option<String>,
    /// Request timeout in seconds.
    #[arg(long)]
    pub timeout: Option<u64>,
}

/// Contents of a `--config` file. Relative paths are taken from the file's
/// directory.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub kb: Option<Vec<PathBuf>>,
    pub facts: Option<PathBuf>,
    pub source: Option<Vec<String>>,
    pub person: Option<String>,
    pub trace: Option<Vec<PathBuf>>,
    pub out: Option<PathBuf>,
    pub mock_dir: Option<PathBuf>,
    pub mock_cycle: Option<bool>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
    pub base_url: Option<String>,
    pub timeout_secs: Option<u64>,
    pub repetitions: Option<usize>,
    pub jobs: Option<usize>,
}

/// Settings after merging flags over the config file over defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kb_paths: Vec<PathBuf>,
    pub facts_path: Option<PathBuf>,
    pub sources: Vec<String>,
    pub person: Option<String>,
    pub traces: Vec<PathBuf>,
    pub llm: LlmConfig,
    pub mock_dir: Option<PathBuf>,
    pub mock_cycle: bool,
    pub repetitions: usize,
    pub jobs: usize,
    pub output_dir: PathBuf,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Display) -> Self {
        CliError { code, message: message.to_string() }
    }
}

fn usage(m: impl Display) -> CliError {
    CliError::new(EXIT_USAGE, m)
}

fn input(path: &Path, m: impl Display) -> CliError {
    CliError::new(EXIT_INPUT, format!("{}: {m}", path.display()))
}

fn gateway(e: GatewayError) -> CliError {
    let code = match e {
        GatewayError::MockDir { .. } => EXIT_INPUT,
        GatewayError::Precondition(_) => EXIT_USAGE,
        _ => EXIT_GATEWAY,
    };
    CliError::new(code, e)
}

impl RunConfig {
    pub fn resolve(
        input: &InputArgs,
        llm: &LlmArgs,
        repetitions: Option<usize>,
        jobs: Option<usize>,
    ) -> Result<Self, CliError> {
        let file = match &input.config {
            Some(path) => load_config(path)?,
            None => FileConfig::default(),
        };
        let pick_vec = |flag: &Vec<PathBuf>, file: &Option<Vec<PathBuf>>| {
            if flag.is_empty() {
                file.clone().unwrap_or_default()
            } else {
                flag.clone()
            }
        };
        let defaults = LlmConfig::default();
        let base_url = llm.base_url.clone().or(file.base_url);
        let mock_dir = llm.mock_dir.clone().or(file.mock_dir);
        if mock_dir.is_some() && base_url.is_some() {
            return Err(usage("--mock-dir and --base-url cannot be combined"));
        }
        let config = RunConfig {
            kb_paths: pick_vec(&input.kb, &file.kb),
            facts_path: input.facts.clone().or(file.facts),
            sources: if input.source.is_empty() { file.source.unwrap_or_default() } else { input.source.clone() },
            person: input.person.clone().or(file.person),
            traces: pick_vec(&input.trace, &file.trace),
            llm: LlmConfig {
                model: llm.model.clone().or(file.model).unwrap_or(defaults.model),
                temperature: llm.temperature.or(file.temperature).unwrap_or(defaults.temperature),
                max_tokens: llm.max_tokens.or(file.max_tokens).unwrap_or(defaults.max_tokens),
                base_url: base_url.unwrap_or(defaults.base_url),
                timeout_secs: llm.timeout.or(file.timeout_secs).unwrap_or(defaults.timeout_secs),
            },
            mock_dir,
            mock_cycle: llm.mock_cycle || file.mock_cycle.unwrap_or(false),
            repetitions: repetitions.or(file.repetitions).unwrap_or(1),
            jobs: jobs.or(file.jobs).unwrap_or(1),
            output_dir: input.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("out")),
        };
        if config.repetitions == 0 {
            return Err(usage("--repetitions must be at least 1"));
        }
        if config.jobs == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        config.llm.validate().map_err(gateway)?;
        Ok(config)
    }

    fn client(&self) -> Result<Box<dyn CompletionClient>, CliError> {
        match &self.mock_dir {
            Some(dir) => {
                let mock = MockClient::from_dir(dir).map_err(gateway)?;
                Ok(Box::new(if self.mock_cycle { mock.cycling() } else { mock }))
            }
            None => Ok(Box::new(HttpClient::from_env().map_err(gateway)?)),
        }
    }
}

fn load_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| input(path, e))?;
    let mut c: FileConfig = toml::from_str(&text).map_err(|e| input(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let fix = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    };
    c.kb.iter_mut().flatten().for_each(fix);
    c.trace.iter_mut().flatten().for_each(fix);
    c.facts.iter_mut().for_each(fix);
    c.out.iter_mut().for_each(fix);
    c.mock_dir.iter_mut().for_each(fix);
    Ok(c)
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| input(path, e))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| input(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| input(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<String, CliError> {
    let mut json = serde_json::to_string_pretty(value).map_err(|e| input(path, e))?;
    json.push('\n');
    write(path, &json)?;
    Ok(json)
}

fn load_kb(paths: &[PathBuf]) -> Result<KnowledgeBase, CliError> {
    if paths.is_empty() {
        return Err(usage("at least one --kb file is required"));
    }
    let mut kb = KnowledgeBase::empty();
    for p in paths {
        let part = parse_rules(&read(p)?).map_err(|e| input(p, e))?;
        kb = kb.merge(&part).map_err(|e| input(p, e))?;
    }
    Ok(kb)
}

/// Traces for every requested source, derived from rules and facts.
/// Sources are all the knowledge base declares when none are named.
fn derive_traces(config: &RunConfig, first_only: bool) -> Result<Vec<TraceDocument>, CliError> {
    let kb = load_kb(&config.kb_paths)?;
    let facts_path = config.facts_path.as_ref().ok_or_else(|| usage("--facts is required"))?;
    let facts = parse_facts(&read(facts_path)?).map_err(|e| input(facts_path, e))?;
    let person = config.person.as_deref().ok_or_else(|| usage("--person is required"))?;
    let sources: Vec<String> =
        if config.sources.is_empty() { kb.sources().map(|s| s.id.clone()).collect() } else { config.sources.clone() };
    let mut docs = Vec::new();
    for source in &sources {
        let bundles = derive_rights(person, source, &kb, &facts).map_err(usage)?;
        if bundles.is_empty() {
            eprintln!("no right derived for {person} under {source}");
            if first_only {
                return Err(CliError::new(EXIT_NO_BUNDLE, format!("no right derived under {source}")));
            }
        }
        if first_only && bundles.len() > 1 {
            eprintln!("{source}: {} rights derived, using the first", bundles.len());
        }
        let take = if first_only { 1 } else { bundles.len() };
        for b in bundles.iter().take(take) {
            docs.push(render_trace(b, &kb).map_err(|e| input(&config.kb_paths[0], e))?);
        }
    }
    Ok(docs)
}

/// Exactly `n` traces, from `--trace` files or derived.
fn check_inputs(config: &RunConfig, n: usize) -> Result<(), CliError> {
    if !config.traces.is_empty() {
        if config.traces.len() != n {
            return Err(usage(format!("expected {n} --trace files, got {}", config.traces.len())));
        }
    } else if config.sources.len() != n {
        return Err(usage(format!("expected {n} --source values, got {}", config.sources.len())));
    }
    Ok(())
}

fn traces(config: &RunConfig, n: usize) -> Result<Vec<TraceDocument>, CliError> {
    check_inputs(config, n)?;
    if config.traces.is_empty() {
        return derive_traces(config, true);
    }
    config.traces.iter().map(|p| parse_trace(&read(p)?).map_err(|e| input(p, e))).collect()
}

fn trace_file_name(doc: &TraceDocument) -> String {
    format!("{}-{}.trace", doc.bundle.source, doc.bundle.article)
}

fn cmd_solve(config: &RunConfig) -> Result<(), CliError> {
    let docs = derive_traces(config, false)?;
    if docs.is_empty() {
        return Err(CliError::new(EXIT_NO_BUNDLE, "no right derived"));
    }
    for doc in &docs {
        let path = config.output_dir.join(trace_file_name(doc));
        write(&path, &doc.raw_text)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_explain(config: &RunConfig) -> Result<(), CliError> {
    let [doc]: [TraceDocument; 1] = traces(config, 1)?.try_into().expect("one trace");
    let client = config.client()?;
    let resp = client.complete(&build_translation_prompt(&doc), &config.llm).map_err(gateway)?;
    let out = &config.output_dir;
    write(&out.join(trace_file_name(&doc)), &doc.raw_text)?;
    write(&out.join("explanation.txt"), &resp.text)?;
    let report = evaluate(&resp.text, &doc, &TRANSLATION_SECTIONS);
    print!("{}", write_json(&out.join("report.json"), &report)?);
    Ok(())
}

fn cmd_compare(config: &RunConfig) -> Result<(), CliError> {
    check_inputs(config, 2)?;
    let client = config.client()?;
    let summary = compare_with(config, client.as_ref())?;
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serialises"));
    if summary.completed == 0 {
        return Err(CliError::new(EXIT_GATEWAY, "every run failed"));
    }
    Ok(())
}

/// The compare command against a given backend: runs the chain
/// `repetitions` times, writes every run, its reports and the summary.
pub fn compare_with(config: &RunConfig, client: &dyn CompletionClient) -> Result<CompareSummary, CliError> {
    let [a, b]: [TraceDocument; 2] = traces(config, 2)?.try_into().expect("two traces");
    let out = &config.output_dir;
    for doc in [&a, &b] {
        write(&out.join(trace_file_name(doc)), &doc.raw_text)?;
    }
    let outcomes = run_repeated_parallel(&a, &b, client, &config.llm, config.repetitions, config.jobs);
    let pair = [a, b];
    let mut reports: Vec<RunReports> = Vec::new();
    for outcome in &outcomes {
        match outcome {
            Ok(run) => {
                let n = run.run_index + 1;
                write_json(&out.join(format!("run-{n:03}.json")), run)?;
                let r = evaluate_run(run, &pair);
                write_json(&out.join(format!("run-{n:03}-report.json")), &r)?;
                reports.push(r);
            }
            Err(f) => {
                eprintln!("{f}");
                let partial = serde_json::json!({
                    "run_index": f.run_index,
                    "stage": f.stage.to_string(),
                    "error": f.error.to_string(),
                    "steps": f.completed,
                });
                write_json(&out.join(format!("run-{:03}-failed.json", f.run_index + 1)), &partial)?;
            }
        }
    }
    let summary = summarize(&outcomes, &reports, &pair);
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

fn cmd_evaluate(output: &Path, trace: &Path, sections: Sections, out: Option<&Path>) -> Result<(), CliError> {
    let text = read(output)?;
    let doc = parse_trace(&read(trace)?).map_err(|e| input(trace, e))?;
    let expected: &[&str] = match sections {
        Sections::Translation => &TRANSLATION_SECTIONS,
        Sections::Comparison => &COMPARISON_SECTIONS,
    };
    let report = evaluate(&text, &doc, expected);
    let dir = out.map_or_else(|| PathBuf::from("out"), Path::to_path_buf);
    print!("{}", write_json(&dir.join("report.json"), &report)?);
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Solve(input) => cmd_solve(&RunConfig::resolve(input, &LlmArgs::default(), None, None)?),
        Command::Explain { input, llm } => cmd_explain(&RunConfig::resolve(input, llm, None, None)?),
        Command::Compare { input, llm, repetitions, jobs } => {
            cmd_compare(&RunConfig::resolve(input, llm, *repetitions, *jobs)?)
        }
        Command::Evaluate { output, trace, sections, out } => cmd_evaluate(output, trace, *sections, out.as_deref()),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("lexplain: {}", e.message);
            e.code
        }
    }
}
