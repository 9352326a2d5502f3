//! Command-line front end. Results go to standard output, diagnostics and
//! progress to standard error.

pub mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use syntagm_agent::backend::{Backend, HttpBackend, ScriptedBackend};
use syntagm_agent::evalharness::{convert_public_suite, load_suite, SuiteError};
use syntagm_agent::retrieval::{index_knowledge_base, Embedder, HashingEmbedder, KnowledgeBase, RemoteEmbedder};
use syntagm_agent::{run_suite, run_syntagm, LoopConfig, LoopError, Outcome, RateTable, RetryPolicy, SuiteConfig};
use syntagm_aml::compile;
use syntagm_solver::{solve, write_lp, SolveOptions};

use config::{BackendKind, FileConfig};

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    /// The model or data has error diagnostics.
    pub const COMPILE_ERROR: u8 = 1;
    /// Bad arguments, unreadable or missing input, malformed config or suite.
    pub const USAGE: u8 = 2;
    /// The model compiled but the solve ended without an optimum.
    pub const NOT_OPTIMAL: u8 = 3;
    /// The loop used its whole budget without an aligned model.
    pub const BUDGET_EXHAUSTED: u8 = 4;
    /// The API key is missing or was rejected.
    pub const AUTH: u8 = 5;
    /// Any other backend failure after retries.
    pub const BACKEND: u8 = 6;
}

const EXIT_CODES_HELP: &str = "\
Exit codes:
  0  success (compiled, optimal, aligned, suite finished)
  1  compile errors
  2  usage error, missing or malformed input, empty suite
  3  solve finished without an optimum (infeasible, unbounded, limits)
  4  iteration budget exhausted without an aligned model
  5  API key missing or rejected
  6  other backend failure after retries";

#[derive(Debug, Parser)]
#[command(name = "syntagm", version, about = "Compile, solve and synthesize PyOPL models", after_help = EXIT_CODES_HELP)]
pub struct Cli {
    /// More log output on standard error (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    /// TOML config file; values set there override flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile a model and optional data file and print diagnostics.
    Compile {
        model: PathBuf,
        data: Option<PathBuf>,
    },
    /// Compile and solve, printing status and objective value.
    Solve {
        model: PathBuf,
        data: Option<PathBuf>,
        /// Print the model in LP format instead of solving it.
        #[arg(long)]
        emit_lp: bool,
        /// Also print the value of every variable.
        #[arg(long)]
        values: bool,
        #[arg(long, default_value_t = 1_000_000)]
        node_limit: usize,
        #[arg(long, default_value_t = 60.0, value_name = "SECONDS")]
        time_limit: f64,
    },
    /// Synthesize a model and data file for a problem description.
    Run {
        /// Text file with the problem description.
        problem: PathBuf,
        /// Directory for model.mod, data.dat, assessment.txt, telemetry.json
        /// and exchanges.jsonl.
        #[arg(long, default_value = "syntagm-out")]
        out: PathBuf,
        #[command(flatten)]
        agent: AgentArgs,
    },
    /// Run a benchmark suite and report accuracy and cost.
    Eval {
        suite: PathBuf,
        #[arg(long, value_enum, default_value_t = SuiteFormat::Native)]
        format: SuiteFormat,
        #[arg(long)]
        repetitions: Option<u32>,
        #[arg(long)]
        parallelism: Option<usize>,
        /// Directory for per-run artifacts, records.jsonl and report.json.
        #[arg(long, default_value = "syntagm-eval")]
        out: PathBuf,
        #[command(flatten)]
        agent: AgentArgs,
    },
    /// Knowledge-base maintenance.
    Kb {
        #[command(subcommand)]
        command: KbCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum KbCommand {
    /// Index a directory of <name>.txt/.mod/.dat triplets.
    Index {
        dir: PathBuf,
        /// Write manifest.toml with the provider id and dimension.
        #[arg(long)]
        write_manifest: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteFormat {
    /// One {"id", "description", "expected"} object per line.
    Native,
    /// Public benchmark exports (question/answer style keys).
    Public,
}

#[derive(Debug, Clone, Args)]
pub struct AgentArgs {
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    /// Replies for the scripted backend, one JSON object per line.
    #[arg(long, value_name = "FILE")]
    pub script: Option<PathBuf>,
    /// Base URL of an OpenAI-compatible service.
    #[arg(long)]
    pub url: Option<String>,
    /// Model id sent to the service and used for cost rates.
    #[arg(long)]
    pub model: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long, value_name = "VAR")]
    pub api_key_env: Option<String>,
    /// Maximum number of iterations.
    #[arg(long)]
    pub budget: Option<u32>,
    /// Number of few-shot exemplars to retrieve.
    #[arg(long)]
    pub k: Option<usize>,
    /// Knowledge-base directory; retrieval is off without one.
    #[arg(long, value_name = "DIR")]
    pub kb: Option<PathBuf>,
    /// TOML rate table (model id to per-1k-token prices).
    #[arg(long, value_name = "FILE")]
    pub rates: Option<PathBuf>,
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: exit::USAGE, message: message.into() }
    }
}

impl From<LoopError> for Failure {
    fn from(e: LoopError) -> Self {
        let code = match &e {
            LoopError::Backend { source, .. } if source.is_auth() => exit::AUTH,
            LoopError::Backend { .. } => exit::BACKEND,
            LoopError::Retrieval(_) | LoopError::Io { .. } => exit::USAGE,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<SuiteError> for Failure {
    fn from(e: SuiteError) -> Self {
        Failure::usage(e.to_string())
    }
}

type CmdResult = Result<u8, Failure>;

fn read_input(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn write_output(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}

/// Runs a parsed command line and returns the exit code. Errors are
/// reported on standard error.
pub fn run(cli: Cli) -> u8 {
    let file = match cli.config.as_deref().map(FileConfig::load).transpose() {
        Ok(f) => f.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: {e}");
            return exit::USAGE;
        }
    };
    let result = match cli.command {
        Command::Compile { model, data } => cmd_compile(&model, data.as_deref()),
        Command::Solve { model, data, emit_lp, values, node_limit, time_limit } => {
            let opts = SolveOptions { node_limit, time_limit_secs: time_limit, ..SolveOptions::default() };
            cmd_solve(&model, data.as_deref(), emit_lp, values, &opts)
        }
        Command::Run { problem, out, agent } => cmd_run(&problem, &out, &agent, &file),
        Command::Eval { suite, format, repetitions, parallelism, out, agent } => {
            cmd_eval(&suite, format, repetitions, parallelism, &out, &agent, &file)
        }
        Command::Kb { command: KbCommand::Index { dir, write_manifest } } => cmd_kb_index(&dir, write_manifest, &file),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn compile_files(model: &Path, data: Option<&Path>) -> Result<syntagm_aml::Compilation, Failure> {
    let m = read_input(model)?;
    let d = match data {
        Some(p) => read_input(p)?,
        None => String::new(),
    };
    Ok(compile(&m, &d))
}

fn cmd_compile(model: &Path, data: Option<&Path>) -> CmdResult {
    let c = compile_files(model, data)?;
    eprint!("{}", c.report());
    if !c.succeeded() {
        return Ok(exit::COMPILE_ERROR);
    }
    let flat = c.flat.as_ref().expect("expanded model");
    println!("ok: {} variables, {} constraints", flat.variables.len(), flat.rows.len());
    Ok(exit::OK)
}

fn cmd_solve(model: &Path, data: Option<&Path>, emit_lp: bool, values: bool, opts: &SolveOptions) -> CmdResult {
    opts.validate().map_err(Failure::usage)?;
    let c = compile_files(model, data)?;
    eprint!("{}", c.report());
    if !c.succeeded() {
        return Ok(exit::COMPILE_ERROR);
    }
    let flat = c.flat.as_ref().expect("expanded model");
    if emit_lp {
        print!("{}", write_lp(flat));
        return Ok(exit::OK);
    }
    let sol = solve(flat, opts);
    println!("status: {}", sol.status);
    match sol.objective_value {
        Some(v) => {
            println!("objective: {v}");
            if values {
                for (var, x) in flat.variables.iter().zip(&sol.assignment) {
                    println!("{} = {x}", var.name);
                }
            }
            Ok(exit::OK)
        }
        None => Ok(exit::NOT_OPTIMAL),
    }
}

struct Agent {
    backend: Box<dyn Backend>,
    kb: Option<KnowledgeBase>,
    loop_cfg: LoopConfig,
}

fn embedder(file: &FileConfig) -> Result<Arc<dyn Embedder>, Failure> {
    let e = &file.embedding;
    match e.provider.as_deref().unwrap_or("hashing") {
        "hashing" => Ok(Arc::new(HashingEmbedder::new())),
        "remote" => {
            let url = e.url.clone().ok_or_else(|| Failure::usage("[embedding] url is required for the remote provider"))?;
            let model = e.model.clone().ok_or_else(|| Failure::usage("[embedding] model is required for the remote provider"))?;
            let dim = e.dim.ok_or_else(|| Failure::usage("[embedding] dim is required for the remote provider"))?;
            let key = match &e.api_key_env {
                Some(var) => Some(std::env::var(var).map_err(|_| Failure {
                    code: exit::AUTH,
                    message: format!("environment variable {var} is not set"),
                })?),
                None => None,
            };
            Ok(Arc::new(RemoteEmbedder::new(url, model, dim, key)))
        }
        other => Err(Failure::usage(format!("unknown embedding provider {other:?}"))),
    }
}

fn build_agent(args: &AgentArgs, file: &FileConfig) -> Result<Agent, Failure> {
    let b = &file.backend;
    let kind = b.kind.or(args.backend).unwrap_or(BackendKind::Http);
    let model = b.model.clone().or_else(|| args.model.clone());
    let backend: Box<dyn Backend> = match kind {
        BackendKind::Scripted => {
            let script = b.script.clone().or_else(|| args.script.clone()).ok_or_else(|| Failure::usage("the scripted backend needs --script"))?;
            let s = ScriptedBackend::from_jsonl(&script).map_err(Failure::usage)?;
            Box::new(match model {
                Some(m) => s.with_model_id(m),
                None => s,
            })
        }
        BackendKind::Http => {
            let url = b.url.clone().or_else(|| args.url.clone()).unwrap_or_else(|| "https://api.openai.com/v1".into());
            let model = model.unwrap_or_else(|| "gpt-4.1".into());
            let var = b.api_key_env.clone().or_else(|| args.api_key_env.clone()).unwrap_or_else(|| "OPENAI_API_KEY".into());
            let timeout = Duration::from_secs(b.timeout_secs.unwrap_or(300));
            let h = HttpBackend::from_env(&url, &model, &var, timeout).map_err(|e| Failure { code: exit::AUTH, message: e.to_string() })?;
            Box::new(h)
        }
    };

    let budget = file.loop_.budget.or(args.budget).unwrap_or(syntagm_agent::orchestrator::DEFAULT_BUDGET);
    let k = file.loop_.k.or(args.k).unwrap_or(syntagm_agent::orchestrator::DEFAULT_K);
    if budget == 0 {
        return Err(Failure::usage("budget must be at least 1"));
    }
    if k == 0 {
        return Err(Failure::usage("k must be at least 1"));
    }
    let kb = match file.loop_.kb.clone().or_else(|| args.kb.clone()) {
        Some(dir) => Some(index_knowledge_base(&dir, embedder(file)?).map_err(|e| Failure::usage(e.to_string()))?),
        None => None,
    };
    let mut rates = match &args.rates {
        Some(p) => RateTable::load(p).map_err(Failure::usage)?,
        None => RateTable::default(),
    };
    for (m, r) in file.rate_table().rates {
        rates.insert(m, r);
    }
    let mut retry = RetryPolicy::default();
    if let Some(n) = b.max_retries {
        retry.max_retries = n;
    }
    let loop_cfg = LoopConfig {
        budget,
        k,
        params: file.decoding.clone().unwrap_or_default(),
        retry,
        rates,
        final_assessment: file.loop_.final_assessment.unwrap_or(true),
        ..Default::default()
    };
    Ok(Agent { backend, kb, loop_cfg })
}

fn cmd_run(problem: &Path, out: &Path, args: &AgentArgs, file: &FileConfig) -> CmdResult {
    let text = read_input(problem)?;
    let agent = build_agent(args, file)?;
    fs::create_dir_all(out).map_err(|e| Failure::usage(format!("cannot create {}: {e}", out.display())))?;
    let cfg = LoopConfig {
        model_path: Some(out.join("model.mod")),
        data_path: Some(out.join("data.dat")),
        exchange_log: Some(out.join("exchanges.jsonl")),
        ..agent.loop_cfg.clone()
    };
    let result = run_syntagm(&text, agent.kb.as_ref(), agent.backend.as_ref(), &cfg)?;
    write_output(&out.join("assessment.txt"), &result.assessment)?;
    write_output(&out.join("telemetry.json"), &serde_json::to_string_pretty(&result.telemetry).unwrap())?;
    write_output(&out.join("run.json"), &serde_json::to_string_pretty(&result).unwrap())?;
    let t = &result.telemetry;
    let outcome = match result.outcome {
        Outcome::Aligned => "aligned",
        Outcome::BudgetExhausted => "budget exhausted",
    };
    println!("outcome: {outcome}");
    println!("iterations: {}", t.iterations);
    println!("tokens: {} prompt, {} completion", t.prompt_tokens, t.completion_tokens);
    if let Some(c) = t.cost_usd {
        println!("cost: ${c:.6}");
    }
    println!("artifacts: {}", out.display());
    Ok(match result.outcome {
        Outcome::Aligned => exit::OK,
        Outcome::BudgetExhausted => exit::BUDGET_EXHAUSTED,
    })
}

fn cmd_eval(
    suite_path: &Path,
    format: SuiteFormat,
    repetitions: Option<u32>,
    parallelism: Option<usize>,
    out: &Path,
    args: &AgentArgs,
    file: &FileConfig,
) -> CmdResult {
    let suite = match format {
        SuiteFormat::Native => load_suite(suite_path)?,
        SuiteFormat::Public => convert_public_suite(suite_path)?,
    };
    let repetitions = file.eval.repetitions.or(repetitions).unwrap_or(1);
    if repetitions == 0 {
        return Err(Failure::usage("repetitions must be at least 1"));
    }
    let agent = build_agent(args, file)?;
    let cfg = SuiteConfig {
        loop_cfg: agent.loop_cfg.clone(),
        repetitions,
        out_dir: Some(out.to_path_buf()),
        parallelism: file.eval.parallelism.or(parallelism).unwrap_or(1).max(1),
        solve: SolveOptions::default(),
    };
    let (report, records) = run_suite(&suite, agent.kb.as_ref(), agent.backend.as_ref(), &cfg)?;
    print!("{}", report.to_table());
    eprintln!("records: {}", out.join(&suite.name).join("records.jsonl").display());
    if !records.is_empty() && records.iter().all(|r| r.auth_failure) {
        return Err(Failure { code: exit::AUTH, message: records[0].error.clone().unwrap_or_default() });
    }
    Ok(exit::OK)
}

fn cmd_kb_index(dir: &Path, write_manifest: bool, file: &FileConfig) -> CmdResult {
    let kb = index_knowledge_base(dir, embedder(file)?).map_err(|e| Failure::usage(e.to_string()))?;
    for (e, _) in &kb.entries {
        println!("{}", e.id);
    }
    eprintln!("indexed {} exemplars with {} ({} dims)", kb.len(), kb.provider_id(), kb.dim());
    if write_manifest {
        let path = kb.manifest().write(dir).map_err(|e| Failure::usage(e.to_string()))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(exit::OK)
}
