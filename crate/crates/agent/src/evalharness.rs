//! Benchmark suites: run every instance through the loop, compile and solve
//! the final artifacts, and compare the objective with the expected one.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use syntagm_aml::compile;
use syntagm_solver::{solve, SolveOptions, SolveStatus};
use thiserror::Error;

use crate::backend::Backend;
use crate::orchestrator::{run_syntagm, LoopConfig, LoopError, Outcome};
use crate::retrieval::KnowledgeBase;
use crate::telemetry::Telemetry;

pub const RTOL: f64 = 1e-6;
pub const ATOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutcomeClass {
    AC,
    CE,
    RE,
    WA,
}

/// `true` when `|observed - expected| <= max(ATOL, RTOL * |expected|)`.
pub fn within_tolerance(observed: f64, expected: f64) -> bool {
    (observed - expected).abs() <= ATOL.max(RTOL * expected.abs())
}

pub fn classify_outcome(
    observed: Option<f64>,
    expected: Option<f64>,
    compiled: bool,
    status: Option<SolveStatus>,
) -> OutcomeClass {
    if !compiled {
        return OutcomeClass::CE;
    }
    let observed = if status == Some(SolveStatus::Optimal) { observed } else { None };
    match (observed, expected) {
        (None, Some(_)) => OutcomeClass::RE,
        (None, None) => OutcomeClass::AC,
        (Some(o), Some(e)) if within_tolerance(o, e) => OutcomeClass::AC,
        _ => OutcomeClass::WA,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkInstance {
    pub id: String,
    pub description: String,
    pub expected: Option<f64>,
}

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {detail}")]
    Malformed { path: PathBuf, line: usize, detail: String },
    #[error("{0} contains no instances")]
    Empty(PathBuf),
    #[error("{path}: duplicate instance id {id}")]
    DuplicateId { path: PathBuf, id: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Suite {
    pub name: String,
    pub instances: Vec<BenchmarkInstance>,
}

fn suite_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| "suite".into(), |s| s.to_string_lossy().into_owned())
}

/// Reads the native format: one `{"id", "description", "expected"}` object per line.
pub fn load_suite(path: &Path) -> Result<Suite, SuiteError> {
    let text = std::fs::read_to_string(path).map_err(|source| SuiteError::Io { path: path.into(), source })?;
    let mut instances = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let inst: BenchmarkInstance = serde_json::from_str(line).map_err(|e| SuiteError::Malformed {
            path: path.into(),
            line: i + 1,
            detail: e.to_string(),
        })?;
        instances.push(inst);
    }
    finish_suite(path, instances)
}

fn finish_suite(path: &Path, instances: Vec<BenchmarkInstance>) -> Result<Suite, SuiteError> {
    if instances.is_empty() {
        return Err(SuiteError::Empty(path.into()));
    }
    let mut seen = HashSet::new();
    for inst in &instances {
        if !seen.insert(inst.id.as_str()) {
            return Err(SuiteError::DuplicateId { path: path.into(), id: inst.id.clone() });
        }
    }
    Ok(Suite { name: suite_name(path), instances })
}

const TEXT_KEYS: &[&str] = &["description", "question", "en_question", "problem", "prompt"];
const ANSWER_KEYS: &[&str] = &["expected", "answer", "en_answer", "optimal_value", "objective"];

fn parse_answer(v: &Value) -> Result<Option<f64>, String> {
    match v {
        Value::Null => Ok(None),
        Value::Number(n) => n.as_f64().map(Some).ok_or_else(|| format!("bad number {n}")),
        Value::String(s) => {
            let t = s.trim();
            if let Ok(x) = t.replace(',', "").parse::<f64>() {
                return Ok(Some(x));
            }
            // Cleaned benchmarks mark instances without an optimum in prose.
            let lower = t.to_lowercase();
            if lower.is_empty()
                || ["null", "none", "no best solution", "infeasible", "unbounded", "no solution"].contains(&lower.as_str())
            {
                Ok(None)
            } else {
                Err(format!("unrecognized answer {s:?}"))
            }
        }
        other => Err(format!("unsupported answer {other}")),
    }
}

/// Reads public benchmark exports: a JSON array or line-delimited objects
/// whose text and answer sit under any of the usual key names. Records
/// without an `id` are numbered from 1.
pub fn convert_public_suite(path: &Path) -> Result<Suite, SuiteError> {
    let text = std::fs::read_to_string(path).map_err(|source| SuiteError::Io { path: path.into(), source })?;
    let malformed = |line: usize, detail: String| SuiteError::Malformed { path: path.into(), line, detail };
    let records: Vec<(usize, Value)> = match serde_json::from_str::<Value>(text.trim()) {
        Ok(Value::Array(items)) => items.into_iter().enumerate().map(|(i, v)| (i + 1, v)).collect(),
        _ => {
            let mut out = Vec::new();
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let v = serde_json::from_str(line).map_err(|e| malformed(i + 1, e.to_string()))?;
                out.push((i + 1, v));
            }
            out
        }
    };
    let mut instances = Vec::new();
    for (n, (line, rec)) in records.into_iter().enumerate() {
        let obj = rec.as_object().ok_or_else(|| malformed(line, "record is not an object".into()))?;
        let description = TEXT_KEYS
            .iter()
            .find_map(|k| obj.get(*k).and_then(Value::as_str))
            .ok_or_else(|| malformed(line, format!("no text under any of {}", TEXT_KEYS.join(", "))))?
            .to_string();
        let expected = match ANSWER_KEYS.iter().find_map(|k| obj.get(*k)) {
            Some(v) => parse_answer(v).map_err(|e| malformed(line, e))?,
            None => return Err(malformed(line, format!("no answer under any of {}", ANSWER_KEYS.join(", ")))),
        };
        let id = match obj.get("id") {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(x)) => x.to_string(),
            _ => (n + 1).to_string(),
        };
        instances.push(BenchmarkInstance { id, description, expected });
    }
    finish_suite(path, instances)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub repetition: u32,
    pub outcome: OutcomeClass,
    pub observed: Option<f64>,
    pub expected: Option<f64>,
    pub solve_status: Option<String>,
    pub loop_outcome: Option<Outcome>,
    /// Set when the loop itself failed, e.g. the backend was unreachable.
    pub error: Option<String>,
    #[serde(default)]
    pub auth_failure: bool,
    pub telemetry: Telemetry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub instances: usize,
    pub repetitions: u32,
    pub runs: usize,
    pub accuracy: f64,
    pub ce_rate: f64,
    pub re_rate: f64,
    pub wa_rate: f64,
    pub avg_prompt_tokens: f64,
    pub avg_completion_tokens: f64,
    pub avg_latency_s: f64,
    /// Averaged over the runs that could be priced.
    pub avg_cost_usd: Option<f64>,
    pub avg_iterations: f64,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl Report {
    pub fn from_records(suite: &str, instances: usize, repetitions: u32, records: &[RunRecord]) -> Report {
        let rate = |c: OutcomeClass| mean(records.iter().map(|r| f64::from(u8::from(r.outcome == c))));
        let costs: Vec<f64> = records.iter().filter_map(|r| r.telemetry.cost_usd).collect();
        Report {
            suite: suite.to_string(),
            instances,
            repetitions,
            runs: records.len(),
            accuracy: rate(OutcomeClass::AC),
            ce_rate: rate(OutcomeClass::CE),
            re_rate: rate(OutcomeClass::RE),
            wa_rate: rate(OutcomeClass::WA),
            avg_prompt_tokens: mean(records.iter().map(|r| r.telemetry.prompt_tokens as f64)),
            avg_completion_tokens: mean(records.iter().map(|r| r.telemetry.completion_tokens as f64)),
            avg_latency_s: mean(records.iter().map(|r| r.telemetry.latency_s)),
            avg_cost_usd: (!costs.is_empty()).then(|| mean(costs.into_iter())),
            avg_iterations: mean(records.iter().map(|r| f64::from(r.telemetry.iterations))),
        }
    }

    pub fn to_table(&self) -> String {
        let mut t = String::new();
        let _ = writeln!(t, "suite {}: {} instances x {} repetitions = {} runs", self.suite, self.instances, self.repetitions, self.runs);
        let _ = writeln!(t, "{:<22}{:>12}", "metric", "value");
        let pct = |x: f64| format!("{:.1}%", 100.0 * x);
        for (name, value) in [
            ("accuracy", pct(self.accuracy)),
            ("CE rate", pct(self.ce_rate)),
            ("RE rate", pct(self.re_rate)),
            ("WA rate", pct(self.wa_rate)),
            ("avg prompt tokens", format!("{:.1}", self.avg_prompt_tokens)),
            ("avg completion tokens", format!("{:.1}", self.avg_completion_tokens)),
            ("avg latency (s)", format!("{:.3}", self.avg_latency_s)),
            ("avg cost ($)", self.avg_cost_usd.map_or_else(|| "n/a".into(), |c| format!("{c:.6}"))),
            ("avg iterations", format!("{:.2}", self.avg_iterations)),
        ] {
            let _ = writeln!(t, "{name:<22}{value:>12}");
        }
        t
    }
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub loop_cfg: LoopConfig,
    pub repetitions: u32,
    /// Per-run artifacts go to `<out_dir>/<suite>/<instance>/<rep>/`.
    pub out_dir: Option<PathBuf>,
    pub parallelism: usize,
    pub solve: SolveOptions,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            loop_cfg: LoopConfig::default(),
            repetitions: 1,
            out_dir: None,
            parallelism: 1,
            solve: SolveOptions::default(),
        }
    }
}

/// Directory-safe form of an instance id.
fn path_segment(id: &str) -> String {
    let s: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect();
    if s.is_empty() || s.chars().all(|c| c == '.') {
        format!("_{s}")
    } else {
        s
    }
}

fn evaluate(
    inst: &BenchmarkInstance,
    rep: u32,
    kb: Option<&KnowledgeBase>,
    backend: &dyn Backend,
    cfg: &SuiteConfig,
    run_dir: Option<&Path>,
) -> RunRecord {
    let mut lc = cfg.loop_cfg.clone();
    if let Some(dir) = run_dir {
        lc.model_path = Some(dir.join("model.mod"));
        lc.data_path = Some(dir.join("data.dat"));
        lc.exchange_log = Some(dir.join("exchanges.jsonl"));
    }
    let mut rec = RunRecord {
        instance: inst.id.clone(),
        repetition: rep,
        outcome: OutcomeClass::CE,
        observed: None,
        expected: inst.expected,
        solve_status: None,
        loop_outcome: None,
        error: None,
        auth_failure: false,
        telemetry: Telemetry::default(),
    };
    let mut assessment = None;
    match run_syntagm(&inst.description, kb, backend, &lc) {
        Err(e) => {
            log::warn!("{} rep {rep}: {e}", inst.id);
            rec.auth_failure = matches!(&e, LoopError::Backend { source, .. } if source.is_auth());
            rec.telemetry = e.telemetry().cloned().unwrap_or_default();
            rec.error = Some(e.to_string());
        }
        Ok(out) => {
            rec.loop_outcome = Some(out.outcome);
            rec.telemetry = out.telemetry;
            let c = compile(&out.model, &out.data);
            let (compiled, status) = match c.flat.as_ref().filter(|_| c.succeeded()) {
                Some(flat) => {
                    let sol = solve(flat, &cfg.solve);
                    rec.observed = sol.objective_value;
                    rec.solve_status = Some(sol.status.to_string());
                    (true, Some(sol.status))
                }
                None => (false, None),
            };
            rec.outcome = classify_outcome(rec.observed, inst.expected, compiled, status);
            assessment = Some(out.assessment);
        }
    }
    if let Some(dir) = run_dir {
        let write = || -> std::io::Result<()> {
            std::fs::create_dir_all(dir)?;
            if let Some(a) = &assessment {
                std::fs::write(dir.join("assessment.txt"), a)?;
            }
            std::fs::write(dir.join("telemetry.json"), serde_json::to_string_pretty(&rec.telemetry)?)?;
            std::fs::write(dir.join("record.json"), serde_json::to_string_pretty(&rec)?)
        };
        if let Err(e) = write() {
            log::warn!("cannot persist artifacts in {}: {e}", dir.display());
        }
    }
    rec
}

/// Runs every instance `repetitions` times. Failures inside one run are
/// recorded on its RunRecord and never stop the suite.
///
/// # Panics
/// If the suite is empty or `repetitions` is zero.
pub fn run_suite(
    suite: &Suite,
    kb: Option<&KnowledgeBase>,
    backend: &dyn Backend,
    cfg: &SuiteConfig,
) -> Result<(Report, Vec<RunRecord>), SuiteError> {
    assert!(!suite.instances.is_empty(), "suite has no instances");
    assert!(cfg.repetitions >= 1, "repetitions must be positive");
    let suite_dir = cfg.out_dir.as_ref().map(|d| d.join(path_segment(&suite.name)));
    let sink = match &suite_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|source| SuiteError::Io { path: dir.clone(), source })?;
            let path = dir.join("records.jsonl");
            let f = File::create(&path).map_err(|source| SuiteError::Io { path, source })?;
            Some(BufWriter::new(f))
        }
        None => None,
    };

    let jobs: Vec<(usize, u32)> = (0..suite.instances.len())
        .flat_map(|i| (1..=cfg.repetitions).map(move |r| (i, r)))
        .collect();
    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::with_capacity(jobs.len()));
    let sink = Mutex::new(sink);
    let workers = cfg.parallelism.clamp(1, jobs.len());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let j = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(i, rep)) = jobs.get(j) else { break };
                let inst = &suite.instances[i];
                let run_dir = suite_dir.as_ref().map(|d| d.join(path_segment(&inst.id)).join(rep.to_string()));
                let rec = evaluate(inst, rep, kb, backend, cfg, run_dir.as_deref());
                if let Some(w) = sink.lock().unwrap().as_mut() {
                    let line = serde_json::to_string(&rec).expect("record serializes");
                    if let Err(e) = writeln!(w, "{line}").and_then(|_| w.flush()) {
                        log::warn!("cannot append run record: {e}");
                    }
                }
                results.lock().unwrap().push((i, rec));
            });
        }
    });

    let mut results = results.into_inner().unwrap();
    results.sort_by_key(|(i, r)| (*i, r.repetition));
    let records: Vec<RunRecord> = results.into_iter().map(|(_, r)| r).collect();
    let report = Report::from_records(&suite.name, suite.instances.len(), cfg.repetitions, &records);
    if let Some(dir) = &suite_dir {
        // Appended as runs finished; rewrite in suite order now that all are in.
        let path = dir.join("records.jsonl");
        let lines: String = records.iter().map(|r| serde_json::to_string(r).expect("record serializes") + "\n").collect();
        std::fs::write(&path, lines).map_err(|source| SuiteError::Io { path, source })?;
        let path = dir.join("report.json");
        let text = serde_json::to_string_pretty(&report).expect("report serializes");
        std::fs::write(&path, text).map_err(|source| SuiteError::Io { path, source })?;
    }
    Ok((report, records))
}
