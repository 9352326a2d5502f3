//! The generate, compile, assess, revise loop.
//!
//! Each iteration asks for a model/data pair, compiles it, and only on a
//! clean compile asks the judge whether it matches the problem. The loop
//! stops at the first iteration that both compiles and is judged aligned.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use syntagm_aml::{compile, Code, Diagnostic, DiagnosticRecord, GRAMMAR_REFERENCE};
use thiserror::Error;

use crate::backend::{complete_with_retry, Backend, BackendError, Completion, DecodingParams, Request, RetryPolicy};
use crate::json::{parse_generation, parse_verdict, Verdict};
use crate::prompts::{
    build_alignment_prompt, build_generation_prompt, build_revision_prompt, RevisionKind, TaskContext,
};
use crate::retrieval::{format_few_shot_block, KnowledgeBase, RetrievalError};
use crate::telemetry::{RateTable, Telemetry};

pub const DEFAULT_BUDGET: u32 = 5;
pub const DEFAULT_K: usize = 3;

#[derive(Debug, Clone)]
pub struct LoopConfig {
    pub budget: u32,
    pub k: usize,
    pub params: DecodingParams,
    pub retry: RetryPolicy,
    pub rates: RateTable,
    /// Written after every iteration that produced a parseable pair.
    pub model_path: Option<PathBuf>,
    pub data_path: Option<PathBuf>,
    /// Line-delimited JSON, one record per backend call.
    pub exchange_log: Option<PathBuf>,
    /// Ask the judge for a closing assessment when the budget runs out with
    /// errors left.
    pub final_assessment: bool,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            budget: DEFAULT_BUDGET,
            k: DEFAULT_K,
            params: DecodingParams::default(),
            retry: RetryPolicy::default(),
            rates: RateTable::default(),
            model_path: None,
            data_path: None,
            exchange_log: None,
            final_assessment: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CallKind {
    Generation,
    SyntaxRevision,
    AlignmentRevision,
    Alignment,
    FinalAssessment,
}

impl CallKind {
    pub fn is_generation(self) -> bool {
        matches!(self, CallKind::Generation | CallKind::SyntaxRevision | CallKind::AlignmentRevision)
    }
}

/// One backend call as written to the exchange log.
#[derive(Debug, Clone, Serialize)]
pub struct Exchange {
    pub iteration: u32,
    pub kind: CallKind,
    pub attempts: u32,
    pub request: Request,
    pub response: Completion,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub iteration: u32,
    /// Why the response could not be used, if it could not.
    pub parse_error: Option<String>,
    pub compiled: bool,
    pub diagnostics: Vec<DiagnosticRecord>,
    pub aligned: Option<bool>,
    pub assessment: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Aligned,
    BudgetExhausted,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOutput {
    pub model: String,
    pub data: String,
    pub assessment: String,
    pub outcome: Outcome,
    pub telemetry: Telemetry,
    pub retrieved: Vec<String>,
    pub iterations: Vec<IterationRecord>,
    #[serde(skip)]
    pub exchanges: Vec<Exchange>,
}

#[derive(Debug, Error)]
pub enum LoopError {
    #[error("{source}")]
    Backend { source: BackendError, telemetry: Telemetry },
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl LoopError {
    pub fn telemetry(&self) -> Option<&Telemetry> {
        match self {
            LoopError::Backend { telemetry, .. } => Some(telemetry),
            _ => None,
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), LoopError> {
    let io = |source| LoopError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, text).map_err(io)
}

struct Session<'a> {
    backend: &'a dyn Backend,
    cfg: &'a LoopConfig,
    telemetry: Telemetry,
    exchanges: Vec<Exchange>,
    log: Option<(PathBuf, BufWriter<File>)>,
}

impl Session<'_> {
    fn call(&mut self, iteration: u32, kind: CallKind, user: String) -> Result<String, LoopError> {
        let req = Request { system: String::new(), user, params: self.cfg.params.clone() };
        let (resp, attempts) = match complete_with_retry(self.backend, &req, &self.cfg.retry) {
            Ok(r) => r,
            Err(source) => {
                return Err(LoopError::Backend { source, telemetry: self.telemetry.clone() });
            }
        };
        self.telemetry.add_usage(resp.prompt_tokens, resp.completion_tokens);
        if kind.is_generation() {
            self.telemetry.generation_calls += 1;
        } else {
            self.telemetry.assessment_calls += 1;
        }
        let text = resp.text.clone();
        let ex = Exchange { iteration, kind, attempts, request: req, response: resp };
        if let Some((path, w)) = &mut self.log {
            let line = serde_json::to_string(&ex).expect("exchange serializes");
            writeln!(w, "{line}")
                .and_then(|_| w.flush())
                .map_err(|source| LoopError::Io { path: path.clone(), source })?;
        }
        self.exchanges.push(ex);
        Ok(text)
    }
}

fn bad_response(detail: &str) -> Diagnostic {
    Diagnostic::new(Code::BadResponse, None, &[("detail", detail)])
}

/// Runs the loop for one problem.
///
/// # Panics
/// If `cfg.budget` or `cfg.k` is zero.
pub fn run_syntagm(
    problem: &str,
    kb: Option<&KnowledgeBase>,
    backend: &dyn Backend,
    cfg: &LoopConfig,
) -> Result<RunOutput, LoopError> {
    assert!(cfg.budget >= 1, "budget must be positive");
    assert!(cfg.k >= 1, "k must be positive");
    let started = Instant::now();

    let (few_shots, retrieved) = match kb.filter(|kb| !kb.is_empty()) {
        Some(kb) => {
            let hits = kb.top_k(problem, cfg.k)?;
            (format_few_shot_block(&hits), hits.iter().map(|h| h.exemplar.id.clone()).collect())
        }
        None => (String::new(), Vec::new()),
    };
    let mut ctx = TaskContext::new(problem, GRAMMAR_REFERENCE, few_shots);

    let log = match &cfg.exchange_log {
        Some(path) => {
            write_file(path, "")?;
            let f = File::create(path).map_err(|source| LoopError::Io { path: path.clone(), source })?;
            Some((path.clone(), BufWriter::new(f)))
        }
        None => None,
    };
    let mut s = Session {
        backend,
        cfg,
        telemetry: Telemetry { model_id: backend.model_id().to_string(), ..Default::default() },
        exchanges: Vec::new(),
        log,
    };

    let mut prompt = build_generation_prompt(&ctx);
    let mut kind = CallKind::Generation;
    let mut records = Vec::new();
    let mut verdict: Option<Verdict> = None;
    let mut compiled = false;

    for t in 1..=cfg.budget {
        s.telemetry.iterations = t;
        let text = s.call(t, kind, prompt)?;
        let mut rec = IterationRecord {
            iteration: t,
            parse_error: None,
            compiled: false,
            diagnostics: Vec::new(),
            aligned: None,
            assessment: None,
        };
        verdict = None;
        ctx.assessment = None;

        match parse_generation(&text) {
            Err(e) => {
                let d = bad_response(&e.to_string());
                rec.parse_error = Some(e.to_string());
                rec.diagnostics = vec![d.record()];
                ctx.errors = vec![d];
                compiled = false;
                if ctx.last_attempt.is_none() {
                    ctx.last_attempt = Some((String::new(), String::new()));
                }
            }
            Ok(g) => {
                let c = compile(&g.model, &g.data);
                if let Some(p) = &cfg.model_path {
                    write_file(p, &g.model)?;
                }
                if let Some(p) = &cfg.data_path {
                    write_file(p, &g.data)?;
                }
                compiled = c.succeeded();
                rec.compiled = compiled;
                rec.diagnostics = c.diagnostics.iter().map(Diagnostic::record).collect();
                ctx.errors = c.diagnostics;
                ctx.last_attempt = Some((g.model, g.data));
            }
        }

        if compiled {
            let (model, data) = ctx.last_attempt.as_ref().unwrap();
            let judged = s.call(t, CallKind::Alignment, build_alignment_prompt(&ctx, model, data))?;
            let v = parse_verdict(&judged).unwrap_or_else(|e| Verdict {
                aligned: false,
                assessment: format!(
                    "The alignment response could not be used ({e}). Re-check the model against the problem description."
                ),
            });
            rec.aligned = Some(v.aligned);
            rec.assessment = Some(v.assessment.clone());
            records.push(rec);
            if v.aligned {
                verdict = Some(v);
                break;
            }
            ctx.assessment = Some(v.assessment.clone());
            verdict = Some(v);
            prompt = build_revision_prompt(&ctx, RevisionKind::Alignment);
            kind = CallKind::AlignmentRevision;
        } else {
            records.push(rec);
            prompt = build_revision_prompt(&ctx, RevisionKind::Syntax);
            kind = CallKind::SyntaxRevision;
        }
    }

    let (model, data) = ctx.last_attempt.clone().unwrap_or_default();
    let aligned = compiled && verdict.as_ref().is_some_and(|v| v.aligned);
    let assessment = match verdict {
        Some(v) => v.assessment,
        None if cfg.final_assessment => {
            let t = s.telemetry.iterations;
            let text = s.call(t, CallKind::FinalAssessment, build_alignment_prompt(&ctx, &model, &data))?;
            match parse_verdict(&text) {
                Ok(v) => v.assessment,
                Err(e) if text.trim().is_empty() => format!("No usable final assessment ({e})."),
                Err(_) => text.trim().to_string(),
            }
        }
        None => String::from("No assessment: the final attempt did not compile."),
    };

    let mut telemetry = s.telemetry;
    telemetry.latency_s = started.elapsed().as_secs_f64();
    telemetry.price(&cfg.rates);
    Ok(RunOutput {
        model,
        data,
        assessment,
        outcome: if aligned { Outcome::Aligned } else { Outcome::BudgetExhausted },
        telemetry,
        retrieved,
        iterations: records,
        exchanges: s.exchanges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{ScriptedBackend, ScriptedReply};

    const GOOD_MODEL: &str = "dvar float+ x;\nminimize cost: x;\nsubject to {\n  floor: x >= 2;\n}\n";

    fn gen(model: &str, data: &str) -> String {
        serde_json::json!({ "model": model, "data": data }).to_string()
    }

    fn verdict(aligned: bool) -> String {
        serde_json::json!({ "aligned": aligned, "assessment": format!("verdict {aligned}") }).to_string()
    }

    fn cfg(budget: u32) -> LoopConfig {
        LoopConfig { budget, retry: RetryPolicy::none(), ..Default::default() }
    }

    fn kinds(out: &RunOutput) -> Vec<CallKind> {
        out.exchanges.iter().map(|e| e.kind).collect()
    }

    #[test]
    fn first_try_success_issues_no_revision() {
        let b = ScriptedBackend::from_replies(vec![
            ScriptedReply::new(gen(GOOD_MODEL, "")),
            ScriptedReply::new(verdict(true)),
        ]);
        let out = run_syntagm("keep x above two", None, &b, &cfg(5)).unwrap();
        assert_eq!(out.outcome, Outcome::Aligned);
        assert_eq!(out.telemetry.iterations, 1);
        assert_eq!(kinds(&out), [CallKind::Generation, CallKind::Alignment]);
        assert_eq!(out.assessment, "verdict true");
    }

    #[test]
    fn garbage_exhausts_the_budget_then_asks_for_an_assessment() {
        let b = ScriptedBackend::from_replies(vec![ScriptedReply::new("I cannot help with that.").keep()]);
        let out = run_syntagm("anything", None, &b, &cfg(3)).unwrap();
        assert_eq!(out.outcome, Outcome::BudgetExhausted);
        assert_eq!(out.telemetry.generation_calls, 3);
        assert_eq!(out.telemetry.assessment_calls, 1);
        assert_eq!(kinds(&out).last(), Some(&CallKind::FinalAssessment));
        assert_eq!(out.assessment, "I cannot help with that.");
        // The synthetic diagnostic reaches the revision prompt.
        let second = &b.requests()[1].user;
        assert!(second.contains("response did not contain a valid model/data object"));
        assert!(second.contains("- Fix the listed syntax/semantic errors."));
    }

    #[test]
    fn misalignment_triggers_an_alignment_revision() {
        let b = ScriptedBackend::from_replies(vec![
            ScriptedReply::new(gen(GOOD_MODEL, "")),
            ScriptedReply::new(verdict(false)),
            ScriptedReply::new(gen(GOOD_MODEL, "")),
            ScriptedReply::new(verdict(true)),
        ]);
        let out = run_syntagm("p", None, &b, &cfg(5)).unwrap();
        assert_eq!(out.outcome, Outcome::Aligned);
        assert_eq!(
            kinds(&out),
            [CallKind::Generation, CallKind::Alignment, CallKind::AlignmentRevision, CallKind::Alignment]
        );
        let rev = &b.requests()[2].user;
        assert!(rev.contains("<alignment_assessment>\nverdict false\n</alignment_assessment>"));
    }

    #[test]
    fn compiled_but_misaligned_at_exhaustion_keeps_the_last_verdict() {
        let b = ScriptedBackend::from_replies(vec![
            ScriptedReply::new(gen(GOOD_MODEL, "")),
            ScriptedReply::new(verdict(false)),
        ]);
        let out = run_syntagm("p", None, &b, &cfg(1)).unwrap();
        assert_eq!(out.outcome, Outcome::BudgetExhausted);
        assert_eq!(out.assessment, "verdict false");
        assert_eq!(out.telemetry.assessment_calls, 1);
    }

    #[test]
    fn artifacts_and_exchange_log_are_written() {
        let tmp = tempfile::tempdir().unwrap();
        let mut c = cfg(2);
        c.model_path = Some(tmp.path().join("out/model.mod"));
        c.data_path = Some(tmp.path().join("out/data.dat"));
        c.exchange_log = Some(tmp.path().join("out/exchanges.jsonl"));
        let b = ScriptedBackend::from_replies(vec![
            ScriptedReply::new(gen("dvar float x;\nminimize o: x;\nsubject to { c: 0 <= x <= 1; }\n", "")),
            ScriptedReply::new(gen(GOOD_MODEL, "")),
            ScriptedReply::new(verdict(true)),
        ]);
        let out = run_syntagm("p", None, &b, &c).unwrap();
        assert_eq!(out.outcome, Outcome::Aligned);
        assert_eq!(fs::read_to_string(tmp.path().join("out/model.mod")).unwrap(), GOOD_MODEL);
        let log = fs::read_to_string(tmp.path().join("out/exchanges.jsonl")).unwrap();
        let lines: Vec<serde_json::Value> = log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1]["kind"], "syntax_revision");
        assert!(lines[1]["request"]["user"].as_str().unwrap().contains("Chained comparisons"));
    }

    #[test]
    fn backend_failure_surfaces_with_partial_telemetry() {
        let b = ScriptedBackend::from_replies(vec![ScriptedReply::new("junk").usage(5, 1)]);
        let err = run_syntagm("p", None, &b, &cfg(3)).unwrap_err();
        assert!(matches!(err, LoopError::Backend { source: BackendError::ScriptExhausted { .. }, .. }));
        assert_eq!(err.telemetry().unwrap().prompt_tokens, 5);
    }

    #[test]
    fn unusable_verdict_counts_as_misaligned() {
        let b = ScriptedBackend::from_replies(vec![
            ScriptedReply::new(gen(GOOD_MODEL, "")),
            ScriptedReply::new("looks fine to me"),
        ]);
        let out = run_syntagm("p", None, &b, &cfg(1)).unwrap();
        assert_eq!(out.outcome, Outcome::BudgetExhausted);
        assert!(out.assessment.contains("could not be used"));
    }
}
