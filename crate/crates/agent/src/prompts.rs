//! Generation, revision and alignment prompts.

use syntagm_aml::Diagnostic;

pub const GENERATION_TEMPLATE: &str = include_str!("../templates/generation.txt");
pub const REVISION_TEMPLATE: &str = include_str!("../templates/revision.txt");
pub const ALIGNMENT_TEMPLATE: &str = include_str!("../templates/alignment.txt");

pub const SYNTAX_GUIDELINE: &str = "- Fix the listed syntax/semantic errors.";
pub const ALIGNMENT_GUIDELINE: &str = "- Address the alignment issues noted in the assessment.";

/// Filler for an empty feedback section.
const NONE: &str = "None.";

/// Working memory of one loop instance.
#[derive(Debug, Clone, Default)]
pub struct TaskContext {
    pub problem: String,
    pub grammar: String,
    /// Formatted few-shot block, possibly empty.
    pub few_shots: String,
    pub last_attempt: Option<(String, String)>,
    pub errors: Vec<Diagnostic>,
    pub assessment: Option<String>,
}

impl TaskContext {
    pub fn new(problem: impl Into<String>, grammar: impl Into<String>, few_shots: impl Into<String>) -> Self {
        TaskContext {
            problem: problem.into(),
            grammar: grammar.into(),
            few_shots: few_shots.into(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RevisionKind {
    Syntax,
    Alignment,
}

/// Replaces `{{NAME}}` placeholders in one pass, so placeholder-like text
/// inside substituted values is left alone.
fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + vars.iter().map(|(_, v)| v.len()).sum::<usize>());
    let mut rest = template;
    while let Some(open) = rest.find("{{") {
        out.push_str(&rest[..open]);
        let after = &rest[open + 2..];
        let hit = after.find("}}").and_then(|close| {
            let key = &after[..close];
            vars.iter().find(|(k, _)| *k == key).map(|(_, v)| (close, *v))
        });
        match hit {
            Some((close, value)) => {
                out.push_str(value);
                rest = &after[close + 2..];
            }
            None => {
                out.push_str("{{");
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Errors first, then warnings, one rendered diagnostic per line.
pub fn render_diagnostics(diags: &[Diagnostic]) -> String {
    let mut lines: Vec<String> = diags.iter().filter(|d| d.is_error()).map(|d| d.to_string()).collect();
    lines.extend(diags.iter().filter(|d| !d.is_error()).map(|d| d.to_string()));
    lines.join("\n")
}

pub fn build_generation_prompt(ctx: &TaskContext) -> String {
    debug_assert!(ctx.last_attempt.is_none(), "generation prompt with a previous attempt");
    render(
        GENERATION_TEMPLATE,
        &[
            ("GRAMMAR_IMPLEMENTATION", ctx.grammar.trim_end()),
            ("FEW_SHOT_EXAMPLES_SECTION", &ctx.few_shots),
            ("PROMPT", ctx.problem.trim_end()),
        ],
    )
}

/// # Panics
/// If the context lacks the feedback `kind` needs: a previous attempt, plus
/// errors for syntax or an assessment for alignment.
pub fn build_revision_prompt(ctx: &TaskContext, kind: RevisionKind) -> String {
    let (model, data) = ctx.last_attempt.as_ref().expect("revision needs a previous attempt");
    let guideline = match kind {
        RevisionKind::Syntax => {
            assert!(!ctx.errors.is_empty(), "syntax revision needs diagnostics");
            SYNTAX_GUIDELINE
        }
        RevisionKind::Alignment => {
            assert!(ctx.assessment.is_some(), "alignment revision needs an assessment");
            ALIGNMENT_GUIDELINE
        }
    };
    let errors = render_diagnostics(&ctx.errors);
    render(
        REVISION_TEMPLATE,
        &[
            ("REVISION_GUIDELINE", guideline),
            ("GRAMMAR_IMPLEMENTATION", ctx.grammar.trim_end()),
            ("FEW_SHOT_EXAMPLES_SECTION", &ctx.few_shots),
            ("PROMPT", ctx.problem.trim_end()),
            ("MODEL_CODE", model),
            ("DATA_CODE", data),
            ("COMPILER_ERRORS", if errors.is_empty() { NONE } else { &errors }),
            ("ASSESSMENT", ctx.assessment.as_deref().unwrap_or(NONE)),
        ],
    )
}

pub fn build_alignment_prompt(ctx: &TaskContext, model: &str, data: &str) -> String {
    render(
        ALIGNMENT_TEMPLATE,
        &[
            ("GRAMMAR_IMPLEMENTATION", ctx.grammar.trim_end()),
            ("PROMPT", ctx.problem.trim_end()),
            ("MODEL_CODE", model),
            ("DATA_CODE", data),
        ],
    )
}
