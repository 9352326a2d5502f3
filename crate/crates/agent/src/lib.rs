//! Model-synthesis loop around the `syntagm-aml` compiler: exemplar
//! retrieval, prompt construction, LLM backends, the generate/compile/
//! assess/revise loop and a benchmark harness.

pub mod backend;
pub mod evalharness;
pub mod json;
pub mod orchestrator;
pub mod prompts;
pub mod retrieval;
pub mod telemetry;

pub use backend::{Backend, BackendError, DecodingParams, HttpBackend, RetryPolicy, ScriptedBackend, ScriptedReply};
pub use evalharness::{classify_outcome, run_suite, OutcomeClass, Report, RunRecord, Suite, SuiteConfig};
pub use json::{extract_json_object, ExtractError};
pub use orchestrator::{run_syntagm, LoopConfig, LoopError, Outcome, RunOutput};
pub use retrieval::{index_knowledge_base, Embedder, HashingEmbedder, KnowledgeBase};
pub use telemetry::{Rate, RateTable, Telemetry};
