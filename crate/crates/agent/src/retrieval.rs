//! Few-shot exemplar retrieval over a directory of description/model/data
//! triplets.
//!
//! Only descriptions are embedded. Vectors are unit length, so cosine
//! similarity is a plain dot product.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

pub const HASHING_DIM: usize = 256;
pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("knowledge base directory {0} contains no exemplar files")]
    Empty(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed manifest {path}: {detail}")]
    Manifest { path: PathBuf, detail: String },
    #[error("embedding provider failed: {0}")]
    Provider(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RetrievalError + '_ {
    move |source| RetrievalError::Io { path: path.to_path_buf(), source }
}

/// One description/model/data triplet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Exemplar {
    /// Path of the triplet relative to the knowledge base root, without
    /// extension, using `/` separators.
    pub id: String,
    pub description: String,
    pub model: String,
    pub data: String,
    pub source_paths: [PathBuf; 3],
}

/// Maps text to a fixed-dimension vector.
pub trait Embedder: Send + Sync {
    fn id(&self) -> &str;
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vec<f64>, RetrievalError>;
}

/// Signed feature hashing of lowercase word unigrams and bigrams.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    dim: usize,
}

impl HashingEmbedder {
    pub fn new() -> Self {
        HashingEmbedder { dim: HASHING_DIM }
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self::new()
    }
}

// FNV-1a: the hash has to be stable across runs and toolchains, which
// std's SipHash keys do not promise.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

impl Embedder for HashingEmbedder {
    fn id(&self) -> &str {
        "hashing-256"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, RetrievalError> {
        let mut v = vec![0.0; self.dim];
        let ws = words(text);
        let mut add = |feature: &str| {
            let h = fnv1a(feature.as_bytes());
            let slot = (h % self.dim as u64) as usize;
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            v[slot] += sign;
        };
        for w in &ws {
            add(w);
        }
        for pair in ws.windows(2) {
            add(&format!("{} {}", pair[0], pair[1]));
        }
        Ok(normalize(v))
    }
}

/// Scales to unit L2 norm. The zero vector maps to the first basis vector
/// so that every stored vector has norm one.
pub fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 && norm.is_finite() {
        for x in &mut v {
            *x /= norm;
        }
    } else if !v.is_empty() {
        v.iter_mut().for_each(|x| *x = 0.0);
        v[0] = 1.0;
    }
    v
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Client for an OpenAI-style `/embeddings` endpoint.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    pub url: String,
    pub model: String,
    pub dim: usize,
    api_key: Option<String>,
    id: String,
}

impl RemoteEmbedder {
    pub fn new(url: impl Into<String>, model: impl Into<String>, dim: usize, api_key: Option<String>) -> Self {
        let model = model.into();
        RemoteEmbedder { url: url.into(), id: format!("remote:{model}"), model, dim, api_key }
    }
}

impl Embedder for RemoteEmbedder {
    fn id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, RetrievalError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        let mut req = agent.post(&self.url);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let body = serde_json::json!({ "model": self.model, "input": text });
        let mut resp = req.send_json(&body).map_err(|e| RetrievalError::Provider(e.to_string()))?;
        let value: serde_json::Value =
            resp.body_mut().read_json().map_err(|e| RetrievalError::Provider(e.to_string()))?;
        let raw = value["data"][0]["embedding"]
            .as_array()
            .ok_or_else(|| RetrievalError::Provider("response has no data[0].embedding".into()))?;
        let v: Vec<f64> = raw.iter().filter_map(|x| x.as_f64()).collect();
        if v.len() != self.dim || v.len() != raw.len() {
            return Err(RetrievalError::Provider(format!(
                "expected {} numeric components, got {}",
                self.dim,
                v.len()
            )));
        }
        Ok(normalize(v))
    }
}

/// Cache-validation record stored next to the exemplars.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub provider: String,
    pub dimension: usize,
    #[serde(default)]
    pub exemplars: Vec<String>,
}

impl Manifest {
    pub fn read(root: &Path) -> Result<Option<Manifest>, RetrievalError> {
        let path = root.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        toml::from_str(&text)
            .map(Some)
            .map_err(|e| RetrievalError::Manifest { path, detail: e.to_string() })
    }

    pub fn write(&self, root: &Path) -> Result<PathBuf, RetrievalError> {
        let path = root.join(MANIFEST_FILE);
        let text = toml::to_string(self).map_err(|e| RetrievalError::Manifest {
            path: path.clone(),
            detail: e.to_string(),
        })?;
        fs::write(&path, text).map_err(io_err(&path))?;
        Ok(path)
    }
}

/// Immutable index; one unit vector per exemplar.
#[derive(Clone)]
pub struct KnowledgeBase {
    pub entries: Vec<(Exemplar, Vec<f64>)>,
    provider: Arc<dyn Embedder>,
}

impl std::fmt::Debug for KnowledgeBase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KnowledgeBase")
            .field("provider", &self.provider.id())
            .field("dim", &self.provider.dim())
            .field("entries", &self.entries.len())
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hit<'a> {
    pub exemplar: &'a Exemplar,
    pub score: f64,
}

impl KnowledgeBase {
    pub fn provider_id(&self) -> &str {
        self.provider.id()
    }

    pub fn dim(&self) -> usize {
        self.provider.dim()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            provider: self.provider_id().to_string(),
            dimension: self.dim(),
            exemplars: self.entries.iter().map(|(e, _)| e.id.clone()).collect(),
        }
    }

    /// The `k` most similar exemplars, best first, ties by id.
    ///
    /// # Panics
    /// If `k` is zero.
    pub fn top_k(&self, query: &str, k: usize) -> Result<Vec<Hit<'_>>, RetrievalError> {
        assert!(k >= 1, "k must be positive");
        let q = self.provider.embed(query)?;
        let mut hits: Vec<Hit<'_>> = self
            .entries
            .iter()
            .map(|(e, v)| Hit { exemplar: e, score: dot(v, &q).clamp(-1.0, 1.0) })
            .collect();
        hits.sort_by(|a, b| {
            b.score.total_cmp(&a.score).then_with(|| a.exemplar.id.cmp(&b.exemplar.id))
        });
        hits.truncate(k);
        Ok(hits)
    }
}

/// Walks `root` recursively and embeds every complete triplet.
pub fn index_knowledge_base(root: &Path, provider: Arc<dyn Embedder>) -> Result<KnowledgeBase, RetrievalError> {
    let meta = fs::metadata(root).map_err(io_err(root))?;
    if !meta.is_dir() {
        return Err(RetrievalError::Io {
            path: root.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotADirectory, "not a directory"),
        });
    }
    let mut descriptions = Vec::new();
    let mut any_file = false;
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            RetrievalError::Io { path, source: e.into() }
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        if entry.file_name() == MANIFEST_FILE {
            continue;
        }
        any_file = true;
        if entry.path().extension().is_some_and(|x| x == "txt") {
            descriptions.push(entry.into_path());
        }
    }
    if !any_file {
        return Err(RetrievalError::Empty(root.to_path_buf()));
    }

    let mut entries = Vec::new();
    for txt in descriptions {
        let model = txt.with_extension("mod");
        let data = txt.with_extension("dat");
        let missing: Vec<&str> = [(&model, ".mod"), (&data, ".dat")]
            .into_iter()
            .filter(|(p, _)| !p.is_file())
            .map(|(_, ext)| ext)
            .collect();
        if !missing.is_empty() {
            log::warn!("skipping {}: no matching {}", txt.display(), missing.join(" or "));
            continue;
        }
        let read = |p: &Path| fs::read_to_string(p).map_err(io_err(p));
        let ex = Exemplar {
            id: exemplar_id(root, &txt),
            description: read(&txt)?,
            model: read(&model)?,
            data: read(&data)?,
            source_paths: [txt.clone(), model, data],
        };
        if ex.description.trim().is_empty() || ex.model.trim().is_empty() || ex.data.trim().is_empty() {
            log::warn!("skipping {}: empty file in triplet", txt.display());
            continue;
        }
        let v = provider.embed(&ex.description)?;
        entries.push((ex, v));
    }
    if entries.is_empty() {
        log::warn!("{} holds no complete triplets", root.display());
    }

    let kb = KnowledgeBase { entries, provider };
    if let Some(m) = Manifest::read(root)? {
        if m.provider != kb.provider_id() || m.dimension != kb.dim() {
            log::warn!(
                "manifest in {} was built with {} ({} dims), indexing with {} ({} dims)",
                root.display(),
                m.provider,
                m.dimension,
                kb.provider_id(),
                kb.dim()
            );
        } else if !m.exemplars.is_empty() && m.exemplars != kb.manifest().exemplars {
            log::warn!("manifest in {} lists a different exemplar set", root.display());
        }
    }
    Ok(kb)
}

fn exemplar_id(root: &Path, txt: &Path) -> String {
    let rel = txt.strip_prefix(root).unwrap_or(txt).with_extension("");
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

/// Renders hits for the `{{FEW_SHOT_EXAMPLES_SECTION}}` slot; empty input
/// gives an empty string.
pub fn format_few_shot_block(hits: &[Hit<'_>]) -> String {
    if hits.is_empty() {
        return String::new();
    }
    let mut out = String::from("<few_shot_examples>\n");
    out.push_str(
        "The solved problems below are related to the task. Treat exemplars as guidance rather than \
         templates: reuse modelling ideas and PyOPL syntax, but do not copy their variable names, \
         labels, comments or data.\n",
    );
    for (i, h) in hits.iter().enumerate() {
        let e = h.exemplar;
        let _ = write!(
            out,
            "\n<example index=\"{}\" id=\"{}\">\n<description>\n{}\n</description>\n<model>\n{}\n</model>\n<data>\n{}\n</data>\n</example>\n",
            i + 1,
            e.id,
            e.description.trim_end(),
            e.model.trim_end(),
            e.data.trim_end()
        );
    }
    out.push_str("</few_shot_examples>");
    out
}
