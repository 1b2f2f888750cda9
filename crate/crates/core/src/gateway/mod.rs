//! Prompt rendering, pluggable completion backends, response parsing, and
//! content-addressed response caching.

mod backend;
mod cache;
mod parse;
mod template;

pub use backend::{CompletionBackend, HttpBackend, OracleBackend, ScriptedBackend};
pub use cache::{prompt_digest, CompletionRecord, ResponseCache};
pub use parse::{parse_decomposition, parse_relation_list};
pub use template::{render_prompt, sanitize_node_text, PromptTemplate, Role};

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::TextAttributedGraph;
use crate::pipeline::EdgeDecomposition;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("unbound placeholder {{{placeholder}}}")]
    Template { placeholder: String },
    #[error("parse error: {message}")]
    Parse { message: String, raw: String },
    #[error("backend error: {0}")]
    Backend(String),
    #[error("oracle error: {0}")]
    Oracle(String),
    #[error("invalid backend config: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    Scripted,
    Oracle,
}

/// Declarative backend selection, loadable from a JSON file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Chat endpoint URL (http only).
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    /// Dot-separated path to the completion text in the endpoint's JSON.
    #[serde(default = "default_response_path")]
    pub response_path: String,
    /// Environment variable holding the bearer token (http only).
    #[serde(default = "default_auth_env")]
    pub auth_env: String,
    /// Scripted responses, also used for oracle generator/discriminator roles.
    #[serde(default)]
    pub fixture: Option<PathBuf>,
    /// Ground-truth decomposition file (oracle only).
    #[serde(default)]
    pub oracle: Option<PathBuf>,
    /// Probability of replacing an oracle answer with a random nonempty subset.
    #[serde(default)]
    pub p_noise: f64,
    #[serde(default)]
    pub noise_seed: u64,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
}

fn default_model() -> String {
    "default".into()
}

fn default_temperature() -> f64 {
    0.2
}

fn default_max_retries() -> u32 {
    2
}

fn default_response_path() -> String {
    "choices.0.message.content".into()
}

fn default_auth_env() -> String {
    "RELGRAPH_API_TOKEN".into()
}

impl BackendConfig {
    pub fn scripted(fixture: impl Into<PathBuf>) -> Self {
        Self {
            kind: BackendKind::Scripted,
            endpoint: None,
            model: default_model(),
            temperature: default_temperature(),
            max_retries: default_max_retries(),
            response_path: default_response_path(),
            auth_env: default_auth_env(),
            fixture: Some(fixture.into()),
            oracle: None,
            p_noise: 0.0,
            noise_seed: 0,
            cache_dir: None,
        }
    }

    pub fn oracle(oracle: impl Into<PathBuf>) -> Self {
        Self {
            kind: BackendKind::Oracle,
            oracle: Some(oracle.into()),
            ..Self::scripted("")
        }
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, GatewayError> {
        let bytes = fs::read(path)?;
        let config: Self =
            serde_json::from_slice(&bytes).map_err(|e| GatewayError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if !(0.0..=1.0).contains(&self.temperature) {
            return Err(GatewayError::Config(
                "temperature must be in [0, 1]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.p_noise) {
            return Err(GatewayError::Config("p_noise must be in [0, 1]".into()));
        }
        match self.kind {
            BackendKind::Http if self.endpoint.is_none() => Err(GatewayError::Config(
                "http backend requires an endpoint".into(),
            )),
            BackendKind::Scripted if self.fixture.is_none() => Err(GatewayError::Config(
                "scripted backend requires a fixture file".into(),
            )),
            BackendKind::Oracle if self.oracle.is_none() => Err(GatewayError::Config(
                "oracle backend requires a ground-truth decomposition file".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Cache-aware front door to a completion backend. Counts how many calls
/// actually reached the backend so budget contracts can be asserted.
pub struct Gateway {
    backend: Box<dyn CompletionBackend>,
    cache: Option<ResponseCache>,
    model: String,
    temperature: f64,
    max_retries: u32,
    backend_calls: AtomicUsize,
    cache_hits: AtomicUsize,
}

impl Gateway {
    pub fn new(
        backend: Box<dyn CompletionBackend>,
        cache: Option<ResponseCache>,
        model: String,
        temperature: f64,
        max_retries: u32,
    ) -> Self {
        Self {
            backend,
            cache,
            model,
            temperature,
            max_retries,
            backend_calls: AtomicUsize::new(0),
            cache_hits: AtomicUsize::new(0),
        }
    }

    /// Builds the configured backend. The oracle kind needs the graph whose
    /// node texts its prompts will mention.
    pub fn from_config(
        config: &BackendConfig,
        graph: Option<&TextAttributedGraph>,
    ) -> Result<Self, GatewayError> {
        config.validate()?;
        let fixtures: BTreeMap<String, String> = match &config.fixture {
            Some(path) if !path.as_os_str().is_empty() => {
                let bytes = fs::read(path)?;
                serde_json::from_slice(&bytes)
                    .map_err(|e| GatewayError::Config(format!("fixture file: {e}")))?
            }
            _ => BTreeMap::new(),
        };
        let backend: Box<dyn CompletionBackend> = match config.kind {
            BackendKind::Scripted => Box::new(ScriptedBackend::new(fixtures)),
            BackendKind::Oracle => {
                let graph = graph.ok_or_else(|| {
                    GatewayError::Config("oracle backend requires a graph".into())
                })?;
                let truth =
                    EdgeDecomposition::load_jsonl(config.oracle.as_ref().expect("validated"))
                        .map_err(|e| GatewayError::Config(e.to_string()))?;
                let num_relations = truth.num_relations();
                Box::new(OracleBackend::new(
                    graph,
                    &truth,
                    num_relations,
                    config.p_noise,
                    config.noise_seed,
                    fixtures,
                )?)
            }
            BackendKind::Http => Box::new(HttpBackend::new(
                config.endpoint.clone().expect("validated"),
                config.model.clone(),
                config.temperature,
                config.response_path.clone(),
                config.max_retries,
                &config.auth_env,
            )?),
        };
        let cache = config
            .cache_dir
            .as_ref()
            .map(ResponseCache::new)
            .transpose()?;
        Ok(Self::new(
            backend,
            cache,
            config.model.clone(),
            config.temperature,
            config.max_retries,
        ))
    }

    /// Completes a prompt, serving it from the cache when possible.
    pub fn complete(&self, role: Role, prompt: &str) -> Result<String, GatewayError> {
        let digest = self.digest(role, prompt);
        if let Some(cache) = &self.cache {
            if let Some(record) = cache.get(&digest) {
                self.cache_hits.fetch_add(1, Ordering::Relaxed);
                return Ok(record.response);
            }
        }
        self.call_backend(role, prompt, &digest)
    }

    /// Completes a prompt without consulting the cache; the response is still
    /// recorded. Used when re-prompting after an unparseable answer.
    pub fn complete_fresh(&self, role: Role, prompt: &str) -> Result<String, GatewayError> {
        let digest = self.digest(role, prompt);
        self.call_backend(role, prompt, &digest)
    }

    fn call_backend(&self, role: Role, prompt: &str, digest: &str) -> Result<String, GatewayError> {
        let response = self.backend.complete(role, prompt)?;
        self.backend_calls.fetch_add(1, Ordering::Relaxed);
        if let Some(cache) = &self.cache {
            let record =
                CompletionRecord::new(digest.to_string(), response.clone(), self.backend.kind());
            cache.put(&record)?;
        }
        Ok(response)
    }

    fn digest(&self, role: Role, prompt: &str) -> String {
        prompt_digest(role, prompt, &self.model, self.temperature)
    }

    /// Calls that reached the backend (cache misses).
    pub fn backend_calls(&self) -> usize {
        self.backend_calls.load(Ordering::Relaxed)
    }

    pub fn cache_hits(&self) -> usize {
        self.cache_hits.load(Ordering::Relaxed)
    }

    /// Re-prompt budget for unparseable responses.
    pub fn max_retries(&self) -> u32 {
        self.max_retries
    }

    pub fn backend_kind(&self) -> &'static str {
        self.backend.kind()
    }
}
