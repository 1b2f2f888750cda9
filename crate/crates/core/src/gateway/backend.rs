//! Completion backends: a live HTTP chat endpoint, a scripted fixture for
//! deterministic tests, and a ground-truth oracle for synthetic graphs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::template::sanitize_node_text;
use super::{GatewayError, Role};
use crate::graph::TextAttributedGraph;
use crate::pipeline::EdgeDecomposition;

/// A completion source. Implementations must be safe for concurrent calls.
pub trait CompletionBackend: Send + Sync {
    fn complete(&self, role: Role, prompt: &str) -> Result<String, GatewayError>;
    fn kind(&self) -> &'static str;
}

// ============================================================================
// Scripted backend
// ============================================================================

/// Canned responses keyed by role name or by the SHA-256 hex of the exact
/// rendered prompt; prompt keys win over role keys.
pub struct ScriptedBackend {
    responses: BTreeMap<String, String>,
}

impl ScriptedBackend {
    pub fn new(responses: BTreeMap<String, String>) -> Self {
        Self { responses }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let bytes = fs::read(path)?;
        let responses: BTreeMap<String, String> = serde_json::from_slice(&bytes)
            .map_err(|e| GatewayError::Config(format!("scripted fixture: {e}")))?;
        Ok(Self::new(responses))
    }
}

fn prompt_key(prompt: &str) -> String {
    format!("{:x}", Sha256::digest(prompt.as_bytes()))
}

impl CompletionBackend for ScriptedBackend {
    fn complete(&self, role: Role, prompt: &str) -> Result<String, GatewayError> {
        if let Some(response) = self.responses.get(&prompt_key(prompt)) {
            return Ok(response.clone());
        }
        self.responses
            .get(&role.to_string())
            .cloned()
            .ok_or_else(|| {
                GatewayError::Backend(format!("no scripted response for role {role}"))
            })
    }

    fn kind(&self) -> &'static str {
        "scripted"
    }
}

// ============================================================================
// Oracle backend
// ============================================================================

/// Answers decomposer prompts from a ground-truth decomposition, optionally
/// corrupting each answer with probability `p_noise`. Generator and
/// discriminator prompts are served from fixture responses.
pub struct OracleBackend {
    by_texts: HashMap<(String, String), BTreeSet<usize>>,
    num_relations: usize,
    p_noise: f64,
    rng: Mutex<ChaCha8Rng>,
    fixtures: BTreeMap<String, String>,
}

impl OracleBackend {
    pub fn new(
        graph: &TextAttributedGraph,
        truth: &EdgeDecomposition,
        num_relations: usize,
        p_noise: f64,
        noise_seed: u64,
        fixtures: BTreeMap<String, String>,
    ) -> Result<Self, GatewayError> {
        if !(0.0..=1.0).contains(&p_noise) {
            return Err(GatewayError::Config("p_noise must be in [0, 1]".into()));
        }
        if num_relations == 0 || num_relations > 16 {
            return Err(GatewayError::Config(
                "oracle supports 1..=16 relations".into(),
            ));
        }
        let mut by_texts = HashMap::new();
        for (&(a, b), assignment) in truth.iter() {
            let ta = sanitize_node_text(graph.text(a));
            let tb = sanitize_node_text(graph.text(b));
            by_texts.insert((ta.clone(), tb.clone()), assignment.relations.clone());
            by_texts.insert((tb, ta), assignment.relations.clone());
        }
        Ok(Self {
            by_texts,
            num_relations,
            p_noise,
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(noise_seed)),
            fixtures,
        })
    }

    /// Random nonempty subset of `[0, R)`.
    fn random_subset(&self, rng: &mut ChaCha8Rng) -> BTreeSet<usize> {
        let mask: u32 = rng.gen_range(1..(1u32 << self.num_relations));
        (0..self.num_relations).filter(|r| mask >> r & 1 == 1).collect()
    }
}

/// Pulls the two node texts back out of a rendered decomposer prompt.
pub(crate) fn extract_node_texts(prompt: &str) -> Option<(&str, &str)> {
    let start = prompt.find("Node 1: ")? + "Node 1: ".len();
    let rest = &prompt[start..];
    let sep = rest.find(", Node 2: ")?;
    let after = &rest[sep + ", Node 2: ".len()..];
    let end = after.find("\nQuestion:")?;
    Some((&rest[..sep], &after[..end]))
}

fn format_answer(set: &BTreeSet<usize>) -> String {
    let indices: Vec<String> = set.iter().map(|r| (r + 1).to_string()).collect();
    format!("Answer: {}", indices.join(", "))
}

impl CompletionBackend for OracleBackend {
    fn complete(&self, role: Role, prompt: &str) -> Result<String, GatewayError> {
        if role != Role::Decomposer {
            return self
                .fixtures
                .get(&role.to_string())
                .cloned()
                .ok_or_else(|| {
                    GatewayError::Backend(format!("oracle fixture has no response for {role}"))
                });
        }
        let (t1, t2) = extract_node_texts(prompt).ok_or_else(|| {
            GatewayError::Oracle("could not locate node texts in decomposer prompt".into())
        })?;
        let truth = self
            .by_texts
            .get(&(t1.to_string(), t2.to_string()))
            .ok_or_else(|| GatewayError::Oracle(format!("no oracle entry for texts {t1:?}, {t2:?}")))?;
        let mut rng = self.rng.lock().expect("oracle rng poisoned");
        let answer = if self.p_noise > 0.0 && rng.gen_bool(self.p_noise) {
            self.random_subset(&mut rng)
        } else {
            truth.clone()
        };
        Ok(format_answer(&answer))
    }

    fn kind(&self) -> &'static str {
        "oracle"
    }
}

// ============================================================================
// HTTP backend
// ============================================================================

/// POSTs a chat-completion request and extracts the completion text at a
/// configurable response path. Retries with exponential backoff.
pub struct HttpBackend {
    endpoint: String,
    model: String,
    temperature: f64,
    response_path: String,
    max_retries: u32,
    token: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(
        endpoint: String,
        model: String,
        temperature: f64,
        response_path: String,
        max_retries: u32,
        auth_env: &str,
    ) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(Self {
            endpoint,
            model,
            temperature,
            response_path,
            max_retries,
            token: std::env::var(auth_env).ok(),
            client,
        })
    }

    fn request_once(&self, prompt: &str) -> Result<String, GatewayError> {
        let body = serde_json::json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut request = self.client.post(&self.endpoint).json(&body);
        if let Some(token) = &self.token {
            request = request.bearer_auth(token);
        }
        let response = request
            .send()
            .map_err(|e| GatewayError::Backend(e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            return Err(GatewayError::Backend(format!(
                "endpoint returned {status}"
            )));
        }
        let value: serde_json::Value = response
            .json()
            .map_err(|e| GatewayError::Backend(e.to_string()))?;
        extract_path(&value, &self.response_path).ok_or_else(|| {
            GatewayError::Backend(format!(
                "response has no string at path {:?}",
                self.response_path
            ))
        })
    }
}

/// Walks a dot-separated path; numeric segments index into arrays.
fn extract_path(value: &serde_json::Value, path: &str) -> Option<String> {
    let mut current = value;
    for segment in path.split('.') {
        current = match segment.parse::<usize>() {
            Ok(index) => current.get(index)?,
            Err(_) => current.get(segment)?,
        };
    }
    current.as_str().map(str::to_string)
}

impl CompletionBackend for HttpBackend {
    fn complete(&self, _role: Role, prompt: &str) -> Result<String, GatewayError> {
        let mut delay = Duration::from_millis(100);
        let mut last_err = None;
        for attempt in 0..=self.max_retries {
            match self.request_once(prompt) {
                Ok(text) => return Ok(text),
                Err(e) => {
                    log::warn!("http completion attempt {attempt} failed: {e}");
                    last_err = Some(e);
                    if attempt < self.max_retries {
                        std::thread::sleep(delay);
                        delay *= 2;
                    }
                }
            }
        }
        Err(last_err.unwrap_or_else(|| GatewayError::Backend("no attempts made".into())))
    }

    fn kind(&self) -> &'static str {
        "http"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extract_path_walks_arrays_and_objects() {
        let value = serde_json::json!({
            "choices": [{"message": {"content": "hi"}}]
        });
        assert_eq!(
            extract_path(&value, "choices.0.message.content"),
            Some("hi".into())
        );
        assert_eq!(extract_path(&value, "choices.1.message.content"), None);
    }

    #[test]
    fn node_text_extraction() {
        let prompt = "header\nNode 1: alpha beta, Node 2: gamma\nQuestion: pick";
        assert_eq!(extract_node_texts(prompt), Some(("alpha beta", "gamma")));
        assert_eq!(extract_node_texts("no markers"), None);
    }

    #[test]
    fn scripted_prompt_key_beats_role_key() {
        let mut map = BTreeMap::new();
        map.insert("decomposer".to_string(), "role answer".to_string());
        map.insert(prompt_key("exact"), "exact answer".to_string());
        let backend = ScriptedBackend::new(map);
        assert_eq!(
            backend.complete(Role::Decomposer, "exact").unwrap(),
            "exact answer"
        );
        assert_eq!(
            backend.complete(Role::Decomposer, "other").unwrap(),
            "role answer"
        );
        assert!(backend.complete(Role::Generator, "other").is_err());
    }
}
