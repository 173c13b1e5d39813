//! HTTP-backed tagging and embedding providers.
//!
//! Both speak plain JSON-over-HTTP: the tagger posts a chat-completion
//! request whose system prompt instructs the model to return a tags +
//! relations JSON object; the embedder posts an embeddings request. Bodies
//! are documented in `docs/adapters.md`. Request construction and response
//! parsing are pure functions so they can be tested against recorded
//! fixtures without a network.
//!
//! Remote failures never abort ingestion: callers route errors into
//! [`swiftmem_core::adapters::fallback_proposal`].

use std::time::Duration;

use serde::{Deserialize, Serialize};

use swiftmem_core::{CoreError, Embedder, TagProposal, Tagger};

/// Environment variable naming the chat-completion endpoint.
pub const ENV_LLM_ENDPOINT: &str = "SWIFTMEM_LLM_ENDPOINT";
/// Environment variable naming the embeddings endpoint.
pub const ENV_EMBED_ENDPOINT: &str = "SWIFTMEM_EMBED_ENDPOINT";
/// Optional bearer token for both endpoints.
pub const ENV_API_KEY: &str = "SWIFTMEM_API_KEY";

const DEFAULT_TIMEOUT_MS: u64 = 15_000;

/// System prompt sent with every tag-generation request.
pub const TAG_PROMPT: &str = "\
You are a semantic tag extraction assistant.
Your task is to:
1. Extract 3-8 meaningful tags that capture the main topics, themes, and contexts
2. Identify hierarchical relationships between these tags (parent-child)
Guidelines for tags:
- Tags should be lowercase, single words or short phrases (max 3 words)
- Focus on: topics, activities, locations, entities, emotions, intents
- Prioritize specific over generic (e.g., 'python_programming' over 'technology')
- Use underscores for multi-word tags (e.g., 'machine_learning')
- Avoid overly broad tags like 'conversation' or 'chat'
Guidelines for relations:
- parent tag = broader/more abstract concept
- child tag = more specific concept
- Only include relations that are clear from the conversation
- Examples:
  * parent: 'work', child: 'programming'
  * parent: 'lgbtq', child: 'transgender_story'
  * parent: 'food', child: 'italian_cuisine'
  * parent: 'identity', child: 'self_acceptance'
Return ONLY a JSON object:
{
  \"tags\": [\"tag1\", \"tag2\", \"tag3\", ...],
  \"relations\": [
    {\"parent\": \"broader_tag\", \"child\": \"specific_tag\"},
    ...
  ]
}
If no clear hierarchical relations exist, return an empty 'relations' array.";

/// Connection settings shared by both providers.
#[derive(Debug, Clone)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout_ms: u64,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: std::env::var(ENV_API_KEY).ok(),
            timeout_ms: DEFAULT_TIMEOUT_MS,
        }
    }

    fn agent(&self) -> ureq::Agent {
        ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(self.timeout_ms)))
            .build()
            .into()
    }
}

// --- wire types -----------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f32,
    pub messages: Vec<ChatMessage>,
}

#[derive(Debug, Serialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Deserialize)]
pub struct ChatResponse {
    pub choices: Vec<ChatChoice>,
}

#[derive(Debug, Deserialize)]
pub struct ChatChoice {
    pub message: ChatReplyMessage,
}

#[derive(Debug, Deserialize)]
pub struct ChatReplyMessage {
    pub content: String,
}

#[derive(Debug, Serialize)]
pub struct EmbeddingRequest {
    pub model: String,
    pub input: String,
}

#[derive(Debug, Deserialize)]
pub struct EmbeddingResponse {
    pub data: Vec<EmbeddingRow>,
}

#[derive(Debug, Deserialize)]
pub struct EmbeddingRow {
    pub embedding: Vec<f32>,
}

#[derive(Debug, Deserialize)]
struct RawProposal {
    #[serde(default)]
    tags: Vec<String>,
    #[serde(default)]
    relations: Vec<RawRelation>,
}

#[derive(Debug, Deserialize)]
struct RawRelation {
    parent: String,
    child: String,
}

// --- pure request/response logic ------------------------------------------

/// Build the chat-completion body for one episode's content.
pub fn tag_request(model: &str, content: &str) -> ChatRequest {
    ChatRequest {
        model: model.to_string(),
        temperature: 0.0,
        messages: vec![
            ChatMessage {
                role: "system".to_string(),
                content: TAG_PROMPT.to_string(),
            },
            ChatMessage {
                role: "user".to_string(),
                content: content.to_string(),
            },
        ],
    }
}

/// Parse the model's reply into a validated proposal. Tolerates a
/// markdown-fenced json block around the object; anything unparseable is
/// an error (the caller falls back to offline tagging).
pub fn parse_tag_reply(reply: &str) -> Result<TagProposal, CoreError> {
    let body = strip_code_fence(reply.trim());
    let raw: RawProposal = serde_json::from_str(body)
        .map_err(|e| CoreError::RemoteUnavailable(format!("unparseable tagger reply: {e}")))?;
    let relations: Vec<(String, String)> = raw
        .relations
        .into_iter()
        .map(|r| (r.parent, r.child))
        .collect();
    Ok(TagProposal::from_raw(&raw.tags, &relations))
}

fn strip_code_fence(text: &str) -> &str {
    let Some(rest) = text.strip_prefix("```") else {
        return text;
    };
    let rest = rest.strip_prefix("json").unwrap_or(rest);
    rest.trim_start_matches(['\r', '\n'])
        .strip_suffix("```")
        .map(str::trim_end)
        .unwrap_or(text)
}

/// L2-normalize a remote embedding and enforce the configured dimension.
pub fn finish_embedding(mut values: Vec<f32>, dimension: usize) -> Result<Vec<f32>, CoreError> {
    if values.len() != dimension {
        return Err(CoreError::DimensionMismatch {
            expected: dimension,
            got: values.len(),
        });
    }
    let norm = values
        .iter()
        .map(|v| *v as f64 * *v as f64)
        .sum::<f64>()
        .sqrt();
    if norm == 0.0 {
        return Err(CoreError::ZeroNorm);
    }
    for v in &mut values {
        *v = (*v as f64 / norm) as f32;
    }
    Ok(values)
}

// --- providers -------------------------------------------------------------

/// Chat-completion tagger.
#[derive(Debug, Clone)]
pub struct HttpTagger {
    config: RemoteConfig,
}

impl HttpTagger {
    pub fn new(config: RemoteConfig) -> Self {
        Self { config }
    }

    /// Configure from `SWIFTMEM_LLM_ENDPOINT` (and `SWIFTMEM_API_KEY`).
    pub fn from_env(model: &str) -> Result<Self, CoreError> {
        let endpoint = std::env::var(ENV_LLM_ENDPOINT).map_err(|_| {
            CoreError::RemoteUnavailable(format!("{ENV_LLM_ENDPOINT} is not set"))
        })?;
        Ok(Self::new(RemoteConfig::new(endpoint, model)))
    }
}

impl Tagger for HttpTagger {
    fn generate_tags(&self, content: &str) -> Result<TagProposal, CoreError> {
        if content.trim().is_empty() {
            return Err(CoreError::EmptyContent);
        }
        let body = tag_request(&self.config.model, content);
        let mut request = self.config.agent().post(&self.config.endpoint);
        if let Some(key) = &self.config.api_key {
            request = request.header("authorization", &format!("Bearer {key}"));
        }
        let mut response = request
            .send_json(&body)
            .map_err(|e| CoreError::RemoteUnavailable(e.to_string()))?;
        let reply: ChatResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| CoreError::RemoteUnavailable(e.to_string()))?;
        let content = reply
            .choices
            .first()
            .map(|c| c.message.content.as_str())
            .ok_or_else(|| CoreError::RemoteUnavailable("empty choices".to_string()))?;
        parse_tag_reply(content)
    }
}

/// Embeddings-endpoint client.
#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    config: RemoteConfig,
    dimension: usize,
}

impl HttpEmbedder {
    pub fn new(config: RemoteConfig, dimension: usize) -> Self {
        Self { config, dimension }
    }

    /// Configure from `SWIFTMEM_EMBED_ENDPOINT` (and `SWIFTMEM_API_KEY`).
    pub fn from_env(model: &str, dimension: usize) -> Result<Self, CoreError> {
        let endpoint = std::env::var(ENV_EMBED_ENDPOINT).map_err(|_| {
            CoreError::RemoteUnavailable(format!("{ENV_EMBED_ENDPOINT} is not set"))
        })?;
        Ok(Self::new(RemoteConfig::new(endpoint, model), dimension))
    }
}

impl Embedder for HttpEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f32>, CoreError> {
        if text.trim().is_empty() {
            return Err(CoreError::EmptyText);
        }
        let body = EmbeddingRequest {
            model: self.config.model.clone(),
            input: text.to_string(),
        };
        let mut request = self.config.agent().post(&self.config.endpoint);
        if let Some(key) = &self.config.api_key {
            request = request.header("authorization", &format!("Bearer {key}"));
        }
        let mut response = request
            .send_json(&body)
            .map_err(|e| CoreError::RemoteUnavailable(e.to_string()))?;
        let reply: EmbeddingResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| CoreError::RemoteUnavailable(e.to_string()))?;
        let row = reply
            .data
            .into_iter()
            .next()
            .ok_or_else(|| CoreError::RemoteUnavailable("empty data".to_string()))?;
        finish_embedding(row.embedding, self.dimension)
    }

    fn dimension(&self) -> usize {
        self.dimension
    }
}
