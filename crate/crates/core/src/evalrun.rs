//! Batch runner for OpenAI-compatible chat completion endpoints.
//!
//! Requests go out with bounded concurrency; every outcome is appended to a
//! JSONL run log by a single writer so an interrupted run can resume.

use std::collections::HashSet;
use std::path::Path;
use std::time::{Duration, Instant};

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use tokio::io::AsyncWriteExt;

use crate::error::{Error, Result};
use crate::promptkit::PromptBundle;
use crate::taskgen::TaskInstance;
use crate::SCHEMA_VERSION;

/// How a non-empty assistant prefix reaches the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrefixMode {
    /// Trailing assistant message the server continues from.
    #[default]
    Continuation,
    /// Prefix appended to the user turn.
    UserAppend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding a bearer token.
    pub api_key_env: Option<String>,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Budget for tasks that show their working.
    pub reasoning_max_tokens: u32,
    pub concurrency: usize,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub prefix_mode: PrefixMode,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            endpoint: "http://localhost:8000/v1".into(),
            model: "default".into(),
            api_key_env: None,
            temperature: 0.0,
            max_tokens: 256,
            reasoning_max_tokens: 1024,
            concurrency: 8,
            timeout_secs: 600,
            max_retries: 5,
            backoff_ms: 500,
            prefix_mode: PrefixMode::Continuation,
            seed: 0,
        }
    }
}

impl RunConfig {
    /// SHA-256 over the canonical JSON form.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canon.as_bytes()))
    }

    pub fn url(&self) -> String {
        format!("{}/chat/completions", self.endpoint.trim_end_matches('/'))
    }

    fn max_tokens_for(&self, bundle: &PromptBundle) -> u32 {
        if bundle.kind.is_reasoning() {
            self.reasoning_max_tokens
        } else {
            self.max_tokens
        }
    }
}

/// Exact request body for one prompt.
pub fn request_body(bundle: &PromptBundle, config: &RunConfig) -> String {
    let mut messages = vec![json!({"role": "system", "content": bundle.system})];
    let prefix = bundle.assistant_prefix.as_str();
    match config.prefix_mode {
        PrefixMode::Continuation => {
            messages.push(json!({"role": "user", "content": bundle.user}));
            if !prefix.is_empty() {
                messages.push(json!({"role": "assistant", "content": prefix}));
            }
        }
        PrefixMode::UserAppend => {
            let user = if prefix.is_empty() {
                bundle.user.clone()
            } else {
                format!("{}\n\n{prefix}", bundle.user)
            };
            messages.push(json!({"role": "user", "content": user}));
        }
    }
    let body = json!({
        "model": config.model,
        "messages": messages,
        "temperature": config.temperature,
        "max_tokens": config.max_tokens_for(bundle),
    });
    serde_json::to_string(&body).expect("body serializes")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallStatus {
    Ok,
    /// The server rejected the prompt as too long for the model.
    OverLength,
    /// Retries exhausted.
    Failed,
}

/// One line of the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub schema: String,
    pub id: String,
    pub task: String,
    pub budget: usize,
    pub model: String,
    pub status: CallStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub assistant_prefix: String,
    pub prefix_mode: PrefixMode,
    pub attempts: u32,
    pub latency_ms: u64,
    pub config_hash: String,
    pub request_sha256: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub sent: usize,
    pub skipped: usize,
    pub ok: usize,
    pub over_length: usize,
    pub failed: usize,
}

/// Ids already finished (ok or over-length) in an existing run log.
pub fn completed_ids(path: &Path) -> Result<HashSet<String>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(HashSet::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut done = HashSet::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        // A torn final line from a crash is ignored and retried.
        let Ok(rec) = serde_json::from_str::<ResponseRecord>(line) else {
            continue;
        };
        if rec.status != CallStatus::Failed {
            done.insert(rec.id);
        }
    }
    Ok(done)
}

/// Latest record per id from a run log.
pub fn load_run_log(path: &Path) -> Result<Vec<ResponseRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out: Vec<ResponseRecord> = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let Ok(rec) = serde_json::from_str::<ResponseRecord>(line) else {
            continue;
        };
        if let Some(slot) = out.iter_mut().find(|r| r.id == rec.id) {
            *slot = rec;
        } else {
            out.push(rec);
        }
    }
    Ok(out)
}

/// Write the request bodies that a live run would send, one JSON object per line.
pub fn dry_run_export(bundles: &[PromptBundle], config: &RunConfig, path: &Path) -> Result<usize> {
    let mut out = String::new();
    for b in bundles {
        let body = request_body(b, config);
        let line = json!({
            "id": b.id,
            "url": config.url(),
            "request_sha256": hex::encode(Sha256::digest(body.as_bytes())),
            "body": body,
        });
        out.push_str(&serde_json::to_string(&line)?);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))?;
    Ok(bundles.len())
}

fn is_over_length(body: &str) -> bool {
    let b = body.to_lowercase();
    [
        "context_length",
        "context length",
        "maximum context",
        "too long",
        "too many tokens",
    ]
    .iter()
    .any(|m| b.contains(m))
}

enum Outcome {
    Ok(String),
    OverLength(String),
    Failed(String),
}

async fn call(client: &reqwest::Client, config: &RunConfig, key: Option<&str>, body: &str) -> Result<(Outcome, u32)> {
    let mut attempt = 0;
    loop {
        attempt += 1;
        let mut req = client
            .post(config.url())
            .header("content-type", "application/json")
            .body(body.to_string());
        if let Some(k) = key {
            req = req.bearer_auth(k);
        }
        let retry_reason = match req.send().await {
            Ok(resp) => {
                let status = resp.status();
                let text = resp.text().await.unwrap_or_default();
                if status.is_success() {
                    let v: Value = serde_json::from_str(&text)
                        .map_err(|e| Error::Endpoint(format!("unparseable response: {e}")))?;
                    let content = v
                        .pointer("/choices/0/message/content")
                        .and_then(Value::as_str)
                        .ok_or_else(|| Error::Endpoint("response lacks choices[0].message.content".into()))?;
                    return Ok((Outcome::Ok(content.to_string()), attempt));
                }
                if status.is_client_error() && is_over_length(&text) {
                    return Ok((Outcome::OverLength(text), attempt));
                }
                if status.is_server_error() || status.as_u16() == 429 || status.as_u16() == 408 {
                    format!("HTTP {status}: {text}")
                } else {
                    return Err(Error::Endpoint(format!("HTTP {status}: {text}")));
                }
            }
            Err(e) => e.to_string(),
        };
        if attempt > config.max_retries {
            return Ok((Outcome::Failed(retry_reason), attempt));
        }
        let wait = config.backoff_ms.saturating_mul(1 << (attempt - 1).min(10));
        tokio::time::sleep(Duration::from_millis(wait)).await;
    }
}

/// Send every bundle not already completed in `log_path` and append the
/// outcomes. Non-retryable client errors abort the run.
pub async fn run(
    instances: &[TaskInstance],
    bundles: &[PromptBundle],
    config: &RunConfig,
    log_path: &Path,
) -> Result<RunSummary> {
    let done = completed_ids(log_path)?;
    let key = match &config.api_key_env {
        Some(var) => {
            Some(std::env::var(var).map_err(|_| Error::Config(format!("environment variable {var} is not set")))?)
        }
        None => None,
    };
    let client = reqwest::Client::builder()
        .timeout(Duration::from_secs(config.timeout_secs))
        .build()
        .map_err(|e| Error::Endpoint(e.to_string()))?;
    let hash = config.hash();
    let mut summary = RunSummary::default();
    let todo: Vec<(&PromptBundle, &TaskInstance)> = bundles
        .iter()
        .zip(instances)
        .filter(|(b, _)| {
            let skip = done.contains(&b.id);
            summary.skipped += usize::from(skip);
            !skip
        })
        .collect();

    let mut file = tokio::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(log_path)
        .await
        .map_err(|e| Error::io(log_path, e))?;

    let client = &client;
    let key = key.as_deref();
    let mut results = stream::iter(todo)
        .map(|(bundle, inst)| async move {
            let body = request_body(bundle, config);
            let started = Instant::now();
            let outcome = call(client, config, key, &body).await;
            (bundle, inst, body, started.elapsed(), outcome)
        })
        .buffer_unordered(config.concurrency.max(1));

    let mut fatal = None;
    while let Some((bundle, inst, body, elapsed, outcome)) = results.next().await {
        let (outcome, attempts) = match outcome {
            Ok(x) => x,
            Err(e) => {
                fatal = Some(e);
                break;
            }
        };
        summary.sent += 1;
        let (status, response, error) = match outcome {
            Outcome::Ok(r) => {
                summary.ok += 1;
                (CallStatus::Ok, Some(r), None)
            }
            Outcome::OverLength(e) => {
                summary.over_length += 1;
                (CallStatus::OverLength, None, Some(e))
            }
            Outcome::Failed(e) => {
                summary.failed += 1;
                (CallStatus::Failed, None, Some(e))
            }
        };
        let rec = ResponseRecord {
            schema: SCHEMA_VERSION.into(),
            id: bundle.id.clone(),
            task: inst.task.clone(),
            budget: inst.length_budget,
            model: config.model.clone(),
            status,
            response,
            error,
            assistant_prefix: bundle.assistant_prefix.clone(),
            prefix_mode: config.prefix_mode,
            attempts,
            latency_ms: elapsed.as_millis() as u64,
            config_hash: hash.clone(),
            request_sha256: hex::encode(Sha256::digest(body.as_bytes())),
        };
        let mut line = serde_json::to_string(&rec)?;
        line.push('\n');
        file.write_all(line.as_bytes())
            .await
            .map_err(|e| Error::io(log_path, e))?;
        file.flush().await.map_err(|e| Error::io(log_path, e))?;
    }
    match fatal {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}
