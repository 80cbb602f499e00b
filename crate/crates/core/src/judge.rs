//! Client side of the external judge endpoint.
//!
//! Wire format, schema version 1: `POST {base_url}/v1/judge` with body
//! `{"schema_version": 1, "artifact_text": ..., "persona_descriptor": ..., "seed": ...}`
//! (`seed` omitted when absent) and response `{"score": <real>}`. Requests are
//! built from a [`CanonicalArtifact`], which has no provenance, so submitter
//! metadata cannot be transmitted.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::guard::CanonicalArtifact;

pub const JUDGE_SCHEMA_VERSION: u32 = 1;
/// Overrides the binding's base URL when set.
pub const JUDGE_URL_ENV: &str = "BENCHLAB_JUDGE_URL";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeEndpointBinding {
    pub base_url: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_schema")]
    pub schema_version: u32,
}

fn default_timeout_ms() -> u64 {
    10_000
}
fn default_retries() -> u32 {
    2
}
fn default_schema() -> u32 {
    JUDGE_SCHEMA_VERSION
}

impl JudgeEndpointBinding {
    pub fn new(base_url: impl Into<String>) -> Self {
        JudgeEndpointBinding {
            base_url: base_url.into(),
            timeout_ms: default_timeout_ms(),
            retries: default_retries(),
            schema_version: JUDGE_SCHEMA_VERSION,
        }
    }

    pub fn endpoint(&self) -> String {
        let base = std::env::var(JUDGE_URL_ENV).unwrap_or_else(|_| self.base_url.clone());
        format!("{}/v1/judge", base.trim_end_matches('/'))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeRequest {
    pub schema_version: u32,
    pub artifact_text: String,
    pub persona_descriptor: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl JudgeRequest {
    pub fn new(canonical: &CanonicalArtifact, persona: &str, seed: Option<u64>) -> Self {
        JudgeRequest {
            schema_version: JUDGE_SCHEMA_VERSION,
            artifact_text: canonical.normalized_text.clone(),
            persona_descriptor: persona.to_string(),
            seed,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("request serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeResponse {
    pub score: f64,
}

/// Anything that can turn a judge request into a score.
pub trait JudgeBackend: Send + Sync {
    fn score(&self, request: &JudgeRequest) -> Result<f64>;
}

/// One micro-response from a judge for (artifact, persona).
pub fn judge_call(
    backend: &dyn JudgeBackend,
    canonical: &CanonicalArtifact,
    persona: &str,
    seed: Option<u64>,
) -> Result<f64> {
    let score = backend.score(&JudgeRequest::new(canonical, persona, seed))?;
    if !score.is_finite() {
        return Err(Error::Protocol(format!("judge returned non-finite score {score}")));
    }
    Ok(score)
}

/// Parses a response body; anything but `{"score": <finite real>}` is a
/// protocol error.
pub fn parse_response(body: &[u8]) -> Result<f64> {
    let resp: JudgeResponse =
        serde_json::from_slice(body).map_err(|e| Error::Protocol(format!("malformed judge response: {e}")))?;
    if resp.score.is_finite() {
        Ok(resp.score)
    } else {
        Err(Error::Protocol("judge score is not finite".into()))
    }
}

/// Blocking HTTP client for a live judge.
pub struct HttpJudge {
    binding: JudgeEndpointBinding,
    agent: ureq::Agent,
}

impl HttpJudge {
    pub fn new(binding: JudgeEndpointBinding) -> Result<Self> {
        if binding.schema_version != JUDGE_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "judge schema version {} is not supported (expected {JUDGE_SCHEMA_VERSION})",
                binding.schema_version
            )));
        }
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_millis(binding.timeout_ms))
            .build();
        Ok(HttpJudge { binding, agent })
    }
}

impl JudgeBackend for HttpJudge {
    fn score(&self, request: &JudgeRequest) -> Result<f64> {
        let url = self.binding.endpoint();
        let body = request.to_bytes();
        let mut last = String::new();
        for _ in 0..=self.binding.retries {
            let sent = self
                .agent
                .post(&url)
                .set("Content-Type", "application/json")
                .send_bytes(&body);
            match sent {
                Ok(resp) => {
                    let mut buf = Vec::new();
                    std::io::Read::read_to_end(&mut resp.into_reader(), &mut buf)
                        .map_err(|e| Error::Protocol(format!("reading judge response: {e}")))?;
                    return parse_response(&buf);
                }
                Err(ureq::Error::Status(code, _)) if code < 500 => {
                    return Err(Error::Protocol(format!("judge rejected request with status {code}")));
                }
                Err(e) => last = e.to_string(),
            }
        }
        Err(Error::UnavailableBackend(format!(
            "judge at {url} failed after {} attempts: {last}",
            self.binding.retries + 1
        )))
    }
}

/// Recorded-response backend for tests and offline runs.
#[derive(Debug, Clone, PartialEq)]
pub enum FixtureJudge {
    Constant(f64),
    /// Score per persona descriptor; unknown personas are a protocol error.
    PerPersona(BTreeMap<String, f64>),
}

impl JudgeBackend for FixtureJudge {
    fn score(&self, request: &JudgeRequest) -> Result<f64> {
        match self {
            FixtureJudge::Constant(v) => Ok(*v),
            FixtureJudge::PerPersona(table) => table
                .get(&request.persona_descriptor)
                .copied()
                .ok_or_else(|| Error::Protocol(format!("no fixture for persona {:?}", request.persona_descriptor))),
        }
    }
}
