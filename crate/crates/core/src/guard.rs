//! Observation policies and evaluation hygiene.
//!
//! Two things live here. First, what a method gets to see after a call: the
//! aggregate only, or (deliberately unsafe) the aggregate plus raw votes or
//! panel identities. Second, what the evaluator gets to see: a canonicalized,
//! provenance-free artifact, scored either with fresh randomness per call or
//! with randomness derived from the artifact's content hash and the benchmark
//! version.
//!
//! # Normalization rules
//!
//! Text payloads are split into clauses line by line. A line opens a new
//! clause when, after leading whitespace, it starts with a bullet (`-`, `*`,
//! `+`, `•`) or a number followed by `.` or `)`, and that marker is followed
//! by whitespace or the end of the line. The marker is removed. Any other
//! nonblank line continues the current clause. Each clause then has the
//! emphasis markers `*` and `_` removed, internal whitespace collapsed to
//! single spaces, is lowercased, and trimmed. Empty clauses are dropped. The
//! normalized text is the clauses joined with `\n`.
//!
//! Label payloads are trimmed and otherwise taken verbatim as a single clause.
//!
//! # Hashes and seeds
//!
//! `content_hash` is FNV-1a 64 (offset basis `0xcbf29ce484222325`, prime
//! `0x100000001b3`) over the UTF-8 bytes of the normalized text. The
//! deterministic-mode seed is FNV-1a 64 over the 8 little-endian bytes of the
//! content hash, one `0x00` byte, and the UTF-8 bytes of the version string.

use serde::{Deserialize, Serialize};

use crate::channel::{evaluate_with_judge, Artifact, BenchmarkSpec, PanelMember, Payload, RawEvaluation};
use crate::error::{Error, Result};
use crate::judge::JudgeBackend;
use crate::rng::{seeded, SimRng};

pub const FNV_OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
pub const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET_BASIS, |h, b| (h ^ u64::from(*b)).wrapping_mul(FNV_PRIME))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservationPolicy {
    AggregateOnly,
    /// Unsafe: also releases the micro-response vector.
    LeakRawVotes,
    /// Unsafe: also releases the panel draws.
    LeakPanelIds,
}

impl ObservationPolicy {
    pub fn is_unsafe(self) -> bool {
        self != ObservationPolicy::AggregateOnly
    }

    pub fn name(self) -> &'static str {
        match self {
            ObservationPolicy::AggregateOnly => "aggregate-only",
            ObservationPolicy::LeakRawVotes => "leak-raw-votes",
            ObservationPolicy::LeakPanelIds => "leak-panel-ids",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub aggregate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaked_votes: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaked_panel: Option<Vec<PanelMember>>,
}

pub fn observe(raw: RawEvaluation, policy: ObservationPolicy) -> Observation {
    let RawEvaluation { panel_draws, micro_responses, aggregate } = raw;
    Observation {
        aggregate,
        leaked_votes: (policy == ObservationPolicy::LeakRawVotes).then_some(micro_responses),
        leaked_panel: (policy == ObservationPolicy::LeakPanelIds).then_some(panel_draws),
    }
}

/// A provenance-free, normalized artifact with a stable content hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalArtifact {
    pub clause_sequence: Vec<String>,
    pub normalized_text: String,
    pub content_hash: u64,
    pub provenance_removed: bool,
}

impl CanonicalArtifact {
    fn from_clauses(clause_sequence: Vec<String>) -> Self {
        let normalized_text = clause_sequence.join("\n");
        CanonicalArtifact {
            content_hash: fnv1a64(normalized_text.as_bytes()),
            clause_sequence,
            normalized_text,
            provenance_removed: true,
        }
    }

    /// Builds a canonical text artifact directly from already-normalized clauses.
    pub fn from_normalized_clauses(clauses: Vec<String>) -> Result<Self> {
        if clauses.is_empty() || clauses.iter().any(|c| c.is_empty()) {
            return Err(Error::Argument("clause sequences must be nonempty with nonempty clauses".into()));
        }
        Ok(Self::from_clauses(clauses))
    }

    /// A text artifact whose payload renders these clauses as a numbered list.
    pub fn to_artifact(&self, id: impl Into<String>) -> Artifact {
        let text = self
            .clause_sequence
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{}. {c}", i + 1))
            .collect::<Vec<_>>()
            .join("\n");
        Artifact::text(id, text)
    }
}

pub fn canonicalize(artifact: &Artifact) -> Result<CanonicalArtifact> {
    let clauses = match &artifact.payload {
        Payload::StructuredText(text) => split_clauses(text),
        Payload::AbstractLabel(label) => {
            let label = label.trim();
            if label.is_empty() {
                Vec::new()
            } else {
                vec![label.to_string()]
            }
        }
    };
    if clauses.is_empty() {
        return Err(Error::Argument(format!("artifact {:?} has an empty payload", artifact.id)));
    }
    Ok(CanonicalArtifact::from_clauses(clauses))
}

/// Normalized payload text, the key instruments look artifacts up by.
pub fn normalized_payload(payload: &Payload) -> Result<String> {
    match payload {
        Payload::AbstractLabel(label) => {
            let label = label.trim();
            if label.is_empty() {
                return Err(Error::Argument("empty label payload".into()));
            }
            Ok(label.to_string())
        }
        Payload::StructuredText(text) => {
            let clauses = split_clauses(text);
            if clauses.is_empty() {
                return Err(Error::Argument("empty text payload".into()));
            }
            Ok(clauses.join("\n"))
        }
    }
}

/// Normalizes one clause: drop emphasis markers, collapse whitespace,
/// lowercase, trim.
pub fn normalize_clause(raw: &str) -> String {
    let stripped: String = raw.chars().filter(|c| *c != '*' && *c != '_').collect();
    stripped.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn split_clauses(text: &str) -> Vec<String> {
    let mut raw: Vec<String> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match strip_list_marker(line) {
            Some(rest) => raw.push(rest.to_string()),
            None => match raw.last_mut() {
                Some(current) => {
                    current.push(' ');
                    current.push_str(line);
                }
                None => raw.push(line.to_string()),
            },
        }
    }
    raw.iter().map(|c| normalize_clause(c)).filter(|c| !c.is_empty()).collect()
}

pub(crate) fn strip_list_marker(line: &str) -> Option<&str> {
    let marker_end = if line.starts_with(['-', '*', '+', '•']) {
        line.chars().next().map(char::len_utf8)?
    } else {
        let digits = line.bytes().take_while(u8::is_ascii_digit).count();
        if digits == 0 || !line[digits..].starts_with(['.', ')']) {
            return None;
        }
        digits + 1
    };
    let rest = &line[marker_end..];
    if rest.is_empty() || rest.starts_with(char::is_whitespace) {
        Some(rest.trim_start())
    } else {
        None
    }
}

/// Seed for deterministic-mode evaluation; a pure function of the content
/// hash and the benchmark version.
pub fn derive_seed(canonical: &CanonicalArtifact, benchmark_version: &str) -> u64 {
    let mut bytes = Vec::with_capacity(9 + benchmark_version.len());
    bytes.extend_from_slice(&canonical.content_hash.to_le_bytes());
    bytes.push(0x00);
    bytes.extend_from_slice(benchmark_version.as_bytes());
    fnv1a64(&bytes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeKind {
    /// Every call redraws the panel and the responses.
    Fresh,
    /// Randomness derived from (content hash, version); repeated calls agree.
    Deterministic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationMode {
    pub kind: ModeKind,
    /// Version mixed into deterministic seeds. Empty means the spec's version.
    #[serde(default)]
    pub benchmark_version: String,
}

impl EvaluationMode {
    pub fn fresh() -> Self {
        EvaluationMode { kind: ModeKind::Fresh, benchmark_version: String::new() }
    }

    pub fn deterministic(version: impl Into<String>) -> Self {
        EvaluationMode { kind: ModeKind::Deterministic, benchmark_version: version.into() }
    }
}

pub fn guarded_evaluate(
    spec: &BenchmarkSpec,
    artifact: &Artifact,
    mode: &EvaluationMode,
    policy: ObservationPolicy,
    rng: &mut SimRng,
) -> Result<Observation> {
    guarded_evaluate_with_judge(spec, artifact, mode, policy, rng, None)
}

pub fn guarded_evaluate_with_judge(
    spec: &BenchmarkSpec,
    artifact: &Artifact,
    mode: &EvaluationMode,
    policy: ObservationPolicy,
    rng: &mut SimRng,
    judge: Option<&dyn JudgeBackend>,
) -> Result<Observation> {
    let raw = match mode.kind {
        // the channel never reads provenance, so the artifact goes in as is
        ModeKind::Fresh => evaluate_with_judge(spec, artifact, rng, judge)?,
        ModeKind::Deterministic => {
            let canonical = canonicalize(artifact)?;
            let version = if mode.benchmark_version.is_empty() {
                spec.version.as_str()
            } else {
                mode.benchmark_version.as_str()
            };
            let mut seeded_rng = seeded(derive_seed(&canonical, version));
            let stripped = Artifact {
                id: artifact.id.clone(),
                payload: artifact.payload.clone(),
                provenance: Default::default(),
            };
            evaluate_with_judge(spec, &stripped, &mut seeded_rng, judge)?
        }
    };
    Ok(observe(raw, policy))
}
