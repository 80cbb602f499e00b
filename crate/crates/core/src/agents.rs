//! Adaptive submit/observe loops.
//!
//! An agent picks the next artifact from what it has observed so far, its side
//! information, and random draws it makes up front. Those draws are stored in
//! the transcript, so [`replay`] can recompute every submission from the
//! recorded observations.

use rayon::prelude::*;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::channel::{sample_aggregate, Artifact, BenchmarkSpec};
use crate::error::{Error, Result};
use crate::guard::{guarded_evaluate, EvaluationMode, Observation, ObservationPolicy};
use crate::rng::{fork, stream, SimRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Agent {
    /// Submits a preset list in order (optionally shuffled once per episode),
    /// ignoring observations.
    FixedSequence {
        artifacts: Vec<Artifact>,
        #[serde(default)]
        shuffle: bool,
    },
    /// Odd rounds submit `probe`; even rounds submit `responses[v]` where `v`
    /// is the first leaked vote of the previous round.
    LeakDistinguisher { probe: Artifact, responses: [Artifact; 2] },
    /// Alternates `first`/`second` for `reps_per_arm` rounds each, then
    /// submits the one with the strictly larger observed mean (ties go to
    /// `second`).
    MeanComparer {
        first: Artifact,
        second: Artifact,
        reps_per_arm: usize,
    },
}

impl Agent {
    /// The two-round distinguisher for the XOR construction over labels "0"/"1".
    pub fn xor_leak_distinguisher() -> Self {
        Agent::LeakDistinguisher {
            probe: Artifact::label("0"),
            responses: [Artifact::label("0"), Artifact::label("1")],
        }
    }

    pub fn fixed(artifacts: Vec<Artifact>) -> Self {
        Agent::FixedSequence { artifacts, shuffle: false }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Agent::FixedSequence { .. } => "fixed-sequence",
            Agent::LeakDistinguisher { .. } => "leak-distinguisher",
            Agent::MeanComparer { .. } => "mean-comparer",
        }
    }

    pub fn check_horizon(&self, horizon: usize) -> Result<()> {
        let ok = match self {
            Agent::FixedSequence { artifacts, .. } => horizon >= 1 && horizon <= artifacts.len(),
            Agent::LeakDistinguisher { .. } => horizon >= 2 && horizon % 2 == 0,
            Agent::MeanComparer { reps_per_arm, .. } => *reps_per_arm >= 1 && horizon == 2 * reps_per_arm + 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Argument(format!("horizon {horizon} does not fit agent {self:?}")))
        }
    }

    pub fn check_policy(&self, policy: ObservationPolicy) -> Result<()> {
        match self {
            Agent::LeakDistinguisher { .. } if policy != ObservationPolicy::LeakRawVotes => {
                Err(Error::ProtocolMismatch(format!(
                    "leak-distinguisher needs raw votes but the policy is {}",
                    policy.name()
                )))
            }
            _ => Ok(()),
        }
    }

    /// Number of u64 draws the agent makes at the start of an episode.
    fn draws_needed(&self) -> usize {
        match self {
            Agent::FixedSequence { artifacts, shuffle: true } => artifacts.len().saturating_sub(1),
            _ => 0,
        }
    }

    /// The artifact for round `t` (0-based) given rounds `0..t`.
    pub fn decide(&self, t: usize, history: &[Round], draws: &[u64]) -> Result<Artifact> {
        match self {
            Agent::FixedSequence { artifacts, shuffle } => {
                let mut order: Vec<usize> = (0..artifacts.len()).collect();
                if *shuffle {
                    for (k, i) in (1..order.len()).rev().enumerate() {
                        let j = (draws[k] % (i as u64 + 1)) as usize;
                        order.swap(i, j);
                    }
                }
                Ok(artifacts[order[t]].clone())
            }
            Agent::LeakDistinguisher { probe, responses } => {
                if t % 2 == 0 {
                    return Ok(probe.clone());
                }
                let votes = history[t - 1].observation.leaked_votes.as_ref().ok_or_else(|| {
                    Error::ProtocolMismatch("no raw votes in the previous observation".into())
                })?;
                match votes.first() {
                    Some(v) if *v == 0.0 => Ok(responses[0].clone()),
                    Some(v) if *v == 1.0 => Ok(responses[1].clone()),
                    other => Err(Error::ProtocolMismatch(format!("expected a binary first vote, got {other:?}"))),
                }
            }
            Agent::MeanComparer { first, second, reps_per_arm } => {
                if t < 2 * reps_per_arm {
                    return Ok(if t % 2 == 0 { first.clone() } else { second.clone() });
                }
                let mean_of = |parity: usize| {
                    let xs: Vec<f64> = history[..2 * reps_per_arm]
                        .iter()
                        .skip(parity)
                        .step_by(2)
                        .map(|r| r.observation.aggregate)
                        .collect();
                    xs.iter().sum::<f64>() / xs.len() as f64
                };
                Ok(if mean_of(0) > mean_of(1) { first.clone() } else { second.clone() })
            }
        }
    }
}

/// Information available before the episode starts; never modified during it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgorithmContext {
    #[serde(default)]
    pub side_info: Vec<u8>,
    pub horizon: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    /// 1-based round index.
    pub t: usize,
    pub artifact_id: String,
    #[serde(flatten)]
    pub observation: Observation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub rounds: Vec<Round>,
    pub policy_kind: ObservationPolicy,
    pub env_tag: String,
    /// The agent's own random draws, in the order it consumed them.
    #[serde(default)]
    pub agent_draws: Vec<u64>,
}

impl Transcript {
    /// JSON lines, one round per line.
    pub fn to_jsonl(&self) -> String {
        self.rounds
            .iter()
            .map(|r| serde_json::to_string(r).expect("round serializes") + "\n")
            .collect()
    }

    pub fn rounds_from_jsonl(text: &str) -> Result<Vec<Round>> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| Error::Ingest { row: i + 1, message: e.to_string() })
            })
            .collect()
    }

    pub fn submissions(&self) -> impl Iterator<Item = &str> {
        self.rounds.iter().map(|r| r.artifact_id.as_str())
    }
}

pub fn run_episode(
    agent: &Agent,
    spec: &BenchmarkSpec,
    policy: ObservationPolicy,
    mode: &EvaluationMode,
    horizon: usize,
    rng: &mut SimRng,
) -> Result<Transcript> {
    let ctx = AlgorithmContext { side_info: Vec::new(), horizon };
    run_episode_with_context(agent, spec, policy, mode, &ctx, rng)
}

pub fn run_episode_with_context(
    agent: &Agent,
    spec: &BenchmarkSpec,
    policy: ObservationPolicy,
    mode: &EvaluationMode,
    ctx: &AlgorithmContext,
    rng: &mut SimRng,
) -> Result<Transcript> {
    agent.check_policy(policy)?;
    agent.check_horizon(ctx.horizon)?;
    let mut agent_rng = fork(rng);
    let agent_draws: Vec<u64> = (0..agent.draws_needed()).map(|_| agent_rng.next_u64()).collect();
    let mut rounds: Vec<Round> = Vec::with_capacity(ctx.horizon);
    for t in 0..ctx.horizon {
        let artifact = agent.decide(t, &rounds, &agent_draws)?;
        let observation = guarded_evaluate(spec, &artifact, mode, policy, rng)?;
        rounds.push(Round { t: t + 1, artifact_id: artifact.id, observation });
    }
    Ok(Transcript { rounds, policy_kind: policy, env_tag: spec.version.clone(), agent_draws })
}

/// Runs `n` independent episodes; episode `i` uses stream `i` under `seed`.
pub fn run_episodes(
    agent: &Agent,
    spec: &BenchmarkSpec,
    policy: ObservationPolicy,
    mode: &EvaluationMode,
    horizon: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<Transcript>> {
    agent.check_policy(policy)?;
    agent.check_horizon(horizon)?;
    (0..n)
        .into_par_iter()
        .map(|i| run_episode(agent, spec, policy, mode, horizon, &mut stream(seed, i as u64)))
        .collect()
}

/// Recomputes every submission from the transcript's observations and the
/// agent's recorded draws; true when they all match.
pub fn replay(agent: &Agent, transcript: &Transcript) -> Result<bool> {
    for (t, round) in transcript.rounds.iter().enumerate() {
        let artifact = agent.decide(t, &transcript.rounds[..t], &transcript.agent_draws)?;
        if artifact.id != round.artifact_id {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Choice {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanComparison {
    pub winner: Choice,
    pub mean_first: f64,
    pub mean_second: f64,
}

/// Evaluates both artifacts `n_reps` times with fresh draws and picks the
/// strictly larger empirical mean; a tie picks `second`.
///
/// Outcomes are real scalars throughout this crate, so there is no
/// non-scalar case to reject.
pub fn compare_means(
    spec: &BenchmarkSpec,
    first: &Artifact,
    second: &Artifact,
    n_reps: usize,
    rng: &mut SimRng,
) -> Result<MeanComparison> {
    if n_reps == 0 {
        return Err(Error::Argument("compare_means needs n_reps >= 1".into()));
    }
    let mut buf = Vec::with_capacity(spec.panel_size);
    let mut mean = |w: &Artifact| -> Result<f64> {
        let key = w.key()?;
        let mut total = 0.0;
        for _ in 0..n_reps {
            total += sample_aggregate(spec, &key, &mut buf, rng)?;
        }
        Ok(total / n_reps as f64)
    };
    let mean_first = mean(first)?;
    let mean_second = mean(second)?;
    let winner = if mean_first > mean_second { Choice::First } else { Choice::Second };
    Ok(MeanComparison { winner, mean_first, mean_second })
}
