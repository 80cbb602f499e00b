//! Empirical checks of whether swapping two benchmarks is invisible to a
//! method, and the literal panel-change construction.
//!
//! [`compare_transcript_laws`] runs the same agent against two benchmarks and
//! tests, round by round, whether the submission marginals and the outcome
//! marginals differ. Discrete marginals use Pearson's chi-square test of
//! homogeneity; continuous outcomes use a Welch z-test on the means. All 2T
//! p-values are Bonferroni-adjusted. A non-rejection only says the data are
//! consistent with the swap being a pure panel change for this agent; it is
//! never a proof.

use std::collections::{BTreeMap, BTreeSet};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::agents::{run_episodes, Agent, Transcript};
use crate::channel::{
    outcome_label, Aggregator, BenchmarkSpec, MicroInstrument, PanelDistribution, ResponseLaw, TableEntry,
};
use crate::error::{Error, Result};
use crate::guard::{EvaluationMode, ObservationPolicy};
use crate::rng::SimRng;
use crate::stats::{chi_square_homogeneity, welch_z_pvalue, Moments};

/// Outcome marginals with at most this many distinct values are tested as
/// categorical.
pub const MAX_DISCRETE_OUTCOMES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ConsistentWithJpc,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarginalTest {
    ChiSquare,
    WelchZ,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundStats {
    pub t: usize,
    pub submissions_a: BTreeMap<String, f64>,
    pub submissions_b: BTreeMap<String, f64>,
    /// Outcome frequencies; empty when the outcome was tested as continuous.
    pub outcomes_a: BTreeMap<String, f64>,
    pub outcomes_b: BTreeMap<String, f64>,
    pub outcome_mean_a: f64,
    pub outcome_mean_b: f64,
    pub outcome_test: MarginalTest,
    pub submission_p: f64,
    pub outcome_p: f64,
    pub submission_p_adjusted: f64,
    pub outcome_p_adjusted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JpcReport {
    pub agent: String,
    pub policy: ObservationPolicy,
    pub horizon: usize,
    pub n_episodes_a: usize,
    pub n_episodes_b: usize,
    pub alpha: f64,
    pub rounds: Vec<RoundStats>,
    pub verdict: Verdict,
}

impl JpcReport {
    pub fn min_adjusted_p(&self) -> f64 {
        self.rounds
            .iter()
            .flat_map(|r| [r.submission_p_adjusted, r.outcome_p_adjusted])
            .fold(1.0, f64::min)
    }

    /// Plain-text table, one line per round.
    pub fn render(&self) -> String {
        let mut out = format!(
            "agent={} policy={} horizon={} n={}/{} alpha={}\n",
            self.agent,
            self.policy.name(),
            self.horizon,
            self.n_episodes_a,
            self.n_episodes_b,
            self.alpha
        );
        out.push_str("round  mean_o(A)  mean_o(B)  p_sub_adj  p_out_adj\n");
        for r in &self.rounds {
            out.push_str(&format!(
                "{:>5}  {:>9.4}  {:>9.4}  {:>9.3e}  {:>9.3e}\n",
                r.t, r.outcome_mean_a, r.outcome_mean_b, r.submission_p_adjusted, r.outcome_p_adjusted
            ));
        }
        let verdict = match self.verdict {
            Verdict::ConsistentWithJpc => "consistent-with-JPC (falsification test only)",
            Verdict::Rejected => "rejected",
        };
        out.push_str(&format!("verdict: {verdict}\n"));
        out
    }
}

#[allow(clippy::too_many_arguments)]
pub fn compare_transcript_laws(
    agent: &Agent,
    spec_a: &BenchmarkSpec,
    spec_b: &BenchmarkSpec,
    policy: ObservationPolicy,
    horizon: usize,
    n_episodes: usize,
    alpha: f64,
    rng: &mut SimRng,
) -> Result<JpcReport> {
    if n_episodes < 100 {
        return Err(Error::Argument(format!("need at least 100 episodes per benchmark, got {n_episodes}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Argument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    agent.check_horizon(horizon)?;
    let (seed_a, seed_b) = (rng.next_u64(), rng.next_u64());
    let mode = EvaluationMode::fresh();
    let eps_a = run_episodes(agent, spec_a, policy, &mode, horizon, n_episodes, seed_a)?;
    let eps_b = run_episodes(agent, spec_b, policy, &mode, horizon, n_episodes, seed_b)?;
    Ok(assemble_report(agent, policy, horizon, alpha, &eps_a, &eps_b))
}

/// Builds the per-round statistics and verdict from two batches of transcripts.
pub fn assemble_report(
    agent: &Agent,
    policy: ObservationPolicy,
    horizon: usize,
    alpha: f64,
    eps_a: &[Transcript],
    eps_b: &[Transcript],
) -> JpcReport {
    let comparisons = (2 * horizon) as f64;
    let rounds: Vec<RoundStats> = (0..horizon)
        .map(|t| {
            let subs_a = count_by(eps_a.iter().map(|e| e.rounds[t].artifact_id.clone()));
            let subs_b = count_by(eps_b.iter().map(|e| e.rounds[t].artifact_id.clone()));
            let submission_p = table_p(&subs_a, &subs_b);

            let outs_a: Vec<f64> = eps_a.iter().map(|e| e.rounds[t].observation.aggregate).collect();
            let outs_b: Vec<f64> = eps_b.iter().map(|e| e.rounds[t].observation.aggregate).collect();
            let ma: Moments = outs_a.iter().copied().collect();
            let mb: Moments = outs_b.iter().copied().collect();
            let ca = count_by(outs_a.iter().map(|v| outcome_label(*v)));
            let cb = count_by(outs_b.iter().map(|v| outcome_label(*v)));
            let distinct: BTreeSet<&String> = ca.keys().chain(cb.keys()).collect();
            let (outcome_test, outcome_p, outcomes_a, outcomes_b) = if distinct.len() <= MAX_DISCRETE_OUTCOMES {
                (MarginalTest::ChiSquare, table_p(&ca, &cb), freqs(&ca, eps_a.len()), freqs(&cb, eps_b.len()))
            } else {
                (MarginalTest::WelchZ, welch_z_pvalue(&ma, &mb), BTreeMap::new(), BTreeMap::new())
            };
            RoundStats {
                t: t + 1,
                submissions_a: freqs(&subs_a, eps_a.len()),
                submissions_b: freqs(&subs_b, eps_b.len()),
                outcomes_a,
                outcomes_b,
                outcome_mean_a: ma.mean,
                outcome_mean_b: mb.mean,
                outcome_test,
                submission_p,
                outcome_p,
                submission_p_adjusted: (submission_p * comparisons).min(1.0),
                outcome_p_adjusted: (outcome_p * comparisons).min(1.0),
            }
        })
        .collect();
    let verdict = if rounds
        .iter()
        .any(|r| r.submission_p_adjusted < alpha || r.outcome_p_adjusted < alpha)
    {
        Verdict::Rejected
    } else {
        Verdict::ConsistentWithJpc
    };
    JpcReport {
        agent: agent.name().to_string(),
        policy,
        horizon,
        n_episodes_a: eps_a.len(),
        n_episodes_b: eps_b.len(),
        alpha,
        rounds,
        verdict,
    }
}

fn count_by(items: impl Iterator<Item = String>) -> BTreeMap<String, u64> {
    let mut m = BTreeMap::new();
    for k in items {
        *m.entry(k).or_insert(0) += 1;
    }
    m
}

fn freqs(counts: &BTreeMap<String, u64>, n: usize) -> BTreeMap<String, f64> {
    counts.iter().map(|(k, c)| (k.clone(), *c as f64 / n as f64)).collect()
}

fn table_p(a: &BTreeMap<String, u64>, b: &BTreeMap<String, u64>) -> f64 {
    let keys: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    let row = |m: &BTreeMap<String, u64>| keys.iter().map(|k| m.get(*k).copied().unwrap_or(0)).collect::<Vec<_>>();
    chi_square_homogeneity(&row(a), &row(b))
}

/// A reduced-form kernel on a finite artifact set: artifact key -> outcome law.
pub type KernelLaw = BTreeMap<String, ResponseLaw>;

/// Two benchmarks that share instrument, aggregator, and panel size and
/// differ only in which (degenerate) panel member answers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalPair {
    pub spec_a: BenchmarkSpec,
    pub spec_b: BenchmarkSpec,
}

/// Member 0 answers with `kernel_q`, member 1 with `kernel_q_prime`; the
/// first spec always draws member 0 and the second member 1.
pub fn build_canonical_pair(kernel_q: &KernelLaw, kernel_q_prime: &KernelLaw) -> Result<CanonicalPair> {
    if kernel_q.is_empty() {
        return Err(Error::Argument("kernels need a nonempty artifact set".into()));
    }
    if !kernel_q.keys().eq(kernel_q_prime.keys()) {
        return Err(Error::Argument("the two kernels are defined on different artifact sets".into()));
    }
    let entries = [kernel_q, kernel_q_prime]
        .iter()
        .enumerate()
        .flat_map(|(member, kernel)| {
            kernel.iter().map(move |(artifact, law)| TableEntry {
                member,
                artifact: artifact.clone(),
                law: law.clone(),
            })
        })
        .collect();
    let instrument = MicroInstrument::TableLookup { entries };
    let spec = |member| {
        BenchmarkSpec::new(PanelDistribution::Degenerate { member }, instrument.clone(), Aggregator::Identity, 1)
    };
    Ok(CanonicalPair { spec_a: spec(0)?, spec_b: spec(1)? })
}

/// True when the two specs agree in every field except the panel. The
/// version tag is derived metadata and is not compared.
pub fn is_literal_panel_change(a: &BenchmarkSpec, b: &BenchmarkSpec) -> bool {
    a.instrument == b.instrument && a.aggregator == b.aggregator && a.panel_size == b.panel_size
}
