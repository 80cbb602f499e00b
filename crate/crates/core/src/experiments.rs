//! Canned runs: the XOR counterexample and a prompt-edit planning workflow.

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{run_episodes, Agent};
use crate::channel::{estimate_kernel, gaussian_benchmark, xor_pair_benchmark, Artifact, BenchmarkSpec, EmpiricalKernel};
use crate::discrim::{estimate_kappa, plan_samples, validate_misranking, KappaEstimate, MisrankCurve, PlanResult, Separation};
use crate::error::{Error, Result};
use crate::guard::{canonicalize, CanonicalArtifact, EvaluationMode, ObservationPolicy};
use crate::prompt_space::{sample_neighborhood, ClauseSequence, EditSet};
use crate::rng::{seeded, stream, SimRng};
use crate::stats::{binomial_se, normal_quantile};

pub const XOR_VOTE_PROBS: [f64; 2] = [0.1, 0.4];
pub const MIN_COUNTEREXAMPLE_EPISODES: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub quantity: String,
    pub estimate: f64,
    pub std_error: f64,
    pub reference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub episodes: u64,
    pub seed: u64,
    pub rows: Vec<EstimateRow>,
}

impl CounterexampleReport {
    pub fn get(&self, quantity: &str) -> Option<&EstimateRow> {
        self.rows.iter().find(|r| r.quantity == quantity)
    }

    pub fn render(&self) -> String {
        let mut out = format!("{:<14} {:>9} {:>9} {:>9}\n", "quantity", "estimate", "se", "reference");
        for r in &self.rows {
            out += &format!("{:<14} {:>9.5} {:>9.5} {:>9.3}\n", r.quantity, r.estimate, r.std_error, r.reference);
        }
        out
    }
}

/// Estimates the six headline quantities of the XOR construction:
/// Q(1|0) and Q(1|1) (shared by both benchmarks), then the leak
/// distinguisher's second submission and second outcome under B and B'.
pub fn reproduce_counterexample(episodes: u64, seed: u64) -> Result<CounterexampleReport> {
    if episodes < MIN_COUNTEREXAMPLE_EPISODES {
        return Err(Error::Argument(format!(
            "need at least {MIN_COUNTEREXAMPLE_EPISODES} episodes, got {episodes}"
        )));
    }
    let b = xor_pair_benchmark(XOR_VOTE_PROBS, false)?;
    let b_flip = xor_pair_benchmark(XOR_VOTE_PROBS, true)?;
    let mut rng = seeded(seed);
    let n = episodes;

    let mut rows = Vec::new();
    for (label, p) in [("0", XOR_VOTE_PROBS[0]), ("1", XOR_VOTE_PROBS[1])] {
        let k = estimate_kernel(&b, &Artifact::label(label), n, &mut stream(rng.next_u64(), 0))?;
        let est = k.frequency(1.0);
        rows.push(EstimateRow {
            quantity: format!("Q(1|{label})"),
            estimate: est,
            std_error: binomial_se(est, n),
            reference: 2.0 * p * (1.0 - p),
        });
    }

    let agent = Agent::xor_leak_distinguisher();
    let mode = EvaluationMode::fresh();
    for (tag, spec, ref_w2, ref_o2) in [("B", &b, 0.1, 0.21), ("B'", &b_flip, 0.9, 0.45)] {
        let transcripts =
            run_episodes(&agent, spec, ObservationPolicy::LeakRawVotes, &mode, 2, n as usize, rng.next_u64())?;
        let w2 = transcripts.iter().filter(|t| t.rounds[1].artifact_id == "1").count() as f64 / n as f64;
        let o2 = transcripts.iter().filter(|t| t.rounds[1].observation.aggregate == 1.0).count() as f64 / n as f64;
        rows.push(EstimateRow { quantity: format!("P_{tag}(w2=1)"), estimate: w2, std_error: binomial_se(w2, n), reference: ref_w2 });
        rows.push(EstimateRow { quantity: format!("P_{tag}(o2=1)"), estimate: o2, std_error: binomial_se(o2, n), reference: ref_o2 });
    }
    Ok(CounterexampleReport { episodes, seed, rows })
}

/// Pilot kernels for each artifact, `n_reps` calls apiece. Artifact `i` draws
/// from stream `i` under `seed`, so the result is independent of threading.
pub fn run_pilot(spec: &BenchmarkSpec, artifacts: &[Artifact], n_reps: u64, seed: u64) -> Result<Vec<EmpiricalKernel>> {
    artifacts
        .par_iter()
        .enumerate()
        .map(|(i, w)| estimate_kernel(spec, w, n_reps, &mut stream(seed, i as u64)))
        .collect()
}

/// Synthetic prompt landscape with one planted hard pair.
///
/// Neighborhood members, ordered by content hash, get mean scores
/// `0, step, 2 step, ...`. The planted member is the top member with one
/// clause substituted; it scores `planted_gap` above the top. Noise is
/// Gaussian with standard deviation `sigma` for every prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedLandscape {
    pub spec: BenchmarkSpec,
    pub artifacts: Vec<Artifact>,
    pub sequences: Vec<ClauseSequence>,
    /// The better member of the planted pair.
    pub planted_hi: String,
    pub planted_lo: String,
    pub step: f64,
    pub planted_gap: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkflowConfig {
    pub base_prompt: String,
    pub clause_pool: Vec<String>,
    pub planted_clause: String,
    pub radius: usize,
    pub members: usize,
    pub step: f64,
    pub planted_gap: f64,
    pub sigma: f64,
    pub pilot_reps: u64,
    pub resolution: f64,
    pub quantile: f64,
    pub delta: f64,
    pub n_grid: Vec<u64>,
    pub episodes_per_n: u64,
    pub seed: u64,
}

impl Default for WorkflowConfig {
    fn default() -> Self {
        WorkflowConfig {
            base_prompt: "1. Read the question carefully\n2. Think step by step\n3. Cite the passage you rely on\n4. Answer in one sentence\n5. Say when you are unsure".into(),
            clause_pool: [
                "use plain language",
                "check units before answering",
                "list assumptions first",
                "prefer short answers",
                "quote numbers exactly",
                "avoid speculation",
                "restate the question",
                "give one example",
            ]
            .map(String::from)
            .to_vec(),
            planted_clause: "double-check the final answer".into(),
            radius: 2,
            members: 30,
            step: 0.2,
            planted_gap: 0.2 / std::f64::consts::SQRT_2,
            sigma: 1.0,
            pilot_reps: 20_000,
            resolution: 1.0,
            quantile: 0.05,
            delta: 0.05,
            n_grid: vec![25, 50, 100, 150, 200, 250, 300, 400, 500, 600],
            episodes_per_n: 4000,
            seed: 7,
        }
    }
}

pub fn planted_landscape(cfg: &WorkflowConfig, rng: &mut SimRng) -> Result<PlantedLandscape> {
    if !(cfg.step > 0.0 && cfg.planted_gap > 0.0 && cfg.sigma > 0.0) {
        return Err(Error::Argument("step, planted gap and sigma must be positive".into()));
    }
    let base = canonicalize(&Artifact::text("base", cfg.base_prompt.clone()))?;
    let hood = sample_neighborhood(&base, cfg.radius, cfg.members, &EditSet::all(cfg.clause_pool.clone()), rng)?;
    if hood.members.len() < 2 {
        return Err(Error::Argument("neighborhood has fewer than 2 members".into()));
    }
    let mut members: Vec<CanonicalArtifact> = hood.members.iter().map(|m| m.canonical.clone()).collect();
    members.sort_by_key(|c| c.content_hash);

    let top = members.last().expect("nonempty").clone();
    let planted_clause = crate::guard::normalize_clause(&cfg.planted_clause);
    let planted = (0..top.clause_sequence.len())
        .filter_map(|pos| {
            let mut seq = top.clause_sequence.clone();
            seq[pos] = planted_clause.clone();
            CanonicalArtifact::from_normalized_clauses(seq).ok()
        })
        .find(|c| c.content_hash != base.content_hash && members.iter().all(|m| m.content_hash != c.content_hash))
        .ok_or_else(|| Error::Argument("could not plant a distinct variant of the top member".into()))?;

    let id = |c: &CanonicalArtifact| format!("p{:016x}", c.content_hash);
    let mut means = Vec::new();
    let mut artifacts = Vec::new();
    let mut sequences = Vec::new();
    for (i, c) in members.iter().enumerate() {
        means.push((c.normalized_text.clone(), i as f64 * cfg.step));
        artifacts.push(c.to_artifact(id(c)));
        sequences.push(ClauseSequence::from(c));
    }
    let top_mean = (members.len() - 1) as f64 * cfg.step;
    means.push((planted.normalized_text.clone(), top_mean + cfg.planted_gap));
    artifacts.push(planted.to_artifact(id(&planted)));
    sequences.push(ClauseSequence::from(&planted));

    Ok(PlantedLandscape {
        spec: gaussian_benchmark(means, cfg.sigma)?,
        artifacts,
        sequences,
        planted_hi: id(&planted),
        planted_lo: id(&top),
        step: cfg.step,
        planted_gap: cfg.planted_gap,
        sigma: cfg.sigma,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkflowReport {
    pub n_artifacts: usize,
    pub kappa: KappaEstimate,
    pub plan: PlanResult,
    pub planted_hi: String,
    pub planted_lo: String,
    /// True SNR of the planted pair and of adjacent non-planted pairs.
    pub planted_snr: f64,
    pub adjacent_snr: f64,
    /// Smallest n with exact misranking probability at most delta for the
    /// planted pair.
    pub exact_crossing: u64,
    pub curve: MisrankCurve,
    pub empirical_crossing: Option<u64>,
    pub crossing_ratio: Option<f64>,
    pub log_slope: Option<f64>,
    /// Fitted slope divided by -kappa/2.
    pub slope_ratio: Option<f64>,
}

impl WorkflowReport {
    pub fn render(&self) -> String {
        let mut out = format!(
            "artifacts {}  pairs {}  kappa {:.5}  n_req {}\n",
            self.n_artifacts, self.kappa.n_pairs, self.kappa.point, self.plan.n_required
        );
        out += &format!(
            "planted pair snr {:.5} (adjacent {:.5}), exact crossing n {}\n",
            self.planted_snr, self.adjacent_snr, self.exact_crossing
        );
        out += &format!("{:>6} {:>10} {:>10} {:>10}\n", "n", "rate", "se", "bound");
        for p in &self.curve.points {
            out += &format!("{:>6} {:>10.5} {:>10.5} {:>10.5}\n", p.n, p.misrank_rate, p.std_error, p.bound);
        }
        out += &format!(
            "empirical crossing {:?}  ratio to n_req {:?}  slope {:?}  slope / (-kappa/2) {:?}\n",
            self.empirical_crossing, self.crossing_ratio, self.log_slope, self.slope_ratio
        );
        out
    }
}

/// Neighborhood, pilot, discriminability estimate, plan, then misranking
/// validation on the planted pair.
pub fn prompt_edit_workflow(cfg: &WorkflowConfig) -> Result<WorkflowReport> {
    let mut rng = seeded(cfg.seed);
    let land = planted_landscape(cfg, &mut rng)?;
    let pilot = run_pilot(&land.spec, &land.artifacts, cfg.pilot_reps, rng.next_u64())?;
    let metric = crate::prompt_space::ClauseEditMetric {
        sequences: land.artifacts.iter().map(|a| a.id.clone()).zip(land.sequences.iter().cloned()).collect(),
    };
    let kappa = estimate_kappa(&pilot, &metric, cfg.resolution, cfg.quantile)?;
    let plan = plan_samples(kappa.point, cfg.delta)?;

    let hi = land.artifacts.iter().find(|a| a.id == land.planted_hi).expect("planted member");
    let lo = land.artifacts.iter().find(|a| a.id == land.planted_lo).expect("top member");
    let sep = Separation::Known { delta_mu: land.planted_gap, sigma: land.sigma };
    let curve = validate_misranking(&land.spec, hi, lo, &cfg.n_grid, cfg.episodes_per_n, sep, &mut rng)?;

    let two_var = 2.0 * land.sigma * land.sigma;
    let planted_snr = land.planted_gap.powi(2) / two_var;
    let z = normal_quantile(1.0 - cfg.delta);
    let empirical_crossing = curve.first_below(cfg.delta);
    let log_slope = curve.log_slope();
    Ok(WorkflowReport {
        n_artifacts: land.artifacts.len(),
        planted_hi: land.planted_hi,
        planted_lo: land.planted_lo,
        planted_snr,
        adjacent_snr: land.step.powi(2) / two_var,
        // P(misrank) = Phi(-sqrt(n snr)) <= delta  <=>  n >= z^2 / snr
        exact_crossing: (z * z / planted_snr).ceil() as u64,
        crossing_ratio: empirical_crossing.map(|n| n as f64 / plan.n_required as f64),
        slope_ratio: log_slope.map(|s| s / (-kappa.point / 2.0)),
        empirical_crossing,
        log_slope,
        kappa,
        plan,
        curve,
    })
}
