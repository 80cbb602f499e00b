//! Benchmarks as (panel, instrument, aggregator, panel size) tuples and the
//! single evaluation call they define.
//!
//! One call draws `panel_size` members i.i.d. from the panel distribution,
//! elicits one micro-response per member from the instrument, and compresses
//! the response vector with the aggregator. The law of the aggregate given the
//! artifact is the reduced-form kernel; [`estimate_kernel`] estimates its first
//! two moments and, for discrete outcome spaces, its support.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::guard;
use crate::judge::{self, JudgeBackend, JudgeEndpointBinding};
use crate::rng::SimRng;
use crate::stats::Moments;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "kebab-case")]
pub enum Payload {
    /// Free text such as a system prompt.
    StructuredText(String),
    /// An element of a finite artifact set.
    AbstractLabel(String),
}

/// Something submitted to a benchmark.
///
/// The provenance map records who or what produced the artifact. Nothing in
/// the evaluation path reads it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub id: String,
    pub payload: Payload,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub provenance: BTreeMap<String, String>,
}

impl Artifact {
    pub fn text(id: impl Into<String>, text: impl Into<String>) -> Self {
        Artifact {
            id: id.into(),
            payload: Payload::StructuredText(text.into()),
            provenance: BTreeMap::new(),
        }
    }

    /// A label artifact whose id is the label itself.
    pub fn label(label: impl Into<String>) -> Self {
        let label = label.into();
        Artifact {
            id: label.clone(),
            payload: Payload::AbstractLabel(label),
            provenance: BTreeMap::new(),
        }
    }

    pub fn with_provenance(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.provenance.insert(key.into(), value.into());
        self
    }

    /// The lookup key instruments use: the canonical normalized payload.
    pub fn key(&self) -> Result<String> {
        guard::normalized_payload(&self.payload)
    }
}

/// A panel member: an index into a finite support, or a latent parameter
/// vector for parametric panels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PanelMember {
    Index(usize),
    Latent(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PanelDistribution {
    Degenerate {
        member: usize,
    },
    FiniteCategorical {
        probs: Vec<f64>,
        /// Optional persona descriptors, one per support point.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        descriptors: Vec<String>,
    },
    /// Members are latent vectors with i.i.d. N(mean, sd^2) coordinates.
    ParametricSynthetic { dim: usize, mean: f64, sd: f64 },
}

impl PanelDistribution {
    pub fn validate(&self) -> Result<()> {
        match self {
            PanelDistribution::Degenerate { .. } => Ok(()),
            PanelDistribution::FiniteCategorical { probs, descriptors } => {
                if probs.is_empty() {
                    return Err(Error::Config("categorical panel has empty support".into()));
                }
                if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(Error::Config("panel probabilities must be nonnegative".into()));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Config(format!("panel probabilities sum to {total}, not 1")));
                }
                if !descriptors.is_empty() && descriptors.len() != probs.len() {
                    return Err(Error::Config("one descriptor per panel support point".into()));
                }
                Ok(())
            }
            PanelDistribution::ParametricSynthetic { dim, sd, .. } => {
                if *dim == 0 || !(*sd >= 0.0) {
                    return Err(Error::Config("parametric panel needs dim >= 1 and sd >= 0".into()));
                }
                Ok(())
            }
        }
    }

    pub fn sample(&self, rng: &mut SimRng) -> PanelMember {
        match self {
            PanelDistribution::Degenerate { member } => PanelMember::Index(*member),
            PanelDistribution::FiniteCategorical { probs, .. } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (i, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return PanelMember::Index(i);
                    }
                }
                // u landed in the rounding slack above the last cumulative sum
                let last = probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1);
                PanelMember::Index(last)
            }
            PanelDistribution::ParametricSynthetic { dim, mean, sd } => {
                let normal = Normal::new(*mean, *sd).expect("validated sd");
                PanelMember::Latent((0..*dim).map(|_| normal.sample(rng)).collect())
            }
        }
    }

    /// Persona descriptor sent to an external judge for this member.
    pub fn descriptor(&self, member: &PanelMember) -> String {
        match (self, member) {
            (PanelDistribution::FiniteCategorical { descriptors, .. }, PanelMember::Index(i))
                if !descriptors.is_empty() =>
            {
                descriptors[*i].clone()
            }
            (_, PanelMember::Index(i)) => format!("member-{i}"),
            (_, PanelMember::Latent(v)) => serde_json::to_string(v).expect("finite floats"),
        }
    }
}

/// Law of a single micro-response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum ResponseLaw {
    Bernoulli { p: f64 },
    Gaussian { mean: f64, sd: f64 },
    Point { value: f64 },
    Categorical { values: Vec<f64>, probs: Vec<f64> },
}

impl ResponseLaw {
    pub fn validate(&self) -> Result<()> {
        let bad = match self {
            ResponseLaw::Bernoulli { p } => !(0.0..=1.0).contains(p),
            ResponseLaw::Gaussian { mean, sd } => !mean.is_finite() || !(*sd >= 0.0),
            ResponseLaw::Point { value } => !value.is_finite(),
            ResponseLaw::Categorical { values, probs } => {
                values.is_empty()
                    || values.len() != probs.len()
                    || probs.iter().any(|p| *p < 0.0)
                    || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9
            }
        };
        if bad {
            Err(Error::Config(format!("invalid response law {self:?}")))
        } else {
            Ok(())
        }
    }

    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        match self {
            ResponseLaw::Bernoulli { p } => {
                if rng.gen::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            ResponseLaw::Gaussian { mean, sd } => {
                mean + sd * rng.sample::<f64, _>(rand_distr::StandardNormal)
            }
            ResponseLaw::Point { value } => *value,
            ResponseLaw::Categorical { values, probs } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                values[probs.iter().rposition(|p| *p > 0.0).unwrap_or(values.len() - 1)]
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            ResponseLaw::Bernoulli { p } => *p,
            ResponseLaw::Gaussian { mean, .. } => *mean,
            ResponseLaw::Point { value } => *value,
            ResponseLaw::Categorical { values, probs } => {
                values.iter().zip(probs).map(|(v, p)| v * p).sum()
            }
        }
    }

    fn is_discrete(&self) -> bool {
        !matches!(self, ResponseLaw::Gaussian { sd, .. } if *sd > 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub member: usize,
    pub artifact: String,
    pub law: ResponseLaw,
}

/// Conditional law of one evaluator's response given (artifact, member).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MicroInstrument {
    /// Vote 1 with probability `probs[key(w)]`, independent of the member.
    BernoulliByArtifact { probs: BTreeMap<String, f64> },
    /// N(means[key(w)] + member_loading * latent[0], sd^2); `sds` overrides the
    /// standard deviation per artifact.
    GaussianByArtifact {
        means: BTreeMap<String, f64>,
        sd: f64,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        sds: BTreeMap<String, f64>,
        #[serde(default)]
        member_loading: f64,
    },
    Constant { value: f64 },
    /// Explicit law per (member index, artifact key).
    TableLookup { entries: Vec<TableEntry> },
    /// Responses come from a remote judge; there is no local law.
    ExternalJudge { binding: JudgeEndpointBinding },
}

impl MicroInstrument {
    pub fn validate(&self) -> Result<()> {
        match self {
            MicroInstrument::BernoulliByArtifact { probs } => {
                if let Some((k, p)) = probs.iter().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
                    return Err(Error::Config(format!("bernoulli probability {p} for {k:?}")));
                }
                Ok(())
            }
            MicroInstrument::GaussianByArtifact { means, sd, sds, member_loading } => {
                if !(*sd >= 0.0) || sds.values().any(|s| !(*s >= 0.0)) {
                    return Err(Error::Config("gaussian sd must be nonnegative".into()));
                }
                if means.values().any(|m| !m.is_finite()) || !member_loading.is_finite() {
                    return Err(Error::Config("gaussian means must be finite".into()));
                }
                Ok(())
            }
            MicroInstrument::Constant { value } => {
                if value.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Config("constant instrument value must be finite".into()))
                }
            }
            MicroInstrument::TableLookup { entries } => {
                entries.iter().try_for_each(|e| e.law.validate())
            }
            MicroInstrument::ExternalJudge { .. } => Ok(()),
        }
    }

    /// The response law for (artifact key, member); `None` for external judges.
    pub fn law(&self, key: &str, member: &PanelMember) -> Result<Option<ResponseLaw>> {
        let missing = || Error::Config(format!("instrument has no law for artifact {key:?}"));
        let law = match self {
            MicroInstrument::BernoulliByArtifact { probs } => ResponseLaw::Bernoulli {
                p: *probs.get(key).ok_or_else(missing)?,
            },
            MicroInstrument::GaussianByArtifact { means, sd, sds, member_loading } => {
                let shift = match member {
                    PanelMember::Latent(v) => member_loading * v.first().copied().unwrap_or(0.0),
                    PanelMember::Index(_) => 0.0,
                };
                ResponseLaw::Gaussian {
                    mean: means.get(key).ok_or_else(missing)? + shift,
                    sd: sds.get(key).copied().unwrap_or(*sd),
                }
            }
            MicroInstrument::Constant { value } => ResponseLaw::Point { value: *value },
            MicroInstrument::TableLookup { entries } => {
                let PanelMember::Index(m) = member else {
                    return Err(Error::Config("table-lookup instrument needs indexed panel members".into()));
                };
                entries
                    .iter()
                    .find(|e| e.member == *m && e.artifact == key)
                    .map(|e| e.law.clone())
                    .ok_or_else(|| {
                        Error::Config(format!("instrument table has no entry for member {m}, artifact {key:?}"))
                    })?
            }
            MicroInstrument::ExternalJudge { .. } => return Ok(None),
        };
        Ok(Some(law))
    }

    fn emits_discrete(&self) -> bool {
        match self {
            MicroInstrument::BernoulliByArtifact { .. } | MicroInstrument::Constant { .. } => true,
            MicroInstrument::GaussianByArtifact { .. } | MicroInstrument::ExternalJudge { .. } => false,
            MicroInstrument::TableLookup { entries } => entries.iter().all(|e| e.law.is_discrete()),
        }
    }
}

/// Deterministic map from the micro-response vector to the observable score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Aggregator {
    Mean,
    /// 1 when strictly more than half the votes are 1; ties resolve to 0.
    Majority,
    /// Disagreement indicator of a two-member binary panel.
    XorPair,
    Identity,
    /// 1 when the mean response reaches `threshold`, else 0.
    PassFailThreshold { threshold: f64 },
}

impl Aggregator {
    pub fn check_arity(&self, panel_size: usize) -> Result<()> {
        match self {
            Aggregator::XorPair if panel_size != 2 => {
                Err(Error::Config(format!("xor-pair needs panel size 2, got {panel_size}")))
            }
            Aggregator::Identity if panel_size != 1 => {
                Err(Error::Config(format!("identity needs panel size 1, got {panel_size}")))
            }
            _ => Ok(()),
        }
    }

    pub fn apply(&self, z: &[f64]) -> Result<f64> {
        if z.is_empty() {
            return Err(Error::Argument("empty micro-response vector".into()));
        }
        let binary = |z: &[f64]| -> Result<()> {
            if z.iter().all(|v| *v == 0.0 || *v == 1.0) {
                Ok(())
            } else {
                Err(Error::Config(format!("{self:?} needs binary micro-responses, got {z:?}")))
            }
        };
        match self {
            Aggregator::Mean => Ok(z.iter().sum::<f64>() / z.len() as f64),
            Aggregator::Majority => {
                binary(z)?;
                let ones = z.iter().filter(|v| **v == 1.0).count();
                Ok(if 2 * ones > z.len() { 1.0 } else { 0.0 })
            }
            Aggregator::XorPair => {
                self.check_arity(z.len())?;
                binary(z)?;
                Ok(if z[0] != z[1] { 1.0 } else { 0.0 })
            }
            Aggregator::Identity => {
                self.check_arity(z.len())?;
                Ok(z[0])
            }
            Aggregator::PassFailThreshold { threshold } => {
                let mean = z.iter().sum::<f64>() / z.len() as f64;
                Ok(if mean >= *threshold { 1.0 } else { 0.0 })
            }
        }
    }

    fn emits_discrete(&self) -> bool {
        matches!(
            self,
            Aggregator::Majority | Aggregator::XorPair | Aggregator::PassFailThreshold { .. }
        )
    }
}

/// The benchmark tuple plus a version tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub panel: PanelDistribution,
    pub instrument: MicroInstrument,
    pub aggregator: Aggregator,
    pub panel_size: usize,
    pub version: String,
}

impl BenchmarkSpec {
    /// Builds a spec whose version is a fingerprint of its contents, so any
    /// field change yields a new version.
    pub fn new(
        panel: PanelDistribution,
        instrument: MicroInstrument,
        aggregator: Aggregator,
        panel_size: usize,
    ) -> Result<Self> {
        let mut spec = BenchmarkSpec {
            panel,
            instrument,
            aggregator,
            panel_size,
            version: String::new(),
        };
        spec.validate()?;
        spec.version = spec.content_version();
        Ok(spec)
    }

    pub fn with_version(mut self, version: impl Into<String>) -> Self {
        self.version = version.into();
        self
    }

    pub fn content_version(&self) -> String {
        let body = serde_json::json!({
            "panel": self.panel,
            "instrument": self.instrument,
            "aggregator": self.aggregator,
            "panel_size": self.panel_size,
        });
        let bytes = serde_json::to_vec(&body).expect("spec serializes");
        format!("auto-{:016x}", guard::fnv1a64(&bytes))
    }

    pub fn validate(&self) -> Result<()> {
        if self.panel_size == 0 {
            return Err(Error::Config("panel size must be positive".into()));
        }
        self.panel.validate()?;
        self.instrument.validate()?;
        self.aggregator.check_arity(self.panel_size)?;
        if let (MicroInstrument::TableLookup { .. }, PanelDistribution::ParametricSynthetic { .. }) =
            (&self.instrument, &self.panel)
        {
            return Err(Error::Config("table-lookup instrument needs an indexed panel".into()));
        }
        Ok(())
    }

    /// Whether the aggregate takes finitely many values, so that support
    /// counts are meaningful.
    pub fn outcome_is_discrete(&self) -> bool {
        self.aggregator.emits_discrete() || self.instrument.emits_discrete()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: BenchmarkSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }
}

/// Everything one evaluation call produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEvaluation {
    pub panel_draws: Vec<PanelMember>,
    pub micro_responses: Vec<f64>,
    pub aggregate: f64,
}

pub fn evaluate_once(spec: &BenchmarkSpec, artifact: &Artifact, rng: &mut SimRng) -> Result<RawEvaluation> {
    evaluate_with_judge(spec, artifact, rng, None)
}

/// [`evaluate_once`] with an optional judge backend for `external-judge`
/// instruments. Without a backend those instruments fail with
/// [`Error::UnavailableBackend`].
pub fn evaluate_with_judge(
    spec: &BenchmarkSpec,
    artifact: &Artifact,
    rng: &mut SimRng,
    judge: Option<&dyn JudgeBackend>,
) -> Result<RawEvaluation> {
    let key = artifact.key()?;
    let canonical = match (&spec.instrument, judge) {
        (MicroInstrument::ExternalJudge { .. }, None) => {
            return Err(Error::UnavailableBackend(
                "external-judge instrument has no bound client".into(),
            ))
        }
        (MicroInstrument::ExternalJudge { .. }, Some(_)) => Some(guard::canonicalize(artifact)?),
        _ => None,
    };

    let mut panel_draws = Vec::with_capacity(spec.panel_size);
    let mut micro_responses = Vec::with_capacity(spec.panel_size);
    for _ in 0..spec.panel_size {
        let member = spec.panel.sample(rng);
        let z = match spec.instrument.law(&key, &member)? {
            Some(law) => law.sample(rng),
            None => {
                let backend = judge.expect("checked above");
                let persona = spec.panel.descriptor(&member);
                let seed = rng.gen::<u64>();
                judge::judge_call(backend, canonical.as_ref().expect("built above"), &persona, Some(seed))?
            }
        };
        panel_draws.push(member);
        micro_responses.push(z);
    }
    let aggregate = spec.aggregator.apply(&micro_responses)?;
    Ok(RawEvaluation { panel_draws, micro_responses, aggregate })
}

/// Aggregate score of one call for an artifact whose key is already known.
/// Consumes randomness exactly as [`evaluate_once`] does, without keeping the
/// micro-level record. Judge-backed instruments are unavailable here.
pub fn sample_aggregate(spec: &BenchmarkSpec, key: &str, buf: &mut Vec<f64>, rng: &mut SimRng) -> Result<f64> {
    buf.clear();
    for _ in 0..spec.panel_size {
        let member = spec.panel.sample(rng);
        match spec.instrument.law(key, &member)? {
            Some(law) => buf.push(law.sample(rng)),
            None => {
                return Err(Error::UnavailableBackend("external-judge instrument has no bound client".into()))
            }
        }
    }
    spec.aggregator.apply(buf)
}

/// Per-artifact estimate of the reduced-form kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalKernel {
    pub artifact_id: String,
    pub n_reps: u64,
    pub mean: f64,
    /// Unbiased (divisor n - 1).
    pub variance: f64,
    /// Outcome -> count, populated only for discrete outcome spaces.
    #[serde(default)]
    pub support_counts: BTreeMap<String, u64>,
}

impl EmpiricalKernel {
    pub fn from_scores(artifact_id: impl Into<String>, scores: &[f64], discrete: bool) -> Result<Self> {
        if scores.len() < 2 {
            return Err(Error::Argument("a kernel estimate needs at least 2 scores".into()));
        }
        let moments: Moments = scores.iter().copied().collect();
        let mut support_counts = BTreeMap::new();
        if discrete {
            for s in scores {
                *support_counts.entry(outcome_label(*s)).or_insert(0) += 1;
            }
        }
        Ok(EmpiricalKernel {
            artifact_id: artifact_id.into(),
            n_reps: moments.n,
            mean: moments.mean,
            variance: moments.variance(),
            support_counts,
        })
    }

    /// Empirical probability of a discrete outcome.
    pub fn frequency(&self, outcome: f64) -> f64 {
        self.support_counts.get(&outcome_label(outcome)).copied().unwrap_or(0) as f64 / self.n_reps as f64
    }

    pub fn std_error(&self) -> f64 {
        (self.variance / self.n_reps as f64).sqrt()
    }
}

/// Map key used for a discrete outcome value.
pub fn outcome_label(v: f64) -> String {
    format!("{v}")
}

/// Estimates Q(.|w) from `n_reps` independent calls, each with fresh draws
/// from `rng`.
pub fn estimate_kernel(
    spec: &BenchmarkSpec,
    artifact: &Artifact,
    n_reps: u64,
    rng: &mut SimRng,
) -> Result<EmpiricalKernel> {
    if n_reps < 2 {
        return Err(Error::Argument(format!("n_reps must be at least 2, got {n_reps}")));
    }
    let key = artifact.key()?;
    let mut buf = Vec::with_capacity(spec.panel_size);
    let scores = (0..n_reps)
        .map(|_| sample_aggregate(spec, &key, &mut buf, rng))
        .collect::<Result<Vec<_>>>()?;
    EmpiricalKernel::from_scores(artifact.id.clone(), &scores, spec.outcome_is_discrete())
}

/// Two-member XOR benchmark over labels "0" and "1" with vote probabilities
/// `p`; `flipped` replaces each probability by its complement. Both variants
/// induce the same aggregate kernel 2 p_w (1 - p_w).
pub fn xor_pair_benchmark(p: [f64; 2], flipped: bool) -> Result<BenchmarkSpec> {
    let probs = p
        .iter()
        .enumerate()
        .map(|(w, pw)| (w.to_string(), if flipped { 1.0 - pw } else { *pw }))
        .collect();
    BenchmarkSpec::new(
        PanelDistribution::Degenerate { member: 0 },
        MicroInstrument::BernoulliByArtifact { probs },
        Aggregator::XorPair,
        2,
    )
}

/// Single-call Gaussian benchmark: one panelist, identity aggregation,
/// Q(.|w) = N(means[w], sd^2). Keys are artifact keys (labels or normalized text).
pub fn gaussian_benchmark<K: Into<String>>(
    means: impl IntoIterator<Item = (K, f64)>,
    sd: f64,
) -> Result<BenchmarkSpec> {
    BenchmarkSpec::new(
        PanelDistribution::Degenerate { member: 0 },
        MicroInstrument::GaussianByArtifact {
            means: means.into_iter().map(|(k, m)| (k.into(), m)).collect(),
            sd,
            sds: BTreeMap::new(),
            member_loading: 0.0,
        },
        Aggregator::Identity,
        1,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;

    fn xor_b() -> BenchmarkSpec {
        xor_pair_benchmark([0.1, 0.4], false).unwrap()
    }

    fn xor_b_prime() -> BenchmarkSpec {
        xor_pair_benchmark([0.1, 0.4], true).unwrap()
    }

    #[test]
    fn xor_single_calls_hit_018() {
        let spec = xor_b();
        let mut rng = seeded(1);
        let w = Artifact::label("0");
        let n = 100_000;
        let ones = (0..n)
            .filter(|_| evaluate_once(&spec, &w, &mut rng).unwrap().aggregate == 1.0)
            .count();
        assert!((ones as f64 / n as f64 - 0.18).abs() < 0.005);
    }

    #[test]
    fn constant_instrument_mean_aggregator() {
        for l in [1, 3, 8] {
            let spec = BenchmarkSpec::new(
                PanelDistribution::Degenerate { member: 0 },
                MicroInstrument::Constant { value: 0.7 },
                Aggregator::Mean,
                l,
            )
            .unwrap();
            let k = estimate_kernel(&spec, &Artifact::label("anything"), 50, &mut seeded(2)).unwrap();
            assert!((k.mean - 0.7).abs() < 1e-12);
            assert!(k.variance < 1e-24);
        }
    }

    #[test]
    fn identity_returns_the_single_response() {
        let spec = gaussian_benchmark([("a", 0.0)], 1.0).unwrap();
        let raw = evaluate_once(&spec, &Artifact::label("a"), &mut seeded(3)).unwrap();
        assert_eq!(raw.micro_responses.len(), 1);
        assert_eq!(raw.aggregate, raw.micro_responses[0]);
    }

    #[test]
    fn xor_kernels_match_closed_form() {
        let mut rng = seeded(4);
        for (spec, w, expect) in [
            (xor_b(), "0", 0.18),
            (xor_b(), "1", 0.48),
            (xor_b_prime(), "0", 0.18),
            (xor_b_prime(), "1", 0.48),
        ] {
            let k = estimate_kernel(&spec, &Artifact::label(w), 100_000, &mut rng).unwrap();
            assert!((k.mean - expect).abs() < 0.005, "{w}: {}", k.mean);
            assert_eq!(k.support_counts.values().sum::<u64>(), k.n_reps);
        }
    }

    #[test]
    fn xor_b_and_b_prime_agree_within_mc_error() {
        let mut rng = seeded(5);
        for w in ["0", "1"] {
            let a = estimate_kernel(&xor_b(), &Artifact::label(w), 50_000, &mut rng).unwrap();
            let b = estimate_kernel(&xor_b_prime(), &Artifact::label(w), 50_000, &mut rng).unwrap();
            let pooled = (a.std_error().powi(2) + b.std_error().powi(2)).sqrt();
            assert!((a.mean - b.mean).abs() <= 4.0 * pooled);
        }
    }

    #[test]
    fn gaussian_moments_converge() {
        let spec = gaussian_benchmark([("w", 0.5)], 0.1).unwrap();
        let k = estimate_kernel(&spec, &Artifact::label("w"), 200_000, &mut seeded(6)).unwrap();
        assert!((k.mean - 0.5).abs() < 4.0 * 0.1 / (200_000f64).sqrt());
        // var of the sample variance is 2 sigma^4 / (n - 1)
        let se_var = (2.0 * 0.1f64.powi(4) / 199_999.0).sqrt();
        assert!((k.variance - 0.01).abs() < 4.0 * se_var);
        assert!(k.support_counts.is_empty());
    }

    #[test]
    fn variance_estimator_is_unbiased() {
        // mean aggregator over L = 4 panelists: aggregate variance sigma^2 / 4
        let spec = BenchmarkSpec::new(
            PanelDistribution::Degenerate { member: 0 },
            MicroInstrument::GaussianByArtifact {
                means: [("w".to_string(), 1.0)].into(),
                sd: 2.0,
                sds: BTreeMap::new(),
                member_loading: 0.0,
            },
            Aggregator::Mean,
            4,
        )
        .unwrap();
        let target = 4.0 / 4.0;
        let n = 5u64;
        let mut rng = seeded(7);
        let est: Moments = (0..20_000)
            .map(|_| estimate_kernel(&spec, &Artifact::label("w"), n, &mut rng).unwrap().variance)
            .collect();
        assert!((est.mean - target).abs() <= 2.0 * est.std_error(), "{} vs {target}", est.mean);
    }

    #[test]
    fn estimate_kernel_rejects_single_rep() {
        let err = estimate_kernel(&xor_b(), &Artifact::label("0"), 1, &mut seeded(0)).unwrap_err();
        assert_eq!(err.category(), "argument");
    }

    #[test]
    fn unknown_artifact_is_a_config_error() {
        let err = evaluate_once(&xor_b(), &Artifact::label("7"), &mut seeded(0)).unwrap_err();
        assert_eq!(err.category(), "config");
    }

    #[test]
    fn external_judge_without_client() {
        let spec = BenchmarkSpec::new(
            PanelDistribution::Degenerate { member: 0 },
            MicroInstrument::ExternalJudge { binding: JudgeEndpointBinding::new("http://127.0.0.1:9") },
            Aggregator::Mean,
            3,
        )
        .unwrap();
        let err = evaluate_once(&spec, &Artifact::text("a", "be nice"), &mut seeded(0)).unwrap_err();
        assert_eq!(err.category(), "unavailable-backend");
    }

    #[test]
    fn arity_checks() {
        let bad = BenchmarkSpec::new(
            PanelDistribution::Degenerate { member: 0 },
            MicroInstrument::Constant { value: 1.0 },
            Aggregator::XorPair,
            3,
        );
        assert!(bad.is_err());
        let bad = BenchmarkSpec::new(
            PanelDistribution::Degenerate { member: 0 },
            MicroInstrument::Constant { value: 1.0 },
            Aggregator::Identity,
            2,
        );
        assert!(bad.is_err());
        let cat = PanelDistribution::FiniteCategorical { probs: vec![0.5, 0.6], descriptors: vec![] };
        assert!(cat.validate().is_err());
    }

    #[test]
    fn majority_tie_is_zero() {
        assert_eq!(Aggregator::Majority.apply(&[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(Aggregator::Majority.apply(&[1.0, 1.0, 0.0]).unwrap(), 1.0);
        assert!(Aggregator::Majority.apply(&[0.3]).is_err());
    }

    #[test]
    fn version_tracks_content() {
        let a = xor_b();
        let b = xor_b_prime();
        assert_ne!(a.version, b.version);
        assert_eq!(a.version, xor_b().version);
        let json = a.to_json();
        assert_eq!(BenchmarkSpec::from_json(&json).unwrap(), a);
    }

    fn any_aggregator() -> impl Strategy<Value = (Aggregator, usize, bool)> {
        prop_oneof![
            (1usize..8).prop_map(|l| (Aggregator::Mean, l, false)),
            (1usize..8).prop_map(|l| (Aggregator::Majority, l, true)),
            Just((Aggregator::XorPair, 2, true)),
            Just((Aggregator::Identity, 1, false)),
            (1usize..8, 0.0f64..1.0).prop_map(|(l, t)| (Aggregator::PassFailThreshold { threshold: t }, l, true)),
        ]
    }

    proptest! {
        #[test]
        fn aggregate_is_recomputable((agg, l, binary) in any_aggregator(), seed in any::<u64>(), p in 0.0f64..1.0) {
            let instrument = if binary {
                MicroInstrument::BernoulliByArtifact { probs: [("w".to_string(), p)].into() }
            } else {
                MicroInstrument::GaussianByArtifact {
                    means: [("w".to_string(), p)].into(),
                    sd: 1.0,
                    sds: BTreeMap::new(),
                    member_loading: 0.5,
                }
            };
            let panel = PanelDistribution::ParametricSynthetic { dim: 2, mean: 0.0, sd: 1.0 };
            let spec = BenchmarkSpec::new(panel, instrument, agg, l).unwrap();
            let raw = evaluate_once(&spec, &Artifact::label("w"), &mut seeded(seed)).unwrap();
            prop_assert_eq!(raw.panel_draws.len(), l);
            prop_assert_eq!(spec.aggregator.apply(&raw.micro_responses).unwrap(), raw.aggregate);
        }
    }
}
