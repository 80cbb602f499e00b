//! Placebo-provenance and drift audits of an evaluator.
//!
//! A placebo test scores the same artifact under two labels; any detectable
//! shift means the score depends on something other than the artifact. A
//! drift test scores it in successive batches and compares the batch means.

use serde::{Deserialize, Serialize};

use crate::channel::{Artifact, BenchmarkSpec};
use crate::error::{Error, Result};
use crate::guard::{guarded_evaluate, EvaluationMode, ObservationPolicy};
use crate::rng::{fork, SimRng};
use crate::stats::{t_critical, welch_df, Moments};

/// What an evaluator is told besides the artifact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuditContext<'a> {
    /// Provenance label shown alongside the artifact, if any.
    pub label: Option<&'a str>,
    /// Batch index; larger means later.
    pub slice: usize,
}

/// An evaluation function that may (wrongly) depend on labels or time.
pub trait LabelAwareEvaluator: Sync {
    fn evaluate(&self, artifact: &Artifact, ctx: AuditContext<'_>, rng: &mut SimRng) -> Result<f64>;
}

/// Fresh-mode, aggregate-only evaluation through the guard; blind to labels
/// and time.
#[derive(Debug, Clone)]
pub struct GuardedEvaluator {
    pub spec: BenchmarkSpec,
}

impl LabelAwareEvaluator for GuardedEvaluator {
    fn evaluate(&self, artifact: &Artifact, _ctx: AuditContext<'_>, rng: &mut SimRng) -> Result<f64> {
        Ok(guarded_evaluate(&self.spec, artifact, &EvaluationMode::fresh(), ObservationPolicy::AggregateOnly, rng)?
            .aggregate)
    }
}

/// Adds `shift` to the inner score whenever the label equals `biased_label`.
#[derive(Debug, Clone)]
pub struct LabelBiasedEvaluator<E> {
    pub inner: E,
    pub biased_label: String,
    pub shift: f64,
}

impl<E: LabelAwareEvaluator> LabelAwareEvaluator for LabelBiasedEvaluator<E> {
    fn evaluate(&self, artifact: &Artifact, ctx: AuditContext<'_>, rng: &mut SimRng) -> Result<f64> {
        let base = self.inner.evaluate(artifact, ctx, rng)?;
        Ok(if ctx.label == Some(self.biased_label.as_str()) { base + self.shift } else { base })
    }
}

/// Adds `shift` to the inner score from slice `from_slice` on.
#[derive(Debug, Clone)]
pub struct SteppedDriftEvaluator<E> {
    pub inner: E,
    pub from_slice: usize,
    pub shift: f64,
}

impl<E: LabelAwareEvaluator> LabelAwareEvaluator for SteppedDriftEvaluator<E> {
    fn evaluate(&self, artifact: &Artifact, ctx: AuditContext<'_>, rng: &mut SimRng) -> Result<f64> {
        let base = self.inner.evaluate(artifact, ctx, rng)?;
        Ok(if ctx.slice >= self.from_slice { base + self.shift } else { base })
    }
}

/// Restricts the labels an evaluator accepts.
#[derive(Debug, Clone)]
pub struct LabelAllowList<E> {
    pub inner: E,
    pub allowed: Vec<String>,
}

impl<E: LabelAwareEvaluator> LabelAwareEvaluator for LabelAllowList<E> {
    fn evaluate(&self, artifact: &Artifact, ctx: AuditContext<'_>, rng: &mut SimRng) -> Result<f64> {
        if let Some(label) = ctx.label {
            if !self.allowed.iter().any(|a| a == label) {
                return Err(Error::Config(format!("evaluator does not accept label {label:?}")));
            }
        }
        self.inner.evaluate(artifact, ctx, rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlaceboVerdict {
    NoDetectableViolation,
    AbViolationDetected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaceboReport {
    pub artifact_id: String,
    pub label_a: String,
    pub label_b: String,
    pub mean_a: f64,
    pub mean_b: f64,
    /// mean_b - mean_a
    pub shift: f64,
    pub ci_halfwidth: f64,
    /// Shift over the pooled standard deviation.
    pub effect_size: f64,
    pub confidence: f64,
    pub n_per_arm: usize,
    pub verdict: PlaceboVerdict,
}

fn check_confidence(confidence: f64) -> Result<()> {
    if confidence > 0.0 && confidence < 1.0 {
        Ok(())
    } else {
        Err(Error::Argument(format!("confidence must lie in (0, 1), got {confidence}")))
    }
}

fn score_batch(
    evaluator: &dyn LabelAwareEvaluator,
    artifact: &Artifact,
    ctx: AuditContext<'_>,
    n: usize,
    rng: &mut SimRng,
) -> Result<Moments> {
    let mut m = Moments::default();
    for _ in 0..n {
        m.push(evaluator.evaluate(artifact, ctx, rng)?);
    }
    Ok(m)
}

/// Welch confidence half-width for the difference of two means.
fn welch_halfwidth(a: &Moments, b: &Moments, confidence: f64) -> f64 {
    let se = (a.variance() / a.n as f64 + b.variance() / b.n as f64).sqrt();
    if se == 0.0 {
        return 0.0;
    }
    t_critical(confidence, welch_df(a, b)) * se
}

/// Scores `artifact` `n_per_arm` times under each label with fresh
/// randomness and reports the shift with a Welch confidence interval.
pub fn placebo_test(
    evaluator: &dyn LabelAwareEvaluator,
    artifact: &Artifact,
    labels: (&str, &str),
    n_per_arm: usize,
    confidence: f64,
    rng: &mut SimRng,
) -> Result<PlaceboReport> {
    if n_per_arm < 30 {
        return Err(Error::Argument(format!("placebo test needs n_per_arm >= 30, got {n_per_arm}")));
    }
    check_confidence(confidence)?;
    let mut rng_a = fork(rng);
    let mut rng_b = fork(rng);
    let a = score_batch(evaluator, artifact, AuditContext { label: Some(labels.0), slice: 0 }, n_per_arm, &mut rng_a)?;
    let b = score_batch(evaluator, artifact, AuditContext { label: Some(labels.1), slice: 0 }, n_per_arm, &mut rng_b)?;
    let shift = b.mean - a.mean;
    let ci_halfwidth = welch_halfwidth(&a, &b, confidence);
    let pooled_sd = ((a.variance() + b.variance()) / 2.0).sqrt();
    Ok(PlaceboReport {
        artifact_id: artifact.id.clone(),
        label_a: labels.0.to_string(),
        label_b: labels.1.to_string(),
        mean_a: a.mean,
        mean_b: b.mean,
        shift,
        ci_halfwidth,
        effect_size: if pooled_sd > 0.0 { shift / pooled_sd } else { 0.0 },
        confidence,
        n_per_arm,
        verdict: if shift.abs() > ci_halfwidth {
            PlaceboVerdict::AbViolationDetected
        } else {
            PlaceboVerdict::NoDetectableViolation
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftVerdict {
    NoDrift,
    DriftDetected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceMean {
    pub slice: usize,
    pub mean: f64,
    pub variance: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub artifact_id: String,
    pub slice_means: Vec<SliceMean>,
    pub max_pairwise_gap: f64,
    /// Pair (i, j) with the largest standardized gap.
    pub worst_pair: (usize, usize),
    pub confidence: f64,
    pub verdict: DriftVerdict,
}

/// Scores `artifact` in `n_slices` successive batches and compares every pair
/// of batch means with Welch intervals at Bonferroni-adjusted confidence.
pub fn drift_test(
    evaluator: &dyn LabelAwareEvaluator,
    artifact: &Artifact,
    n_slices: usize,
    n_per_slice: usize,
    confidence: f64,
    rng: &mut SimRng,
) -> Result<DriftReport> {
    if n_slices < 2 {
        return Err(Error::Argument(format!("drift test needs at least 2 slices, got {n_slices}")));
    }
    if n_per_slice < 30 {
        return Err(Error::Argument(format!("drift test needs n_per_slice >= 30, got {n_per_slice}")));
    }
    check_confidence(confidence)?;
    let slices = (0..n_slices)
        .map(|s| {
            let mut r = fork(rng);
            score_batch(evaluator, artifact, AuditContext { label: None, slice: s }, n_per_slice, &mut r)
        })
        .collect::<Result<Vec<_>>>()?;
    let pairs = n_slices * (n_slices - 1) / 2;
    let adjusted = 1.0 - (1.0 - confidence) / pairs as f64;
    let mut detected = false;
    let mut max_gap = 0.0f64;
    let mut worst = (0, 1);
    let mut worst_ratio = -1.0f64;
    for i in 0..n_slices {
        for j in i + 1..n_slices {
            let gap = (slices[j].mean - slices[i].mean).abs();
            let hw = welch_halfwidth(&slices[i], &slices[j], adjusted);
            max_gap = max_gap.max(gap);
            let ratio = if hw > 0.0 { gap / hw } else if gap > 0.0 { f64::INFINITY } else { 0.0 };
            if ratio > worst_ratio {
                worst_ratio = ratio;
                worst = (i, j);
            }
            detected |= gap > hw;
        }
    }
    Ok(DriftReport {
        artifact_id: artifact.id.clone(),
        slice_means: slices
            .iter()
            .enumerate()
            .map(|(slice, m)| SliceMean { slice, mean: m.mean, variance: m.variance(), count: m.n as usize })
            .collect(),
        max_pairwise_gap: max_gap,
        worst_pair: worst,
        confidence,
        verdict: if detected { DriftVerdict::DriftDetected } else { DriftVerdict::NoDrift },
    })
}
