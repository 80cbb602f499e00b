//! Discriminability and sample-size planning.
//!
//! For Gaussian reduced-form kernels the per-call KL divergence between two
//! artifacts is a closed form in their means and variances, and in the
//! homoscedastic case it equals the pairwise signal-to-noise ratio
//! `(mu_a - mu_b)^2 / (var_a + var_b)`. Discriminability is the smallest such
//! separation over artifact pairs at least `r` apart; from a pilot it is
//! estimated as a low quantile of plug-in SNRs. The planner converts it to a
//! number of calls per artifact through `ceil((2 / kappa) ln(1 / delta))`.
//!
//! All logarithms are natural; divergences are in nats.

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{compare_means, Choice};
use crate::channel::{estimate_kernel, Artifact, BenchmarkSpec, EmpiricalKernel};
use crate::error::{Error, Result};
use crate::rng::{stream, SimRng};
use crate::stats::{binomial_se, lower_quantile};

/// Mean and variance of a Gaussian score law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianKernelParams {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianKernelParams {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() || !mean.is_finite() {
            return Err(Error::Domain(format!("need finite mean and positive variance, got ({mean}, {variance})")));
        }
        Ok(GaussianKernelParams { mean, variance })
    }
}

/// KL(N(p.mean, p.variance) || N(q.mean, q.variance)) in nats.
pub fn kl_gaussian(p: GaussianKernelParams, q: GaussianKernelParams) -> Result<f64> {
    let p = GaussianKernelParams::new(p.mean, p.variance)?;
    let q = GaussianKernelParams::new(q.mean, q.variance)?;
    let mean_term = (p.mean - q.mean).powi(2) / (2.0 * q.variance);
    if p.variance == q.variance {
        return Ok(mean_term);
    }
    let ratio = p.variance / q.variance;
    Ok(0.5 * (ratio - 1.0 - ratio.ln()) + mean_term)
}

/// KL of the n-fold product measure: `n * kl_single`.
pub fn kl_product(kl_single: f64, n: u64) -> Result<f64> {
    if !(kl_single >= 0.0) {
        return Err(Error::Domain(format!("KL must be nonnegative, got {kl_single}")));
    }
    Ok(n as f64 * kl_single)
}

/// Pairwise SNR. A zero pooled variance gives 0 when the means agree and
/// `+inf` (a saturated pair) otherwise.
pub fn snr(mu_a: f64, var_a: f64, mu_b: f64, var_b: f64) -> Result<f64> {
    if !(var_a >= 0.0 && var_b >= 0.0) {
        return Err(Error::Domain(format!("variances must be nonnegative, got {var_a}, {var_b}")));
    }
    let gap2 = (mu_a - mu_b).powi(2);
    let pooled = var_a + var_b;
    if pooled == 0.0 {
        return Ok(if gap2 == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(gap2 / pooled)
}

/// Distance between two artifacts identified by id.
pub trait ArtifactMetric {
    fn distance(&self, a: &str, b: &str) -> Result<f64>;
    fn tag(&self) -> String;
}

/// Every pair of distinct ids is at distance 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct DiscreteMetric;

impl ArtifactMetric for DiscreteMetric {
    fn distance(&self, a: &str, b: &str) -> Result<f64> {
        Ok(if a == b { 0.0 } else { 1.0 })
    }
    fn tag(&self) -> String {
        "discrete".into()
    }
}

/// Wraps a closure as a metric.
pub struct FnMetric<F> {
    pub tag: String,
    pub f: F,
}

impl<F: Fn(&str, &str) -> f64> ArtifactMetric for FnMetric<F> {
    fn distance(&self, a: &str, b: &str) -> Result<f64> {
        Ok((self.f)(a, b))
    }
    fn tag(&self) -> String {
        self.tag.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrEntry {
    pub artifact_i: String,
    pub artifact_j: String,
    pub distance: f64,
    pub delta: f64,
    pub pooled_variance: f64,
    #[serde(with = "crate::io::extended_f64")]
    pub snr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseSnrTable {
    pub entries: Vec<SnrEntry>,
    pub resolution: f64,
    pub metric: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaEstimate {
    pub point: f64,
    pub lcb: f64,
    pub quantile_q: f64,
    /// Pairs with a finite SNR that entered the quantile.
    pub n_pairs: usize,
    pub saturated_pairs: usize,
    /// Largest over smallest pilot variance; far from 1 means the
    /// homoscedastic reading of the SNR is stretched.
    #[serde(with = "crate::io::extended_f64")]
    pub variance_ratio: f64,
    pub table: PairwiseSnrTable,
}

impl KappaEstimate {
    /// The entry whose SNR is closest to the point estimate.
    pub fn hardest_pair(&self) -> Option<&SnrEntry> {
        self.table
            .entries
            .iter()
            .filter(|e| e.snr.is_finite())
            .min_by(|a, b| (a.snr - self.point).abs().total_cmp(&(b.snr - self.point).abs()))
    }
}

/// Number of pairs below which the quantile is replaced by the minimum.
pub const MIN_PAIRS_FOR_QUANTILE: usize = 20;

/// Plug-in estimate of discriminability from per-artifact pilot kernels.
///
/// Pairs at distance `>= r` contribute their SNR. With at least
/// [`MIN_PAIRS_FOR_QUANTILE`] finite SNRs the point is their lower `q`
/// quantile (rank `ceil(q * n)`), otherwise their minimum. Saturated pairs are
/// excluded and counted.
pub fn estimate_kappa(
    pilot: &[EmpiricalKernel],
    metric: &dyn ArtifactMetric,
    r: f64,
    q: f64,
) -> Result<KappaEstimate> {
    if pilot.len() < 2 {
        return Err(Error::Argument("need pilot kernels for at least 2 artifacts".into()));
    }
    if let Some(k) = pilot.iter().find(|k| k.n_reps < 2) {
        return Err(Error::Argument(format!("artifact {:?} has fewer than 2 pilot reps", k.artifact_id)));
    }
    if !(r > 0.0) {
        return Err(Error::Argument(format!("resolution must be positive, got {r}")));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Argument(format!("quantile must lie in [0, 1], got {q}")));
    }

    let mut entries = Vec::new();
    for (i, a) in pilot.iter().enumerate() {
        for b in &pilot[i + 1..] {
            let distance = metric.distance(&a.artifact_id, &b.artifact_id)?;
            if distance < r {
                continue;
            }
            entries.push(SnrEntry {
                artifact_i: a.artifact_id.clone(),
                artifact_j: b.artifact_id.clone(),
                distance,
                delta: a.mean - b.mean,
                pooled_variance: a.variance + b.variance,
                snr: snr(a.mean, a.variance, b.mean, b.variance)?,
            });
        }
    }
    if entries.is_empty() {
        return Err(Error::EmptyNeighborhood { resolution: r });
    }
    let mut finite: Vec<f64> = entries.iter().map(|e| e.snr).filter(|s| s.is_finite()).collect();
    let saturated_pairs = entries.len() - finite.len();
    if finite.is_empty() {
        return Err(Error::Domain("every pair has zero pooled variance and distinct means".into()));
    }
    finite.sort_by(f64::total_cmp);
    let point = if finite.len() >= MIN_PAIRS_FOR_QUANTILE {
        lower_quantile(&finite, q)
    } else {
        finite[0]
    };
    let (vmin, vmax) = pilot
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), k| (lo.min(k.variance), hi.max(k.variance)));
    Ok(KappaEstimate {
        point,
        lcb: point,
        quantile_q: q,
        n_pairs: finite.len(),
        saturated_pairs,
        variance_ratio: if vmin > 0.0 { vmax / vmin } else { f64::INFINITY },
        table: PairwiseSnrTable { entries, resolution: r, metric: metric.tag() },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub n_required: u64,
    pub kappa_used: f64,
    pub delta: f64,
}

/// Calls per artifact so that a mean comparison misranks an `r`-separated
/// pair with probability at most `delta`: `ceil((2 / kappa) ln(1 / delta))`.
///
/// Products within 1e-9 of an integer are snapped to it before the ceiling,
/// so that e.g. `kappa = 1, delta = e^-1` plans exactly 2 calls.
pub fn plan_samples(kappa: f64, delta: f64) -> Result<PlanResult> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::Domain(format!(
            "kappa must be positive and finite, got {kappa}: the benchmark cannot separate the pair"
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("delta must be positive, got {delta}")));
    }
    if delta >= 1.0 {
        return Ok(PlanResult { n_required: 0, kappa_used: kappa, delta });
    }
    let raw = 2.0 / kappa * (1.0 / delta).ln();
    let snapped = if (raw - raw.round()).abs() < 1e-9 { raw.round() } else { raw };
    Ok(PlanResult { n_required: snapped.ceil() as u64, kappa_used: kappa, delta })
}

/// Upper bound on P(mean comparison misranks) for a gap `delta_mu`, noise
/// `sigma`, and `n` calls per artifact: `min(1, exp(-n delta_mu^2 / (4 sigma^2)))`.
pub fn misrank_bound(delta_mu: f64, sigma: f64, n: u64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    Ok((-(n as f64) * delta_mu * delta_mu / (4.0 * sigma * sigma)).exp().min(1.0))
}

/// How the mean gap and noise entering the bound are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Separation {
    Known { delta_mu: f64, sigma: f64 },
    /// Estimate both from `n_reps` pilot calls per artifact; sigma^2 is the
    /// average of the two variances.
    Pilot { n_reps: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: u64,
    pub misrank_rate: f64,
    pub bound: f64,
    /// Binomial standard error of the empirical rate.
    pub std_error: f64,
    /// Comparisons whose empirical means tied exactly.
    pub ties: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisrankCurve {
    pub delta_mu: f64,
    pub sigma: f64,
    pub episodes_per_n: u64,
    pub points: Vec<CurvePoint>,
    pub warnings: Vec<String>,
}

impl MisrankCurve {
    /// Smallest grid n whose empirical misranking rate is at most `delta`.
    pub fn first_below(&self, delta: f64) -> Option<u64> {
        self.points.iter().find(|p| p.misrank_rate <= delta).map(|p| p.n)
    }

    /// Least-squares slope of ln(rate) against n over points with a positive
    /// rate.
    pub fn log_slope(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter(|p| p.misrank_rate > 0.0)
            .map(|p| (p.n as f64, p.misrank_rate.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    }
}

/// Runs `episodes_per_n` mean comparisons of `w` (assumed better) against
/// `w_prime` for each n in the grid and records the misranking frequency next
/// to [`misrank_bound`].
pub fn validate_misranking(
    spec: &BenchmarkSpec,
    w: &Artifact,
    w_prime: &Artifact,
    n_grid: &[u64],
    episodes_per_n: u64,
    separation: Separation,
    rng: &mut SimRng,
) -> Result<MisrankCurve> {
    if n_grid.is_empty() || n_grid.contains(&0) {
        return Err(Error::Argument("n grid must be nonempty with positive entries".into()));
    }
    if episodes_per_n == 0 {
        return Err(Error::Argument("episodes_per_n must be positive".into()));
    }
    let mut warnings = Vec::new();
    let (delta_mu, sigma) = match separation {
        Separation::Known { delta_mu, sigma } => (delta_mu, sigma),
        Separation::Pilot { n_reps } => {
            let a = estimate_kernel(spec, w, n_reps, rng)?;
            let b = estimate_kernel(spec, w_prime, n_reps, rng)?;
            (a.mean - b.mean, ((a.variance + b.variance) / 2.0).sqrt())
        }
    };
    if delta_mu <= 0.0 {
        warnings.push(format!("mean gap {delta_mu} is not positive; the bound is vacuous"));
    }
    let sigma_for_bound = if sigma > 0.0 { sigma } else { f64::MIN_POSITIVE };

    let mut points = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let seed = rng.next_u64();
        let (wrong, ties) = (0..episodes_per_n)
            .into_par_iter()
            .map(|e| {
                let c = compare_means(spec, w, w_prime, n as usize, &mut stream(seed, e))?;
                Ok::<_, Error>((u64::from(c.winner == Choice::Second), u64::from(c.mean_first == c.mean_second)))
            })
            .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
        let rate = wrong as f64 / episodes_per_n as f64;
        if ties > 0 {
            warnings.push(format!("n={n}: {ties} comparisons tied exactly (counted as misranked)"));
        }
        points.push(CurvePoint {
            n,
            misrank_rate: rate,
            bound: misrank_bound(delta_mu, sigma_for_bound, n)?,
            std_error: binomial_se(rate, episodes_per_n),
            ties,
        });
    }
    Ok(MisrankCurve { delta_mu, sigma, episodes_per_n, points, warnings })
}
