//! Small statistical helpers shared by the estimators and audits.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

/// Running count, mean, and sum of squared deviations (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Unbiased sample variance (divisor n - 1); zero for fewer than two points.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        (self.variance() / self.n as f64).sqrt()
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

pub fn normal_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

pub fn normal_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// Two-sided p-value of Welch's test for equal means, using the normal reference
/// distribution. Both samples identical constants gives p = 1 when their means
/// agree and p = 0 otherwise.
pub fn welch_z_pvalue(a: &Moments, b: &Moments) -> f64 {
    let diff = a.mean - b.mean;
    let se2 = a.variance() / a.n as f64 + b.variance() / b.n as f64;
    if se2 <= 0.0 {
        return if diff == 0.0 { 1.0 } else { 0.0 };
    }
    let z = diff.abs() / se2.sqrt();
    (2.0 * normal_cdf(-z)).min(1.0)
}

/// Welch-Satterthwaite degrees of freedom.
pub fn welch_df(a: &Moments, b: &Moments) -> f64 {
    let va = a.variance() / a.n as f64;
    let vb = b.variance() / b.n as f64;
    let num = (va + vb).powi(2);
    let den = va * va / (a.n as f64 - 1.0) + vb * vb / (b.n as f64 - 1.0);
    if den <= 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Two-sided critical value of Student's t at the given confidence level,
/// falling back to the normal quantile for very large or infinite df.
pub fn t_critical(confidence: f64, df: f64) -> f64 {
    let p = 0.5 + confidence / 2.0;
    if !df.is_finite() || df > 1e7 {
        return normal_quantile(p);
    }
    StudentsT::new(0.0, 1.0, df)
        .expect("positive df")
        .inverse_cdf(p)
}

/// Pearson chi-square test of homogeneity for a 2 x k table of counts.
///
/// Categories that are empty in both rows are dropped. With fewer than two
/// populated categories the samples cannot differ and the p-value is 1.
pub fn chi_square_homogeneity(row_a: &[u64], row_b: &[u64]) -> f64 {
    assert_eq!(row_a.len(), row_b.len());
    let cols: Vec<(f64, f64)> = row_a
        .iter()
        .zip(row_b)
        .filter(|(a, b)| **a + **b > 0)
        .map(|(a, b)| (*a as f64, *b as f64))
        .collect();
    if cols.len() < 2 {
        return 1.0;
    }
    let na: f64 = cols.iter().map(|c| c.0).sum();
    let nb: f64 = cols.iter().map(|c| c.1).sum();
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    let total = na + nb;
    let stat: f64 = cols
        .iter()
        .map(|&(a, b)| {
            let col = a + b;
            let ea = na * col / total;
            let eb = nb * col / total;
            (a - ea).powi(2) / ea + (b - eb).powi(2) / eb
        })
        .sum();
    let dof = (cols.len() - 1) as f64;
    let chi = ChiSquared::new(dof).expect("positive dof");
    (1.0 - chi.cdf(stat)).clamp(0.0, 1.0)
}

/// Lower order statistic at level q: the element at rank ceil(q * n) (1-based),
/// so q = 0 returns the minimum. `sorted` must be ascending and nonempty.
pub fn lower_quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.saturating_sub(1).min(sorted.len() - 1)]
}

/// Binomial standard error of a proportion.
pub fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}
