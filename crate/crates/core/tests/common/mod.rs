//! Independent oracles shared by the integration tests. Nothing here calls
//! into the crate under test.

#![allow(dead_code)]

use std::collections::HashMap;

/// Composite Simpson rule with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

pub fn normal_log_pdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((x - mean).powi(2) / var + (2.0 * std::f64::consts::PI * var).ln())
}

/// KL(N(mp, vp) || N(mq, vq)) by direct integration of p ln(p/q).
pub fn kl_by_integration(mp: f64, vp: f64, mq: f64, vq: f64) -> f64 {
    let sd = vp.sqrt();
    simpson(
        |x| {
            let lp = normal_log_pdf(x, mp, vp);
            lp.exp() * (lp - normal_log_pdf(x, mq, vq))
        },
        mp - 14.0 * sd,
        mp + 14.0 * sd,
        40_000,
    )
}

/// Standard normal CDF by integrating the density from 0 (Simpson, fine grid),
/// with the upper tail from the asymptotic Mills-ratio series past |x| = 8.
pub fn phi(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - phi(-x);
    }
    if x > 8.0 {
        let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let tail = pdf / x * (1.0 - 1.0 / (x * x) + 3.0 / x.powi(4) - 15.0 / x.powi(6));
        return 1.0 - tail;
    }
    let n = 2 * ((x * 2000.0).ceil() as usize).max(1);
    0.5 + simpson(|t| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt(), 0.0, x, n)
}

/// Lower tail Phi(-x) for x >= 0 without cancellation.
pub fn phi_lower(x: f64) -> f64 {
    assert!(x >= 0.0);
    if x > 8.0 {
        return 1.0 - phi(x);
    }
    // integrate the density from x to x + 40
    let n = 200_000;
    simpson(|t| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt(), x, x + 40.0, n)
}

/// Edit distance by memoized recursion on suffixes.
pub fn edit_distance_oracle<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    fn go<T: PartialEq>(a: &[T], b: &[T], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = if a[i] == b[j] {
            go(a, b, i + 1, j + 1, memo)
        } else {
            1 + go(a, b, i + 1, j, memo).min(go(a, b, i, j + 1, memo)).min(go(a, b, i + 1, j + 1, memo))
        };
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

/// Every sequence over `alphabet` with length at most `max_len`.
pub fn all_sequences(alphabet: &[&str], max_len: usize) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for c in alphabet {
                let mut t: Vec<String> = s.clone();
                t.push(c.to_string());
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

pub fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}
