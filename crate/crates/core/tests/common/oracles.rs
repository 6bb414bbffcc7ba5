//! Reference computations that share no code with the library.

use statrs::distribution::{ContinuousCDF, Normal};

/// W2 between two 1-D normals by integrating the squared quantile gap
/// over `n` midpoints of (0, 1).
pub fn w2_quantile_1d(m1: f64, s1: f64, m2: f64, s2: f64, n: usize) -> f64 {
    let p = Normal::new(m1, s1).unwrap();
    let q = Normal::new(m2, s2).unwrap();
    let mut acc = 0.0;
    for i in 0..n {
        let u = (i as f64 + 0.5) / n as f64;
        let d = p.inverse_cdf(u) - q.inverse_cdf(u);
        acc += d * d;
    }
    (acc / n as f64).sqrt()
}

fn log_pdf(x: f64, m: f64, s: f64) -> f64 {
    let z = (x - m) / s;
    -0.5 * z * z - s.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// KL(N(m1, s1^2) || N(m2, s2^2)) by composite Simpson over +-14 s1.
pub fn kl_quadrature_1d(m1: f64, s1: f64, m2: f64, s2: f64) -> f64 {
    let n = 20_000;
    let (a, b) = (m1 - 14.0 * s1, m1 + 14.0 * s1);
    let h = (b - a) / n as f64;
    let f = |x: f64| {
        let lp = log_pdf(x, m1, s1);
        lp.exp() * (lp - log_pdf(x, m2, s2))
    };
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Spherical KL as a sum of per-coordinate 1-D quadratures.
pub fn kl_quadrature(m1: &[f64], s1: f64, m2: &[f64], s2: f64) -> f64 {
    m1.iter()
        .zip(m2)
        .map(|(&a, &b)| kl_quadrature_1d(a, s1, b, s2))
        .sum()
}

/// Ranks by counting: `1 + #smaller + (#equal - 1) / 2`.
pub fn brute_ranks(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let less = xs.iter().filter(|&&y| y < x).count() as f64;
            let eq = xs.iter().filter(|&&y| y == x).count() as f64;
            1.0 + less + (eq - 1.0) / 2.0
        })
        .collect()
}

pub fn brute_spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let (rx, ry) = (brute_ranks(xs), brute_ranks(ys));
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Confusion counts when predicting positive for `score >= t`.
fn counts_at(scores: &[f64], labels: &[bool], t: f64) -> (f64, f64, f64) {
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut fn_ = 0.0;
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= t, l) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fn_ += 1.0,
            _ => {}
        }
    }
    (tp, fp, fn_)
}

/// Best F1 over every threshold equal to some score (and one above all).
pub fn brute_best_f1(scores: &[f64], labels: &[bool]) -> f64 {
    scores
        .iter()
        .map(|&t| {
            let (tp, fp, fn_) = counts_at(scores, labels, t);
            if tp == 0.0 {
                0.0
            } else {
                2.0 * tp / (2.0 * tp + fp + fn_)
            }
        })
        .fold(0.0, f64::max)
}

/// Step-wise AP: sum over distinct thresholds of recall gain times
/// precision at that threshold.
pub fn brute_ap(scores: &[f64], labels: &[bool]) -> f64 {
    let mut ts: Vec<f64> = scores.to_vec();
    ts.sort_by(|a, b| b.total_cmp(a));
    ts.dedup();
    let pos = labels.iter().filter(|&&l| l).count() as f64;
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for t in ts {
        let (tp, fp, _) = counts_at(scores, labels, t);
        let recall = tp / pos;
        ap += (recall - prev_recall) * tp / (tp + fp);
        prev_recall = recall;
    }
    ap
}

/// Largest eigenpairs of a symmetric matrix by power iteration with deflation.
pub fn top_eigen(mut a: Vec<Vec<f64>>, k: usize) -> Vec<(f64, Vec<f64>)> {
    let d = a.len();
    let mut out = Vec::new();
    for j in 0..k {
        let mut v: Vec<f64> = (0..d)
            .map(|i| 1.0 + ((i * 7 + j * 3) % 5) as f64 * 0.1)
            .collect();
        let mut lambda = 0.0;
        for _ in 0..20_000 {
            let w: Vec<f64> = (0..d)
                .map(|r| (0..d).map(|c| a[r][c] * v[c]).sum())
                .collect();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
            let delta: f64 = next.iter().zip(&v).map(|(x, y)| (x - y).abs()).sum();
            v = next;
            lambda = norm;
            if delta < 1e-15 {
                break;
            }
        }
        for r in 0..d {
            for c in 0..d {
                a[r][c] -= lambda * v[r] * v[c];
            }
        }
        out.push((lambda, v));
    }
    out
}
