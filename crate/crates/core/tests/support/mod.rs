//! Independent reference implementations shared by the integration tests
//! and the acceptance target.
#![allow(dead_code)]

pub mod gradcheck;
pub mod svmcheck;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

// ---- finite differences ----

pub const FD_STEP: f64 = 1e-6;
/// Below this magnitude both gradients count as zero and the error is
/// measured absolutely.
pub const FD_FLOOR: f64 = 1e-6;

pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FD_FLOOR)
}

/// Central difference of `f` in coordinate `i` of `x`.
pub fn central(x: &mut [f64], i: usize, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let orig = x[i];
    x[i] = orig + FD_STEP;
    let up = f(x);
    x[i] = orig - FD_STEP;
    let down = f(x);
    x[i] = orig;
    (up - down) / (2.0 * FD_STEP)
}

/// Checks up to `probes` random coordinates; returns the worst relative
/// error and the number of probes made.
pub fn probe(
    x: &[f64],
    analytic: &[f64],
    probes: usize,
    rng: &mut ChaCha8Rng,
    mut f: impl FnMut(&[f64]) -> f64,
) -> (f64, usize) {
    assert_eq!(x.len(), analytic.len());
    let mut x = x.to_vec();
    let mut worst = 0.0f64;
    let count = probes.min(x.len());
    for _ in 0..count {
        let i = rng.random_range(0..x.len());
        let numeric = central(&mut x, i, &mut f);
        worst = worst.max(rel_error(analytic[i], numeric));
    }
    (worst, count)
}

// ---- wavelet transform ----

/// Full convolution of a half-sample symmetric extension, then every
/// second sample. Needs `x.len() >= h.len() - 1`.
pub fn brute_force_level(x: &[f64], h: &[f64]) -> Vec<f64> {
    let n = x.len();
    let f = h.len();
    assert!(n + 1 >= f);
    let mut ext: Vec<f64> = x[..f - 1].iter().rev().copied().collect();
    ext.extend_from_slice(x);
    ext.extend(x[n - (f - 1)..].iter().rev());
    let full: Vec<f64> = (0..ext.len() + f - 1)
        .map(|m| (0..f).filter(|&j| j <= m && m - j < ext.len()).map(|j| h[j] * ext[m - j]).sum())
        .collect();
    (0..(n + f - 1) / 2).map(|k| full[f + 2 * k]).collect()
}

/// `(details 1..=levels, approximation)`.
pub fn brute_force_decompose(x: &[f64], dec_lo: &[f64], dec_hi: &[f64], levels: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut approx = x.to_vec();
    let mut details = Vec::new();
    for _ in 0..levels {
        details.push(brute_force_level(&approx, dec_hi));
        approx = brute_force_level(&approx, dec_lo);
    }
    (details, approx)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// ---- metrics ----

pub fn brute_macro(pairs: &[(usize, usize)], classes: usize) -> f64 {
    (0..classes)
        .map(|c| {
            let hits = pairs.iter().filter(|(t, p)| *t == c && *p == c).count();
            let total = pairs.iter().filter(|(t, _)| *t == c).count();
            hits as f64 / total as f64
        })
        .sum::<f64>()
        / classes as f64
}

pub fn brute_pooled(folds: &[Vec<(usize, usize)>], classes: usize) -> f64 {
    let all: Vec<(usize, usize)> = folds.iter().flatten().copied().collect();
    brute_macro(&all, classes)
}

/// Random (truth, prediction) pairs where every class appears as truth.
pub fn random_fold(rng: &mut ChaCha8Rng, classes: usize) -> Vec<(usize, usize)> {
    let n = classes + rng.random_range(0..40);
    (0..n)
        .map(|i| {
            let t = if i < classes { i } else { rng.random_range(0..classes) };
            let p = if rng.random_bool(0.6) { t } else { rng.random_range(0..classes) };
            (t, p)
        })
        .collect()
}

// ---- SVM dual ----

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    (-gamma * a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>()).exp()
}

/// Euclidean projection onto `{a : y'a = 0, 0 <= a <= c}` by bisection on
/// the equality multiplier.
fn project(v: &[f64], y: &[f64], c: &[f64]) -> Vec<f64> {
    let at = |lambda: f64| -> Vec<f64> {
        v.iter().zip(y).zip(c).map(|((vi, yi), ci)| (vi - lambda * yi).clamp(0.0, *ci)).collect()
    };
    let slope = |lambda: f64| -> f64 { at(lambda).iter().zip(y).map(|(a, yi)| a * yi).sum() };
    let span = v.iter().map(|x| x.abs()).fold(0.0, f64::max) + c.iter().fold(0.0f64, |m, x| m.max(*x)) + 1.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

pub struct QpSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    /// `1/2 a'Qa - e'a` at the solution.
    pub objective: f64,
}

/// Accelerated projected gradient on `min 1/2 a'Qa - e'a` over the dual
/// feasible set of an RBF SVM.
pub fn qp_oracle(x: &[Vec<f64>], y: &[f64], c: &[f64], gamma: f64) -> QpSolution {
    let n = x.len();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * rbf(&x[i], &x[j], gamma)).collect())
        .collect();
    let lipschitz = q.iter().map(|row| row.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let grad = |a: &[f64]| -> Vec<f64> {
        q.iter().map(|row| row.iter().zip(a).map(|(qij, aj)| qij * aj).sum::<f64>() - 1.0).collect()
    };
    let mut a = vec![0.0; n];
    let mut z = a.clone();
    let mut t = 1.0f64;
    for _ in 0..50_000 {
        let g = grad(&z);
        let step: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi - gi / lipschitz).collect();
        let next = project(&step, y, c);
        if next.iter().zip(&a).all(|(p, q)| (p - q).abs() < 1e-14) {
            a = next;
            break;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = next.iter().zip(&a).map(|(nx, ax)| nx + (t - 1.0) / t_next * (nx - ax)).collect();
        a = next;
        t = t_next;
    }
    let g = grad(&a);
    let objective = 0.5 * a.iter().zip(&g).map(|(ai, gi)| ai * (gi + 1.0)).sum::<f64>() - a.iter().sum::<f64>();
    let margin = 1e-7;
    let free: Vec<usize> = (0..n).filter(|&t| a[t] > margin && a[t] < c[t] - margin).collect();
    let rho = if free.is_empty() {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        for t in 0..n {
            let yg = y[t] * g[t];
            let at_upper = a[t] >= c[t] - margin;
            if (at_upper && y[t] < 0.0) || (!at_upper && y[t] > 0.0) {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        }
        0.5 * (ub + lb)
    } else {
        free.iter().map(|&t| y[t] * g[t]).sum::<f64>() / free.len() as f64
    };
    QpSolution { alpha: a, rho, objective }
}

pub fn qp_decision(x: &[Vec<f64>], y: &[f64], s: &QpSolution, gamma: f64, p: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .zip(&s.alpha)
        .map(|((xi, yi), ai)| ai * yi * rbf(xi, p, gamma))
        .sum::<f64>()
        - s.rho
}
