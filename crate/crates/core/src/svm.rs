//! One-vs-all RBF support vector machines trained by SMO.
//!
//! Each binary machine solves the soft-margin dual
//!
//! ```text
//! min  f(a) = 1/2 a'Qa - e'a,   Q_ij = y_i y_j K(x_i, x_j)
//! s.t. 0 <= a_i <= C_i,  y'a = 0
//! ```
//!
//! with the maximal-violating-pair working set, stopping once the KKT gap
//! `max_{I_up} -y_t G_t - min_{I_low} -y_t G_t` drops below the tolerance.
//! `C_i = C * w(class_i)`; kernel rows are shared by all machines through
//! one cache since the kernel does not depend on labels.

use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::io::{check_header, read_f64s, read_text, write_f64s, write_text, write_u32, FORMAT_VERSION};

pub const SVM_MAGIC: &[u8; 8] = b"EMGNETSV";

/// Step-size floor for non-positive-definite pairs.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gamma {
    /// `1 / feature_length`.
    AutoReciprocalFeatures,
    Explicit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeighting {
    InverseFrequency,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub c: f64,
    pub gamma: Gamma,
    pub tolerance: f64,
    /// Iteration budget per machine, in multiples of the sample count.
    pub max_passes: usize,
    pub class_weighting: ClassWeighting,
    pub standardize: bool,
    pub cache_mb: usize,
    pub record_objective: bool,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            gamma: Gamma::AutoReciprocalFeatures,
            tolerance: 1e-3,
            max_passes: 1000,
            class_weighting: ClassWeighting::InverseFrequency,
            standardize: true,
            cache_mb: 200,
            record_objective: false,
            seed: 0,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Usage(format!("c must be positive, got {}", self.c)));
        }
        if let Gamma::Explicit(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::Usage(format!("gamma must be positive, got {g}")));
            }
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::Usage(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_passes == 0 {
            return Err(Error::Usage("max_passes must be at least 1".into()));
        }
        Ok(())
    }

    pub fn resolve_gamma(&self, features: usize) -> f64 {
        match self.gamma {
            Gamma::AutoReciprocalFeatures => 1.0 / features as f64,
            Gamma::Explicit(g) => g,
        }
    }
}

pub fn rbf_kernel(x: &[f64], y: &[f64], gamma: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::shape("feature length", x.len(), y.len()));
    }
    Ok(rbf(x, y, gamma))
}

fn rbf(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

/// Per-class weights `n / (G * count_c)`; their mean over samples is 1.
pub fn class_weights(labels: &[usize], classes: usize, weighting: ClassWeighting) -> Vec<f64> {
    match weighting {
        ClassWeighting::None => vec![1.0; classes],
        ClassWeighting::InverseFrequency => {
            let mut counts = vec![0usize; classes];
            for &l in labels {
                counts[l] += 1;
            }
            let n = labels.len() as f64;
            counts
                .iter()
                .map(|&k| if k == 0 { 0.0 } else { n / (classes as f64 * k as f64) })
                .collect()
        }
    }
}

/// Per-dimension standardization from training statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn identity(dim: usize) -> Self {
        Scaler {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    /// Constant dimensions keep unit scale.
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let dim = rows[0].len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Scaler { mean, std }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

/// Kernel rows computed on demand with FIFO eviction.
pub struct KernelCache<'a> {
    data: &'a [Vec<f64>],
    gamma: f64,
    rows: Vec<Option<Vec<f64>>>,
    order: VecDeque<usize>,
    capacity: usize,
    pub computed_rows: usize,
}

impl<'a> KernelCache<'a> {
    pub fn new(data: &'a [Vec<f64>], gamma: f64, capacity_rows: usize) -> Self {
        KernelCache {
            data,
            gamma,
            rows: vec![None; data.len()],
            order: VecDeque::new(),
            capacity: capacity_rows.max(2),
            computed_rows: 0,
        }
    }

    fn ensure(&mut self, i: usize, keep: Option<usize>) {
        if self.rows[i].is_some() {
            return;
        }
        while self.order.len() >= self.capacity {
            let victim = self.order.pop_front().expect("cache order non-empty");
            if Some(victim) == keep {
                self.order.push_back(victim);
                continue;
            }
            self.rows[victim] = None;
        }
        let xi = &self.data[i];
        let row = self.data.iter().map(|xt| rbf(xi, xt, self.gamma)).collect();
        self.rows[i] = Some(row);
        self.order.push_back(i);
        self.computed_rows += 1;
    }

    /// Loads rows `i` and `j`, returning both.
    pub fn pair(&mut self, i: usize, j: usize) -> (&[f64], &[f64]) {
        self.ensure(i, None);
        self.ensure(j, Some(i));
        (
            self.rows[i].as_deref().expect("row i cached"),
            self.rows[j].as_deref().expect("row j cached"),
        )
    }
}

/// Dual solution of one binary machine.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    /// Final `f(a)`; the dual objective is `-f(a)`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `-f(a)` after every iteration when recording is enabled.
    pub dual_trace: Vec<f64>,
    pub gradient: Vec<f64>,
}

/// Binary SMO on labels `y` in {-1, +1} with per-sample bounds `upper`.
pub fn smo_binary(
    cache: &mut KernelCache<'_>,
    y: &[f64],
    upper: &[f64],
    tolerance: f64,
    max_iterations: usize,
    record_objective: bool,
) -> BinarySolution {
    let n = y.len();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut objective = 0.0;
    let mut dual_trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    let in_up = |a: f64, yt: f64, c: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64, c: f64| (yt < 0.0 && a < c) || (yt > 0.0 && a > 0.0);

    while iterations < max_iterations {
        let (mut i, mut gmax) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut gmin) = (usize::MAX, f64::INFINITY);
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t], upper[t]) && v > gmax {
                gmax = v;
                i = t;
            }
            if in_low(alpha[t], y[t], upper[t]) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let (ki, kj) = cache.pair(i, j);
        let kij = ki[j];
        let (ci, cj) = (upper[i], upper[j]);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        let quad = {
            let q = ki[i] + kj[j] - 2.0 * kij;
            if q > 0.0 {
                q
            } else {
                TAU
            }
        };
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > ci - cj {
                if ai > ci {
                    ai = ci;
                    aj = ci - diff;
                }
            } else if aj > cj {
                aj = cj;
                ai = cj + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > ci {
                if ai > ci {
                    ai = ci;
                    aj = sum - ci;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > cj {
                if aj > cj {
                    aj = cj;
                    ai = sum - cj;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        let (di, dj) = (ai - old_i, aj - old_j);
        // f changes by G'd + d'Qd/2 over the two touched coordinates.
        let qij = y[i] * y[j] * kij;
        objective += grad[i] * di + grad[j] * dj + 0.5 * (ki[i] * di * di + kj[j] * dj * dj) + qij * di * dj;
        alpha[i] = ai;
        alpha[j] = aj;
        let (si, sj) = (y[i] * di, y[j] * dj);
        for t in 0..n {
            grad[t] += y[t] * (ki[t] * si + kj[t] * sj);
        }
        if record_objective {
            dual_trace.push(-objective);
        }
    }

    let rho = compute_rho(&alpha, &grad, y, upper);
    BinarySolution {
        alpha,
        rho,
        objective,
        iterations,
        converged,
        dual_trace,
        gradient: grad,
    }
}

/// Offset from free support vectors, or the midpoint of the feasible
/// interval when none are free.
fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], upper: &[f64]) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum) = (0usize, 0.0);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= upper[t] {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    if free > 0 {
        sum / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// Largest KKT violation of a binary solution, measured on the margins
/// `y_t f(x_t)`: zero for a point that satisfies its complementary slackness
/// condition exactly.
pub fn kkt_violation(solution: &BinarySolution, y: &[f64], upper: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for t in 0..y.len() {
        // y_t f(x_t) - 1 = G_t - y_t rho
        let slack = solution.gradient[t] - y[t] * solution.rho;
        let a = solution.alpha[t];
        let v = if a <= 0.0 {
            (-slack).max(0.0)
        } else if a >= upper[t] {
            slack.max(0.0)
        } else {
            slack.abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// Training diagnostics of one binary machine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineStats {
    pub class: usize,
    pub iterations: usize,
    pub converged: bool,
    pub support_vectors: usize,
    pub dual_objective: f64,
    pub max_kkt_violation: f64,
    pub dual_monotone: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OvaModel {
    pub scaler: Scaler,
    pub gamma: f64,
    /// Standardized support vectors shared by all machines.
    pub pool: Vec<Vec<f64>>,
    /// `coef[c][p] = alpha_p * y_p` for machine `c` over the pool.
    pub coef: Vec<Vec<f64>>,
    pub rho: Vec<f64>,
}

/// Fitted model plus per-machine diagnostics.
#[derive(Debug, Clone)]
pub struct SvmFit {
    pub model: OvaModel,
    pub stats: Vec<MachineStats>,
    pub class_weights: Vec<f64>,
}

fn check_features(features: &[Vec<f64>]) -> Result<usize> {
    let dim = features
        .first()
        .ok_or_else(|| Error::Usage("no training samples".into()))?
        .len();
    if dim == 0 {
        return Err(Error::Usage("feature vectors are empty".into()));
    }
    for (i, f) in features.iter().enumerate() {
        if f.len() != dim {
            return Err(Error::shape("feature length", dim, f.len()));
        }
        if let Some(k) = f.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite feature {k} in sample {i}")));
        }
    }
    Ok(dim)
}

pub fn svm_train(features: &[Vec<f64>], labels: &[usize], config: &SvmConfig) -> Result<OvaModel> {
    Ok(svm_fit(features, labels, config)?.model)
}

/// Trains one class-vs-rest machine per class present in `0..=max(labels)`.
pub fn svm_fit(features: &[Vec<f64>], labels: &[usize], config: &SvmConfig) -> Result<SvmFit> {
    config.validate()?;
    let dim = check_features(features)?;
    if labels.len() != features.len() {
        return Err(Error::shape("label count", features.len(), labels.len()));
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let distinct = {
        let mut seen = vec![false; classes];
        labels.iter().for_each(|&l| seen[l] = true);
        seen.iter().filter(|&&s| s).count()
    };
    if distinct < 2 {
        return Err(Error::Usage(format!("need at least 2 classes, got {distinct}")));
    }
    let scaler = if config.standardize {
        Scaler::fit(features)
    } else {
        Scaler::identity(dim)
    };
    let data: Vec<Vec<f64>> = features.iter().map(|f| scaler.apply(f)).collect();
    let gamma = config.resolve_gamma(dim);
    let weights = class_weights(labels, classes, config.class_weighting);
    let upper: Vec<f64> = labels.iter().map(|&l| config.c * weights[l]).collect();
    let n = data.len();
    let capacity = (config.cache_mb * (1 << 20) / (8 * n).max(1)).max(2);
    let mut cache = KernelCache::new(&data, gamma, capacity);
    let max_iterations = config.max_passes.saturating_mul(n).max(1);

    let mut in_pool = vec![false; n];
    let mut raw_coef = Vec::with_capacity(classes);
    let mut rho = Vec::with_capacity(classes);
    let mut stats = Vec::with_capacity(classes);
    for class in 0..classes {
        let y: Vec<f64> = labels.iter().map(|&l| if l == class { 1.0 } else { -1.0 }).collect();
        let sol = smo_binary(&mut cache, &y, &upper, config.tolerance, max_iterations, config.record_objective);
        if !sol.converged {
            log::warn!(
                "class {class}: SMO stopped after {} iterations without reaching tolerance {}",
                sol.iterations,
                config.tolerance
            );
        }
        let monotone = sol.dual_trace.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0));
        stats.push(MachineStats {
            class,
            iterations: sol.iterations,
            converged: sol.converged,
            support_vectors: sol.alpha.iter().filter(|&&a| a > 0.0).count(),
            dual_objective: -sol.objective,
            max_kkt_violation: kkt_violation(&sol, &y, &upper),
            dual_monotone: monotone,
        });
        let c: Vec<f64> = sol.alpha.iter().zip(&y).map(|(a, yt)| a * yt).collect();
        for (p, &a) in in_pool.iter_mut().zip(&sol.alpha) {
            *p |= a > 0.0;
        }
        raw_coef.push(c);
        rho.push(sol.rho);
    }
    log::debug!("svm: {} kernel rows computed for {n} samples", cache.computed_rows);

    let pool_idx: Vec<usize> = (0..n).filter(|&t| in_pool[t]).collect();
    let model = OvaModel {
        scaler,
        gamma,
        pool: pool_idx.iter().map(|&t| data[t].clone()).collect(),
        coef: raw_coef
            .iter()
            .map(|c| pool_idx.iter().map(|&t| c[t]).collect())
            .collect(),
        rho,
    };
    Ok(SvmFit {
        model,
        stats,
        class_weights: weights,
    })
}

impl OvaModel {
    pub fn classes(&self) -> usize {
        self.rho.len()
    }

    pub fn feature_length(&self) -> usize {
        self.scaler.mean.len()
    }

    /// Raw margin of every machine.
    pub fn decision_values(&self, feature: &[f64]) -> Result<Vec<f64>> {
        if feature.len() != self.feature_length() {
            return Err(Error::shape("feature length", self.feature_length(), feature.len()));
        }
        let x = self.scaler.apply(feature);
        let k: Vec<f64> = self.pool.iter().map(|p| rbf(p, &x, self.gamma)).collect();
        Ok(self
            .coef
            .iter()
            .zip(&self.rho)
            .map(|(c, r)| c.iter().zip(&k).map(|(a, kv)| a * kv).sum::<f64>() - r)
            .collect())
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(SVM_MAGIC)?;
        write_u32(w, FORMAT_VERSION)?;
        let header = serde_json::json!({
            "classes": self.classes(),
            "features": self.feature_length(),
            "pool": self.pool.len(),
        });
        write_text(w, &header.to_string())?;
        write_f64s(w, &[self.gamma])?;
        write_f64s(w, &self.scaler.mean)?;
        write_f64s(w, &self.scaler.std)?;
        write_f64s(w, &self.pool.concat())?;
        write_f64s(w, &self.rho)?;
        write_f64s(w, &self.coef.concat())?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<OvaModel> {
        check_header(r, SVM_MAGIC)?;
        #[derive(Deserialize)]
        struct Header {
            classes: usize,
            features: usize,
            pool: usize,
        }
        let h: Header = serde_json::from_str(&read_text(r, 1 << 16)?)?;
        let limit = 1 << 28;
        let block = |r: &mut R, expected: usize, what: &'static str| -> Result<Vec<f64>> {
            let v = read_f64s(r, limit)?;
            if v.len() != expected {
                return Err(Error::Data(format!("{what}: expected {expected} values, found {}", v.len())));
            }
            Ok(v)
        };
        let gamma = block(r, 1, "gamma")?[0];
        let mean = block(r, h.features, "scaler mean")?;
        let std = block(r, h.features, "scaler std")?;
        let pool = block(r, h.pool * h.features, "support vectors")?;
        let rho = block(r, h.classes, "offsets")?;
        let coef = block(r, h.classes * h.pool, "coefficients")?;
        let chunk = |v: Vec<f64>, size: usize| -> Vec<Vec<f64>> {
            if size == 0 {
                return Vec::new();
            }
            v.chunks(size).map(<[f64]>::to_vec).collect()
        };
        Ok(OvaModel {
            scaler: Scaler { mean, std },
            gamma,
            pool: chunk(pool, h.features),
            coef: if h.pool == 0 {
                vec![Vec::new(); h.classes]
            } else {
                chunk(coef, h.pool)
            },
            rho,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<OvaModel> {
        OvaModel::read_from(&mut BufReader::new(File::open(path)?))
    }
}

/// Class with the largest decision value; ties go to the lowest index.
pub fn svm_predict(model: &OvaModel, feature: &[f64]) -> Result<usize> {
    let d = model.decision_values(feature)?;
    let mut best = 0;
    for (c, v) in d.iter().enumerate() {
        if *v > d[best] {
            best = c;
        }
    }
    Ok(best)
}
