//! SMO against the projected-gradient QP oracle on small random problems.
//! Each case returns a description of the first mismatch.

use emgnet::svm::{kkt_violation, smo_binary, svm_fit, svm_predict, ClassWeighting, Gamma, KernelCache, SvmConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{qp_decision, qp_oracle, rbf, QpSolution};

pub const PROBLEMS: usize = 20;
pub const SAMPLES: usize = 40;
const CLASSES: usize = 3;
const GAMMA: f64 = 0.5;

/// Training points around random class centres, their labels, and probe
/// points spread over the same region.
fn problem(seed: u64) -> (Vec<Vec<f64>>, Vec<usize>, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centres: Vec<[f64; 2]> = (0..CLASSES).map(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
    let mut x = Vec::new();
    let mut labels = Vec::new();
    for i in 0..SAMPLES {
        let class = if i < CLASSES { i } else { rng.random_range(0..CLASSES) };
        let c = centres[class];
        x.push(vec![c[0] + rng.sample::<f64, _>(StandardNormal), c[1] + rng.sample::<f64, _>(StandardNormal)]);
        labels.push(class);
    }
    let probes = (0..SAMPLES).map(|_| vec![rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)]).collect();
    (x, labels, probes)
}

fn config(c: f64) -> SvmConfig {
    SvmConfig {
        c,
        gamma: Gamma::Explicit(GAMMA),
        tolerance: 1e-9,
        standardize: false,
        class_weighting: ClassWeighting::InverseFrequency,
        record_objective: true,
        ..SvmConfig::default()
    }
}

/// One-vs-all fit on problem `seed`: dual objectives, hard predictions and
/// decision values against the oracle. Returns the number of points compared.
pub fn oracle_case(seed: u64) -> Result<usize, String> {
    let c = if seed.is_multiple_of(2) { 1.0 } else { 10.0 };
    let (x, labels, probes) = problem(seed);
    let fit = svm_fit(&x, &labels, &config(c)).map_err(|e| e.to_string())?;

    let mut counts = [0usize; CLASSES];
    labels.iter().for_each(|&l| counts[l] += 1);
    let upper: Vec<f64> = labels
        .iter()
        .map(|&l| c * SAMPLES as f64 / (CLASSES as f64 * counts[l] as f64))
        .collect();
    let oracles: Vec<(Vec<f64>, QpSolution)> = (0..CLASSES)
        .map(|k| {
            let y: Vec<f64> = labels.iter().map(|&l| if l == k { 1.0 } else { -1.0 }).collect();
            let o = qp_oracle(&x, &y, &upper, GAMMA);
            (y, o)
        })
        .collect();
    for (k, (_, o)) in oracles.iter().enumerate() {
        let smo_obj = -fit.stats[k].dual_objective;
        if (smo_obj - o.objective).abs() >= 1e-6 * o.objective.abs().max(1.0) {
            return Err(format!("seed {seed} class {k}: objective {smo_obj} vs oracle {}", o.objective));
        }
        if !(fit.stats[k].converged && fit.stats[k].dual_monotone) {
            return Err(format!("seed {seed} class {k}: not converged or dual not monotone"));
        }
    }
    let mut compared = 0;
    for p in x.iter().chain(&probes) {
        let values: Vec<f64> = oracles.iter().map(|(y, o)| qp_decision(&x, y, o, GAMMA, p)).collect();
        let expected = (0..CLASSES).fold(0, |b, k| if values[k] > values[b] { k } else { b });
        let got = svm_predict(&fit.model, p).map_err(|e| e.to_string())?;
        if got != expected {
            return Err(format!("seed {seed} point {p:?}: predicted {got}, oracle {expected}"));
        }
        let smo_values = fit.model.decision_values(p).map_err(|e| e.to_string())?;
        if let Some((a, b)) = smo_values.iter().zip(&values).find(|(a, b)| (*a - *b).abs() >= 1e-4) {
            return Err(format!("seed {seed} point {p:?}: decision value {a} vs {b}"));
        }
        compared += 1;
    }
    Ok(compared)
}

/// Binary SMO at two stopping tolerances: KKT violation within tolerance,
/// monotone dual, feasibility, and the tracked objective equal to the
/// direct one.
pub fn kkt_case(seed: u64) -> Result<(), String> {
    let (x, labels, _) = problem(100 + seed);
    let y: Vec<f64> = labels.iter().map(|&l| if l == 0 { 1.0 } else { -1.0 }).collect();
    let upper = vec![if seed.is_multiple_of(2) { 1.0 } else { 5.0 }; SAMPLES];
    for tolerance in [1e-3, 1e-6] {
        let mut cache = KernelCache::new(&x, GAMMA, 8);
        let sol = smo_binary(&mut cache, &y, &upper, tolerance, 100_000, true);
        if !sol.converged {
            return Err(format!("seed {seed} tol {tolerance}: not converged"));
        }
        let violation = kkt_violation(&sol, &y, &upper);
        if violation > tolerance {
            return Err(format!("seed {seed} tol {tolerance}: KKT violation {violation}"));
        }
        if !sol.dual_trace.windows(2).all(|w| w[1] >= w[0] - 1e-12) {
            return Err(format!("seed {seed} tol {tolerance}: dual decreased"));
        }
        let balance: f64 = sol.alpha.iter().zip(&y).map(|(a, yi)| a * yi).sum();
        if balance.abs() >= 1e-9 || !sol.alpha.iter().zip(&upper).all(|(a, c)| *a >= 0.0 && a <= c) {
            return Err(format!("seed {seed} tol {tolerance}: infeasible alpha"));
        }
        let direct: f64 = 0.5
            * (0..SAMPLES)
                .flat_map(|i| (0..SAMPLES).map(move |j| (i, j)))
                .map(|(i, j)| sol.alpha[i] * sol.alpha[j] * y[i] * y[j] * rbf(&x[i], &x[j], GAMMA))
                .sum::<f64>()
            - sol.alpha.iter().sum::<f64>();
        if (direct - sol.objective).abs() >= 1e-9 * direct.abs().max(1.0) {
            return Err(format!("seed {seed} tol {tolerance}: objective {} vs direct {direct}", sol.objective));
        }
    }
    Ok(())
}
