use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopDecision {
    Continue,
    Stop,
}

/// Slack for accuracies that sit exactly on the threshold.
const THRESHOLD_SLACK: f64 = 1e-12;

/// Stops once none of the last `patience` entries beats the best value seen
/// before them by at least `min_improvement` (absolute).
pub fn early_stop_check(history: &[f64], min_improvement: f64, patience: usize) -> StopDecision {
    let patience = patience.max(1);
    if history.len() <= patience {
        return StopDecision::Continue;
    }
    let split = history.len() - patience;
    let best_before = history[..split].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let recent_best = history[split..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if recent_best - best_before >= min_improvement - THRESHOLD_SLACK {
        StopDecision::Continue
    } else {
        StopDecision::Stop
    }
}
