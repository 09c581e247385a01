//! Repetition-based 3/1/2 train/validation/test plans.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::windows::Window;
use crate::error::{Error, Result};

pub const NUM_REPETITIONS: usize = 6;

/// Number of distinct 3/1/2 partitions of six repetitions: C(6,2) * C(4,1).
pub const NUM_PARTITIONS: usize = 60;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub fold_id: usize,
    pub train_reps: Vec<usize>,
    pub val_reps: Vec<usize>,
    pub test_reps: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl FoldPlan {
    pub fn split_of(&self, repetition: usize) -> Option<Split> {
        if self.train_reps.contains(&repetition) {
            Some(Split::Train)
        } else if self.val_reps.contains(&repetition) {
            Some(Split::Val)
        } else if self.test_reps.contains(&repetition) {
            Some(Split::Test)
        } else {
            None
        }
    }
}

/// All partitions of repetitions `1..=6`, ordered lexicographically by
/// (test pair, validation repetition).
pub fn all_partitions() -> Vec<FoldPlan> {
    let reps: Vec<usize> = (1..=NUM_REPETITIONS).collect();
    let mut out = Vec::with_capacity(NUM_PARTITIONS);
    for a in 0..reps.len() {
        for b in a + 1..reps.len() {
            let test = vec![reps[a], reps[b]];
            for &v in reps.iter().filter(|r| !test.contains(r)) {
                let train = reps.iter().copied().filter(|r| !test.contains(r) && *r != v).collect();
                out.push(FoldPlan {
                    fold_id: out.len(),
                    train_reps: train,
                    val_reps: vec![v],
                    test_reps: test.clone(),
                });
            }
        }
    }
    out
}

/// The first `num_folds` partitions after a seeded shuffle, renumbered
/// from zero.
pub fn make_fold_plans(num_folds: usize, seed: u64) -> Result<Vec<FoldPlan>> {
    if num_folds == 0 || num_folds > NUM_PARTITIONS {
        return Err(Error::Usage(format!(
            "num_folds must be in 1..={NUM_PARTITIONS}, got {num_folds}"
        )));
    }
    let mut plans = all_partitions();
    plans.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    plans.truncate(num_folds);
    for (i, p) in plans.iter_mut().enumerate() {
        p.fold_id = i;
    }
    Ok(plans)
}

/// Assigns windows to (train, val, test) purely by repetition; windows of
/// repetitions outside the plan are dropped.
pub fn split_windows<'a>(windows: &'a [Window], plan: &FoldPlan) -> (Vec<&'a Window>, Vec<&'a Window>, Vec<&'a Window>) {
    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for w in windows {
        match plan.split_of(w.repetition) {
            Some(Split::Train) => train.push(w),
            Some(Split::Val) => val.push(w),
            Some(Split::Test) => test.push(w),
            None => {}
        }
    }
    (train, val, test)
}
