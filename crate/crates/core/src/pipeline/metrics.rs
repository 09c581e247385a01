//! Confusion matrices and the macro / pooled macro accuracy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `counts[true][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(class_names: Vec<String>) -> Self {
        let g = class_names.len();
        ConfusionMatrix {
            class_names,
            counts: vec![vec![0; g]; g],
        }
    }

    /// Classes named `"0"`, `"1"`, ...
    pub fn with_classes(classes: usize) -> Self {
        Self::new((0..classes).map(|c| c.to_string()).collect())
    }

    pub fn from_predictions(classes: usize, truth: &[usize], predicted: &[usize]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::shape("prediction count", truth.len(), predicted.len()));
        }
        let mut cm = Self::with_classes(classes);
        for (&t, &p) in truth.iter().zip(predicted) {
            cm.record(t, p)?;
        }
        Ok(cm)
    }

    pub fn classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn record(&mut self, truth: usize, predicted: usize) -> Result<()> {
        let g = self.classes();
        if truth >= g {
            return Err(Error::Contract(format!("true class {truth} outside 0..{g}")));
        }
        if predicted >= g {
            return Err(Error::Contract(format!("predicted class {predicted} outside 0..{g}")));
        }
        self.counts[truth][predicted] += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn true_positives(&self, class: usize) -> u64 {
        self.counts[class][class]
    }

    pub fn false_negatives(&self, class: usize) -> u64 {
        self.counts[class].iter().sum::<u64>() - self.counts[class][class]
    }

    pub fn false_positives(&self, class: usize) -> u64 {
        self.counts.iter().map(|row| row[class]).sum::<u64>() - self.counts[class][class]
    }

    /// Adds another matrix over the same classes.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.class_names != self.class_names {
            return Err(Error::Usage("confusion matrices cover different class sets".into()));
        }
        for (row, orow) in self.counts.iter_mut().zip(&other.counts) {
            for (a, b) in row.iter_mut().zip(orow) {
                *a += b;
            }
        }
        Ok(())
    }
}

/// Mean per-class recall `(1/G) sum TP_i / (TP_i + FN_i)`.
pub fn macro_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    pooled_macro_accuracy(std::slice::from_ref(cm))
}

/// Macro accuracy from TP and FN totals summed over folds before dividing.
pub fn pooled_macro_accuracy(fold_cms: &[ConfusionMatrix]) -> Result<f64> {
    let first = fold_cms
        .first()
        .ok_or_else(|| Error::Usage("no confusion matrices to pool".into()))?;
    let g = first.classes();
    if g == 0 {
        return Err(Error::Usage("confusion matrix has no classes".into()));
    }
    if fold_cms.iter().any(|cm| cm.class_names != first.class_names) {
        return Err(Error::Usage("folds cover different class sets".into()));
    }
    let mut sum = 0.0;
    for class in 0..g {
        let tp: u64 = fold_cms.iter().map(|cm| cm.true_positives(class)).sum();
        let fn_: u64 = fold_cms.iter().map(|cm| cm.false_negatives(class)).sum();
        if tp + fn_ == 0 {
            return Err(Error::Usage(format!(
                "class {} has no true examples; macro accuracy is undefined",
                first.class_names[class]
            )));
        }
        sum += tp as f64 / (tp + fn_) as f64;
    }
    Ok(sum / g as f64)
}
