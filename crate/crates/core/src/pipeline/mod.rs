//! Dataset ingestion, windowing, repetition folds and evaluation.

pub mod dataset;
pub mod folds;
pub mod metrics;
pub mod windows;

pub use dataset::{read_dataset, write_dataset, Dataset, Manifest};
pub use folds::{make_fold_plans, split_windows, FoldPlan};
pub use metrics::{macro_accuracy, pooled_macro_accuracy, ConfusionMatrix};
pub use windows::{extract_all, extract_windows, Recording, Window, WindowConfig};

use crate::error::Result;

/// Confusion counts of `classifier` over `test`.
pub fn evaluate<'a>(
    class_names: &[String],
    test: impl IntoIterator<Item = &'a Window>,
    mut classifier: impl FnMut(&Window) -> Result<usize>,
) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::new(class_names.to_vec());
    for w in test {
        let predicted = classifier(w)?;
        cm.record(w.gesture, predicted)?;
    }
    Ok(cm)
}
