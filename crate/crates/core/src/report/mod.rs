//! Report assembly: the headline AUC table, per-word files, per-feature
//! aggregates, confusion matrices, and plot-ready distance-bin series.

mod annotation;
mod tables;

pub use annotation::{Feature, FeatureAnnotation};
pub use tables::{
    aggregate_by_feature, confusion_table, feature_table, mwc_series_table, per_word_table,
    report_table, FeatureAggregate, ReportInputs,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("line {line}: unknown feature {token:?} (expected one of brightness, color, texture, lines, shape, form)")]
    UnknownFeature { token: String, line: usize },
    #[error("line {line}: expected `word_id,feature`, got {content:?}")]
    BadAnnotationRow { line: usize, content: String },
    #[error("annotated word {word_id} out of range for {n_words} per-word values")]
    WordOutOfRange { word_id: u32, n_words: usize },
    #[error("representation name {name:?} contains a CSV delimiter")]
    BadName { name: String },
    #[error("no per-word values for the {task} column")]
    EmptyMetric { task: &'static str },
}
