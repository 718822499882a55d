//! Construction of the five probing-task datasets: WC, SL, CB (shape and
//! color), SOMO (close and far), and MWC with distance binning.

mod bins;
mod dataset;
mod labels;
mod mwc;
mod somo;

pub use bins::{
    equal_frequency_bins, table3_cb_color_bins, table3_cb_shape_bins, table3_sl_bins, BinSpec,
};
pub use dataset::{ProbingDataset, Split, TaskKind, TaskLabels};
pub use labels::{cb_labels, sl_label, wc_labels};
pub use mwc::{mwc_build_pairs, mwc_distance_bins, mwc_pair_input, MwcPair};
pub use somo::{
    build_somo_dataset, somo_admissible_words, somo_paste, somo_pick_replacement,
    somo_select_target, SomoCandidate, SomoDataset, SomoImage, SomoInstance, SomoMode,
    SomoParams, SomoReplacement, SomoSkip, SomoTarget,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("bin edge {index} ({value}) breaks the strictly-increasing finite order")]
    BadEdges { index: usize, value: f64 },
    #[error("need at least {n_bins} values for {n_bins} bins, got {got}")]
    TooFewValues { n_bins: usize, got: usize },
    #[error("only {distinct} distinct values for {n_bins} bins")]
    TooFewDistinct { distinct: usize, n_bins: usize },
    #[error("equal-frequency edge {index} degenerates (repeated value {value})")]
    DegenerateEdges { index: usize, value: f64 },
    #[error("non-finite value at index {index}")]
    NonFiniteValue { index: usize },
    #[error("word {word_id} out of range for {n_words} words")]
    WordOutOfRange { word_id: u32, n_words: usize },
    #[error("no words with candidates other than word {word_id}")]
    NoAdmissiblePopulation { word_id: u32 },
    #[error("label {label} not present in the segmentation")]
    UnknownLabel { label: u32 },
    #[error("quantile {quantile} outside (0, 1)")]
    BadQuantile { quantile: f64 },
    #[error("shape tolerance {tolerance} must be at least 1")]
    BadShapeTolerance { tolerance: f64 },
    #[error("{requested} pairs requested but only {available} distinct pairs of {n_images} images exist")]
    TooManyPairs {
        requested: usize,
        available: usize,
        n_images: usize,
    },
    #[error("need at least {n_bins} pairs for {n_bins} distance bins, got {got}")]
    TooFewPairs { got: usize, n_bins: usize },
    #[error("image {image_id} has no representation in the store")]
    MissingRepresentation { image_id: String },
    #[error("image {image_id} has no sentence")]
    MissingSentence { image_id: String },
    #[error("store holds {found:?}-role embeddings, need {expected:?}")]
    WrongRole {
        expected: crate::embedding::StoreRole,
        found: crate::embedding::StoreRole,
    },
    #[error("parallel dataset fields differ in length: {left} vs {right}")]
    FieldLengthMismatch { left: usize, right: usize },
    #[error(transparent)]
    Imaging(#[from] crate::imaging::ImagingError),
    #[error(transparent)]
    Probe(#[from] crate::probes::ProbeError),
}
