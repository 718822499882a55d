//! Canonical artifact paths under the output directory.
//!
//! Every stage reads its inputs and writes its outputs through these
//! helpers, so the on-disk layout is defined in exactly one place.

use crate::tasks::{SomoMode, Split, TaskKind};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone)]
pub struct Layout {
    out: PathBuf,
}

impl Layout {
    pub fn new(out: impl Into<PathBuf>) -> Layout {
        Layout { out: out.into() }
    }

    pub fn out(&self) -> &Path {
        &self.out
    }

    /// Machine-readable record of seeds, versions, and parameter hashes.
    pub fn run_log(&self) -> PathBuf {
        self.out.join("run_log.json")
    }

    /// The effective configuration, serialized with every key explicit.
    pub fn config_snapshot(&self) -> PathBuf {
        self.out.join("config.toml")
    }

    pub fn segmentation_dir(&self) -> PathBuf {
        self.out.join("segmentations")
    }

    /// 16-bit label map for one (image, resolution).
    pub fn segmentation(&self, image_id: &str, tag: &str) -> PathBuf {
        self.segmentation_dir().join(format!("{image_id}.{tag}.png"))
    }

    pub fn stats_csv(&self) -> PathBuf {
        self.out.join("stats").join("stats.csv")
    }

    pub fn embeddings_dir(&self) -> PathBuf {
        self.out.join("embeddings")
    }

    /// Superpixel embeddings used to build the dictionary.
    pub fn dictionary_superpixel_store(&self) -> PathBuf {
        self.embeddings_dir().join("dictionary_superpixels.vpeb")
    }

    /// Superpixel embeddings probes run on (content-bin inputs).
    pub fn representation_superpixel_store(&self) -> PathBuf {
        self.embeddings_dir().join("representation_superpixels.vpeb")
    }

    /// Whole-image embeddings probes run on (WC, SL, MWC inputs).
    pub fn representation_image_store(&self) -> PathBuf {
        self.embeddings_dir().join("representation_images.vpeb")
    }

    /// Embeddings of the altered/clean images of one SOMO mode.
    pub fn somo_image_store(&self, mode: SomoMode) -> PathBuf {
        self.embeddings_dir()
            .join(format!("representation_somo_{}.vpeb", mode.as_str()))
    }

    pub fn dictionary_dir(&self) -> PathBuf {
        self.out.join("dictionary")
    }

    /// `word_id,concept_index,class_label,member_count,importance` rows.
    pub fn concepts_csv(&self) -> PathBuf {
        self.dictionary_dir().join("concepts.csv")
    }

    /// Concept and word centroids as a dictionary-role embedding store.
    pub fn concept_centroid_store(&self) -> PathBuf {
        self.dictionary_dir().join("concept_centroids.vpeb")
    }

    pub fn sentences_dir(&self) -> PathBuf {
        self.out.join("sentences")
    }

    /// `image_id,resolution,label,word_id` rows covering every superpixel.
    pub fn sentences_csv(&self) -> PathBuf {
        self.sentences_dir().join("sentences.csv")
    }

    /// Train-split word co-occurrence counts.
    pub fn cooccurrence_csv(&self) -> PathBuf {
        self.sentences_dir().join("cooccurrence.csv")
    }

    pub fn tasks_dir(&self) -> PathBuf {
        self.out.join("tasks")
    }

    /// `entity_id,task,label[,label_index]` rows of one probing task.
    pub fn task_targets_csv(&self, task: TaskKind) -> PathBuf {
        self.tasks_dir().join(format!("{}.targets.csv", task.as_str()))
    }

    /// The bin edges a binned task was labeled with.
    pub fn task_bins_csv(&self, task: TaskKind) -> PathBuf {
        self.tasks_dir().join(format!("{}.bins.csv", task.as_str()))
    }

    pub fn somo_dir(&self, mode: SomoMode) -> PathBuf {
        self.tasks_dir().join(format!("somo_{}", mode.as_str()))
    }

    pub fn somo_images_dir(&self, mode: SomoMode) -> PathBuf {
        self.somo_dir(mode).join("images")
    }

    pub fn somo_image_png(&self, mode: SomoMode, instance_id: &str) -> PathBuf {
        self.somo_images_dir(mode).join(format!("{instance_id}.png"))
    }

    /// Target/replacement provenance of every SOMO instance.
    pub fn somo_provenance_csv(&self, mode: SomoMode) -> PathBuf {
        self.somo_dir(mode).join("provenance.csv")
    }

    /// Base images skipped during SOMO generation, with reasons.
    pub fn somo_skipped_csv(&self, mode: SomoMode) -> PathBuf {
        self.somo_dir(mode).join("skipped.csv")
    }

    /// Sampled image pairs of one split: `image_a,image_b,distance,bin`.
    pub fn mwc_pairs_csv(&self, split: Split) -> PathBuf {
        self.tasks_dir()
            .join(format!("mwc_{}.pairs.csv", split.as_str()))
    }

    pub fn probes_dir(&self) -> PathBuf {
        self.out.join("probes")
    }

    /// Model of a single-classifier task (SL, CB, SOMO).
    pub fn probe_model_csv(&self, task: TaskKind) -> PathBuf {
        self.probes_dir().join(task.as_str()).join("model.csv")
    }

    /// Model of one per-word classifier (WC, MWC).
    pub fn probe_word_model_csv(&self, task: TaskKind, word: u32) -> PathBuf {
        self.probes_dir()
            .join(task.as_str())
            .join(format!("word_{word:02}.model.csv"))
    }

    /// Validation metrics of one task's probe(s).
    pub fn probe_metrics_json(&self, task: TaskKind) -> PathBuf {
        self.probes_dir()
            .join(format!("{}.metrics.json", task.as_str()))
    }

    pub fn report_dir(&self) -> PathBuf {
        self.out.join("report")
    }

    /// The headline one-row-per-representation table.
    pub fn report_csv(&self) -> PathBuf {
        self.report_dir().join("report.csv")
    }

    pub fn wc_per_word_csv(&self) -> PathBuf {
        self.report_dir().join("wc_per_word.csv")
    }

    pub fn mwc_per_word_csv(&self) -> PathBuf {
        self.report_dir().join("mwc_per_word.csv")
    }

    /// Row-normalized confusion matrix of one multiclass task.
    pub fn confusion_csv(&self, task: TaskKind) -> PathBuf {
        self.report_dir()
            .join(format!("{}_confusion.csv", task.as_str()))
    }

    /// Per-word MWC AUC against the distance-bin index.
    pub fn mwc_series_csv(&self) -> PathBuf {
        self.report_dir().join("mwc_series.csv")
    }

    /// Per-word attraction coefficients.
    pub fn attraction_csv(&self) -> PathBuf {
        self.report_dir().join("attraction.csv")
    }

    /// Per-feature aggregation of the WC per-word AUCs.
    pub fn wc_by_feature_csv(&self) -> PathBuf {
        self.report_dir().join("wc_by_feature.csv")
    }

    /// Per-feature aggregation of the attraction coefficients.
    pub fn attraction_by_feature_csv(&self) -> PathBuf {
        self.report_dir().join("attraction_by_feature.csv")
    }
}
