//! Pipeline configuration: one TOML file with a section per stage.
//!
//! Every tunable has an explicit default, and serializing a [`Config`]
//! spells each one out, so the snapshot stored next to a run's artifacts
//! is always complete.

use crate::embedding::FillPolicy;
use crate::probes::LogisticParams;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("invalid config: {message}")]
    Invalid { message: String },
}

fn invalid(message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        message: message.into(),
    }
}

/// Input-data section: where the image manifest lives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// TSV manifest of `image_id\tpath\tclass\tsplit` records. Relative
    /// paths are resolved against the config file's directory.
    pub manifest: Option<PathBuf>,
}

/// One named segmentation resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resolution {
    pub tag: String,
    pub n_segments: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationConfig {
    /// Images are resized (squashed) to this square side before
    /// segmentation so geometry statistics are comparable across images.
    pub working_size: usize,
    /// SLIC compactness weight `m`.
    pub compactness: f64,
    /// SLIC assignment/update iterations.
    pub max_iter: usize,
    /// Minimum connected-component size as a fraction of the average
    /// segment area; smaller fragments are merged away.
    pub min_size_factor: f64,
    pub resolutions: Vec<Resolution>,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            working_size: 224,
            compactness: 10.0,
            max_iter: 10,
            min_size_factor: 0.25,
            resolutions: vec![
                Resolution {
                    tag: "coarse".into(),
                    n_segments: 15,
                },
                Resolution {
                    tag: "medium".into(),
                    n_segments: 50,
                },
                Resolution {
                    tag: "fine".into(),
                    n_segments: 80,
                },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatchConfig {
    /// Side length of the square canvas superpixel crops are pasted onto.
    pub size: usize,
    /// Background fill for pixels outside the superpixel mask:
    /// `mean-gray` or `dataset-mean`.
    pub fill: String,
}

impl Default for PatchConfig {
    fn default() -> Self {
        Self {
            size: 224,
            fill: "mean-gray".into(),
        }
    }
}

impl PatchConfig {
    /// The fill policy, given the dataset channel means computed over the
    /// manifest's working-size images (used only for `dataset-mean`).
    pub fn fill_policy(&self, dataset_mean: [u8; 3]) -> Result<FillPolicy, ConfigError> {
        match self.fill.as_str() {
            "mean-gray" => Ok(FillPolicy::MeanGray),
            "dataset-mean" => Ok(FillPolicy::DatasetMean(dataset_mean)),
            other => Err(invalid(format!(
                "patch.fill must be \"mean-gray\" or \"dataset-mean\", got {other:?}"
            ))),
        }
    }

    /// Whether the fill policy needs the dataset channel means.
    pub fn needs_dataset_mean(&self) -> bool {
        self.fill == "dataset-mean"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DictionaryConfig {
    /// Clusters per class in the concept-building stage.
    pub k_per_class: usize,
    /// Concepts with fewer members are dropped before ranking.
    pub min_frequency: usize,
    /// Fraction of frequency-filtered concepts kept by importance rank.
    pub keep_fraction: f64,
    /// Number of visual words in the global dictionary.
    pub n_words: usize,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
}

impl Default for DictionaryConfig {
    fn default() -> Self {
        Self {
            k_per_class: 25,
            min_frequency: 10,
            keep_fraction: 1.0 / 3.0,
            n_words: 50,
            kmeans_max_iter: 100,
            kmeans_tol: 1e-6,
        }
    }
}

impl DictionaryConfig {
    /// Concepts to keep after the frequency filter: `keep_fraction` of the
    /// survivors, but never fewer than `n_words` (the global clustering
    /// needs at least one concept per word) and never more than survive.
    pub fn keep_count(&self, survivors: usize) -> usize {
        let want = (self.keep_fraction * survivors as f64).round() as usize;
        want.max(self.n_words).min(survivors)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SentencesConfig {
    /// Which resolutions contribute to a sentence: `union` or one
    /// resolution tag.
    pub scope: String,
}

impl Default for SentencesConfig {
    fn default() -> Self {
        Self {
            scope: "union".into(),
        }
    }
}

impl SentencesConfig {
    pub fn scope(&self) -> crate::dictionary::SentenceScope {
        if self.scope == "union" {
            crate::dictionary::SentenceScope::Union
        } else {
            crate::dictionary::SentenceScope::Single(self.scope.clone())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BinsConfig {
    /// Where the 6-class bin edges come from: `table3` (the published
    /// defaults) or `equal-frequency` (train-split quantiles).
    pub source: String,
}

impl Default for BinsConfig {
    fn default() -> Self {
        Self {
            source: "table3".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SomoConfig {
    /// Resolution tag whose superpixels are targeted and transplanted.
    pub resolution: String,
    /// Co-occurrence quantile defining admissible replacement words.
    pub quantile: f64,
    /// Admissible area ratio between replacement and target.
    pub shape_tolerance: f64,
    /// Std of the center-biased target sampler, as a fraction of each
    /// image dimension.
    pub sigma_frac: f64,
}

impl Default for SomoConfig {
    fn default() -> Self {
        Self {
            resolution: "medium".into(),
            quantile: 0.25,
            shape_tolerance: 2.0,
            sigma_frac: 0.25,
        }
    }
}

impl SomoConfig {
    pub fn params(&self) -> crate::tasks::SomoParams {
        crate::tasks::SomoParams {
            quantile: self.quantile,
            shape_tolerance: self.shape_tolerance,
            sigma_frac: self.sigma_frac,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MwcConfig {
    /// Image pairs sampled from the train split.
    pub train_pairs: usize,
    /// Image pairs sampled from the validation split.
    pub val_pairs: usize,
    /// Equal-count cosine-distance bins.
    pub n_bins: usize,
}

impl Default for MwcConfig {
    fn default() -> Self {
        Self {
            train_pairs: 2000,
            val_pairs: 500,
            n_bins: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    /// Inverse L2 regularization strength.
    pub c: f64,
    /// Convergence threshold on the gradient max-norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-6,
            max_iter: 1000,
        }
    }
}

impl ProbeConfig {
    pub fn logistic_params(&self) -> LogisticParams {
        LogisticParams {
            c: self.c,
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Row label for this run's representation set.
    pub representation: String,
    /// Optional `word_id,feature` CSV enabling per-feature aggregation.
    /// Relative paths are resolved against the config file's directory.
    pub annotation: Option<PathBuf>,
    /// Optional externally measured target-task accuracy; never computed.
    pub target: Option<f64>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            representation: "toy".into(),
            annotation: None,
            target: None,
        }
    }
}

/// The full pipeline configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub data: DataConfig,
    pub segmentation: SegmentationConfig,
    pub patch: PatchConfig,
    pub dictionary: DictionaryConfig,
    pub sentences: SentencesConfig,
    pub bins: BinsConfig,
    pub somo: SomoConfig,
    pub mwc: MwcConfig,
    pub probe: ProbeConfig,
    pub report: ReportConfig,
}

impl Config {
    /// Read and validate a TOML config file.
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        let config: Config = toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_owned(),
            source,
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Resolve the relative paths the config may carry against `base`
    /// (normally the config file's directory).
    pub fn resolve_paths(&mut self, base: &Path) {
        if let Some(manifest) = &self.data.manifest {
            if manifest.is_relative() {
                self.data.manifest = Some(base.join(manifest));
            }
        }
        if let Some(annotation) = &self.report.annotation {
            if annotation.is_relative() {
                self.report.annotation = Some(base.join(annotation));
            }
        }
    }

    /// Canonical TOML form with every key explicit.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical TOML form; recorded in the run log.
    pub fn sha256(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let seg = &self.segmentation;
        if seg.working_size < 8 {
            return Err(invalid("segmentation.working_size must be at least 8"));
        }
        if seg.compactness <= 0.0 || seg.compactness.is_nan() {
            return Err(invalid("segmentation.compactness must be positive"));
        }
        if seg.max_iter == 0 {
            return Err(invalid("segmentation.max_iter must be at least 1"));
        }
        if !(seg.min_size_factor > 0.0 && seg.min_size_factor <= 1.0) {
            return Err(invalid("segmentation.min_size_factor must be in (0, 1]"));
        }
        if seg.resolutions.is_empty() {
            return Err(invalid("segmentation.resolutions must not be empty"));
        }
        let mut tags = BTreeSet::new();
        for r in &seg.resolutions {
            if r.tag.is_empty()
                || r.tag
                    .chars()
                    .any(|c| !(c.is_ascii_alphanumeric() || c == '_' || c == '-'))
            {
                return Err(invalid(format!(
                    "resolution tag {:?} must be non-empty and use only [A-Za-z0-9_-]",
                    r.tag
                )));
            }
            if !tags.insert(r.tag.as_str()) {
                return Err(invalid(format!("duplicate resolution tag {:?}", r.tag)));
            }
            let max_segments = seg.working_size * seg.working_size / 4;
            if r.n_segments < 2 || r.n_segments > max_segments {
                return Err(invalid(format!(
                    "resolution {:?}: n_segments must be in [2, {max_segments}] \
                     for working size {}",
                    r.tag, seg.working_size
                )));
            }
        }
        if self.patch.size < 8 {
            return Err(invalid("patch.size must be at least 8"));
        }
        self.patch.fill_policy([0, 0, 0])?;
        let dict = &self.dictionary;
        if dict.k_per_class == 0 {
            return Err(invalid("dictionary.k_per_class must be at least 1"));
        }
        if dict.n_words == 0 {
            return Err(invalid("dictionary.n_words must be at least 1"));
        }
        if !(dict.keep_fraction > 0.0 && dict.keep_fraction <= 1.0) {
            return Err(invalid("dictionary.keep_fraction must be in (0, 1]"));
        }
        if dict.kmeans_tol <= 0.0 || dict.kmeans_tol.is_nan() {
            return Err(invalid("dictionary.kmeans_tol must be positive"));
        }
        if dict.kmeans_max_iter == 0 {
            return Err(invalid("dictionary.kmeans_max_iter must be at least 1"));
        }
        if self.sentences.scope != "union" && !tags.contains(self.sentences.scope.as_str()) {
            return Err(invalid(format!(
                "sentences.scope must be \"union\" or a configured resolution tag, got {:?}",
                self.sentences.scope
            )));
        }
        if self.bins.source != "table3" && self.bins.source != "equal-frequency" {
            return Err(invalid(format!(
                "bins.source must be \"table3\" or \"equal-frequency\", got {:?}",
                self.bins.source
            )));
        }
        if !tags.contains(self.somo.resolution.as_str()) {
            return Err(invalid(format!(
                "somo.resolution {:?} is not a configured resolution tag",
                self.somo.resolution
            )));
        }
        if !(self.somo.quantile > 0.0 && self.somo.quantile < 1.0) {
            return Err(invalid("somo.quantile must be in (0, 1)"));
        }
        if self.somo.shape_tolerance < 1.0 || self.somo.shape_tolerance.is_nan() {
            return Err(invalid("somo.shape_tolerance must be at least 1"));
        }
        if self.somo.sigma_frac <= 0.0 || self.somo.sigma_frac.is_nan() {
            return Err(invalid("somo.sigma_frac must be positive"));
        }
        if self.mwc.train_pairs == 0 {
            return Err(invalid("mwc.train_pairs must be at least 1"));
        }
        if self.mwc.n_bins < 2 {
            return Err(invalid("mwc.n_bins must be at least 2"));
        }
        if self.mwc.val_pairs < self.mwc.n_bins {
            return Err(invalid(format!(
                "mwc.val_pairs ({}) must be at least mwc.n_bins ({})",
                self.mwc.val_pairs, self.mwc.n_bins
            )));
        }
        if self.probe.c <= 0.0 || self.probe.c.is_nan() {
            return Err(invalid("probe.c must be positive"));
        }
        if self.probe.tol <= 0.0 || self.probe.tol.is_nan() {
            return Err(invalid("probe.tol must be positive"));
        }
        if self.probe.max_iter == 0 {
            return Err(invalid("probe.max_iter must be at least 1"));
        }
        let rep = &self.report.representation;
        if rep.is_empty() || rep.contains(',') || rep.contains('\n') || rep.contains('\r') {
            return Err(invalid(
                "report.representation must be non-empty and free of commas and newlines",
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid_and_round_trips() {
        let config = Config::default();
        config.validate().expect("default config valid");
        let text = config.to_toml();
        let back: Config = toml::from_str(&text).expect("round trip parses");
        assert_eq!(back, config);
        // Every stage section appears explicitly in the serialized form.
        for section in [
            "[data]",
            "[segmentation]",
            "[patch]",
            "[dictionary]",
            "[sentences]",
            "[bins]",
            "[somo]",
            "[mwc]",
            "[probe]",
            "[report]",
        ] {
            assert!(text.contains(section), "missing {section} in:\n{text}");
        }
        assert!(text.contains("n_words = 50"));
        assert!(text.contains("working_size = 224"));
    }

    #[test]
    fn partial_toml_fills_defaults() {
        let config: Config = toml::from_str(
            "[dictionary]\nn_words = 8\n\n[segmentation]\nworking_size = 64\n",
        )
        .expect("parses");
        assert_eq!(config.dictionary.n_words, 8);
        assert_eq!(config.dictionary.k_per_class, 25);
        assert_eq!(config.segmentation.working_size, 64);
        assert_eq!(config.segmentation.resolutions.len(), 3);
        assert_eq!(config.mwc.n_bins, 10);
        config.validate().expect("valid");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let result: Result<Config, _> = toml::from_str("[dictionary]\nn_wordz = 8\n");
        assert!(result.is_err());
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut config = Config::default();
        config.somo.resolution = "ultra".into();
        assert!(config.validate().is_err());

        let mut config = Config::default();
        config.bins.source = "guess".into();
        assert!(config.validate().is_err());

        let mut config = Config::default();
        config.mwc.val_pairs = 5; // below n_bins = 10
        assert!(config.validate().is_err());

        let mut config = Config::default();
        config.segmentation.resolutions[0].n_segments = 1;
        assert!(config.validate().is_err());

        let mut config = Config::default();
        config.report.representation = "a,b".into();
        assert!(config.validate().is_err());
    }

    #[test]
    fn keep_count_clamps_between_n_words_and_survivors() {
        let dict = DictionaryConfig {
            n_words: 50,
            keep_fraction: 1.0 / 3.0,
            ..DictionaryConfig::default()
        };
        assert_eq!(dict.keep_count(6000), 2000);
        assert_eq!(dict.keep_count(90), 50); // a third would be 30 < n_words
        assert_eq!(dict.keep_count(40), 40); // fewer survivors than words
    }

    #[test]
    fn resolve_paths_joins_relative_against_base() {
        let mut config = Config::default();
        config.data.manifest = Some(PathBuf::from("manifest.tsv"));
        config.report.annotation = Some(PathBuf::from("/abs/annotation.csv"));
        config.resolve_paths(Path::new("/data/run1"));
        assert_eq!(
            config.data.manifest.as_deref(),
            Some(Path::new("/data/run1/manifest.tsv"))
        );
        assert_eq!(
            config.report.annotation.as_deref(),
            Some(Path::new("/abs/annotation.csv"))
        );
    }

    #[test]
    fn sha256_tracks_content() {
        let a = Config::default();
        let mut b = Config::default();
        assert_eq!(a.sha256(), b.sha256());
        b.dictionary.n_words = 49;
        assert_ne!(a.sha256(), b.sha256());
        assert_eq!(a.sha256().len(), 64);
    }
}
