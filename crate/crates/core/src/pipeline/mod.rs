//! The staged, resumable pipeline: segmentation through report emission.
//!
//! Every stage reads its inputs from on-disk artifacts and writes its
//! outputs back, so a fresh end-to-end run and any sequence of staged
//! invocations produce byte-identical trees. A stage whose outputs all
//! exist is skipped; a stage whose inputs are missing names the stage to
//! run first. The run log pins the seed, config hash, and manifest hash
//! so an output directory can never silently mix incompatible runs.

pub mod artifacts;
mod config;
mod dict;
mod encode;
mod layout;
mod manifest;
mod probestage;
mod reporting;
mod segment;
mod taskgen;

pub use config::{
    BinsConfig, Config, ConfigError, DataConfig, DictionaryConfig, MwcConfig, PatchConfig,
    ProbeConfig, ReportConfig, Resolution, SegmentationConfig, SentencesConfig, SomoConfig,
};
pub use layout::Layout;
pub use manifest::{Manifest, ManifestEntry, ManifestError};

use crate::tasks::TaskKind;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("missing {artifact}; run the `{producer}` stage first")]
    MissingDependency { producer: String, artifact: PathBuf },
    #[error(
        "output directory {out} holds a run with a different {what} \
         (found {found}, current {expected}); use a fresh --out"
    )]
    StaleOutDir {
        out: PathBuf,
        what: &'static str,
        expected: String,
        found: String,
    },
    #[error("{path}:{line}: {message}")]
    BadArtifact {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{message}")]
    Invalid { message: String },
    #[error(transparent)]
    Imaging(#[from] crate::imaging::ImagingError),
    #[error(transparent)]
    Embedding(#[from] crate::embedding::EmbeddingError),
    #[error(transparent)]
    Store(#[from] crate::embedding::StoreError),
    #[error(transparent)]
    Dictionary(#[from] crate::dictionary::DictionaryError),
    #[error(transparent)]
    Task(#[from] crate::tasks::TaskError),
    #[error(transparent)]
    Probe(#[from] crate::probes::ProbeError),
    #[error(transparent)]
    Report(#[from] crate::report::ReportError),
}

/// One pipeline stage, in dependency order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Segment,
    Stats,
    Encode,
    Dict,
    Sentences,
    Task(TaskKind),
    Probe(TaskKind),
    Report,
}

impl Stage {
    /// Every stage in execution order: segment, stats, encode, dict,
    /// sentences, the seven task builders, the seven probes, report.
    pub fn all() -> Vec<Stage> {
        let mut stages = vec![
            Stage::Segment,
            Stage::Stats,
            Stage::Encode,
            Stage::Dict,
            Stage::Sentences,
        ];
        stages.extend(TaskKind::ALL.map(Stage::Task));
        stages.extend(TaskKind::ALL.map(Stage::Probe));
        stages.push(Stage::Report);
        stages
    }

    pub fn name(&self) -> String {
        match self {
            Stage::Segment => "segment".into(),
            Stage::Stats => "stats".into(),
            Stage::Encode => "encode".into(),
            Stage::Dict => "dict".into(),
            Stage::Sentences => "sentences".into(),
            Stage::Task(kind) => format!("task {}", kind.as_str()),
            Stage::Probe(kind) => format!("probe {}", kind.as_str()),
            Stage::Report => "report".into(),
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name())
    }
}

/// What `run_stage` reports back to the caller.
#[derive(Debug, Clone)]
pub struct StageOutcome {
    pub stage: Stage,
    /// True when every output already existed and nothing was done.
    pub skipped: bool,
    pub detail: String,
    pub warnings: Vec<String>,
}

/// What a stage implementation hands back for the run log.
pub(crate) struct StageOutput {
    pub(crate) detail: String,
    pub(crate) warnings: Vec<String>,
    pub(crate) artifacts: Vec<PathBuf>,
}

impl StageOutput {
    pub(crate) fn new(detail: impl Into<String>) -> Self {
        Self {
            detail: detail.into(),
            warnings: Vec::new(),
            artifacts: Vec::new(),
        }
    }
}

/// Machine-readable record of a run: identity (version, seed, hashes)
/// plus one entry per completed stage. No timestamps, so reruns are
/// byte-identical.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunLog {
    pub toolkit_version: String,
    pub seed: u64,
    pub config_sha256: String,
    pub manifest_sha256: String,
    pub stages: BTreeMap<String, StageRecord>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StageRecord {
    /// Output paths relative to the run directory.
    pub artifacts: Vec<String>,
    pub detail: String,
    pub warnings: Vec<String>,
}

/// A configured run bound to a manifest and an output directory.
pub struct Pipeline {
    config: Config,
    manifest: Manifest,
    manifest_sha256: String,
    layout: Layout,
    seed: u64,
}

impl Pipeline {
    /// Validate the config, load the manifest it points to, and bind the
    /// run to `out` and `seed`.
    pub fn new(config: Config, out: impl Into<PathBuf>, seed: u64) -> Result<Self, PipelineError> {
        config.validate()?;
        let manifest_path = config.data.manifest.clone().ok_or(PipelineError::Invalid {
            message: "config sets no data.manifest".into(),
        })?;
        let bytes = std::fs::read(&manifest_path).map_err(|e| PipelineError::Io {
            path: manifest_path.clone(),
            source: e,
        })?;
        let manifest_sha256 = hex(&Sha256::digest(&bytes));
        let text = String::from_utf8(bytes).map_err(|_| PipelineError::Invalid {
            message: format!("manifest {} is not UTF-8", manifest_path.display()),
        })?;
        let base = manifest_path.parent().unwrap_or_else(|| std::path::Path::new(""));
        let manifest = Manifest::parse(&text, base)?;
        Ok(Self {
            config,
            manifest,
            manifest_sha256,
            layout: Layout::new(out),
            seed,
        })
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Run one stage: skip it when its outputs exist, otherwise execute
    /// it and record it in the run log.
    pub fn run_stage(&self, stage: Stage) -> Result<StageOutcome, PipelineError> {
        let mut log = self.ensure_context()?;
        if self.outputs_present(stage) {
            return Ok(StageOutcome {
                stage,
                skipped: true,
                detail: "outputs present".into(),
                warnings: Vec::new(),
            });
        }
        let output = match stage {
            Stage::Segment => segment::run_segment(self)?,
            Stage::Stats => segment::run_stats(self)?,
            Stage::Encode => encode::run_encode(self)?,
            Stage::Dict => dict::run_dict(self)?,
            Stage::Sentences => dict::run_sentences(self)?,
            Stage::Task(kind) => taskgen::run_task(self, kind)?,
            Stage::Probe(kind) => probestage::run_probe(self, kind)?,
            Stage::Report => reporting::run_report(self)?,
        };
        let record = StageRecord {
            artifacts: output
                .artifacts
                .iter()
                .map(|p| {
                    p.strip_prefix(self.layout.out())
                        .unwrap_or(p)
                        .to_string_lossy()
                        .into_owned()
                })
                .collect(),
            detail: output.detail.clone(),
            warnings: output.warnings.clone(),
        };
        log.stages.insert(stage.name(), record);
        artifacts::write_json(&self.layout.run_log(), &log)?;
        Ok(StageOutcome {
            stage,
            skipped: false,
            detail: output.detail,
            warnings: output.warnings,
        })
    }

    /// Run every stage in order.
    pub fn run_all(&self) -> Result<Vec<StageOutcome>, PipelineError> {
        Stage::all().into_iter().map(|s| self.run_stage(s)).collect()
    }

    fn outputs_present(&self, stage: Stage) -> bool {
        match stage {
            Stage::Segment => segment::segment_present(self),
            Stage::Stats => self.layout.stats_csv().exists(),
            Stage::Encode => encode::encode_present(self),
            Stage::Dict => {
                self.layout.concepts_csv().exists()
                    && self.layout.concept_centroid_store().exists()
            }
            Stage::Sentences => {
                self.layout.sentences_csv().exists() && self.layout.cooccurrence_csv().exists()
            }
            Stage::Task(kind) => taskgen::task_present(self, kind),
            Stage::Probe(kind) => self.layout.probe_metrics_json(kind).exists(),
            Stage::Report => self.layout.report_csv().exists(),
        }
    }

    /// Load the run log, creating it (plus the config snapshot) on first
    /// use, and reject output directories from an incompatible run.
    fn ensure_context(&self) -> Result<RunLog, PipelineError> {
        let log_path = self.layout.run_log();
        let version = env!("CARGO_PKG_VERSION");
        let config_sha256 = self.config.sha256();
        if log_path.exists() {
            let log: RunLog = artifacts::read_json(&log_path)?;
            let checks: [(&'static str, &str, &str); 3] = [
                ("toolkit version", version, &log.toolkit_version),
                ("config", &config_sha256, &log.config_sha256),
                ("manifest", &self.manifest_sha256, &log.manifest_sha256),
            ];
            for (what, expected, found) in checks {
                if expected != found {
                    return Err(PipelineError::StaleOutDir {
                        out: self.layout.out().to_owned(),
                        what,
                        expected: expected.to_owned(),
                        found: found.to_owned(),
                    });
                }
            }
            if log.seed != self.seed {
                return Err(PipelineError::StaleOutDir {
                    out: self.layout.out().to_owned(),
                    what: "seed",
                    expected: self.seed.to_string(),
                    found: log.seed.to_string(),
                });
            }
            Ok(log)
        } else {
            std::fs::create_dir_all(self.layout.out()).map_err(|e| PipelineError::Io {
                path: self.layout.out().to_owned(),
                source: e,
            })?;
            artifacts::write_text(&self.layout.config_snapshot(), &self.config.to_toml())?;
            let log = RunLog {
                toolkit_version: version.to_owned(),
                seed: self.seed,
                config_sha256,
                manifest_sha256: self.manifest_sha256.clone(),
                stages: BTreeMap::new(),
            };
            artifacts::write_json(&log_path, &log)?;
            Ok(log)
        }
    }

    /// Error unless `artifact` exists, naming the stage that makes it.
    pub(crate) fn need(
        &self,
        artifact: &std::path::Path,
        producer: Stage,
    ) -> Result<(), PipelineError> {
        if artifact.exists() {
            Ok(())
        } else {
            Err(PipelineError::MissingDependency {
                producer: producer.name(),
                artifact: artifact.to_owned(),
            })
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
