//! The `probe <name>` stages: train the logistic probe(s) of one task on
//! the training split (with class-balancing oversampling) and score the
//! validation split, persisting model CSVs and a metrics JSON.

use super::artifacts::{
    self, BinaryMetrics, MulticlassMetrics, PerWordMetrics, SkippedWord, WordAttraction,
    WordMetric, WordSeries,
};
use super::{Pipeline, PipelineError, Stage, StageOutput};
use crate::embedding::{parse_superpixel_id, EmbeddingStore, StoreRole};
use crate::probes::{
    attraction_coefficient, binary_auc, confusion_matrix, ovo_auc, predict_classes,
    predict_scores, random_oversample, train_logistic_probe, ProbeModel,
};
use crate::tasks::{mwc_pair_input, SomoMode, Split, TaskKind};
use rayon::prelude::*;
use std::collections::BTreeMap;

pub(super) fn run_probe(pipeline: &Pipeline, kind: TaskKind) -> Result<StageOutput, PipelineError> {
    match kind {
        TaskKind::Wc | TaskKind::Mwc => run_per_word_probe(pipeline, kind),
        TaskKind::Sl | TaskKind::CbShape | TaskKind::CbColor => {
            run_multiclass_probe(pipeline, kind)
        }
        TaskKind::SomoClose | TaskKind::SomoFar => run_binary_probe(pipeline, kind),
    }
}

fn to_f64(vector: &[f32]) -> Vec<f64> {
    vector.iter().map(|&v| f64::from(v)).collect()
}

fn load_store(
    pipeline: &Pipeline,
    path: std::path::PathBuf,
    producer: Stage,
) -> Result<EmbeddingStore, PipelineError> {
    pipeline.need(&path, producer)?;
    Ok(EmbeddingStore::read_expect(&path, StoreRole::Representation)?)
}

fn image_vector(
    store: &EmbeddingStore,
    entity: &str,
    what: &str,
) -> Result<Vec<f64>, PipelineError> {
    store
        .get(entity)
        .map(to_f64)
        .ok_or_else(|| PipelineError::Invalid {
            message: format!("no {what} embedding for {entity:?}; rerun the `encode` stage"),
        })
}

/// Split-partitioned probe data: parallel inputs and per-sample payloads.
struct SplitData<T> {
    train_inputs: Vec<Vec<f64>>,
    train_payload: Vec<T>,
    val_inputs: Vec<Vec<f64>>,
    val_payload: Vec<T>,
}

impl<T> SplitData<T> {
    fn new() -> Self {
        Self {
            train_inputs: Vec::new(),
            train_payload: Vec::new(),
            val_inputs: Vec::new(),
            val_payload: Vec::new(),
        }
    }

    fn push(&mut self, split: Split, input: Vec<f64>, payload: T) {
        match split {
            Split::Train => {
                self.train_inputs.push(input);
                self.train_payload.push(payload);
            }
            Split::Val => {
                self.val_inputs.push(input);
                self.val_payload.push(payload);
            }
        }
    }
}

enum WordOutcome {
    Trained {
        auc: f64,
        model: ProbeModel,
        /// Per-distance-bin validation AUC (MWC only; None where a bin
        /// holds a single class).
        series: Vec<Option<f64>>,
    },
    Skipped {
        reason: String,
    },
}

/// Train and evaluate one word's presence probe.
fn probe_one_word(
    pipeline: &Pipeline,
    kind: TaskKind,
    word: usize,
    data: &SplitData<Vec<u8>>,
    val_bins: Option<(&[usize], usize)>,
) -> Result<WordOutcome, PipelineError> {
    let train_flags: Vec<u8> = data.train_payload.iter().map(|f| f[word]).collect();
    let val_flags: Vec<u8> = data.val_payload.iter().map(|f| f[word]).collect();
    let (train_flags, val_flags) = (train_flags.as_slice(), val_flags.as_slice());
    let train_inputs = &data.train_inputs;
    let val_inputs = &data.val_inputs;
    let single = |flags: &[u8]| flags.iter().all(|&f| f == flags[0]);
    if single(train_flags) {
        return Ok(WordOutcome::Skipped {
            reason: format!(
                "single-class train labels (all {})",
                i32::from(train_flags[0])
            ),
        });
    }
    if single(val_flags) {
        return Ok(WordOutcome::Skipped {
            reason: format!("single-class val labels (all {})", i32::from(val_flags[0])),
        });
    }
    let labels: Vec<usize> = train_flags.iter().map(|&f| f as usize).collect();
    let seed = crate::derive_seed(
        pipeline.seed(),
        &format!("probe/{}/{word:02}", kind.as_str()),
    );
    let (balanced_inputs, balanced_labels) = random_oversample(train_inputs, &labels, seed)?;
    let model = train_logistic_probe(
        &balanced_inputs,
        &balanced_labels,
        2,
        &pipeline.config().probe.logistic_params(),
    )?;
    let scores: Vec<f64> = predict_scores(&model, val_inputs)?
        .iter()
        .map(|row| row[1])
        .collect();
    let auc = binary_auc(&scores, val_flags)?;
    let series = match val_bins {
        None => Vec::new(),
        Some((bins, n_bins)) => {
            let mut per_bin = Vec::with_capacity(n_bins);
            for bin in 0..n_bins {
                let indices: Vec<usize> =
                    (0..bins.len()).filter(|&i| bins[i] == bin).collect();
                let bin_flags: Vec<u8> = indices.iter().map(|&i| val_flags[i]).collect();
                if bin_flags.is_empty() || bin_flags.iter().all(|&f| f == bin_flags[0]) {
                    per_bin.push(None);
                } else {
                    let bin_scores: Vec<f64> = indices.iter().map(|&i| scores[i]).collect();
                    per_bin.push(Some(binary_auc(&bin_scores, &bin_flags)?));
                }
            }
            per_bin
        }
    };
    Ok(WordOutcome::Trained { auc, model, series })
}

/// Shared driver for the WC and MWC per-word probes.
fn run_per_word_probe(pipeline: &Pipeline, kind: TaskKind) -> Result<StageOutput, PipelineError> {
    let layout = pipeline.layout();
    let targets_path = layout.task_targets_csv(kind);
    pipeline.need(&targets_path, Stage::Task(kind))?;
    let targets = artifacts::read_word_flag_targets(&targets_path, kind.as_str())?;
    if targets.is_empty() {
        return Err(PipelineError::Invalid {
            message: format!("{} targets file has no entities", kind.as_str()),
        });
    }
    let n_words = targets[0].1.len();
    let flags_of: BTreeMap<&str, &Vec<u8>> = targets
        .iter()
        .map(|(entity, flags)| (entity.as_str(), flags))
        .collect();

    let store = load_store(pipeline, layout.representation_image_store(), Stage::Encode)?;
    let mut data: SplitData<Vec<u8>> = SplitData::new();
    let mut val_bins: Vec<usize> = Vec::new();
    let n_bins = pipeline.config().mwc.n_bins;
    match kind {
        TaskKind::Wc => {
            let split_of = pipeline.manifest().split_of();
            for (entity, flags) in &targets {
                let split =
                    *split_of
                        .get(entity.as_str())
                        .ok_or_else(|| PipelineError::BadArtifact {
                            path: targets_path.clone(),
                            line: 0,
                            message: format!("entity {entity:?} is not a manifest image"),
                        })?;
                data.push(split, image_vector(&store, entity, "image")?, flags.clone());
            }
        }
        TaskKind::Mwc => {
            for split in [Split::Train, Split::Val] {
                let pairs_path = layout.mwc_pairs_csv(split);
                pipeline.need(&pairs_path, Stage::Task(kind))?;
                for pair in artifacts::read_mwc_pairs(&pairs_path)? {
                    let entity = artifacts::pair_entity_id(&pair.image_a, &pair.image_b);
                    let flags = *flags_of.get(entity.as_str()).ok_or_else(|| {
                        PipelineError::BadArtifact {
                            path: targets_path.clone(),
                            line: 0,
                            message: format!("pair {entity:?} has no targets row"),
                        }
                    })?;
                    let a = image_vector(&store, &pair.image_a, "image")?;
                    let b = image_vector(&store, &pair.image_b, "image")?;
                    match split {
                        // Both concatenation orders teach the probe the
                        // pair relation is symmetric.
                        Split::Train => {
                            data.push(split, mwc_pair_input(&a, &b)?, flags.clone());
                            data.push(split, mwc_pair_input(&b, &a)?, flags.clone());
                        }
                        Split::Val => {
                            data.push(split, mwc_pair_input(&a, &b)?, flags.clone());
                            val_bins.push(pair.bin);
                        }
                    }
                }
            }
        }
        _ => unreachable!("not a per-word task"),
    }
    if data.train_inputs.is_empty() || data.val_inputs.is_empty() {
        return Err(PipelineError::Invalid {
            message: format!("{} task has an empty split", kind.as_str()),
        });
    }

    let outcomes: Vec<WordOutcome> = (0..n_words)
        .into_par_iter()
        .map(|word| {
            let bins = (kind == TaskKind::Mwc).then_some((val_bins.as_slice(), n_bins));
            probe_one_word(pipeline, kind, word, &data, bins)
        })
        .collect::<Result<_, _>>()?;

    let mut per_word = Vec::new();
    let mut skipped = Vec::new();
    let mut series = Vec::new();
    let mut attraction = Vec::new();
    let mut model_paths = Vec::new();
    for (word, outcome) in outcomes.iter().enumerate() {
        let word_u32 = word as u32;
        match outcome {
            WordOutcome::Trained {
                auc,
                model,
                series: bins,
            } => {
                per_word.push(WordMetric {
                    word: word_u32,
                    auc: *auc,
                });
                let path = layout.probe_word_model_csv(kind, word_u32);
                let task_label = format!("{}/word_{word:02}", kind.as_str());
                artifacts::write_text(&path, &artifacts::format_probe_model(&task_label, model))?;
                model_paths.push(path);
                if bins.iter().all(|b| b.is_some()) && !bins.is_empty() {
                    let values: Vec<f64> = bins.iter().map(|b| b.unwrap()).collect();
                    attraction.push(WordAttraction {
                        word: word_u32,
                        coefficient: attraction_coefficient(&values)?,
                    });
                    series.push(WordSeries {
                        word: word_u32,
                        auc_per_bin: values,
                    });
                }
            }
            WordOutcome::Skipped { reason } => skipped.push(SkippedWord {
                word: word_u32,
                reason: reason.clone(),
            }),
        }
    }
    if per_word.is_empty() {
        return Err(PipelineError::Invalid {
            message: format!(
                "every {} word probe was skipped; the dataset supports no per-word evaluation",
                kind.as_str()
            ),
        });
    }
    let mean_auc = per_word.iter().map(|m| m.auc).sum::<f64>() / per_word.len() as f64;
    let metrics = PerWordMetrics {
        task: kind.as_str().to_owned(),
        mean_auc,
        per_word,
        skipped,
        series,
        attraction,
    };
    let metrics_path = layout.probe_metrics_json(kind);
    artifacts::write_json(&metrics_path, &metrics)?;

    let mut output = StageOutput::new(format!(
        "{} word probes trained ({} skipped), mean val AUC {:.4}",
        metrics.per_word.len(),
        metrics.skipped.len(),
        metrics.mean_auc,
    ));
    for s in &metrics.skipped {
        output
            .warnings
            .push(format!("word {:02} skipped: {}", s.word, s.reason));
    }
    output.artifacts = model_paths;
    output.artifacts.push(metrics_path);
    Ok(output)
}

fn run_multiclass_probe(pipeline: &Pipeline, kind: TaskKind) -> Result<StageOutput, PipelineError> {
    let layout = pipeline.layout();
    let targets_path = layout.task_targets_csv(kind);
    pipeline.need(&targets_path, Stage::Task(kind))?;
    let targets = artifacts::read_single_label_targets(&targets_path, kind.as_str())?;
    let n_classes = kind.n_classes().expect("multiclass task");

    let split_of = pipeline.manifest().split_of();
    let store = match kind {
        TaskKind::Sl => load_store(pipeline, layout.representation_image_store(), Stage::Encode)?,
        _ => load_store(
            pipeline,
            layout.representation_superpixel_store(),
            Stage::Encode,
        )?,
    };
    let mut data: SplitData<usize> = SplitData::new();
    for (entity, label) in &targets {
        if *label >= n_classes {
            return Err(PipelineError::BadArtifact {
                path: targets_path.clone(),
                line: 0,
                message: format!("label {label} out of range for {n_classes} classes"),
            });
        }
        let image_id = match kind {
            TaskKind::Sl => entity.as_str(),
            _ => {
                parse_superpixel_id(entity)
                    .ok_or_else(|| PipelineError::BadArtifact {
                        path: targets_path.clone(),
                        line: 0,
                        message: format!("entity {entity:?} is not a superpixel id"),
                    })?
                    .0
            }
        };
        let split = *split_of
            .get(image_id)
            .ok_or_else(|| PipelineError::BadArtifact {
                path: targets_path.clone(),
                line: 0,
                message: format!("entity {entity:?} references image {image_id:?} not in the manifest"),
            })?;
        let what = if kind == TaskKind::Sl {
            "image"
        } else {
            "superpixel"
        };
        data.push(split, image_vector(&store, entity, what)?, *label);
    }
    if data.train_inputs.is_empty() || data.val_inputs.is_empty() {
        return Err(PipelineError::Invalid {
            message: format!("{} task has an empty split", kind.as_str()),
        });
    }

    let seed = crate::derive_seed(pipeline.seed(), &format!("probe/{}", kind.as_str()));
    let (balanced_inputs, balanced_labels) =
        random_oversample(&data.train_inputs, &data.train_payload, seed)?;
    let model = train_logistic_probe(
        &balanced_inputs,
        &balanced_labels,
        n_classes,
        &pipeline.config().probe.logistic_params(),
    )?;
    let scores = predict_scores(&model, &data.val_inputs)?;
    let auc = ovo_auc(&scores, &data.val_payload, n_classes)?;
    let predicted = predict_classes(&model, &data.val_inputs)?;
    let confusion = confusion_matrix(&predicted, &data.val_payload, n_classes)?;

    let model_path = layout.probe_model_csv(kind);
    artifacts::write_text(
        &model_path,
        &artifacts::format_probe_model(kind.as_str(), &model),
    )?;
    let metrics = MulticlassMetrics {
        task: kind.as_str().to_owned(),
        ovo_auc: auc,
        n_classes,
        confusion,
        n_train: data.train_inputs.len(),
        n_val: data.val_inputs.len(),
    };
    let metrics_path = layout.probe_metrics_json(kind);
    artifacts::write_json(&metrics_path, &metrics)?;

    let mut output = StageOutput::new(format!(
        "{} train / {} val samples, OVO val AUC {:.4}",
        metrics.n_train, metrics.n_val, metrics.ovo_auc,
    ));
    output.artifacts.extend([model_path, metrics_path]);
    Ok(output)
}

fn run_binary_probe(pipeline: &Pipeline, kind: TaskKind) -> Result<StageOutput, PipelineError> {
    let layout = pipeline.layout();
    let mode = if kind == TaskKind::SomoClose {
        SomoMode::Close
    } else {
        SomoMode::Far
    };
    let targets_path = layout.task_targets_csv(kind);
    pipeline.need(&targets_path, Stage::Task(kind))?;
    let targets = artifacts::read_single_label_targets(&targets_path, kind.as_str())?;
    let provenance_path = layout.somo_provenance_csv(mode);
    pipeline.need(&provenance_path, Stage::Task(kind))?;
    let provenance = artifacts::read_somo_provenance(&provenance_path)?;
    let split_of: BTreeMap<&str, Split> = provenance
        .iter()
        .map(|row| (row.instance_id.as_str(), row.split))
        .collect();
    let store = load_store(pipeline, layout.somo_image_store(mode), Stage::Task(kind))?;

    let mut data: SplitData<usize> = SplitData::new();
    for (entity, label) in &targets {
        let split =
            *split_of
                .get(entity.as_str())
                .ok_or_else(|| PipelineError::BadArtifact {
                    path: targets_path.clone(),
                    line: 0,
                    message: format!("instance {entity:?} has no provenance row"),
                })?;
        data.push(split, image_vector(&store, entity, "instance")?, *label);
    }
    if data.train_inputs.is_empty() || data.val_inputs.is_empty() {
        return Err(PipelineError::Invalid {
            message: format!("{} task has an empty split", kind.as_str()),
        });
    }

    let seed = crate::derive_seed(pipeline.seed(), &format!("probe/{}", kind.as_str()));
    let (balanced_inputs, balanced_labels) =
        random_oversample(&data.train_inputs, &data.train_payload, seed)?;
    let model = train_logistic_probe(
        &balanced_inputs,
        &balanced_labels,
        2,
        &pipeline.config().probe.logistic_params(),
    )?;
    let scores: Vec<f64> = predict_scores(&model, &data.val_inputs)?
        .iter()
        .map(|row| row[1])
        .collect();
    let val_flags: Vec<u8> = data.val_payload.iter().map(|&l| l as u8).collect();
    let auc = binary_auc(&scores, &val_flags)?;

    let model_path = layout.probe_model_csv(kind);
    artifacts::write_text(
        &model_path,
        &artifacts::format_probe_model(kind.as_str(), &model),
    )?;
    let metrics = BinaryMetrics {
        task: kind.as_str().to_owned(),
        auc,
        n_train: data.train_inputs.len(),
        n_val: data.val_inputs.len(),
    };
    let metrics_path = layout.probe_metrics_json(kind);
    artifacts::write_json(&metrics_path, &metrics)?;

    let mut output = StageOutput::new(format!(
        "{} train / {} val instances, val AUC {:.4}",
        metrics.n_train, metrics.n_val, metrics.auc,
    ));
    output.artifacts.extend([model_path, metrics_path]);
    Ok(output)
}
