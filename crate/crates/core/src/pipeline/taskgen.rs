//! The `task <name>` stages: build the probing-task datasets (targets,
//! bin edges, SOMO instances and their encodings, MWC pairs) from the
//! segmentation, sentence, and embedding artifacts.

use super::artifacts::{self, MwcPairRow, SentenceRow, SomoProvenanceRow};
use super::dict::{load_dictionary, sentences_by_image};
use super::encode::fill_policy;
use super::segment::{load_segmentation, load_working_image};
use super::{Pipeline, PipelineError, Stage, StageOutput};
use crate::dictionary::VisualSentence;
use crate::embedding::{
    full_image_patch, superpixel_id, toy_encode, EmbeddingStore, StoreRole, TOY_DIM,
};
use crate::tasks::{
    build_somo_dataset, equal_frequency_bins, mwc_build_pairs, mwc_distance_bins, sl_label,
    table3_cb_color_bins, table3_cb_shape_bins, table3_sl_bins, wc_labels, BinSpec, SomoImage,
    SomoMode, Split, TaskKind,
};
use std::collections::BTreeMap;

pub(super) fn task_present(pipeline: &Pipeline, kind: TaskKind) -> bool {
    let layout = pipeline.layout();
    let targets = layout.task_targets_csv(kind).exists();
    match kind {
        TaskKind::Wc => targets,
        TaskKind::Sl | TaskKind::CbShape | TaskKind::CbColor => {
            targets && layout.task_bins_csv(kind).exists()
        }
        TaskKind::SomoClose | TaskKind::SomoFar => {
            let mode = somo_mode(kind);
            targets
                && layout.somo_provenance_csv(mode).exists()
                && layout.somo_skipped_csv(mode).exists()
                && layout.somo_image_store(mode).exists()
        }
        TaskKind::Mwc => {
            targets
                && layout.mwc_pairs_csv(Split::Train).exists()
                && layout.mwc_pairs_csv(Split::Val).exists()
        }
    }
}

pub(super) fn run_task(pipeline: &Pipeline, kind: TaskKind) -> Result<StageOutput, PipelineError> {
    match kind {
        TaskKind::Wc => run_wc(pipeline),
        TaskKind::Sl => run_sl(pipeline),
        TaskKind::CbShape | TaskKind::CbColor => run_cb(pipeline, kind),
        TaskKind::SomoClose | TaskKind::SomoFar => run_somo(pipeline, somo_mode(kind)),
        TaskKind::Mwc => run_mwc(pipeline),
    }
}

fn somo_mode(kind: TaskKind) -> SomoMode {
    match kind {
        TaskKind::SomoClose => SomoMode::Close,
        TaskKind::SomoFar => SomoMode::Far,
        _ => unreachable!("not a SOMO task"),
    }
}

pub(super) fn load_sentence_rows(pipeline: &Pipeline) -> Result<Vec<SentenceRow>, PipelineError> {
    let path = pipeline.layout().sentences_csv();
    pipeline.need(&path, Stage::Sentences)?;
    artifacts::read_sentences(&path)
}

/// One sentence per manifest image under the configured scope; images
/// with no assignments get an empty sentence.
pub(super) fn all_image_sentences(
    pipeline: &Pipeline,
) -> Result<BTreeMap<String, VisualSentence>, PipelineError> {
    let rows = load_sentence_rows(pipeline)?;
    let mut sentences = sentences_by_image(&rows, &pipeline.config().sentences.scope());
    for entry in pipeline.manifest().entries() {
        sentences
            .entry(entry.image_id.clone())
            .or_insert_with(|| VisualSentence {
                image_id: entry.image_id.clone(),
                words: Default::default(),
            });
    }
    Ok(sentences)
}

fn run_wc(pipeline: &Pipeline) -> Result<StageOutput, PipelineError> {
    let dictionary = load_dictionary(pipeline)?;
    let sentences = all_image_sentences(pipeline)?;
    let n_words = dictionary.n_words();
    let rows: Vec<(String, Vec<u8>)> = pipeline
        .manifest()
        .entries()
        .iter()
        .map(|entry| {
            let flags = wc_labels(&sentences[&entry.image_id], n_words);
            (entry.image_id.clone(), flags)
        })
        .collect();
    let path = pipeline.layout().task_targets_csv(TaskKind::Wc);
    artifacts::write_word_flag_targets(&path, TaskKind::Wc.as_str(), &rows)?;
    let mut output = StageOutput::new(format!(
        "{} images x {n_words} word-presence flags",
        rows.len()
    ));
    output.artifacts.push(path);
    Ok(output)
}

fn bins_from_config(
    pipeline: &Pipeline,
    fixed: BinSpec,
    train_values: &[f64],
) -> Result<(BinSpec, &'static str), PipelineError> {
    if pipeline.config().bins.source == "table3" {
        Ok((fixed, "fixed"))
    } else {
        Ok((equal_frequency_bins(train_values, 6)?, "equal-frequency"))
    }
}

fn run_sl(pipeline: &Pipeline) -> Result<StageOutput, PipelineError> {
    let sentences = all_image_sentences(pipeline)?;
    let train_lengths: Vec<f64> = pipeline
        .manifest()
        .split_entries(Split::Train)
        .map(|entry| sentences[&entry.image_id].length() as f64)
        .collect();
    let (bins, source) = bins_from_config(pipeline, table3_sl_bins(), &train_lengths)?;

    let layout = pipeline.layout();
    artifacts::write_bins(&layout.task_bins_csv(TaskKind::Sl), bins.edges())?;
    let rows: Vec<(String, usize)> = pipeline
        .manifest()
        .entries()
        .iter()
        .map(|entry| {
            let label = sl_label(&sentences[&entry.image_id], &bins);
            (entry.image_id.clone(), label)
        })
        .collect();
    let path = layout.task_targets_csv(TaskKind::Sl);
    artifacts::write_single_label_targets(&path, TaskKind::Sl.as_str(), &rows)?;
    let mut output = StageOutput::new(format!(
        "{} images into {} length classes ({source} edges)",
        rows.len(),
        bins.n_bins(),
    ));
    output
        .artifacts
        .extend([layout.task_bins_csv(TaskKind::Sl), path]);
    Ok(output)
}

fn run_cb(pipeline: &Pipeline, kind: TaskKind) -> Result<StageOutput, PipelineError> {
    let stats_path = pipeline.layout().stats_csv();
    pipeline.need(&stats_path, Stage::Stats)?;
    let stats = artifacts::read_stats(&stats_path)?;
    let split_of = pipeline.manifest().split_of();
    let value = |row: &artifacts::StatsRow| -> f64 {
        if kind == TaskKind::CbShape {
            row.co
        } else {
            row.icv
        }
    };
    let train_values: Vec<f64> = stats
        .iter()
        .filter(|row| split_of.get(&row.image_id) == Some(&Split::Train))
        .map(value)
        .collect();
    let fixed = if kind == TaskKind::CbShape {
        table3_cb_shape_bins()
    } else {
        table3_cb_color_bins()
    };
    let (bins, source) = bins_from_config(pipeline, fixed, &train_values)?;

    let layout = pipeline.layout();
    artifacts::write_bins(&layout.task_bins_csv(kind), bins.edges())?;
    let rows: Vec<(String, usize)> = stats
        .iter()
        .map(|row| {
            let entity = superpixel_id(&row.image_id, &row.resolution, row.label);
            (entity, bins.classify(value(row)))
        })
        .collect();
    let path = layout.task_targets_csv(kind);
    artifacts::write_single_label_targets(&path, kind.as_str(), &rows)?;
    let mut output = StageOutput::new(format!(
        "{} superpixels into {} classes ({source} edges)",
        rows.len(),
        bins.n_bins(),
    ));
    output.artifacts.extend([layout.task_bins_csv(kind), path]);
    Ok(output)
}

fn run_somo(pipeline: &Pipeline, mode: SomoMode) -> Result<StageOutput, PipelineError> {
    let layout = pipeline.layout();
    let kind = if mode == SomoMode::Close {
        TaskKind::SomoClose
    } else {
        TaskKind::SomoFar
    };
    let cooc_path = layout.cooccurrence_csv();
    pipeline.need(&cooc_path, Stage::Sentences)?;
    let cooc = artifacts::read_cooccurrence(&cooc_path)?;
    let sentence_rows = load_sentence_rows(pipeline)?;

    let resolution = &pipeline.config().somo.resolution;
    let n_segments = pipeline
        .config()
        .segmentation
        .resolutions
        .iter()
        .find(|r| &r.tag == resolution)
        .expect("validated: somo resolution is configured")
        .n_segments;
    let mut words_of: BTreeMap<&str, BTreeMap<u32, u32>> = BTreeMap::new();
    for row in &sentence_rows {
        if &row.resolution == resolution {
            words_of
                .entry(row.image_id.as_str())
                .or_default()
                .insert(row.label, row.word_id);
        }
    }

    let params = pipeline.config().somo.params();
    let fill = fill_policy(pipeline)?;
    let patch_size = pipeline.config().patch.size;
    let images_dir = layout.somo_images_dir(mode);
    std::fs::create_dir_all(&images_dir).map_err(|e| artifacts::io_err(&images_dir, e))?;

    let mut store = EmbeddingStore::new(StoreRole::Representation, TOY_DIM);
    let mut provenance = Vec::new();
    let mut skipped = Vec::new();
    let mut targets = Vec::new();
    let mut n_altered = 0usize;
    for split in [Split::Train, Split::Val] {
        let images: Vec<SomoImage> = pipeline
            .manifest()
            .split_entries(split)
            .map(|entry| -> Result<SomoImage, PipelineError> {
                Ok(SomoImage {
                    image_id: entry.image_id.clone(),
                    image: load_working_image(pipeline, entry)?,
                    seg: load_segmentation(pipeline, &entry.image_id, resolution, n_segments)?,
                    words: words_of.get(entry.image_id.as_str()).cloned().unwrap_or_default(),
                })
            })
            .collect::<Result<_, _>>()?;
        let dataset = build_somo_dataset(
            &images,
            resolution,
            &cooc,
            mode,
            &params,
            crate::derive_seed(
                pipeline.seed(),
                &format!("somo/{}/{}", mode.as_str(), split.as_str()),
            ),
        )?;
        for instance in &dataset.instances {
            let id = instance.instance_id();
            instance.pixels.save_png(&layout.somo_image_png(mode, &id))?;
            let patch = full_image_patch(&instance.pixels, &id, patch_size, fill)?;
            store.insert(id.clone(), toy_encode(&patch))?;
            n_altered += usize::from(instance.altered);
            provenance.push(SomoProvenanceRow {
                instance_id: id.clone(),
                base_image_id: instance.base_image_id.clone(),
                split,
                altered: instance.altered,
                target_resolution: instance
                    .target
                    .as_ref()
                    .map(|t| t.resolution.clone())
                    .unwrap_or_default(),
                target_label: instance.target.as_ref().map(|t| t.label),
                target_word: instance.target.as_ref().map(|t| t.word),
                replacement_image_id: instance
                    .replacement
                    .as_ref()
                    .map(|r| r.image_id.clone())
                    .unwrap_or_default(),
                replacement_resolution: instance
                    .replacement
                    .as_ref()
                    .map(|r| r.resolution.clone())
                    .unwrap_or_default(),
                replacement_label: instance.replacement.as_ref().map(|r| r.label),
                replacement_word: instance.replacement.as_ref().map(|r| r.word),
            });
            targets.push((id, usize::from(instance.altered)));
        }
        skipped.extend(
            dataset
                .skipped
                .iter()
                .map(|s| (s.image_id.clone(), split, s.reason.clone())),
        );
    }

    artifacts::write_somo_provenance(&layout.somo_provenance_csv(mode), &provenance)?;
    artifacts::write_somo_skipped(&layout.somo_skipped_csv(mode), &skipped)?;
    store.write(&layout.somo_image_store(mode))?;
    let targets_path = layout.task_targets_csv(kind);
    artifacts::write_single_label_targets(&targets_path, kind.as_str(), &targets)?;

    let mut output = StageOutput::new(format!(
        "{} instances ({n_altered} altered, {} unaltered), {} base images skipped",
        provenance.len(),
        provenance.len() - n_altered,
        skipped.len(),
    ));
    output.artifacts.extend([
        layout.somo_provenance_csv(mode),
        layout.somo_skipped_csv(mode),
        layout.somo_image_store(mode),
        targets_path,
    ]);
    Ok(output)
}

fn run_mwc(pipeline: &Pipeline) -> Result<StageOutput, PipelineError> {
    let layout = pipeline.layout();
    let dictionary = load_dictionary(pipeline)?;
    let sentences = all_image_sentences(pipeline)?;
    let store_path = layout.representation_image_store();
    pipeline.need(&store_path, Stage::Encode)?;
    let store = EmbeddingStore::read_expect(&store_path, StoreRole::Representation)?;

    let cfg = &pipeline.config().mwc;
    let mut target_rows = Vec::new();
    let mut pair_counts = [0usize; 2];
    for (index, (split, n_pairs)) in [(Split::Train, cfg.train_pairs), (Split::Val, cfg.val_pairs)]
        .into_iter()
        .enumerate()
    {
        let ids = pipeline.manifest().split_ids(split);
        let pairs = mwc_build_pairs(
            &ids,
            &sentences,
            &store,
            dictionary.n_words(),
            n_pairs,
            crate::derive_seed(pipeline.seed(), &format!("mwc/{}", split.as_str())),
        )?;
        let distances: Vec<f64> = pairs.iter().map(|p| p.distance).collect();
        let bins = mwc_distance_bins(&distances, cfg.n_bins)?;
        let rows: Vec<MwcPairRow> = pairs
            .iter()
            .zip(&bins)
            .map(|(pair, &bin)| MwcPairRow {
                image_a: pair.image_a.clone(),
                image_b: pair.image_b.clone(),
                distance: pair.distance,
                bin,
            })
            .collect();
        artifacts::write_mwc_pairs(&layout.mwc_pairs_csv(split), &rows)?;
        pair_counts[index] = pairs.len();
        target_rows.extend(pairs.into_iter().map(|pair| {
            let entity = artifacts::pair_entity_id(&pair.image_a, &pair.image_b);
            (entity, pair.labels)
        }));
    }
    let targets_path = layout.task_targets_csv(TaskKind::Mwc);
    artifacts::write_word_flag_targets(&targets_path, TaskKind::Mwc.as_str(), &target_rows)?;

    let mut output = StageOutput::new(format!(
        "{} train + {} val pairs over {} distance bins, {} word flags per pair",
        pair_counts[0],
        pair_counts[1],
        cfg.n_bins,
        dictionary.n_words(),
    ));
    output.artifacts.extend([
        layout.mwc_pairs_csv(Split::Train),
        layout.mwc_pairs_csv(Split::Val),
        targets_path,
    ]);
    Ok(output)
}
