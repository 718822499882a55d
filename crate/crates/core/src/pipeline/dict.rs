//! The `dict` stage (concepts, filtering, global word clustering) and
//! the `sentences` stage (two-stage word assignment, visual sentences,
//! and the train-split co-occurrence matrix).

use super::artifacts::{self, SentenceRow};
use super::{Pipeline, PipelineError, Stage, StageOutput};
use crate::dictionary::{
    assign_word, build_concepts, build_dictionary, build_sentence, cooccurrence_matrix,
    filter_concepts, SentenceEntry, VisualSentence, VisualWordDictionary,
};
use crate::embedding::{parse_superpixel_id, EmbeddingStore, StoreRole};
use crate::tasks::Split;
use std::collections::BTreeMap;

pub(super) fn run_dict(pipeline: &Pipeline) -> Result<StageOutput, PipelineError> {
    let layout = pipeline.layout();
    let store_path = layout.dictionary_superpixel_store();
    pipeline.need(&store_path, Stage::Encode)?;
    let store = EmbeddingStore::read_expect(&store_path, StoreRole::Dictionary)?;

    // The dictionary is learned from the training split only.
    let split_of = pipeline.manifest().split_of();
    let mut train_store = EmbeddingStore::new(StoreRole::Dictionary, store.dim());
    let mut class_of = BTreeMap::new();
    for (id, vector) in store.iter() {
        let (image_id, _, _) =
            parse_superpixel_id(id).ok_or_else(|| PipelineError::BadArtifact {
                path: store_path.clone(),
                line: 0,
                message: format!("malformed superpixel id {id:?}"),
            })?;
        match split_of.get(image_id) {
            Some(Split::Train) => {
                let entry = pipeline.manifest().get(image_id).expect("split implies entry");
                class_of.insert(image_id.to_owned(), entry.class.clone());
                train_store.insert(id.to_owned(), vector.to_vec())?;
            }
            Some(Split::Val) => {}
            None => {
                return Err(PipelineError::BadArtifact {
                    path: store_path.clone(),
                    line: 0,
                    message: format!("embedding {id:?} references an image not in the manifest"),
                });
            }
        }
    }
    if train_store.is_empty() {
        return Err(PipelineError::Invalid {
            message: "no training-split superpixel embeddings to build a dictionary from".into(),
        });
    }

    let cfg = &pipeline.config().dictionary;
    let build = build_concepts(
        &train_store,
        &class_of,
        cfg.k_per_class,
        crate::derive_seed(pipeline.seed(), "dict/concepts"),
        cfg.kmeans_max_iter,
        cfg.kmeans_tol,
    )?;
    let survivors = build
        .concepts
        .iter()
        .filter(|c| c.member_count >= cfg.min_frequency)
        .count();
    let keep_count = cfg.keep_count(survivors);
    let filtered = filter_concepts(&build.concepts, None, cfg.min_frequency, keep_count)?;
    let dictionary = build_dictionary(
        &filtered,
        cfg.n_words,
        crate::derive_seed(pipeline.seed(), "dict/words"),
        cfg.kmeans_max_iter,
        cfg.kmeans_tol,
    )?;

    artifacts::write_dictionary(
        &layout.concepts_csv(),
        &layout.concept_centroid_store(),
        &dictionary,
    )?;
    let mut output = StageOutput::new(format!(
        "{} concepts built, {survivors} past frequency {}, {} kept, {} words",
        build.concepts.len(),
        cfg.min_frequency,
        filtered.len(),
        dictionary.n_words(),
    ));
    output.warnings = build.warnings;
    output
        .artifacts
        .extend([layout.concepts_csv(), layout.concept_centroid_store()]);
    Ok(output)
}

/// Load the persisted dictionary, erroring toward the `dict` stage when
/// either half is missing.
pub(super) fn load_dictionary(pipeline: &Pipeline) -> Result<VisualWordDictionary, PipelineError> {
    let layout = pipeline.layout();
    pipeline.need(&layout.concepts_csv(), Stage::Dict)?;
    pipeline.need(&layout.concept_centroid_store(), Stage::Dict)?;
    artifacts::read_dictionary(&layout.concepts_csv(), &layout.concept_centroid_store())
}

pub(super) fn run_sentences(pipeline: &Pipeline) -> Result<StageOutput, PipelineError> {
    let layout = pipeline.layout();
    let dictionary = load_dictionary(pipeline)?;
    let store_path = layout.dictionary_superpixel_store();
    pipeline.need(&store_path, Stage::Encode)?;
    let store = EmbeddingStore::read_expect(&store_path, StoreRole::Dictionary)?;

    // Group superpixel vectors by (image, resolution) with numeric label order.
    type LabelledVectors = Vec<(u32, Vec<f64>)>;
    let mut groups: BTreeMap<(String, String), LabelledVectors> = BTreeMap::new();
    for (id, vector) in store.iter() {
        let (image_id, tag, label) =
            parse_superpixel_id(id).ok_or_else(|| PipelineError::BadArtifact {
                path: store_path.clone(),
                line: 0,
                message: format!("malformed superpixel id {id:?}"),
            })?;
        groups
            .entry((image_id.to_owned(), tag.to_owned()))
            .or_default()
            .push((label, vector.iter().map(|&v| v as f64).collect()));
    }
    for group in groups.values_mut() {
        group.sort_by_key(|&(label, _)| label);
    }

    let resolutions = &pipeline.config().segmentation.resolutions;
    let mut rows = Vec::new();
    for entry in pipeline.manifest().entries() {
        for resolution in resolutions {
            let key = (entry.image_id.clone(), resolution.tag.clone());
            let Some(group) = groups.get(&key) else {
                return Err(PipelineError::Invalid {
                    message: format!(
                        "embedding store has no superpixels for image {:?} at resolution {:?}; \
                         rerun the `encode` stage",
                        entry.image_id, resolution.tag
                    ),
                });
            };
            for (label, vector) in group {
                rows.push(SentenceRow {
                    image_id: entry.image_id.clone(),
                    resolution: resolution.tag.clone(),
                    label: *label,
                    word_id: assign_word(&dictionary, vector)?,
                });
            }
        }
    }
    artifacts::write_sentences(&layout.sentences_csv(), &rows)?;

    // Image-level co-occurrence from training-split sentences.
    let scope = pipeline.config().sentences.scope();
    let sentences = sentences_by_image(&rows, &scope);
    let train_sentences: Vec<VisualSentence> = pipeline
        .manifest()
        .split_entries(Split::Train)
        .map(|entry| sentences.get(&entry.image_id).cloned().unwrap_or(VisualSentence {
            image_id: entry.image_id.clone(),
            words: Default::default(),
        }))
        .collect();
    let cooc = cooccurrence_matrix(&train_sentences, dictionary.n_words());
    artifacts::write_cooccurrence(&layout.cooccurrence_csv(), &cooc)?;

    let mut output = StageOutput::new(format!(
        "{} word assignments over {} images; co-occurrence from {} train sentences",
        rows.len(),
        pipeline.manifest().len(),
        train_sentences.len(),
    ));
    output
        .artifacts
        .extend([layout.sentences_csv(), layout.cooccurrence_csv()]);
    Ok(output)
}

/// Rebuild per-image sentences from assignment rows under a scope.
/// Every image in the rows gets a sentence; callers default images
/// without rows to an empty sentence.
pub(super) fn sentences_by_image(
    rows: &[SentenceRow],
    scope: &crate::dictionary::SentenceScope,
) -> BTreeMap<String, VisualSentence> {
    let mut entries: BTreeMap<String, Vec<SentenceEntry>> = BTreeMap::new();
    for row in rows {
        entries.entry(row.image_id.clone()).or_default().push(SentenceEntry {
            resolution: row.resolution.clone(),
            label: row.label,
            word_id: row.word_id,
        });
    }
    entries
        .into_iter()
        .map(|(image_id, entries)| {
            let sentence = build_sentence(&image_id, &entries, scope);
            (image_id, sentence)
        })
        .collect()
}
