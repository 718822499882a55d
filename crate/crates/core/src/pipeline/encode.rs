//! The `encode` stage: toy-encode every superpixel patch and every full
//! image into the three embedding stores (dictionary-role superpixels,
//! representation-role superpixels, representation-role images).

use super::segment::{load_segmentation, load_working_image};
use super::{Pipeline, PipelineError, StageOutput};
use crate::embedding::{
    full_image_patch, prepare_patches, superpixel_id, EmbeddingStore, FillPolicy, StoreRole,
    TOY_DIM,
};
use rayon::prelude::*;

pub(super) fn encode_present(pipeline: &Pipeline) -> bool {
    let layout = pipeline.layout();
    layout.dictionary_superpixel_store().exists()
        && layout.representation_superpixel_store().exists()
        && layout.representation_image_store().exists()
}

/// Per-channel mean color over every manifest image at working size;
/// used when the patch fill is `dataset-mean`. Deterministic in image
/// order and integer arithmetic.
pub(super) fn dataset_mean(pipeline: &Pipeline) -> Result<[u8; 3], PipelineError> {
    let sums: Vec<([u64; 3], u64)> = pipeline
        .manifest()
        .entries()
        .par_iter()
        .map(|entry| -> Result<([u64; 3], u64), PipelineError> {
            let working = load_working_image(pipeline, entry)?;
            let mut sum = [0u64; 3];
            for pixel in working.pixels.chunks_exact(3) {
                for (channel, &v) in sum.iter_mut().zip(pixel) {
                    *channel += v as u64;
                }
            }
            Ok((sum, (working.width * working.height) as u64))
        })
        .collect::<Result<_, _>>()?;
    let mut total = [0u64; 3];
    let mut count = 0u64;
    for (sum, n) in sums {
        for (t, s) in total.iter_mut().zip(sum) {
            *t += s;
        }
        count += n;
    }
    let mut mean = [0u8; 3];
    for (m, t) in mean.iter_mut().zip(total) {
        *m = ((t + count / 2) / count.max(1)) as u8;
    }
    Ok(mean)
}

/// Resolve the configured fill policy, computing the dataset mean only
/// when the config asks for it.
pub(super) fn fill_policy(pipeline: &Pipeline) -> Result<FillPolicy, PipelineError> {
    let mean = if pipeline.config().patch.needs_dataset_mean() {
        dataset_mean(pipeline)?
    } else {
        [0; 3]
    };
    Ok(pipeline.config().patch.fill_policy(mean)?)
}

pub(super) fn run_encode(pipeline: &Pipeline) -> Result<StageOutput, PipelineError> {
    let layout = pipeline.layout();
    // A store file already on disk — typically placed there by `ingest` —
    // is kept verbatim; only the missing stores are toy-encoded.
    let dict_path = layout.dictionary_superpixel_store();
    let rep_path = layout.representation_superpixel_store();
    let image_path = layout.representation_image_store();
    let need_dict = !dict_path.exists();
    let need_rep = !rep_path.exists();
    let need_image = !image_path.exists();

    let fill = fill_policy(pipeline)?;
    let patch_size = pipeline.config().patch.size;
    let resolutions = &pipeline.config().segmentation.resolutions;

    struct ImageVectors {
        superpixels: Vec<(String, Vec<f32>)>,
        image: (String, Vec<f32>),
    }

    let encoded: Vec<ImageVectors> = pipeline
        .manifest()
        .entries()
        .par_iter()
        .map(|entry| -> Result<ImageVectors, PipelineError> {
            let working = load_working_image(pipeline, entry)?;
            let mut superpixels = Vec::new();
            let wanted = if need_dict || need_rep {
                resolutions.as_slice()
            } else {
                &[]
            };
            for resolution in wanted {
                let seg = load_segmentation(
                    pipeline,
                    &entry.image_id,
                    &resolution.tag,
                    resolution.n_segments,
                )?;
                for patch in
                    prepare_patches(&working, &seg, &entry.image_id, patch_size, fill)?
                {
                    superpixels.push((
                        superpixel_id(&entry.image_id, &resolution.tag, patch.label),
                        crate::embedding::toy_encode(&patch),
                    ));
                }
            }
            let whole = full_image_patch(&working, &entry.image_id, patch_size, fill)?;
            let image = (entry.image_id.clone(), crate::embedding::toy_encode(&whole));
            Ok(ImageVectors { superpixels, image })
        })
        .collect::<Result<_, _>>()?;

    let mut dict_store = EmbeddingStore::new(StoreRole::Dictionary, TOY_DIM);
    let mut rep_store = EmbeddingStore::new(StoreRole::Representation, TOY_DIM);
    let mut image_store = EmbeddingStore::new(StoreRole::Representation, TOY_DIM);
    for vectors in &encoded {
        for (id, vector) in &vectors.superpixels {
            dict_store.insert(id.clone(), vector.clone())?;
            rep_store.insert(id.clone(), vector.clone())?;
        }
        image_store.insert(vectors.image.0.clone(), vectors.image.1.clone())?;
    }

    let dir = layout.embeddings_dir();
    std::fs::create_dir_all(&dir).map_err(|e| super::artifacts::io_err(&dir, e))?;
    let mut output = StageOutput::new(String::new());
    if need_dict {
        dict_store.write(&dict_path)?;
        output.artifacts.push(dict_path);
    }
    if need_rep {
        rep_store.write(&rep_path)?;
        output.artifacts.push(rep_path);
    }
    if need_image {
        image_store.write(&image_path)?;
        output.artifacts.push(image_path);
    }

    let kept = 3 - output.artifacts.len();
    output.detail = format!(
        "{} stores written ({} superpixel / {} image vectors, toy encoder, dim {TOY_DIM}); {kept} existing kept",
        output.artifacts.len(),
        dict_store.len(),
        image_store.len(),
    );
    Ok(output)
}
