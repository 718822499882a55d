//! The `segment` stage (multi-resolution SLIC label maps) and the
//! `stats` stage (per-superpixel statistics CSV).

use super::artifacts::{self, StatsRow};
use super::{Pipeline, PipelineError, Stage, StageOutput};
use crate::imaging::{
    enforce_connectivity, slic_segment, superpixel_stats, RgbImage, Segmentation, SlicParams,
};
use rayon::prelude::*;

/// Open a manifest image and bring it to the working size.
pub(super) fn load_working_image(
    pipeline: &Pipeline,
    entry: &super::ManifestEntry,
) -> Result<RgbImage, PipelineError> {
    let size = pipeline.config().segmentation.working_size;
    let image = RgbImage::open(&entry.path)?;
    Ok(image.resize_nearest(size, size))
}

pub(super) fn segment_present(pipeline: &Pipeline) -> bool {
    pipeline.manifest().entries().iter().all(|entry| {
        pipeline
            .config()
            .segmentation
            .resolutions
            .iter()
            .all(|r| pipeline.layout().segmentation(&entry.image_id, &r.tag).exists())
    })
}

pub(super) fn run_segment(pipeline: &Pipeline) -> Result<StageOutput, PipelineError> {
    let seg_cfg = &pipeline.config().segmentation;
    let dir = pipeline.layout().segmentation_dir();
    std::fs::create_dir_all(&dir).map_err(|e| artifacts::io_err(&dir, e))?;

    let written: Vec<usize> = pipeline
        .manifest()
        .entries()
        .par_iter()
        .map(|entry| -> Result<usize, PipelineError> {
            let missing: Vec<_> = seg_cfg
                .resolutions
                .iter()
                .filter(|r| {
                    !pipeline
                        .layout()
                        .segmentation(&entry.image_id, &r.tag)
                        .exists()
                })
                .collect();
            if missing.is_empty() {
                return Ok(0);
            }
            let working = load_working_image(pipeline, entry)?;
            let area = (seg_cfg.working_size * seg_cfg.working_size) as f64;
            for resolution in missing.iter() {
                let seg = slic_segment(
                    &working,
                    &SlicParams {
                        n_segments: resolution.n_segments,
                        compactness: seg_cfg.compactness,
                        max_iter: seg_cfg.max_iter,
                    },
                    pipeline.seed(),
                )?;
                let min_size = area / resolution.n_segments as f64 * seg_cfg.min_size_factor;
                let seg = enforce_connectivity(&seg, min_size);
                seg.save_png(&pipeline.layout().segmentation(&entry.image_id, &resolution.tag))?;
            }
            Ok(missing.len())
        })
        .collect::<Result<_, _>>()?;

    let n_written: usize = written.iter().sum();
    let total = pipeline.manifest().len() * seg_cfg.resolutions.len();
    let mut output = StageOutput::new(format!(
        "{} images x {} resolutions: {n_written} label maps written, {} already present",
        pipeline.manifest().len(),
        seg_cfg.resolutions.len(),
        total - n_written,
    ));
    output.artifacts.push(dir);
    Ok(output)
}

/// Load one image's segmentation at a resolution tag, erroring toward
/// the `segment` stage when it is missing.
pub(super) fn load_segmentation(
    pipeline: &Pipeline,
    image_id: &str,
    tag: &str,
    n_segments: usize,
) -> Result<Segmentation, PipelineError> {
    let path = pipeline.layout().segmentation(image_id, tag);
    pipeline.need(&path, Stage::Segment)?;
    Ok(Segmentation::load_png(&path, n_segments)?)
}

pub(super) fn run_stats(pipeline: &Pipeline) -> Result<StageOutput, PipelineError> {
    let resolutions = &pipeline.config().segmentation.resolutions;
    let per_image: Vec<Vec<StatsRow>> = pipeline
        .manifest()
        .entries()
        .par_iter()
        .map(|entry| -> Result<Vec<StatsRow>, PipelineError> {
            let working = load_working_image(pipeline, entry)?;
            let mut rows = Vec::new();
            for resolution in resolutions {
                let seg = load_segmentation(
                    pipeline,
                    &entry.image_id,
                    &resolution.tag,
                    resolution.n_segments,
                )?;
                for s in superpixel_stats(&working, &seg)? {
                    rows.push(StatsRow {
                        image_id: entry.image_id.clone(),
                        resolution: resolution.tag.clone(),
                        label: s.label,
                        area: s.area,
                        perimeter: s.perimeter,
                        co: s.co,
                        icv: s.icv,
                        cx: s.centroid.0,
                        cy: s.centroid.1,
                        bbox: s.bbox,
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<_, _>>()?;

    let rows: Vec<StatsRow> = per_image.into_iter().flatten().collect();
    let path = pipeline.layout().stats_csv();
    artifacts::write_stats(&path, &rows)?;
    let mut output = StageOutput::new(format!("{} superpixel rows", rows.len()));
    output.artifacts.push(path);
    Ok(output)
}
