//! Semantic-odd-man-out instance generation: replace a center-biased
//! superpixel with one carrying a frequently (close) or rarely (far)
//! co-occurring word, matched by area.

use super::TaskError;
use crate::dictionary::CooccurrenceMatrix;
use crate::imaging::{ImagingError, RgbImage, Segmentation};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SomoMode {
    Close,
    Far,
}

impl SomoMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SomoMode::Close => "close",
            SomoMode::Far => "far",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SomoParams {
    /// Quantile of the co-occurrence row defining the admissible words.
    pub quantile: f64,
    /// Admissible area ratio band [1/tolerance, tolerance].
    pub shape_tolerance: f64,
    /// Std of the center-biased Gaussian, as a fraction of each dimension.
    pub sigma_frac: f64,
}

impl Default for SomoParams {
    fn default() -> Self {
        Self {
            quantile: 0.25,
            shape_tolerance: 2.0,
            sigma_frac: 0.25,
        }
    }
}

/// One superpixel eligible as replacement material.
#[derive(Debug, Clone, PartialEq)]
pub struct SomoCandidate {
    pub image_index: usize,
    pub image_id: String,
    pub label: u32,
    pub word_id: u32,
    pub area: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SomoTarget {
    pub resolution: String,
    pub label: u32,
    pub word: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SomoReplacement {
    pub image_id: String,
    pub resolution: String,
    pub label: u32,
    pub word: u32,
}

/// One emitted instance: either the untouched base image or an altered
/// copy with full provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SomoInstance {
    pub base_image_id: String,
    pub mode: SomoMode,
    pub altered: bool,
    pub target: Option<SomoTarget>,
    pub replacement: Option<SomoReplacement>,
    pub pixels: RgbImage,
}

impl SomoInstance {
    /// Store/dataset identity of this instance.
    pub fn instance_id(&self) -> String {
        format!(
            "{}__somo_{}_{}",
            self.base_image_id,
            self.mode.as_str(),
            if self.altered { "alt" } else { "clean" }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SomoSkip {
    pub image_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SomoDataset {
    /// Alternating altered/unaltered instances, exactly balanced.
    pub instances: Vec<SomoInstance>,
    pub skipped: Vec<SomoSkip>,
}

/// Everything the generator needs about one image at the replacement
/// resolution: pixels, segmentation, and the word of each superpixel.
#[derive(Debug, Clone)]
pub struct SomoImage {
    pub image_id: String,
    pub image: RgbImage,
    pub seg: Segmentation,
    pub words: BTreeMap<u32, u32>,
}

/// Two independent standard normal draws (Box–Muller).
fn standard_normal_pair(rng: &mut impl Rng) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    let u2: f64 = rng.random();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Sample a pixel from an axis-aligned Gaussian centered in the image
/// with std `sigma_frac` of each dimension, truncated to the bounds by
/// rejection.
fn sample_center_pixel(
    width: usize,
    height: usize,
    sigma_frac: f64,
    rng: &mut impl Rng,
) -> (usize, usize) {
    let (w, h) = (width as f64, height as f64);
    loop {
        let (zx, zy) = standard_normal_pair(rng);
        let x = w / 2.0 + sigma_frac * w * zx;
        let y = h / 2.0 + sigma_frac * h * zy;
        if (0.0..w).contains(&x) && (0.0..h).contains(&y) {
            return (x as usize, y as usize);
        }
    }
}

/// Pick the center-biased target superpixel: the label under a pixel
/// drawn from the truncated central Gaussian.
pub fn somo_select_target(seg: &Segmentation, sigma_frac: f64, rng: &mut impl Rng) -> u32 {
    let (x, y) = sample_center_pixel(seg.width, seg.height, sigma_frac, rng);
    seg.label(x, y)
}

/// The words admissible as replacement for `word`: over the population of
/// other words that actually have candidates, the bottom quantile of the
/// co-occurrence row for far mode, the top quantile for close mode
/// (thresholds are row values, so ties stay inside the set).
pub fn somo_admissible_words(
    cooc: &CooccurrenceMatrix,
    word: u32,
    population: &BTreeSet<u32>,
    mode: SomoMode,
    quantile: f64,
) -> Result<BTreeSet<u32>, TaskError> {
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(TaskError::BadQuantile { quantile });
    }
    let row = cooc.counts.get(word as usize).ok_or(TaskError::WordOutOfRange {
        word_id: word,
        n_words: cooc.n_words,
    })?;
    let others: Vec<u32> = population
        .iter()
        .copied()
        .filter(|&v| v != word && (v as usize) < cooc.n_words)
        .collect();
    if others.is_empty() {
        return Err(TaskError::NoAdmissiblePopulation { word_id: word });
    }
    let mut values: Vec<u64> = others.iter().map(|&v| row[v as usize]).collect();
    values.sort_unstable();
    let m = values.len();
    let admissible = match mode {
        SomoMode::Far => {
            let threshold = values[(quantile * (m - 1) as f64).floor() as usize];
            others
                .into_iter()
                .filter(|&v| row[v as usize] <= threshold)
                .collect()
        }
        SomoMode::Close => {
            let threshold = values[((1.0 - quantile) * (m - 1) as f64).ceil() as usize];
            others
                .into_iter()
                .filter(|&v| row[v as usize] >= threshold)
                .collect()
        }
    };
    Ok(admissible)
}

/// Choose the candidate of an admissible word whose area ratio against
/// the target lies in [1/tolerance, tolerance], preferring the ratio
/// closest to 1; ties resolve to the lowest (image_id, label).
pub fn somo_pick_replacement<'a>(
    candidates: &'a [SomoCandidate],
    admissible: &BTreeSet<u32>,
    target_area: f64,
    shape_tolerance: f64,
    exclude_image: Option<&str>,
) -> Option<&'a SomoCandidate> {
    if target_area <= 0.0 || target_area.is_nan() || shape_tolerance < 1.0 {
        return None;
    }
    candidates
        .iter()
        .filter(|c| admissible.contains(&c.word_id))
        .filter(|c| exclude_image != Some(c.image_id.as_str()))
        .filter_map(|c| {
            let ratio = c.area / target_area;
            (ratio >= 1.0 / shape_tolerance && ratio <= shape_tolerance)
                .then(|| (ratio.ln().abs(), c))
        })
        .min_by(|(sa, a), (sb, b)| {
            sa.total_cmp(sb)
                .then_with(|| a.image_id.cmp(&b.image_id))
                .then_with(|| a.label.cmp(&b.label))
        })
        .map(|(_, c)| c)
}

/// Inclusive bounding box of a label in a segmentation.
fn label_bbox(seg: &Segmentation, label: u32) -> Result<(usize, usize, usize, usize), TaskError> {
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    let mut found = false;
    for y in 0..seg.height {
        for x in 0..seg.width {
            if seg.label(x, y) == label {
                found = true;
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
        }
    }
    if !found {
        return Err(TaskError::UnknownLabel { label });
    }
    Ok((x0, y0, x1, y1))
}

fn crop(image: &RgbImage, x0: usize, y0: usize, w: usize, h: usize) -> RgbImage {
    let mut out = RgbImage::filled(w, h, [0, 0, 0]);
    for y in 0..h {
        for x in 0..w {
            out.set(x, y, image.get(x0 + x, y0 + y));
        }
    }
    out
}

/// Write the replacement's bounding-box crop over the target superpixel:
/// the crop is nearest-neighbor resized to the target's bounding box and
/// applied only where the target mask holds, preserving the silhouette.
pub fn somo_paste(
    base: &RgbImage,
    seg: &Segmentation,
    target_label: u32,
    replacement_crop: &RgbImage,
) -> Result<RgbImage, TaskError> {
    if seg.width != base.width || seg.height != base.height {
        return Err(TaskError::Imaging(ImagingError::LabelMapMismatch {
            got: seg.width * seg.height,
            expected: base.width * base.height,
        }));
    }
    let (x0, y0, x1, y1) = label_bbox(seg, target_label)?;
    let (bw, bh) = (x1 - x0 + 1, y1 - y0 + 1);
    let resized = replacement_crop.resize_nearest(bw, bh);
    let mut out = base.clone();
    for y in y0..=y1 {
        for x in x0..=x1 {
            if seg.label(x, y) == target_label {
                out.set(x, y, resized.get(x - x0, y - y0));
            }
        }
    }
    Ok(out)
}

/// Build one mode's SOMO dataset from a pool of images. Images are
/// deterministically shuffled and alternately designated altered or
/// unaltered; failed alterations are recorded and the larger side is
/// truncated so the result is exactly balanced.
pub fn build_somo_dataset(
    images: &[SomoImage],
    resolution: &str,
    cooc: &CooccurrenceMatrix,
    mode: SomoMode,
    params: &SomoParams,
    seed: u64,
) -> Result<SomoDataset, TaskError> {
    if !(params.quantile > 0.0 && params.quantile < 1.0) {
        return Err(TaskError::BadQuantile {
            quantile: params.quantile,
        });
    }
    if params.shape_tolerance < 1.0 {
        return Err(TaskError::BadShapeTolerance {
            tolerance: params.shape_tolerance,
        });
    }

    // Superpixel areas per image, and the global candidate pool.
    let areas: Vec<BTreeMap<u32, usize>> = images
        .iter()
        .map(|img| {
            let mut m = BTreeMap::new();
            for &label in &img.seg.labels {
                *m.entry(label).or_insert(0) += 1;
            }
            m
        })
        .collect();
    let mut candidates = Vec::new();
    for (i, img) in images.iter().enumerate() {
        for (&label, &word_id) in &img.words {
            let Some(&area) = areas[i].get(&label) else {
                continue;
            };
            candidates.push(SomoCandidate {
                image_index: i,
                image_id: img.image_id.clone(),
                label,
                word_id,
                area: area as f64,
            });
        }
    }

    let mut order: Vec<usize> = (0..images.len()).collect();
    let mut role_rng = ChaCha12Rng::seed_from_u64(crate::derive_seed(
        seed,
        &format!("somo/{}/roles", mode.as_str()),
    ));
    order.shuffle(&mut role_rng);

    let mut altered = Vec::new();
    let mut unaltered = Vec::new();
    let mut skipped = Vec::new();
    for (position, &index) in order.iter().enumerate() {
        let img = &images[index];
        if position % 2 == 1 {
            unaltered.push(SomoInstance {
                base_image_id: img.image_id.clone(),
                mode,
                altered: false,
                target: None,
                replacement: None,
                pixels: img.image.clone(),
            });
            continue;
        }

        let skip = |reason: &str, skipped: &mut Vec<SomoSkip>| {
            skipped.push(SomoSkip {
                image_id: img.image_id.clone(),
                reason: reason.to_owned(),
            });
        };
        let mut rng = ChaCha12Rng::seed_from_u64(crate::derive_seed(
            seed,
            &format!("somo/{}/{}", mode.as_str(), img.image_id),
        ));
        let target_label = somo_select_target(&img.seg, params.sigma_frac, &mut rng);
        let Some(&target_word) = img.words.get(&target_label) else {
            skip("target superpixel has no word assignment", &mut skipped);
            continue;
        };
        let population: BTreeSet<u32> = candidates
            .iter()
            .filter(|c| c.image_index != index && c.word_id != target_word)
            .map(|c| c.word_id)
            .collect();
        let admissible =
            match somo_admissible_words(cooc, target_word, &population, mode, params.quantile) {
                Ok(set) => set,
                Err(TaskError::NoAdmissiblePopulation { .. }) => {
                    skip("no admissible replacement word", &mut skipped);
                    continue;
                }
                Err(e) => return Err(e),
            };
        let target_area = areas[index].get(&target_label).copied().unwrap_or(0) as f64;
        let Some(chosen) = somo_pick_replacement(
            &candidates,
            &admissible,
            target_area,
            params.shape_tolerance,
            Some(&img.image_id),
        ) else {
            skip("no shape-admissible candidate", &mut skipped);
            continue;
        };

        let source = &images[chosen.image_index];
        let (sx0, sy0, sx1, sy1) = label_bbox(&source.seg, chosen.label)?;
        let source_crop = crop(&source.image, sx0, sy0, sx1 - sx0 + 1, sy1 - sy0 + 1);
        let pixels = somo_paste(&img.image, &img.seg, target_label, &source_crop)?;
        altered.push(SomoInstance {
            base_image_id: img.image_id.clone(),
            mode,
            altered: true,
            target: Some(SomoTarget {
                resolution: resolution.to_owned(),
                label: target_label,
                word: target_word,
            }),
            replacement: Some(SomoReplacement {
                image_id: chosen.image_id.clone(),
                resolution: resolution.to_owned(),
                label: chosen.label,
                word: chosen.word_id,
            }),
            pixels,
        });
    }

    let keep = altered.len().min(unaltered.len());
    altered.truncate(keep);
    unaltered.truncate(keep);
    let instances = altered
        .into_iter()
        .zip(unaltered)
        .flat_map(|(a, u)| [a, u])
        .collect();
    Ok(SomoDataset { instances, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadrant_seg(size: usize) -> Segmentation {
        let half = size / 2;
        let labels = (0..size * size)
            .map(|i| {
                let (x, y) = (i % size, i / size);
                ((y >= half) as u32) * 2 + (x >= half) as u32
            })
            .collect();
        Segmentation {
            width: size,
            height: size,
            labels,
            n_segments_requested: 4,
            n_segments_actual: 4,
        }
    }

    #[test]
    fn sigma_zero_always_selects_the_center_superpixel() {
        let seg = quadrant_seg(64);
        let expected = seg.label(32, 32);
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..10 {
            assert_eq!(somo_select_target(&seg, 0.0, &mut rng), expected);
        }
    }

    #[test]
    fn center_bias_spreads_over_quadrants_evenly() {
        // The truncated Gaussian is symmetric about the center, so each
        // quadrant carries mass 1/4; with 10,000 draws the binomial 3σ
        // band is ±130 around 2500.
        let seg = quadrant_seg(64);
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            counts[somo_select_target(&seg, 0.25, &mut rng) as usize] += 1;
        }
        for &c in &counts {
            assert!(
                (2370..=2630).contains(&c),
                "quadrant counts {counts:?} outside the 3σ band"
            );
        }
    }

    fn cooc_from_rows(rows: Vec<Vec<u64>>) -> CooccurrenceMatrix {
        CooccurrenceMatrix {
            n_words: rows.len(),
            counts: rows,
        }
    }

    #[test]
    fn far_admits_the_unique_bottom_word_and_close_the_top() {
        let cooc = cooc_from_rows(vec![
            vec![3, 4, 0, 6, 9],
            vec![4, 3, 1, 1, 1],
            vec![0, 1, 1, 0, 0],
            vec![6, 1, 0, 2, 2],
            vec![9, 1, 0, 2, 4],
        ]);
        let population: BTreeSet<u32> = [1, 2, 3, 4].into_iter().collect();
        let far = somo_admissible_words(&cooc, 0, &population, SomoMode::Far, 0.25).unwrap();
        assert_eq!(far, [2].into_iter().collect());
        let close = somo_admissible_words(&cooc, 0, &population, SomoMode::Close, 0.25).unwrap();
        assert_eq!(close, [4].into_iter().collect());
    }

    #[test]
    fn tied_rows_admit_the_whole_population() {
        let cooc = cooc_from_rows(vec![vec![9, 3, 3, 3], vec![0; 4], vec![0; 4], vec![0; 4]]);
        let population: BTreeSet<u32> = [1, 2, 3].into_iter().collect();
        for mode in [SomoMode::Far, SomoMode::Close] {
            let set = somo_admissible_words(&cooc, 0, &population, mode, 0.25).unwrap();
            assert_eq!(set, population);
        }
    }

    #[test]
    fn empty_population_is_an_error() {
        let cooc = cooc_from_rows(vec![vec![1, 1], vec![1, 1]]);
        // Population holding only the target word itself counts as empty.
        let population: BTreeSet<u32> = [0].into_iter().collect();
        assert!(matches!(
            somo_admissible_words(&cooc, 0, &population, SomoMode::Far, 0.25),
            Err(TaskError::NoAdmissiblePopulation { word_id: 0 })
        ));
    }

    fn candidate(image_id: &str, label: u32, word_id: u32, area: f64) -> SomoCandidate {
        SomoCandidate {
            image_index: 0,
            image_id: image_id.to_owned(),
            label,
            word_id,
            area,
        }
    }

    #[test]
    fn replacement_prefers_area_ratio_nearest_one() {
        let candidates = vec![
            candidate("a", 0, 1, 5.0),
            candidate("b", 0, 1, 9.0),
            candidate("c", 0, 1, 21.0), // ratio 2.1 > tolerance, excluded
        ];
        let admissible: BTreeSet<u32> = [1].into_iter().collect();
        let chosen = somo_pick_replacement(&candidates, &admissible, 10.0, 2.0, None).unwrap();
        assert_eq!(chosen.image_id, "b");
        // The band is inclusive: area 20 at ratio exactly 2.0 qualifies.
        let edge = vec![candidate("z", 0, 1, 20.0)];
        assert!(somo_pick_replacement(&edge, &admissible, 10.0, 2.0, None).is_some());
    }

    #[test]
    fn replacement_ties_resolve_to_lowest_id() {
        let candidates = vec![
            candidate("b", 2, 1, 9.0),
            candidate("a", 7, 1, 9.0),
            candidate("a", 3, 1, 9.0),
        ];
        let admissible: BTreeSet<u32> = [1].into_iter().collect();
        let chosen = somo_pick_replacement(&candidates, &admissible, 9.0, 2.0, None).unwrap();
        assert_eq!((chosen.image_id.as_str(), chosen.label), ("a", 3));
    }

    #[test]
    fn replacement_honors_word_and_image_filters() {
        let candidates = vec![candidate("a", 0, 1, 9.0), candidate("b", 0, 2, 9.0)];
        let admissible: BTreeSet<u32> = [2].into_iter().collect();
        let chosen = somo_pick_replacement(&candidates, &admissible, 9.0, 2.0, None).unwrap();
        assert_eq!(chosen.image_id, "b");
        assert!(somo_pick_replacement(&candidates, &admissible, 9.0, 2.0, Some("b")).is_none());
    }

    /// An 8×8 image whose every pixel value encodes its coordinates.
    fn coordinate_image() -> RgbImage {
        let mut img = RgbImage::filled(8, 8, [0, 0, 0]);
        for y in 0..8 {
            for x in 0..8 {
                img.set(x, y, [x as u8 * 10, y as u8 * 10, 7]);
            }
        }
        img
    }

    /// Label 1 forms an L-shape inside rows 2..5, columns 2..5.
    fn l_shape_seg() -> Segmentation {
        let mut labels = vec![0u32; 64];
        for y in 2..5 {
            labels[y * 8 + 2] = 1;
        }
        labels[4 * 8 + 3] = 1;
        labels[4 * 8 + 4] = 1;
        Segmentation {
            width: 8,
            height: 8,
            labels,
            n_segments_requested: 2,
            n_segments_actual: 2,
        }
    }

    #[test]
    fn paste_changes_only_the_target_mask() {
        let base = coordinate_image();
        let seg = l_shape_seg();
        let patch = RgbImage::filled(2, 2, [200, 100, 50]);
        let out = somo_paste(&base, &seg, 1, &patch).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                if seg.label(x, y) == 1 {
                    assert_eq!(out.get(x, y), [200, 100, 50]);
                } else {
                    assert_eq!(out.get(x, y), base.get(x, y), "leak at ({x},{y})");
                }
            }
        }
    }

    #[test]
    fn paste_resizes_the_crop_to_the_target_bbox() {
        let base = RgbImage::filled(8, 8, [0, 0, 0]);
        // Label 1 fills the 4×4 block at (2..6, 2..6).
        let mut labels = vec![0u32; 64];
        for y in 2..6 {
            for x in 2..6 {
                labels[y * 8 + x] = 1;
            }
        }
        let seg = Segmentation {
            width: 8,
            height: 8,
            labels,
            n_segments_requested: 2,
            n_segments_actual: 2,
        };
        // 2×2 crop with four distinct quadrant colors.
        let mut patch = RgbImage::filled(2, 2, [0, 0, 0]);
        patch.set(0, 0, [10, 0, 0]);
        patch.set(1, 0, [0, 20, 0]);
        patch.set(0, 1, [0, 0, 30]);
        patch.set(1, 1, [40, 40, 40]);
        let out = somo_paste(&base, &seg, 1, &patch).unwrap();
        assert_eq!(out.get(2, 2), [10, 0, 0]);
        assert_eq!(out.get(5, 2), [0, 20, 0]);
        assert_eq!(out.get(2, 5), [0, 0, 30]);
        assert_eq!(out.get(5, 5), [40, 40, 40]);
    }

    #[test]
    fn paste_rejects_unknown_label() {
        let base = coordinate_image();
        let seg = l_shape_seg();
        let patch = RgbImage::filled(2, 2, [1, 2, 3]);
        assert!(matches!(
            somo_paste(&base, &seg, 9, &patch),
            Err(TaskError::UnknownLabel { label: 9 })
        ));
    }

    /// Six 4×4 images split into left/right superpixels; images alternate
    /// between word families {0,1} and {2,3} so far-mode replacements are
    /// always available from the other family.
    fn toy_pool() -> (Vec<SomoImage>, CooccurrenceMatrix) {
        let mut images = Vec::new();
        for i in 0..6u32 {
            let mut labels = vec![0u32; 16];
            for y in 0..4 {
                for x in 2..4 {
                    labels[y * 4 + x] = 1;
                }
            }
            let seg = Segmentation {
                width: 4,
                height: 4,
                labels,
                n_segments_requested: 2,
                n_segments_actual: 2,
            };
            let shade = 40 * (i as u8 + 1);
            let mut image = RgbImage::filled(4, 4, [shade, 0, 0]);
            for y in 0..4 {
                for x in 2..4 {
                    image.set(x, y, [0, shade, 0]);
                }
            }
            let words: BTreeMap<u32, u32> = if i % 2 == 0 {
                [(0, 0), (1, 1)].into_iter().collect()
            } else {
                [(0, 2), (1, 3)].into_iter().collect()
            };
            images.push(SomoImage {
                image_id: format!("img{i}"),
                image,
                seg,
                words,
            });
        }
        // Sentences {0,1} ×3 and {2,3} ×3.
        let cooc = cooc_from_rows(vec![
            vec![3, 3, 0, 0],
            vec![3, 3, 0, 0],
            vec![0, 0, 3, 3],
            vec![0, 0, 3, 3],
        ]);
        (images, cooc)
    }

    #[test]
    fn dataset_is_balanced_alternating_and_word_changing() {
        let (images, cooc) = toy_pool();
        let data = build_somo_dataset(
            &images,
            "medium",
            &cooc,
            SomoMode::Far,
            &SomoParams::default(),
            99,
        )
        .unwrap();
        assert_eq!(data.instances.len(), 6);
        assert!(data.skipped.is_empty());
        let n_altered = data.instances.iter().filter(|i| i.altered).count();
        assert_eq!(n_altered * 2, data.instances.len());
        for (i, inst) in data.instances.iter().enumerate() {
            assert_eq!(inst.altered, i % 2 == 0, "alternation broken at {i}");
        }
        for inst in data.instances.iter().filter(|i| i.altered) {
            let target = inst.target.as_ref().unwrap();
            let replacement = inst.replacement.as_ref().unwrap();
            assert_ne!(target.word, replacement.word);
            assert_ne!(replacement.image_id, inst.base_image_id);
            // Far mode must cross families: words {0,1} ↔ {2,3}.
            assert_ne!(target.word / 2, replacement.word / 2);
            // The alteration stays inside the target mask.
            let base = images
                .iter()
                .find(|im| im.image_id == inst.base_image_id)
                .unwrap();
            let mut changed_outside = 0;
            let mut changed_inside = 0;
            for y in 0..4 {
                for x in 0..4 {
                    if inst.pixels.get(x, y) != base.image.get(x, y) {
                        if base.seg.label(x, y) == target.label {
                            changed_inside += 1;
                        } else {
                            changed_outside += 1;
                        }
                    }
                }
            }
            assert_eq!(changed_outside, 0);
            assert!(changed_inside > 0, "alteration did not change any pixel");
        }
    }

    #[test]
    fn unaltered_instances_keep_the_base_raster() {
        let (images, cooc) = toy_pool();
        let data = build_somo_dataset(
            &images,
            "medium",
            &cooc,
            SomoMode::Close,
            &SomoParams::default(),
            7,
        )
        .unwrap();
        for inst in data.instances.iter().filter(|i| !i.altered) {
            let base = images
                .iter()
                .find(|im| im.image_id == inst.base_image_id)
                .unwrap();
            assert_eq!(inst.pixels, base.image);
            assert!(inst.target.is_none() && inst.replacement.is_none());
        }
    }

    #[test]
    fn failed_alterations_truncate_to_balance() {
        // Both images carry only word 0 everywhere: no admissible
        // replacement exists, every alteration fails, and the dataset
        // truncates to empty while recording the skip.
        let (mut images, _) = toy_pool();
        images.truncate(2);
        for img in &mut images {
            img.words = [(0, 0), (1, 0)].into_iter().collect();
        }
        let cooc = cooc_from_rows(vec![vec![2]]);
        let data = build_somo_dataset(
            &images,
            "medium",
            &cooc,
            SomoMode::Far,
            &SomoParams::default(),
            3,
        )
        .unwrap();
        assert!(data.instances.is_empty());
        assert_eq!(data.skipped.len(), 1);
        assert_eq!(data.skipped[0].reason, "no admissible replacement word");
    }

    #[test]
    fn generation_is_deterministic() {
        let (images, cooc) = toy_pool();
        let build = |seed| {
            build_somo_dataset(
                &images,
                "medium",
                &cooc,
                SomoMode::Far,
                &SomoParams::default(),
                seed,
            )
            .unwrap()
        };
        let (a, b) = (build(5), build(5));
        assert_eq!(a.instances.len(), b.instances.len());
        for (x, y) in a.instances.iter().zip(&b.instances) {
            assert_eq!(x.instance_id(), y.instance_id());
            assert_eq!(x.pixels, y.pixels);
        }
    }
}
