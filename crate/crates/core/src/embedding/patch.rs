//! Patch preparation: crop a superpixel's bounding box, blank out pixels
//! outside its mask, and letterbox the crop onto a square canvas.

use super::EmbeddingError;
use crate::imaging::{superpixel_stats, RgbImage, Segmentation};

/// What to paint outside the superpixel mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FillPolicy {
    /// Neutral gray (128, 128, 128). The default.
    MeanGray,
    /// A caller-supplied color, e.g. the dataset channel means.
    DatasetMean([u8; 3]),
}

impl FillPolicy {
    pub fn color(&self) -> [u8; 3] {
        match self {
            FillPolicy::MeanGray => [128, 128, 128],
            FillPolicy::DatasetMean(rgb) => *rgb,
        }
    }
}

/// A square crop of one superpixel, ready for encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    /// Side length of the square raster.
    pub size: usize,
    /// RGB raster, `3 * size * size` bytes, row-major.
    pub pixels: Vec<u8>,
    /// Per-pixel mask; `true` where superpixel content landed.
    pub mask: Vec<bool>,
    /// Source image id (provenance).
    pub image_id: String,
    /// Source superpixel label (provenance).
    pub label: u32,
    /// Superpixel area divided by source image area.
    pub norm_area: f64,
    /// Compactness of the source superpixel.
    pub co: f64,
}

/// Prepare patches for every superpixel of `seg` in one pass.
pub fn prepare_patches(
    image: &RgbImage,
    seg: &Segmentation,
    image_id: &str,
    target_size: usize,
    fill: FillPolicy,
) -> Result<Vec<Patch>, EmbeddingError> {
    if target_size == 0 {
        return Err(EmbeddingError::ZeroTargetSize);
    }
    if image.width != seg.width || image.height != seg.height {
        return Err(EmbeddingError::SizeMismatch);
    }
    let stats = superpixel_stats(image, seg)?;
    let image_area = (image.width * image.height) as f64;
    let fill_rgb = fill.color();

    let mut patches = Vec::with_capacity(stats.len());
    for s in &stats {
        let (x0, y0, x1, y1) = s.bbox;
        let bw = x1 - x0 + 1;
        let bh = y1 - y0 + 1;

        // Masked bbox crop.
        let mut crop = vec![0u8; 3 * bw * bh];
        let mut crop_mask = vec![false; bw * bh];
        for y in y0..=y1 {
            for x in x0..=x1 {
                let i = (y - y0) * bw + (x - x0);
                let rgb = if seg.label(x, y) == s.label {
                    crop_mask[i] = true;
                    image.get(x, y)
                } else {
                    fill_rgb
                };
                crop[3 * i..3 * i + 3].copy_from_slice(&rgb);
            }
        }

        // Letterbox: scale the longer side to target_size, center the rest.
        let scale = target_size as f64 / bw.max(bh) as f64;
        let out_w = ((bw as f64 * scale).round() as usize).clamp(1, target_size);
        let out_h = ((bh as f64 * scale).round() as usize).clamp(1, target_size);
        let off_x = (target_size - out_w) / 2;
        let off_y = (target_size - out_h) / 2;

        let mut pixels = Vec::with_capacity(3 * target_size * target_size);
        for _ in 0..target_size * target_size {
            pixels.extend_from_slice(&fill_rgb);
        }
        let mut mask = vec![false; target_size * target_size];
        for oy in 0..out_h {
            let sy = (((oy as f64 + 0.5) * bh as f64 / out_h as f64) as usize).min(bh - 1);
            for ox in 0..out_w {
                let sx = (((ox as f64 + 0.5) * bw as f64 / out_w as f64) as usize).min(bw - 1);
                let src = sy * bw + sx;
                let dst = (off_y + oy) * target_size + (off_x + ox);
                pixels[3 * dst..3 * dst + 3].copy_from_slice(&crop[3 * src..3 * src + 3]);
                mask[dst] = crop_mask[src];
            }
        }

        patches.push(Patch {
            size: target_size,
            pixels,
            mask,
            image_id: image_id.to_owned(),
            label: s.label,
            norm_area: s.area as f64 / image_area,
            co: s.co,
        });
    }
    Ok(patches)
}

/// Prepare the patch for a single superpixel label.
pub fn prepare_patch(
    image: &RgbImage,
    seg: &Segmentation,
    image_id: &str,
    label: u32,
    target_size: usize,
    fill: FillPolicy,
) -> Result<Patch, EmbeddingError> {
    if (label as usize) >= seg.n_segments_actual {
        return Err(EmbeddingError::UnknownLabel { label });
    }
    let patches = prepare_patches(image, seg, image_id, target_size, fill)?;
    patches
        .into_iter()
        .find(|p| p.label == label)
        .ok_or(EmbeddingError::UnknownLabel { label })
}

/// Treat the whole image as one patch (used for image-level representations).
pub fn full_image_patch(
    image: &RgbImage,
    image_id: &str,
    target_size: usize,
    fill: FillPolicy,
) -> Result<Patch, EmbeddingError> {
    let seg = Segmentation {
        width: image.width,
        height: image.height,
        labels: vec![0; image.width * image.height],
        n_segments_requested: 1,
        n_segments_actual: 1,
    };
    prepare_patch(image, &seg, image_id, 0, target_size, fill)
}
