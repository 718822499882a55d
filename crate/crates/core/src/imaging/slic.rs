//! SLIC superpixel segmentation.
//!
//! Iterative local k-means in combined CIELAB + spatial space: cluster
//! centers start on a regular grid with spacing `S = sqrt(W*H/n)`, each
//! pixel is assigned to the closest center among those whose `2S x 2S`
//! search window covers it, with distance
//! `D = sqrt(d_lab^2 + (m/S)^2 * d_xy^2)`.

use super::{ImagingError, RgbImage, Segmentation};

#[derive(Debug, Clone, Copy)]
pub struct SlicParams {
    /// Target number of superpixels.
    pub n_segments: usize,
    /// Compactness weight `m`; larger favors spatially tighter segments.
    pub compactness: f64,
    /// Number of assign/update iterations.
    pub max_iter: usize,
}

impl Default for SlicParams {
    fn default() -> Self {
        Self {
            n_segments: 50,
            compactness: 10.0,
            max_iter: 10,
        }
    }
}

#[derive(Clone, Copy)]
struct Center {
    l: f64,
    a: f64,
    b: f64,
    x: f64,
    y: f64,
}

/// Segment `image` into approximately `params.n_segments` superpixels.
///
/// Deterministic for fixed inputs and seed: grid initialization, gradient
/// perturbation, and tie-breaking (lowest center index wins) involve no
/// randomness, so the `seed` is carried for interface stability but not
/// consumed. The returned label map is contiguous but individual labels may
/// be spatially disconnected; apply
/// [`enforce_connectivity`](super::enforce_connectivity) afterwards.
pub fn slic_segment(
    image: &RgbImage,
    params: &SlicParams,
    _seed: u64,
) -> Result<Segmentation, ImagingError> {
    let (w, h) = (image.width, image.height);
    if w == 0 || h == 0 {
        return Err(ImagingError::EmptyImage);
    }
    if params.n_segments == 0 {
        return Err(ImagingError::ZeroSegments);
    }
    if params.n_segments > w * h {
        return Err(ImagingError::TooManySegments {
            requested: params.n_segments,
            pixels: w * h,
        });
    }

    let lab = image.to_lab();
    let spacing = ((w * h) as f64 / params.n_segments as f64).sqrt();
    let mut centers = init_grid_centers(&lab, w, h, spacing);
    let inv_spacing2 = (params.compactness / spacing) * (params.compactness / spacing);

    let mut labels: Vec<u32> = vec![u32::MAX; w * h];
    let mut best: Vec<f64> = vec![f64::INFINITY; w * h];

    for _ in 0..params.max_iter {
        best.iter_mut().for_each(|d| *d = f64::INFINITY);
        labels.iter_mut().for_each(|l| *l = u32::MAX);

        for (k, c) in centers.iter().enumerate() {
            let x0 = ((c.x - 2.0 * spacing).floor().max(0.0)) as usize;
            let x1 = (((c.x + 2.0 * spacing).ceil()) as usize).min(w.saturating_sub(1));
            let y0 = ((c.y - 2.0 * spacing).floor().max(0.0)) as usize;
            let y1 = (((c.y + 2.0 * spacing).ceil()) as usize).min(h.saturating_sub(1));
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let i = y * w + x;
                    let p = lab[i];
                    let dl = p[0] - c.l;
                    let da = p[1] - c.a;
                    let db = p[2] - c.b;
                    let dx = x as f64 - c.x;
                    let dy = y as f64 - c.y;
                    let d2 = dl * dl + da * da + db * db + inv_spacing2 * (dx * dx + dy * dy);
                    if d2 < best[i] {
                        best[i] = d2;
                        labels[i] = k as u32;
                    }
                }
            }
        }

        // Rare fallback: a pixel outside every window joins its globally
        // nearest center so the output is always a full partition.
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if labels[i] != u32::MAX {
                    continue;
                }
                let p = lab[i];
                let mut chosen = 0u32;
                let mut best_d = f64::INFINITY;
                for (k, c) in centers.iter().enumerate() {
                    let dl = p[0] - c.l;
                    let da = p[1] - c.a;
                    let db = p[2] - c.b;
                    let dx = x as f64 - c.x;
                    let dy = y as f64 - c.y;
                    let d2 = dl * dl + da * da + db * db + inv_spacing2 * (dx * dx + dy * dy);
                    if d2 < best_d {
                        best_d = d2;
                        chosen = k as u32;
                    }
                }
                labels[i] = chosen;
            }
        }

        // Update step: move each center to the mean of its pixels.
        let mut sums = vec![[0.0f64; 5]; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let k = labels[i] as usize;
                let p = lab[i];
                sums[k][0] += p[0];
                sums[k][1] += p[1];
                sums[k][2] += p[2];
                sums[k][3] += x as f64;
                sums[k][4] += y as f64;
                counts[k] += 1;
            }
        }
        for (k, c) in centers.iter_mut().enumerate() {
            if counts[k] == 0 {
                continue; // empty center keeps its previous position
            }
            let n = counts[k] as f64;
            c.l = sums[k][0] / n;
            c.a = sums[k][1] / n;
            c.b = sums[k][2] / n;
            c.x = sums[k][3] / n;
            c.y = sums[k][4] / n;
        }
    }

    let (labels, n_actual) = relabel_contiguous(&labels, w, h);
    Ok(Segmentation {
        width: w,
        height: h,
        labels,
        n_segments_requested: params.n_segments,
        n_segments_actual: n_actual,
    })
}

/// Place centers on a regular grid with the given spacing, then move each to
/// the lowest-gradient pixel in its 3x3 neighborhood so centers avoid edges.
fn init_grid_centers(lab: &[[f64; 3]], w: usize, h: usize, spacing: f64) -> Vec<Center> {
    let gradient = |x: usize, y: usize| -> f64 {
        let clamp_get = |x: isize, y: isize| -> [f64; 3] {
            let xc = x.clamp(0, w as isize - 1) as usize;
            let yc = y.clamp(0, h as isize - 1) as usize;
            lab[yc * w + xc]
        };
        let (x, y) = (x as isize, y as isize);
        let dx: f64 = {
            let p = clamp_get(x + 1, y);
            let q = clamp_get(x - 1, y);
            (0..3).map(|c| (p[c] - q[c]) * (p[c] - q[c])).sum()
        };
        let dy: f64 = {
            let p = clamp_get(x, y + 1);
            let q = clamp_get(x, y - 1);
            (0..3).map(|c| (p[c] - q[c]) * (p[c] - q[c])).sum()
        };
        dx + dy
    };

    // Cells per axis: nearest integer to extent/spacing. Rounding can
    // leave the grid well short of the request at small counts (e.g. a
    // 1x1 grid for two segments), so bump the axis with the widest cells
    // until the count is within reach of the request.
    let n_target = ((w * h) as f64 / (spacing * spacing)).round() as usize;
    let mut nx = ((w as f64 / spacing).round() as usize).clamp(1, w);
    let mut ny = ((h as f64 / spacing).round() as usize).clamp(1, h);
    while ((nx * ny) as f64) < 0.85 * n_target as f64 && (nx < w || ny < h) {
        let cell_w = w as f64 / nx as f64;
        let cell_h = h as f64 / ny as f64;
        if (cell_w >= cell_h && nx < w) || ny == h {
            nx += 1;
        } else {
            ny += 1;
        }
    }

    let mut centers = Vec::new();
    for gy in 0..ny {
        let cy = (gy as f64 + 0.5) * h as f64 / ny as f64;
        for gx in 0..nx {
            let cx = (gx as f64 + 0.5) * w as f64 / nx as f64;
            let px = (cx as usize).min(w - 1);
            let py = (cy as usize).min(h - 1);
            let (mut bx, mut by, mut bg) = (px, py, f64::INFINITY);
            for oy in -1isize..=1 {
                for ox in -1isize..=1 {
                    let nbx = px as isize + ox;
                    let nby = py as isize + oy;
                    if nbx < 0 || nby < 0 || nbx >= w as isize || nby >= h as isize {
                        continue;
                    }
                    let g = gradient(nbx as usize, nby as usize);
                    if g < bg {
                        bg = g;
                        bx = nbx as usize;
                        by = nby as usize;
                    }
                }
            }
            let p = lab[by * w + bx];
            centers.push(Center {
                l: p[0],
                a: p[1],
                b: p[2],
                x: bx as f64,
                y: by as f64,
            });
        }
    }
    centers
}

/// Renumber labels to contiguous `0..n` in scan order of first appearance.
pub(crate) fn relabel_contiguous(labels: &[u32], w: usize, h: usize) -> (Vec<u32>, usize) {
    debug_assert_eq!(labels.len(), w * h);
    let mut map: Vec<u32> = vec![u32::MAX; labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0)];
    let mut next = 0u32;
    let mut out = Vec::with_capacity(labels.len());
    for &l in labels {
        let m = &mut map[l as usize];
        if *m == u32::MAX {
            *m = next;
            next += 1;
        }
        out.push(*m);
    }
    (out, next as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_segment_on_tiny_image() {
        let img = RgbImage::filled(5, 5, [10, 200, 30]);
        let params = SlicParams {
            n_segments: 1,
            ..Default::default()
        };
        let seg = slic_segment(&img, &params, 0).unwrap();
        assert!(seg.labels.iter().all(|&l| l == 0));
        assert_eq!(seg.n_segments_actual, 1);
    }

    #[test]
    fn rejects_more_segments_than_pixels() {
        let img = RgbImage::filled(3, 3, [0, 0, 0]);
        let params = SlicParams {
            n_segments: 10,
            ..Default::default()
        };
        match slic_segment(&img, &params, 0) {
            Err(ImagingError::TooManySegments { requested, pixels }) => {
                assert_eq!(requested, 10);
                assert_eq!(pixels, 9);
            }
            other => panic!("expected TooManySegments, got {other:?}"),
        }
    }

    #[test]
    fn rejects_zero_segments() {
        let img = RgbImage::filled(4, 4, [0, 0, 0]);
        let params = SlicParams {
            n_segments: 0,
            ..Default::default()
        };
        assert!(matches!(
            slic_segment(&img, &params, 0),
            Err(ImagingError::ZeroSegments)
        ));
    }

    #[test]
    fn two_tone_halves_split_near_midline() {
        // Left half dark, right half bright; n=2 should find a vertical
        // boundary within one pixel of the midline.
        let mut img = RgbImage::filled(64, 64, [20, 20, 20]);
        for y in 0..64 {
            for x in 32..64 {
                img.set(x, y, [230, 230, 230]);
            }
        }
        let params = SlicParams {
            n_segments: 2,
            ..Default::default()
        };
        let seg = slic_segment(&img, &params, 0).unwrap();
        assert_eq!(seg.n_segments_actual, 2);
        for y in 0..64 {
            for x in 0..64 {
                let l = seg.label(x, y);
                let expect = seg.label(if x < 32 { 0 } else { 63 }, y);
                if !(31..=32).contains(&x) {
                    assert_eq!(l, expect, "pixel ({x},{y}) crosses the midline");
                }
            }
        }
    }

    #[test]
    fn constant_image_yields_regular_tiles() {
        let img = RgbImage::filled(64, 64, [120, 90, 200]);
        let params = SlicParams {
            n_segments: 16,
            ..Default::default()
        };
        let seg = slic_segment(&img, &params, 0).unwrap();
        assert_eq!(seg.n_segments_actual, 16);
        // On a constant image each tile should stay close to the nominal
        // area W*H/n = 256.
        let mut areas = vec![0usize; seg.n_segments_actual];
        for &l in &seg.labels {
            areas[l as usize] += 1;
        }
        for (l, &a) in areas.iter().enumerate() {
            assert!(
                (205..=307).contains(&a),
                "tile {l} area {a} deviates more than 20% from nominal 256"
            );
        }
    }

    #[test]
    fn deterministic_across_calls() {
        let mut img = RgbImage::filled(48, 40, [0, 0, 0]);
        for y in 0..40 {
            for x in 0..48 {
                img.set(x, y, [(x * 5) as u8, (y * 6) as u8, ((x + y) * 2) as u8]);
            }
        }
        let params = SlicParams {
            n_segments: 12,
            ..Default::default()
        };
        let a = slic_segment(&img, &params, 7).unwrap();
        let b = slic_segment(&img, &params, 7).unwrap();
        assert_eq!(a, b, "identical inputs and seed must give identical labels");
    }

    #[test]
    fn output_is_contiguous_partition() {
        let mut img = RgbImage::filled(40, 40, [0, 0, 0]);
        for y in 0..40 {
            for x in 0..40 {
                img.set(x, y, [((x * 13 + y * 7) % 256) as u8, 100, 50]);
            }
        }
        let params = SlicParams {
            n_segments: 9,
            ..Default::default()
        };
        let seg = slic_segment(&img, &params, 0).unwrap();
        let mut seen = vec![false; seg.n_segments_actual];
        for &l in &seg.labels {
            assert!((l as usize) < seg.n_segments_actual);
            seen[l as usize] = true;
        }
        assert!(seen.iter().all(|&s| s), "every label in 0..n must appear");
    }
}
