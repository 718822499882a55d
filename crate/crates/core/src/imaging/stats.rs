//! Per-superpixel shape and color statistics.

use super::{ImagingError, RgbImage, Segmentation};

/// Statistics of one superpixel.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpixelStats {
    pub label: u32,
    /// Pixel count.
    pub area: usize,
    /// Count of unit pixel edges between the superpixel and its complement,
    /// image border included.
    pub perimeter: usize,
    /// Compactness `4*pi*A / P^2`.
    pub co: f64,
    /// Intra-color variance: mean over RGB channels of the population
    /// standard deviation of [0,1]-scaled values.
    pub icv: f64,
    /// Mean pixel coordinates (x, y).
    pub centroid: (f64, f64),
    /// Inclusive bounding box (x0, y0, x1, y1).
    pub bbox: (usize, usize, usize, usize),
}

/// Compactness score of a shape with pixel area `area` and unit-edge
/// perimeter `perimeter`: the ratio of its area to the area of a circle
/// with the same perimeter, `4*pi*A / P^2`.
///
/// With edge counting a square scores `pi/4` and elongated or ragged
/// shapes score lower.
pub fn compactness_score(area: usize, perimeter: f64) -> Result<f64, ImagingError> {
    if perimeter <= 0.0 {
        return Err(ImagingError::NonPositivePerimeter { perimeter });
    }
    Ok(4.0 * std::f64::consts::PI * area as f64 / (perimeter * perimeter))
}

/// Mean over channels of the population standard deviation of the masked
/// pixels' [0,1]-scaled channel values.
pub fn icv_score(pixels: &[[u8; 3]]) -> Result<f64, ImagingError> {
    if pixels.is_empty() {
        return Err(ImagingError::EmptyMask);
    }
    let n = pixels.len() as f64;
    let mut acc = 0.0;
    for c in 0..3 {
        // Two-pass variance: exact zero for constant input.
        let mean: f64 = pixels.iter().map(|p| p[c] as f64 / 255.0).sum::<f64>() / n;
        let var: f64 = pixels
            .iter()
            .map(|p| {
                let d = p[c] as f64 / 255.0 - mean;
                d * d
            })
            .sum::<f64>()
            / n;
        acc += var.sqrt();
    }
    Ok(acc / 3.0)
}

/// Compute statistics for every superpixel of `seg` in one pass.
///
/// Returned in label order (`0..n_segments_actual`).
pub fn superpixel_stats(
    image: &RgbImage,
    seg: &Segmentation,
) -> Result<Vec<SuperpixelStats>, ImagingError> {
    let (w, h) = (seg.width, seg.height);
    if image.width != w || image.height != h {
        return Err(ImagingError::LabelMapMismatch {
            got: image.width * image.height,
            expected: w * h,
        });
    }
    let k = seg.n_segments_actual;

    let mut area = vec![0usize; k];
    let mut perimeter = vec![0usize; k];
    let mut sum_x = vec![0.0f64; k];
    let mut sum_y = vec![0.0f64; k];
    let mut bbox = vec![(usize::MAX, usize::MAX, 0usize, 0usize); k];
    let mut ch_sum = vec![[0.0f64; 3]; k];

    for y in 0..h {
        for x in 0..w {
            let l = seg.label(x, y) as usize;
            if l >= k {
                return Err(ImagingError::UnknownLabel {
                    label: seg.label(x, y),
                });
            }
            area[l] += 1;
            sum_x[l] += x as f64;
            sum_y[l] += y as f64;
            let b = &mut bbox[l];
            b.0 = b.0.min(x);
            b.1 = b.1.min(y);
            b.2 = b.2.max(x);
            b.3 = b.3.max(y);
            let rgb = image.get(x, y);
            for c in 0..3 {
                ch_sum[l][c] += rgb[c] as f64 / 255.0;
            }
            // Unit edges against different labels or the image border.
            let lab = seg.label(x, y);
            if x == 0 || seg.label(x - 1, y) != lab {
                perimeter[l] += 1;
            }
            if x + 1 == w || seg.label(x + 1, y) != lab {
                perimeter[l] += 1;
            }
            if y == 0 || seg.label(x, y - 1) != lab {
                perimeter[l] += 1;
            }
            if y + 1 == h || seg.label(x, y + 1) != lab {
                perimeter[l] += 1;
            }
        }
    }

    // Second pass for channel variances (two-pass form keeps constant
    // regions at exactly zero).
    let mut ch_sq_dev = vec![[0.0f64; 3]; k];
    for y in 0..h {
        for x in 0..w {
            let l = seg.label(x, y) as usize;
            let rgb = image.get(x, y);
            for c in 0..3 {
                let d = rgb[c] as f64 / 255.0 - ch_sum[l][c] / area[l].max(1) as f64;
                ch_sq_dev[l][c] += d * d;
            }
        }
    }

    let mut out = Vec::with_capacity(k);
    for l in 0..k {
        if area[l] == 0 {
            return Err(ImagingError::UnknownLabel { label: l as u32 });
        }
        let n = area[l] as f64;
        let mut icv = 0.0;
        for dev in &ch_sq_dev[l] {
            icv += (dev / n).sqrt();
        }
        icv /= 3.0;
        out.push(SuperpixelStats {
            label: l as u32,
            area: area[l],
            perimeter: perimeter[l],
            co: compactness_score(area[l], perimeter[l] as f64)?,
            icv,
            centroid: (sum_x[l] / n, sum_y[l] / n),
            bbox: bbox[l],
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn seg_from(labels: Vec<u32>, w: usize, h: usize) -> Segmentation {
        let n_actual = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        Segmentation {
            width: w,
            height: h,
            labels,
            n_segments_requested: n_actual,
            n_segments_actual: n_actual,
        }
    }

    #[test]
    fn square_superpixel_stats() {
        // 10x10 image, all one label: A=100, P=40, CO=pi/4, centroid at
        // the square center (4.5, 4.5).
        let img = RgbImage::filled(10, 10, [50, 100, 150]);
        let seg = seg_from(vec![0; 100], 10, 10);
        let stats = superpixel_stats(&img, &seg).unwrap();
        assert_eq!(stats.len(), 1);
        let s = &stats[0];
        assert_eq!(s.area, 100);
        assert_eq!(s.perimeter, 40);
        assert_abs_diff_eq!(s.co, PI / 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.icv, 0.0, epsilon = 1e-12);
        assert_eq!(s.centroid, (4.5, 4.5));
        assert_eq!(s.bbox, (0, 0, 9, 9));
    }

    #[test]
    fn strip_superpixel_perimeter_and_co() {
        // 1x10 strip inside a 12x3 image: A=10, P=22, CO=40*pi/484.
        let mut labels = vec![0u32; 36];
        for x in 1..11 {
            labels[12 + x] = 1; // row y=1
        }
        let img = RgbImage::filled(12, 3, [7, 7, 7]);
        let seg = seg_from(labels, 12, 3);
        let stats = superpixel_stats(&img, &seg).unwrap();
        let s = &stats[1];
        assert_eq!(s.area, 10);
        assert_eq!(s.perimeter, 22);
        assert_abs_diff_eq!(s.co, 40.0 * PI / 484.0, epsilon = 1e-12);
    }

    #[test]
    fn full_image_perimeter_is_border_length() {
        let img = RgbImage::filled(17, 9, [1, 2, 3]);
        let seg = seg_from(vec![0; 17 * 9], 17, 9);
        let stats = superpixel_stats(&img, &seg).unwrap();
        assert_eq!(stats[0].perimeter, 2 * (17 + 9));
    }

    #[test]
    fn compactness_rejects_non_positive_perimeter() {
        assert!(matches!(
            compactness_score(5, 0.0),
            Err(ImagingError::NonPositivePerimeter { .. })
        ));
    }

    #[test]
    fn icv_constant_patch_is_zero() {
        let pixels = vec![[128, 37, 240]; 50];
        assert_abs_diff_eq!(icv_score(&pixels).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn icv_alternating_single_channel() {
        // Half 0 and half 255 in one channel: that channel's std on the
        // [0,1] scale is 0.5, the others 0, so ICV = 0.5/3.
        let mut pixels = Vec::new();
        for i in 0..40 {
            let r = if i % 2 == 0 { 0 } else { 255 };
            pixels.push([r, 9, 9]);
        }
        assert_abs_diff_eq!(icv_score(&pixels).unwrap(), 0.5 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn icv_alternating_all_channels() {
        let mut pixels = Vec::new();
        for i in 0..40 {
            let v = if i % 2 == 0 { 0 } else { 255 };
            pixels.push([v, v, v]);
        }
        assert_abs_diff_eq!(icv_score(&pixels).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn icv_is_order_invariant() {
        let mut pixels: Vec<[u8; 3]> = (0..60u32)
            .map(|i| {
                let v = i.wrapping_mul(2654435761);
                [(v & 0xff) as u8, ((v >> 8) & 0xff) as u8, ((v >> 16) & 0xff) as u8]
            })
            .collect();
        let a = icv_score(&pixels).unwrap();
        pixels.reverse();
        let b = icv_score(&pixels).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn icv_rejects_empty_mask() {
        assert!(matches!(icv_score(&[]), Err(ImagingError::EmptyMask)));
    }

    #[test]
    fn mismatched_sizes_are_rejected() {
        let img = RgbImage::filled(4, 4, [0, 0, 0]);
        let seg = seg_from(vec![0; 25], 5, 5);
        assert!(matches!(
            superpixel_stats(&img, &seg),
            Err(ImagingError::LabelMapMismatch { .. })
        ));
    }

    #[test]
    fn rasterized_disk_compactness_matches_brute_force() {
        // Disk of radius 20 rasterized on a 50x50 grid; the expected value
        // comes from independently counting boundary edges.
        let w = 50;
        let h = 50;
        let r2 = 20.0f64 * 20.0;
        let inside = |x: usize, y: usize| -> bool {
            let dx = x as f64 - 24.5;
            let dy = y as f64 - 24.5;
            dx * dx + dy * dy <= r2
        };
        let mut labels = vec![0u32; w * h];
        let mut area = 0usize;
        let mut edges = 0usize;
        for y in 0..h {
            for x in 0..w {
                if inside(x, y) {
                    labels[y * w + x] = 1;
                    area += 1;
                    for (nx, ny) in [
                        (x as isize - 1, y as isize),
                        (x as isize + 1, y as isize),
                        (x as isize, y as isize - 1),
                        (x as isize, y as isize + 1),
                    ] {
                        let out_of_image =
                            nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize;
                        if out_of_image || !inside(nx as usize, ny as usize) {
                            edges += 1;
                        }
                    }
                }
            }
        }
        let img = RgbImage::filled(w, h, [0, 0, 0]);
        let seg = seg_from(labels, w, h);
        let stats = superpixel_stats(&img, &seg).unwrap();
        let s = &stats[1];
        assert_eq!(s.area, area);
        assert_eq!(s.perimeter, edges);
        let expected = 4.0 * PI * area as f64 / (edges as f64 * edges as f64);
        assert_abs_diff_eq!(s.co, expected, epsilon = 1e-12);
        // Under edge counting the disk lands near 0.6; the estimator is
        // bounded by the square's pi/4.
        assert!(s.co > 0.5 && s.co < PI / 4.0, "disk CO = {}", s.co);
    }
}
