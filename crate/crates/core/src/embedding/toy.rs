//! Built-in toy encoder: a deterministic, dependency-free stand-in for a
//! learned model, mapping a patch to a 37-dimensional feature vector.

use super::Patch;

/// Toy embedding dimension: mean RGB (3) + three 8-bin channel histograms
/// (24) + normalized area (1) + compactness (1) + 8-bin gradient
/// orientation histogram (8).
pub const TOY_DIM: usize = 37;

const ORIENT_BINS: usize = 8;

/// Encode a patch into `TOY_DIM` features, all in [0, 1].
///
/// Layout: `[mean_r, mean_g, mean_b, hist_r[0..8], hist_g[0..8],
/// hist_b[0..8], norm_area, co, orient[0..8]]`. Channel histograms are
/// normalized to sum to 1 over masked pixels; the orientation histogram is
/// magnitude-weighted over masked pixels whose four neighbors are also
/// masked, normalized to sum to 1, and all zeros for gradient-free content.
pub fn toy_encode(patch: &Patch) -> Vec<f32> {
    let size = patch.size;
    let masked: Vec<usize> = (0..size * size).filter(|&i| patch.mask[i]).collect();
    let n = masked.len() as f64;
    assert!(n > 0.0, "patch mask is empty");

    let mut mean = [0.0f64; 3];
    let mut hist = [[0.0f64; 8]; 3];
    for &i in &masked {
        for c in 0..3 {
            let v = patch.pixels[3 * i + c];
            mean[c] += v as f64 / 255.0;
            hist[c][(v >> 5) as usize] += 1.0;
        }
    }
    for (channel_mean, channel_hist) in mean.iter_mut().zip(hist.iter_mut()) {
        *channel_mean /= n;
        for bin in channel_hist.iter_mut() {
            *bin /= n;
        }
    }

    // Gradient orientation histogram on the [0,1] gray raster, restricted
    // to pixels whose central-difference neighbors are all masked so the
    // mask silhouette contributes nothing.
    let gray = |i: usize| -> f64 {
        let p = &patch.pixels[3 * i..3 * i + 3];
        (p[0] as f64 + p[1] as f64 + p[2] as f64) / (3.0 * 255.0)
    };
    let mut orient = [0.0f64; ORIENT_BINS];
    let mut total_mag = 0.0f64;
    for y in 1..size.saturating_sub(1) {
        for x in 1..size.saturating_sub(1) {
            let i = y * size + x;
            if !(patch.mask[i]
                && patch.mask[i - 1]
                && patch.mask[i + 1]
                && patch.mask[i - size]
                && patch.mask[i + size])
            {
                continue;
            }
            let gx = gray(i + 1) - gray(i - 1);
            let gy = gray(i + size) - gray(i - size);
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let angle = gy.atan2(gx); // (-pi, pi]
            let step = 2.0 * std::f64::consts::PI / ORIENT_BINS as f64;
            let bin = (((angle + std::f64::consts::PI) / step).floor() as i64)
                .rem_euclid(ORIENT_BINS as i64) as usize;
            orient[bin] += mag;
            total_mag += mag;
        }
    }
    if total_mag > 0.0 {
        for b in orient.iter_mut() {
            *b /= total_mag;
        }
    }

    let mut out = Vec::with_capacity(TOY_DIM);
    out.extend(mean.iter().map(|&v| v as f32));
    for channel_hist in &hist {
        out.extend(channel_hist.iter().map(|&v| v as f32));
    }
    out.push(patch.norm_area as f32);
    out.push(patch.co as f32);
    out.extend(orient.iter().map(|&v| v as f32));
    debug_assert_eq!(out.len(), TOY_DIM);
    out
}
