//! Bundled synthetic dataset: 64x64 images tiled from 8 known motifs,
//! with per-tile provenance for planted-recovery checks.

use crate::imaging::{ImagingError, RgbImage};
use crate::tasks::Split;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Number of distinct motifs.
pub const N_MOTIFS: usize = 8;
/// Tile side in pixels.
pub const TILE: usize = 16;
/// Tiles per image side.
pub const GRID: usize = 4;
/// Image side in pixels.
pub const IMAGE_SIDE: usize = TILE * GRID;

/// Draw weights making motifs 6 and 7 rare.
const MOTIF_WEIGHTS: [u32; N_MOTIFS] = [18, 15, 13, 11, 9, 7, 3, 2];

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

/// One generated image with its planted ground truth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthImage {
    pub image_id: String,
    /// Class label for the manifest: the lowest motif present.
    pub class: String,
    pub split: Split,
    /// Motif of each tile, row-major over the 4x4 grid.
    pub tile_motifs: Vec<u8>,
    pub image: RgbImage,
}

impl SynthImage {
    /// The distinct motifs present in the image.
    pub fn motif_set(&self) -> BTreeSet<u8> {
        self.tile_motifs.iter().copied().collect()
    }
}

/// Canonical 16x16 tile of one motif: four solids, two stripe patterns,
/// a checkerboard, and a gray ramp. All palette values stay at least 10
/// counts away from 0 and 255 so per-tile jitter never clips.
pub fn motif_tile(motif: u8) -> RgbImage {
    assert!((motif as usize) < N_MOTIFS, "motif {motif} out of range");
    let dark = [25, 25, 25];
    let light = [235, 235, 235];
    match motif {
        0 => RgbImage::filled(TILE, TILE, [200, 50, 50]),
        1 => RgbImage::filled(TILE, TILE, [50, 200, 50]),
        2 => RgbImage::filled(TILE, TILE, [60, 60, 215]),
        3 => RgbImage::filled(TILE, TILE, [225, 225, 70]),
        4 => {
            // Horizontal stripes, 4 px bands.
            let mut img = RgbImage::filled(TILE, TILE, dark);
            for y in 0..TILE {
                if (y / 4) % 2 == 0 {
                    for x in 0..TILE {
                        img.set(x, y, light);
                    }
                }
            }
            img
        }
        5 => {
            // Vertical stripes, 4 px bands.
            let mut img = RgbImage::filled(TILE, TILE, dark);
            for x in 0..TILE {
                if (x / 4) % 2 == 0 {
                    for y in 0..TILE {
                        img.set(x, y, [200, 60, 200]);
                    }
                }
            }
            img
        }
        6 => {
            // Checkerboard, 4 px cells.
            let mut img = RgbImage::filled(TILE, TILE, dark);
            for y in 0..TILE {
                for x in 0..TILE {
                    if (x / 4 + y / 4) % 2 == 0 {
                        img.set(x, y, [60, 220, 220]);
                    }
                }
            }
            img
        }
        _ => {
            // Horizontal gray ramp.
            let mut img = RgbImage::filled(TILE, TILE, dark);
            for x in 0..TILE {
                let v = (30 + 200 * x / (TILE - 1)) as u8;
                for y in 0..TILE {
                    img.set(x, y, [v, v, v]);
                }
            }
            img
        }
    }
}

/// Weighted draw of `n` distinct motifs.
fn pick_motifs(n: usize, rng: &mut impl Rng) -> Vec<u8> {
    let mut pool: Vec<(u8, u32)> = MOTIF_WEIGHTS
        .iter()
        .enumerate()
        .map(|(m, &w)| (m as u8, w))
        .collect();
    let mut chosen = Vec::with_capacity(n);
    for _ in 0..n {
        let total: u32 = pool.iter().map(|&(_, w)| w).sum();
        let mut t = rng.random_range(0..total);
        let idx = pool
            .iter()
            .position(|&(_, w)| {
                if t < w {
                    true
                } else {
                    t -= w;
                    false
                }
            })
            .expect("cumulative walk stays in range");
        chosen.push(pool.remove(idx).0);
    }
    chosen.sort_unstable();
    chosen
}

fn render(tile_motifs: &[u8], rng: &mut impl Rng) -> RgbImage {
    let mut image = RgbImage::filled(IMAGE_SIDE, IMAGE_SIDE, [0, 0, 0]);
    for (t, &motif) in tile_motifs.iter().enumerate() {
        let tile = motif_tile(motif);
        let (tx, ty) = (t % GRID, t / GRID);
        let offset: [i32; 3] = std::array::from_fn(|_| rng.random_range(-10..=10));
        for y in 0..TILE {
            for x in 0..TILE {
                let p = tile.get(x, y);
                let jittered =
                    std::array::from_fn(|c| (p[c] as i32 + offset[c]).clamp(0, 255) as u8);
                image.set(tx * TILE + x, ty * TILE + y, jittered);
            }
        }
    }
    image
}

/// Generate the synthetic dataset: each image holds 1-4 weighted-drawn
/// motifs, every drawn motif occupies at least one tile, and every
/// fourth image lands in the validation split.
pub fn generate_synth_dataset(n_images: usize, seed: u64) -> Vec<SynthImage> {
    (0..n_images)
        .map(|i| {
            let image_id = format!("synth{i:03}");
            let mut rng =
                ChaCha12Rng::seed_from_u64(crate::derive_seed(seed, &format!("synth/{image_id}")));
            let n_motifs = 1 + rng.random_range(0..4);
            let chosen = pick_motifs(n_motifs, &mut rng);

            let mut cells: Vec<usize> = (0..GRID * GRID).collect();
            cells.shuffle(&mut rng);
            let mut tile_motifs = vec![0u8; GRID * GRID];
            for (slot, &motif) in chosen.iter().enumerate() {
                tile_motifs[cells[slot]] = motif;
            }
            for &cell in &cells[chosen.len()..] {
                tile_motifs[cell] = chosen[rng.random_range(0..chosen.len())];
            }

            let image = render(&tile_motifs, &mut rng);
            let class = format!("m{}", chosen[0]);
            let split = if i % 4 == 3 { Split::Val } else { Split::Train };
            SynthImage {
                image_id,
                class,
                split,
                tile_motifs,
                image,
            }
        })
        .collect()
}

/// Write images under `dir/images/` and a `manifest.tsv` beside them;
/// returns the manifest path. Manifest paths are relative to `dir`.
pub fn write_synth_dataset(images: &[SynthImage], dir: &Path) -> Result<PathBuf, SynthError> {
    let image_dir = dir.join("images");
    std::fs::create_dir_all(&image_dir)?;
    let mut manifest = String::new();
    for img in images {
        let file = format!("images/{}.png", img.image_id);
        img.image.save_png(&dir.join(&file))?;
        manifest.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            img.image_id,
            file,
            img.class,
            img.split.as_str()
        ));
    }
    let path = dir.join("manifest.tsv");
    std::fs::write(&path, manifest)?;
    Ok(path)
}
