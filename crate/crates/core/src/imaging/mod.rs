//! Image handling, SLIC superpixel segmentation, and per-superpixel statistics.

mod color;
mod connectivity;
mod slic;
mod stats;

pub use color::rgb_to_lab;
pub use connectivity::enforce_connectivity;
pub use slic::{slic_segment, SlicParams};
pub use stats::{compactness_score, icv_score, superpixel_stats, SuperpixelStats};

use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("failed to read image {path}: {source}")]
    Io {
        path: String,
        source: image::ImageError,
    },
    #[error("empty image (zero width or height)")]
    EmptyImage,
    #[error("requested {requested} segments but image has only {pixels} pixels")]
    TooManySegments { requested: usize, pixels: usize },
    #[error("n_segments must be at least 1")]
    ZeroSegments,
    #[error("label map size {got} does not match image size {expected}")]
    LabelMapMismatch { got: usize, expected: usize },
    #[error("label {label} not present in segmentation")]
    UnknownLabel { label: u32 },
    #[error("non-positive perimeter {perimeter} for compactness score")]
    NonPositivePerimeter { perimeter: f64 },
    #[error("empty pixel mask")]
    EmptyMask,
}

/// An 8-bit RGB raster in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    /// `3 * width * height` bytes, `[r, g, b]` per pixel, row-major.
    pub pixels: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Self {
        assert_eq!(pixels.len(), 3 * width * height, "pixel buffer size");
        Self {
            width,
            height,
            pixels,
        }
    }

    /// Solid-color image.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let mut pixels = Vec::with_capacity(3 * width * height);
        for _ in 0..width * height {
            pixels.extend_from_slice(&rgb);
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = 3 * (y * self.width + x);
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// Decode an image file (PNG or JPEG) into an `RgbImage`.
    pub fn open(path: &Path) -> Result<Self, ImagingError> {
        let img = image::open(path)
            .map_err(|source| ImagingError::Io {
                path: path.display().to_string(),
                source,
            })?
            .to_rgb8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        if w == 0 || h == 0 {
            return Err(ImagingError::EmptyImage);
        }
        Ok(Self::new(w, h, img.into_raw()))
    }

    /// Write the image as PNG.
    pub fn save_png(&self, path: &Path) -> Result<(), ImagingError> {
        let buf: image::RgbImage = image::ImageBuffer::from_raw(
            self.width as u32,
            self.height as u32,
            self.pixels.clone(),
        )
        .expect("buffer size matches dimensions");
        buf.save_with_format(path, image::ImageFormat::Png)
            .map_err(|source| ImagingError::Io {
                path: path.display().to_string(),
                source,
            })
    }

    /// Nearest-neighbor resize to `width x height`.
    ///
    /// Deterministic: destination pixel centers are mapped back onto the
    /// source grid and floored.
    pub fn resize_nearest(&self, width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "target size must be positive");
        if width == self.width && height == self.height {
            return self.clone();
        }
        let mut pixels = Vec::with_capacity(3 * width * height);
        for y in 0..height {
            let sy = (((y as f64 + 0.5) * self.height as f64 / height as f64) as usize)
                .min(self.height - 1);
            for x in 0..width {
                let sx = (((x as f64 + 0.5) * self.width as f64 / width as f64) as usize)
                    .min(self.width - 1);
                pixels.extend_from_slice(&self.get(sx, sy));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    /// Per-pixel CIELAB conversion of the whole image, row-major.
    pub fn to_lab(&self) -> Vec<[f64; 3]> {
        self.pixels
            .chunks_exact(3)
            .map(|p| rgb_to_lab([p[0], p[1], p[2]]))
            .collect()
    }
}

/// Label map produced by superpixel segmentation of one image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    pub width: usize,
    pub height: usize,
    /// Row-major label per pixel; labels are contiguous `0..n_segments_actual`.
    pub labels: Vec<u32>,
    pub n_segments_requested: usize,
    pub n_segments_actual: usize,
}

impl Segmentation {
    #[inline]
    pub fn label(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Pixel coordinates belonging to `label`, in row-major scan order.
    pub fn pixels_of(&self, label: u32) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.label(x, y) == label {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// Persist as a 16-bit single-channel PNG.
    pub fn save_png(&self, path: &Path) -> Result<(), ImagingError> {
        assert!(
            self.n_segments_actual <= u16::MAX as usize + 1,
            "label does not fit 16-bit PNG"
        );
        let data: Vec<u16> = self.labels.iter().map(|&l| l as u16).collect();
        let buf: image::ImageBuffer<image::Luma<u16>, Vec<u16>> =
            image::ImageBuffer::from_raw(self.width as u32, self.height as u32, data)
                .expect("buffer size matches dimensions");
        buf.save_with_format(path, image::ImageFormat::Png)
            .map_err(|source| ImagingError::Io {
                path: path.display().to_string(),
                source,
            })
    }

    /// Load a segmentation previously written by [`Segmentation::save_png`].
    pub fn load_png(path: &Path, n_segments_requested: usize) -> Result<Self, ImagingError> {
        let img = image::open(path)
            .map_err(|source| ImagingError::Io {
                path: path.display().to_string(),
                source,
            })?
            .to_luma16();
        let (w, h) = (img.width() as usize, img.height() as usize);
        let labels: Vec<u32> = img.into_raw().into_iter().map(u32::from).collect();
        let n_segments_actual = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        Ok(Self {
            width: w,
            height: h,
            labels,
            n_segments_requested,
            n_segments_actual,
        })
    }
}
