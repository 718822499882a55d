//! Superpixel patches, the built-in toy encoder, and the binary embedding
//! store shared by dictionary- and representation-role vectors.

mod patch;
mod store;
mod toy;

pub use patch::{full_image_patch, prepare_patch, prepare_patches, FillPolicy, Patch};
pub use store::{EmbeddingStore, StoreError, StoreRole};
pub use toy::{toy_encode, TOY_DIM};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("target patch size must be positive")]
    ZeroTargetSize,
    #[error("label {label} not present in segmentation")]
    UnknownLabel { label: u32 },
    #[error("label map size does not match image size")]
    SizeMismatch,
    #[error(transparent)]
    Imaging(#[from] crate::imaging::ImagingError),
}

/// Entity id of a superpixel: `image_id/resolution_tag/label`.
///
/// Image ids therefore must not contain `/`; the manifest loader enforces
/// this.
pub fn superpixel_id(image_id: &str, resolution_tag: &str, label: u32) -> String {
    format!("{image_id}/{resolution_tag}/{label}")
}

/// Invert [`superpixel_id`]. Returns `(image_id, resolution_tag, label)`.
pub fn parse_superpixel_id(id: &str) -> Option<(&str, &str, u32)> {
    let mut parts = id.splitn(3, '/');
    let image = parts.next()?;
    let tag = parts.next()?;
    let label = parts.next()?.parse().ok()?;
    Some((image, tag, label))
}
