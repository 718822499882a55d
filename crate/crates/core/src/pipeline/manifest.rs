//! Dataset manifest: UTF-8 lines of `image_id\tpath\tclass\tsplit`.

use crate::tasks::Split;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest line {line}: expected 4 tab-separated non-empty fields, got {content:?}")]
    BadRow { line: usize, content: String },
    #[error("manifest line {line}: image id {id:?} may use only [A-Za-z0-9._-]")]
    BadImageId { line: usize, id: String },
    #[error("manifest line {line}: duplicate image id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("manifest line {line}: split must be \"train\" or \"val\", got {token:?}")]
    UnknownSplit { line: usize, token: String },
    #[error("manifest image {id:?}: file {path} does not exist")]
    MissingFile { id: String, path: PathBuf },
    #[error("manifest has no {split} images")]
    EmptySplit { split: &'static str },
}

/// One manifest record with its path resolved to the filesystem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub image_id: String,
    pub path: PathBuf,
    pub class: String,
    pub split: Split,
}

/// The parsed manifest, in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    entries: Vec<ManifestEntry>,
}

fn valid_image_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
}

impl Manifest {
    /// Parse and validate a manifest file. Relative image paths are
    /// resolved against the manifest's own directory; every referenced
    /// file must exist.
    pub fn load(path: &Path) -> Result<Manifest, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
            path: path.to_owned(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Manifest::parse(&text, base)
    }

    /// Parse manifest text, resolving relative paths against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Manifest, ManifestError> {
        let mut entries = Vec::new();
        let mut seen = BTreeMap::new();
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').collect();
            if fields.len() != 4 || fields.iter().any(|f| f.is_empty()) {
                return Err(ManifestError::BadRow {
                    line,
                    content: raw.to_owned(),
                });
            }
            let (id, rel_path, class, split_token) =
                (fields[0], fields[1], fields[2], fields[3]);
            if !valid_image_id(id) {
                return Err(ManifestError::BadImageId {
                    line,
                    id: id.to_owned(),
                });
            }
            if let Some(first) = seen.insert(id.to_owned(), line) {
                let _ = first;
                return Err(ManifestError::DuplicateId {
                    line,
                    id: id.to_owned(),
                });
            }
            let split = Split::parse(split_token).ok_or_else(|| ManifestError::UnknownSplit {
                line,
                token: split_token.to_owned(),
            })?;
            let rel = Path::new(rel_path);
            let resolved = if rel.is_relative() {
                base.join(rel)
            } else {
                rel.to_owned()
            };
            if !resolved.exists() {
                return Err(ManifestError::MissingFile {
                    id: id.to_owned(),
                    path: resolved,
                });
            }
            entries.push(ManifestEntry {
                image_id: id.to_owned(),
                path: resolved,
                class: class.to_owned(),
                split,
            });
        }
        for (split, name) in [(Split::Train, "train"), (Split::Val, "val")] {
            if !entries.iter().any(|e| e.split == split) {
                return Err(ManifestError::EmptySplit { split: name });
            }
        }
        Ok(Manifest { entries })
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, image_id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.image_id == image_id)
    }

    /// Entries of one split, in manifest order.
    pub fn split_entries(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    /// Image ids of one split, in manifest order.
    pub fn split_ids(&self, split: Split) -> Vec<String> {
        self.split_entries(split)
            .map(|e| e.image_id.clone())
            .collect()
    }

    pub fn class_of(&self) -> BTreeMap<String, String> {
        self.entries
            .iter()
            .map(|e| (e.image_id.clone(), e.class.clone()))
            .collect()
    }

    pub fn split_of(&self) -> BTreeMap<String, Split> {
        self.entries
            .iter()
            .map(|e| (e.image_id.clone(), e.split))
            .collect()
    }
}
