//! Binary embedding store.
//!
//! Little-endian layout: magic `VPEB`, version `u32` (currently 1), role
//! `u8` (0 = dictionary, 1 = representation), dim `u32`, count `u64`,
//! followed by `count` records of `id_len: u16`, UTF-8 id bytes, and `dim`
//! `f32` values. Entries are kept and written in id order, so serialization
//! is canonical and round-trips are bit-exact.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

const MAGIC: &[u8; 4] = b"VPEB";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("bad magic bytes (not an embedding store)")]
    BadMagic,
    #[error("unsupported store version {found} (expected {VERSION})")]
    VersionMismatch { found: u32 },
    #[error("truncated store: {context}")]
    Truncated { context: &'static str },
    #[error("vector for {id:?} has dim {found}, store dim is {expected}")]
    DimMismatch {
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("vector for {id:?} contains a non-finite value")]
    NonFinite { id: String },
    #[error("duplicate entity id {id:?}")]
    DuplicateId { id: String },
    #[error("invalid role byte {value}")]
    BadRole { value: u8 },
    #[error("entity id is not valid UTF-8")]
    BadId,
    #[error("store role is {found:?}, expected {expected:?}")]
    RoleMismatch { expected: StoreRole, found: StoreRole },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Which pipeline stage a store's vectors feed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoreRole {
    /// Vectors used to build the visual-word dictionary.
    Dictionary,
    /// Frozen representations that probes are trained on.
    Representation,
}

impl StoreRole {
    fn to_byte(self) -> u8 {
        match self {
            StoreRole::Dictionary => 0,
            StoreRole::Representation => 1,
        }
    }

    fn from_byte(value: u8) -> Result<Self, StoreError> {
        match value {
            0 => Ok(StoreRole::Dictionary),
            1 => Ok(StoreRole::Representation),
            _ => Err(StoreError::BadRole { value }),
        }
    }
}

/// A role-tagged map from entity id to a fixed-dimension `f32` vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    role: StoreRole,
    dim: usize,
    entries: BTreeMap<String, Vec<f32>>,
}

impl EmbeddingStore {
    pub fn new(role: StoreRole, dim: usize) -> Self {
        Self {
            role,
            dim,
            entries: BTreeMap::new(),
        }
    }

    pub fn role(&self) -> StoreRole {
        self.role
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Insert a vector, rejecting wrong dimensions, non-finite values, and
    /// duplicate ids.
    pub fn insert(&mut self, id: impl Into<String>, vector: Vec<f32>) -> Result<(), StoreError> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(StoreError::DimMismatch {
                id,
                expected: self.dim,
                found: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(StoreError::NonFinite { id });
        }
        if self.entries.contains_key(&id) {
            return Err(StoreError::DuplicateId { id });
        }
        self.entries.insert(id, vector);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.entries.get(id).map(|v| v.as_slice())
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    /// Ids in canonical (sorted) order.
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Serialize to the canonical byte layout.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.role.to_byte());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u64).to_le_bytes());
        for (id, vec) in &self.entries {
            let id_bytes = id.as_bytes();
            out.extend_from_slice(&(id_bytes.len() as u16).to_le_bytes());
            out.extend_from_slice(id_bytes);
            for v in vec {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, StoreError> {
        struct Cursor<'a> {
            bytes: &'a [u8],
            offset: usize,
        }
        impl<'a> Cursor<'a> {
            fn take(&mut self, n: usize, context: &'static str) -> Result<&'a [u8], StoreError> {
                if self.bytes.len() - self.offset < n {
                    return Err(StoreError::Truncated { context });
                }
                let slice = &self.bytes[self.offset..self.offset + n];
                self.offset += n;
                Ok(slice)
            }
        }
        let mut cur = Cursor { bytes, offset: 0 };

        if cur.take(4, "magic")? != MAGIC {
            return Err(StoreError::BadMagic);
        }
        let version = u32::from_le_bytes(cur.take(4, "version")?.try_into().unwrap());
        if version != VERSION {
            return Err(StoreError::VersionMismatch { found: version });
        }
        let role = StoreRole::from_byte(cur.take(1, "role")?[0])?;
        let dim = u32::from_le_bytes(cur.take(4, "dim")?.try_into().unwrap()) as usize;
        let count = u64::from_le_bytes(cur.take(8, "count")?.try_into().unwrap());

        let mut store = Self::new(role, dim);
        for _ in 0..count {
            let id_len = u16::from_le_bytes(cur.take(2, "record id length")?.try_into().unwrap());
            let id = std::str::from_utf8(cur.take(id_len as usize, "record id")?)
                .map_err(|_| StoreError::BadId)?
                .to_owned();
            let raw = cur.take(4 * dim, "record vector")?;
            let vector: Vec<f32> = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            if vector.iter().any(|v| !v.is_finite()) {
                return Err(StoreError::NonFinite { id });
            }
            if store.entries.insert(id.clone(), vector).is_some() {
                return Err(StoreError::DuplicateId { id });
            }
        }
        Ok(store)
    }

    pub fn write(&self, path: &Path) -> Result<(), StoreError> {
        let bytes = self.to_bytes();
        let mut file = std::fs::File::create(path).map_err(|source| StoreError::Io {
            path: path.display().to_string(),
            source,
        })?;
        file.write_all(&bytes).map_err(|source| StoreError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn read(path: &Path) -> Result<Self, StoreError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|source| StoreError::Io {
                path: path.display().to_string(),
                source,
            })?;
        Self::from_bytes(&bytes)
    }

    /// Read a store and verify its role matches the caller's expectation.
    pub fn read_expect(path: &Path, role: StoreRole) -> Result<Self, StoreError> {
        let store = Self::read(path)?;
        if store.role != role {
            return Err(StoreError::RoleMismatch {
                expected: role,
                found: store.role,
            });
        }
        Ok(store)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_store() -> EmbeddingStore {
        let mut s = EmbeddingStore::new(StoreRole::Representation, 3);
        s.insert("img_b", vec![1.0, -2.5, 3.25]).unwrap();
        s.insert("img_a", vec![0.1, 0.2, 0.3]).unwrap();
        s.insert("img_c/medium/4", vec![f32::MIN_POSITIVE, 0.0, -0.0])
            .unwrap();
        s
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let s = sample_store();
        let bytes = s.to_bytes();
        let back = EmbeddingStore::from_bytes(&bytes).unwrap();
        assert_eq!(back.role(), s.role());
        assert_eq!(back.dim(), s.dim());
        assert_eq!(back.len(), s.len());
        for (id, v) in s.iter() {
            let w = back.get(id).unwrap();
            for (a, b) in v.iter().zip(w) {
                assert_eq!(a.to_bits(), b.to_bits(), "value for {id} not bit-exact");
            }
        }
        // Canonical: serializing again yields identical bytes.
        assert_eq!(bytes, back.to_bytes());
    }

    #[test]
    fn empty_store_round_trips() {
        let s = EmbeddingStore::new(StoreRole::Dictionary, 37);
        let back = EmbeddingStore::from_bytes(&s.to_bytes()).unwrap();
        assert_eq!(back.len(), 0);
        assert_eq!(back.dim(), 37);
        assert_eq!(back.role(), StoreRole::Dictionary);
    }

    #[test]
    fn header_layout_is_as_documented() {
        let mut s = EmbeddingStore::new(StoreRole::Dictionary, 2);
        s.insert("ab", vec![1.0, 2.0]).unwrap();
        let bytes = s.to_bytes();
        assert_eq!(&bytes[0..4], b"VPEB");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(bytes[8], 0); // dictionary role
        assert_eq!(u32::from_le_bytes(bytes[9..13].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(bytes[13..21].try_into().unwrap()), 1);
        assert_eq!(u16::from_le_bytes(bytes[21..23].try_into().unwrap()), 2);
        assert_eq!(&bytes[23..25], b"ab");
        assert_eq!(f32::from_le_bytes(bytes[25..29].try_into().unwrap()), 1.0);
        assert_eq!(bytes.len(), 25 + 8);
    }

    #[test]
    fn rejects_nan_at_insert() {
        let mut s = EmbeddingStore::new(StoreRole::Representation, 2);
        match s.insert("x", vec![0.0, f32::NAN]) {
            Err(StoreError::NonFinite { id }) => assert_eq!(id, "x"),
            other => panic!("expected NonFinite, got {other:?}"),
        }
        assert!(s.insert("x", vec![0.0, f32::INFINITY]).is_err());
    }

    #[test]
    fn rejects_dim_mismatch_and_duplicates() {
        let mut s = EmbeddingStore::new(StoreRole::Representation, 2);
        assert!(matches!(
            s.insert("x", vec![1.0]),
            Err(StoreError::DimMismatch { .. })
        ));
        s.insert("x", vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            s.insert("x", vec![3.0, 4.0]),
            Err(StoreError::DuplicateId { .. })
        ));
    }

    #[test]
    fn read_errors_are_distinct() {
        let good = sample_store().to_bytes();

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            EmbeddingStore::from_bytes(&bad_magic),
            Err(StoreError::BadMagic)
        ));

        let mut bad_version = good.clone();
        bad_version[4] = 9;
        assert!(matches!(
            EmbeddingStore::from_bytes(&bad_version),
            Err(StoreError::VersionMismatch { found: 9 })
        ));

        let truncated = &good[..good.len() - 3];
        assert!(matches!(
            EmbeddingStore::from_bytes(truncated),
            Err(StoreError::Truncated { .. })
        ));

        let mut bad_role = good.clone();
        bad_role[8] = 7;
        assert!(matches!(
            EmbeddingStore::from_bytes(&bad_role),
            Err(StoreError::BadRole { value: 7 })
        ));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.vpeb");
        let s = sample_store();
        s.write(&path).unwrap();
        let back = EmbeddingStore::read(&path).unwrap();
        assert_eq!(back, s);
        assert!(matches!(
            EmbeddingStore::read_expect(&path, StoreRole::Dictionary),
            Err(StoreError::RoleMismatch { .. })
        ));
    }

    #[test]
    fn two_writes_are_byte_identical() {
        let s = sample_store();
        assert_eq!(s.to_bytes(), s.to_bytes());
        // Insertion order must not matter: same entries, different order.
        let mut t = EmbeddingStore::new(StoreRole::Representation, 3);
        let entries: Vec<(String, Vec<f32>)> = s
            .iter()
            .map(|(id, v)| (id.to_owned(), v.to_vec()))
            .collect();
        for (id, v) in entries.into_iter().rev() {
            t.insert(id, v).unwrap();
        }
        assert_eq!(t.to_bytes(), s.to_bytes());
    }
}
