//! Per-class concept discovery and concept filtering.

use super::{kmeans, DictionaryError};
use crate::embedding::{parse_superpixel_id, EmbeddingStore};
use std::collections::BTreeMap;

/// One cluster of same-class superpixel embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct Concept {
    pub centroid: Vec<f64>,
    pub class_label: String,
    /// Number of superpixel embeddings assigned to this concept.
    pub member_count: usize,
    /// Externally supplied importance score, if any.
    pub importance: Option<f64>,
}

/// Result of [`build_concepts`]: concepts in stable order plus warnings
/// about classes whose k was reduced.
#[derive(Debug, Clone)]
pub struct ConceptBuild {
    /// Concepts ordered by (class ascending, cluster index ascending); the
    /// position in this vector is the concept's stable index.
    pub concepts: Vec<Concept>,
    pub warnings: Vec<String>,
}

/// Cluster each class's superpixel embeddings into `k_per_class` concepts.
///
/// `class_of` maps image ids to class labels; every embedding's image must
/// be present. Classes with fewer embeddings than `k_per_class` are
/// clustered with a reduced k and recorded in `warnings`. Deterministic:
/// classes are processed in sorted order with per-class derived seeds.
pub fn build_concepts(
    embeddings: &EmbeddingStore,
    class_of: &BTreeMap<String, String>,
    k_per_class: usize,
    seed: u64,
    kmeans_max_iter: usize,
    kmeans_tol: f64,
) -> Result<ConceptBuild, DictionaryError> {
    if k_per_class == 0 {
        return Err(DictionaryError::ZeroK);
    }
    if embeddings.is_empty() {
        return Err(DictionaryError::EmptyInput);
    }

    // Group points per class; store iteration is id-sorted, so grouping is
    // deterministic.
    let mut per_class: BTreeMap<&str, Vec<Vec<f64>>> = BTreeMap::new();
    for (id, vector) in embeddings.iter() {
        let (image_id, _, _) = parse_superpixel_id(id).ok_or_else(|| {
            DictionaryError::BadSuperpixelId { id: id.to_owned() }
        })?;
        let class = class_of
            .get(image_id)
            .ok_or_else(|| DictionaryError::MissingClass {
                image_id: image_id.to_owned(),
            })?;
        per_class
            .entry(class.as_str())
            .or_default()
            .push(vector.iter().map(|&v| v as f64).collect());
    }

    let mut concepts = Vec::new();
    let mut warnings = Vec::new();
    for (class, points) in &per_class {
        let k_eff = k_per_class.min(points.len());
        if k_eff < k_per_class {
            warnings.push(format!(
                "class {class:?}: only {} embeddings, reduced k from {k_per_class} to {k_eff}",
                points.len()
            ));
        }
        let class_seed = crate::derive_seed(seed, &format!("concepts/{class}"));
        let result = kmeans(points, k_eff, class_seed, kmeans_max_iter, kmeans_tol)?;
        let mut counts = vec![0usize; k_eff];
        for &a in &result.assignments {
            counts[a] += 1;
        }
        for (cluster, centroid) in result.centroids.into_iter().enumerate() {
            concepts.push(Concept {
                centroid,
                class_label: (*class).to_owned(),
                member_count: counts[cluster],
                importance: None,
            });
        }
    }
    Ok(ConceptBuild { concepts, warnings })
}

/// Drop infrequent concepts, rank the survivors, and keep the best
/// `keep_count`.
///
/// Concepts with `member_count < min_frequency` are removed first. The
/// remainder are ranked by importance score when `importance` is given
/// (higher is better) and by `member_count` otherwise; ties break by
/// `member_count`, then by lower stable concept index. Returns the kept
/// concepts as `(stable_index, concept)` in stable-index order, with
/// scores attached.
pub fn filter_concepts(
    concepts: &[Concept],
    importance: Option<&BTreeMap<usize, f64>>,
    min_frequency: usize,
    keep_count: usize,
) -> Result<Vec<(usize, Concept)>, DictionaryError> {
    let survivors: Vec<usize> = (0..concepts.len())
        .filter(|&i| concepts[i].member_count >= min_frequency)
        .collect();
    if survivors.len() < keep_count {
        return Err(DictionaryError::NotEnoughSurvivors {
            survivors: survivors.len(),
            keep_count,
            min_frequency,
        });
    }

    let mut ranked = survivors;
    ranked.sort_by(|&a, &b| {
        let score = |i: usize| -> (f64, usize) {
            let primary = match importance {
                Some(map) => map.get(&i).copied().unwrap_or(f64::NEG_INFINITY),
                None => concepts[i].member_count as f64,
            };
            (primary, concepts[i].member_count)
        };
        let (sa, ma) = score(a);
        let (sb, mb) = score(b);
        sb.partial_cmp(&sa)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(mb.cmp(&ma))
            .then(a.cmp(&b))
    });
    ranked.truncate(keep_count);
    ranked.sort_unstable();

    Ok(ranked
        .into_iter()
        .map(|i| {
            let mut c = concepts[i].clone();
            c.importance = importance.and_then(|m| m.get(&i).copied());
            (i, c)
        })
        .collect())
}
