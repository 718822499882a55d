//! Class balancing by random over-sampling.

use super::ProbeError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::collections::BTreeMap;

/// Resample minority classes with replacement until every class matches
/// the majority count. The original samples come first in input order;
/// duplicates follow, grouped by ascending class label.
pub fn random_oversample(
    inputs: &[Vec<f64>],
    labels: &[usize],
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<usize>), ProbeError> {
    if inputs.is_empty() {
        return Err(ProbeError::EmptyInput);
    }
    if inputs.len() != labels.len() {
        return Err(ProbeError::LengthMismatch {
            inputs: inputs.len(),
            labels: labels.len(),
        });
    }
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &label) in labels.iter().enumerate() {
        members.entry(label).or_default().push(i);
    }
    if members.len() < 2 {
        return Err(ProbeError::SingleClass);
    }
    let majority = members.values().map(Vec::len).max().unwrap();

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut out_inputs = inputs.to_vec();
    let mut out_labels = labels.to_vec();
    for (&label, idx) in &members {
        for _ in idx.len()..majority {
            let pick = idx[rng.random_range(0..idx.len())];
            out_inputs.push(inputs[pick].clone());
            out_labels.push(label);
        }
    }
    Ok((out_inputs, out_labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(labels: &[usize]) -> BTreeMap<usize, usize> {
        let mut map = BTreeMap::new();
        for &l in labels {
            *map.entry(l).or_insert(0) += 1;
        }
        map
    }

    #[test]
    fn minority_is_raised_to_majority() {
        let inputs = vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]];
        let labels = vec![0, 0, 0, 1];
        let (xi, yi) = random_oversample(&inputs, &labels, 7).unwrap();
        let c = counts(&yi);
        assert_eq!(c[&0], 3);
        assert_eq!(c[&1], 3);
        assert_eq!(xi.len(), 6);
        // Every duplicate of class 1 must be the single class-1 sample.
        for (x, &y) in xi.iter().zip(&yi) {
            if y == 1 {
                assert_eq!(x, &vec![4.0]);
            }
        }
    }

    #[test]
    fn balanced_input_is_identity() {
        let inputs = vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]];
        let labels = vec![0, 1, 0, 1];
        let (xi, yi) = random_oversample(&inputs, &labels, 7).unwrap();
        assert_eq!(xi, inputs);
        assert_eq!(yi, labels);
    }

    #[test]
    fn three_class_counts_equalize_from_members_only() {
        let inputs: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
        let labels = vec![0, 0, 0, 0, 0, 1, 1, 2];
        let (xi, yi) = random_oversample(&inputs, &labels, 99).unwrap();
        let c = counts(&yi);
        assert_eq!(c[&0], 5);
        assert_eq!(c[&1], 5);
        assert_eq!(c[&2], 5);
        for (x, &y) in xi.iter().zip(&yi) {
            let v = x[0] as usize;
            assert_eq!(labels[v], y, "duplicate drawn from the wrong class");
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let inputs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let labels = vec![0, 0, 0, 0, 0, 0, 0, 1, 1, 2];
        let a = random_oversample(&inputs, &labels, 5).unwrap();
        let b = random_oversample(&inputs, &labels, 5).unwrap();
        assert_eq!(a, b);
        let c = random_oversample(&inputs, &labels, 6).unwrap();
        assert_eq!(counts(&a.1), counts(&c.1));
    }

    #[test]
    fn single_class_is_rejected() {
        let inputs = vec![vec![1.0], vec![2.0]];
        assert!(matches!(
            random_oversample(&inputs, &[3, 3], 0),
            Err(ProbeError::SingleClass)
        ));
    }
}
