//! Ranking and classification metrics for probe evaluation.

use super::ProbeError;

/// Area under the ROC curve via the Mann–Whitney rank statistic: the
/// fraction of (positive, negative) pairs ranked concordantly, ties 1/2.
pub fn binary_auc(scores: &[f64], labels: &[u8]) -> Result<f64, ProbeError> {
    if scores.len() != labels.len() {
        return Err(ProbeError::LengthMismatch {
            inputs: scores.len(),
            labels: labels.len(),
        });
    }
    if scores.is_empty() {
        return Err(ProbeError::EmptyInput);
    }
    if let Some(index) = scores.iter().position(|s| !s.is_finite()) {
        return Err(ProbeError::NonFiniteInput { index });
    }
    let n_pos = labels.iter().filter(|&&l| l != 0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(ProbeError::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Average 1-based ranks within tie groups, then sum positive ranks.
    let mut rank_sum_pos = 0.0f64;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[start]] {
            end += 1;
        }
        let avg_rank = (start + end + 2) as f64 / 2.0;
        for &idx in &order[start..=end] {
            if labels[idx] != 0 {
                rank_sum_pos += avg_rank;
            }
        }
        start = end + 1;
    }

    let np = n_pos as f64;
    let nn = n_neg as f64;
    Ok((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Macro-averaged one-vs-one AUC: for each unordered class pair, restrict
/// to samples of those classes and average the AUC with each class taken
/// as positive in turn; pairs missing a class are skipped.
pub fn ovo_auc(
    scores: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
) -> Result<f64, ProbeError> {
    if scores.len() != labels.len() {
        return Err(ProbeError::LengthMismatch {
            inputs: scores.len(),
            labels: labels.len(),
        });
    }
    if scores.is_empty() {
        return Err(ProbeError::EmptyInput);
    }
    if n_classes < 2 {
        return Err(ProbeError::TooFewClasses { n_classes });
    }
    for (index, row) in scores.iter().enumerate() {
        if row.len() != n_classes {
            return Err(ProbeError::DimMismatch {
                index,
                expected: n_classes,
                found: row.len(),
            });
        }
    }
    if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= n_classes) {
        return Err(ProbeError::LabelOutOfRange {
            index,
            label,
            n_classes,
        });
    }

    let mut total = 0.0;
    let mut n_pairs = 0usize;
    for i in 0..n_classes {
        for j in (i + 1)..n_classes {
            let subset: Vec<usize> = (0..labels.len())
                .filter(|&s| labels[s] == i || labels[s] == j)
                .collect();
            let has_i = subset.iter().any(|&s| labels[s] == i);
            let has_j = subset.iter().any(|&s| labels[s] == j);
            if !has_i || !has_j {
                continue;
            }
            let flags_i: Vec<u8> = subset.iter().map(|&s| (labels[s] == i) as u8).collect();
            let flags_j: Vec<u8> = subset.iter().map(|&s| (labels[s] == j) as u8).collect();
            let col_i: Vec<f64> = subset.iter().map(|&s| scores[s][i]).collect();
            let col_j: Vec<f64> = subset.iter().map(|&s| scores[s][j]).collect();
            let a_ij = binary_auc(&col_i, &flags_i)?;
            let a_ji = binary_auc(&col_j, &flags_j)?;
            total += (a_ij + a_ji) / 2.0;
            n_pairs += 1;
        }
    }
    if n_pairs == 0 {
        return Err(ProbeError::NoValidPairs);
    }
    Ok(total / n_pairs as f64)
}

/// Row-normalized confusion matrix in percent: entry (t, p) is the share
/// of true-class-t samples predicted as class p, times 100. Rows with no
/// samples stay all-zero.
pub fn confusion_matrix(
    predicted: &[usize],
    labels: &[usize],
    n_classes: usize,
) -> Result<Vec<Vec<f64>>, ProbeError> {
    if predicted.len() != labels.len() {
        return Err(ProbeError::LengthMismatch {
            inputs: predicted.len(),
            labels: labels.len(),
        });
    }
    for (index, pair) in predicted.iter().zip(labels).enumerate() {
        let (&p, &l) = pair;
        if p >= n_classes || l >= n_classes {
            return Err(ProbeError::LabelOutOfRange {
                index,
                label: p.max(l),
                n_classes,
            });
        }
    }
    let mut counts = vec![vec![0u64; n_classes]; n_classes];
    for (&p, &l) in predicted.iter().zip(labels) {
        counts[l][p] += 1;
    }
    let matrix = counts
        .into_iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            if total == 0 {
                vec![0.0; n_classes]
            } else {
                row.iter().map(|&c| c as f64 * 100.0 / total as f64).collect()
            }
        })
        .collect();
    Ok(matrix)
}

/// Cosine distance 1 − u·v/(‖u‖‖v‖), clamped to [0, 2].
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64, ProbeError> {
    if u.len() != v.len() {
        return Err(ProbeError::VectorLengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    if u.is_empty() {
        return Err(ProbeError::EmptyInput);
    }
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for (&a, &b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(ProbeError::ZeroVector);
    }
    Ok((1.0 - dot / (nu * nv).sqrt()).clamp(0.0, 2.0))
}

/// Negated ordinary-least-squares slope of AUC (in percentage points)
/// against bin index: positive values mean ranking quality falls as the
/// bin index (representation distance) grows.
pub fn attraction_coefficient(auc_series: &[f64]) -> Result<f64, ProbeError> {
    let n = auc_series.len();
    if n < 2 {
        return Err(ProbeError::ShortSeries { len: n });
    }
    if let Some(index) = auc_series.iter().position(|v| !v.is_finite()) {
        return Err(ProbeError::NonFiniteInput { index });
    }
    let x_mean = (n - 1) as f64 / 2.0;
    let y_mean = auc_series.iter().map(|&v| v * 100.0).sum::<f64>() / n as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &auc) in auc_series.iter().enumerate() {
        let dx = i as f64 - x_mean;
        num += dx * (auc * 100.0 - y_mean);
        den += dx * dx;
    }
    Ok(-(num / den))
}
