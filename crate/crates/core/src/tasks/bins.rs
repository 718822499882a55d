//! Six-way value binning: fixed default edges and empirical
//! equal-frequency edges.

use super::TaskError;

/// Five ascending cut points defining six half-open classes
/// [−∞,e0), [e0,e1), …, [e4,∞).
#[derive(Debug, Clone, PartialEq)]
pub struct BinSpec {
    edges: Vec<f64>,
}

impl BinSpec {
    pub fn new(edges: Vec<f64>) -> Result<Self, TaskError> {
        for (index, &value) in edges.iter().enumerate() {
            if !value.is_finite() || (index > 0 && value <= edges[index - 1]) {
                return Err(TaskError::BadEdges { index, value });
            }
        }
        Ok(Self { edges })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() + 1
    }

    /// Class index of `value`: the number of edges at or below it.
    pub fn classify(&self, value: f64) -> usize {
        self.edges.iter().filter(|&&e| value >= e).count()
    }
}

/// Default sentence-length bins: <18, [18,21), [21,23), [23,26), [26,28), ≥28.
pub fn table3_sl_bins() -> BinSpec {
    BinSpec::new(vec![18.0, 21.0, 23.0, 26.0, 28.0]).expect("static edges")
}

/// Default compactness bins for the shape variant of CB.
pub fn table3_cb_shape_bins() -> BinSpec {
    BinSpec::new(vec![0.153, 0.207, 0.263, 0.336, 0.462]).expect("static edges")
}

/// Default intra-cluster-variation bins for the color variant of CB.
pub fn table3_cb_color_bins() -> BinSpec {
    BinSpec::new(vec![0.063, 0.085, 0.104, 0.125, 0.155]).expect("static edges")
}

/// Edges at the k/n_bins empirical quantiles (k = 1..n_bins−1) so each
/// bin receives an equal share of the values, up to ties.
pub fn equal_frequency_bins(values: &[f64], n_bins: usize) -> Result<BinSpec, TaskError> {
    if values.len() < n_bins || n_bins < 2 {
        return Err(TaskError::TooFewValues {
            n_bins,
            got: values.len(),
        });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(TaskError::NonFiniteValue { index });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = 1;
    for w in sorted.windows(2) {
        if w[1] > w[0] {
            distinct += 1;
        }
    }
    if distinct < n_bins {
        return Err(TaskError::TooFewDistinct { distinct, n_bins });
    }
    let n = sorted.len();
    let edges: Vec<f64> = (1..n_bins).map(|k| sorted[k * n / n_bins]).collect();
    for (index, w) in edges.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(TaskError::DegenerateEdges {
                index: index + 1,
                value: w[1],
            });
        }
    }
    BinSpec::new(edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentence_length_default_edges() {
        let bins = table3_sl_bins();
        assert_eq!(bins.classify(17.0), 0);
        assert_eq!(bins.classify(18.0), 1);
        assert_eq!(bins.classify(21.0), 2);
        assert_eq!(bins.classify(22.9), 2);
        assert_eq!(bins.classify(23.0), 3);
        assert_eq!(bins.classify(26.0), 4);
        assert_eq!(bins.classify(27.9), 4);
        assert_eq!(bins.classify(28.0), 5);
        assert_eq!(bins.classify(100.0), 5);
    }

    #[test]
    fn shape_and_color_default_edges() {
        let shape = table3_cb_shape_bins();
        assert_eq!(shape.classify(0.20), 1);
        assert_eq!(shape.classify(0.50), 5);
        assert_eq!(shape.classify(0.01), 0);
        let color = table3_cb_color_bins();
        assert_eq!(color.classify(0.09), 2);
        assert_eq!(color.classify(0.16), 5);
        assert_eq!(color.classify(0.063), 1);
    }

    #[test]
    fn every_value_lands_in_exactly_one_bin() {
        let bins = table3_sl_bins();
        for v in 0..400 {
            let cls = bins.classify(v as f64 / 10.0);
            assert!(cls < bins.n_bins());
        }
    }

    #[test]
    fn edges_must_increase() {
        assert!(matches!(
            BinSpec::new(vec![1.0, 1.0]),
            Err(TaskError::BadEdges { index: 1, .. })
        ));
        assert!(matches!(
            BinSpec::new(vec![2.0, 1.0]),
            Err(TaskError::BadEdges { index: 1, .. })
        ));
        assert!(BinSpec::new(vec![]).is_ok());
    }

    #[test]
    fn six_hundred_distinct_values_split_evenly() {
        // Present out of order to prove sorting happens inside.
        let mut values: Vec<f64> = (1..=600).map(|v| v as f64).collect();
        values.reverse();
        values.swap(17, 301);
        let bins = equal_frequency_bins(&values, 6).unwrap();
        assert_eq!(bins.edges(), &[101.0, 201.0, 301.0, 401.0, 501.0]);
        let mut counts = [0usize; 6];
        for v in 1..=600 {
            counts[bins.classify(v as f64)] += 1;
        }
        assert_eq!(counts, [100; 6]);
    }

    #[test]
    fn all_equal_values_are_rejected() {
        let values = vec![3.3; 50];
        assert!(matches!(
            equal_frequency_bins(&values, 6),
            Err(TaskError::TooFewDistinct { distinct: 1, .. })
        ));
    }

    #[test]
    fn heavy_ties_at_a_quantile_are_rejected() {
        // 8 distinct values but the mass concentrates so two quantile
        // edges coincide.
        let mut values = vec![5.0; 500];
        for v in 0..7 {
            values.push(v as f64);
        }
        assert!(matches!(
            equal_frequency_bins(&values, 6),
            Err(TaskError::DegenerateEdges { .. })
        ));
    }

    #[test]
    fn quantile_edges_are_monotone_on_random_values() {
        let mut state = 31u64;
        for _ in 0..20 {
            let values: Vec<f64> = (0..200)
                .map(|_| {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    (state % 100_000) as f64 / 1000.0
                })
                .collect();
            if let Ok(bins) = equal_frequency_bins(&values, 6) {
                for w in bins.edges().windows(2) {
                    assert!(w[1] > w[0]);
                }
                // Each bin holds roughly an equal share.
                let mut counts = [0usize; 6];
                for &v in &values {
                    counts[bins.classify(v)] += 1;
                }
                for &c in &counts {
                    assert!((20..=47).contains(&c), "lopsided bins: {counts:?}");
                }
            }
        }
    }

    #[test]
    fn too_few_values_is_an_error() {
        assert!(matches!(
            equal_frequency_bins(&[1.0, 2.0, 3.0], 6),
            Err(TaskError::TooFewValues { .. })
        ));
    }
}
