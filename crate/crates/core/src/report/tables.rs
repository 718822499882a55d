//! CSV table emission. All tables are plain strings; callers persist them.

use super::annotation::{Feature, FeatureAnnotation};
use super::ReportError;
use std::fmt::Write as _;

/// Validation metrics of one representation set, one table row.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportInputs {
    pub representation: String,
    /// Externally supplied target-task accuracy, never computed here.
    pub target: Option<f64>,
    pub wc_per_word: Vec<f64>,
    pub mwc_per_word: Vec<f64>,
    pub sl_auc: f64,
    pub cb_shape_auc: f64,
    pub cb_color_auc: f64,
    pub somo_far_auc: f64,
    pub somo_close_auc: f64,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn cell(value: f64) -> String {
    format!("{value:.6}")
}

/// The headline table: one row per representation set, AUC per task.
/// The Target column appears only when some row supplies one; WC and
/// MWC cells are means over their per-word AUCs.
pub fn report_table(rows: &[ReportInputs]) -> Result<String, ReportError> {
    let with_target = rows.iter().any(|r| r.target.is_some());
    let mut out = String::from("Representation");
    if with_target {
        out.push_str(",Target");
    }
    out.push_str(",WC,MWC,SL,CBshape,CBcolor,SOMOfar,SOMOclose\n");
    for row in rows {
        if row.representation.contains([',', '\n', '\r']) {
            return Err(ReportError::BadName {
                name: row.representation.clone(),
            });
        }
        if row.wc_per_word.is_empty() {
            return Err(ReportError::EmptyMetric { task: "WC" });
        }
        if row.mwc_per_word.is_empty() {
            return Err(ReportError::EmptyMetric { task: "MWC" });
        }
        out.push_str(&row.representation);
        if with_target {
            out.push(',');
            if let Some(t) = row.target {
                out.push_str(&cell(t));
            }
        }
        for value in [
            mean(&row.wc_per_word),
            mean(&row.mwc_per_word),
            row.sl_auc,
            row.cb_shape_auc,
            row.cb_color_auc,
            row.somo_far_auc,
            row.somo_close_auc,
        ] {
            out.push(',');
            out.push_str(&cell(value));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Per-word metric file: `word_id,<metric>` rows in word order.
pub fn per_word_table(metric: &str, values: &[f64]) -> String {
    let mut out = format!("word_id,{metric}\n");
    for (word_id, value) in values.iter().enumerate() {
        let _ = writeln!(out, "{word_id},{}", cell(*value));
    }
    out
}

/// Row-normalized confusion matrix (percent) with a label column.
pub fn confusion_table(matrix: &[Vec<f64>]) -> String {
    let k = matrix.len();
    let mut out = String::from("label");
    for p in 0..k {
        let _ = write!(out, ",pred{p}");
    }
    out.push('\n');
    for (label, row) in matrix.iter().enumerate() {
        let _ = write!(out, "{label}");
        for value in row {
            out.push(',');
            out.push_str(&cell(*value));
        }
        out.push('\n');
    }
    out
}

/// Plot-ready per-word distance-bin series: `word_id,bin,auc` rows.
pub fn mwc_series_table(per_word_bins: &[Vec<f64>]) -> String {
    let mut out = String::from("word_id,bin,auc\n");
    for (word_id, bins) in per_word_bins.iter().enumerate() {
        for (bin, auc) in bins.iter().enumerate() {
            let _ = writeln!(out, "{word_id},{bin},{}", cell(*auc));
        }
    }
    out
}

/// One feature's aggregate of a per-word metric.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureAggregate {
    pub feature: Feature,
    pub mean: f64,
    pub n_words: usize,
}

/// Unweighted per-feature means of a per-word metric. Words annotated
/// with several features contribute to each; features with no annotated
/// word are returned separately for the caller to warn about.
pub fn aggregate_by_feature(
    per_word: &[f64],
    annotation: &FeatureAnnotation,
) -> Result<(Vec<FeatureAggregate>, Vec<Feature>), ReportError> {
    let mut aggregates = Vec::new();
    let mut omitted = Vec::new();
    for feature in Feature::ALL {
        let words = annotation.words_of(feature);
        for &w in &words {
            if w as usize >= per_word.len() {
                return Err(ReportError::WordOutOfRange {
                    word_id: w,
                    n_words: per_word.len(),
                });
            }
        }
        if words.is_empty() {
            omitted.push(feature);
            continue;
        }
        let values: Vec<f64> = words.iter().map(|&w| per_word[w as usize]).collect();
        aggregates.push(FeatureAggregate {
            feature,
            mean: mean(&values),
            n_words: words.len(),
        });
    }
    Ok((aggregates, omitted))
}

/// Per-feature table: `feature,<metric>,n_words` rows.
pub fn feature_table(metric: &str, aggregates: &[FeatureAggregate]) -> String {
    let mut out = format!("feature,{metric},n_words\n");
    for a in aggregates {
        let _ = writeln!(out, "{},{},{}", a.feature.as_str(), cell(a.mean), a.n_words);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(name: &str, target: Option<f64>) -> ReportInputs {
        ReportInputs {
            representation: name.to_owned(),
            target,
            wc_per_word: vec![0.8, 0.9, 1.0],
            mwc_per_word: vec![0.5, 0.7],
            sl_auc: 0.61,
            cb_shape_auc: 0.62,
            cb_color_auc: 0.63,
            somo_far_auc: 0.64,
            somo_close_auc: 0.65,
        }
    }

    #[test]
    fn table_has_one_row_per_set_and_wc_is_the_per_word_mean() {
        let table = report_table(&[row("toy", None)]).unwrap();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(
            lines[0],
            "Representation,WC,MWC,SL,CBshape,CBcolor,SOMOfar,SOMOclose"
        );
        assert_eq!(lines.len(), 2);
        let cells: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(cells[0], "toy");
        assert_eq!(cells[1], "0.900000");
        assert_eq!(cells[2], "0.600000");
        assert_eq!(cells.len(), 8);

        // The WC cell equals a recomputation from the per-word table.
        let per_word = per_word_table("auc", &[0.8, 0.9, 1.0]);
        let recomputed: Vec<f64> = per_word
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        assert_eq!(cells[1], format!("{:.6}", mean(&recomputed)));
    }

    #[test]
    fn target_column_appears_only_when_supplied() {
        let without = report_table(&[row("toy", None)]).unwrap();
        assert!(!without.contains("Target"));
        let with = report_table(&[row("resnet", Some(0.71)), row("toy", None)]).unwrap();
        let lines: Vec<&str> = with.lines().collect();
        assert_eq!(
            lines[0],
            "Representation,Target,WC,MWC,SL,CBshape,CBcolor,SOMOfar,SOMOclose"
        );
        assert!(lines[1].starts_with("resnet,0.710000,"));
        // A row without a target leaves its cell empty.
        assert!(lines[2].starts_with("toy,,"));
    }

    #[test]
    fn table_errors() {
        let mut bad = row("a,b", None);
        assert!(matches!(
            report_table(std::slice::from_ref(&bad)),
            Err(ReportError::BadName { .. })
        ));
        bad.representation = "ok".into();
        bad.wc_per_word.clear();
        assert!(matches!(
            report_table(&[bad]),
            Err(ReportError::EmptyMetric { task: "WC" })
        ));
    }

    #[test]
    fn confusion_table_rows_carry_percent_values() {
        let table = confusion_table(&[vec![75.0, 25.0], vec![0.0, 100.0]]);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[0], "label,pred0,pred1");
        assert_eq!(lines[1], "0,75.000000,25.000000");
        assert_eq!(lines[2], "1,0.000000,100.000000");
        for line in &lines[1..] {
            let sum: f64 = line
                .split(',')
                .skip(1)
                .map(|c| c.parse::<f64>().unwrap())
                .sum();
            assert!((sum - 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn mwc_series_lists_every_word_bin_cell() {
        let table = mwc_series_table(&[vec![0.5, 0.6], vec![0.7, 0.8]]);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[0], "word_id,bin,auc");
        assert_eq!(lines[1], "0,0,0.500000");
        assert_eq!(lines[4], "1,1,0.800000");
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn single_word_features_aggregate_to_their_own_values() {
        let ann = FeatureAnnotation::parse_csv("0,brightness\n1,color\n2,texture\n").unwrap();
        let (aggs, omitted) = aggregate_by_feature(&[0.4, 0.5, 0.6], &ann).unwrap();
        assert_eq!(aggs.len(), 3);
        assert_eq!(aggs[0].feature, Feature::Brightness);
        assert!((aggs[0].mean - 0.4).abs() < 1e-12);
        assert!((aggs[2].mean - 0.6).abs() < 1e-12);
        assert_eq!(
            omitted,
            vec![Feature::Lines, Feature::Shape, Feature::Form]
        );
    }

    #[test]
    fn texture_pair_averages_and_multi_feature_words_count_in_each() {
        let ann = FeatureAnnotation::parse_csv("0,texture\n1,texture\n1,color\n").unwrap();
        let (aggs, _) = aggregate_by_feature(&[0.8, 0.6], &ann).unwrap();
        let get = |f: Feature| aggs.iter().find(|a| a.feature == f).unwrap();
        assert!((get(Feature::Texture).mean - 0.7).abs() < 1e-12);
        assert_eq!(get(Feature::Texture).n_words, 2);
        assert!((get(Feature::Color).mean - 0.6).abs() < 1e-12);
    }

    #[test]
    fn random_annotations_match_a_group_by_oracle() {
        let mut state = 0x1234_5678_u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        let per_word: Vec<f64> = (0..40).map(|_| (next() % 1000) as f64 / 1000.0).collect();
        let mut csv = String::new();
        for w in 0..40u32 {
            for f in Feature::ALL {
                if next() % 3 == 0 {
                    csv.push_str(&format!("{w},{}\n", f.as_str()));
                }
            }
        }
        let ann = FeatureAnnotation::parse_csv(&csv).unwrap();
        let (aggs, omitted) = aggregate_by_feature(&per_word, &ann).unwrap();
        for feature in Feature::ALL {
            let members: Vec<f64> = (0..40u32)
                .filter(|&w| ann.features_of(w).any(|g| g == feature))
                .map(|w| per_word[w as usize])
                .collect();
            match aggs.iter().find(|a| a.feature == feature) {
                Some(a) => {
                    let expect = members.iter().sum::<f64>() / members.len() as f64;
                    assert!((a.mean - expect).abs() < 1e-12);
                    assert_eq!(a.n_words, members.len());
                }
                None => {
                    assert!(members.is_empty());
                    assert!(omitted.contains(&feature));
                }
            }
        }
    }

    #[test]
    fn out_of_range_word_is_an_error() {
        let ann = FeatureAnnotation::parse_csv("9,color\n").unwrap();
        assert!(matches!(
            aggregate_by_feature(&[0.5, 0.5], &ann),
            Err(ReportError::WordOutOfRange {
                word_id: 9,
                n_words: 2
            })
        ));
    }

    #[test]
    fn feature_table_formats_aggregates() {
        let aggs = [FeatureAggregate {
            feature: Feature::Shape,
            mean: 0.725,
            n_words: 4,
        }];
        assert_eq!(
            feature_table("auc", &aggs),
            "feature,auc,n_words\nshape,0.725000,4\n"
        );
    }
}
