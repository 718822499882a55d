//! The `report` stage: collect every probe's metrics JSON into the final
//! CSV tables (headline row, per-word AUCs, confusion matrices, MWC
//! distance series, attraction coefficients, optional feature rollups).

use super::artifacts::{self, BinaryMetrics, MulticlassMetrics, PerWordMetrics};
use super::{Pipeline, PipelineError, Stage, StageOutput};
use crate::report::{
    aggregate_by_feature, confusion_table, feature_table, report_table, FeatureAnnotation,
    ReportInputs,
};
use crate::tasks::TaskKind;
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

fn metrics_path(pipeline: &Pipeline, kind: TaskKind) -> Result<PathBuf, PipelineError> {
    let path = pipeline.layout().probe_metrics_json(kind);
    pipeline.need(&path, Stage::Probe(kind))?;
    Ok(path)
}

/// Dense word-indexed vector holding `values` at their word ids, for
/// feature aggregation (which looks metrics up by word id).
fn dense_by_word(n_words: usize, values: impl Iterator<Item = (u32, f64)>) -> Vec<f64> {
    let mut dense = vec![0.0; n_words];
    for (word, value) in values {
        dense[word as usize] = value;
    }
    dense
}

pub(super) fn run_report(pipeline: &Pipeline) -> Result<StageOutput, PipelineError> {
    let layout = pipeline.layout();
    let wc: PerWordMetrics = artifacts::read_json(&metrics_path(pipeline, TaskKind::Wc)?)?;
    let mwc: PerWordMetrics = artifacts::read_json(&metrics_path(pipeline, TaskKind::Mwc)?)?;
    let sl: MulticlassMetrics = artifacts::read_json(&metrics_path(pipeline, TaskKind::Sl)?)?;
    let cb_shape: MulticlassMetrics =
        artifacts::read_json(&metrics_path(pipeline, TaskKind::CbShape)?)?;
    let cb_color: MulticlassMetrics =
        artifacts::read_json(&metrics_path(pipeline, TaskKind::CbColor)?)?;
    let somo_close: BinaryMetrics =
        artifacts::read_json(&metrics_path(pipeline, TaskKind::SomoClose)?)?;
    let somo_far: BinaryMetrics =
        artifacts::read_json(&metrics_path(pipeline, TaskKind::SomoFar)?)?;

    let mut artifact_paths = Vec::new();
    let mut warnings = Vec::new();

    // Per-word tables carry the actual word ids so skipped words leave
    // visible gaps instead of shifting their neighbours.
    for (metrics, path) in [
        (&wc, layout.wc_per_word_csv()),
        (&mwc, layout.mwc_per_word_csv()),
    ] {
        let mut table = String::from("word_id,auc\n");
        for m in &metrics.per_word {
            let _ = writeln!(table, "{},{:.6}", m.word, m.auc);
        }
        artifacts::write_text(&path, &table)?;
        artifact_paths.push(path);
    }

    for (metrics, kind) in [
        (&sl, TaskKind::Sl),
        (&cb_shape, TaskKind::CbShape),
        (&cb_color, TaskKind::CbColor),
    ] {
        let path = layout.confusion_csv(kind);
        artifacts::write_text(&path, &confusion_table(&metrics.confusion))?;
        artifact_paths.push(path);
    }

    let mut series_table = String::from("word_id,bin,auc\n");
    for s in &mwc.series {
        for (bin, auc) in s.auc_per_bin.iter().enumerate() {
            let _ = writeln!(series_table, "{},{bin},{auc:.6}", s.word);
        }
    }
    let series_path = layout.mwc_series_csv();
    artifacts::write_text(&series_path, &series_table)?;
    artifact_paths.push(series_path);

    let mut attraction_table = String::from("word_id,attraction\n");
    for a in &mwc.attraction {
        let _ = writeln!(attraction_table, "{},{:.6}", a.word, a.coefficient);
    }
    let attraction_path = layout.attraction_csv();
    artifacts::write_text(&attraction_path, &attraction_table)?;
    artifact_paths.push(attraction_path);

    if let Some(annotation_path) = &pipeline.config().report.annotation {
        let text = artifacts::read_text(annotation_path)?;
        let annotation = FeatureAnnotation::parse_csv(&text)?;

        let wc_words: BTreeSet<u32> = wc.per_word.iter().map(|m| m.word).collect();
        let n_words = wc_words.iter().max().map_or(0, |&w| w as usize + 1);
        let dense_auc = dense_by_word(n_words, wc.per_word.iter().map(|m| (m.word, m.auc)));
        let mut wc_annotation = annotation.clone();
        wc_annotation.retain_words(|w| wc_words.contains(&w));
        let (aggregates, omitted) = aggregate_by_feature(&dense_auc, &wc_annotation)?;
        for feature in omitted {
            warnings.push(format!(
                "feature {:?} has no annotated trained WC word; omitted from wc_by_feature",
                feature.as_str()
            ));
        }
        let path = layout.wc_by_feature_csv();
        artifacts::write_text(&path, &feature_table("auc", &aggregates))?;
        artifact_paths.push(path);

        let attraction_words: BTreeSet<u32> = mwc.attraction.iter().map(|a| a.word).collect();
        let n_words = attraction_words.iter().max().map_or(0, |&w| w as usize + 1);
        let dense_attraction = dense_by_word(
            n_words,
            mwc.attraction.iter().map(|a| (a.word, a.coefficient)),
        );
        let mut mwc_annotation = annotation;
        mwc_annotation.retain_words(|w| attraction_words.contains(&w));
        let (aggregates, omitted) = aggregate_by_feature(&dense_attraction, &mwc_annotation)?;
        for feature in omitted {
            warnings.push(format!(
                "feature {:?} has no annotated word with a full distance series; omitted from attraction_by_feature",
                feature.as_str()
            ));
        }
        let path = layout.attraction_by_feature_csv();
        artifacts::write_text(&path, &feature_table("attraction", &aggregates))?;
        artifact_paths.push(path);
    }

    let inputs = ReportInputs {
        representation: pipeline.config().report.representation.clone(),
        target: pipeline.config().report.target,
        wc_per_word: wc.per_word.iter().map(|m| m.auc).collect(),
        mwc_per_word: mwc.per_word.iter().map(|m| m.auc).collect(),
        sl_auc: sl.ovo_auc,
        cb_shape_auc: cb_shape.ovo_auc,
        cb_color_auc: cb_color.ovo_auc,
        somo_far_auc: somo_far.auc,
        somo_close_auc: somo_close.auc,
    };
    // The headline table is also the stage's completion marker, so it is
    // written after every other report artifact.
    let report_path = layout.report_csv();
    artifacts::write_text(&report_path, &report_table(&[inputs])?)?;
    artifact_paths.push(report_path);

    let mut output = StageOutput::new(format!(
        "report over 7 tasks: WC mean {:.4}, MWC mean {:.4}, SL {:.4}, SOMO far/close {:.4}/{:.4}",
        wc.mean_auc, mwc.mean_auc, sl.ovo_auc, somo_far.auc, somo_close.auc,
    ));
    output.warnings = warnings;
    output.artifacts = artifact_paths;
    Ok(output)
}
