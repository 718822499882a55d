//! Readers and writers for every persisted artifact format.
//!
//! All writers are deterministic: fixed column orders, `Display`
//! (shortest round-trip) float formatting, and stable row ordering
//! supplied by the stages. Readers validate enough structure to catch
//! hand-edited or truncated files early.

use super::PipelineError;
use crate::dictionary::{CooccurrenceMatrix, DictionaryEntry, VisualWordDictionary};
use crate::embedding::{EmbeddingStore, StoreRole};
use crate::probes::ProbeModel;
use crate::tasks::Split;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub(super) fn io_err(path: &Path, source: std::io::Error) -> PipelineError {
    PipelineError::Io {
        path: path.to_owned(),
        source,
    }
}

fn bad(path: &Path, line: usize, message: impl Into<String>) -> PipelineError {
    PipelineError::BadArtifact {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

/// Write `text` to `path`, creating parent directories as needed.
pub fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_text(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    field: &str,
    value: &str,
) -> Result<T, PipelineError> {
    value
        .parse()
        .map_err(|_| bad(path, line, format!("cannot parse {field} from {value:?}")))
}

// ---------------------------------------------------------------------------
// Superpixel statistics
// ---------------------------------------------------------------------------

pub const STATS_HEADER: &str = "image_id,resolution,label,area,perimeter,co,icv,cx,cy,x0,y0,x1,y1";

/// One row of `stats.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsRow {
    pub image_id: String,
    pub resolution: String,
    pub label: u32,
    pub area: usize,
    pub perimeter: usize,
    pub co: f64,
    pub icv: f64,
    pub cx: f64,
    pub cy: f64,
    pub bbox: (usize, usize, usize, usize),
}

pub fn write_stats(path: &Path, rows: &[StatsRow]) -> Result<(), PipelineError> {
    let mut out = String::from(STATS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.image_id,
            r.resolution,
            r.label,
            r.area,
            r.perimeter,
            r.co,
            r.icv,
            r.cx,
            r.cy,
            r.bbox.0,
            r.bbox.1,
            r.bbox.2,
            r.bbox.3,
        ));
    }
    write_text(path, &out)
}

pub fn read_stats(path: &Path) -> Result<Vec<StatsRow>, PipelineError> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == STATS_HEADER => {}
        _ => return Err(bad(path, 1, format!("expected header {STATS_HEADER:?}"))),
    }
    let mut rows = Vec::new();
    for (index, raw) in lines {
        let line = index + 1;
        let f: Vec<&str> = raw.split(',').collect();
        if f.len() != 13 {
            return Err(bad(path, line, format!("expected 13 fields, got {}", f.len())));
        }
        rows.push(StatsRow {
            image_id: f[0].to_owned(),
            resolution: f[1].to_owned(),
            label: parse_field(path, line, "label", f[2])?,
            area: parse_field(path, line, "area", f[3])?,
            perimeter: parse_field(path, line, "perimeter", f[4])?,
            co: parse_field(path, line, "co", f[5])?,
            icv: parse_field(path, line, "icv", f[6])?,
            cx: parse_field(path, line, "cx", f[7])?,
            cy: parse_field(path, line, "cy", f[8])?,
            bbox: (
                parse_field(path, line, "x0", f[9])?,
                parse_field(path, line, "y0", f[10])?,
                parse_field(path, line, "x1", f[11])?,
                parse_field(path, line, "y1", f[12])?,
            ),
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Sentences and co-occurrence
// ---------------------------------------------------------------------------

pub const SENTENCES_HEADER: &str = "image_id,resolution,label,word_id";

/// One per-superpixel word assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceRow {
    pub image_id: String,
    pub resolution: String,
    pub label: u32,
    pub word_id: u32,
}

pub fn write_sentences(path: &Path, rows: &[SentenceRow]) -> Result<(), PipelineError> {
    let mut out = String::from(SENTENCES_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.image_id, r.resolution, r.label, r.word_id
        ));
    }
    write_text(path, &out)
}

pub fn read_sentences(path: &Path) -> Result<Vec<SentenceRow>, PipelineError> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == SENTENCES_HEADER => {}
        _ => return Err(bad(path, 1, format!("expected header {SENTENCES_HEADER:?}"))),
    }
    let mut rows = Vec::new();
    for (index, raw) in lines {
        let line = index + 1;
        let f: Vec<&str> = raw.split(',').collect();
        if f.len() != 4 {
            return Err(bad(path, line, format!("expected 4 fields, got {}", f.len())));
        }
        rows.push(SentenceRow {
            image_id: f[0].to_owned(),
            resolution: f[1].to_owned(),
            label: parse_field(path, line, "label", f[2])?,
            word_id: parse_field(path, line, "word_id", f[3])?,
        });
    }
    Ok(rows)
}

pub fn write_cooccurrence(path: &Path, cooc: &CooccurrenceMatrix) -> Result<(), PipelineError> {
    let mut out = String::from("word_id");
    for j in 0..cooc.n_words {
        out.push_str(&format!(",w{j}"));
    }
    out.push('\n');
    for (i, row) in cooc.counts.iter().enumerate() {
        out.push_str(&i.to_string());
        for count in row {
            out.push_str(&format!(",{count}"));
        }
        out.push('\n');
    }
    write_text(path, &out)
}

pub fn read_cooccurrence(path: &Path) -> Result<CooccurrenceMatrix, PipelineError> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    let n_words = match lines.next() {
        Some((_, header)) if header.starts_with("word_id") => {
            header.split(',').count().saturating_sub(1)
        }
        _ => return Err(bad(path, 1, "expected a word_id,... header")),
    };
    let mut counts = Vec::new();
    for (index, raw) in lines {
        let line = index + 1;
        let f: Vec<&str> = raw.split(',').collect();
        if f.len() != n_words + 1 {
            return Err(bad(
                path,
                line,
                format!("expected {} fields, got {}", n_words + 1, f.len()),
            ));
        }
        let row_id: usize = parse_field(path, line, "word_id", f[0])?;
        if row_id != counts.len() {
            return Err(bad(path, line, format!("expected row {}, got {row_id}", counts.len())));
        }
        let row: Vec<u64> = f[1..]
            .iter()
            .map(|v| parse_field(path, line, "count", v))
            .collect::<Result<_, _>>()?;
        counts.push(row);
    }
    if counts.len() != n_words {
        return Err(bad(
            path,
            counts.len() + 1,
            format!("expected {n_words} rows, got {}", counts.len()),
        ));
    }
    Ok(CooccurrenceMatrix { n_words, counts })
}

// ---------------------------------------------------------------------------
// Dictionary (concepts CSV + centroid store)
// ---------------------------------------------------------------------------

/// Persist the dictionary as the `word_id,concept_index,class_label,
/// member_count,importance` header CSV plus a dictionary-role store
/// holding concept centroids (`concept/<index>`) and word centroids
/// (`word/<id>`).
pub fn write_dictionary(
    concepts_csv: &Path,
    store_path: &Path,
    dict: &VisualWordDictionary,
) -> Result<(), PipelineError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["word_id", "concept_index", "class_label", "member_count", "importance"])
        .expect("in-memory write");
    for entry in &dict.entries {
        let importance = entry.importance.map_or(String::new(), |v| v.to_string());
        writer
            .write_record([
                entry.word_id.to_string(),
                entry.concept_index.to_string(),
                entry.class_label.clone(),
                entry.member_count.to_string(),
                importance,
            ])
            .expect("in-memory write");
    }
    let bytes = writer.into_inner().expect("in-memory flush");
    write_text(concepts_csv, &String::from_utf8(bytes).expect("utf-8 csv"))?;

    let dim = dict.dim();
    let mut store = EmbeddingStore::new(StoreRole::Dictionary, dim);
    for entry in &dict.entries {
        let vector: Vec<f32> = entry.centroid.iter().map(|&v| v as f32).collect();
        store
            .insert(format!("concept/{}", entry.concept_index), vector)
            .map_err(PipelineError::from)?;
    }
    for (word, centroid) in dict.word_centroids.iter().enumerate() {
        let vector: Vec<f32> = centroid.iter().map(|&v| v as f32).collect();
        store
            .insert(format!("word/{word}"), vector)
            .map_err(PipelineError::from)?;
    }
    if let Some(parent) = store_path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    store.write(store_path).map_err(PipelineError::from)
}

pub fn read_dictionary(
    concepts_csv: &Path,
    store_path: &Path,
) -> Result<VisualWordDictionary, PipelineError> {
    let store = EmbeddingStore::read_expect(store_path, StoreRole::Dictionary)?;
    let text = read_text(concepts_csv)?;
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let mut entries = Vec::new();
    for (index, record) in reader.records().enumerate() {
        let line = index + 2; // header is line 1
        let record = record
            .map_err(|e| bad(concepts_csv, line, format!("csv parse error: {e}")))?;
        if record.len() != 5 {
            return Err(bad(
                concepts_csv,
                line,
                format!("expected 5 fields, got {}", record.len()),
            ));
        }
        let word_id: u32 = parse_field(concepts_csv, line, "word_id", &record[0])?;
        let concept_index: usize =
            parse_field(concepts_csv, line, "concept_index", &record[1])?;
        let member_count: usize =
            parse_field(concepts_csv, line, "member_count", &record[3])?;
        let importance = if record[4].is_empty() {
            None
        } else {
            Some(parse_field(concepts_csv, line, "importance", &record[4])?)
        };
        let store_id = format!("concept/{concept_index}");
        let centroid: Vec<f64> = store
            .get(&store_id)
            .ok_or_else(|| {
                bad(concepts_csv, line, format!("centroid {store_id:?} missing from store"))
            })?
            .iter()
            .map(|&v| v as f64)
            .collect();
        entries.push(DictionaryEntry {
            concept_index,
            centroid,
            class_label: record[2].to_owned(),
            member_count,
            importance,
            word_id,
        });
    }
    if entries.is_empty() {
        return Err(bad(concepts_csv, 2, "dictionary has no concepts"));
    }
    let n_words = entries.iter().map(|e| e.word_id).max().unwrap() as usize + 1;
    let mut word_centroids = Vec::with_capacity(n_words);
    for word in 0..n_words {
        if !entries.iter().any(|e| e.word_id as usize == word) {
            return Err(bad(concepts_csv, 2, format!("word {word} has no concepts")));
        }
        let store_id = format!("word/{word}");
        let centroid: Vec<f64> = store
            .get(&store_id)
            .ok_or_else(|| {
                bad(concepts_csv, 2, format!("word centroid {store_id:?} missing from store"))
            })?
            .iter()
            .map(|&v| v as f64)
            .collect();
        word_centroids.push(centroid);
    }
    Ok(VisualWordDictionary {
        entries,
        word_centroids,
    })
}

// ---------------------------------------------------------------------------
// Bin edges
// ---------------------------------------------------------------------------

pub const BINS_HEADER: &str = "edge_index,edge";

pub fn write_bins(path: &Path, edges: &[f64]) -> Result<(), PipelineError> {
    let mut out = String::from(BINS_HEADER);
    out.push('\n');
    for (index, edge) in edges.iter().enumerate() {
        out.push_str(&format!("{index},{edge}\n"));
    }
    write_text(path, &out)
}

pub fn read_bins(path: &Path) -> Result<Vec<f64>, PipelineError> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == BINS_HEADER => {}
        _ => return Err(bad(path, 1, format!("expected header {BINS_HEADER:?}"))),
    }
    let mut edges = Vec::new();
    for (index, raw) in lines {
        let line = index + 1;
        let f: Vec<&str> = raw.split(',').collect();
        if f.len() != 2 {
            return Err(bad(path, line, format!("expected 2 fields, got {}", f.len())));
        }
        let edge_index: usize = parse_field(path, line, "edge_index", f[0])?;
        if edge_index != edges.len() {
            return Err(bad(path, line, "edge indices must be contiguous from 0"));
        }
        edges.push(parse_field(path, line, "edge", f[1])?);
    }
    Ok(edges)
}

// ---------------------------------------------------------------------------
// Task targets
// ---------------------------------------------------------------------------

const SINGLE_LABEL_HEADER: &str = "entity_id,task,label";
const WORD_FLAG_HEADER: &str = "entity_id,task,label,label_index";

/// Write `entity_id,task,label` rows for a single-label task.
pub fn write_single_label_targets(
    path: &Path,
    task: &str,
    rows: &[(String, usize)],
) -> Result<(), PipelineError> {
    let mut out = String::from(SINGLE_LABEL_HEADER);
    out.push('\n');
    for (entity, label) in rows {
        out.push_str(&format!("{entity},{task},{label}\n"));
    }
    write_text(path, &out)
}

pub fn read_single_label_targets(
    path: &Path,
    task: &str,
) -> Result<Vec<(String, usize)>, PipelineError> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == SINGLE_LABEL_HEADER => {}
        _ => {
            return Err(bad(path, 1, format!("expected header {SINGLE_LABEL_HEADER:?}")));
        }
    }
    let mut rows = Vec::new();
    for (index, raw) in lines {
        let line = index + 1;
        let f: Vec<&str> = raw.split(',').collect();
        if f.len() != 3 {
            return Err(bad(path, line, format!("expected 3 fields, got {}", f.len())));
        }
        if f[1] != task {
            return Err(bad(path, line, format!("expected task {task:?}, got {:?}", f[1])));
        }
        rows.push((f[0].to_owned(), parse_field(path, line, "label", f[2])?));
    }
    Ok(rows)
}

/// Write `entity_id,task,label,label_index` rows for a per-word flag
/// task; each entity contributes one row per word, in word order.
pub fn write_word_flag_targets(
    path: &Path,
    task: &str,
    rows: &[(String, Vec<u8>)],
) -> Result<(), PipelineError> {
    let mut out = String::from(WORD_FLAG_HEADER);
    out.push('\n');
    for (entity, flags) in rows {
        for (word, flag) in flags.iter().enumerate() {
            out.push_str(&format!("{entity},{task},{flag},{word}\n"));
        }
    }
    write_text(path, &out)
}

pub fn read_word_flag_targets(
    path: &Path,
    task: &str,
) -> Result<Vec<(String, Vec<u8>)>, PipelineError> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == WORD_FLAG_HEADER => {}
        _ => return Err(bad(path, 1, format!("expected header {WORD_FLAG_HEADER:?}"))),
    }
    let mut rows: Vec<(String, Vec<u8>)> = Vec::new();
    let mut n_words: Option<usize> = None;
    for (index, raw) in lines {
        let line = index + 1;
        let f: Vec<&str> = raw.split(',').collect();
        if f.len() != 4 {
            return Err(bad(path, line, format!("expected 4 fields, got {}", f.len())));
        }
        if f[1] != task {
            return Err(bad(path, line, format!("expected task {task:?}, got {:?}", f[1])));
        }
        let flag: u8 = parse_field(path, line, "label", f[2])?;
        if flag > 1 {
            return Err(bad(path, line, format!("flag must be 0 or 1, got {flag}")));
        }
        let word: usize = parse_field(path, line, "label_index", f[3])?;
        let entity = f[0];
        let start_new = match rows.last() {
            Some((current, flags)) if current == entity => {
                if word != flags.len() {
                    return Err(bad(
                        path,
                        line,
                        format!("expected word {}, got {word}", flags.len()),
                    ));
                }
                false
            }
            _ => true,
        };
        if start_new {
            if let Some((_, flags)) = rows.last() {
                match n_words {
                    None => n_words = Some(flags.len()),
                    Some(n) if n == flags.len() => {}
                    Some(n) => {
                        return Err(bad(
                            path,
                            line,
                            format!("entity has {} words, expected {n}", flags.len()),
                        ));
                    }
                }
            }
            if rows.iter().any(|(id, _)| id == entity) {
                return Err(bad(path, line, format!("entity {entity:?} rows are not contiguous")));
            }
            if word != 0 {
                return Err(bad(path, line, format!("expected word 0, got {word}")));
            }
            rows.push((entity.to_owned(), Vec::new()));
        }
        rows.last_mut().unwrap().1.push(flag);
    }
    if let (Some(n), Some((_, flags))) = (n_words, rows.last()) {
        if flags.len() != n {
            return Err(bad(path, 1, format!("last entity has {} words, expected {n}", flags.len())));
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// SOMO provenance and skips
// ---------------------------------------------------------------------------

pub const SOMO_PROVENANCE_HEADER: &str = "instance_id,base_image_id,split,altered,\
target_resolution,target_label,target_word,\
replacement_image_id,replacement_resolution,replacement_label,replacement_word";

/// One SOMO instance's provenance; target/replacement fields are empty
/// for unaltered instances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SomoProvenanceRow {
    pub instance_id: String,
    pub base_image_id: String,
    pub split: Split,
    pub altered: bool,
    pub target_resolution: String,
    pub target_label: Option<u32>,
    pub target_word: Option<u32>,
    pub replacement_image_id: String,
    pub replacement_resolution: String,
    pub replacement_label: Option<u32>,
    pub replacement_word: Option<u32>,
}

fn opt_u32(value: &Option<u32>) -> String {
    value.map_or(String::new(), |v| v.to_string())
}

fn parse_opt_u32(path: &Path, line: usize, field: &str, value: &str) -> Result<Option<u32>, PipelineError> {
    if value.is_empty() {
        Ok(None)
    } else {
        Ok(Some(parse_field(path, line, field, value)?))
    }
}

pub fn write_somo_provenance(
    path: &Path,
    rows: &[SomoProvenanceRow],
) -> Result<(), PipelineError> {
    let mut out = String::from(SOMO_PROVENANCE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.instance_id,
            r.base_image_id,
            r.split.as_str(),
            u8::from(r.altered),
            r.target_resolution,
            opt_u32(&r.target_label),
            opt_u32(&r.target_word),
            r.replacement_image_id,
            r.replacement_resolution,
            opt_u32(&r.replacement_label),
            opt_u32(&r.replacement_word),
        ));
    }
    write_text(path, &out)
}

pub fn read_somo_provenance(path: &Path) -> Result<Vec<SomoProvenanceRow>, PipelineError> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == SOMO_PROVENANCE_HEADER => {}
        _ => return Err(bad(path, 1, "unexpected provenance header")),
    }
    let mut rows = Vec::new();
    for (index, raw) in lines {
        let line = index + 1;
        let f: Vec<&str> = raw.split(',').collect();
        if f.len() != 11 {
            return Err(bad(path, line, format!("expected 11 fields, got {}", f.len())));
        }
        let split = Split::parse(f[2])
            .ok_or_else(|| bad(path, line, format!("unknown split {:?}", f[2])))?;
        let altered = match f[3] {
            "0" => false,
            "1" => true,
            other => return Err(bad(path, line, format!("altered must be 0/1, got {other:?}"))),
        };
        rows.push(SomoProvenanceRow {
            instance_id: f[0].to_owned(),
            base_image_id: f[1].to_owned(),
            split,
            altered,
            target_resolution: f[4].to_owned(),
            target_label: parse_opt_u32(path, line, "target_label", f[5])?,
            target_word: parse_opt_u32(path, line, "target_word", f[6])?,
            replacement_image_id: f[7].to_owned(),
            replacement_resolution: f[8].to_owned(),
            replacement_label: parse_opt_u32(path, line, "replacement_label", f[9])?,
            replacement_word: parse_opt_u32(path, line, "replacement_word", f[10])?,
        });
    }
    Ok(rows)
}

pub const SOMO_SKIPPED_HEADER: &str = "image_id,split,reason";

pub fn write_somo_skipped(
    path: &Path,
    rows: &[(String, Split, String)],
) -> Result<(), PipelineError> {
    let mut out = String::from(SOMO_SKIPPED_HEADER);
    out.push('\n');
    for (image_id, split, reason) in rows {
        debug_assert!(!reason.contains(','), "skip reasons are fixed comma-free strings");
        out.push_str(&format!("{image_id},{},{reason}\n", split.as_str()));
    }
    write_text(path, &out)
}

// ---------------------------------------------------------------------------
// MWC pairs
// ---------------------------------------------------------------------------

pub const MWC_PAIRS_HEADER: &str = "image_a,image_b,distance,bin";

/// One sampled pair with its cosine distance and distance-bin index.
#[derive(Debug, Clone, PartialEq)]
pub struct MwcPairRow {
    pub image_a: String,
    pub image_b: String,
    pub distance: f64,
    pub bin: usize,
}

/// The targets-file entity id of a pair.
pub fn pair_entity_id(image_a: &str, image_b: &str) -> String {
    format!("{image_a}|{image_b}")
}

pub fn write_mwc_pairs(path: &Path, rows: &[MwcPairRow]) -> Result<(), PipelineError> {
    let mut out = String::from(MWC_PAIRS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.image_a, r.image_b, r.distance, r.bin
        ));
    }
    write_text(path, &out)
}

pub fn read_mwc_pairs(path: &Path) -> Result<Vec<MwcPairRow>, PipelineError> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == MWC_PAIRS_HEADER => {}
        _ => return Err(bad(path, 1, format!("expected header {MWC_PAIRS_HEADER:?}"))),
    }
    let mut rows = Vec::new();
    for (index, raw) in lines {
        let line = index + 1;
        let f: Vec<&str> = raw.split(',').collect();
        if f.len() != 4 {
            return Err(bad(path, line, format!("expected 4 fields, got {}", f.len())));
        }
        rows.push(MwcPairRow {
            image_a: f[0].to_owned(),
            image_b: f[1].to_owned(),
            distance: parse_field(path, line, "distance", f[2])?,
            bin: parse_field(path, line, "bin", f[3])?,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Probe models
// ---------------------------------------------------------------------------

/// Serialize a trained probe as a CSV weight matrix with a small header
/// (task, dim, classes, c, converged, iterations), then one `bias` row
/// and one `w` row per weight row.
pub fn format_probe_model(task: &str, model: &ProbeModel) -> String {
    let mut out = String::new();
    out.push_str(&format!("task,{task}\n"));
    out.push_str(&format!("dim,{}\n", model.dim));
    out.push_str(&format!("classes,{}\n", model.n_classes));
    out.push_str(&format!("c,{}\n", model.c));
    out.push_str(&format!("converged,{}\n", model.converged));
    out.push_str(&format!("iterations,{}\n", model.iterations));
    out.push_str("bias");
    for b in &model.bias {
        out.push_str(&format!(",{b}"));
    }
    out.push('\n');
    for row in &model.weights {
        out.push('w');
        for w in row {
            out.push_str(&format!(",{w}"));
        }
        out.push('\n');
    }
    out
}

/// Parse the format written by [`format_probe_model`]; returns the task
/// label and the model.
pub fn parse_probe_model(path: &Path, text: &str) -> Result<(String, ProbeModel), PipelineError> {
    let mut task = None;
    let mut dim = None;
    let mut n_classes = None;
    let mut c = None;
    let mut converged = None;
    let mut iterations = None;
    let mut bias: Option<Vec<f64>> = None;
    let mut weights: Vec<Vec<f64>> = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let (tag, rest) = raw
            .split_once(',')
            .ok_or_else(|| bad(path, line, "expected tag,value"))?;
        match tag {
            "task" => task = Some(rest.to_owned()),
            "dim" => dim = Some(parse_field(path, line, "dim", rest)?),
            "classes" => n_classes = Some(parse_field(path, line, "classes", rest)?),
            "c" => c = Some(parse_field(path, line, "c", rest)?),
            "converged" => converged = Some(parse_field::<bool>(path, line, "converged", rest)?),
            "iterations" => iterations = Some(parse_field(path, line, "iterations", rest)?),
            "bias" | "w" => {
                let values: Vec<f64> = rest
                    .split(',')
                    .map(|v| parse_field(path, line, tag, v))
                    .collect::<Result<_, _>>()?;
                if tag == "bias" {
                    bias = Some(values);
                } else {
                    weights.push(values);
                }
            }
            other => return Err(bad(path, line, format!("unknown tag {other:?}"))),
        }
    }
    let (task, dim, n_classes, c, converged, iterations, bias) = match (
        task, dim, n_classes, c, converged, iterations, bias,
    ) {
        (Some(a), Some(b), Some(k), Some(d), Some(e), Some(f), Some(g)) => (a, b, k, d, e, f, g),
        _ => return Err(bad(path, 1, "missing header fields")),
    };
    let n_rows = if n_classes == 2 { 1 } else { n_classes };
    if weights.len() != n_rows || bias.len() != n_rows || weights.iter().any(|r| r.len() != dim) {
        return Err(bad(path, 1, "weight matrix shape disagrees with header"));
    }
    Ok((
        task,
        ProbeModel {
            weights,
            bias,
            n_classes,
            dim,
            c,
            converged,
            iterations,
        },
    ))
}

// ---------------------------------------------------------------------------
// Probe metrics (JSON)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordMetric {
    pub word: u32,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordSeries {
    pub word: u32,
    pub auc_per_bin: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordAttraction {
    pub word: u32,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedWord {
    pub word: u32,
    pub reason: String,
}

/// Validation metrics of a per-word flag task (WC, MWC). MWC also
/// carries a per-distance-bin AUC series and attraction coefficient for
/// every word whose series is complete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerWordMetrics {
    pub task: String,
    pub mean_auc: f64,
    pub per_word: Vec<WordMetric>,
    pub skipped: Vec<SkippedWord>,
    #[serde(default)]
    pub series: Vec<WordSeries>,
    #[serde(default)]
    pub attraction: Vec<WordAttraction>,
}

/// Validation metrics of a multiclass task (SL, CB).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassMetrics {
    pub task: String,
    pub ovo_auc: f64,
    pub n_classes: usize,
    /// Row-normalized percentages per true class.
    pub confusion: Vec<Vec<f64>>,
    pub n_train: usize,
    pub n_val: usize,
}

/// Validation metrics of a binary task (SOMO).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub task: String,
    pub auc: f64,
    pub n_train: usize,
    pub n_val: usize,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).expect("metrics serialize");
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, PipelineError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| bad(path, 1, format!("json parse error: {e}")))
}
