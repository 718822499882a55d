//! `visprobe`: stage-oriented command line over the visual-probing toolkit.
//!
//! Every subcommand maps to one pipeline stage (or to all of them for
//! `run`), reads its inputs from the `--out` directory, and is idempotent:
//! stages whose outputs already exist are skipped, so interrupted runs
//! resume where they stopped.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use visprobe_core::embedding::{parse_superpixel_id, EmbeddingStore, StoreRole};
use visprobe_core::pipeline::{Config, Pipeline, Stage, StageOutcome};
use visprobe_core::synth::{generate_synth_dataset, write_synth_dataset};
use visprobe_core::tasks::TaskKind;

#[derive(Parser)]
#[command(
    name = "visprobe",
    version,
    about = "Visual-word probing toolkit: segment, encode, build tasks, probe, report"
)]
struct Cli {
    /// TOML config file; relative paths inside it resolve against its directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Global RNG seed; every stage derives its own stream from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for the parallel stages (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Run directory all artifacts live under.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment every manifest image at each configured resolution.
    Segment,
    /// Compute per-superpixel statistics from the saved label maps.
    Stats,
    /// Toy-encode superpixel patches and whole images into embedding stores.
    Encode,
    /// Import an externally produced embedding store into the run directory.
    ///
    /// The store must be in the toolkit's binary format with the role the
    /// position requires; `encode` then computes only the stores still
    /// missing, so ingested representations and built-in toy embeddings mix
    /// freely.
    Ingest {
        /// Which store position the file fills.
        #[arg(value_enum)]
        kind: IngestKind,
        /// The store file to import.
        store: PathBuf,
    },
    /// Cluster superpixel embeddings into concepts and the word dictionary.
    Dict,
    /// Assign words, build visual sentences and the co-occurrence matrix.
    Sentences,
    /// Build one probing-task dataset (wc, sl, cb_shape, cb_color,
    /// somo_close, somo_far, mwc).
    Task { name: String },
    /// Train and evaluate the probes of one task.
    Probe { name: String },
    /// Collect probe metrics into the report tables.
    Report,
    /// Run every stage in dependency order.
    Run,
    /// Generate the synthetic benchmark dataset plus a starter config.
    Synth {
        /// Number of images to generate.
        #[arg(long, default_value_t = 200)]
        images: usize,
        /// Directory to write images, manifest, and config into.
        dir: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum IngestKind {
    /// Superpixel store the dictionary is built from (dictionary role).
    DictionarySuperpixels,
    /// Superpixel store the CB probes read (representation role).
    RepresentationSuperpixels,
    /// Whole-image store the WC/SL/MWC probes read (representation role).
    RepresentationImages,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .context("setting up the worker pool")?;
    }
    match &cli.command {
        Command::Synth { images, dir } => run_synth(&cli, *images, dir),
        Command::Ingest { kind, store } => run_ingest(&cli, *kind, store),
        Command::Segment => run_stages(&cli, vec![Stage::Segment]),
        Command::Stats => run_stages(&cli, vec![Stage::Stats]),
        Command::Encode => run_stages(&cli, vec![Stage::Encode]),
        Command::Dict => run_stages(&cli, vec![Stage::Dict]),
        Command::Sentences => run_stages(&cli, vec![Stage::Sentences]),
        Command::Task { name } => run_stages(&cli, vec![Stage::Task(parse_task(name)?)]),
        Command::Probe { name } => run_stages(&cli, vec![Stage::Probe(parse_task(name)?)]),
        Command::Report => run_stages(&cli, vec![Stage::Report]),
        Command::Run => run_stages(&cli, Stage::all()),
    }
}

fn parse_task(name: &str) -> Result<TaskKind> {
    TaskKind::parse(name).with_context(|| {
        let known: Vec<&str> = TaskKind::ALL.iter().map(|k| k.as_str()).collect();
        format!("unknown task {name:?}; expected one of {}", known.join(", "))
    })
}

fn load_pipeline(cli: &Cli) -> Result<Pipeline> {
    let path = cli
        .config
        .as_deref()
        .context("no config file given; pass --config <path>")?;
    let mut config = Config::load(path).context("loading config")?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    config.resolve_paths(base);
    Ok(Pipeline::new(config, &cli.out, cli.seed)?)
}

fn run_stages(cli: &Cli, stages: Vec<Stage>) -> Result<()> {
    let pipeline = load_pipeline(cli)?;
    for stage in stages {
        let outcome = pipeline
            .run_stage(stage)
            .with_context(|| format!("stage `{stage}` failed"))?;
        print_outcome(&outcome);
    }
    Ok(())
}

fn print_outcome(outcome: &StageOutcome) {
    if outcome.skipped {
        println!("{}: skipped ({})", outcome.stage, outcome.detail);
    } else {
        println!("{}: {}", outcome.stage, outcome.detail);
    }
    for warning in &outcome.warnings {
        eprintln!("warning [{}]: {warning}", outcome.stage);
    }
}

fn run_synth(cli: &Cli, images: usize, dir: &Path) -> Result<()> {
    if images == 0 {
        bail!("--images must be at least 1");
    }
    let dataset = generate_synth_dataset(images, cli.seed);
    let manifest = write_synth_dataset(&dataset, dir).context("writing synthetic dataset")?;
    let mut config = Config::default();
    config.data.manifest = Some(PathBuf::from("manifest.tsv"));
    let config_path = dir.join("config.toml");
    std::fs::write(&config_path, config.to_toml())
        .with_context(|| format!("writing {}", config_path.display()))?;
    println!(
        "synth: {images} images under {}, manifest {}, starter config {}",
        dir.display(),
        manifest.display(),
        config_path.display(),
    );
    Ok(())
}

fn run_ingest(cli: &Cli, kind: IngestKind, source: &Path) -> Result<()> {
    let pipeline = load_pipeline(cli)?;
    let store = EmbeddingStore::read(source)
        .with_context(|| format!("reading store {}", source.display()))?;

    let expected_role = match kind {
        IngestKind::DictionarySuperpixels => StoreRole::Dictionary,
        _ => StoreRole::Representation,
    };
    if store.role() != expected_role {
        bail!(
            "store has role {:?} but this position requires {expected_role:?}",
            store.role()
        );
    }
    if store.is_empty() {
        bail!("store holds no vectors");
    }

    let manifest = pipeline.manifest();
    let tags: BTreeSet<&str> = pipeline
        .config()
        .segmentation
        .resolutions
        .iter()
        .map(|r| r.tag.as_str())
        .collect();
    match kind {
        IngestKind::RepresentationImages => {
            for id in store.ids() {
                if manifest.get(id).is_none() {
                    bail!("store id {id:?} is not a manifest image id");
                }
            }
            for entry in manifest.entries() {
                if !store.contains(&entry.image_id) {
                    bail!("store has no vector for manifest image {:?}", entry.image_id);
                }
            }
        }
        _ => {
            let mut covered: BTreeSet<(&str, &str)> = BTreeSet::new();
            for id in store.ids() {
                let Some((image, tag, _label)) = parse_superpixel_id(id) else {
                    bail!("store id {id:?} is not of the form image/resolution/label");
                };
                if manifest.get(image).is_none() {
                    bail!("store id {id:?} references an image not in the manifest");
                }
                if !tags.contains(tag) {
                    bail!("store id {id:?} references unconfigured resolution {tag:?}");
                }
                covered.insert((image, tag));
            }
            for entry in manifest.entries() {
                for tag in &tags {
                    if !covered.contains(&(entry.image_id.as_str(), tag)) {
                        bail!(
                            "store has no superpixels for image {:?} at resolution {tag:?}",
                            entry.image_id
                        );
                    }
                }
            }
        }
    }

    let layout = pipeline.layout();
    let target = match kind {
        IngestKind::DictionarySuperpixels => layout.dictionary_superpixel_store(),
        IngestKind::RepresentationSuperpixels => layout.representation_superpixel_store(),
        IngestKind::RepresentationImages => layout.representation_image_store(),
    };
    let dir = layout.embeddings_dir();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    store
        .write(&target)
        .with_context(|| format!("writing {}", target.display()))?;
    println!(
        "ingest: {} vectors (dim {}) -> {}",
        store.len(),
        store.dim(),
        target.display(),
    );
    Ok(())
}
