//! Batch front end: detection over manifests, deduplication, export of
//! validation assets, benchmarking and synthetic corpus generation.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use artidet::annotations::{dedup_grouped, parse_records, serialize_records};
use artidet::detectors::run_detectors;
use artidet::evaluation::synth::{balanced_set, generate_sample, write_samples, SynthConfig};
use artidet::evaluation::{inject_synthetic_artifact, run_benchmark, Manifest, ManifestEntry, Method};
use artidet::image::{checkerboard_composite, crop_region, expand_and_clamp_box, load_image, save_png};
use artidet::{ArtifactRecord, ArtifactType, BoundingBox, DetectorConfig, ImageTriplet, QualityPreset};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

pub const EXIT_OK: u8 = 0;
pub const EXIT_ENTRY_FAILURES: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

const ASSET_SIZE: u32 = 300;
const CHECKER_TILE: usize = 32;
const DEFAULT_PRESET: QualityPreset = QualityPreset::Q050;
const DEFAULT_CODEC_VERSION: &str = "unspecified";

#[derive(Debug, Parser)]
#[command(name = "artidet", version, about = "Find neural-codec artifacts by comparison with a traditional codec")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the detectors over every triplet of a manifest.
    Detect(DetectArgs),
    /// Remove cross-preset duplicates from an annotation document.
    Dedup(DedupArgs),
    /// Write crops and checkerboards for subjective validation.
    ExportAssets(ExportArgs),
    /// AUC of the detectors and baseline metrics on a labeled manifest.
    Benchmark(BenchmarkArgs),
    /// Inject a synthetic artifact into one image, or generate a labeled corpus.
    Inject(InjectArgs),
}

#[derive(Debug, Args)]
pub struct DetectorOpts {
    /// File of `key=value` detector parameter overrides.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Score large color artifacts as trad minus neural.
    #[arg(long)]
    pub sign_flip_color: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Annotation document to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated artifact types (default: all).
    #[arg(long, value_delimiter = ',')]
    pub types: Vec<ArtifactType>,
    /// Deduplicate the output across presets with this IoU threshold.
    #[arg(long)]
    pub iou_dedup: Option<f64>,
    #[command(flatten)]
    pub detector: DetectorOpts,
}

#[derive(Debug, Args)]
pub struct DedupArgs {
    /// Annotation document to read.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub iou_dedup: f64,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Annotation document whose records are exported.
    #[arg(long)]
    pub annotations: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub types: Vec<ArtifactType>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory for `auc.csv` and `report.json`.
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated methods (default: proposed,psnr,ssim,msssim,fsim).
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<Method>,
    #[command(flatten)]
    pub detector: DetectorOpts,
}

#[derive(Debug, Args)]
pub struct InjectArgs {
    /// Image to degrade (single-image mode).
    #[arg(long, conflicts_with = "corpus", requires_all = ["kind", "region", "out"])]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub kind: Option<ArtifactType>,
    /// Region as `x,y,w,h`.
    #[arg(long)]
    pub region: Option<String>,
    /// Artifact strength (default depends on the kind).
    #[arg(long)]
    pub strength: Option<f64>,
    /// Generate the balanced labeled set for this artifact type.
    #[arg(long, requires = "out")]
    pub corpus: Option<ArtifactType>,
    /// Number of samples in corpus mode (default: the full balanced set).
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 384)]
    pub width: usize,
    #[arg(long, default_value_t = 384)]
    pub height: usize,
    /// Output image (single-image mode) or directory (corpus mode).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

/// Raised for problems with the invocation itself; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// Exit code for an error returned by [`run`]: 2 for bad invocations,
/// configuration or input documents, 1 for anything that failed later.
pub fn exit_code_for(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return EXIT_CONFIG;
    }
    match err.downcast_ref::<artidet::Error>() {
        Some(artidet::Error::Validation(_) | artidet::Error::Parse { .. }) => EXIT_CONFIG,
        _ => EXIT_ENTRY_FAILURES,
    }
}

pub fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Detect(a) => cmd_detect(&a),
        Command::Dedup(a) => cmd_dedup(&a),
        Command::ExportAssets(a) => cmd_export_assets(&a),
        Command::Benchmark(a) => cmd_benchmark(&a),
        Command::Inject(a) => cmd_inject(&a),
    }
}

pub fn load_detector_config(opts: &DetectorOpts) -> Result<DetectorConfig> {
    let mut cfg = DetectorConfig::default();
    if let Some(p) = &opts.config {
        let text = fs::read_to_string(p).map_err(|e| config_err(format!("cannot read config {}: {e}", p.display())))?;
        cfg.apply_overrides(&text)
            .map_err(|e| config_err(format!("config {}: {e}", p.display())))?;
    }
    if opts.sign_flip_color {
        cfg.color_sign_flip = true;
    }
    Ok(cfg)
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let n = match jobs {
        Some(0) => return Err(config_err("--jobs must be at least 1")),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .context("building worker pool")
}

fn load_manifest(path: &Path) -> Result<Manifest> {
    Manifest::load(path).map_err(|e| config_err(format!("manifest {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn selected_types(types: &[ArtifactType]) -> Vec<ArtifactType> {
    if types.is_empty() {
        ArtifactType::ALL.to_vec()
    } else {
        types.to_vec()
    }
}

fn records_for(entry: &ManifestEntry, triplet: &ImageTriplet, cfg: &DetectorConfig, digest: &str, manifest: &Manifest, types: &[ArtifactType]) -> Result<Vec<ArtifactRecord>> {
    let regions = manifest.load_regions(entry)?;
    let out = run_detectors(triplet, &regions, cfg, types)?;
    for w in &out.warnings {
        log::warn!("{}: {w}", entry.id);
    }
    Ok(out
        .detections
        .into_iter()
        .map(|d| {
            let mut extra = serde_json::Map::new();
            if let Some(flag) = &d.flag {
                extra.insert("flag".into(), serde_json::to_value(flag).expect("flag serializes"));
            }
            ArtifactRecord {
                image_id: entry.id.clone(),
                artifact_type: d.artifact_type,
                bbox: d.bbox,
                confidence: d.confidence,
                quality_preset: entry.quality_preset.unwrap_or(DEFAULT_PRESET),
                codec_version: entry.codec_version.clone().unwrap_or_else(|| DEFAULT_CODEC_VERSION.into()),
                method_params_digest: digest.to_string(),
                validated: None,
                extra,
            }
        })
        .collect())
}

/// Detection over a manifest. Entries run on the worker pool; the document
/// lists them in manifest order. Failed entries are logged and make the exit
/// code 1, but the remaining records are still written.
pub fn cmd_detect(a: &DetectArgs) -> Result<u8> {
    let cfg = load_detector_config(&a.detector)?;
    if let Some(t) = a.iou_dedup {
        if !(0.0..=1.0).contains(&t) {
            return Err(config_err(format!("--iou-dedup must lie in [0, 1], got {t}")));
        }
    }
    let manifest = load_manifest(&a.manifest)?;
    let types = selected_types(&a.types);
    let digest = cfg.digest();
    let results: Vec<Result<Vec<ArtifactRecord>>> = pool(a.detector.jobs)?.install(|| {
        manifest
            .entries
            .par_iter()
            .map(|e| {
                let t = manifest.load_triplet(e)?;
                records_for(e, &t, &cfg, &digest, &manifest, &types)
            })
            .collect()
    });
    let mut records = Vec::new();
    let mut failures = 0;
    for (e, r) in manifest.entries.iter().zip(results) {
        match r {
            Ok(rs) => records.extend(rs),
            Err(err) => {
                failures += 1;
                log::error!("entry {}: {err:#}", e.id);
            }
        }
    }
    if let Some(t) = a.iou_dedup {
        records = dedup_grouped(&records, t);
    }
    write_file(&a.out, &serialize_records(&records)?)?;
    log::info!(
        "{} records from {} entries ({} failed)",
        records.len(),
        manifest.entries.len(),
        failures
    );
    Ok(if failures > 0 { EXIT_ENTRY_FAILURES } else { EXIT_OK })
}

pub fn cmd_dedup(a: &DedupArgs) -> Result<u8> {
    if !(0.0..=1.0).contains(&a.iou_dedup) {
        return Err(config_err(format!("--iou-dedup must lie in [0, 1], got {}", a.iou_dedup)));
    }
    let text = fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let records = parse_records(&text).map_err(|e| config_err(format!("{}: {e}", a.input.display())))?;
    let kept = dedup_grouped(&records, a.iou_dedup);
    log::info!("kept {} of {} records", kept.len(), records.len());
    write_file(&a.out, &serialize_records(&kept)?)?;
    Ok(EXIT_OK)
}

/// `{image_id}_{type}_{index}_{role}.png` where `index` counts the records of
/// one image and type in document order.
pub fn asset_name(image_id: &str, kind: ArtifactType, index: usize, role: &str) -> String {
    format!("{image_id}_{kind}_{index}_{role}.png")
}

/// Assets of one record as `(role, image)` pairs.
pub fn record_assets(t: &ImageTriplet, r: &ArtifactRecord) -> Result<Vec<(&'static str, artidet::RasterImage)>> {
    let (w, h) = (t.width() as u32, t.height() as u32);
    if !r.bbox.inside(w as usize, h as usize) {
        bail!("box {:?} lies outside the {w}x{h} image", r.bbox);
    }
    let window = expand_and_clamp_box(&r.bbox, ASSET_SIZE, ASSET_SIZE, w, h);
    let [o, n, tr] = [&t.orig, &t.neural, &t.trad].map(|img| crop_region(img, &window));
    let (o, n, tr) = (o?, n?, tr?);
    Ok(match r.artifact_type {
        ArtifactType::Texture | ArtifactType::Boundary => vec![("orig", o), ("neural", n), ("trad", tr)],
        ArtifactType::ColorLarge | ArtifactType::ColorSmall => vec![
            ("orig_trad", checkerboard_composite(&o, &tr, CHECKER_TILE)?),
            ("orig_neural", checkerboard_composite(&o, &n, CHECKER_TILE)?),
        ],
        ArtifactType::Text => vec![("neural", n), ("trad", tr)],
    })
}

pub fn cmd_export_assets(a: &ExportArgs) -> Result<u8> {
    let manifest = load_manifest(&a.manifest)?;
    let text = fs::read_to_string(&a.annotations).with_context(|| format!("reading {}", a.annotations.display()))?;
    let records = parse_records(&text).map_err(|e| config_err(format!("{}: {e}", a.annotations.display())))?;
    let types = selected_types(&a.types);
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let entries: HashMap<&str, &ManifestEntry> = manifest.entries.iter().map(|e| (e.id.as_str(), e)).collect();
    let mut counters: HashMap<(String, ArtifactType), usize> = HashMap::new();
    let mut cache: Option<(String, ImageTriplet)> = None;
    let (mut written, mut skipped) = (0usize, 0usize);
    for r in &records {
        let key = (r.image_id.clone(), r.artifact_type);
        let counter = counters.entry(key).or_insert(0);
        let index = *counter;
        *counter += 1;
        if !types.contains(&r.artifact_type) {
            continue;
        }
        let Some(entry) = entries.get(r.image_id.as_str()) else {
            log::warn!("record for {} has no manifest entry; skipped", r.image_id);
            skipped += 1;
            continue;
        };
        if cache.as_ref().is_none_or(|(id, _)| id != &r.image_id) {
            match manifest.load_triplet(entry) {
                Ok(t) => cache = Some((r.image_id.clone(), t)),
                Err(e) => {
                    log::warn!("{}: {e}; record skipped", r.image_id);
                    skipped += 1;
                    continue;
                }
            }
        }
        let t = &cache.as_ref().expect("loaded above").1;
        match record_assets(t, r) {
            Ok(assets) => {
                for (role, img) in assets {
                    save_png(&img, a.out.join(asset_name(&r.image_id, r.artifact_type, index, role)))?;
                    written += 1;
                }
            }
            Err(e) => {
                log::warn!("{} {} #{index}: {e}; skipped", r.image_id, r.artifact_type);
                skipped += 1;
            }
        }
    }
    log::info!("wrote {written} assets, skipped {skipped} records");
    Ok(EXIT_OK)
}

pub fn cmd_benchmark(a: &BenchmarkArgs) -> Result<u8> {
    let cfg = load_detector_config(&a.detector)?;
    let manifest = load_manifest(&a.manifest)?;
    let methods = if a.methods.is_empty() { Method::ALL.to_vec() } else { a.methods.clone() };
    let report = pool(a.detector.jobs)?.install(|| run_benchmark(&manifest, &methods, &cfg))?;
    for s in &report.skipped {
        log::warn!("skipped {}: {}", s.id, s.reason);
    }
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let csv = report.to_csv();
    write_file(&a.out.join("auc.csv"), &csv)?;
    write_file(&a.out.join("report.json"), &report.to_json())?;
    print!("{csv}");
    Ok(EXIT_OK)
}

fn parse_region(s: &str) -> Result<BoundingBox> {
    let v: Vec<u32> = s
        .split(',')
        .map(|p| p.trim().parse::<u32>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| config_err(format!("region {s:?}: {e}")))?;
    let [x, y, w, h] = v[..] else {
        return Err(config_err(format!("region {s:?} must be x,y,w,h")));
    };
    BoundingBox::try_new(x, y, w, h).map_err(|e| config_err(e.to_string()))
}

pub fn cmd_inject(a: &InjectArgs) -> Result<u8> {
    let synth = SynthConfig {
        width: a.width,
        height: a.height,
        ..SynthConfig::default()
    };
    if let Some(input) = &a.input {
        let kind = a.kind.ok_or_else(|| config_err("--kind is required with --input"))?;
        let region = parse_region(a.region.as_deref().ok_or_else(|| config_err("--region is required with --input"))?)?;
        let out = a.out.as_ref().ok_or_else(|| config_err("--out is required"))?;
        let img = load_image(input)?;
        let strength = a.strength.unwrap_or_else(|| synth.strength(kind));
        let degraded = inject_synthetic_artifact(&img, kind, &region, strength).map_err(|e| config_err(e.to_string()))?;
        save_png(&degraded, out)?;
        return Ok(EXIT_OK);
    }
    let target = a.corpus.ok_or_else(|| config_err("either --input or --corpus is required"))?;
    let out = a.out.as_ref().ok_or_else(|| config_err("--out is required"))?;
    let samples = pool(a.jobs)?.install(|| -> Result<Vec<_>> {
        Ok(match a.count {
            None => balanced_set(&synth, target, a.seed)?,
            Some(n) => (0..n)
                .into_par_iter()
                .map(|i| {
                    let seed = artidet::evaluation::synth::sample_seed(a.seed, target, i);
                    let label = i % 2 == 0;
                    let kind = if label { Some(target) } else { None };
                    generate_sample(&synth, seed, kind).map(|s| (s, label))
                })
                .collect::<artidet::Result<Vec<_>>>()?,
        })
    })?;
    let rows: Vec<_> = samples
        .into_iter()
        .map(|(s, label)| (s, Some(target), Some(label)))
        .collect();
    let manifest = write_samples(out, &rows)?;
    let truth: Vec<serde_json::Value> = rows
        .iter()
        .map(|(s, _, _)| serde_json::json!({ "id": s.id, "injection": s.injection }))
        .collect();
    write_file(&out.join("injections.json"), &(serde_json::to_string_pretty(&truth)? + "\n"))?;
    log::info!("wrote {} triplets to {}", manifest.entries.len(), out.display());
    Ok(EXIT_OK)
}

/// Parses `argv`, runs the command and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e:#}");
            eprintln!("error: {e:#}");
            exit_code_for(&e)
        }
    }
}
