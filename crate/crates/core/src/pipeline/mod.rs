//! Corpus generation: configuration, per-artifact seeding, sharded output
//! with resumable completion markers, and the run manifest.

mod synth;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::arabic::DiacritizationSpec;
use crate::fonts::{FontLoadError, FontSet};
use crate::layout::LayoutParams;
use crate::render::GENERATOR_VERSION;
use crate::rng::derive_stream;
use crate::translation::{build_provider, ProviderConfig};

pub use synth::{crop_text, synthetic_page};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const SHARD_MARKER: &str = "_SUCCESS.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    FontLoad(#[from] FontLoadError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactClass {
    Crop,
    Page,
    TableConsistent,
    TableRandom,
    TableLatex,
    Chart,
}

impl ArtifactClass {
    pub const ALL: [ArtifactClass; 6] = [
        ArtifactClass::Crop,
        ArtifactClass::Page,
        ArtifactClass::TableConsistent,
        ArtifactClass::TableRandom,
        ArtifactClass::TableLatex,
        ArtifactClass::Chart,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ArtifactClass::Crop => "crop",
            ArtifactClass::Page => "page",
            ArtifactClass::TableConsistent => "table_consistent",
            ArtifactClass::TableRandom => "table_random",
            ArtifactClass::TableLatex => "table_latex",
            ArtifactClass::Chart => "chart",
        }
    }

    fn id_prefix(self) -> &'static str {
        match self {
            ArtifactClass::Crop => "crop",
            ArtifactClass::Page => "page",
            ArtifactClass::TableConsistent => "table-consistent",
            ArtifactClass::TableRandom => "table-random",
            ArtifactClass::TableLatex => "table-latex",
            ArtifactClass::Chart => "chart",
        }
    }

    /// Output directory relative to the corpus root.
    pub fn dir(self) -> &'static str {
        match self {
            ArtifactClass::Crop => "crops",
            ArtifactClass::Page => "pages",
            ArtifactClass::TableConsistent => "tables/consistent",
            ArtifactClass::TableRandom => "tables/random",
            ArtifactClass::TableLatex => "tables/latex",
            ArtifactClass::Chart => "charts",
        }
    }

    pub fn group(self) -> ClassGroup {
        match self {
            ArtifactClass::Crop => ClassGroup::Crops,
            ArtifactClass::Page => ClassGroup::Pages,
            ArtifactClass::TableConsistent | ArtifactClass::TableRandom | ArtifactClass::TableLatex => {
                ClassGroup::Tables
            }
            ArtifactClass::Chart => ClassGroup::Charts,
        }
    }

    /// `crop-0000001` for the first crop.
    pub fn artifact_id(self, index: usize) -> String {
        format!("{}-{:07}", self.id_prefix(), index + 1)
    }
}

impl fmt::Display for ArtifactClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Coarse class selection used by `--only`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassGroup {
    Crops,
    Pages,
    Tables,
    Charts,
}

impl FromStr for ClassGroup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "crops" => Ok(ClassGroup::Crops),
            "pages" => Ok(ClassGroup::Pages),
            "tables" => Ok(ClassGroup::Tables),
            "charts" => Ok(ClassGroup::Charts),
            other => Err(format!("unknown class group {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Counts {
    pub crops: usize,
    pub pages: usize,
    pub tables_consistent: usize,
    pub tables_random: usize,
    pub tables_latex: usize,
    pub charts: usize,
}

impl Counts {
    pub fn get(&self, class: ArtifactClass) -> usize {
        match class {
            ArtifactClass::Crop => self.crops,
            ArtifactClass::Page => self.pages,
            ArtifactClass::TableConsistent => self.tables_consistent,
            ArtifactClass::TableRandom => self.tables_random,
            ArtifactClass::TableLatex => self.tables_latex,
            ArtifactClass::Chart => self.charts,
        }
    }

    pub fn total(&self) -> usize {
        ArtifactClass::ALL.iter().map(|c| self.get(*c)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderSettings {
    /// Raster pixels per page unit for pages.
    pub raster_scale: f64,
    /// Write PNG rasters next to the SVG files.
    pub emit_raster: bool,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self {
            raster_scale: 1.0,
            emit_raster: true,
        }
    }
}

fn default_output_root() -> PathBuf {
    PathBuf::from("out")
}

fn default_shard_size() -> usize {
    1000
}

fn default_source_language() -> String {
    "en".into()
}

fn default_target_language() -> String {
    "ar".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    pub seed: u64,
    #[serde(default = "default_output_root")]
    pub output_root: PathBuf,
    #[serde(default = "default_shard_size")]
    pub shard_size: usize,
    #[serde(default)]
    pub counts: Counts,
    #[serde(default)]
    pub layout: LayoutParams,
    /// Applied to crop text.
    #[serde(default)]
    pub diacritization: DiacritizationSpec,
    /// JSON-lines font manifest; the bundled fonts when absent.
    #[serde(default)]
    pub font_manifest: Option<PathBuf>,
    #[serde(default)]
    pub provider: ProviderConfig,
    #[serde(default = "default_source_language")]
    pub source_language: String,
    #[serde(default = "default_target_language")]
    pub target_language: String,
    /// Directory of OCR annotation files to translate; pages are
    /// synthesized when absent.
    #[serde(default)]
    pub page_annotations: Option<PathBuf>,
    #[serde(default)]
    pub render: RenderSettings,
}

impl CorpusConfig {
    pub fn new(seed: u64, output_root: impl Into<PathBuf>) -> Self {
        Self {
            seed,
            output_root: output_root.into(),
            shard_size: default_shard_size(),
            counts: Counts::default(),
            layout: LayoutParams::default(),
            diacritization: DiacritizationSpec::default(),
            font_manifest: None,
            provider: ProviderConfig::default(),
            source_language: default_source_language(),
            target_language: default_target_language(),
            page_annotations: None,
            render: RenderSettings::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let cfg: CorpusConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.shard_size == 0 {
            return Err(PipelineError::Config("shard_size must be at least 1".into()));
        }
        self.layout.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.diacritization
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        if !(self.render.raster_scale > 0.0 && self.render.raster_scale.is_finite()) {
            return Err(PipelineError::Config(format!(
                "raster_scale {} must be positive",
                self.render.raster_scale
            )));
        }
        for (name, lang) in [("source_language", &self.source_language), ("target_language", &self.target_language)] {
            if lang.trim().is_empty() {
                return Err(PipelineError::Config(format!("{name} is empty")));
            }
        }
        Ok(())
    }

    /// SHA-256 over everything that influences artifact bytes. The output
    /// location is excluded so a corpus can be moved and resumed.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output_root = PathBuf::new();
        sha256_hex(serde_json::to_string(&c).expect("config serializes").as_bytes())
    }
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub artifact_id: String,
    pub class: ArtifactClass,
    /// Paths relative to the corpus root, `/`-separated.
    pub image: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raster: Option<String>,
    pub ground_truth: String,
    /// Further files, such as LaTeX sources.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra: Vec<String>,
    pub seed: u64,
    pub stream: u64,
    pub generator_version: String,
    pub spec_digest: String,
}

impl ManifestRecord {
    pub fn files(&self) -> Vec<&str> {
        let mut v = vec![self.image.as_str(), self.ground_truth.as_str()];
        v.extend(self.raster.as_deref());
        v.extend(self.extra.iter().map(String::as_str));
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skip {
    pub artifact_id: String,
    pub class: ArtifactClass,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestSummary {
    pub summary: bool,
    pub config_digest: String,
    pub generator_version: String,
    pub generated: BTreeMap<ArtifactClass, usize>,
    pub skipped: BTreeMap<ArtifactClass, usize>,
    pub skips: Vec<Skip>,
}

impl ManifestSummary {
    pub fn total_generated(&self) -> usize {
        self.generated.values().sum()
    }

    pub fn total_skipped(&self) -> usize {
        self.skipped.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ShardMarker {
    config_digest: String,
    class: ArtifactClass,
    shard: usize,
    range: (usize, usize),
    records: Vec<ManifestRecord>,
    skips: Vec<Skip>,
}

/// Knobs for one invocation that do not change output bytes.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Restrict to these groups; all classes when empty.
    pub only: Vec<ClassGroup>,
    /// Worker threads; rayon's default when absent.
    pub workers: Option<usize>,
    /// Stop after completing this many shards without writing a manifest,
    /// as an interrupted run would.
    pub shard_budget: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport {
    /// `None` when the run stopped at its shard budget.
    pub manifest: Option<PathBuf>,
    pub summary: ManifestSummary,
    pub shards_reused: usize,
    pub shards_generated: usize,
}

/// Shared, read-only state for the workers.
pub(crate) struct Context {
    pub config: CorpusConfig,
    pub fonts: FontSet,
    pub provider: Box<dyn crate::translation::TranslationProvider>,
    pub source_pages: Vec<(crate::ingest::PageAnnotation, PathBuf)>,
}

pub fn load_fonts(config: &CorpusConfig) -> Result<FontSet, PipelineError> {
    Ok(match &config.font_manifest {
        Some(p) => FontSet::load_manifest(p)?,
        None => FontSet::builtin(),
    })
}

fn load_source_pages(dir: &Path) -> Result<Vec<(crate::ingest::PageAnnotation, PathBuf)>, PipelineError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    let mut pages = Vec::new();
    for f in files {
        let raw = fs::read(&f).map_err(io_err(&f))?;
        match crate::ingest::parse_ocr_annotations(&raw) {
            Ok(doc) => pages.extend(doc.pages.into_iter().map(|p| (p, dir.to_path_buf()))),
            Err(e) => log::warn!("skipping annotation file {}: {e}", f.display()),
        }
    }
    if pages.is_empty() {
        return Err(PipelineError::Config(format!("{} holds no usable annotation pages", dir.display())));
    }
    Ok(pages)
}

fn rel(class: ArtifactClass, shard: usize, file: &Path) -> String {
    let name = file.file_name().expect("artifact file name").to_string_lossy();
    format!("{}/shard-{shard:04}/{name}", class.dir())
}

fn shard_dir(root: &Path, class: ArtifactClass, shard: usize) -> PathBuf {
    root.join(class.dir()).join(format!("shard-{shard:04}"))
}

/// The shard's marker, when it matches `expect` and every listed file exists.
fn reusable(root: &Path, dir: &Path, expect: &ShardMarker) -> Option<ShardMarker> {
    let marker: ShardMarker = serde_json::from_str(&fs::read_to_string(dir.join(SHARD_MARKER)).ok()?).ok()?;
    let ok = marker.config_digest == expect.config_digest
        && marker.class == expect.class
        && marker.range == expect.range
        && marker.records.len() + marker.skips.len() == expect.range.1 - expect.range.0
        && marker.records.iter().flat_map(|r| r.files()).all(|f| root.join(f).is_file());
    ok.then_some(marker)
}

fn generate_shard(ctx: &Context, class: ArtifactClass, shard: usize, range: (usize, usize), dir: &Path) -> Result<ShardMarker, PipelineError> {
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let results: Vec<Result<Result<ManifestRecord, Skip>, PipelineError>> = (range.0..range.1)
        .into_par_iter()
        .map(|i| {
            let id = class.artifact_id(i);
            let rng = derive_stream(ctx.config.seed, &id);
            match synth::generate(ctx, class, i, &id, rng) {
                Ok(mut g) => {
                    if !ctx.config.render.emit_raster {
                        g.artifact.png = None;
                    }
                    let written = g.artifact.write(dir).map_err(io_err(dir))?;
                    let mut extra = Vec::new();
                    for (ext, bytes) in &g.extra {
                        let p = dir.join(format!("{id}.{ext}"));
                        fs::write(&p, bytes).map_err(io_err(&p))?;
                        extra.push(rel(class, shard, &p));
                    }
                    Ok(Ok(ManifestRecord {
                        artifact_id: id,
                        class,
                        image: rel(class, shard, &written.svg),
                        raster: written.png.as_deref().map(|p| rel(class, shard, p)),
                        ground_truth: rel(class, shard, &written.ground_truth),
                        extra,
                        seed: g.artifact.seed,
                        stream: g.artifact.stream_id,
                        generator_version: g.artifact.generator_version.to_string(),
                        spec_digest: g.spec_digest,
                    }))
                }
                Err(reason) => {
                    log::warn!("skipping {id}: {reason}");
                    Ok(Err(Skip {
                        artifact_id: id,
                        class,
                        reason,
                    }))
                }
            }
        })
        .collect();
    let mut records = Vec::new();
    let mut skips = Vec::new();
    for r in results {
        match r? {
            Ok(rec) => records.push(rec),
            Err(s) => skips.push(s),
        }
    }
    let marker = ShardMarker {
        config_digest: ctx.config.digest(),
        class,
        shard,
        range,
        records,
        skips,
    };
    let path = dir.join(SHARD_MARKER);
    let tmp = dir.join(format!("{SHARD_MARKER}.tmp"));
    fs::write(&tmp, serde_json::to_string(&marker).expect("marker serializes")).map_err(io_err(&tmp))?;
    fs::rename(&tmp, &path).map_err(io_err(&path))?;
    Ok(marker)
}

/// Generate every configured artifact and write `manifest.jsonl`.
pub fn run_pipeline(config: &CorpusConfig) -> Result<PathBuf, PipelineError> {
    let report = run_pipeline_with(config, &RunOptions::default())?;
    Ok(report.manifest.expect("unbudgeted run writes a manifest"))
}

/// [`run_pipeline`] with class selection, a worker count and an optional
/// shard budget. Completed shards whose marker matches the config are reused.
pub fn run_pipeline_with(config: &CorpusConfig, options: &RunOptions) -> Result<RunReport, PipelineError> {
    config.validate()?;
    let fonts = load_fonts(config)?;
    let provider = build_provider(&config.provider).map_err(|e| PipelineError::Config(e.to_string()))?;
    let source_pages = match (&config.page_annotations, config.counts.pages) {
        (Some(dir), n) if n > 0 => load_source_pages(dir)?,
        _ => Vec::new(),
    };
    let ctx = Context {
        config: config.clone(),
        fonts,
        provider,
        source_pages,
    };
    let root = &config.output_root;
    fs::create_dir_all(root).map_err(io_err(root))?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = options.workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder.build().map_err(|e| PipelineError::Config(e.to_string()))?;

    let digest = config.digest();
    let mut summary = ManifestSummary {
        summary: true,
        config_digest: digest.clone(),
        generator_version: GENERATOR_VERSION.to_string(),
        generated: BTreeMap::new(),
        skipped: BTreeMap::new(),
        skips: Vec::new(),
    };
    let mut records = Vec::new();
    let (mut reused, mut generated) = (0, 0);
    for class in ArtifactClass::ALL {
        if !options.only.is_empty() && !options.only.contains(&class.group()) {
            continue;
        }
        let count = config.counts.get(class);
        let (mut ok, mut bad) = (0, 0);
        for shard in 0..count.div_ceil(config.shard_size) {
            let range = (shard * config.shard_size, ((shard + 1) * config.shard_size).min(count));
            let dir = shard_dir(root, class, shard);
            let expect = ShardMarker {
                config_digest: digest.clone(),
                class,
                shard,
                range,
                records: Vec::new(),
                skips: Vec::new(),
            };
            let marker = if let Some(m) = reusable(root, &dir, &expect) {
                reused += 1;
                log::info!("reusing {}", dir.display());
                m
            } else {
                if options.shard_budget.is_some_and(|b| generated >= b) {
                    return Ok(RunReport {
                        manifest: None,
                        summary,
                        shards_reused: reused,
                        shards_generated: generated,
                    });
                }
                generated += 1;
                log::info!("generating {} [{}, {})", dir.display(), range.0, range.1);
                pool.install(|| generate_shard(&ctx, class, shard, range, &dir))?
            };
            ok += marker.records.len();
            bad += marker.skips.len();
            records.extend(marker.records);
            summary.skips.extend(marker.skips);
        }
        summary.generated.insert(class, ok);
        summary.skipped.insert(class, bad);
    }

    let mut out = String::new();
    for r in &records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out.push_str(&serde_json::to_string(&summary).expect("summary serializes"));
    out.push('\n');
    let path = root.join(MANIFEST_FILE);
    let tmp = root.join(format!("{MANIFEST_FILE}.tmp"));
    fs::write(&tmp, out).map_err(io_err(&tmp))?;
    fs::rename(&tmp, &path).map_err(io_err(&path))?;
    Ok(RunReport {
        manifest: Some(path),
        summary,
        shards_reused: reused,
        shards_generated: generated,
    })
}

/// Split a manifest into its artifact records and trailing summary.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<(Vec<ManifestRecord>, ManifestSummary), PipelineError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut records = Vec::new();
    let mut summary = None;
    for (i, line) in text.lines().enumerate() {
        let v: serde_json::Value =
            serde_json::from_str(line).map_err(|e| PipelineError::Config(format!("manifest line {}: {e}", i + 1)))?;
        if v.get("summary").is_some() {
            summary = Some(
                serde_json::from_value(v).map_err(|e| PipelineError::Config(format!("manifest summary: {e}")))?,
            );
        } else {
            records.push(
                serde_json::from_value(v).map_err(|e| PipelineError::Config(format!("manifest line {}: {e}", i + 1)))?,
            );
        }
    }
    let summary = summary.ok_or_else(|| PipelineError::Config("manifest has no summary record".into()))?;
    Ok((records, summary))
}
