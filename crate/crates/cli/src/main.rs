use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use docforge::evaluate::{evaluate_dirs, EvalTask};
use docforge::ingest::{convert_idl_record, parse_ocr_annotations_with_issues, serialize_document, IdlRecord};
use docforge::layout::{dump_page_graph, group_paragraphs, LayoutParams};
use docforge::pipeline::{run_pipeline_with, ClassGroup, CorpusConfig, RunOptions};
use docforge::tables::normalize_table_html;

#[derive(Parser)]
#[command(name = "docforge", version, about = "Synthesize and score annotated document corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a corpus from a TOML config.
    Gen {
        #[arg(long)]
        config: PathBuf,
        /// Restrict to crops, pages, tables or charts; repeatable.
        #[arg(long)]
        only: Vec<ClassGroup>,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Validate OCR annotation files, or convert IDL records with --from-idl.
    Ingest {
        dir: PathBuf,
        #[arg(long)]
        from_idl: bool,
        /// Where converted documents are written.
        #[arg(long, default_value = "ingested")]
        out: PathBuf,
        #[arg(long, default_value = "en")]
        lang: String,
        /// Page size in pixels as WIDTHxHEIGHT, for IDL records.
        #[arg(long, default_value = "1000x1400")]
        page_size: String,
        /// IDL boxes are fractions of the page.
        #[arg(long)]
        normalized: bool,
    },
    /// Group the lines of an annotation file into paragraphs.
    Group {
        annotations: PathBuf,
        /// Print the adjacency graph as well.
        #[arg(long)]
        dump_edges: bool,
        #[arg(long, default_value_t = 0.30)]
        overlap: f64,
        #[arg(long, default_value_t = 1.0)]
        spacing: f64,
    },
    /// Score predictions against references.
    Evaluate {
        #[arg(long)]
        task: EvalTask,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        hyp: PathBuf,
        /// Per-item JSON-lines report.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Rewrite an HTML table in canonical form.
    NormalizeHtml { input: PathBuf, output: PathBuf },
}

fn parse_size(s: &str) -> Result<(u32, u32)> {
    let (w, h) = s.split_once('x').context("page size must look like 1000x1400")?;
    Ok((w.parse()?, h.parse()?))
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    Ok(files)
}

fn ingest(dir: &Path, from_idl: bool, out: &Path, lang: &str, page_size: &str, normalized: bool) -> Result<()> {
    let files = json_files(dir)?;
    if files.is_empty() {
        bail!("no .json files in {}", dir.display());
    }
    let size = parse_size(page_size)?;
    let mut failed = 0;
    if from_idl {
        fs::create_dir_all(out)?;
    }
    for f in &files {
        let raw = fs::read(f)?;
        let stem = f.file_stem().unwrap_or_default().to_string_lossy().to_string();
        let result = if from_idl {
            serde_json::from_slice::<IdlRecord>(&raw)
                .map_err(|e| anyhow::anyhow!("malformed IDL record: {e}"))
                .and_then(|rec| Ok(convert_idl_record(&stem, lang, &rec, size, normalized)?))
                .and_then(|doc| {
                    fs::write(out.join(format!("{stem}.json")), serialize_document(&doc))?;
                    Ok((doc, Vec::new()))
                })
        } else {
            parse_ocr_annotations_with_issues(&raw).map_err(anyhow::Error::from)
        };
        match result {
            Ok((doc, warnings)) => {
                let lines: usize = doc.pages.iter().map(|p| p.lines.len()).sum();
                println!("{}\tok\tpages={}\tlines={}\twarnings={}", f.display(), doc.pages.len(), lines, warnings.len());
                for w in warnings {
                    log::warn!("{}: {w}", f.display());
                }
            }
            Err(e) => {
                failed += 1;
                println!("{}\terror\t{e}", f.display());
            }
        }
    }
    if failed > 0 {
        bail!("{failed} of {} files failed", files.len());
    }
    Ok(())
}

fn group(path: &Path, dump_edges: bool, overlap: f64, spacing: f64) -> Result<()> {
    let doc = docforge::ingest::parse_ocr_annotations(&fs::read(path)?)?;
    let params = LayoutParams {
        overlap_threshold: overlap,
        spacing_multiplier: spacing,
        direction: docforge::script::Direction::for_language(&doc.source_language),
    };
    for page in &doc.pages {
        if page.lines.is_empty() {
            continue;
        }
        if dump_edges {
            print!("{}", dump_page_graph(page, &params)?);
        } else {
            for p in group_paragraphs(page, &params)? {
                let rec = serde_json::json!({ "page": page.page_index, "paragraph": p });
                println!("{rec}");
            }
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Gen {
            config,
            only,
            seed,
            workers,
        } => {
            let mut cfg = CorpusConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let report = run_pipeline_with(
                &cfg,
                &RunOptions {
                    only,
                    workers,
                    shard_budget: None,
                },
            )?;
            let s = &report.summary;
            println!(
                "wrote {} ({} artifacts, {} skipped, {} shards reused)",
                report.manifest.as_deref().unwrap_or(Path::new("-")).display(),
                s.total_generated(),
                s.total_skipped(),
                report.shards_reused
            );
        }
        Command::Ingest {
            dir,
            from_idl,
            out,
            lang,
            page_size,
            normalized,
        } => ingest(&dir, from_idl, &out, &lang, &page_size, normalized)?,
        Command::Group {
            annotations,
            dump_edges,
            overlap,
            spacing,
        } => group(&annotations, dump_edges, overlap, spacing)?,
        Command::Evaluate {
            task,
            reference,
            hyp,
            report,
        } => {
            let rep = evaluate_dirs(task, &reference, &hyp)?;
            print!("{}", rep.to_text());
            if let Some(p) = report {
                fs::write(&p, rep.to_jsonl()).with_context(|| format!("writing {}", p.display()))?;
            }
        }
        Command::NormalizeHtml { input, output } => {
            let html = fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            fs::write(&output, normalize_table_html(&html)?).with_context(|| format!("writing {}", output.display()))?;
        }
    }
    Ok(())
}
