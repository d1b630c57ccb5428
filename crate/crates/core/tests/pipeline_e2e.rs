use std::fs;
use std::path::Path;

use docforge::evaluate::{evaluate_dirs, EvalTask};
use docforge::ingest::{serialize_document, DocumentAnnotation};
use docforge::pipeline::{read_manifest, run_pipeline, run_pipeline_with, synthetic_page, ClassGroup, Counts, CorpusConfig, RunOptions};
use docforge::rng::SeededRng;

fn small(root: &Path) -> CorpusConfig {
    let mut c = CorpusConfig::new(7, root);
    c.shard_size = 4;
    c.render.emit_raster = false;
    c.counts = Counts {
        crops: 6,
        pages: 3,
        tables_consistent: 5,
        tables_random: 5,
        tables_latex: 4,
        charts: 6,
    };
    c
}

#[test]
fn outputs_score_perfectly_against_themselves() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = run_pipeline(&small(tmp.path())).unwrap();
    let (records, summary) = read_manifest(&manifest).unwrap();
    assert_eq!(records.len() + summary.total_skipped(), 29);

    let ocr = evaluate_dirs(EvalTask::Ocr, tmp.path(), tmp.path()).unwrap();
    assert_eq!(ocr.missing, 0);
    assert_eq!(ocr.means["cer"], 0.0);
    let tables = evaluate_dirs(EvalTask::Table, tmp.path(), tmp.path()).unwrap();
    assert_eq!(tables.means["teds"], 1.0);
    let charts = evaluate_dirs(EvalTask::Chart, tmp.path(), tmp.path()).unwrap();
    assert_eq!(charts.means["exact"], 1.0);
}

#[test]
fn empty_predictions_score_zero() {
    let out = tempfile::tempdir().unwrap();
    let hyp = tempfile::tempdir().unwrap();
    let mut cfg = small(out.path());
    cfg.counts = Counts { crops: 5, ..Counts::default() };
    run_pipeline(&cfg).unwrap();
    let rep = evaluate_dirs(EvalTask::Ocr, out.path(), hyp.path()).unwrap();
    assert_eq!(rep.missing, 5);
    assert_eq!(rep.means["cer"], 1.0);
}

#[test]
fn loaded_annotations_drive_page_generation() {
    let src = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let mut rng = SeededRng::new(3, 0);
    for i in 0..2 {
        let doc = DocumentAnnotation {
            doc_id: format!("doc{i}"),
            source_language: "en".into(),
            pages: vec![synthetic_page(0, &mut rng)],
        };
        fs::write(src.path().join(format!("doc{i}.json")), serialize_document(&doc)).unwrap();
    }
    let mut cfg = small(out.path());
    cfg.page_annotations = Some(src.path().to_path_buf());
    cfg.counts = Counts { pages: 4, ..Counts::default() };
    let (records, _) = read_manifest(run_pipeline(&cfg).unwrap()).unwrap();
    assert_eq!(records.len(), 4);
    for r in &records {
        let truth = fs::read_to_string(out.path().join(&r.ground_truth)).unwrap();
        assert!(truth.lines().all(|l| l.starts_with('{')), "{truth}");
        assert!(truth.chars().any(|c| ('\u{0600}'..='\u{06FF}').contains(&c)));
    }
}

#[test]
fn group_filter_limits_classes() {
    let out = tempfile::tempdir().unwrap();
    let report = run_pipeline_with(
        &small(out.path()),
        &RunOptions {
            only: vec![ClassGroup::Charts],
            ..RunOptions::default()
        },
    )
    .unwrap();
    let (records, _) = read_manifest(report.manifest.unwrap()).unwrap();
    assert_eq!(records.len(), 6);
    assert!(records.iter().all(|r| r.artifact_id.starts_with("chart-")));
}

#[test]
fn seed_changes_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ca = small(a.path());
    let mut cb = small(b.path());
    cb.seed = 8;
    let ma = fs::read_to_string(run_pipeline(&ca).unwrap()).unwrap();
    let mb = fs::read_to_string(run_pipeline(&cb).unwrap()).unwrap();
    assert_ne!(ma, mb);
}
