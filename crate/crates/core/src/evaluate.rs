//! Scoring a directory of predictions against a directory of references.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::charts::parse_chart_annotation;
use crate::metrics::{
    char_error_rate, parse_table_tree, score_chart_text, teds_with, word_error_rate, TedsMode,
};
use crate::render::parse_page_truth;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("bad reference {path}: {reason}")]
    BadReference { path: PathBuf, reason: String },
    #[error("no reference files ending in {0} found")]
    NoReferences(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalTask {
    Ocr,
    Table,
    Chart,
}

impl EvalTask {
    /// Reference files are recognized by this suffix.
    pub fn suffix(self) -> &'static str {
        match self {
            EvalTask::Ocr => ".gt.txt",
            EvalTask::Table => ".html",
            EvalTask::Chart => ".chart.txt",
        }
    }
}

impl FromStr for EvalTask {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ocr" => Ok(EvalTask::Ocr),
            "table" => Ok(EvalTask::Table),
            "chart" => Ok(EvalTask::Chart),
            other => Err(format!("unknown task {other:?}")),
        }
    }
}

impl fmt::Display for EvalTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalTask::Ocr => "ocr",
            EvalTask::Table => "table",
            EvalTask::Chart => "chart",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalItem {
    /// Reference path relative to the reference directory.
    pub id: String,
    pub missing: bool,
    pub scores: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: EvalTask,
    pub items: Vec<EvalItem>,
    pub missing: usize,
    /// Mean of each per-item score.
    pub means: BTreeMap<String, f64>,
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut s = format!("task: {}\nitems: {}\nmissing: {}\n", self.task, self.items.len(), self.missing);
        for (k, v) in &self.means {
            s.push_str(&format!("mean_{k}: {v:.6}\n"));
        }
        s
    }

    /// One JSON object per item followed by a summary object.
    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for it in &self.items {
            s.push_str(&serde_json::to_string(it).expect("item serializes"));
            s.push('\n');
        }
        let summary = serde_json::json!({
            "summary": true,
            "task": self.task,
            "items": self.items.len(),
            "missing": self.missing,
            "means": self.means,
        });
        s.push_str(&summary.to_string());
        s.push('\n');
        s
    }
}

fn collect(dir: &Path, suffix: &str, out: &mut Vec<PathBuf>) -> Result<(), EvalError> {
    let entries = fs::read_dir(dir).map_err(|source| EvalError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for e in entries.flatten() {
        let p = e.path();
        if p.is_dir() {
            collect(&p, suffix, out)?;
        } else if p.file_name().is_some_and(|n| n.to_string_lossy().ends_with(suffix)) {
            out.push(p);
        }
    }
    Ok(())
}

/// Page sidecars are JSON lines; their texts are compared line by line.
fn ocr_text(raw: &str) -> String {
    if raw.starts_with('{') {
        if let Ok(records) = parse_page_truth(raw) {
            return records.into_iter().map(|r| r.text).collect::<Vec<_>>().join("\n");
        }
    }
    raw.to_string()
}

fn score(task: EvalTask, reference: &str, hypothesis: &str, path: &Path) -> Result<BTreeMap<String, f64>, EvalError> {
    let bad = |reason: String| EvalError::BadReference {
        path: path.to_path_buf(),
        reason,
    };
    let mut m = BTreeMap::new();
    match task {
        EvalTask::Ocr => {
            let (r, h) = (ocr_text(reference), ocr_text(hypothesis));
            m.insert("wer".into(), word_error_rate(&r, &h).map_err(|e| bad(e.to_string()))?);
            m.insert("cer".into(), char_error_rate(&r, &h).map_err(|e| bad(e.to_string()))?);
        }
        EvalTask::Table => {
            let r = parse_table_tree(reference).map_err(|e| bad(e.to_string()))?;
            let (full, structure) = match parse_table_tree(hypothesis) {
                Ok(h) => (teds_with(&r, &h, TedsMode::TextAware), teds_with(&r, &h, TedsMode::StructureOnly)),
                Err(_) => (0.0, 0.0),
            };
            m.insert("teds".into(), full);
            m.insert("teds_struct".into(), structure);
        }
        EvalTask::Chart => {
            let r = parse_chart_annotation(reference).map_err(|e| bad(e.to_string()))?;
            let s = score_chart_text(&r, hypothesis);
            m.insert("cell_accuracy".into(), s.cell_accuracy());
            m.insert("exact".into(), f64::from(u8::from(s.exact())));
            m.insert("title".into(), f64::from(u8::from(s.title_match)));
            m.insert("type".into(), f64::from(u8::from(s.type_match)));
        }
    }
    Ok(m)
}

/// Score every reference under `ref_dir` against the file at the same
/// relative path under `hyp_dir`. A missing prediction is scored as empty.
pub fn evaluate_dirs(task: EvalTask, ref_dir: &Path, hyp_dir: &Path) -> Result<EvalReport, EvalError> {
    let mut refs = Vec::new();
    collect(ref_dir, task.suffix(), &mut refs)?;
    refs.sort();
    if refs.is_empty() {
        return Err(EvalError::NoReferences(task.suffix()));
    }
    let mut items = Vec::with_capacity(refs.len());
    for path in refs {
        let rel = path.strip_prefix(ref_dir).expect("walked under ref_dir");
        let reference = fs::read_to_string(&path).map_err(|source| EvalError::Io {
            path: path.clone(),
            source,
        })?;
        let hyp_path = hyp_dir.join(rel);
        let (hypothesis, missing) = match fs::read_to_string(&hyp_path) {
            Ok(h) => (h, false),
            Err(_) => (String::new(), true),
        };
        let scores = score(task, &reference, &hypothesis, &path)?;
        items.push(EvalItem {
            id: rel.to_string_lossy().replace('\\', "/"),
            missing,
            scores,
        });
    }
    let mut means: BTreeMap<String, f64> = BTreeMap::new();
    for it in &items {
        for (k, v) in &it.scores {
            *means.entry(k.clone()).or_default() += v;
        }
    }
    for v in means.values_mut() {
        *v /= items.len() as f64;
    }
    Ok(EvalReport {
        task,
        missing: items.iter().filter(|i| i.missing).count(),
        items,
        means,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) {
        let p = dir.join(name);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, text).unwrap();
    }

    #[test]
    fn ocr_scores_and_missing() {
        let r = tempfile::tempdir().unwrap();
        let h = tempfile::tempdir().unwrap();
        write(r.path(), "a/x.gt.txt", "one two three four");
        write(h.path(), "a/x.gt.txt", "one two three five");
        write(r.path(), "y.gt.txt", "كتب");
        let rep = evaluate_dirs(EvalTask::Ocr, r.path(), h.path()).unwrap();
        assert_eq!(rep.items.len(), 2);
        assert_eq!(rep.missing, 1);
        assert_eq!(rep.items[0].scores["wer"], 0.25);
        assert_eq!(rep.items[1].scores["cer"], 1.0);
        assert_eq!(rep.means["wer"], 0.625);
        assert_eq!(rep.to_jsonl().lines().count(), 3);
    }

    #[test]
    fn table_identity_scores_one() {
        let r = tempfile::tempdir().unwrap();
        let html = "<table><tr><td>a</td><td>b</td></tr></table>";
        write(r.path(), "t.html", html);
        let rep = evaluate_dirs(EvalTask::Table, r.path(), r.path()).unwrap();
        assert_eq!(rep.means["teds"], 1.0);
    }

    #[test]
    fn chart_garbage_scores_zero() {
        let r = tempfile::tempdir().unwrap();
        let h = tempfile::tempdir().unwrap();
        write(r.path(), "c.chart.txt", "title: t\ntype: bar\nlabel,value\nA,1");
        write(h.path(), "c.chart.txt", "nonsense");
        let rep = evaluate_dirs(EvalTask::Chart, r.path(), h.path()).unwrap();
        assert_eq!(rep.means["cell_accuracy"], 0.0);
        assert_eq!(rep.means["exact"], 0.0);
    }

    #[test]
    fn empty_reference_dir_is_error() {
        let r = tempfile::tempdir().unwrap();
        assert!(matches!(
            evaluate_dirs(EvalTask::Chart, r.path(), r.path()),
            Err(EvalError::NoReferences(_))
        ));
    }
}
