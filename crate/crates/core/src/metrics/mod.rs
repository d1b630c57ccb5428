//! Recognition metrics: word and character error rates, tree edit distance
//! similarity for tables, and field-level scoring of chart annotations.

mod chart;
mod tree;

use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

pub use chart::{score_chart, score_chart_text, ChartScore};
pub use tree::{parse_table_tree, teds, teds_with, tree_edit_distance, NodeLabel, TableTree, TedsMode};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("reference is empty")]
    EmptyReference,
    #[error("table parse error: {0}")]
    Parse(String),
}

/// Unit-cost edit distance between two sequences.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Edit distance over whitespace tokens divided by the reference token count.
pub fn word_error_rate(reference: &str, hypothesis: &str) -> Result<f64, MetricsError> {
    let r: Vec<&str> = reference.split_whitespace().collect();
    if r.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    let h: Vec<&str> = hypothesis.split_whitespace().collect();
    Ok(levenshtein(&r, &h) as f64 / r.len() as f64)
}

/// Edit distance over NFC scalar values divided by the reference length.
pub fn char_error_rate(reference: &str, hypothesis: &str) -> Result<f64, MetricsError> {
    let r: Vec<char> = reference.nfc().collect();
    if r.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    let h: Vec<char> = hypothesis.nfc().collect();
    Ok(levenshtein(&r, &h) as f64 / r.len() as f64)
}
