//! Paragraph reconstruction from OCR lines.
//!
//! Lines are nodes of an adjacency graph. Two lines are joined when their
//! baselines are vertically close (at most `spacing_multiplier` times the
//! page's median line spacing) and the lower line overlaps enough of the
//! upper line's horizontal extent. Paragraphs are the connected components.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{BoundingBox, OcrLine, PageAnnotation};
use crate::script::Direction;

#[derive(Debug, Error, PartialEq)]
pub enum LayoutError {
    #[error("page has no lines")]
    EmptyPage,
    #[error("invalid layout parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutParams {
    /// Minimum overlap as a fraction of the upper line's width, in (0, 1].
    pub overlap_threshold: f64,
    /// Edges allowed when the baseline gap is at most this times the median spacing.
    pub spacing_multiplier: f64,
    /// Page text direction, used only for ordering.
    pub direction: Direction,
}

impl Default for LayoutParams {
    fn default() -> Self {
        Self {
            overlap_threshold: 0.30,
            spacing_multiplier: 1.0,
            direction: Direction::Ltr,
        }
    }
}

impl LayoutParams {
    pub fn validate(&self) -> Result<(), LayoutError> {
        if !(self.overlap_threshold > 0.0 && self.overlap_threshold <= 1.0) {
            return Err(LayoutError::InvalidParams(format!(
                "overlap_threshold {} not in (0, 1]",
                self.overlap_threshold
            )));
        }
        if !(self.spacing_multiplier > 0.0 && self.spacing_multiplier.is_finite()) {
            return Err(LayoutError::InvalidParams(format!(
                "spacing_multiplier {} must be positive",
                self.spacing_multiplier
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paragraph {
    pub paragraph_id: usize,
    /// Top-to-bottom by baseline; ties broken by the leading edge for the
    /// page direction.
    pub line_ids: Vec<String>,
    pub union_bbox: BoundingBox,
    pub reading_order: usize,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Median of the positive gaps between consecutive distinct baselines.
///
/// Falls back to the median line height when every line shares one baseline.
pub fn median_line_spacing(page: &PageAnnotation) -> Result<f64, LayoutError> {
    if page.lines.is_empty() {
        return Err(LayoutError::EmptyPage);
    }
    let mut baselines: Vec<f64> = page.lines.iter().map(OcrLine::baseline_y).collect();
    baselines.sort_by(f64::total_cmp);
    let mut gaps: Vec<f64> = baselines
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|g| *g > 0.0)
        .collect();
    if gaps.is_empty() {
        let mut heights: Vec<f64> = page.lines.iter().map(|l| l.bbox.height).collect();
        heights.sort_by(f64::total_cmp);
        return Ok(median(&heights));
    }
    gaps.sort_by(f64::total_cmp);
    Ok(median(&gaps))
}

/// Length of the shared x-interval over the upper line's width, clamped to [0, 1].
pub fn horizontal_overlap_ratio(upper: &OcrLine, lower: &OcrLine) -> f64 {
    let a = &upper.bbox;
    let b = &lower.bbox;
    let inter = a.right().min(b.right()) - a.x.max(b.x);
    if inter <= 0.0 || a.width <= 0.0 {
        return 0.0;
    }
    (inter / a.width).clamp(0.0, 1.0)
}

/// Edges as pairs of indices into `page.lines`, each pair `(i, j)` with `i < j`,
/// sorted.
pub fn adjacency_indices(
    page: &PageAnnotation,
    params: &LayoutParams,
) -> Result<Vec<(usize, usize)>, LayoutError> {
    params.validate()?;
    let limit = params.spacing_multiplier * median_line_spacing(page)?;
    let lines = &page.lines;
    let mut order: Vec<usize> = (0..lines.len()).collect();
    order.sort_by(|&a, &b| lines[a].baseline_y().total_cmp(&lines[b].baseline_y()));

    let mut edges = Vec::new();
    for (k, &u) in order.iter().enumerate() {
        let upper = &lines[u];
        for &l in &order[k + 1..] {
            let lower = &lines[l];
            let gap = lower.baseline_y() - upper.baseline_y();
            if gap > limit {
                break;
            }
            if gap > 0.0 && horizontal_overlap_ratio(upper, lower) >= params.overlap_threshold {
                edges.push((u.min(l), u.max(l)));
            }
        }
    }
    edges.sort_unstable();
    Ok(edges)
}

/// The adjacency graph as undirected line-id pairs (page order within a pair).
pub fn build_line_adjacency(
    page: &PageAnnotation,
    params: &LayoutParams,
) -> Result<Vec<(String, String)>, LayoutError> {
    Ok(adjacency_indices(page, params)?
        .into_iter()
        .map(|(a, b)| (page.lines[a].line_id.clone(), page.lines[b].line_id.clone()))
        .collect())
}

/// Connected components of the adjacency graph, in reading order.
pub fn group_paragraphs(
    page: &PageAnnotation,
    params: &LayoutParams,
) -> Result<Vec<Paragraph>, LayoutError> {
    let edges = adjacency_indices(page, params)?;
    let n = page.lines.len();
    let mut neighbours = vec![Vec::new(); n];
    for &(a, b) in &edges {
        neighbours[a].push(b);
        neighbours[b].push(a);
    }

    let mut component = vec![usize::MAX; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let id = groups.len();
        let mut members = vec![start];
        let mut stack = vec![start];
        component[start] = id;
        while let Some(v) = stack.pop() {
            for &w in &neighbours[v] {
                if component[w] == usize::MAX {
                    component[w] = id;
                    members.push(w);
                    stack.push(w);
                }
            }
        }
        groups.push(members);
    }

    let rtl = params.direction.is_rtl();
    let lines = &page.lines;
    let leading = |b: &BoundingBox| if rtl { -b.right() } else { b.x };

    let mut paragraphs: Vec<(BoundingBox, Vec<usize>)> = groups
        .into_iter()
        .map(|mut members| {
            members.sort_by(|&a, &b| {
                lines[a]
                    .baseline_y()
                    .total_cmp(&lines[b].baseline_y())
                    .then(leading(&lines[a].bbox).total_cmp(&leading(&lines[b].bbox)))
                    .then(a.cmp(&b))
            });
            let bbox = BoundingBox::union_all(members.iter().map(|&i| &lines[i].bbox))
                .expect("component is non-empty");
            (bbox, members)
        })
        .collect();
    paragraphs.sort_by(|(a, ma), (b, mb)| {
        a.y.total_cmp(&b.y)
            .then(leading(a).total_cmp(&leading(b)))
            .then(ma[0].cmp(&mb[0]))
    });

    Ok(paragraphs
        .into_iter()
        .enumerate()
        .map(|(i, (union_bbox, members))| Paragraph {
            paragraph_id: i,
            line_ids: members.iter().map(|&m| lines[m].line_id.clone()).collect(),
            union_bbox,
            reading_order: i,
        })
        .collect())
}

/// Line-oriented dump of one page's graph for diffing:
///
/// ```text
/// page 0 lines 3 median 20
/// edge l1 l2
/// paragraph 0 l1 l2
/// paragraph 1 l3
/// ```
pub fn dump_page_graph(page: &PageAnnotation, params: &LayoutParams) -> Result<String, LayoutError> {
    let spacing = median_line_spacing(page)?;
    let mut out = String::new();
    writeln!(out, "page {} lines {} median {spacing}", page.page_index, page.lines.len()).unwrap();
    for (a, b) in build_line_adjacency(page, params)? {
        writeln!(out, "edge {a} {b}").unwrap();
    }
    for p in group_paragraphs(page, params)? {
        writeln!(out, "paragraph {} {}", p.paragraph_id, p.line_ids.join(" ")).unwrap();
    }
    Ok(out)
}
