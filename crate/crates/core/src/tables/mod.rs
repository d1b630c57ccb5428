//! Table specifications, canonical HTML ground truth, LaTeX conversion and
//! table images.

pub mod html;
pub mod latex;
pub mod render;
pub mod spec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use html::{normalize_table_html, parse_table, CellSpan, HtmlCell, HtmlSection, HtmlTable, Inline, LogicalGrid, SectionKind};
pub use latex::{latex_table_to_html, table_to_latex};
pub use render::{render_table, table_layout, TableLayout};
pub use spec::{
    generate_table_content, generate_table_spec, generate_table_spec_with, Caption, CaptionPosition, CellAlign, CellStyle, ContentPolicy, Merge,
    Language, NumeralPolicy, StyleMode, TableSpec,
};

#[derive(Debug, Error, PartialEq)]
pub enum TableError {
    #[error("table spec violation: {0}")]
    SpecViolation(String),
    #[error("no table element found")]
    NoTableFound,
    #[error("unsupported construct: {0}")]
    UnsupportedConstruct(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("render failed: {0}")]
    RenderFailure(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableGroundTruth {
    pub html: String,
    pub grid: LogicalGrid,
}

impl TableGroundTruth {
    pub fn from_table(table: &HtmlTable) -> Result<Self, TableError> {
        let (grid, _) = table.logical_grid()?;
        Ok(Self {
            html: table.to_html(),
            grid,
        })
    }
}

fn text_inline(s: &str) -> Vec<Inline> {
    html::normalize_inline(vec![Inline::Text(s.to_string())])
}

/// Canonical HTML for `spec` filled with `content` (rows × cols; only the
/// text at each cell's top-left position is used).
pub fn table_to_html(spec: &TableSpec, content: &[Vec<String>]) -> Result<TableGroundTruth, TableError> {
    spec.validate()?;
    if content.len() != spec.rows || content.iter().any(|r| r.len() != spec.cols) {
        return Err(TableError::SpecViolation(format!(
            "content is not {}x{}",
            spec.rows, spec.cols
        )));
    }
    let grid = spec.grid();
    let owners = grid.owners();
    let body_end = spec.rows - spec.footer_rows;
    let mut sections: Vec<HtmlSection> = Vec::new();
    for r in 0..spec.rows {
        let kind = if r < spec.header_rows {
            SectionKind::Head
        } else if r >= body_end {
            SectionKind::Foot
        } else {
            SectionKind::Body
        };
        if sections.last().is_none_or(|s| s.kind != kind) {
            sections.push(HtmlSection { kind, rows: Vec::new() });
        }
        let mut row = Vec::new();
        for c in 0..spec.cols {
            let span = grid.cells[owners[r][c].expect("spec grid is complete")];
            if span.row != r || span.col != c {
                continue;
            }
            row.push(HtmlCell {
                header: kind == SectionKind::Head,
                rowspan: span.row_span,
                colspan: span.col_span,
                content: text_inline(&content[r][c]),
            });
        }
        sections.last_mut().unwrap().rows.push(row);
    }
    let table = HtmlTable {
        caption: spec.caption.as_ref().map(|c| text_inline(&c.text)),
        sections,
    };
    let gt = TableGroundTruth::from_table(&table)?;
    if gt.grid != grid {
        return Err(TableError::SpecViolation("emitted grid differs from spec grid".into()));
    }
    Ok(gt)
}
