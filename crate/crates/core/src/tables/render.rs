use crate::canvas::{encode_png, Anchor, Color, Element, Scene, Shape};
use crate::fonts::{FontRef, FontSet};
use crate::ingest::BoundingBox;
use crate::reflow::{apply_bidi_controls, select_font, Alignment};
use crate::render::RenderArtifact;
use crate::rng::SeededRng;

use super::html::{parse_table, HtmlCell};
use super::spec::{CaptionPosition, TableSpec};
use super::{TableError, TableGroundTruth};

pub const MARGIN: f64 = 10.0;
pub const CELL_PADDING: f64 = 6.0;
pub const MIN_CELL_WIDTH: f64 = 24.0;

/// Resolved geometry of a table image. `cells` follows the order of the
/// logical grid's cells.
#[derive(Debug, Clone, PartialEq)]
pub struct TableLayout {
    pub width: f64,
    pub height: f64,
    pub col_widths: Vec<f64>,
    pub row_heights: Vec<f64>,
    pub grid_box: BoundingBox,
    pub caption_box: Option<BoundingBox>,
    pub cells: Vec<BoundingBox>,
}

struct CellText {
    text: String,
    font: FontRef,
    size: f64,
}

fn font_for(fonts: &FontSet, family: &str, text: &str) -> Result<FontRef, TableError> {
    let chain = fonts.chain_from(family);
    select_font(text, &chain)
        .cloned()
        .map_err(|e| TableError::RenderFailure(e.to_string()))
}

fn cell_texts(gt: &TableGroundTruth, spec: &TableSpec, fonts: &FontSet) -> Result<Vec<CellText>, TableError> {
    let table = parse_table(&gt.html)?;
    let (grid, order) = table.logical_grid()?;
    if grid != spec.grid() {
        return Err(TableError::RenderFailure("ground truth grid differs from spec grid".into()));
    }
    let cells: Vec<&HtmlCell> = table.cells().collect();
    grid.cells
        .iter()
        .zip(order)
        .map(|(span, k)| {
            let text = cells[k].text();
            let style = spec.style(span.row, span.col);
            Ok(CellText {
                font: font_for(fonts, &style.font_family, &text)?,
                text,
                size: style.size,
            })
        })
        .collect()
}

fn widen(sizes: &mut [f64], need: f64) {
    let have: f64 = sizes.iter().sum();
    if have < need {
        let extra = (need - have) / sizes.len() as f64;
        for s in sizes {
            *s += extra;
        }
    }
}

fn caption_metrics(spec: &TableSpec, fonts: &FontSet) -> Result<Option<(String, FontRef, f64)>, TableError> {
    let Some(c) = &spec.caption else { return Ok(None) };
    let base = &spec.cell_styles[0];
    let font = font_for(fonts, &base.font_family, &c.text)?;
    Ok(Some((c.text.clone(), font, base.size * 1.15)))
}

/// Compute column widths, row heights and every cell box.
///
/// Columns fit their widest single-column cell, spanning cells widen the
/// columns they cover evenly, and right-to-left tables place logical column
/// 0 at the right edge.
pub fn table_layout(gt: &TableGroundTruth, spec: &TableSpec, fonts: &FontSet) -> Result<TableLayout, TableError> {
    let texts = cell_texts(gt, spec, fonts)?;
    layout_from(spec, &texts, caption_metrics(spec, fonts)?.as_ref())
}

fn layout_from(spec: &TableSpec, texts: &[CellText], caption: Option<&(String, FontRef, f64)>) -> Result<TableLayout, TableError> {
    let grid = spec.grid();
    let mut col_widths = vec![MIN_CELL_WIDTH; spec.cols];
    let mut row_heights = vec![0.0f64; spec.rows];
    let need: Vec<(f64, f64)> = texts
        .iter()
        .map(|t| {
            let (w, h) = t.font.measure(&t.text, t.size);
            (w + 2.0 * CELL_PADDING, h + 2.0 * CELL_PADDING)
        })
        .collect();
    for (span, &(w, h)) in grid.cells.iter().zip(&need) {
        if span.col_span == 1 {
            col_widths[span.col] = col_widths[span.col].max(w);
        }
        if span.row_span == 1 {
            row_heights[span.row] = row_heights[span.row].max(h);
        }
    }
    for r in 0..spec.rows {
        if row_heights[r] == 0.0 {
            row_heights[r] = spec.cell_styles[r * spec.cols].size + 2.0 * CELL_PADDING;
        }
    }
    for (span, &(w, h)) in grid.cells.iter().zip(&need) {
        if span.col_span > 1 {
            widen(&mut col_widths[span.col..span.col + span.col_span], w);
        }
        if span.row_span > 1 {
            widen(&mut row_heights[span.row..span.row + span.row_span], h);
        }
    }

    let grid_w: f64 = col_widths.iter().sum();
    let grid_h: f64 = row_heights.iter().sum();
    let (cap_w, cap_h) = match caption {
        Some((text, font, size)) => {
            let (w, h) = font.measure(text, *size);
            (w, h + 2.0 * CELL_PADDING)
        }
        None => (0.0, 0.0),
    };
    let width = grid_w.max(cap_w) + 2.0 * MARGIN;
    let height = grid_h + cap_h + 2.0 * MARGIN;
    let gx = (width - grid_w) / 2.0;
    let top_caption = spec.caption.as_ref().is_some_and(|c| c.position == CaptionPosition::Top);
    let gy = MARGIN + if top_caption { cap_h } else { 0.0 };
    let grid_box = BoundingBox::new(gx, gy, grid_w, grid_h);
    let caption_box = spec.caption.as_ref().map(|c| match c.position {
        CaptionPosition::Top => BoundingBox::new(MARGIN, MARGIN, width - 2.0 * MARGIN, cap_h),
        CaptionPosition::Bottom => BoundingBox::new(MARGIN, gy + grid_h, width - 2.0 * MARGIN, cap_h),
    });

    let rtl = spec.direction.is_rtl();
    let cells = grid
        .cells
        .iter()
        .map(|s| {
            let w: f64 = col_widths[s.col..s.col + s.col_span].iter().sum();
            let h: f64 = row_heights[s.row..s.row + s.row_span].iter().sum();
            let y = gy + row_heights[..s.row].iter().sum::<f64>();
            let x = if rtl {
                gx + col_widths[s.col + s.col_span..].iter().sum::<f64>()
            } else {
                gx + col_widths[..s.col].iter().sum::<f64>()
            };
            BoundingBox::new(x, y, w, h)
        })
        .collect();
    Ok(TableLayout {
        width,
        height,
        col_widths,
        row_heights,
        grid_box,
        caption_box,
        cells,
    })
}

fn text_anchor(align: Alignment, b: &BoundingBox) -> (Anchor, f64) {
    match align {
        Alignment::Left => (Anchor::Start, b.x + CELL_PADDING),
        Alignment::Right => (Anchor::End, b.right() - CELL_PADDING),
        Alignment::Center => (Anchor::Middle, b.x + b.width / 2.0),
    }
}

/// Draw the table described by `gt` with the styling in `spec`. The sidecar
/// is the canonical HTML.
pub fn render_table(
    artifact_id: &str,
    gt: &TableGroundTruth,
    spec: &TableSpec,
    fonts: &FontSet,
    rng: &SeededRng,
) -> Result<RenderArtifact, TableError> {
    spec.validate()?;
    let texts = cell_texts(gt, spec, fonts)?;
    let caption = caption_metrics(spec, fonts)?;
    let layout = layout_from(spec, &texts, caption.as_ref())?;
    let grid = spec.grid();
    let mut scene = Scene::new(layout.width, layout.height, Some(Color::WHITE));

    for ((span, b), t) in grid.cells.iter().zip(&layout.cells).zip(&texts) {
        let style = spec.style(span.row, span.col);
        let mut rect = Element::new(Shape::Rect {
            x: b.x,
            y: b.y,
            w: b.width,
            h: b.height,
        })
        .stroke(spec.grid_color, 1.0)
        .attr("data-role", "cell")
        .attr("data-row", span.row)
        .attr("data-col", span.col)
        .attr("data-rowspan", span.row_span)
        .attr("data-colspan", span.col_span);
        if let Some(bg) = style.background {
            rect = rect.fill(bg);
        }
        scene.push(rect);
        if t.text.is_empty() {
            continue;
        }
        let (anchor, x) = text_anchor(style.align, b);
        let lh = t.font.line_height(t.size);
        let baseline = b.y + (b.height - lh) / 2.0 + t.font.ascent(t.size);
        let before = scene.elements.len();
        scene.text(
            &t.font,
            &apply_bidi_controls(&t.text, spec.direction),
            t.size,
            x,
            baseline,
            style.color,
            anchor,
            0.0,
            vec![("data-cell".into(), format!("{},{}", span.row, span.col))],
        );
        if style.bold && scene.elements.len() > before {
            let el = scene.elements.last_mut().expect("text element pushed");
            el.stroke = Some(crate::canvas::Stroke {
                color: style.color,
                width: t.size * 0.04,
            });
        }
    }

    if let (Some(cb), Some((text, font, size))) = (layout.caption_box, caption.as_ref()) {
        let lh = font.line_height(*size);
        let baseline = cb.y + (cb.height - lh) / 2.0 + font.ascent(*size);
        scene.text(
            font,
            &apply_bidi_controls(text, spec.direction),
            *size,
            cb.x + cb.width / 2.0,
            baseline,
            spec.cell_styles[0].color,
            Anchor::Middle,
            0.0,
            vec![("data-caption".into(), "true".into())],
        );
    }

    let pm = scene.rasterize(1.0).map_err(|e| TableError::RenderFailure(e.to_string()))?;
    let png = encode_png(&pm).map_err(|e| TableError::RenderFailure(e.to_string()))?;
    Ok(RenderArtifact::new(artifact_id, scene.to_svg(), Some(png), gt.html.clone(), "html", rng))
}
