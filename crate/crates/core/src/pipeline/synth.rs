use serde_json::json;

use super::{sha256_hex, ArtifactClass, Context};
use crate::charts::{generate_chart_spec_with, render_chart, serialize_chart_annotation};
use crate::corpus;
use crate::ingest::{serialize_document, BoundingBox, DocumentAnnotation, OcrLine, PageAnnotation};
use crate::layout::group_paragraphs;
use crate::reflow::{allocate_segments, select_font, FitLimits, LineAssignment};
use crate::render::{render_page, render_text_crop, BackgroundMode, CropStyle, PageStyle, RenderArtifact, RenderOptions};
use crate::rng::SeededRng;
use crate::script::Direction;
use crate::tables::{
    generate_table_content, generate_table_spec_with, latex_table_to_html, parse_table, render_table,
    table_to_html, table_to_latex, Caption, CaptionPosition, HtmlTable, Inline, Language, SectionKind, StyleMode,
    TableGroundTruth, TableSpec,
};
use crate::translation::{translate_paragraph, TranslationRequest};

pub(crate) struct Generated {
    pub artifact: RenderArtifact,
    pub extra: Vec<(&'static str, Vec<u8>)>,
    pub spec_digest: String,
}

impl Generated {
    fn new(artifact: RenderArtifact, spec: &serde_json::Value) -> Self {
        Self {
            artifact,
            extra: Vec::new(),
            spec_digest: sha256_hex(spec.to_string().as_bytes()),
        }
    }
}

pub(crate) fn generate(
    ctx: &Context,
    class: ArtifactClass,
    index: usize,
    id: &str,
    mut rng: SeededRng,
) -> Result<Generated, String> {
    match class {
        ArtifactClass::Crop => crop(ctx, id, &mut rng),
        ArtifactClass::Page => page(ctx, index, id, &mut rng),
        ArtifactClass::TableConsistent => table(ctx, StyleMode::Consistent, id, &mut rng),
        ArtifactClass::TableRandom => table(ctx, StyleMode::Random, id, &mut rng),
        ArtifactClass::TableLatex => latex_table(ctx, id, &mut rng),
        ArtifactClass::Chart => chart(ctx, id, &mut rng),
    }
}

/// Vocalized Arabic words, sometimes followed by a number.
pub fn crop_text(rng: &mut SeededRng) -> String {
    let mut text = corpus::arabic_phrase(rng, 1, 4);
    if rng.chance(0.3) {
        text.push(' ');
        text.push_str(&corpus::number_text(rng, 2000, 2));
    }
    text
}

fn crop(ctx: &Context, id: &str, rng: &mut SeededRng) -> Result<Generated, String> {
    let raw = crop_text(rng);
    let text = ctx.config.diacritization.apply(&raw, rng);
    let style = CropStyle::sample(&ctx.fonts.for_direction(Direction::Rtl), rng);
    let artifact = render_text_crop(id, &text, &style, rng).map_err(|e| e.to_string())?;
    let spec = json!({
        "text": artifact.ground_truth,
        "fonts": style.fonts.iter().map(|f| f.family.clone()).collect::<Vec<_>>(),
        "size": style.size,
        "color": style.color.hex(),
        "background": style.background.hex(),
    });
    Ok(Generated::new(artifact, &spec))
}

/// An English page of left-aligned paragraphs with one line height.
pub fn synthetic_page(page_index: usize, rng: &mut SeededRng) -> PageAnnotation {
    let (width, height) = (1000u32, 1400u32);
    let margin = 60.0;
    let line_h = rng.int_in(16, 28) as f64;
    let pitch = line_h * rng.float_in(1.3, 1.7);
    let mut lines = Vec::new();
    let mut y = margin;
    let paragraphs = rng.int_in(2, 6);
    for _ in 0..paragraphs {
        let n = rng.int_in(1, 6);
        if y + n as f64 * pitch > height as f64 - margin {
            break;
        }
        let x = margin + rng.float_in(0.0, 40.0);
        let full = rng.float_in(560.0, width as f64 - margin - x);
        for k in 0..n {
            let w = if k + 1 == n { full * rng.float_in(0.45, 1.0) } else { full * rng.float_in(0.9, 1.0) };
            let words = ((w / (line_h * 3.2)) as usize).max(2);
            lines.push(OcrLine {
                line_id: format!("l{}", lines.len() + 1),
                text: corpus::english_line(rng, words.saturating_sub(1).max(1), words, 0.08),
                bbox: BoundingBox::new(x, y, w, line_h),
            });
            y += pitch;
        }
        y += pitch * rng.float_in(1.8, 3.0);
    }
    PageAnnotation {
        page_index,
        width,
        height,
        background_ref: None,
        lines,
    }
}

fn page(ctx: &Context, index: usize, id: &str, rng: &mut SeededRng) -> Result<Generated, String> {
    let cfg = &ctx.config;
    let (page, base_dir) = if ctx.source_pages.is_empty() {
        (synthetic_page(index, rng), std::path::PathBuf::from("."))
    } else {
        let (p, dir) = &ctx.source_pages[index % ctx.source_pages.len()];
        (p.clone(), dir.clone())
    };
    let direction = Direction::for_language(&cfg.target_language);
    let background = if page.background_ref.is_some() {
        BackgroundMode::OriginalScan
    } else {
        if !ctx.source_pages.is_empty() {
            log::warn!("{id}: page {} has no scan, using a plain background", page.page_index);
        }
        BackgroundMode::Plain
    };
    let style = PageStyle::sample(&ctx.fonts.for_direction(direction), 3, background, rng);
    let paragraphs = group_paragraphs(&page, &cfg.layout).map_err(|e| e.to_string())?;

    let mut assignments: Vec<LineAssignment> = Vec::new();
    let mut translations = Vec::new();
    for para in &paragraphs {
        let lines: Vec<&OcrLine> = para
            .line_ids
            .iter()
            .map(|l| page.line(l).expect("paragraph lines come from the page"))
            .collect();
        let request = TranslationRequest::new(
            para.paragraph_id,
            lines.iter().map(|l| l.text.clone()).collect(),
            &cfg.source_language,
            &cfg.target_language,
        );
        let response = translate_paragraph(ctx.provider.as_ref(), &request).map_err(|e| e.to_string())?;
        for block in response.blocks() {
            let text = response.lines[block.clone()].join(" ");
            let mut chain = style.fonts.clone();
            chain.extend(ctx.fonts.fonts().iter().cloned());
            let font = select_font(&text, &chain).map_err(|e| e.to_string())?;
            let mut placed =
                allocate_segments(&lines[block], &text, font, FitLimits::default()).map_err(|e| e.to_string())?;
            assignments.append(&mut placed);
        }
        translations.push(response.lines);
    }
    let options = RenderOptions {
        raster_scale: cfg.render.raster_scale,
        emit_raster: cfg.render.emit_raster,
        base_dir,
    };
    let artifact = render_page(id, &page, &assignments, &style, rng, &options).map_err(|e| e.to_string())?;
    let source = serialize_document(&DocumentAnnotation {
        doc_id: id.to_string(),
        source_language: cfg.source_language.clone(),
        pages: vec![page],
    });
    let spec = json!({
        "page": source,
        "translations": translations,
        "fonts": style.fonts.iter().map(|f| f.family.clone()).collect::<Vec<_>>(),
        "color": style.color.hex(),
    });
    Ok(Generated::new(artifact, &spec))
}

fn table(ctx: &Context, mode: StyleMode, id: &str, rng: &mut SeededRng) -> Result<Generated, String> {
    let spec = generate_table_spec_with(mode, &ctx.fonts.families(), rng);
    let content = generate_table_content(&spec, rng);
    let gt = table_to_html(&spec, &content).map_err(|e| e.to_string())?;
    let artifact = render_table(id, &gt, &spec, &ctx.fonts, rng).map_err(|e| e.to_string())?;
    Ok(Generated::new(artifact, &json!({ "spec": spec, "content": content })))
}

/// Replace every text run of `table` by its translation, one provider line
/// per run so inline markup survives.
fn translate_table(ctx: &Context, table: &mut HtmlTable) -> Result<(), String> {
    let mut runs: Vec<&mut String> = Vec::new();
    if let Some(c) = table.caption.as_mut() {
        runs.extend(c.iter_mut().filter_map(text_of));
    }
    for section in table.sections.iter_mut() {
        for cell in section.rows.iter_mut().flatten() {
            runs.extend(cell.content.iter_mut().filter_map(text_of));
        }
    }
    if runs.is_empty() {
        return Ok(());
    }
    let lines: Vec<String> = runs.iter().map(|s| s.to_string()).collect();
    let mut request = TranslationRequest::new(0, lines, &ctx.config.source_language, &ctx.config.target_language);
    request.contiguous = vec![false; request.lines.len().saturating_sub(1)];
    let response = translate_paragraph(ctx.provider.as_ref(), &request).map_err(|e| e.to_string())?;
    for (slot, t) in runs.into_iter().zip(response.lines) {
        *slot = t;
    }
    Ok(())
}

fn text_of(item: &mut Inline) -> Option<&mut String> {
    match item {
        Inline::Text(t) => Some(t),
        _ => None,
    }
}

/// English table written as LaTeX, converted to HTML, translated cell by
/// cell and drawn right to left.
fn latex_table(ctx: &Context, id: &str, rng: &mut SeededRng) -> Result<Generated, String> {
    let mut spec = generate_table_spec_with(StyleMode::Consistent, &ctx.fonts.families(), rng);
    spec.direction = Direction::Ltr;
    spec.content.language = Language::English;
    spec.footer_rows = 0;
    if let Some(c) = spec.caption.as_mut() {
        c.text = corpus::latin_phrase(rng, 2, 6);
    }
    let content = generate_table_content(&spec, rng);
    let bold_header = rng.chance(0.5);
    let latex = table_to_latex(&spec, &content, bold_header).map_err(|e| e.to_string())?;
    let english = latex_table_to_html(&latex).map_err(|e| e.to_string())?;

    let mut table = parse_table(&english.html).map_err(|e| e.to_string())?;
    translate_table(ctx, &mut table)?;
    let gt = TableGroundTruth::from_table(&table).map_err(|e| e.to_string())?;
    let header_rows = table
        .sections
        .iter()
        .filter(|s| s.kind == SectionKind::Head)
        .map(|s| s.rows.len())
        .sum();
    let direction = Direction::for_language(&ctx.config.target_language);
    let mut draw = TableSpec::from_grid(&gt.grid, header_rows, direction);
    draw.grid_color = spec.grid_color;
    for (s, d) in draw.cell_styles.iter_mut().zip(&spec.cell_styles) {
        s.font_family = d.font_family.clone();
        s.size = d.size;
    }
    for r in 0..header_rows {
        for c in 0..draw.cols {
            draw.cell_styles[r * draw.cols + c].bold = bold_header;
        }
    }
    draw.caption = table.caption.as_ref().map(|c| Caption {
        text: crate::tables::html::plain_text(c),
        position: spec.caption.as_ref().map_or(CaptionPosition::Top, |c| c.position),
    });
    let mut artifact = render_table(id, &gt, &draw, &ctx.fonts, rng).map_err(|e| e.to_string())?;
    artifact.ground_truth = gt.html.clone();
    let mut g = Generated::new(artifact, &json!({ "latex": latex, "html": gt.html }));
    g.extra.push(("tex", latex.into_bytes()));
    Ok(g)
}

fn chart(ctx: &Context, id: &str, rng: &mut SeededRng) -> Result<Generated, String> {
    let spec = generate_chart_spec_with(None, &ctx.fonts.families(), rng);
    let artifact = render_chart(id, &spec, &ctx.fonts, rng).map_err(|e| e.to_string())?;
    let spec_json = json!({
        "annotation": serialize_chart_annotation(&spec).to_text(),
        "style": spec.style,
    });
    Ok(Generated::new(artifact, &spec_json))
}
