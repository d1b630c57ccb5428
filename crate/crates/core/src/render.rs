//! Page composition over scanned backgrounds and tightly cropped text lines.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tiny_skia::{IntRect, IntSize, Pixmap};
use unicode_normalization::UnicodeNormalization;

use crate::canvas::{encode_png, Anchor, CanvasError, Color, Element, Scene, Shape};
use crate::fonts::FontRef;
use crate::ingest::{BoundingBox, PageAnnotation};
use crate::reflow::{apply_bidi_controls, select_font, Alignment, LineAssignment, ReflowError};
use crate::rng::SeededRng;
use crate::script::majority_direction;

pub const GENERATOR_VERSION: &str = concat!("docforge/", env!("CARGO_PKG_VERSION"));

/// Text colors pages and crops draw from.
pub const TEXT_COLORS: [Color; 9] = [
    Color::rgb(0x00, 0x00, 0x00),
    Color::rgb(0x33, 0x33, 0x33),
    Color::rgb(0x1a, 0x23, 0x7e),
    Color::rgb(0x0d, 0x47, 0xa1),
    Color::rgb(0x8b, 0x00, 0x00),
    Color::rgb(0x1b, 0x5e, 0x20),
    Color::rgb(0x5d, 0x40, 0x37),
    Color::rgb(0x4a, 0x14, 0x8c),
    Color::rgb(0x00, 0x4d, 0x40),
];

/// Light grounds for text crops.
pub const CROP_BACKGROUNDS: [Color; 5] = [
    Color::WHITE,
    Color::rgb(0xfa, 0xf8, 0xf0),
    Color::rgb(0xf0, 0xf0, 0xf0),
    Color::rgb(0xff, 0xfb, 0xe6),
    Color::rgb(0xee, 0xf4, 0xfb),
];

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("page {0} has no background reference")]
    MissingBackground(usize),
    #[error("no font covers {0:?}")]
    NoCoveringFont(BTreeSet<char>),
    #[error("nothing to draw")]
    EmptyText,
    #[error("render failed: {0}")]
    RenderFailure(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<CanvasError> for RenderError {
    fn from(e: CanvasError) -> Self {
        RenderError::RenderFailure(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackgroundMode {
    OriginalScan,
    Plain,
}

#[derive(Debug, Clone)]
pub struct PageStyle {
    /// Fonts sampled for this page; reflow picks from these.
    pub fonts: Vec<FontRef>,
    pub color: Color,
    pub background: BackgroundMode,
}

impl PageStyle {
    /// Up to `max_fonts` fonts from `palette` in random order, one text color.
    pub fn sample(palette: &[FontRef], max_fonts: usize, background: BackgroundMode, rng: &mut SeededRng) -> Self {
        let mut fonts = palette.to_vec();
        rng.shuffle(&mut fonts);
        fonts.truncate(max_fonts.max(1));
        Self {
            fonts,
            color: *rng.pick(&TEXT_COLORS),
            background,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CropStyle {
    /// Candidate fonts, in preference order.
    pub fonts: Vec<FontRef>,
    pub size: f64,
    pub color: Color,
    pub background: Color,
    /// Raster pixels per point.
    pub scale: f64,
}

impl CropStyle {
    pub fn sample(palette: &[FontRef], rng: &mut SeededRng) -> Self {
        let mut fonts = palette.to_vec();
        rng.shuffle(&mut fonts);
        Self {
            fonts,
            size: rng.int_in(18, 44) as f64,
            color: *rng.pick(&TEXT_COLORS),
            background: *rng.pick(&CROP_BACKGROUNDS),
            scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderOptions {
    /// Raster pixels per page unit.
    pub raster_scale: f64,
    pub emit_raster: bool,
    /// Directory that relative background references resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            raster_scale: 1.0,
            emit_raster: true,
            base_dir: PathBuf::from("."),
        }
    }
}

/// One generated sample: vector image, optional raster, and ground truth.
#[derive(Debug, Clone)]
pub struct RenderArtifact {
    pub artifact_id: String,
    pub svg: String,
    pub png: Option<Vec<u8>>,
    pub ground_truth: String,
    /// Sidecar file suffix, such as `gt.txt` or `html`.
    pub ground_truth_ext: &'static str,
    pub seed: u64,
    pub stream_id: u64,
    pub generator_version: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WrittenFiles {
    pub svg: PathBuf,
    pub png: Option<PathBuf>,
    pub ground_truth: PathBuf,
}

impl RenderArtifact {
    pub fn new(artifact_id: &str, svg: String, png: Option<Vec<u8>>, ground_truth: String, ext: &'static str, rng: &SeededRng) -> Self {
        Self {
            artifact_id: artifact_id.to_string(),
            svg,
            png,
            ground_truth,
            ground_truth_ext: ext,
            seed: rng.seed(),
            stream_id: rng.stream_id(),
            generator_version: GENERATOR_VERSION,
        }
    }

    /// Write `{id}.svg`, `{id}.png` and `{id}.{ext}` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<WrittenFiles, std::io::Error> {
        fs::create_dir_all(dir)?;
        let svg = dir.join(format!("{}.svg", self.artifact_id));
        fs::write(&svg, &self.svg)?;
        let png = match &self.png {
            Some(bytes) => {
                let p = dir.join(format!("{}.png", self.artifact_id));
                fs::write(&p, bytes)?;
                Some(p)
            }
            None => None,
        };
        let ground_truth = dir.join(format!("{}.{}", self.artifact_id, self.ground_truth_ext));
        fs::write(&ground_truth, &self.ground_truth)?;
        Ok(WrittenFiles { svg, png, ground_truth })
    }
}

/// One record of a page's ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageTruthRecord {
    pub line_id: String,
    pub bbox: BoundingBox,
    pub text: String,
}

pub fn parse_page_truth(s: &str) -> Result<Vec<PageTruthRecord>, serde_json::Error> {
    s.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

/// Load an image file as an opaque-or-premultiplied pixmap.
pub fn load_background(path: &Path) -> Result<Pixmap, RenderError> {
    let img = image::open(path)
        .map_err(|e| RenderError::RenderFailure(format!("{}: {e}", path.display())))?
        .to_rgba8();
    let (w, h) = img.dimensions();
    let mut data = img.into_raw();
    for px in data.chunks_exact_mut(4) {
        let a = px[3] as u16;
        for c in &mut px[..3] {
            *c = ((*c as u16 * a + 127) / 255) as u8;
        }
    }
    let size = IntSize::from_wh(w, h).ok_or_else(|| RenderError::RenderFailure("empty background".into()))?;
    Pixmap::from_vec(data, size).ok_or_else(|| RenderError::RenderFailure("bad background buffer".into()))
}

/// Per-channel median of the ring of pixels just outside `bbox`
/// (`bbox` in page units, `scale` image pixels per page unit).
pub fn border_ring_median(bg: &Pixmap, bbox: &BoundingBox, sx: f64, sy: f64, ring: i64) -> Color {
    let (w, h) = (bg.width() as i64, bg.height() as i64);
    let x0 = (bbox.x * sx).floor() as i64;
    let y0 = (bbox.y * sy).floor() as i64;
    let x1 = (bbox.right() * sx).ceil() as i64;
    let y1 = (bbox.bottom() * sy).ceil() as i64;
    let mut rs = Vec::new();
    let mut gs = Vec::new();
    let mut bs = Vec::new();
    for y in (y0 - ring).max(0)..(y1 + ring).min(h) {
        for x in (x0 - ring).max(0)..(x1 + ring).min(w) {
            if x >= x0 && x < x1 && y >= y0 && y < y1 {
                continue;
            }
            let p = bg.pixel(x as u32, y as u32).unwrap().demultiply();
            rs.push(p.red());
            gs.push(p.green());
            bs.push(p.blue());
        }
    }
    if rs.is_empty() {
        return Color::WHITE;
    }
    let med = |v: &mut Vec<u8>| {
        v.sort_unstable();
        v[v.len() / 2]
    };
    Color::rgb(med(&mut rs), med(&mut gs), med(&mut bs))
}

fn anchor_for(alignment: Alignment, bbox: &BoundingBox) -> (Anchor, f64) {
    let pad = bbox.width * crate::reflow::BOX_PADDING / 2.0;
    match alignment {
        Alignment::Left => (Anchor::Start, bbox.x + pad),
        Alignment::Right => (Anchor::End, bbox.right() - pad),
        Alignment::Center => (Anchor::Middle, bbox.x + bbox.width / 2.0),
    }
}

/// Compose a translated page: the background with each assigned box
/// whitened to its local background color, then every segment drawn.
pub fn render_page(
    artifact_id: &str,
    page: &PageAnnotation,
    assignments: &[LineAssignment],
    style: &PageStyle,
    rng: &SeededRng,
    options: &RenderOptions,
) -> Result<RenderArtifact, RenderError> {
    let (pw, ph) = (page.width as f64, page.height as f64);
    let mut scene = Scene::new(pw, ph, Some(Color::WHITE));
    let background = match style.background {
        BackgroundMode::Plain => None,
        BackgroundMode::OriginalScan => {
            let href = page
                .background_ref
                .as_ref()
                .ok_or(RenderError::MissingBackground(page.page_index))?;
            let pm = Arc::new(load_background(&options.base_dir.join(href))?);
            scene.push(
                Element::new(Shape::Image {
                    href: href.clone(),
                    x: 0.0,
                    y: 0.0,
                    w: pw,
                    h: ph,
                    pixels: Some(pm.clone()),
                })
                .attr("data-role", "scan"),
            );
            Some(pm)
        }
    };

    let mut truth = String::new();
    for a in assignments {
        if !a.fits() {
            return Err(RenderError::RenderFailure(format!("{} does not fit its box", a.line_id)));
        }
        let ground = match &background {
            Some(bg) => border_ring_median(bg, &a.bbox, bg.width() as f64 / pw, bg.height() as f64 / ph, 2),
            None => Color::WHITE,
        };
        let b = a.bbox;
        scene.push(
            Element::new(Shape::Rect {
                x: b.x,
                y: b.y,
                w: b.width,
                h: b.height,
            })
            .fill(ground)
            .attr("data-role", "erase")
            .attr("data-line", &a.line_id),
        );
        let (anchor, x) = anchor_for(a.alignment, &b);
        let lh = a.font.line_height(a.font_size);
        let baseline = b.y + (b.height - lh) / 2.0 + a.font.ascent(a.font_size);
        let drawn = apply_bidi_controls(&a.text, a.direction);
        scene.text(
            &a.font,
            &drawn,
            a.font_size,
            x,
            baseline,
            style.color,
            anchor,
            0.0,
            vec![("data-line".into(), a.line_id.clone())],
        );
        let rec = PageTruthRecord {
            line_id: a.line_id.clone(),
            bbox: a.bbox,
            text: a.text.clone(),
        };
        truth.push_str(&serde_json::to_string(&rec).expect("truth record serializes"));
        truth.push('\n');
    }

    let png = if options.emit_raster {
        Some(encode_png(&scene.rasterize(options.raster_scale)?)?)
    } else {
        None
    };
    Ok(RenderArtifact::new(artifact_id, scene.to_svg(), png, truth, "gt.txt", rng))
}

/// Bounds `[x0, x1) × [y0, y1)` of pixels that differ from `bg`.
pub fn ink_bounds(pm: &Pixmap, bg: Color) -> Option<(u32, u32, u32, u32)> {
    let (w, h) = (pm.width(), pm.height());
    let mut b: Option<(u32, u32, u32, u32)> = None;
    for (i, p) in pm.pixels().iter().enumerate() {
        let p = p.demultiply();
        if (p.red(), p.green(), p.blue()) == (bg.r, bg.g, bg.b) {
            continue;
        }
        let (x, y) = (i as u32 % w, i as u32 / w);
        b = Some(match b {
            None => (x, y, x + 1, y + 1),
            Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x + 1), y1.max(y + 1)),
        });
    }
    debug_assert!(b.is_none_or(|(_, _, x1, y1)| x1 <= w && y1 <= h));
    b
}

/// Render `text` (one or more lines) and crop to its ink plus one pixel.
///
/// The sidecar holds the NFC form of `text`.
pub fn render_text_crop(artifact_id: &str, text: &str, style: &CropStyle, rng: &SeededRng) -> Result<RenderArtifact, RenderError> {
    let text: String = text.nfc().collect();
    if text.trim().is_empty() {
        return Err(RenderError::EmptyText);
    }
    let font = select_font(&text, &style.fonts).map_err(|e| match e {
        ReflowError::NoCoveringFont { uncovered } => RenderError::NoCoveringFont(uncovered),
        other => RenderError::RenderFailure(other.to_string()),
    })?;
    let direction = majority_direction(&text);
    let lines: Vec<&str> = text.split('\n').collect();
    let size = style.size;
    let lh = font.line_height(size);
    let widths: Vec<f64> = lines.iter().map(|l| font.measure(l, size).0).collect();
    let maxw = widths.iter().cloned().fold(0.0, f64::max);
    let margin = size;
    let mut scene = Scene::new(maxw + 2.0 * margin, lines.len() as f64 * lh + 2.0 * margin, Some(style.background));
    for (k, line) in lines.iter().enumerate() {
        let baseline = margin + k as f64 * lh + font.ascent(size);
        let (anchor, x) = if direction.is_rtl() {
            (Anchor::End, margin + maxw)
        } else {
            (Anchor::Start, margin)
        };
        scene.text(font, &apply_bidi_controls(line, direction), size, x, baseline, style.color, anchor, 0.0, vec![]);
    }
    let full = scene.rasterize(style.scale)?;
    let (x0, y0, x1, y1) = ink_bounds(&full, style.background).ok_or(RenderError::EmptyText)?;
    let (cx0, cy0) = (x0.saturating_sub(1), y0.saturating_sub(1));
    let (cx1, cy1) = ((x1 + 1).min(full.width()), (y1 + 1).min(full.height()));
    let rect = IntRect::from_ltrb(cx0 as i32, cy0 as i32, cx1 as i32, cy1 as i32)
        .ok_or_else(|| RenderError::RenderFailure("degenerate crop".into()))?;
    let cropped = full
        .clone_rect(rect)
        .ok_or_else(|| RenderError::RenderFailure("crop outside raster".into()))?;
    let s = style.scale;
    scene.set_view(cx0 as f64 / s, cy0 as f64 / s, (cx1 - cx0) as f64 / s, (cy1 - cy0) as f64 / s);
    Ok(RenderArtifact::new(
        artifact_id,
        scene.to_svg(),
        Some(encode_png(&cropped)?),
        text,
        "gt.txt",
        rng,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fonts::FontSet;
    use crate::ingest::OcrLine;
    use crate::reflow::{allocate_segments, FitLimits};

    fn palette() -> Vec<FontRef> {
        FontSet::builtin().fonts().to_vec()
    }

    fn crop_style() -> CropStyle {
        CropStyle {
            fonts: palette(),
            size: 32.0,
            color: Color::BLACK,
            background: Color::WHITE,
            scale: 1.0,
        }
    }

    fn decode(png: &[u8]) -> Pixmap {
        Pixmap::decode_png(png).unwrap()
    }

    #[test]
    fn crop_is_tight_and_sidecar_matches() {
        let rng = SeededRng::new(1, 2);
        let a = render_text_crop("c1", "كتب", &crop_style(), &rng).unwrap();
        assert_eq!(a.ground_truth, "كتب");
        let pm = decode(a.png.as_ref().unwrap());
        let (x0, y0, x1, y1) = ink_bounds(&pm, Color::WHITE).unwrap();
        assert!(x0 <= 2 && y0 <= 2);
        assert!(pm.width() - x1 <= 2 && pm.height() - y1 <= 2);
    }

    #[test]
    fn crop_is_deterministic() {
        let rng = SeededRng::new(1, 2);
        let a = render_text_crop("c1", "قيمة 25% من $3", &crop_style(), &rng).unwrap();
        let b = render_text_crop("c1", "قيمة 25% من $3", &crop_style(), &rng).unwrap();
        assert_eq!(a.png, b.png);
        assert_eq!(a.svg, b.svg);
        assert_eq!(a.ground_truth, b.ground_truth);
    }

    #[test]
    fn crop_errors() {
        let rng = SeededRng::new(1, 2);
        assert!(matches!(render_text_crop("c", "  ", &crop_style(), &rng), Err(RenderError::EmptyText)));
        let style = CropStyle {
            fonts: vec![FontSet::builtin().get("DejaVu Serif").unwrap().clone()],
            ..crop_style()
        };
        assert!(matches!(
            render_text_crop("c", "كتب", &style, &rng),
            Err(RenderError::NoCoveringFont(_))
        ));
    }

    fn page(lines: Vec<OcrLine>, bg: Option<&str>) -> PageAnnotation {
        PageAnnotation {
            page_index: 0,
            width: 400,
            height: 300,
            background_ref: bg.map(String::from),
            lines,
        }
    }

    fn plain_style() -> PageStyle {
        PageStyle {
            fonts: palette(),
            color: Color::BLACK,
            background: BackgroundMode::Plain,
        }
    }

    #[test]
    fn empty_page_has_empty_truth() {
        let a = render_page("p", &page(vec![], None), &[], &plain_style(), &SeededRng::new(0, 0), &RenderOptions::default()).unwrap();
        assert_eq!(a.ground_truth, "");
    }

    #[test]
    fn scan_background_is_kept_outside_boxes() {
        let dir = tempfile::tempdir().unwrap();
        let mut img = image::RgbImage::new(400, 300);
        for (x, y, p) in img.enumerate_pixels_mut() {
            *p = image::Rgb([(x % 256) as u8, (y % 256) as u8, 200]);
        }
        img.save(dir.path().join("scan.png")).unwrap();
        let line = OcrLine {
            line_id: "l0".into(),
            text: "x".into(),
            bbox: BoundingBox::new(50.0, 50.0, 200.0, 40.0),
        };
        let p = page(vec![line.clone()], Some("scan.png"));
        let font = palette()[0].clone();
        let assigns = allocate_segments(&[&line], "كتب الطالب", &font, FitLimits::default()).unwrap();
        let style = PageStyle {
            background: BackgroundMode::OriginalScan,
            ..plain_style()
        };
        let opts = RenderOptions {
            base_dir: dir.path().to_path_buf(),
            ..Default::default()
        };
        let a = render_page("p", &p, &assigns, &style, &SeededRng::new(0, 0), &opts).unwrap();
        let pm = decode(a.png.as_ref().unwrap());
        for &(x, y) in &[(10, 10), (399, 299), (49, 70), (251, 70), (150, 49), (150, 91)] {
            let c = crate::canvas::pixel(&pm, x, y);
            assert_eq!((c.r, c.g, c.b), ((x % 256) as u8, (y % 256) as u8, 200), "at {x},{y}");
        }
        let truth = parse_page_truth(&a.ground_truth).unwrap();
        assert_eq!(truth.len(), 1);
        assert_eq!(truth[0].text, "كتب الطالب");
        assert!(a.svg.contains("xlink:href=\"scan.png\""));

        let missing = render_page("p", &page(vec![], None), &[], &style, &SeededRng::new(0, 0), &opts);
        assert!(matches!(missing, Err(RenderError::MissingBackground(0))));
    }

    #[test]
    fn ring_median_of_uniform_border() {
        let mut pm = Pixmap::new(20, 20).unwrap();
        pm.fill(tiny_skia::Color::from_rgba8(10, 20, 30, 255));
        let c = border_ring_median(&pm, &BoundingBox::new(5.0, 5.0, 5.0, 5.0), 1.0, 1.0, 2);
        assert_eq!(c, Color::rgb(10, 20, 30));
    }
}
