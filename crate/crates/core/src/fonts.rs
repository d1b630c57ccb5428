//! Font assets: glyph coverage from the character map, shaping, metrics and
//! outlines.
//!
//! Coverage is always read from the font's `cmap`; there is no way to hand
//! a font a coverage set.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rustybuzz::ttf_parser;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_bidi::{BidiInfo, Level};

use crate::script::{is_layout_control, Direction};

#[derive(Debug, Error)]
pub enum FontLoadError {
    #[error("cannot read font {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse font {0}")]
    Parse(String),
    #[error("bad font manifest: {0}")]
    Manifest(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScriptClass {
    Arabic,
    Latin,
    Mono,
    Display,
}

/// Anything that can answer "does this font have a glyph for `c`?".
pub trait GlyphCoverage {
    fn covers(&self, c: char) -> bool;
}

pub struct FontAsset {
    pub family: String,
    pub path: PathBuf,
    pub script_class: ScriptClass,
    coverage: HashSet<char>,
    units_per_em: f64,
    ascender: f64,
    descender: f64,
    avg_advance: f64,
    data: Arc<Vec<u8>>,
}

impl std::fmt::Debug for FontAsset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FontAsset")
            .field("family", &self.family)
            .field("path", &self.path)
            .field("script_class", &self.script_class)
            .field("glyphs", &self.coverage.len())
            .finish()
    }
}

impl GlyphCoverage for FontAsset {
    fn covers(&self, c: char) -> bool {
        self.coverage.contains(&c)
    }
}

impl<T: GlyphCoverage> GlyphCoverage for Arc<T> {
    fn covers(&self, c: char) -> bool {
        (**self).covers(c)
    }
}

/// A glyph positioned on the pen line, in font units (y up).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacedGlyph {
    pub glyph_id: u16,
    pub x: f64,
    pub y: f64,
}

/// One shaped line in visual order.
#[derive(Debug, Clone, Default)]
pub struct ShapedLine {
    pub glyphs: Vec<PlacedGlyph>,
    /// Total advance in font units.
    pub advance: f64,
}

/// Receives glyph outlines in page coordinates.
pub trait OutlineSink {
    fn move_to(&mut self, x: f64, y: f64);
    fn line_to(&mut self, x: f64, y: f64);
    fn quad_to(&mut self, x1: f64, y1: f64, x: f64, y: f64);
    fn cubic_to(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, x: f64, y: f64);
    fn close(&mut self);
}

/// Maps font units to page space: scale, flip y, rotate, translate.
#[derive(Debug, Clone, Copy)]
pub struct GlyphTransform {
    pub scale: f64,
    pub origin_x: f64,
    pub origin_y: f64,
    /// Clockwise rotation in degrees about the origin.
    pub rotation_deg: f64,
}

impl GlyphTransform {
    pub fn apply(&self, ux: f64, uy: f64) -> (f64, f64) {
        let (x, y) = (ux * self.scale, -uy * self.scale);
        if self.rotation_deg == 0.0 {
            return (self.origin_x + x, self.origin_y + y);
        }
        let (s, c) = self.rotation_deg.to_radians().sin_cos();
        (self.origin_x + x * c - y * s, self.origin_y + x * s + y * c)
    }
}

struct Adapter<'a, S: OutlineSink> {
    sink: &'a mut S,
    tf: GlyphTransform,
    dx: f64,
    dy: f64,
}

impl<S: OutlineSink> Adapter<'_, S> {
    fn p(&self, x: f32, y: f32) -> (f64, f64) {
        self.tf.apply(x as f64 + self.dx, y as f64 + self.dy)
    }
}

impl<S: OutlineSink> ttf_parser::OutlineBuilder for Adapter<'_, S> {
    fn move_to(&mut self, x: f32, y: f32) {
        let (x, y) = self.p(x, y);
        self.sink.move_to(x, y);
    }
    fn line_to(&mut self, x: f32, y: f32) {
        let (x, y) = self.p(x, y);
        self.sink.line_to(x, y);
    }
    fn quad_to(&mut self, x1: f32, y1: f32, x: f32, y: f32) {
        let (ax, ay) = self.p(x1, y1);
        let (x, y) = self.p(x, y);
        self.sink.quad_to(ax, ay, x, y);
    }
    fn curve_to(&mut self, x1: f32, y1: f32, x2: f32, y2: f32, x: f32, y: f32) {
        let (ax, ay) = self.p(x1, y1);
        let (bx, by) = self.p(x2, y2);
        let (x, y) = self.p(x, y);
        self.sink.cubic_to(ax, ay, bx, by, x, y);
    }
    fn close(&mut self) {
        self.sink.close();
    }
}

impl FontAsset {
    pub fn from_bytes(
        family: impl Into<String>,
        path: impl Into<PathBuf>,
        script_class: ScriptClass,
        data: Vec<u8>,
    ) -> Result<Self, FontLoadError> {
        let path = path.into();
        let face = ttf_parser::Face::parse(&data, 0)
            .map_err(|e| FontLoadError::Parse(format!("{}: {e}", path.display())))?;

        let mut coverage = HashSet::new();
        if let Some(cmap) = face.tables().cmap {
            for sub in cmap.subtables {
                if !sub.is_unicode() {
                    continue;
                }
                sub.codepoints(|cp| {
                    if let Some(c) = char::from_u32(cp) {
                        if face.glyph_index(c).is_some_and(|g| g.0 != 0) {
                            coverage.insert(c);
                        }
                    }
                });
            }
        }
        if coverage.is_empty() {
            return Err(FontLoadError::Parse(format!(
                "{}: no Unicode character map",
                path.display()
            )));
        }

        let (mut sum, mut n) = (0.0, 0usize);
        for &c in &coverage {
            if c.is_control() {
                continue;
            }
            if let Some(adv) = face.glyph_index(c).and_then(|g| face.glyph_hor_advance(g)) {
                if adv > 0 {
                    sum += adv as f64;
                    n += 1;
                }
            }
        }
        let units_per_em = face.units_per_em() as f64;
        let avg_advance = if n == 0 { units_per_em / 2.0 } else { sum / n as f64 };

        Ok(Self {
            family: family.into(),
            path,
            script_class,
            units_per_em,
            ascender: face.ascender() as f64,
            descender: face.descender() as f64,
            avg_advance,
            coverage,
            data: Arc::new(data),
        })
    }

    pub fn load(
        family: impl Into<String>,
        path: impl AsRef<Path>,
        script_class: ScriptClass,
    ) -> Result<Self, FontLoadError> {
        let path = path.as_ref();
        let data = fs::read(path).map_err(|source| FontLoadError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(family, path, script_class, data)
    }

    pub fn coverage_len(&self) -> usize {
        self.coverage.len()
    }

    /// Characters of `text` that need a glyph but have none here.
    pub fn uncovered(&self, text: &str) -> BTreeSet<char> {
        text.chars()
            .filter(|&c| !is_layout_control(c) && !self.covers(c))
            .collect()
    }

    pub fn units_per_em(&self) -> f64 {
        self.units_per_em
    }

    /// Scale factor from font units to page units at `size`.
    pub fn scale(&self, size: f64) -> f64 {
        size / self.units_per_em
    }

    pub fn ascent(&self, size: f64) -> f64 {
        self.ascender * self.scale(size)
    }

    /// Descent below the baseline as a positive length.
    pub fn descent(&self, size: f64) -> f64 {
        -self.descender * self.scale(size)
    }

    pub fn line_height(&self, size: f64) -> f64 {
        self.ascent(size) + self.descent(size)
    }

    /// Mean advance of the covered glyphs, in font units.
    pub fn average_advance(&self) -> f64 {
        self.avg_advance
    }

    /// Width estimate for line allocation: average advance per non-mark
    /// character, at `size`.
    pub fn estimate_width(&self, text: &str, size: f64) -> f64 {
        let n = text
            .chars()
            .filter(|&c| !is_layout_control(c) && !is_combining(c))
            .count();
        n as f64 * self.avg_advance * self.scale(size)
    }

    fn face(&self) -> rustybuzz::Face<'_> {
        rustybuzz::Face::from_slice(&self.data, 0).expect("face parsed at load time")
    }

    /// Shape one line of text (newlines are ignored) into visual order.
    ///
    /// The text is split into bidi runs first; isolate and other formatting
    /// characters only steer the run levels and are never drawn.
    pub fn shape(&self, text: &str) -> ShapedLine {
        let face = self.face();
        let text: String = text.chars().filter(|&c| c != '\n' && c != '\r').collect();
        if text.is_empty() {
            return ShapedLine::default();
        }
        let base = match text.chars().next() {
            Some('\u{2067}') => Some(Level::rtl()),
            Some('\u{2066}') => Some(Level::ltr()),
            _ => None,
        };
        let info = BidiInfo::new(&text, base);
        let mut line = ShapedLine::default();
        for para in &info.paragraphs {
            let (levels, runs) = info.visual_runs(para, para.range.clone());
            for run in runs {
                let rtl = levels[run.start].is_rtl();
                let piece: String = text[run].chars().filter(|&c| !is_layout_control(c)).collect();
                if piece.is_empty() {
                    continue;
                }
                self.shape_run(&face, &piece, rtl, &mut line);
            }
        }
        line
    }

    fn shape_run(&self, face: &rustybuzz::Face<'_>, piece: &str, rtl: bool, line: &mut ShapedLine) {
        let mut buf = rustybuzz::UnicodeBuffer::new();
        buf.push_str(piece);
        buf.set_direction(if rtl {
            rustybuzz::Direction::RightToLeft
        } else {
            rustybuzz::Direction::LeftToRight
        });
        buf.guess_segment_properties();
        let out = rustybuzz::shape(face, &[], buf);
        for (info, pos) in out.glyph_infos().iter().zip(out.glyph_positions()) {
            line.glyphs.push(PlacedGlyph {
                glyph_id: info.glyph_id as u16,
                x: line.advance + pos.x_offset as f64,
                y: pos.y_offset as f64,
            });
            line.advance += pos.x_advance as f64;
        }
    }

    /// Measured extent `(width, height)` of one line at `size`: the shaped
    /// advance by the ascender-to-descender height.
    pub fn measure(&self, text: &str, size: f64) -> (f64, f64) {
        (self.shape(text).advance * self.scale(size), self.line_height(size))
    }

    /// Emit the outlines of a shaped line whose pen starts at the transform's origin.
    pub fn outline_line<S: OutlineSink>(&self, line: &ShapedLine, tf: GlyphTransform, sink: &mut S) {
        let face = self.face();
        for g in &line.glyphs {
            let mut adapter = Adapter {
                sink: &mut *sink,
                tf,
                dx: g.x,
                dy: g.y,
            };
            face.outline_glyph(ttf_parser::GlyphId(g.glyph_id), &mut adapter);
        }
    }
}

fn is_combining(c: char) -> bool {
    crate::script::is_arabic_mark(c) || matches!(c, '\u{0300}'..='\u{036F}')
}

pub type FontRef = Arc<FontAsset>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FontManifestEntry {
    pub family: String,
    pub path: String,
    pub script_class: ScriptClass,
}

/// The fonts available to a run, in manifest order.
#[derive(Debug, Clone, Default)]
pub struct FontSet {
    fonts: Vec<FontRef>,
}

const BUILTIN: [(&str, &str, ScriptClass, &[u8]); 3] = [
    (
        "DejaVu Sans",
        "DejaVuSans.ttf",
        ScriptClass::Arabic,
        include_bytes!("../assets/fonts/DejaVuSans.ttf"),
    ),
    (
        "DejaVu Sans Mono",
        "DejaVuSansMono.ttf",
        ScriptClass::Mono,
        include_bytes!("../assets/fonts/DejaVuSansMono.ttf"),
    ),
    (
        "DejaVu Serif",
        "DejaVuSerif.ttf",
        ScriptClass::Latin,
        include_bytes!("../assets/fonts/DejaVuSerif.ttf"),
    ),
];

impl FontSet {
    pub fn new(fonts: Vec<FontRef>) -> Self {
        Self { fonts }
    }

    /// The fonts bundled with the crate.
    pub fn builtin() -> Self {
        static CACHE: std::sync::OnceLock<FontSet> = std::sync::OnceLock::new();
        CACHE
            .get_or_init(|| {
                FontSet::new(
                    BUILTIN
                        .iter()
                        .map(|(family, file, class, bytes)| {
                            Arc::new(
                                FontAsset::from_bytes(*family, format!("builtin:{file}"), *class, bytes.to_vec())
                                    .expect("bundled font parses"),
                            )
                        })
                        .collect(),
                )
            })
            .clone()
    }

    /// Load a JSON-lines manifest of `{family, path, script_class}` records.
    /// Relative paths resolve against the manifest's directory.
    pub fn load_manifest(path: impl AsRef<Path>) -> Result<Self, FontLoadError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| FontLoadError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let mut fonts = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: FontManifestEntry = serde_json::from_str(line)
                .map_err(|e| FontLoadError::Manifest(format!("line {}: {e}", i + 1)))?;
            let font_path = dir.join(&entry.path);
            fonts.push(Arc::new(FontAsset::load(entry.family, font_path, entry.script_class)?));
        }
        if fonts.is_empty() {
            return Err(FontLoadError::Manifest(format!("{} lists no fonts", path.display())));
        }
        Ok(Self { fonts })
    }

    pub fn fonts(&self) -> &[FontRef] {
        &self.fonts
    }

    pub fn families(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for f in &self.fonts {
            if !seen.contains(&f.family) {
                seen.push(f.family.clone());
            }
        }
        seen
    }

    pub fn get(&self, family: &str) -> Option<&FontRef> {
        self.fonts.iter().find(|f| f.family == family)
    }

    /// Fonts that cover every glyph-bearing character of `text`.
    pub fn covering(&self, text: &str) -> Vec<FontRef> {
        self.fonts
            .iter()
            .filter(|f| f.uncovered(text).is_empty())
            .cloned()
            .collect()
    }

    /// `preferred` first (when present), then every other font in manifest order.
    pub fn chain_from(&self, preferred: &str) -> Vec<FontRef> {
        let mut chain: Vec<FontRef> = self.fonts.iter().filter(|f| f.family == preferred).cloned().collect();
        chain.extend(self.fonts.iter().filter(|f| f.family != preferred).cloned());
        chain
    }

    /// Fonts able to render text of the given direction's script.
    pub fn for_direction(&self, direction: Direction) -> Vec<FontRef> {
        self.fonts
            .iter()
            .filter(|f| direction == Direction::Ltr || f.covers('\u{0627}'))
            .cloned()
            .collect()
    }
}
