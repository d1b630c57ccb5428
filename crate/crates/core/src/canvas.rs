//! A small retained scene: the vector form is emitted as SVG, the raster form
//! is drawn from the same element list with tiny-skia.
//!
//! Text is converted to glyph outlines when it is added, so the SVG does not
//! depend on the viewer's fonts and both outputs show the same shapes.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tiny_skia::{FillRule, Paint, PathBuilder, Pixmap, PixmapPaint, Rect, Stroke as SkStroke, Transform};

use crate::fonts::{FontAsset, GlyphTransform, OutlineSink};

#[derive(Debug, Error)]
pub enum CanvasError {
    #[error("raster size {0}x{1} is not drawable")]
    BadSize(u32, u32),
    #[error("png encoding failed: {0}")]
    Png(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Color {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Color {
    pub const WHITE: Color = Color::rgb(255, 255, 255);
    pub const BLACK: Color = Color::rgb(0, 0, 0);

    pub const fn rgb(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }

    pub fn hex(&self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.r, self.g, self.b)
    }

    pub fn from_hex(s: &str) -> Option<Color> {
        let s = s.strip_prefix('#')?;
        if s.len() != 6 {
            return None;
        }
        let v = u32::from_str_radix(s, 16).ok()?;
        Some(Color::rgb((v >> 16) as u8, (v >> 8) as u8, v as u8))
    }

    /// Linear blend towards `other` by `t` in [0, 1].
    pub fn mix(&self, other: Color, t: f64) -> Color {
        let m = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * t).round().clamp(0.0, 255.0) as u8;
        Color::rgb(m(self.r, other.r), m(self.g, other.g), m(self.b, other.b))
    }

    fn skia(&self) -> tiny_skia::Color {
        tiny_skia::Color::from_rgba8(self.r, self.g, self.b, 255)
    }
}

/// Format a coordinate with at most three decimals and no trailing zeros.
pub fn fmt_num(v: f64) -> String {
    let r = (v * 1000.0).round() / 1000.0;
    if r == 0.0 {
        return "0".into();
    }
    let s = format!("{r:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Seg {
    Move(f64, f64),
    Line(f64, f64),
    Quad(f64, f64, f64, f64),
    Cubic(f64, f64, f64, f64, f64, f64),
    /// Circular arc from the current point, which must lie on the circle at
    /// `start_deg`. Angles are clockwise on screen, 0° pointing right.
    Arc {
        cx: f64,
        cy: f64,
        r: f64,
        start_deg: f64,
        end_deg: f64,
    },
    Close,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PathData {
    pub segs: Vec<Seg>,
}

pub fn point_on_circle(cx: f64, cy: f64, r: f64, deg: f64) -> (f64, f64) {
    let (s, c) = deg.to_radians().sin_cos();
    (cx + r * c, cy + r * s)
}

impl PathData {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.segs.is_empty()
    }

    pub fn move_to(&mut self, x: f64, y: f64) -> &mut Self {
        self.segs.push(Seg::Move(x, y));
        self
    }

    pub fn line_to(&mut self, x: f64, y: f64) -> &mut Self {
        self.segs.push(Seg::Line(x, y));
        self
    }

    pub fn arc(&mut self, cx: f64, cy: f64, r: f64, start_deg: f64, end_deg: f64) -> &mut Self {
        self.segs.push(Seg::Arc {
            cx,
            cy,
            r,
            start_deg,
            end_deg,
        });
        self
    }

    pub fn close(&mut self) -> &mut Self {
        self.segs.push(Seg::Close);
        self
    }

    pub fn svg_d(&self) -> String {
        let mut d = String::new();
        let n = fmt_num;
        for seg in &self.segs {
            if !d.is_empty() {
                d.push(' ');
            }
            match *seg {
                Seg::Move(x, y) => write!(d, "M{} {}", n(x), n(y)),
                Seg::Line(x, y) => write!(d, "L{} {}", n(x), n(y)),
                Seg::Quad(a, b, x, y) => write!(d, "Q{} {} {} {}", n(a), n(b), n(x), n(y)),
                Seg::Cubic(a, b, c, e, x, y) => {
                    write!(d, "C{} {} {} {} {} {}", n(a), n(b), n(c), n(e), n(x), n(y))
                }
                Seg::Arc {
                    cx,
                    cy,
                    r,
                    start_deg,
                    end_deg,
                } => {
                    let span = end_deg - start_deg;
                    let (x, y) = point_on_circle(cx, cy, r, end_deg);
                    write!(
                        d,
                        "A{} {} 0 {} {} {} {}",
                        n(r),
                        n(r),
                        u8::from(span.abs() > 180.0),
                        u8::from(span > 0.0),
                        n(x),
                        n(y)
                    )
                }
                Seg::Close => write!(d, "Z"),
            }
            .unwrap();
        }
        d
    }

    fn to_skia(&self) -> Option<tiny_skia::Path> {
        let mut pb = PathBuilder::new();
        let f = |v: f64| v as f32;
        for seg in &self.segs {
            match *seg {
                Seg::Move(x, y) => pb.move_to(f(x), f(y)),
                Seg::Line(x, y) => pb.line_to(f(x), f(y)),
                Seg::Quad(a, b, x, y) => pb.quad_to(f(a), f(b), f(x), f(y)),
                Seg::Cubic(a, b, c, e, x, y) => pb.cubic_to(f(a), f(b), f(c), f(e), f(x), f(y)),
                Seg::Arc {
                    cx,
                    cy,
                    r,
                    start_deg,
                    end_deg,
                } => {
                    let pieces = ((end_deg - start_deg).abs() / 90.0).ceil().max(1.0) as usize;
                    let step = (end_deg - start_deg) / pieces as f64;
                    for i in 0..pieces {
                        let a0 = (start_deg + step * i as f64).to_radians();
                        let a1 = (start_deg + step * (i + 1) as f64).to_radians();
                        let k = 4.0 / 3.0 * ((a1 - a0) / 4.0).tan();
                        let (p0x, p0y) = (cx + r * a0.cos(), cy + r * a0.sin());
                        let (p3x, p3y) = (cx + r * a1.cos(), cy + r * a1.sin());
                        pb.cubic_to(
                            f(p0x - k * r * a0.sin()),
                            f(p0y + k * r * a0.cos()),
                            f(p3x + k * r * a1.sin()),
                            f(p3y - k * r * a1.cos()),
                            f(p3x),
                            f(p3y),
                        );
                    }
                }
                Seg::Close => pb.close(),
            }
        }
        pb.finish()
    }
}

impl OutlineSink for PathData {
    fn move_to(&mut self, x: f64, y: f64) {
        self.segs.push(Seg::Move(x, y));
    }
    fn line_to(&mut self, x: f64, y: f64) {
        self.segs.push(Seg::Line(x, y));
    }
    fn quad_to(&mut self, x1: f64, y1: f64, x: f64, y: f64) {
        self.segs.push(Seg::Quad(x1, y1, x, y));
    }
    fn cubic_to(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, x: f64, y: f64) {
        self.segs.push(Seg::Cubic(x1, y1, x2, y2, x, y));
    }
    fn close(&mut self) {
        self.segs.push(Seg::Close);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stroke {
    pub color: Color,
    pub width: f64,
}

#[derive(Debug, Clone)]
pub enum Shape {
    Rect { x: f64, y: f64, w: f64, h: f64 },
    Line { x1: f64, y1: f64, x2: f64, y2: f64 },
    Circle { cx: f64, cy: f64, r: f64 },
    Path(PathData),
    /// A raster placed at `(x, y)` and stretched to `w` by `h`. The SVG
    /// references `href`; the raster output draws `pixels`.
    Image {
        href: String,
        x: f64,
        y: f64,
        w: f64,
        h: f64,
        pixels: Option<Arc<Pixmap>>,
    },
}

#[derive(Debug, Clone)]
pub struct Element {
    pub shape: Shape,
    pub fill: Option<Color>,
    pub stroke: Option<Stroke>,
    pub attrs: Vec<(String, String)>,
}

impl Element {
    pub fn new(shape: Shape) -> Self {
        Self {
            shape,
            fill: None,
            stroke: None,
            attrs: Vec::new(),
        }
    }

    pub fn fill(mut self, c: Color) -> Self {
        self.fill = Some(c);
        self
    }

    pub fn stroke(mut self, color: Color, width: f64) -> Self {
        self.stroke = Some(Stroke { color, width });
        self
    }

    pub fn attr(mut self, key: &str, value: impl ToString) -> Self {
        self.attrs.push((key.to_string(), value.to_string()));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    Start,
    Middle,
    End,
}

/// Where a drawn string landed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextExtent {
    pub x: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub width: f64,
    pub height: f64,
    pub background: Option<Color>,
    pub elements: Vec<Element>,
    view: Option<(f64, f64, f64, f64)>,
}

pub fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\n' => out.push_str("&#10;"),
            c if c.is_control() => write!(out, "&#{};", c as u32).unwrap(),
            c => out.push(c),
        }
    }
    out
}

impl Scene {
    pub fn new(width: f64, height: f64, background: Option<Color>) -> Self {
        Self {
            width,
            height,
            background,
            elements: Vec::new(),
            view: None,
        }
    }

    pub fn push(&mut self, el: Element) {
        self.elements.push(el);
    }

    /// Restrict the SVG viewport to a sub-rectangle.
    pub fn set_view(&mut self, x: f64, y: f64, w: f64, h: f64) {
        self.view = Some((x, y, w, h));
    }

    /// Draw one line of text as outlines. `x` is interpreted per `anchor`
    /// along the (possibly rotated) baseline through `(x, baseline)`.
    #[allow(clippy::too_many_arguments)]
    pub fn text(
        &mut self,
        font: &FontAsset,
        text: &str,
        size: f64,
        x: f64,
        baseline: f64,
        color: Color,
        anchor: Anchor,
        rotation_deg: f64,
        attrs: Vec<(String, String)>,
    ) -> TextExtent {
        let line = font.shape(text);
        let width = line.advance * font.scale(size);
        let shift = match anchor {
            Anchor::Start => 0.0,
            Anchor::Middle => -width / 2.0,
            Anchor::End => -width,
        };
        let (s, c) = rotation_deg.to_radians().sin_cos();
        let tf = GlyphTransform {
            scale: font.scale(size),
            origin_x: x + shift * c,
            origin_y: baseline + shift * s,
            rotation_deg,
        };
        let mut path = PathData::new();
        font.outline_line(&line, tf, &mut path);
        if !path.is_empty() {
            let mut el = Element::new(Shape::Path(path))
                .fill(color)
                .attr("data-role", "text")
                .attr("data-text", text);
            el.attrs.extend(attrs);
            self.push(el);
        }
        TextExtent {
            x: x + shift,
            width,
            height: font.line_height(size),
        }
    }

    pub fn to_svg(&self) -> String {
        let (vx, vy, vw, vh) = self.view.unwrap_or((0.0, 0.0, self.width, self.height));
        let mut out = String::new();
        writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" xmlns:xlink="http://www.w3.org/1999/xlink" width="{}" height="{}" viewBox="{} {} {} {}">"#,
            fmt_num(vw),
            fmt_num(vh),
            fmt_num(vx),
            fmt_num(vy),
            fmt_num(vw),
            fmt_num(vh)
        )
        .unwrap();
        if let Some(bg) = self.background {
            writeln!(
                out,
                r#"<rect data-role="background" x="0" y="0" width="{}" height="{}" fill="{}"/>"#,
                fmt_num(self.width),
                fmt_num(self.height),
                bg.hex()
            )
            .unwrap();
        }
        for el in &self.elements {
            let mut attrs = String::new();
            for (k, v) in &el.attrs {
                write!(attrs, r#" {}="{}""#, k, escape_xml(v)).unwrap();
            }
            let paint = {
                let mut p = String::new();
                match el.fill {
                    Some(c) => write!(p, r#" fill="{}""#, c.hex()).unwrap(),
                    None => p.push_str(r#" fill="none""#),
                }
                if let Some(s) = el.stroke {
                    write!(p, r#" stroke="{}" stroke-width="{}""#, s.color.hex(), fmt_num(s.width)).unwrap();
                }
                p
            };
            let n = fmt_num;
            match &el.shape {
                Shape::Rect { x, y, w, h } => writeln!(
                    out,
                    r#"<rect{attrs} x="{}" y="{}" width="{}" height="{}"{paint}/>"#,
                    n(*x),
                    n(*y),
                    n(*w),
                    n(*h)
                ),
                Shape::Line { x1, y1, x2, y2 } => writeln!(
                    out,
                    r#"<line{attrs} x1="{}" y1="{}" x2="{}" y2="{}"{paint}/>"#,
                    n(*x1),
                    n(*y1),
                    n(*x2),
                    n(*y2)
                ),
                Shape::Circle { cx, cy, r } => writeln!(
                    out,
                    r#"<circle{attrs} cx="{}" cy="{}" r="{}"{paint}/>"#,
                    n(*cx),
                    n(*cy),
                    n(*r)
                ),
                Shape::Path(p) => writeln!(out, r#"<path{attrs} d="{}"{paint}/>"#, p.svg_d()),
                Shape::Image { href, x, y, w, h, .. } => writeln!(
                    out,
                    r#"<image{attrs} xlink:href="{}" x="{}" y="{}" width="{}" height="{}" preserveAspectRatio="none"/>"#,
                    escape_xml(href),
                    n(*x),
                    n(*y),
                    n(*w),
                    n(*h)
                ),
            }
            .unwrap();
        }
        out.push_str("</svg>\n");
        out
    }

    /// Draw the whole scene at `scale` raster pixels per scene unit.
    pub fn rasterize(&self, scale: f64) -> Result<Pixmap, CanvasError> {
        let w = (self.width * scale).ceil() as u32;
        let h = (self.height * scale).ceil() as u32;
        let mut pm = Pixmap::new(w, h).ok_or(CanvasError::BadSize(w, h))?;
        pm.fill(self.background.unwrap_or(Color::WHITE).skia());
        let ts = Transform::from_scale(scale as f32, scale as f32);
        for el in &self.elements {
            draw_element(&mut pm, el, ts);
        }
        Ok(pm)
    }
}

fn solid(c: Color) -> Paint<'static> {
    let mut p = Paint::default();
    p.set_color(c.skia());
    p.anti_alias = true;
    p
}

fn draw_element(pm: &mut Pixmap, el: &Element, ts: Transform) {
    let path = match &el.shape {
        Shape::Rect { x, y, w, h } => {
            Rect::from_xywh(*x as f32, *y as f32, *w as f32, *h as f32).map(PathBuilder::from_rect)
        }
        Shape::Line { x1, y1, x2, y2 } => {
            let mut pb = PathBuilder::new();
            pb.move_to(*x1 as f32, *y1 as f32);
            pb.line_to(*x2 as f32, *y2 as f32);
            pb.finish()
        }
        Shape::Circle { cx, cy, r } => PathBuilder::from_circle(*cx as f32, *cy as f32, *r as f32),
        Shape::Path(p) => p.to_skia(),
        Shape::Image {
            x, y, w, h, pixels, ..
        } => {
            if let Some(src) = pixels {
                let sx = *w as f32 / src.width() as f32;
                let sy = *h as f32 / src.height() as f32;
                let t = ts.pre_concat(Transform::from_row(sx, 0.0, 0.0, sy, *x as f32, *y as f32));
                pm.draw_pixmap(0, 0, src.as_ref().as_ref(), &PixmapPaint::default(), t, None);
            }
            return;
        }
    };
    let Some(path) = path else { return };
    if let Some(fill) = el.fill {
        pm.fill_path(&path, &solid(fill), FillRule::Winding, ts, None);
    }
    if let Some(s) = el.stroke {
        let stroke = SkStroke {
            width: s.width as f32,
            ..SkStroke::default()
        };
        pm.stroke_path(&path, &solid(s.color), &stroke, ts, None);
    }
}

pub fn encode_png(pm: &Pixmap) -> Result<Vec<u8>, CanvasError> {
    pm.encode_png().map_err(|e| CanvasError::Png(e.to_string()))
}

/// Read an RGB pixel.
pub fn pixel(pm: &Pixmap, x: u32, y: u32) -> Color {
    let p = pm.pixel(x, y).expect("pixel in bounds").demultiply();
    Color::rgb(p.red(), p.green(), p.blue())
}
