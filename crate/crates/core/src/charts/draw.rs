use crate::canvas::{encode_png, Anchor, Color, Element, PathData, Scene, Shape};
use crate::canvas::point_on_circle;
use crate::fonts::FontSet;
use crate::reflow::{apply_bidi_controls, select_font};
use crate::render::RenderArtifact;
use crate::rng::SeededRng;
use crate::script::majority_direction;

use super::{serialize_chart_annotation, ChartError, ChartSpec, ChartType};

pub const CANVAS_WIDTH: f64 = 800.0;
pub const CANVAS_HEIGHT: f64 = 560.0;
const LEGEND_WIDTH: f64 = 150.0;

/// Round-number tick values covering `[lo, hi]` with roughly `target` steps.
pub fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo, lo + 1.0) };
    let raw = (hi - lo) / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let k0 = (lo / step).floor() as i64;
    let k1 = (hi / step).ceil() as i64;
    (k0..=k1)
        .map(|k| format!("{:.*}", decimals, k as f64 * step).parse::<f64>().unwrap() + 0.0)
        .collect()
}

fn tick_text(v: f64) -> String {
    let s = format!("{v:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

#[derive(Debug, Clone, Copy)]
struct Linear {
    d0: f64,
    d1: f64,
    r0: f64,
    r1: f64,
}

impl Linear {
    fn new(domain: (f64, f64), range: (f64, f64)) -> Self {
        Self {
            d0: domain.0,
            d1: domain.1,
            r0: range.0,
            r1: range.1,
        }
    }

    fn map(&self, v: f64) -> f64 {
        self.r0 + (v - self.d0) / (self.d1 - self.d0) * (self.r1 - self.r0)
    }
}

#[derive(Debug, Clone, Copy)]
struct Frame {
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
}

impl Frame {
    fn width(&self) -> f64 {
        self.right - self.left
    }

    fn height(&self) -> f64 {
        self.bottom - self.top
    }
}

struct Painter<'a> {
    scene: Scene,
    fonts: &'a FontSet,
    spec: &'a ChartSpec,
    fg: Color,
}

fn rect(x: f64, y: f64, w: f64, h: f64) -> Element {
    Element::new(Shape::Rect { x, y, w, h })
}

fn line(x1: f64, y1: f64, x2: f64, y2: f64) -> Element {
    Element::new(Shape::Line { x1, y1, x2, y2 })
}

fn circle(cx: f64, cy: f64, r: f64) -> Element {
    Element::new(Shape::Circle { cx, cy, r })
}

impl Painter<'_> {
    fn color(&self, i: usize) -> Color {
        let p = &self.spec.style.palette;
        p[i % p.len()]
    }

    fn size(&self) -> f64 {
        self.spec.style.font_size
    }

    #[allow(clippy::too_many_arguments)]
    fn text(&mut self, text: &str, size: f64, x: f64, baseline: f64, anchor: Anchor, rotation: f64) -> Result<(), ChartError> {
        if text.is_empty() {
            return Ok(());
        }
        let chain = self.fonts.chain_from(&self.spec.style.font_family);
        let font = select_font(text, &chain).map_err(|e| ChartError::RenderFailure(e.to_string()))?;
        let shown = apply_bidi_controls(text, majority_direction(text));
        self.scene.text(font, &shown, size, x, baseline, self.fg, anchor, rotation, vec![]);
        Ok(())
    }

    fn value_axis(&mut self, f: &Frame, ticks: &[f64], scale: Linear, right: bool) -> Result<(), ChartError> {
        let x = if right { f.right } else { f.left };
        let side = if right { "right" } else { "left" };
        self.scene.push(
            line(x, f.top, x, f.bottom)
                .stroke(self.fg, 1.0)
                .attr("data-role", "value-axis")
                .attr("data-side", side),
        );
        let size = self.size() * 0.9;
        for &t in ticks {
            let y = scale.map(t);
            let (x0, x1) = if right { (x, x + 5.0) } else { (x - 5.0, x) };
            self.scene.push(
                line(x0, y, x1, y)
                    .stroke(self.fg, 1.0)
                    .attr("data-role", "tick")
                    .attr("data-axis", side)
                    .attr("data-value", t),
            );
            if self.spec.style.show_grid && !right {
                let grid = self.fg.mix(self.spec.style.background, 0.8);
                self.scene
                    .push(line(f.left, y, f.right, y).stroke(grid, 0.5).attr("data-role", "gridline"));
            }
            let (anchor, tx) = if right { (Anchor::Start, x + 8.0) } else { (Anchor::End, x - 8.0) };
            self.text(&tick_text(t), size, tx, y + size * 0.35, anchor, 0.0)?;
        }
        Ok(())
    }

    fn x_axis(&mut self, f: &Frame) {
        self.scene
            .push(line(f.left, f.bottom, f.right, f.bottom).stroke(self.fg, 1.0).attr("data-role", "x-axis"));
    }

    fn numeric_x_axis(&mut self, f: &Frame, ticks: &[f64], scale: Linear) -> Result<(), ChartError> {
        self.x_axis(f);
        let size = self.size() * 0.9;
        for &t in ticks {
            let x = scale.map(t);
            self.scene.push(
                line(x, f.bottom, x, f.bottom + 5.0)
                    .stroke(self.fg, 1.0)
                    .attr("data-role", "tick")
                    .attr("data-axis", "x")
                    .attr("data-value", t),
            );
            self.text(&tick_text(t), size, x, f.bottom + 8.0 + size, Anchor::Middle, 0.0)?;
        }
        Ok(())
    }

    fn category_labels(&mut self, f: &Frame, labels: &[&str]) -> Result<(), ChartError> {
        self.x_axis(f);
        let slot = f.width() / labels.len() as f64;
        let rot = self.spec.style.label_rotation;
        let size = self.size();
        for (i, l) in labels.iter().enumerate() {
            let x = f.left + (i as f64 + 0.5) * slot;
            if rot == 0.0 {
                self.text(l, size, x, f.bottom + 8.0 + size, Anchor::Middle, 0.0)?;
            } else {
                self.text(l, size, x, f.bottom + 8.0 + size * 0.5, Anchor::End, -rot)?;
            }
        }
        Ok(())
    }

    fn legend(&mut self, entries: &[&str], f: &Frame) -> Result<(), ChartError> {
        let size = self.size();
        let x = f.right + 20.0;
        for (i, e) in entries.iter().enumerate() {
            let y = f.top + i as f64 * (size + 8.0);
            self.scene.push(
                rect(x, y, size, size)
                    .fill(self.color(i))
                    .attr("data-role", "legend-swatch")
                    .attr("data-entry", e),
            );
            self.text(e, size, x + size + 6.0, y + size * 0.85, Anchor::Start, 0.0)?;
        }
        Ok(())
    }
}

fn value_range<'a>(values: impl Iterator<Item = &'a f64>, include_zero: bool) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if include_zero {
        lo = lo.min(0.0);
        hi = hi.max(0.0);
    }
    (lo, hi)
}

fn ticks_and_scale(lo: f64, hi: f64, range: (f64, f64)) -> (Vec<f64>, Linear) {
    let ticks = nice_ticks(lo, hi, 5);
    let scale = Linear::new((ticks[0], *ticks.last().unwrap()), range);
    (ticks, scale)
}

/// Quantile with linear interpolation between order statistics.
pub(crate) fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let i = h.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (h - i as f64) * (sorted[j] - sorted[i])
}

fn kde(samples: &[f64], at: f64, bw: f64) -> f64 {
    let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * bw * samples.len() as f64);
    samples.iter().map(|s| (-0.5 * ((at - s) / bw).powi(2)).exp()).sum::<f64>() * norm
}

fn silverman(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let sd = (samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
    let bw = 1.06 * sd * n.powf(-0.2);
    if bw > 0.0 {
        bw
    } else {
        1.0
    }
}

fn draw_pie(p: &mut Painter, f: &Frame, hole: bool) {
    let d = &p.spec.data;
    let values = &d.series[0].values;
    let total: f64 = values.iter().sum();
    let (cx, cy) = (f.left + f.width() / 2.0, f.top + f.height() / 2.0);
    let r = 0.45 * f.width().min(f.height());
    let inner = r * 0.55;
    let mut start = -90.0;
    for (i, (&v, label)) in values.iter().zip(&d.labels).enumerate() {
        let span = 360.0 * v / total;
        let end = start + span;
        if span > 0.0 {
            let mut path = PathData::new();
            // A single arc cannot close a full circle, so split long spans.
            let mid = if span > 180.0 { Some(start + span / 2.0) } else { None };
            let (sx, sy) = point_on_circle(cx, cy, r, start);
            if hole {
                path.move_to(sx, sy);
            } else {
                path.move_to(cx, cy).line_to(sx, sy);
            }
            match mid {
                Some(m) => path.arc(cx, cy, r, start, m).arc(cx, cy, r, m, end),
                None => path.arc(cx, cy, r, start, end),
            };
            if hole {
                let (ex, ey) = point_on_circle(cx, cy, inner, end);
                path.line_to(ex, ey);
                match mid {
                    Some(m) => path.arc(cx, cy, inner, end, m).arc(cx, cy, inner, m, start),
                    None => path.arc(cx, cy, inner, end, start),
                };
            }
            path.close();
            p.scene.push(
                Element::new(Shape::Path(path))
                    .fill(p.color(i))
                    .stroke(p.spec.style.background, 1.0)
                    .attr("data-role", "slice")
                    .attr("data-label", label)
                    .attr("data-value", v),
            );
        }
        start = end;
    }
}

fn draw_categorical(p: &mut Painter, f: &Frame) -> Result<(), ChartError> {
    use ChartType::*;
    let spec = p.spec;
    let d = &spec.data;
    let t = spec.chart_type;
    let n = d.labels.len();
    let slot = f.width() / n as f64;
    let center = |i: usize| f.left + (i as f64 + 0.5) * slot;
    let primary: Vec<&super::Series> = if t == DualAxis { vec![&d.series[0]] } else { d.series.iter().collect() };

    let (lo, hi) = match t {
        StackedBar => {
            let totals: Vec<f64> = (0..n).map(|i| d.series.iter().map(|s| s.values[i]).sum()).collect();
            value_range(totals.iter(), true)
        }
        Line | Dot => value_range(primary.iter().flat_map(|s| &s.values), false),
        _ => value_range(primary.iter().flat_map(|s| &s.values), true),
    };
    let (ticks, scale) = ticks_and_scale(lo, hi, (f.bottom, f.top));
    p.value_axis(f, &ticks, scale, false)?;
    let labels: Vec<&str> = d.labels.iter().map(String::as_str).collect();
    p.category_labels(f, &labels)?;
    let base = scale.map(0f64.clamp(ticks[0], *ticks.last().unwrap()));

    let bar = |p: &mut Painter, s: usize, i: usize, x: f64, w: f64, y0: f64, y1: f64, v: f64| {
        let color = p.color(s);
        p.scene.push(
            rect(x, y0.min(y1), w, (y1 - y0).abs())
                .fill(color)
                .attr("data-role", "bar")
                .attr("data-series", s)
                .attr("data-index", i)
                .attr("data-value", v),
        );
    };

    match t {
        Bar | DualAxis => {
            let w = slot * 0.7;
            for (i, &v) in d.series[0].values.iter().enumerate() {
                bar(p, 0, i, center(i) - w / 2.0, w, base, scale.map(v), v);
            }
        }
        GroupedBar => {
            let k = d.series.len();
            let w = slot * 0.8 / k as f64;
            for (s, series) in d.series.iter().enumerate() {
                for (i, &v) in series.values.iter().enumerate() {
                    bar(p, s, i, center(i) - slot * 0.4 + w * s as f64, w, base, scale.map(v), v);
                }
            }
        }
        StackedBar => {
            let w = slot * 0.7;
            for i in 0..n {
                let mut acc = 0.0;
                for (s, series) in d.series.iter().enumerate() {
                    let v = series.values[i];
                    bar(p, s, i, center(i) - w / 2.0, w, scale.map(acc), scale.map(acc + v), v);
                    acc += v;
                }
            }
        }
        Line | Area => {
            for (s, series) in d.series.iter().enumerate() {
                let color = p.color(s);
                let pts: Vec<(f64, f64)> = series.values.iter().enumerate().map(|(i, &v)| (center(i), scale.map(v))).collect();
                if t == Area {
                    let mut path = PathData::new();
                    path.move_to(pts[0].0, base);
                    for &(x, y) in &pts {
                        path.line_to(x, y);
                    }
                    path.line_to(pts[n - 1].0, base).close();
                    p.scene.push(
                        Element::new(Shape::Path(path))
                            .fill(color.mix(spec.style.background, 0.45))
                            .attr("data-role", "area")
                            .attr("data-series", s),
                    );
                }
                let mut path = PathData::new();
                path.move_to(pts[0].0, pts[0].1);
                for &(x, y) in &pts[1..] {
                    path.line_to(x, y);
                }
                p.scene
                    .push(Element::new(Shape::Path(path)).stroke(color, 2.0).attr("data-role", "line").attr("data-series", s));
                for (i, &(x, y)) in pts.iter().enumerate() {
                    p.scene.push(
                        circle(x, y, 3.0)
                            .fill(color)
                            .attr("data-role", "point")
                            .attr("data-series", s)
                            .attr("data-index", i)
                            .attr("data-value", series.values[i]),
                    );
                }
            }
        }
        Dot => {
            let color = p.color(0);
            for (i, &v) in d.series[0].values.iter().enumerate() {
                let guide = color.mix(spec.style.background, 0.7);
                p.scene.push(line(center(i), f.bottom, center(i), scale.map(v)).stroke(guide, 1.0).attr("data-role", "guide"));
                p.scene.push(
                    circle(center(i), scale.map(v), 6.0)
                        .fill(color)
                        .attr("data-role", "point")
                        .attr("data-index", i)
                        .attr("data-value", v),
                );
            }
        }
        _ => unreachable!("not a categorical axis chart"),
    }

    if t == DualAxis {
        let s = &d.series[1];
        let (lo, hi) = value_range(s.values.iter(), true);
        let (ticks, right) = ticks_and_scale(lo, hi, (f.bottom, f.top));
        p.value_axis(f, &ticks, right, true)?;
        let color = p.color(1);
        let mut path = PathData::new();
        for (i, &v) in s.values.iter().enumerate() {
            if i == 0 {
                path.move_to(center(i), right.map(v));
            } else {
                path.line_to(center(i), right.map(v));
            }
        }
        p.scene
            .push(Element::new(Shape::Path(path)).stroke(color, 2.0).attr("data-role", "line").attr("data-series", 1));
        for (i, &v) in s.values.iter().enumerate() {
            p.scene.push(
                circle(center(i), right.map(v), 3.5)
                    .fill(color)
                    .attr("data-role", "point")
                    .attr("data-series", 1)
                    .attr("data-index", i)
                    .attr("data-value", v),
            );
        }
    }
    Ok(())
}

fn draw_histogram(p: &mut Painter, f: &Frame) -> Result<(), ChartError> {
    let v = &p.spec.data.series[0].values;
    let (lo, mut hi) = value_range(v.iter(), false);
    if hi <= lo {
        hi = lo + 1.0;
    }
    let k = ((v.len() as f64).log2().ceil() as usize + 1).max(1);
    let w = (hi - lo) / k as f64;
    let mut counts = vec![0usize; k];
    for &x in v {
        counts[(((x - lo) / w) as usize).min(k - 1)] += 1;
    }
    let max = *counts.iter().max().unwrap() as f64;
    let (yt, ys) = ticks_and_scale(0.0, max, (f.bottom, f.top));
    p.value_axis(f, &yt, ys, false)?;
    let xs = Linear::new((lo, hi), (f.left, f.right));
    let xt: Vec<f64> = nice_ticks(lo, hi, 6).into_iter().filter(|t| (lo..=hi).contains(t)).collect();
    p.numeric_x_axis(f, &xt, xs)?;
    let color = p.color(0);
    for (b, &c) in counts.iter().enumerate() {
        let x0 = xs.map(lo + w * b as f64);
        let x1 = xs.map(lo + w * (b + 1) as f64);
        let y = ys.map(c as f64);
        p.scene.push(
            rect(x0, y, x1 - x0, ys.map(0.0) - y)
                .fill(color)
                .stroke(p.spec.style.background, 1.0)
                .attr("data-role", "bin")
                .attr("data-count", c),
        );
    }
    Ok(())
}

fn draw_xy(p: &mut Painter, f: &Frame) -> Result<(), ChartError> {
    let d = &p.spec.data;
    let (xlo, xhi) = value_range(d.series[0].values.iter(), false);
    let (ylo, yhi) = value_range(d.series[1].values.iter(), false);
    let (xt, xs) = ticks_and_scale(xlo, xhi, (f.left, f.right));
    let (yt, ys) = ticks_and_scale(ylo, yhi, (f.bottom, f.top));
    p.value_axis(f, &yt, ys, false)?;
    p.numeric_x_axis(f, &xt, xs)?;
    let color = p.color(0);
    let bubble = p.spec.chart_type == ChartType::Bubble;
    let max_size = if bubble { value_range(d.series[2].values.iter(), false).1 } else { 1.0 };
    for i in 0..d.labels.len() {
        let (x, y) = (d.series[0].values[i], d.series[1].values[i]);
        let el = if bubble {
            let s = d.series[2].values[i];
            circle(xs.map(x), ys.map(y), 4.0 + 24.0 * (s / max_size).sqrt())
                .fill(p.color(i).mix(p.spec.style.background, 0.35))
                .stroke(p.color(i), 1.0)
                .attr("data-role", "bubble")
                .attr("data-size", s)
        } else {
            circle(xs.map(x), ys.map(y), 4.0).fill(color).attr("data-role", "point")
        };
        p.scene.push(el.attr("data-x", x).attr("data-y", y));
    }
    Ok(())
}

fn draw_distribution(p: &mut Painter, f: &Frame) -> Result<(), ChartError> {
    let d = &p.spec.data;
    let groups = d.groups();
    let (lo, hi) = value_range(d.series[0].values.iter(), false);
    let (yt, ys) = ticks_and_scale(lo, hi, (f.bottom, f.top));
    p.value_axis(f, &yt, ys, false)?;
    p.category_labels(f, &groups)?;
    let slot = f.width() / groups.len() as f64;
    let violin = p.spec.chart_type == ChartType::Violin;
    for (gi, g) in groups.iter().enumerate() {
        let mut v = d.group_values(0, g);
        v.sort_by(f64::total_cmp);
        let cx = f.left + (gi as f64 + 0.5) * slot;
        let color = p.color(gi);
        let (q1, med, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
        if violin {
            let bw = silverman(&v);
            let (a, b) = (v[0], v[v.len() - 1]);
            let steps = 48;
            let ys_at: Vec<f64> = (0..=steps).map(|k| a + (b - a) * k as f64 / steps as f64).collect();
            let dens: Vec<f64> = ys_at.iter().map(|&y| kde(&v, y, bw)).collect();
            let dmax = dens.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            let half = slot * 0.4;
            let mut path = PathData::new();
            for (k, (&y, &dn)) in ys_at.iter().zip(&dens).enumerate() {
                let x = cx - half * dn / dmax;
                if k == 0 {
                    path.move_to(x, ys.map(y));
                } else {
                    path.line_to(x, ys.map(y));
                }
            }
            for (&y, &dn) in ys_at.iter().zip(&dens).rev() {
                path.line_to(cx + half * dn / dmax, ys.map(y));
            }
            path.close();
            p.scene.push(
                Element::new(Shape::Path(path))
                    .fill(color.mix(p.spec.style.background, 0.3))
                    .stroke(color, 1.0)
                    .attr("data-role", "violin")
                    .attr("data-group", g),
            );
            p.scene.push(
                line(cx - half * 0.3, ys.map(med), cx + half * 0.3, ys.map(med))
                    .stroke(p.fg, 2.0)
                    .attr("data-role", "median")
                    .attr("data-value", med),
            );
        } else {
            let iqr = q3 - q1;
            let lo_w = v.iter().cloned().find(|&x| x >= q1 - 1.5 * iqr).unwrap_or(q1);
            let hi_w = v.iter().rev().cloned().find(|&x| x <= q3 + 1.5 * iqr).unwrap_or(q3);
            let w = slot * 0.5;
            p.scene.push(
                rect(cx - w / 2.0, ys.map(q3), w, ys.map(q1) - ys.map(q3))
                    .fill(color.mix(p.spec.style.background, 0.3))
                    .stroke(color, 1.5)
                    .attr("data-role", "box")
                    .attr("data-group", g)
                    .attr("data-q1", q1)
                    .attr("data-q3", q3),
            );
            p.scene.push(
                line(cx - w / 2.0, ys.map(med), cx + w / 2.0, ys.map(med))
                    .stroke(p.fg, 2.0)
                    .attr("data-role", "median")
                    .attr("data-value", med),
            );
            for (a, b) in [(q3, hi_w), (q1, lo_w)] {
                p.scene.push(line(cx, ys.map(a), cx, ys.map(b)).stroke(color, 1.0).attr("data-role", "whisker"));
                p.scene.push(
                    line(cx - w / 4.0, ys.map(b), cx + w / 4.0, ys.map(b))
                        .stroke(color, 1.0)
                        .attr("data-role", "whisker"),
                );
            }
            for &x in v.iter().filter(|&&x| x < lo_w || x > hi_w) {
                p.scene.push(
                    circle(cx, ys.map(x), 2.5)
                        .stroke(color, 1.0)
                        .attr("data-role", "outlier")
                        .attr("data-value", x),
                );
            }
        }
    }
    Ok(())
}

fn draw_heatmap(p: &mut Painter, f: &Frame) -> Result<(), ChartError> {
    let d = &p.spec.data;
    let rows = d.labels.len();
    let cols = d.series.len();
    let (lo, hi) = value_range(d.series.iter().flat_map(|s| &s.values), false);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let (cw, ch) = (f.width() / cols as f64, f.height() / rows as f64);
    let low = p.spec.style.background.mix(Color::WHITE, 0.5);
    let high = p.color(0);
    for (c, s) in d.series.iter().enumerate() {
        for (r, &v) in s.values.iter().enumerate() {
            p.scene.push(
                rect(f.left + c as f64 * cw, f.top + r as f64 * ch, cw, ch)
                    .fill(low.mix(high, (v - lo) / span))
                    .stroke(p.spec.style.background, 1.0)
                    .attr("data-role", "heat-cell")
                    .attr("data-row", r)
                    .attr("data-col", c)
                    .attr("data-value", v),
            );
        }
    }
    let size = p.size();
    for (r, l) in d.labels.iter().enumerate() {
        p.text(l, size, f.left - 8.0, f.top + (r as f64 + 0.5) * ch + size * 0.35, Anchor::End, 0.0)?;
    }
    let names: Vec<&str> = d.series.iter().map(|s| s.name.as_str()).collect();
    p.category_labels(f, &names)
}

/// Draw `spec` as a vector chart plus its raster. The sidecar is the
/// annotation text.
pub fn render_chart(artifact_id: &str, spec: &ChartSpec, fonts: &FontSet, rng: &SeededRng) -> Result<RenderArtifact, ChartError> {
    use ChartType::*;
    spec.validate()?;
    let t = spec.chart_type;
    let legend_entries: Vec<&str> = match t {
        Pie | Doughnut => spec.data.labels.iter().map(String::as_str).collect(),
        GroupedBar | StackedBar | Line | Area | DualAxis if spec.data.series.len() > 1 => {
            spec.data.series.iter().map(|s| s.name.as_str()).collect()
        }
        _ => Vec::new(),
    };
    let legend = spec.style.show_legend && !legend_entries.is_empty();
    let mut frame = Frame {
        left: 90.0,
        right: CANVAS_WIDTH - 40.0,
        top: 70.0,
        bottom: CANVAS_HEIGHT - 100.0,
    };
    if legend {
        frame.right -= LEGEND_WIDTH;
    }
    if t == DualAxis {
        frame.right -= 50.0;
    }
    let mut p = Painter {
        scene: Scene::new(CANVAS_WIDTH, CANVAS_HEIGHT, Some(spec.style.background)),
        fonts,
        spec,
        fg: spec.style.theme.foreground(),
    };
    let title_size = spec.style.font_size * 1.5;
    p.text(&spec.title, title_size, CANVAS_WIDTH / 2.0, 40.0, Anchor::Middle, 0.0)?;
    match t {
        Pie => draw_pie(&mut p, &frame, false),
        Doughnut => draw_pie(&mut p, &frame, true),
        Bar | GroupedBar | StackedBar | Line | Area | Dot | DualAxis => draw_categorical(&mut p, &frame)?,
        Histogram => draw_histogram(&mut p, &frame)?,
        Scatter | Bubble => draw_xy(&mut p, &frame)?,
        Box | Violin => draw_distribution(&mut p, &frame)?,
        Heatmap => draw_heatmap(&mut p, &frame)?,
    }
    if legend {
        let legend_frame = Frame {
            right: frame.right + if t == DualAxis { 50.0 } else { 0.0 },
            ..frame
        };
        p.legend(&legend_entries, &legend_frame)?;
    }
    let pm = p.scene.rasterize(1.0).map_err(|e| ChartError::RenderFailure(e.to_string()))?;
    let png = encode_png(&pm).map_err(|e| ChartError::RenderFailure(e.to_string()))?;
    Ok(RenderArtifact::new(
        artifact_id,
        p.scene.to_svg(),
        Some(png),
        serialize_chart_annotation(spec).to_text(),
        "chart.txt",
        rng,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charts::{generate_chart_spec, ChartData, ChartStyle, Series};
    use regex::Regex;

    fn spec(t: ChartType, labels: &[&str], series: Vec<(&str, Vec<f64>)>) -> ChartSpec {
        ChartSpec::new(
            t,
            "Fixture",
            ChartData {
                labels: labels.iter().map(|s| s.to_string()).collect(),
                series: series
                    .into_iter()
                    .map(|(n, v)| Series {
                        name: n.into(),
                        values: v,
                    })
                    .collect(),
            },
            ChartStyle::default(),
        )
        .unwrap()
    }

    fn render(s: &ChartSpec) -> String {
        render_chart("c", s, &FontSet::builtin(), &SeededRng::new(0, 0)).unwrap().svg
    }

    fn angle(cx: f64, cy: f64, x: f64, y: f64) -> f64 {
        (y - cy).atan2(x - cx).to_degrees()
    }

    #[test]
    fn pie_spans_from_vector_paths() {
        let svg = render(&spec(ChartType::Pie, &["a", "b", "c"], vec![("value", vec![1.0, 1.0, 2.0])]));
        let re = Regex::new(r#"data-role="slice"[^>]* d="M([\d.-]+) ([\d.-]+) L([\d.-]+) ([\d.-]+) ((?:A[^AZ]+)+)Z""#).unwrap();
        let arc = Regex::new(r"A[\d.]+ [\d.]+ 0 [01] [01] ([\d.-]+) ([\d.-]+)").unwrap();
        let mut spans = Vec::new();
        for c in re.captures_iter(&svg) {
            let f = |i: usize| c[i].parse::<f64>().unwrap();
            let (cx, cy) = (f(1), f(2));
            let mut prev = angle(cx, cy, f(3), f(4));
            let mut total = 0.0;
            for a in arc.captures_iter(&c[5]) {
                let next = angle(cx, cy, a[1].parse().unwrap(), a[2].parse().unwrap());
                total += (next - prev).rem_euclid(360.0);
                prev = next;
            }
            spans.push(total);
        }
        assert_eq!(spans.len(), 3);
        for (got, want) in spans.iter().zip([90.0, 90.0, 180.0]) {
            assert!((got - want).abs() < 0.1, "{got} vs {want}");
        }
    }

    #[test]
    fn dual_axis_has_two_value_axes() {
        let s = spec(
            ChartType::DualAxis,
            &["a", "b", "c"],
            vec![("s1", vec![1.0, 2.0, 3.0]), ("s2", vec![100.0, 500.0, 50.0])],
        );
        assert_eq!(render(&s).matches(r#"data-role="value-axis""#).count(), 2);
    }

    #[test]
    fn bar_heights_recovered_from_axis_scale() {
        let values = vec![12.5, 40.0, 7.25, 33.0];
        let svg = render(&spec(ChartType::Bar, &["a", "b", "c", "d"], vec![("value", values.clone())]));
        let tick = Regex::new(r#"<line data-role="tick" data-axis="left" data-value="([\d.-]+)" x1="[\d.-]+" y1="([\d.-]+)""#).unwrap();
        let ticks: Vec<(f64, f64)> = tick
            .captures_iter(&svg)
            .map(|c| (c[1].parse().unwrap(), c[2].parse().unwrap()))
            .collect();
        assert!(ticks.len() >= 2);
        let (v0, y0) = ticks[0];
        let (v1, y1) = *ticks.last().unwrap();
        let px_per_unit = (y0 - y1) / (v1 - v0);
        let bar = Regex::new(r#"<rect data-role="bar"[^>]* y="([\d.-]+)" width="[\d.-]+" height="([\d.-]+)""#).unwrap();
        let heights: Vec<f64> = bar.captures_iter(&svg).map(|c| c[2].parse().unwrap()).collect();
        assert_eq!(heights.len(), values.len());
        for (h, v) in heights.iter().zip(&values) {
            let got = h / px_per_unit;
            assert!((got - v).abs() / v <= 0.005, "{got} vs {v}");
        }
    }

    #[test]
    fn stacked_segments_proportional() {
        let s = spec(
            ChartType::StackedBar,
            &["a", "b"],
            vec![("x", vec![10.0, 5.0]), ("y", vec![30.0, 15.0])],
        );
        let svg = render(&s);
        let bar = Regex::new(r#"<rect data-role="bar" data-series="(\d)" data-index="(\d)"[^>]* height="([\d.-]+)""#).unwrap();
        let h: Vec<f64> = bar.captures_iter(&svg).map(|c| c[3].parse().unwrap()).collect();
        assert_eq!(h.len(), 4);
        assert!((h[1] / h[0] - 3.0).abs() < 1e-3);
        assert!((h[3] / h[2] - 3.0).abs() < 1e-3);
    }

    #[test]
    fn every_type_renders_with_annotation_sidecar() {
        let mut rng = SeededRng::new(12, 0);
        for t in ChartType::ALL {
            let s = generate_chart_spec(Some(t), &mut rng);
            let a = render_chart("c", &s, &FontSet::builtin(), &rng).unwrap();
            assert_eq!(a.ground_truth, serialize_chart_annotation(&s).to_text());
            assert_eq!(a.ground_truth_ext, "chart.txt");
            assert!(a.png.is_some());
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let s = generate_chart_spec(Some(ChartType::Violin), &mut SeededRng::new(2, 2));
        assert_eq!(render(&s), render(&s));
    }

    #[test]
    fn ticks_cover_range() {
        assert_eq!(nice_ticks(0.0, 10.0, 5), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        let t = nice_ticks(0.13, 0.87, 5);
        assert!(t[0] <= 0.13 && *t.last().unwrap() >= 0.87);
        assert_eq!(t, vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]);
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
    }
}
