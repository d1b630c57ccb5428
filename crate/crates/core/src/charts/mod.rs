//! Chart specifications, their sampler and the plain-text annotation that
//! accompanies every chart image.

mod draw;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canvas::Color;
use crate::corpus;
use crate::fonts::FontSet;
use crate::rng::SeededRng;
use rand::RngCore;

pub use draw::{nice_ticks, render_chart, CANVAS_HEIGHT, CANVAS_WIDTH};

#[derive(Debug, Error, PartialEq)]
pub enum ChartError {
    #[error("invalid chart spec: {0}")]
    InvalidSpec(String),
    #[error("chart annotation parse error: {0}")]
    Parse(String),
    #[error("chart render failed: {0}")]
    RenderFailure(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartType {
    Pie,
    Bar,
    GroupedBar,
    StackedBar,
    Line,
    Area,
    Dot,
    Histogram,
    Scatter,
    Box,
    Violin,
    Heatmap,
    DualAxis,
    Doughnut,
    Bubble,
}

impl ChartType {
    pub const ALL: [ChartType; 15] = [
        ChartType::Pie,
        ChartType::Bar,
        ChartType::GroupedBar,
        ChartType::StackedBar,
        ChartType::Line,
        ChartType::Area,
        ChartType::Dot,
        ChartType::Histogram,
        ChartType::Scatter,
        ChartType::Box,
        ChartType::Violin,
        ChartType::Heatmap,
        ChartType::DualAxis,
        ChartType::Doughnut,
        ChartType::Bubble,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChartType::Pie => "pie",
            ChartType::Bar => "bar",
            ChartType::GroupedBar => "grouped_bar",
            ChartType::StackedBar => "stacked_bar",
            ChartType::Line => "line",
            ChartType::Area => "area",
            ChartType::Dot => "dot",
            ChartType::Histogram => "histogram",
            ChartType::Scatter => "scatter",
            ChartType::Box => "box",
            ChartType::Violin => "violin",
            ChartType::Heatmap => "heatmap",
            ChartType::DualAxis => "dual_axis",
            ChartType::Doughnut => "doughnut",
            ChartType::Bubble => "bubble",
        }
    }

    /// Types whose rows are distinct categories.
    pub fn is_categorical(self) -> bool {
        !matches!(
            self,
            ChartType::Histogram | ChartType::Scatter | ChartType::Bubble | ChartType::Box | ChartType::Violin
        )
    }
}

impl fmt::Display for ChartType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChartType {
    type Err = ChartError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ChartType::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| ChartError::Parse(format!("unknown chart type {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

/// A label column plus one value column per series. Box, violin and
/// histogram data are raw samples in long form: one row per observation,
/// labelled with its group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartData {
    pub labels: Vec<String>,
    pub series: Vec<Series>,
}

impl ChartData {
    /// Distinct labels in first-seen order.
    pub fn groups(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.labels.iter().map(String::as_str).filter(|l| seen.insert(*l)).collect()
    }

    /// Values of series `s` whose label is `group`.
    pub fn group_values(&self, s: usize, group: &str) -> Vec<f64> {
        self.labels
            .iter()
            .zip(&self.series[s].values)
            .filter(|(l, _)| *l == group)
            .map(|(_, v)| *v)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Theme {
    Light,
    Dark,
    Pastel,
    Vivid,
    Grayscale,
}

impl Theme {
    pub const ALL: [Theme; 5] = [Theme::Light, Theme::Dark, Theme::Pastel, Theme::Vivid, Theme::Grayscale];

    pub fn palette(self) -> Vec<Color> {
        let hex: &[&str] = match self {
            Theme::Light => &["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"],
            Theme::Dark => &["#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462", "#b3de69", "#fccde5"],
            Theme::Pastel => &["#a6cee3", "#b2df8a", "#fb9a99", "#fdbf6f", "#cab2d6", "#ffff99", "#8dd3c7", "#fccde5"],
            Theme::Vivid => &["#e41a1c", "#377eb8", "#4daf4a", "#984ea3", "#ff7f00", "#a65628", "#f781bf", "#17becf"],
            Theme::Grayscale => &["#252525", "#525252", "#737373", "#969696", "#bdbdbd", "#636363", "#454545", "#a0a0a0"],
        };
        hex.iter().map(|h| Color::from_hex(h).expect("palette hex")).collect()
    }

    fn backgrounds(self) -> &'static [&'static str] {
        match self {
            Theme::Dark => &["#1e1e1e", "#2b2b2b", "#102030"],
            _ => &["#ffffff", "#fafafa", "#f5f5f0", "#f0f4f8", "#fffdf5"],
        }
    }

    pub fn foreground(self) -> Color {
        match self {
            Theme::Dark => Color::rgb(0xee, 0xee, 0xee),
            _ => Color::rgb(0x22, 0x22, 0x22),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartStyle {
    pub theme: Theme,
    pub font_family: String,
    pub background: Color,
    pub palette: Vec<Color>,
    /// Category label rotation in degrees, counter-clockwise.
    pub label_rotation: f64,
    pub show_grid: bool,
    pub show_legend: bool,
    pub font_size: f64,
}

impl ChartStyle {
    pub fn sample(families: &[String], rng: &mut SeededRng) -> Self {
        let theme = *rng.pick(&Theme::ALL);
        let mut palette = theme.palette();
        rng.shuffle(&mut palette);
        Self {
            theme,
            font_family: rng.pick(families).clone(),
            background: Color::from_hex(rng.pick(theme.backgrounds())).expect("background hex"),
            palette,
            label_rotation: *rng.pick(&[0.0, 0.0, 30.0, 45.0, 60.0, 90.0]),
            show_grid: rng.chance(0.6),
            show_legend: rng.chance(0.8),
            font_size: rng.int_in(11, 15) as f64,
        }
    }
}

impl Default for ChartStyle {
    fn default() -> Self {
        Self {
            theme: Theme::Light,
            font_family: "DejaVu Sans".into(),
            background: Color::WHITE,
            palette: Theme::Light.palette(),
            label_rotation: 0.0,
            show_grid: false,
            show_legend: true,
            font_size: 12.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub chart_type: ChartType,
    pub title: String,
    pub data: ChartData,
    pub style: ChartStyle,
}

fn single_line(what: &str, s: &str) -> Result<(), ChartError> {
    if s.contains(['\n', '\r']) {
        return Err(ChartError::InvalidSpec(format!("{what} contains a line break")));
    }
    Ok(())
}

impl ChartSpec {
    /// Build a spec, rejecting data whose shape does not suit the type.
    pub fn new(chart_type: ChartType, title: impl Into<String>, data: ChartData, style: ChartStyle) -> Result<Self, ChartError> {
        let spec = Self {
            chart_type,
            title: title.into(),
            data,
            style,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ChartError> {
        use ChartType::*;
        let bad = |m: String| Err(ChartError::InvalidSpec(m));
        let d = &self.data;
        let t = self.chart_type;
        single_line("title", &self.title)?;
        if d.labels.is_empty() {
            return bad("no rows".into());
        }
        if d.series.is_empty() {
            return bad("no series".into());
        }
        for l in &d.labels {
            single_line("label", l)?;
        }
        let mut names = HashSet::new();
        for s in &d.series {
            single_line("series name", &s.name)?;
            if s.name.is_empty() || !names.insert(s.name.as_str()) {
                return bad(format!("series name {:?} empty or repeated", s.name));
            }
            if s.values.len() != d.labels.len() {
                return bad(format!("series {:?} has {} values for {} labels", s.name, s.values.len(), d.labels.len()));
            }
            if s.values.iter().any(|v| !v.is_finite()) {
                return bad(format!("series {:?} has a non-finite value", s.name));
            }
        }
        if self.palette_len() == 0 {
            return bad("empty palette".into());
        }
        if t.is_categorical() && d.groups().len() != d.labels.len() {
            return bad("category labels repeat".into());
        }
        let n = d.series.len();
        let want = match t {
            Pie | Doughnut | Bar | Dot | Histogram | Box | Violin => Some(1),
            Scatter | DualAxis => Some(2),
            Bubble => Some(3),
            _ => None,
        };
        if let Some(k) = want {
            if n != k {
                return bad(format!("{t} needs {k} series, got {n}"));
            }
        }
        if matches!(t, GroupedBar | StackedBar) && n < 2 {
            return bad(format!("{t} needs at least two series"));
        }
        match t {
            Pie | Doughnut => {
                let v = &d.series[0].values;
                if v.iter().any(|&x| x < 0.0) {
                    return bad("negative share".into());
                }
                if v.iter().sum::<f64>() <= 0.0 {
                    return bad("shares sum to zero".into());
                }
            }
            StackedBar if d.series.iter().flat_map(|s| &s.values).any(|&x| x < 0.0) => {
                return bad("negative stacked segment".into());
            }
            Bubble if d.series[2].values.iter().any(|&x| x <= 0.0) => {
                return bad("bubble sizes must be positive".into());
            }
            Histogram if d.labels.len() < 2 => return bad("histogram needs two samples".into()),
            Violin if d.groups().iter().any(|g| d.group_values(0, g).len() < 2) => {
                return bad("violin groups need two samples".into());
            }
            _ => {}
        }
        Ok(())
    }

    fn palette_len(&self) -> usize {
        self.style.palette.len()
    }
}

/// Round to `places` decimals so the value prints exactly as sampled.
fn round_to(v: f64, places: i32) -> f64 {
    let k = 10f64.powi(places);
    (v * k).round() / k
}

fn distinct_labels(rng: &mut SeededRng, n: usize, latin: bool) -> Vec<String> {
    let pool: &[&str] = if latin { corpus::LATIN_WORDS } else { corpus::ARABIC_LABELS };
    let mut all: Vec<String> = pool.iter().map(|s| s.to_string()).collect::<HashSet<_>>().into_iter().collect();
    all.sort();
    rng.shuffle(&mut all);
    all.truncate(n);
    all
}

fn uniform_values(rng: &mut SeededRng, n: usize, lo: f64, hi: f64, places: i32) -> Vec<f64> {
    (0..n).map(|_| round_to(rng.float_in(lo, hi), places)).collect()
}

fn index_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| i.to_string()).collect()
}

fn sample_data(t: ChartType, rng: &mut SeededRng) -> ChartData {
    use ChartType::*;
    let latin = rng.chance(0.25);
    let series_names = |rng: &mut SeededRng, k: usize| -> Vec<String> {
        if rng.chance(0.5) {
            let start = rng.int_in(2010, 2020);
            (0..k).map(|i| (start + i).to_string()).collect()
        } else {
            distinct_labels(rng, k, latin)
        }
    };
    let series = |names: Vec<String>, cols: Vec<Vec<f64>>| -> Vec<Series> {
        names.into_iter().zip(cols).map(|(name, values)| Series { name, values }).collect()
    };
    match t {
        Pie | Doughnut => {
            let n = rng.int_in(2, 7);
            ChartData {
                labels: distinct_labels(rng, n, latin),
                series: series(vec!["value".into()], vec![uniform_values(rng, n, 1.0, 100.0, 1)]),
            }
        }
        Bar | Dot | Line | Area => {
            let n = rng.int_in(3, 10);
            let k = if matches!(t, Line | Area) { rng.int_in(1, 3) } else { 1 };
            let labels = distinct_labels(rng, n, latin);
            let names = if k == 1 { vec!["value".to_string()] } else { series_names(rng, k) };
            let hi = *rng.pick(&[10.0, 100.0, 1000.0]);
            let cols = (0..k).map(|_| uniform_values(rng, n, 0.0, hi, 1)).collect();
            ChartData {
                labels,
                series: series(names, cols),
            }
        }
        GroupedBar | StackedBar => {
            let n = rng.int_in(3, 8);
            let k = rng.int_in(2, 4);
            let labels = distinct_labels(rng, n, latin);
            let names = series_names(rng, k);
            let cols = (0..k).map(|_| uniform_values(rng, n, 1.0, 60.0, 1)).collect();
            ChartData {
                labels,
                series: series(names, cols),
            }
        }
        DualAxis => {
            let n = rng.int_in(4, 10);
            let labels = distinct_labels(rng, n, latin);
            let names = series_names(rng, 2);
            let a = uniform_values(rng, n, 0.0, 100.0, 1);
            let b = uniform_values(rng, n, 1000.0, 10000.0, 0);
            ChartData {
                labels,
                series: series(names, vec![a, b]),
            }
        }
        Heatmap => {
            let rows = rng.int_in(3, 7);
            let cols = rng.int_in(3, 7);
            let mut names = distinct_labels(rng, rows + cols, latin);
            let labels = names.split_off(cols);
            let values = (0..cols).map(|_| uniform_values(rng, rows, 0.0, 1.0, 2)).collect();
            ChartData {
                labels,
                series: series(names, values),
            }
        }
        Histogram => {
            let n = rng.int_in(30, 120);
            let mean = rng.float_in(20.0, 80.0);
            let sd = rng.float_in(3.0, 15.0);
            let v = (0..n).map(|_| round_to(rng.normal(mean, sd), 1)).collect();
            ChartData {
                labels: index_labels(n),
                series: series(vec!["value".into()], vec![v]),
            }
        }
        Box | Violin => {
            let k = rng.int_in(2, 5);
            let groups = distinct_labels(rng, k, latin);
            let mut labels = Vec::new();
            let mut values = Vec::new();
            for g in groups {
                let m = rng.float_in(10.0, 90.0);
                let sd = rng.float_in(2.0, 12.0);
                for _ in 0..rng.int_in(15, 40) {
                    labels.push(g.clone());
                    values.push(round_to(rng.normal(m, sd), 1));
                }
            }
            ChartData {
                labels,
                series: series(vec!["value".into()], vec![values]),
            }
        }
        Scatter => {
            let n = rng.int_in(15, 60);
            let slope = rng.float_in(-2.0, 2.0);
            let x: Vec<f64> = uniform_values(rng, n, 0.0, 100.0, 1);
            let y = x.iter().map(|&x| round_to(50.0 + slope * x + rng.normal(0.0, 15.0), 1)).collect();
            ChartData {
                labels: index_labels(n),
                series: series(vec!["x".into(), "y".into()], vec![x, y]),
            }
        }
        Bubble => {
            let n = rng.int_in(8, 25);
            let x = uniform_values(rng, n, 0.0, 100.0, 1);
            let y = uniform_values(rng, n, 0.0, 100.0, 1);
            let s = uniform_values(rng, n, 1.0, 100.0, 0);
            ChartData {
                labels: index_labels(n),
                series: series(vec!["x".into(), "y".into(), "size".into()], vec![x, y, s]),
            }
        }
    }
}

fn sample_title(rng: &mut SeededRng) -> String {
    if rng.chance(0.25) {
        let mut t = corpus::latin_phrase(rng, 2, 5);
        if let Some(first) = t.get_mut(0..1) {
            first.make_ascii_uppercase();
        }
        t
    } else {
        let n = rng.int_in(1, 3);
        (0..n).map(|_| *rng.pick(corpus::ARABIC_LABELS)).collect::<Vec<_>>().join(" ")
    }
}

pub fn generate_chart_spec(chart_type: Option<ChartType>, rng: &mut SeededRng) -> ChartSpec {
    generate_chart_spec_with(chart_type, &FontSet::builtin().families(), rng)
}

/// Sample a chart. The type is uniform over all fifteen when not forced;
/// data and style come from separate streams so neither influences the other.
pub fn generate_chart_spec_with(chart_type: Option<ChartType>, families: &[String], rng: &mut SeededRng) -> ChartSpec {
    let t = chart_type.unwrap_or_else(|| *rng.pick(&ChartType::ALL));
    let mut data_rng = SeededRng::new(rng.seed(), rng.next_u64());
    let mut style_rng = SeededRng::new(rng.seed(), rng.next_u64());
    let data = sample_data(t, &mut data_rng);
    let title = sample_title(&mut data_rng);
    let style = ChartStyle::sample(families, &mut style_rng);
    ChartSpec::new(t, title, data, style).expect("sampler emits valid shapes")
}

/// Title, type and data table of a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartAnnotation {
    pub title: String,
    pub chart_type: ChartType,
    pub data: ChartData,
}

impl ChartAnnotation {
    /// `title: …`, `type: …`, then a CSV header and one row per label.
    /// Values use the shortest decimal form that parses back exactly.
    pub fn to_text(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let mut header = vec!["label".to_string()];
        header.extend(self.data.series.iter().map(|s| s.name.clone()));
        w.write_record(&header).expect("in-memory csv write");
        for (i, label) in self.data.labels.iter().enumerate() {
            let mut row = vec![label.clone()];
            row.extend(self.data.series.iter().map(|s| format!("{}", s.values[i])));
            w.write_record(&row).expect("in-memory csv write");
        }
        let table = String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("utf-8 fields");
        format!("title: {}\ntype: {}\n{}", self.title, self.chart_type, table.trim_end_matches('\n'))
    }
}

impl fmt::Display for ChartAnnotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

pub fn serialize_chart_annotation(spec: &ChartSpec) -> ChartAnnotation {
    ChartAnnotation {
        title: spec.title.clone(),
        chart_type: spec.chart_type,
        data: spec.data.clone(),
    }
}

pub fn parse_chart_annotation(text: &str) -> Result<ChartAnnotation, ChartError> {
    let err = |m: &str| ChartError::Parse(m.to_string());
    let (l1, rest) = text.split_once('\n').ok_or_else(|| err("missing type line"))?;
    let (l2, table) = rest.split_once('\n').ok_or_else(|| err("missing data table"))?;
    let title = l1.strip_prefix("title: ").ok_or_else(|| err("first line must start with \"title: \""))?;
    let chart_type: ChartType = l2
        .strip_prefix("type: ")
        .ok_or_else(|| err("second line must start with \"type: \""))?
        .parse()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(table.as_bytes());
    let header = rdr.headers().map_err(|e| ChartError::Parse(e.to_string()))?.clone();
    if header.get(0) != Some("label") || header.len() < 2 {
        return Err(err("header must be label followed by series names"));
    }
    let mut data = ChartData {
        labels: Vec::new(),
        series: header
            .iter()
            .skip(1)
            .map(|n| Series {
                name: n.to_string(),
                values: Vec::new(),
            })
            .collect(),
    };
    for rec in rdr.records() {
        let rec = rec.map_err(|e| ChartError::Parse(e.to_string()))?;
        data.labels.push(rec[0].to_string());
        for (s, field) in data.series.iter_mut().zip(rec.iter().skip(1)) {
            let v: f64 = field.parse().map_err(|_| ChartError::Parse(format!("bad number {field:?}")))?;
            s.values.push(v);
        }
    }
    Ok(ChartAnnotation {
        title: title.to_string(),
        chart_type,
        data,
    })
}
