use serde::{Deserialize, Serialize};

use super::html::{CellSpan, LogicalGrid};
use super::TableError;
use crate::arabic::{substitute_numerals, DiacritizationSpec, RemovalLevel};
use crate::canvas::Color;
use crate::corpus;
use crate::fonts::FontSet;
use crate::render::TEXT_COLORS;
use crate::rng::SeededRng;
use crate::script::Direction;

pub use crate::reflow::Alignment as CellAlign;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StyleMode {
    Consistent,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaptionPosition {
    Top,
    Bottom,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caption {
    pub text: String,
    pub position: CaptionPosition,
}

/// A rectangular merged region anchored at `(row, col)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Merge {
    pub row: usize,
    pub col: usize,
    pub row_span: usize,
    pub col_span: usize,
}

impl Merge {
    pub fn span(&self) -> CellSpan {
        CellSpan {
            row: self.row,
            col: self.col,
            row_span: self.row_span,
            col_span: self.col_span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStyle {
    pub font_family: String,
    pub size: f64,
    pub color: Color,
    pub background: Option<Color>,
    pub align: CellAlign,
    pub bold: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumeralPolicy {
    Western,
    Eastern,
    PerCell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Arabic,
    English,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentPolicy {
    pub language: Language,
    pub diacritization: DiacritizationSpec,
    pub numerals: NumeralPolicy,
    pub empty_cell_rate: f64,
    pub filler_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSpec {
    pub rows: usize,
    pub cols: usize,
    pub merges: Vec<Merge>,
    pub header_rows: usize,
    pub footer_rows: usize,
    pub caption: Option<Caption>,
    pub style_mode: StyleMode,
    pub direction: Direction,
    pub content: ContentPolicy,
    /// Row-major, one per grid position; only cell anchors are drawn.
    pub cell_styles: Vec<CellStyle>,
    pub grid_color: Color,
}

const SHADES: [Color; 6] = [
    Color::rgb(0xd9, 0xe2, 0xf3),
    Color::rgb(0xe2, 0xef, 0xda),
    Color::rgb(0xfc, 0xe4, 0xd6),
    Color::rgb(0xed, 0xed, 0xed),
    Color::rgb(0xff, 0xf2, 0xcc),
    Color::rgb(0xde, 0xeb, 0xf7),
];

fn default_style() -> CellStyle {
    CellStyle {
        font_family: "DejaVu Sans".into(),
        size: 12.0,
        color: Color::BLACK,
        background: None,
        align: CellAlign::Center,
        bold: false,
    }
}

impl TableSpec {
    /// A merge-free, uniformly styled right-to-left table.
    pub fn plain(rows: usize, cols: usize, header_rows: usize, footer_rows: usize) -> Self {
        Self {
            rows,
            cols,
            merges: Vec::new(),
            header_rows,
            footer_rows,
            caption: None,
            style_mode: StyleMode::Consistent,
            direction: Direction::Rtl,
            content: ContentPolicy {
                language: Language::Arabic,
                diacritization: DiacritizationSpec::default(),
                numerals: NumeralPolicy::Western,
                empty_cell_rate: 0.0,
                filler_rate: 0.0,
            },
            cell_styles: vec![default_style(); rows * cols],
            grid_color: Color::BLACK,
        }
    }

    /// Adopt the structure of a parsed grid with consistent styling.
    pub fn from_grid(grid: &LogicalGrid, header_rows: usize, direction: Direction) -> Self {
        let mut spec = Self::plain(grid.rows, grid.cols, header_rows, 0);
        spec.direction = direction;
        spec.merges = grid
            .cells
            .iter()
            .filter(|c| c.area() > 1)
            .map(|c| Merge {
                row: c.row,
                col: c.col,
                row_span: c.row_span,
                col_span: c.col_span,
            })
            .collect();
        spec
    }

    pub fn style(&self, r: usize, c: usize) -> &CellStyle {
        &self.cell_styles[r * self.cols + c]
    }

    /// Section index of a row: 0 header, 1 body, 2 footer.
    pub fn section_of(&self, r: usize) -> usize {
        if r < self.header_rows {
            0
        } else if r >= self.rows - self.footer_rows {
            2
        } else {
            1
        }
    }

    pub fn validate(&self) -> Result<(), TableError> {
        let bad = |m: String| Err(TableError::SpecViolation(m));
        if self.rows == 0 || self.cols == 0 {
            return bad(format!("{}x{} grid", self.rows, self.cols));
        }
        if self.header_rows + self.footer_rows >= self.rows {
            return bad("header and footer leave no body rows".into());
        }
        if self.cell_styles.len() != self.rows * self.cols {
            return bad(format!("{} cell styles for {} positions", self.cell_styles.len(), self.rows * self.cols));
        }
        for (i, m) in self.merges.iter().enumerate() {
            if m.row_span == 0 || m.col_span == 0 || m.row_span * m.col_span < 2 {
                return bad(format!("merge {i} covers fewer than two positions"));
            }
            if m.row + m.row_span > self.rows || m.col + m.col_span > self.cols {
                return bad(format!("merge {i} leaves the grid"));
            }
            if self.section_of(m.row) != self.section_of(m.row + m.row_span - 1) {
                return bad(format!("merge {i} crosses a section boundary"));
            }
            for (j, o) in self.merges.iter().enumerate().skip(i + 1) {
                if m.span().overlaps(&o.span()) {
                    return bad(format!("merges {i} and {j} overlap"));
                }
            }
        }
        Ok(())
    }

    /// The logical grid: the merges plus one single cell per free position.
    pub fn grid(&self) -> LogicalGrid {
        let mut cells: Vec<CellSpan> = self.merges.iter().map(Merge::span).collect();
        let mut covered = vec![false; self.rows * self.cols];
        for m in &self.merges {
            for r in m.row..m.row + m.row_span {
                for c in m.col..m.col + m.col_span {
                    covered[r * self.cols + c] = true;
                }
            }
        }
        for r in 0..self.rows {
            for c in 0..self.cols {
                if !covered[r * self.cols + c] {
                    cells.push(CellSpan {
                        row: r,
                        col: c,
                        row_span: 1,
                        col_span: 1,
                    });
                }
            }
        }
        cells.sort();
        LogicalGrid {
            rows: self.rows,
            cols: self.cols,
            cells,
        }
    }
}

/// Dimension and merge limits per mode.
pub struct ModeLimits {
    pub rows: (usize, usize),
    pub cols: (usize, usize),
    pub max_merges: usize,
}

pub fn limits(mode: StyleMode) -> ModeLimits {
    match mode {
        StyleMode::Consistent => ModeLimits {
            rows: (3, 12),
            cols: (2, 8),
            max_merges: 3,
        },
        StyleMode::Random => ModeLimits {
            rows: (2, 15),
            cols: (2, 10),
            max_merges: 6,
        },
    }
}

fn sample_merges(spec: &TableSpec, max: usize, rng: &mut SeededRng) -> Vec<Merge> {
    let target = rng.int_in(0, max);
    let mut merges: Vec<Merge> = Vec::new();
    let mut attempts = 0;
    while merges.len() < target && attempts < 100 {
        attempts += 1;
        let rs = rng.int_in(1, spec.rows.min(3));
        let cs = rng.int_in(1, spec.cols.min(3));
        if rs * cs < 2 {
            continue;
        }
        let m = Merge {
            row: rng.int_in(0, spec.rows - rs),
            col: rng.int_in(0, spec.cols - cs),
            row_span: rs,
            col_span: cs,
        };
        if spec.section_of(m.row) != spec.section_of(m.row + rs - 1) {
            continue;
        }
        if merges.iter().any(|o| o.span().overlaps(&m.span())) {
            continue;
        }
        merges.push(m);
    }
    merges.sort_by_key(|m| (m.row, m.col));
    merges
}

pub fn generate_table_spec(mode: StyleMode, rng: &mut SeededRng) -> TableSpec {
    generate_table_spec_with(mode, &FontSet::builtin().families(), rng)
}

/// Sample a table structure and style. Fonts are drawn from `families`.
pub fn generate_table_spec_with(mode: StyleMode, families: &[String], rng: &mut SeededRng) -> TableSpec {
    let lim = limits(mode);
    let rows = rng.int_in(lim.rows.0, lim.rows.1);
    let cols = rng.int_in(lim.cols.0, lim.cols.1);
    let mut header_rows = match mode {
        StyleMode::Consistent => {
            if rows >= 8 && rng.chance(0.3) {
                2
            } else {
                1
            }
        }
        StyleMode::Random => rng.int_in(0, 2),
    };
    header_rows = header_rows.min(rows - 1);
    let footer_rows = if rows - header_rows >= 3 && rng.chance(0.4) { 1 } else { 0 };

    let mut spec = TableSpec::plain(rows, cols, header_rows, footer_rows);
    spec.style_mode = mode;
    spec.merges = sample_merges(&spec, lim.max_merges, rng);
    if rng.chance(0.5) {
        let text = {
            let raw = corpus::arabic_phrase(rng, 2, 5);
            crate::arabic::strip_diacritics(&raw, RemovalLevel::Heavy, rng)
        };
        let position = if rng.chance(0.5) { CaptionPosition::Top } else { CaptionPosition::Bottom };
        spec.caption = Some(Caption { text, position });
    }
    spec.grid_color = if rng.chance(0.5) { Color::BLACK } else { Color::rgb(0x80, 0x80, 0x80) };

    match mode {
        StyleMode::Consistent => {
            spec.content = ContentPolicy {
                language: Language::Arabic,
                diacritization: DiacritizationSpec {
                    removal_level: RemovalLevel::Heavy,
                    ..Default::default()
                },
                numerals: if rng.chance(0.5) { NumeralPolicy::Eastern } else { NumeralPolicy::Western },
                empty_cell_rate: 0.0,
                filler_rate: 0.0,
            };
            let base = CellStyle {
                font_family: rng.pick(families).clone(),
                size: rng.int_in(11, 16) as f64,
                color: *rng.pick(&TEXT_COLORS),
                background: None,
                align: if rng.chance(0.5) { CellAlign::Right } else { CellAlign::Center },
                bold: false,
            };
            let header_fill = *rng.pick(&SHADES);
            let footer_fill = *rng.pick(&SHADES);
            spec.cell_styles = (0..rows * cols)
                .map(|i| {
                    let r = i / cols;
                    let mut s = base.clone();
                    match spec.section_of(r) {
                        0 => {
                            s.background = Some(header_fill);
                            s.bold = true;
                        }
                        2 => s.background = Some(footer_fill),
                        _ => {}
                    }
                    s
                })
                .collect();
        }
        StyleMode::Random => {
            let level = *rng.pick(&RemovalLevel::ALL);
            spec.content = ContentPolicy {
                language: if rng.chance(0.5) { Language::Mixed } else { Language::Arabic },
                diacritization: DiacritizationSpec {
                    removal_level: level,
                    insertion_rate: 0.0,
                    eastern_numeral_fraction: 0.0,
                },
                numerals: NumeralPolicy::PerCell,
                empty_cell_rate: 0.1,
                filler_rate: 0.05,
            };
            spec.cell_styles = (0..rows * cols)
                .map(|_| CellStyle {
                    font_family: rng.pick(families).clone(),
                    size: rng.int_in(9, 18) as f64,
                    color: *rng.pick(&TEXT_COLORS),
                    background: if rng.chance(0.3) { Some(*rng.pick(&SHADES)) } else { None },
                    align: *rng.pick(&[CellAlign::Left, CellAlign::Center, CellAlign::Right]),
                    bold: rng.chance(0.2),
                })
                .collect();
        }
    }
    spec
}

fn apply_numerals(text: &str, policy: NumeralPolicy, rng: &mut SeededRng) -> String {
    let fraction = match policy {
        NumeralPolicy::Western => 0.0,
        NumeralPolicy::Eastern => 1.0,
        NumeralPolicy::PerCell => 0.5,
    };
    substitute_numerals(text, fraction, rng)
}

/// Cell text for every grid position (empty off the cell anchors).
pub fn generate_table_content(spec: &TableSpec, rng: &mut SeededRng) -> Vec<Vec<String>> {
    let grid = spec.grid();
    let mut out = vec![vec![String::new(); spec.cols]; spec.rows];
    let policy = &spec.content;
    for cell in &grid.cells {
        let (r, c) = (cell.row, cell.col);
        let section = spec.section_of(r);
        if section == 1 && rng.chance(policy.empty_cell_rate) {
            continue;
        }
        if section == 1 && rng.chance(policy.filler_rate) {
            out[r][c] = rng.pick(corpus::FILLER_TOKENS).to_string();
            continue;
        }
        let latin = match policy.language {
            Language::English => true,
            Language::Arabic => false,
            Language::Mixed => rng.chance(0.3),
        };
        let text = match (section, c) {
            (0, _) => {
                if latin {
                    corpus::latin_phrase(rng, 1, 2)
                } else {
                    rng.pick(corpus::ARABIC_LABELS).to_string()
                }
            }
            (2, 0) => {
                if latin {
                    "Total".to_string()
                } else {
                    "الإجمالي".to_string()
                }
            }
            (1, 0) => {
                if latin {
                    corpus::latin_phrase(rng, 1, 3)
                } else {
                    let raw = corpus::arabic_phrase(rng, 1, 3);
                    policy.diacritization.apply(&raw, rng)
                }
            }
            _ => {
                if rng.chance(0.8) {
                    let n = corpus::number_text(rng, 9999, 2);
                    if latin {
                        n
                    } else {
                        apply_numerals(&n, policy.numerals, rng)
                    }
                } else if latin {
                    corpus::latin_phrase(rng, 1, 2)
                } else {
                    let raw = corpus::arabic_phrase(rng, 1, 2);
                    policy.diacritization.apply(&raw, rng)
                }
            }
        };
        out[r][c] = text;
    }
    out
}
