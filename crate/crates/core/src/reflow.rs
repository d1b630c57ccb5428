//! Putting translated text back into the original line boxes.
//!
//! A paragraph's translation is split at word boundaries across its line
//! boxes in proportion to their widths, each segment gets its own font size
//! (largest quarter-point size that fits the box), and the direction of each
//! segment is made explicit with Unicode isolates.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_bidi::{bidi_class, BidiClass};

use crate::fonts::{FontAsset, FontRef, GlyphCoverage};
use crate::ingest::{BoundingBox, OcrLine};
use crate::script::{is_bidi_control, is_layout_control, is_strong_ltr, is_strong_rtl, majority_direction, Direction};

pub const LRI: char = '\u{2066}';
pub const RLI: char = '\u{2067}';
pub const FSI: char = '\u{2068}';
pub const PDI: char = '\u{2069}';

/// Fraction of each box dimension kept free when fitting.
pub const BOX_PADDING: f64 = 0.02;
/// Font sizes are searched on this grid.
pub const SIZE_STEP: f64 = 0.25;

#[derive(Debug, Error, PartialEq)]
pub enum ReflowError {
    #[error("word {word:?} is wider than the widest box at the minimum size")]
    OverflowUnsplittable { word: String },
    #[error("{text:?} does not fit a {width}x{height} box at {min_size}pt")]
    Overflow {
        text: String,
        width: f64,
        height: f64,
        min_size: f64,
    },
    #[error("no font covers {uncovered:?}")]
    NoCoveringFont { uncovered: BTreeSet<char> },
    #[error("nothing to allocate")]
    EmptyText,
    #[error("paragraph has no line boxes")]
    NoLines,
    #[error("invalid size limits {min_size}..{max_size}")]
    InvalidLimits { min_size: f64, max_size: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitLimits {
    pub min_size: f64,
    pub max_size: f64,
}

impl Default for FitLimits {
    fn default() -> Self {
        Self {
            min_size: 6.0,
            max_size: 72.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alignment {
    Left,
    Right,
    Center,
}

#[derive(Debug, Clone)]
pub struct LineAssignment {
    pub line_id: String,
    pub bbox: BoundingBox,
    /// The segment as drawn, without bidi controls.
    pub text: String,
    pub direction: Direction,
    pub font: FontRef,
    pub font_size: f64,
    pub alignment: Alignment,
}

impl LineAssignment {
    /// Measured extent at the assigned size fits the padded box.
    pub fn fits(&self) -> bool {
        fits_box(&self.font, &self.text, self.font_size, &self.bbox)
    }
}

/// Does `text` at `size` fit inside `bbox` minus padding?
pub fn fits_box(font: &FontAsset, text: &str, size: f64, bbox: &BoundingBox) -> bool {
    let (w, h) = font.measure(text, size);
    w <= bbox.width * (1.0 - BOX_PADDING) && h <= bbox.height * (1.0 - BOX_PADDING)
}

/// Candidate sizes `min, min + 0.25, …` not exceeding `max`.
pub fn candidate_sizes(limits: FitLimits) -> Vec<f64> {
    let steps = ((limits.max_size - limits.min_size) / SIZE_STEP + 1e-9).floor() as usize;
    (0..=steps).map(|k| limits.min_size + k as f64 * SIZE_STEP).collect()
}

/// Largest size on the quarter-point grid in `[min, max]` at which `segment`
/// fits `bbox`.
pub fn fit_to_box(
    segment: &str,
    bbox: &BoundingBox,
    font: &FontAsset,
    limits: FitLimits,
) -> Result<f64, ReflowError> {
    if !(limits.min_size > 0.0 && limits.min_size <= limits.max_size) {
        return Err(ReflowError::InvalidLimits {
            min_size: limits.min_size,
            max_size: limits.max_size,
        });
    }
    let advance = font.shape(segment).advance;
    let max_w = bbox.width * (1.0 - BOX_PADDING);
    let max_h = bbox.height * (1.0 - BOX_PADDING);
    let fits = |size: f64| advance * font.scale(size) <= max_w && font.line_height(size) <= max_h;

    let sizes = candidate_sizes(limits);
    if !fits(sizes[0]) {
        return Err(ReflowError::Overflow {
            text: segment.to_string(),
            width: bbox.width,
            height: bbox.height,
            min_size: limits.min_size,
        });
    }
    // Invariant: sizes[lo] fits; sizes[hi] does not (or hi is past the end).
    let (mut lo, mut hi) = (0usize, sizes.len());
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if fits(sizes[mid]) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(sizes[lo])
}

/// The first font in `chain` with a glyph for every non-control character of `text`.
pub fn select_font<'a, F: GlyphCoverage>(text: &str, chain: &'a [F]) -> Result<&'a F, ReflowError> {
    let needed: BTreeSet<char> = text.chars().filter(|&c| !is_layout_control(c)).collect();
    let mut best: Option<BTreeSet<char>> = None;
    for font in chain {
        let missing: BTreeSet<char> = needed.iter().copied().filter(|&c| !font.covers(c)).collect();
        if missing.is_empty() {
            return Ok(font);
        }
        if best.as_ref().is_none_or(|b| missing.len() < b.len()) {
            best = Some(missing);
        }
    }
    Err(ReflowError::NoCoveringFont {
        uncovered: best.unwrap_or(needed),
    })
}

fn opens_run(c: char, base: Direction) -> bool {
    match base {
        Direction::Rtl => is_strong_ltr(c) || bidi_class(c) == BidiClass::EN,
        Direction::Ltr => is_strong_rtl(c),
    }
}

fn blocks_run(c: char, base: Direction) -> bool {
    match base {
        Direction::Rtl => is_strong_rtl(c),
        Direction::Ltr => is_strong_ltr(c),
    }
}

fn attaches_to_number(c: char) -> bool {
    bidi_class(c) == BidiClass::ET
}

/// Wrap `text` in an isolate for `direction`, and isolate every embedded run
/// of the opposite direction (Latin words and digit runs inside Arabic, Arabic
/// inside Latin). Existing bidi controls are removed first. Nesting depth is
/// at most two.
pub fn apply_bidi_controls(text: &str, direction: Direction) -> String {
    let chars: Vec<char> = text.chars().filter(|&c| !is_bidi_control(c)).collect();
    let (outer, inner) = match direction {
        Direction::Rtl => (RLI, LRI),
        Direction::Ltr => (LRI, RLI),
    };

    let mut out = String::with_capacity(text.len() + 8);
    out.push(outer);
    let mut i = 0;
    while i < chars.len() {
        // Segment between blockers: [i, end)
        if blocks_run(chars[i], direction) {
            out.push(chars[i]);
            i += 1;
            continue;
        }
        let mut end = i;
        while end < chars.len() && !blocks_run(chars[end], direction) && chars[end] != '\n' {
            end += 1;
        }
        let seg = &chars[i..end];
        let first = seg.iter().position(|&c| opens_run(c, direction));
        let last = seg.iter().rposition(|&c| opens_run(c, direction));
        match (first, last) {
            (Some(mut a), Some(mut b)) => {
                while a > 0 && attaches_to_number(seg[a - 1]) {
                    a -= 1;
                }
                while b + 1 < seg.len() && attaches_to_number(seg[b + 1]) {
                    b += 1;
                }
                // Abbreviation periods stay with their Latin word.
                while direction.is_rtl() && b + 1 < seg.len() && seg[b + 1] == '.' && is_strong_ltr(seg[b]) {
                    b += 1;
                }
                out.extend(&seg[..a]);
                out.push(inner);
                out.extend(&seg[a..=b]);
                out.push(PDI);
                out.extend(&seg[b + 1..]);
            }
            _ => out.extend(seg),
        }
        if end < chars.len() && chars[end] == '\n' {
            out.push('\n');
            end += 1;
        }
        i = end;
    }
    out.push(PDI);
    out
}

/// Remove bidi formatting characters (the inverse of [`apply_bidi_controls`]
/// on text that had none).
pub fn strip_bidi_controls(text: &str) -> String {
    text.chars().filter(|&c| !is_bidi_control(c)).collect()
}

/// Check isolate pairing with a stack counter; also returns the maximum depth.
pub fn isolate_balance(text: &str) -> Result<usize, usize> {
    let (mut depth, mut max) = (0usize, 0usize);
    for (i, c) in text.chars().enumerate() {
        match c {
            LRI | RLI | FSI => {
                depth += 1;
                max = max.max(depth);
            }
            PDI => {
                if depth == 0 {
                    return Err(i);
                }
                depth -= 1;
            }
            _ => {}
        }
    }
    if depth == 0 {
        Ok(max)
    } else {
        Err(text.chars().count())
    }
}

/// Split `words` into `box_widths.len()` contiguous groups. Each word goes to
/// the box whose share of the total width contains the word's midpoint.
pub fn split_proportional(word_widths: &[f64], space_width: f64, box_widths: &[f64]) -> Vec<usize> {
    let total_text: f64 = word_widths.iter().sum::<f64>() + space_width * word_widths.len().saturating_sub(1) as f64;
    let total_box: f64 = box_widths.iter().sum();
    let mut bounds = Vec::with_capacity(box_widths.len());
    let mut acc = 0.0;
    for w in box_widths {
        acc += w;
        bounds.push(total_text * acc / total_box);
    }
    let mut out = Vec::with_capacity(word_widths.len());
    let mut pos = 0.0;
    let mut current = 0usize;
    for &w in word_widths {
        let mid = pos + w / 2.0;
        while current + 1 < bounds.len() && mid > bounds[current] {
            current += 1;
        }
        out.push(current);
        pos += w + space_width;
    }
    out
}

/// Distribute `translated` over `lines` (reading order) and size each segment.
///
/// Whitespace runs in `translated` collapse to single spaces; lines that
/// receive no words get no assignment.
pub fn allocate_segments(
    lines: &[&OcrLine],
    translated: &str,
    font: &FontRef,
    limits: FitLimits,
) -> Result<Vec<LineAssignment>, ReflowError> {
    if lines.is_empty() {
        return Err(ReflowError::NoLines);
    }
    let words: Vec<&str> = translated.split_whitespace().collect();
    if words.is_empty() {
        return Err(ReflowError::EmptyText);
    }
    let widest = lines.iter().map(|l| l.bbox.width).fold(0.0, f64::max) * (1.0 - BOX_PADDING);
    let word_widths: Vec<f64> = words.iter().map(|w| font.estimate_width(w, limits.min_size)).collect();
    for (w, ww) in words.iter().zip(&word_widths) {
        if *ww > widest {
            return Err(ReflowError::OverflowUnsplittable { word: w.to_string() });
        }
    }
    let space = font.estimate_width(" ", limits.min_size);
    let box_widths: Vec<f64> = lines.iter().map(|l| l.bbox.width).collect();
    let owner = split_proportional(&word_widths, space, &box_widths);

    let direction = majority_direction(translated);
    let alignment = if direction.is_rtl() {
        Alignment::Right
    } else {
        Alignment::Left
    };
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        let seg: Vec<&str> = words
            .iter()
            .zip(&owner)
            .filter(|(_, &o)| o == i)
            .map(|(w, _)| *w)
            .collect();
        if seg.is_empty() {
            continue;
        }
        let text = seg.join(" ");
        let font_size = fit_to_box(&text, &line.bbox, font, limits)?;
        out.push(LineAssignment {
            line_id: line.line_id.clone(),
            bbox: line.bbox,
            text,
            direction,
            font: font.clone(),
            font_size,
            alignment,
        });
    }
    Ok(out)
}
