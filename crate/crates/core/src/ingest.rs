//! Line-level OCR annotations: the document model and its JSON reader.
//!
//! The on-disk schema is
//!
//! ```text
//! {"doc_id": str, "lang": str,
//!  "pages": [{"index": int, "w": int, "h": int, "background": str|null,
//!             "lines": [{"id": str, "text": str, "bbox": [x, y, w, h]}]}]}
//! ```
//!
//! Coordinates are absolute pixels of the source raster, origin top-left.
//! Text is NFC-normalized on the way in. Geometry is never clamped: a box
//! that leaves its page rejects the document.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("geometry error: {0}")]
    GeometryError(String),
}

/// Axis-aligned box in page units, origin top-left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, width: f64, height: f64) -> Self {
        Self {
            x,
            y,
            width,
            height,
        }
    }

    pub fn right(&self) -> f64 {
        self.x + self.width
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.height
    }

    /// Tight bounding rectangle of `boxes`; `None` when empty.
    pub fn union_all<'a>(boxes: impl IntoIterator<Item = &'a BoundingBox>) -> Option<BoundingBox> {
        let mut it = boxes.into_iter();
        let first = *it.next()?;
        let (mut x0, mut y0, mut x1, mut y1) = (first.x, first.y, first.right(), first.bottom());
        for b in it {
            x0 = x0.min(b.x);
            y0 = y0.min(b.y);
            x1 = x1.max(b.right());
            y1 = y1.max(b.bottom());
        }
        Some(BoundingBox::new(x0, y0, x1 - x0, y1 - y0))
    }

    pub fn translated(&self, dx: f64, dy: f64) -> BoundingBox {
        BoundingBox::new(self.x + dx, self.y + dy, self.width, self.height)
    }

    fn as_array(&self) -> [f64; 4] {
        [self.x, self.y, self.width, self.height]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcrLine {
    pub line_id: String,
    pub text: String,
    pub bbox: BoundingBox,
}

impl OcrLine {
    /// The line's baseline, taken as the bottom edge of its box.
    pub fn baseline_y(&self) -> f64 {
        self.bbox.y + self.bbox.height
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageAnnotation {
    pub page_index: usize,
    pub width: u32,
    pub height: u32,
    pub background_ref: Option<String>,
    pub lines: Vec<OcrLine>,
}

impl PageAnnotation {
    pub fn line(&self, id: &str) -> Option<&OcrLine> {
        self.lines.iter().find(|l| l.line_id == id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocumentAnnotation {
    pub doc_id: String,
    pub source_language: String,
    pub pages: Vec<PageAnnotation>,
}

/// Which page invariant an [`Issue`] reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    NonPositiveSize,
    NegativeOrigin,
    OutsidePage,
    DuplicateId,
    EmptyText,
}

impl Rule {
    fn is_geometry(self) -> bool {
        matches!(
            self,
            Rule::NonPositiveSize | Rule::NegativeOrigin | Rule::OutsidePage
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub line_id: String,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {:?}: {}", self.line_id, self.rule, self.detail)
    }
}

/// Check every page invariant. Returns an empty list iff the page is valid.
///
/// Each line contributes at most one geometry issue (size, then origin, then
/// page bounds); duplicate ids are reported on the second and later
/// occurrences.
pub fn validate_page(page: &PageAnnotation) -> Vec<Issue> {
    let mut issues = Vec::new();
    let mut seen = HashSet::new();
    let (w, h) = (page.width as f64, page.height as f64);
    for line in &page.lines {
        let b = &line.bbox;
        let geometry = if !(b.width > 0.0 && b.height > 0.0) {
            Some((
                Rule::NonPositiveSize,
                format!("size {}x{} is not positive", b.width, b.height),
            ))
        } else if !(b.x >= 0.0 && b.y >= 0.0) {
            Some((
                Rule::NegativeOrigin,
                format!("origin ({}, {}) is negative", b.x, b.y),
            ))
        } else if b.right() > w || b.bottom() > h {
            Some((
                Rule::OutsidePage,
                format!("box [{}, {}, {}, {}] leaves page {w}x{h}", b.x, b.y, b.width, b.height),
            ))
        } else {
            None
        };
        if let Some((rule, detail)) = geometry {
            issues.push(Issue {
                line_id: line.line_id.clone(),
                rule,
                detail,
            });
        }
        if !seen.insert(line.line_id.as_str()) {
            issues.push(Issue {
                line_id: line.line_id.clone(),
                rule: Rule::DuplicateId,
                detail: "line id already used on this page".into(),
            });
        }
        if line.text.trim().is_empty() {
            issues.push(Issue {
                line_id: line.line_id.clone(),
                rule: Rule::EmptyText,
                detail: "text is empty after trimming".into(),
            });
        }
    }
    issues
}

#[derive(Debug, Serialize, Deserialize)]
struct RawDocument {
    doc_id: String,
    lang: String,
    pages: Vec<RawPage>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawPage {
    index: usize,
    w: u32,
    h: u32,
    #[serde(default)]
    background: Option<String>,
    lines: Vec<RawLine>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawLine {
    id: String,
    text: String,
    bbox: [f64; 4],
}

/// Parse and validate an annotation file. Dropped empty lines are logged.
pub fn parse_ocr_annotations(raw: &[u8]) -> Result<DocumentAnnotation, IngestError> {
    let (doc, warnings) = parse_ocr_annotations_with_issues(raw)?;
    for w in &warnings {
        log::warn!("{}: {w}", doc.doc_id);
    }
    Ok(doc)
}

/// Like [`parse_ocr_annotations`], also returning the warning issues for
/// lines that were dropped because their text was empty.
pub fn parse_ocr_annotations_with_issues(
    raw: &[u8],
) -> Result<(DocumentAnnotation, Vec<Issue>), IngestError> {
    let text = std::str::from_utf8(raw)
        .map_err(|e| IngestError::MalformedInput(format!("not UTF-8: {e}")))?;
    let doc: RawDocument = serde_json::from_str(text).map_err(|e| {
        use serde_json::error::Category;
        match e.classify() {
            Category::Data => IngestError::SchemaViolation(e.to_string()),
            _ => IngestError::MalformedInput(e.to_string()),
        }
    })?;
    if doc.pages.is_empty() {
        return Err(IngestError::SchemaViolation("document has no pages".into()));
    }

    let mut warnings = Vec::new();
    let mut pages = Vec::with_capacity(doc.pages.len());
    for (expected, raw_page) in doc.pages.into_iter().enumerate() {
        if raw_page.index != expected {
            return Err(IngestError::SchemaViolation(format!(
                "page index {} found where {expected} was expected",
                raw_page.index
            )));
        }
        if raw_page.w == 0 || raw_page.h == 0 {
            return Err(IngestError::GeometryError(format!(
                "page {expected} has size {}x{}",
                raw_page.w, raw_page.h
            )));
        }
        let mut lines = Vec::with_capacity(raw_page.lines.len());
        for l in raw_page.lines {
            let [x, y, w, h] = l.bbox;
            let line = OcrLine {
                line_id: l.id,
                text: l.text.nfc().collect(),
                bbox: BoundingBox::new(x, y, w, h),
            };
            if line.text.trim().is_empty() {
                warnings.push(Issue {
                    line_id: line.line_id,
                    rule: Rule::EmptyText,
                    detail: format!("dropped from page {expected}"),
                });
                continue;
            }
            lines.push(line);
        }
        let page = PageAnnotation {
            page_index: expected,
            width: raw_page.w,
            height: raw_page.h,
            background_ref: raw_page.background,
            lines,
        };
        if let Some(issue) = validate_page(&page).into_iter().next() {
            let msg = format!("page {expected}: {issue}");
            return Err(if issue.rule.is_geometry() {
                IngestError::GeometryError(msg)
            } else {
                IngestError::SchemaViolation(msg)
            });
        }
        pages.push(page);
    }

    Ok((
        DocumentAnnotation {
            doc_id: doc.doc_id,
            source_language: doc.lang,
            pages,
        },
        warnings,
    ))
}

/// Write a document back out in the input schema.
pub fn serialize_document(doc: &DocumentAnnotation) -> String {
    let raw = RawDocument {
        doc_id: doc.doc_id.clone(),
        lang: doc.source_language.clone(),
        pages: doc
            .pages
            .iter()
            .map(|p| RawPage {
                index: p.page_index,
                w: p.width,
                h: p.height,
                background: p.background_ref.clone(),
                lines: p
                    .lines
                    .iter()
                    .map(|l| RawLine {
                        id: l.line_id.clone(),
                        text: l.text.clone(),
                        bbox: l.bbox.as_array(),
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&raw).expect("document serializes")
}

/// One page of an IDL-style record: parallel `text` / `bbox` arrays with
/// boxes given as `[left, top, width, height]`, either normalized to the
/// page (0..1) or in pixels.
#[derive(Debug, Clone, Deserialize)]
pub struct IdlPage {
    pub text: Vec<String>,
    pub bbox: Vec<[f64; 4]>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct IdlRecord {
    pub pages: Vec<IdlPage>,
}

/// Map an IDL-style record into the normalized schema.
///
/// `page_size` is the pixel size of the rendered page; when `normalized` is
/// set, boxes are scaled by it. Line ids are `p{page}-l{line}`.
pub fn convert_idl_record(
    doc_id: &str,
    lang: &str,
    record: &IdlRecord,
    page_size: (u32, u32),
    normalized: bool,
) -> Result<DocumentAnnotation, IngestError> {
    let (pw, ph) = page_size;
    let mut raw = RawDocument {
        doc_id: doc_id.to_string(),
        lang: lang.to_string(),
        pages: Vec::new(),
    };
    for (pi, page) in record.pages.iter().enumerate() {
        if page.text.len() != page.bbox.len() {
            return Err(IngestError::SchemaViolation(format!(
                "page {pi}: {} texts but {} boxes",
                page.text.len(),
                page.bbox.len()
            )));
        }
        let (sx, sy) = if normalized {
            (pw as f64, ph as f64)
        } else {
            (1.0, 1.0)
        };
        raw.pages.push(RawPage {
            index: pi,
            w: pw,
            h: ph,
            background: None,
            lines: page
                .text
                .iter()
                .zip(&page.bbox)
                .enumerate()
                .map(|(li, (t, b))| RawLine {
                    id: format!("p{pi}-l{li}"),
                    text: t.clone(),
                    bbox: [b[0] * sx, b[1] * sy, b[2] * sx, b[3] * sy],
                })
                .collect(),
        });
    }
    let json = serde_json::to_vec(&raw).expect("record serializes");
    parse_ocr_annotations(&json)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_line(bbox: &str) -> String {
        format!(
            r#"{{"doc_id":"d","lang":"en","pages":[{{"index":0,"w":200,"h":100,"background":null,
               "lines":[{{"id":"l1","text":"abc","bbox":{bbox}}}]}}]}}"#
        )
    }

    #[test]
    fn parses_single_line() {
        let doc = parse_ocr_annotations(one_line("[10,10,100,20]").as_bytes()).unwrap();
        assert_eq!(doc.pages.len(), 1);
        assert_eq!(doc.pages[0].lines.len(), 1);
        assert_eq!(doc.pages[0].lines[0].baseline_y(), 30.0);
    }

    #[test]
    fn zero_width_is_geometry_error() {
        let err = parse_ocr_annotations(one_line("[10,10,0,20]").as_bytes()).unwrap_err();
        assert!(matches!(err, IngestError::GeometryError(_)), "{err}");
    }

    #[test]
    fn box_outside_page_is_rejected() {
        let err = parse_ocr_annotations(one_line("[150,10,100,20]").as_bytes()).unwrap_err();
        assert!(matches!(err, IngestError::GeometryError(_)));
    }

    #[test]
    fn error_categories() {
        assert!(matches!(
            parse_ocr_annotations(b"{not json").unwrap_err(),
            IngestError::MalformedInput(_)
        ));
        assert!(matches!(
            parse_ocr_annotations(br#"{"doc_id":"d","pages":[]}"#).unwrap_err(),
            IngestError::SchemaViolation(_)
        ));
        assert!(matches!(
            parse_ocr_annotations(one_line(r#""oops""#).as_bytes()).unwrap_err(),
            IngestError::SchemaViolation(_)
        ));
        assert!(matches!(
            parse_ocr_annotations(&[0xff, 0xfe]).unwrap_err(),
            IngestError::MalformedInput(_)
        ));
    }

    #[test]
    fn text_is_nfc_normalized() {
        // "e" + combining acute becomes the precomposed form.
        let raw = one_line("[1,1,10,10]").replace("abc", "e\u{301}");
        let doc = parse_ocr_annotations(raw.as_bytes()).unwrap();
        assert_eq!(doc.pages[0].lines[0].text, "\u{e9}");
    }

    #[test]
    fn empty_lines_are_dropped_with_warning() {
        let raw = r#"{"doc_id":"d","lang":"en","pages":[{"index":0,"w":200,"h":100,
            "lines":[{"id":"a","text":"  ","bbox":[1,1,5,5]},{"id":"b","text":"x","bbox":[1,10,5,5]}]}]}"#;
        let (doc, warnings) = parse_ocr_annotations_with_issues(raw.as_bytes()).unwrap();
        assert_eq!(doc.pages[0].lines.len(), 1);
        assert_eq!(warnings.len(), 1);
        assert_eq!(warnings[0].rule, Rule::EmptyText);
        assert_eq!(warnings[0].line_id, "a");
    }

    #[test]
    fn page_indices_must_be_contiguous() {
        let raw = r#"{"doc_id":"d","lang":"en","pages":[{"index":1,"w":10,"h":10,"lines":[]}]}"#;
        assert!(matches!(
            parse_ocr_annotations(raw.as_bytes()).unwrap_err(),
            IngestError::SchemaViolation(_)
        ));
    }

    fn page_with(lines: Vec<OcrLine>) -> PageAnnotation {
        PageAnnotation {
            page_index: 0,
            width: 100,
            height: 100,
            background_ref: None,
            lines,
        }
    }

    fn line(id: &str, b: [f64; 4]) -> OcrLine {
        OcrLine {
            line_id: id.into(),
            text: "t".into(),
            bbox: BoundingBox::new(b[0], b[1], b[2], b[3]),
        }
    }

    #[test]
    fn valid_page_has_no_issues() {
        let page = page_with(vec![line("a", [0.0, 0.0, 10.0, 10.0]), line("b", [90.0, 90.0, 10.0, 10.0])]);
        assert!(validate_page(&page).is_empty());
    }

    #[test]
    fn duplicate_id_reported_once() {
        let page = page_with(vec![line("a", [0.0, 0.0, 10.0, 10.0]), line("a", [0.0, 20.0, 10.0, 10.0])]);
        let issues = validate_page(&page);
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].rule, Rule::DuplicateId);
        assert_eq!(issues[0].line_id, "a");
    }

    #[test]
    fn idl_conversion_scales_normalized_boxes() {
        let rec: IdlRecord = serde_json::from_str(
            r#"{"pages":[{"text":["hello","world"],"bbox":[[0.1,0.1,0.5,0.05],[0.1,0.2,0.4,0.05]]}]}"#,
        )
        .unwrap();
        let doc = convert_idl_record("x", "en", &rec, (1000, 2000), true).unwrap();
        let l = &doc.pages[0].lines[1];
        assert_eq!(l.line_id, "p0-l1");
        assert_eq!(l.bbox.width, 400.0);
        assert_eq!(l.bbox.y, 400.0);
    }
}
