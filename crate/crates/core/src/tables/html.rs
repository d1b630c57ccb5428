//! A tolerant reader for table markup and the canonical writer.
//!
//! The reader accepts arbitrary HTML around and inside the first table,
//! keeps only table structure, `b`/`i` and text, and repairs unclosed or
//! misnested tags the way a browser would for the common cases.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::TableError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Start {
        name: String,
        attrs: Vec<(String, String)>,
        self_closing: bool,
    },
    End(String),
    Text(String),
    Comment,
}

fn decode_entity(name: &str) -> Option<char> {
    if let Some(num) = name.strip_prefix('#') {
        let v = if let Some(hex) = num.strip_prefix('x').or_else(|| num.strip_prefix('X')) {
            u32::from_str_radix(hex, 16).ok()?
        } else {
            num.parse().ok()?
        };
        return char::from_u32(v);
    }
    Some(match name {
        "amp" => '&',
        "lt" => '<',
        "gt" => '>',
        "quot" => '"',
        "apos" => '\'',
        "nbsp" => '\u{a0}',
        _ => return None,
    })
}

/// Replace character references; unknown ones stay literal.
pub fn decode_entities(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(i) = rest.find('&') {
        out.push_str(&rest[..i]);
        let tail = &rest[i..];
        let end = tail[1..].find(|c: char| !(c.is_ascii_alphanumeric() || c == '#')).map(|e| e + 1);
        match end {
            Some(e) if tail[e..].starts_with(';') && e > 1 => match decode_entity(&tail[1..e]) {
                Some(c) => {
                    out.push(c);
                    rest = &tail[e + 1..];
                }
                None => {
                    out.push('&');
                    rest = &tail[1..];
                }
            },
            _ => {
                out.push('&');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

pub fn escape_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            c => out.push(c),
        }
    }
    out
}

fn parse_attrs(s: &str) -> Vec<(String, String)> {
    let b = s.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        while i < b.len() && (b[i].is_ascii_whitespace() || b[i] == b'/') {
            i += 1;
        }
        let start = i;
        while i < b.len() && !b[i].is_ascii_whitespace() && b[i] != b'=' && b[i] != b'/' {
            i += 1;
        }
        if start == i {
            break;
        }
        let name = s[start..i].to_ascii_lowercase();
        while i < b.len() && b[i].is_ascii_whitespace() {
            i += 1;
        }
        let mut value = String::new();
        if i < b.len() && b[i] == b'=' {
            i += 1;
            while i < b.len() && b[i].is_ascii_whitespace() {
                i += 1;
            }
            if i < b.len() && (b[i] == b'"' || b[i] == b'\'') {
                let q = b[i];
                let vs = i + 1;
                i = vs;
                while i < b.len() && b[i] != q {
                    i += 1;
                }
                value = decode_entities(&s[vs..i]);
                i = (i + 1).min(b.len());
            } else {
                let vs = i;
                while i < b.len() && !b[i].is_ascii_whitespace() {
                    i += 1;
                }
                value = decode_entities(&s[vs..i]);
            }
        }
        out.push((name, value));
    }
    out
}

/// Split markup into tags, text and comments. Never fails; a stray `<` that
/// does not start a tag is text.
pub fn tokenize(html: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut text = String::new();
    let mut rest = html;
    let flush = |text: &mut String, out: &mut Vec<Token>| {
        if !text.is_empty() {
            out.push(Token::Text(decode_entities(text)));
            text.clear();
        }
    };
    while !rest.is_empty() {
        let Some(lt) = rest.find('<') else {
            text.push_str(rest);
            break;
        };
        text.push_str(&rest[..lt]);
        let tail = &rest[lt..];
        if let Some(body) = tail.strip_prefix("<!--") {
            flush(&mut text, &mut out);
            out.push(Token::Comment);
            rest = body.find("-->").map_or("", |e| &body[e + 3..]);
            continue;
        }
        if tail.starts_with("<!") || tail.starts_with("<?") {
            flush(&mut text, &mut out);
            out.push(Token::Comment);
            rest = tail.find('>').map_or("", |e| &tail[e + 1..]);
            continue;
        }
        let closing = tail.starts_with("</");
        let name_start = if closing { 2 } else { 1 };
        let starts_name = tail[name_start..].chars().next().is_some_and(|c| c.is_ascii_alphabetic());
        let Some(gt) = tail.find('>').filter(|_| starts_name) else {
            text.push('<');
            rest = &tail[1..];
            continue;
        };
        flush(&mut text, &mut out);
        let inner = &tail[name_start..gt];
        let name_end = inner
            .find(|c: char| c.is_ascii_whitespace() || c == '/')
            .unwrap_or(inner.len());
        let name = inner[..name_end].to_ascii_lowercase();
        if closing {
            out.push(Token::End(name));
        } else {
            let self_closing = inner.trim_end().ends_with('/');
            out.push(Token::Start {
                attrs: parse_attrs(&inner[name_end..]),
                name,
                self_closing,
            });
        }
        rest = &tail[gt + 1..];
        // Raw-text elements: skip to their end tag.
        if !closing && (inner[..name_end].eq_ignore_ascii_case("script") || inner[..name_end].eq_ignore_ascii_case("style")) {
            let tag = inner[..name_end].to_ascii_lowercase();
            let lower = rest.to_ascii_lowercase();
            let close = format!("</{tag}");
            match lower.find(&close) {
                Some(p) => rest = &rest[p..],
                None => rest = "",
            }
        }
    }
    flush(&mut text, &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InlineTag {
    B,
    I,
}

impl InlineTag {
    fn name(self) -> &'static str {
        match self {
            InlineTag::B => "b",
            InlineTag::I => "i",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Inline {
    Text(String),
    Open(InlineTag),
    Close(InlineTag),
}

/// Collapse HTML whitespace, trim the ends, drop empty text and empty
/// `b`/`i` pairs.
pub fn normalize_inline(items: Vec<Inline>) -> Vec<Inline> {
    let mut out: Vec<Inline> = Vec::with_capacity(items.len());
    let mut last_space = true;
    for it in items {
        match it {
            Inline::Text(t) => {
                let mut s = String::with_capacity(t.len());
                for c in t.chars() {
                    if matches!(c, ' ' | '\t' | '\n' | '\r' | '\x0c') {
                        if !last_space {
                            s.push(' ');
                            last_space = true;
                        }
                    } else {
                        s.push(c);
                        last_space = false;
                    }
                }
                if !s.is_empty() {
                    out.push(Inline::Text(s));
                }
            }
            other => out.push(other),
        }
    }
    if let Some(Inline::Text(t)) = out.iter_mut().rev().find(|i| matches!(i, Inline::Text(_))) {
        if t.ends_with(' ') {
            t.pop();
        }
    }
    out.retain(|i| !matches!(i, Inline::Text(t) if t.is_empty()));
    loop {
        let pos = out
            .windows(2)
            .position(|w| matches!((&w[0], &w[1]), (Inline::Open(a), Inline::Close(b)) if a == b));
        match pos {
            Some(p) => {
                out.drain(p..p + 2);
            }
            None => break,
        }
    }
    // Removing an empty pair can join two text runs.
    let mut merged: Vec<Inline> = Vec::with_capacity(out.len());
    for it in out {
        match (merged.last_mut(), it) {
            (Some(Inline::Text(a)), Inline::Text(b)) => a.push_str(&b),
            (_, it) => merged.push(it),
        }
    }
    merged
}

pub fn plain_text(items: &[Inline]) -> String {
    items
        .iter()
        .filter_map(|i| match i {
            Inline::Text(t) => Some(t.as_str()),
            _ => None,
        })
        .collect()
}

fn write_inline(out: &mut String, items: &[Inline]) {
    for it in items {
        match it {
            Inline::Text(t) => out.push_str(&escape_text(t)),
            Inline::Open(t) => write!(out, "<{}>", t.name()).unwrap(),
            Inline::Close(t) => write!(out, "</{}>", t.name()).unwrap(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SectionKind {
    Head,
    Body,
    Foot,
}

impl SectionKind {
    pub fn tag(self) -> &'static str {
        match self {
            SectionKind::Head => "thead",
            SectionKind::Body => "tbody",
            SectionKind::Foot => "tfoot",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HtmlCell {
    pub header: bool,
    pub rowspan: usize,
    pub colspan: usize,
    pub content: Vec<Inline>,
}

impl HtmlCell {
    pub fn text(&self) -> String {
        plain_text(&self.content)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HtmlSection {
    pub kind: SectionKind,
    pub rows: Vec<Vec<HtmlCell>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct HtmlTable {
    pub caption: Option<Vec<Inline>>,
    pub sections: Vec<HtmlSection>,
}

/// Rectangle owned by one cell of the logical grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellSpan {
    pub row: usize,
    pub col: usize,
    pub row_span: usize,
    pub col_span: usize,
}

impl CellSpan {
    pub fn area(&self) -> usize {
        self.row_span * self.col_span
    }

    pub fn contains(&self, r: usize, c: usize) -> bool {
        r >= self.row && r < self.row + self.row_span && c >= self.col && c < self.col + self.col_span
    }

    pub fn overlaps(&self, o: &CellSpan) -> bool {
        self.row < o.row + o.row_span
            && o.row < self.row + self.row_span
            && self.col < o.col + o.col_span
            && o.col < self.col + self.col_span
    }
}

/// A rows × cols matrix in which every position names its owning cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalGrid {
    pub rows: usize,
    pub cols: usize,
    /// Cells in row-major order of their top-left corner.
    pub cells: Vec<CellSpan>,
}

impl LogicalGrid {
    /// `owner[r][c]` is the index into `cells`, `None` for a hole.
    pub fn owners(&self) -> Vec<Vec<Option<usize>>> {
        let mut m = vec![vec![None; self.cols]; self.rows];
        for (i, s) in self.cells.iter().enumerate() {
            for row in m.iter_mut().skip(s.row).take(s.row_span) {
                for slot in row.iter_mut().skip(s.col).take(s.col_span) {
                    *slot = Some(i);
                }
            }
        }
        m
    }

    pub fn covered_area(&self) -> usize {
        self.cells.iter().map(CellSpan::area).sum()
    }

    /// Every position owned by exactly one cell.
    pub fn is_complete(&self) -> bool {
        self.covered_area() == self.rows * self.cols && self.owners().iter().flatten().all(Option::is_some)
    }
}

impl HtmlTable {
    pub fn rows(&self) -> impl Iterator<Item = &Vec<HtmlCell>> {
        self.sections.iter().flat_map(|s| s.rows.iter())
    }

    pub fn cells(&self) -> impl Iterator<Item = &HtmlCell> {
        self.rows().flatten()
    }

    /// Lay cells out by the HTML table model. Row spans stop at the end of
    /// their section.
    pub fn logical_grid(&self) -> Result<(LogicalGrid, Vec<usize>), TableError> {
        let mut occupied: Vec<Vec<bool>> = Vec::new();
        let mut cells = Vec::new();
        let mut order = Vec::new();
        let mut r0 = 0usize;
        let mut idx = 0usize;
        for section in &self.sections {
            let n = section.rows.len();
            for (k, row) in section.rows.iter().enumerate() {
                let r = r0 + k;
                if occupied.len() <= r {
                    occupied.resize(r + 1, Vec::new());
                }
                let mut c = 0usize;
                for cell in row {
                    while occupied[r].get(c).copied().unwrap_or(false) {
                        c += 1;
                    }
                    let rs = cell.rowspan.max(1).min(n - k);
                    let cs = cell.colspan.max(1);
                    for rr in r..r + rs {
                        if occupied.len() <= rr {
                            occupied.resize(rr + 1, Vec::new());
                        }
                        let line = &mut occupied[rr];
                        if line.len() < c + cs {
                            line.resize(c + cs, false);
                        }
                        for slot in &mut line[c..c + cs] {
                            if *slot {
                                return Err(TableError::Parse(format!("overlapping cells at row {rr}")));
                            }
                            *slot = true;
                        }
                    }
                    cells.push(CellSpan {
                        row: r,
                        col: c,
                        row_span: rs,
                        col_span: cs,
                    });
                    order.push(idx);
                    idx += 1;
                    c += cs;
                }
            }
            r0 += n;
        }
        let rows = r0;
        let cols = occupied.iter().map(Vec::len).max().unwrap_or(0);
        let mut pairs: Vec<(CellSpan, usize)> = cells.into_iter().zip(order).collect();
        pairs.sort();
        let (cells, order) = pairs.into_iter().unzip();
        Ok((LogicalGrid { rows, cols, cells }, order))
    }

    pub fn to_html(&self) -> String {
        let mut out = String::from("<table>");
        if let Some(cap) = &self.caption {
            out.push_str("<caption>");
            write_inline(&mut out, cap);
            out.push_str("</caption>");
        }
        for s in &self.sections {
            write!(out, "<{}>", s.kind.tag()).unwrap();
            for row in &s.rows {
                out.push_str("<tr>");
                for cell in row {
                    let tag = if cell.header { "th" } else { "td" };
                    write!(out, "<{tag}").unwrap();
                    if cell.colspan > 1 {
                        write!(out, " colspan=\"{}\"", cell.colspan).unwrap();
                    }
                    if cell.rowspan > 1 {
                        write!(out, " rowspan=\"{}\"", cell.rowspan).unwrap();
                    }
                    out.push('>');
                    write_inline(&mut out, &cell.content);
                    write!(out, "</{tag}>").unwrap();
                }
                out.push_str("</tr>");
            }
            write!(out, "</{}>", s.kind.tag()).unwrap();
        }
        out.push_str("</table>");
        out
    }
}

const MAX_SPAN: usize = 1000;

fn span_attr(attrs: &[(String, String)], name: &str) -> usize {
    attrs
        .iter()
        .find(|(k, _)| k == name)
        .and_then(|(_, v)| {
            let digits: String = v.trim().chars().take_while(char::is_ascii_digit).collect();
            digits.parse::<usize>().ok()
        })
        .filter(|&n| n >= 1)
        .map_or(1, |n| n.min(MAX_SPAN))
}

#[derive(Default)]
struct Builder {
    table: HtmlTable,
    section: Option<HtmlSection>,
    row: Option<Vec<HtmlCell>>,
    cell: Option<HtmlCell>,
    caption: Option<Vec<Inline>>,
    inline_stack: Vec<InlineTag>,
}

impl Builder {
    fn sink(&mut self) -> Option<&mut Vec<Inline>> {
        if let Some(c) = self.cell.as_mut() {
            Some(&mut c.content)
        } else {
            self.caption.as_mut()
        }
    }

    fn close_inline(&mut self) {
        while let Some(t) = self.inline_stack.pop() {
            if let Some(s) = self.sink() {
                s.push(Inline::Close(t));
            }
        }
    }

    fn close_cell(&mut self) {
        self.close_inline();
        if let Some(mut c) = self.cell.take() {
            c.content = normalize_inline(std::mem::take(&mut c.content));
            self.row.get_or_insert_with(Vec::new).push(c);
        }
    }

    fn close_caption(&mut self) {
        self.close_inline();
        if let Some(c) = self.caption.take() {
            if self.table.caption.is_none() {
                self.table.caption = Some(normalize_inline(c));
            }
        }
    }

    fn close_row(&mut self) {
        self.close_cell();
        if let Some(r) = self.row.take() {
            self.section
                .get_or_insert_with(|| HtmlSection {
                    kind: SectionKind::Body,
                    rows: Vec::new(),
                })
                .rows
                .push(r);
        }
    }

    fn close_section(&mut self) {
        self.close_row();
        if let Some(s) = self.section.take() {
            self.table.sections.push(s);
        }
    }

    fn start(&mut self, name: &str, attrs: &[(String, String)]) {
        match name {
            "caption" => {
                self.close_section();
                self.close_caption();
                self.caption = Some(Vec::new());
            }
            "thead" | "tbody" | "tfoot" => {
                self.close_caption();
                self.close_section();
                let kind = match name {
                    "thead" => SectionKind::Head,
                    "tfoot" => SectionKind::Foot,
                    _ => SectionKind::Body,
                };
                self.section = Some(HtmlSection { kind, rows: Vec::new() });
            }
            "tr" => {
                self.close_caption();
                self.close_row();
                self.row = Some(Vec::new());
            }
            "td" | "th" => {
                self.close_caption();
                self.close_cell();
                self.cell = Some(HtmlCell {
                    header: name == "th",
                    rowspan: span_attr(attrs, "rowspan"),
                    colspan: span_attr(attrs, "colspan"),
                    content: Vec::new(),
                });
            }
            "b" | "strong" | "i" | "em" => {
                let tag = if matches!(name, "b" | "strong") { InlineTag::B } else { InlineTag::I };
                if let Some(s) = self.sink() {
                    s.push(Inline::Open(tag));
                    self.inline_stack.push(tag);
                }
            }
            "br" => self.text(" "),
            _ => {}
        }
    }

    fn end(&mut self, name: &str) {
        match name {
            "caption" => self.close_caption(),
            "thead" | "tbody" | "tfoot" => self.close_section(),
            "tr" => self.close_row(),
            "td" | "th" => self.close_cell(),
            "b" | "strong" | "i" | "em" => {
                let tag = if matches!(name, "b" | "strong") { InlineTag::B } else { InlineTag::I };
                if self.inline_stack.contains(&tag) {
                    while let Some(t) = self.inline_stack.pop() {
                        if let Some(s) = self.sink() {
                            s.push(Inline::Close(t));
                        }
                        if t == tag {
                            break;
                        }
                    }
                }
            }
            _ => {}
        }
    }

    fn text(&mut self, t: &str) {
        if let Some(s) = self.sink() {
            s.push(Inline::Text(t.to_string()));
        }
    }

    fn finish(mut self) -> HtmlTable {
        self.close_caption();
        self.close_section();
        self.table
    }
}

/// Parse the first table in `html`, keeping only structure and visible text.
pub fn parse_table(html: &str) -> Result<HtmlTable, TableError> {
    let tokens = tokenize(html);
    let start = tokens
        .iter()
        .position(|t| matches!(t, Token::Start { name, .. } if name == "table"))
        .ok_or(TableError::NoTableFound)?;
    let mut b = Builder::default();
    let mut depth = 0usize;
    for t in &tokens[start + 1..] {
        match t {
            Token::Start { name, attrs, self_closing } => {
                if name == "table" {
                    depth += 1;
                    continue;
                }
                b.start(name, attrs);
                if *self_closing && name != "br" {
                    b.end(name);
                }
            }
            Token::End(name) => {
                if name == "table" {
                    if depth == 0 {
                        break;
                    }
                    depth -= 1;
                    continue;
                }
                b.end(name);
            }
            Token::Text(s) => b.text(s),
            Token::Comment => {}
        }
    }
    Ok(b.finish())
}

/// Reduce arbitrary table markup to the canonical subset.
pub fn normalize_table_html(html: &str) -> Result<String, TableError> {
    Ok(parse_table(html)?.to_html())
}
