//! A converter for the common subset of LaTeX `tabular` markup, and a writer
//! that produces such markup from a table spec.
//!
//! Accepted inside the environment: `&`, `\\`, `\hline`, booktabs rules,
//! `\cline`, `\multicolumn`, `\multirow`, `\textbf`, `\textit`/`\emph`,
//! text escapes, inline math with a few symbols, and size declarations.
//! Anything else is reported as unsupported rather than guessed at.

use std::fmt::Write as _;

use super::html::{normalize_inline, HtmlCell, HtmlSection, HtmlTable, Inline, InlineTag, SectionKind};
use super::spec::TableSpec;
use super::{TableError, TableGroundTruth};

const RULES: &[&str] = &["hline", "toprule", "midrule", "bottomrule", "cline", "cmidrule", "addlinespace"];

const DECLARATIONS: &[&str] = &[
    "small",
    "footnotesize",
    "scriptsize",
    "tiny",
    "large",
    "Large",
    "normalsize",
    "centering",
    "raggedright",
    "raggedleft",
    "bfseries",
    "itshape",
    "hfill",
    "relax",
    "null",
];

const TRANSPARENT: &[&str] = &["textrm", "textsf", "texttt", "textnormal", "textup", "mbox", "text", "mathrm", "mathbf", "makecell"];

fn symbol(name: &str) -> Option<&'static str> {
    Some(match name {
        "textasciitilde" => "~",
        "textasciicircum" => "^",
        "textbackslash" => "\\",
        "ldots" | "dots" | "textellipsis" => "…",
        "textdegree" => "°",
        "pm" => "±",
        "times" => "×",
        "cdot" => "·",
        "le" | "leq" => "≤",
        "ge" | "geq" => "≥",
        "approx" => "≈",
        "sim" => "∼",
        "checkmark" => "✓",
        "textemdash" => "—",
        "textendash" => "–",
        "S" => "§",
        "textpercent" => "%",
        _ => return None,
    })
}

/// Character-level cursor over LaTeX source.
struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(s: &'a str) -> Self {
        Self { s, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.s[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    /// Command name after a backslash: letters, or a single other character.
    fn command(&mut self) -> String {
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() => {
                while self.peek().is_some_and(|c| c.is_ascii_alphabetic()) {
                    self.bump();
                }
                if self.peek() == Some('*') {
                    self.bump();
                }
            }
            Some(_) => {
                self.bump();
            }
            None => {}
        }
        self.s[start..self.pos].to_string()
    }

    /// A `{…}` group (after optional whitespace); returns its inside.
    fn group(&mut self) -> Result<&'a str, TableError> {
        self.skip_ws();
        if self.peek() != Some('{') {
            // A single token argument such as `\multirow2*x` is legal LaTeX.
            let start = self.pos;
            match self.bump() {
                Some('\\') => {
                    self.command();
                }
                Some(_) => {}
                None => return Err(TableError::Parse("missing argument".into())),
            }
            return Ok(&self.s[start..self.pos]);
        }
        self.bump();
        let start = self.pos;
        let mut depth = 1;
        while let Some(c) = self.bump() {
            match c {
                '\\' => {
                    self.bump();
                }
                '{' => depth += 1,
                '}' => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(&self.s[start..self.pos - 1]);
                    }
                }
                _ => {}
            }
        }
        Err(TableError::Parse("unbalanced braces".into()))
    }

    /// An optional `[…]` argument.
    fn optional(&mut self) -> Option<&'a str> {
        let save = self.pos;
        self.skip_ws();
        if self.peek() != Some('[') {
            self.pos = save;
            return None;
        }
        self.bump();
        let start = self.pos;
        while let Some(c) = self.bump() {
            if c == ']' {
                return Some(&self.s[start..self.pos - 1]);
            }
        }
        self.pos = save;
        None
    }

    /// An optional `(…)` argument, as used by `\cmidrule`.
    fn parens(&mut self) {
        let save = self.pos;
        self.skip_ws();
        if self.peek() == Some('(') {
            while let Some(c) = self.bump() {
                if c == ')' {
                    return;
                }
            }
        }
        self.pos = save;
    }
}

/// Convert cell or caption content to inline items.
pub fn latex_inline(src: &str) -> Result<Vec<Inline>, TableError> {
    let mut out = Vec::new();
    inline_into(src, &mut out, false)?;
    Ok(normalize_inline(out))
}

fn push_text(out: &mut Vec<Inline>, s: &str) {
    if let Some(Inline::Text(t)) = out.last_mut() {
        t.push_str(s);
    } else {
        out.push(Inline::Text(s.to_string()));
    }
}

fn inline_into(src: &str, out: &mut Vec<Inline>, mut math: bool) -> Result<(), TableError> {
    let mut cur = Cursor::new(src);
    while let Some(c) = cur.bump() {
        match c {
            '\\' => {
                let name = cur.command();
                match name.as_str() {
                    "%" | "&" | "$" | "#" | "_" | "{" | "}" => push_text(out, &name),
                    " " | "," | ";" | ":" | "\\" | "quad" | "qquad" | "newline" => push_text(out, " "),
                    "!" | "/" | "-" => {}
                    "textbf" | "textit" | "emph" => {
                        let tag = if name == "textbf" { InlineTag::B } else { InlineTag::I };
                        let arg = cur.group()?;
                        out.push(Inline::Open(tag));
                        inline_into(arg, out, math)?;
                        out.push(Inline::Close(tag));
                    }
                    n if TRANSPARENT.contains(&n) => {
                        cur.optional();
                        let arg = cur.group()?;
                        inline_into(arg, out, math)?;
                    }
                    n if DECLARATIONS.contains(&n) => {}
                    n => match symbol(n) {
                        Some(s) => push_text(out, s),
                        None => return Err(TableError::UnsupportedConstruct(format!("\\{n}"))),
                    },
                }
            }
            '{' | '}' => {}
            '$' => math = !math,
            '~' if !math => push_text(out, " "),
            '^' | '_' if math => {}
            c => {
                let mut buf = [0u8; 4];
                push_text(out, c.encode_utf8(&mut buf));
            }
        }
    }
    Ok(())
}

fn strip_comments(src: &str) -> String {
    src.lines()
        .map(|line| {
            let b = line.as_bytes();
            let mut cut = line.len();
            let mut i = 0;
            while i < b.len() {
                if b[i] == b'\\' {
                    i += 2;
                    continue;
                }
                if b[i] == b'%' {
                    cut = i;
                    break;
                }
                i += 1;
            }
            &line[..cut]
        })
        .collect::<Vec<_>>()
        .join("\n")
}

struct RawRow {
    rule_before: bool,
    cells: Vec<String>,
}

/// Split the environment body into rows and cells at brace depth zero.
fn split_rows(body: &str) -> Result<(Vec<RawRow>, bool), TableError> {
    let mut segments: Vec<String> = Vec::new();
    let mut cur = Cursor::new(body);
    let mut seg_start = 0;
    let mut depth = 0i32;
    while let Some(c) = cur.bump() {
        match c {
            '\\' => {
                let at = cur.pos - 1;
                let name = cur.command();
                if depth == 0 && (name == "\\" || name == "tabularnewline") {
                    segments.push(body[seg_start..at].to_string());
                    cur.optional();
                    seg_start = cur.pos;
                }
            }
            '{' => depth += 1,
            '}' => depth -= 1,
            _ => {}
        }
    }
    segments.push(body[seg_start..].to_string());

    let mut rows = Vec::new();
    let mut pending_rule = false;
    for seg in segments {
        let mut cur = Cursor::new(&seg);
        loop {
            cur.skip_ws();
            let save = cur.pos;
            if cur.bump() == Some('\\') {
                let name = cur.command();
                if RULES.contains(&name.as_str()) {
                    pending_rule = true;
                    cur.optional();
                    cur.parens();
                    if matches!(name.as_str(), "cline" | "cmidrule") {
                        cur.group()?;
                    }
                    continue;
                }
            }
            cur.pos = save;
            break;
        }
        let content = cur.rest();
        if content.trim().is_empty() {
            continue;
        }
        let mut cells = Vec::new();
        let mut c2 = Cursor::new(content);
        let mut start = 0;
        let mut depth = 0i32;
        while let Some(c) = c2.bump() {
            match c {
                '\\' => {
                    c2.command();
                }
                '{' => depth += 1,
                '}' => depth -= 1,
                '&' if depth == 0 => {
                    cells.push(content[start..c2.pos - 1].to_string());
                    start = c2.pos;
                }
                _ => {}
            }
        }
        cells.push(content[start..].to_string());
        rows.push(RawRow {
            rule_before: pending_rule,
            cells,
        });
        pending_rule = false;
    }
    Ok((rows, pending_rule))
}

struct ParsedCell {
    rowspan: usize,
    colspan: usize,
    content: Vec<Inline>,
}

fn span_number(s: &str) -> Result<usize, TableError> {
    s.trim()
        .parse::<usize>()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| TableError::Parse(format!("bad span {s:?}")))
}

fn parse_cell(src: &str) -> Result<ParsedCell, TableError> {
    let t = src.trim();
    let mut cur = Cursor::new(t);
    if cur.bump() == Some('\\') {
        let name = cur.command();
        match name.as_str() {
            "multicolumn" => {
                let n = span_number(cur.group()?)?;
                cur.group()?;
                let inner = cur.group()?;
                if !cur.rest().trim().is_empty() {
                    return Err(TableError::Parse(format!("text after \\multicolumn: {:?}", cur.rest())));
                }
                let mut cell = parse_cell(inner)?;
                cell.colspan = n;
                return Ok(cell);
            }
            "multirow" => {
                cur.optional();
                let n = span_number(cur.group()?)?;
                cur.optional();
                cur.group()?;
                cur.optional();
                let inner = cur.group()?;
                if !cur.rest().trim().is_empty() {
                    return Err(TableError::Parse(format!("text after \\multirow: {:?}", cur.rest())));
                }
                let mut cell = parse_cell(inner)?;
                cell.rowspan = n;
                return Ok(cell);
            }
            _ => {}
        }
    }
    Ok(ParsedCell {
        rowspan: 1,
        colspan: 1,
        content: latex_inline(t)?,
    })
}

fn find_env(src: &str) -> Option<(usize, usize, &'static str)> {
    for env in ["tabular*", "tabularx", "tabular"] {
        let tag = format!("\\begin{{{env}}}");
        if let Some(p) = src.find(&tag) {
            return Some((p, p + tag.len(), env));
        }
    }
    None
}

/// Convert the single tabular environment in `src` to canonical HTML.
pub fn latex_table_to_html(src: &str) -> Result<TableGroundTruth, TableError> {
    let src = strip_comments(src);
    let (begin, after_begin, env) = find_env(&src).ok_or_else(|| TableError::Parse("no tabular environment".into()))?;
    let mut cur = Cursor::new(&src[after_begin..]);
    if env != "tabular" {
        cur.group()?;
    }
    cur.optional();
    cur.group()?;
    let body_start = after_begin + cur.pos;
    let end_tag = format!("\\end{{{env}}}");
    let body_end = body_start
        + src[body_start..]
            .find(&end_tag)
            .ok_or_else(|| TableError::Parse(format!("missing {end_tag}")))?;
    let body = &src[body_start..body_end];
    if body.contains("\\begin{tabular") {
        return Err(TableError::UnsupportedConstruct("nested tabular".into()));
    }
    if let Some(p) = body.find("\\begin{") {
        let name: String = body[p + 7..].chars().take_while(|&c| c != '}').collect();
        return Err(TableError::UnsupportedConstruct(format!("environment {name}")));
    }

    let outside = format!("{}{}", &src[..begin], &src[body_end + end_tag.len()..]);
    let caption = match outside.find("\\caption") {
        Some(p) => {
            let mut c = Cursor::new(&outside[p + "\\caption".len()..]);
            c.optional();
            Some(latex_inline(c.group()?)?)
        }
        None => None,
    };

    let (raw_rows, _) = split_rows(body)?;
    let n_rows = raw_rows.len();
    let mut remaining: Vec<usize> = Vec::new();
    let mut rows: Vec<Vec<HtmlCell>> = Vec::with_capacity(n_rows);
    for (r, raw) in raw_rows.iter().enumerate() {
        let covered: Vec<bool> = remaining.iter().map(|&n| n > 0).collect();
        let mut started: Vec<(usize, usize, usize)> = Vec::new();
        let mut col = 0usize;
        let mut row = Vec::new();
        for text in &raw.cells {
            let cell = parse_cell(text)?;
            if covered.get(col).copied().unwrap_or(false) {
                if cell.content.is_empty() && cell.rowspan == 1 {
                    col += cell.colspan;
                    continue;
                }
                return Err(TableError::Parse(format!("row {r}: content under a \\multirow at column {col}")));
            }
            let rs = cell.rowspan.min(n_rows - r);
            if rs > 1 {
                started.push((col, cell.colspan, rs - 1));
            }
            row.push(HtmlCell {
                header: false,
                rowspan: rs,
                colspan: cell.colspan,
                content: cell.content,
            });
            col += cell.colspan;
        }
        for (c, n) in remaining.iter_mut().enumerate() {
            if covered.get(c).copied().unwrap_or(false) {
                *n -= 1;
            }
        }
        for (c0, cs, n) in started {
            if remaining.len() < c0 + cs {
                remaining.resize(c0 + cs, 0);
            }
            for slot in &mut remaining[c0..c0 + cs] {
                *slot = n;
            }
        }
        rows.push(row);
    }

    let mut header = raw_rows
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, r)| r.rule_before)
        .map_or(0, |(k, _)| k);
    let crosses = rows[..header]
        .iter()
        .enumerate()
        .any(|(r, row)| row.iter().any(|c| r + c.rowspan > header));
    if crosses {
        header = 0;
    }

    let mut sections = Vec::new();
    if header > 0 {
        let mut head: Vec<Vec<HtmlCell>> = rows.drain(..header).collect();
        for c in head.iter_mut().flatten() {
            c.header = true;
        }
        sections.push(HtmlSection {
            kind: SectionKind::Head,
            rows: head,
        });
    }
    sections.push(HtmlSection {
        kind: SectionKind::Body,
        rows,
    });
    let mut table = HtmlTable { caption, sections };
    pad_short_rows(&mut table)?;
    TableGroundTruth::from_table(&table)
}

/// Append empty cells so every row reaches the widest row's extent.
fn pad_short_rows(table: &mut HtmlTable) -> Result<(), TableError> {
    let (grid, _) = table.logical_grid()?;
    let owners = grid.owners();
    let mut r = 0;
    for s in &mut table.sections {
        for row in &mut s.rows {
            let filled = owners[r].iter().rposition(Option::is_some).map_or(0, |p| p + 1);
            if owners[r][..filled].iter().any(Option::is_none) {
                return Err(TableError::Parse(format!("row {r} has a gap")));
            }
            for _ in filled..grid.cols {
                row.push(HtmlCell {
                    header: s.kind == SectionKind::Head,
                    rowspan: 1,
                    colspan: 1,
                    content: Vec::new(),
                });
            }
            r += 1;
        }
    }
    Ok(())
}

pub fn escape_latex(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' | '%' | '$' | '#' | '_' | '{' | '}' => {
                out.push('\\');
                out.push(c);
            }
            '~' => out.push_str("\\textasciitilde{}"),
            '^' => out.push_str("\\textasciicircum{}"),
            '\\' => out.push_str("\\textbackslash{}"),
            c => out.push(c),
        }
    }
    out
}

/// Write `spec` filled with `content` as a `table` + `tabular` block, with a
/// rule under the header rows and `\multirow` placeholders where LaTeX needs
/// them.
pub fn table_to_latex(spec: &TableSpec, content: &[Vec<String>], bold_header: bool) -> Result<String, TableError> {
    spec.validate()?;
    let grid = spec.grid();
    let owners = grid.owners();
    let mut out = String::from("\\begin{table}[h]\n\\centering\n");
    if let Some(c) = &spec.caption {
        writeln!(out, "\\caption{{{}}}", escape_latex(&c.text)).unwrap();
    }
    writeln!(out, "\\begin{{tabular}}{{|{}}}", "c|".repeat(spec.cols)).unwrap();
    out.push_str("\\hline\n");
    for r in 0..spec.rows {
        let mut cells: Vec<String> = Vec::new();
        let mut c = 0;
        while c < spec.cols {
            let span = grid.cells[owners[r][c].expect("complete grid")];
            if span.row != r {
                // Placeholder under a multirow.
                if span.col == c {
                    cells.push(if span.col_span > 1 {
                        format!("\\multicolumn{{{}}}{{|c|}}{{}}", span.col_span)
                    } else {
                        String::new()
                    });
                }
                c += span.col_span;
                continue;
            }
            let mut text = escape_latex(content.get(r).and_then(|row| row.get(c)).map_or("", String::as_str));
            if bold_header && r < spec.header_rows && !text.is_empty() {
                text = format!("\\textbf{{{text}}}");
            }
            if span.row_span > 1 {
                text = format!("\\multirow{{{}}}{{*}}{{{text}}}", span.row_span);
            }
            if span.col_span > 1 {
                text = format!("\\multicolumn{{{}}}{{|c|}}{{{text}}}", span.col_span);
            }
            cells.push(text);
            c += span.col_span;
        }
        writeln!(out, "{} \\\\", cells.join(" & ")).unwrap();
        if r + 1 == spec.header_rows {
            out.push_str("\\hline\n");
        }
    }
    out.push_str("\\hline\n\\end{tabular}\n\\end{table}\n");
    Ok(out)
}
