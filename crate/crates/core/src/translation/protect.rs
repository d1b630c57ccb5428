use std::collections::BTreeMap;
use std::ops::Range;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Abbreviation,
    Symbol,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtectedToken {
    pub surface: String,
    pub kind: TokenKind,
    /// Character offset in the unmasked source.
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub token: ProtectedToken,
}

fn grammar() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        let num = r"\d+(?:[.,]\d+)*";
        let pattern = [
            r"(?P<sent>⟦T\d+⟧)".to_string(),
            format!(r"(?P<cur>[$€£¥₹]\s?{num})"),
            format!(r"(?P<pct>{num}\s?(?:%|°[CF]?))"),
            r"(?P<dotted>\b(?:[A-Z]\.){2,})".to_string(),
            r"(?P<abbr>\b(?:Inc|Ltd|Corp|Co|Dr|Mr|Mrs|Ms|Jr|Sr|St|No|vs|etc|e\.g|i\.e)\.)".to_string(),
            r"(?P<sym>[$%№])".to_string(),
        ]
        .join("|");
        Regex::new(&pattern).expect("protection grammar")
    })
}

fn sentinel_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"⟦T(\d+)⟧").unwrap())
}

pub fn sentinel(n: usize) -> String {
    format!("⟦T{n}⟧")
}

fn scan(text: &str) -> Vec<(Range<usize>, TokenKind)> {
    grammar()
        .captures_iter(text)
        .map(|c| {
            let m = c.get(0).unwrap();
            let kind = if c.name("dotted").is_some() || c.name("abbr").is_some() {
                TokenKind::Abbreviation
            } else {
                TokenKind::Symbol
            };
            (m.range(), kind)
        })
        .collect()
}

/// Replace protected tokens with numbered sentinels `⟦Tn⟧`.
///
/// Sentinel-shaped text already present in the input is itself protected,
/// so [`unprotect`] restores any input exactly.
pub fn protect_tokens(text: &str) -> (String, Vec<ProtectedToken>) {
    let mut masked = String::with_capacity(text.len());
    let mut tokens = Vec::new();
    let mut last = 0;
    let mut chars_before = 0;
    for (range, kind) in scan(text) {
        masked.push_str(&text[last..range.start]);
        chars_before += text[last..range.start].chars().count();
        masked.push_str(&sentinel(tokens.len()));
        tokens.push(ProtectedToken {
            surface: text[range.clone()].to_string(),
            kind,
            position: chars_before,
        });
        chars_before += text[range.clone()].chars().count();
        last = range.end;
    }
    masked.push_str(&text[last..]);
    (masked, tokens)
}

/// Put token surfaces back in place of their sentinels. Sentinels without a
/// matching token are left untouched.
pub fn unprotect(masked: &str, tokens: &[ProtectedToken]) -> String {
    sentinel_re()
        .replace_all(masked, |c: &regex::Captures| {
            c[1].parse::<usize>()
                .ok()
                .and_then(|n| tokens.get(n))
                .map_or_else(|| c[0].to_string(), |t| t.surface.clone())
        })
        .into_owned()
}

/// Sentinel indices that appear in `text`.
pub fn sentinels_in(text: &str) -> Vec<usize> {
    sentinel_re()
        .captures_iter(text)
        .filter_map(|c| c[1].parse().ok())
        .collect()
}

/// One violation per protected token of `source` that `translated` lost.
///
/// Tokens are matched first against grammar tokens of the translation, then
/// as plain substrings outside those, so `5%` is not found inside `15%`.
pub fn verify_preservation(source: &str, translated: &str) -> Vec<Violation> {
    let (_, tokens) = protect_tokens(source);
    let mut pending: BTreeMap<&str, Vec<&ProtectedToken>> = BTreeMap::new();
    for t in &tokens {
        pending.entry(t.surface.as_str()).or_default().push(t);
    }
    let mut taken: Vec<Range<usize>> = Vec::new();
    for (range, _) in scan(translated) {
        if let Some(list) = pending.get_mut(&translated[range.clone()]) {
            if !list.is_empty() {
                list.remove(0);
                taken.push(range);
            }
        }
    }
    for (surface, list) in pending.iter_mut() {
        let mut from = 0;
        while !list.is_empty() {
            let Some(off) = translated[from..].find(surface) else { break };
            let r = from + off..from + off + surface.len();
            if taken.iter().all(|t| t.end <= r.start || r.end <= t.start) {
                list.remove(0);
                taken.push(r.clone());
                from = r.end;
            } else {
                from += off + translated[from + off..].chars().next().map_or(1, char::len_utf8);
            }
        }
    }
    let mut out: Vec<Violation> = pending
        .into_values()
        .flatten()
        .map(|t| Violation { token: t.clone() })
        .collect();
    out.sort_by_key(|v| v.token.position);
    out
}
