//! Line-preserving translation of paragraph blocks.
//!
//! Lines are masked (abbreviations and symbol tokens become sentinels), sent
//! to a provider as one batch, checked for cardinality and sentinel survival,
//! then unmasked.

mod protect;
mod provider;

use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Mutex, OnceLock};

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::script::Direction;

pub use protect::{protect_tokens, sentinel, sentinels_in, unprotect, verify_preservation, ProtectedToken, TokenKind, Violation};
pub use provider::{
    build_provider, HttpConfig, HttpProvider, IdentityProvider, ProviderConfig, PseudoProvider, TranslationProvider,
};

#[derive(Debug, Error, PartialEq)]
pub enum TranslationError {
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("expected {expected} lines, provider returned {got}")]
    CardinalityViolation { expected: usize, got: usize },
    #[error("{} protected token(s) lost", .0.len())]
    PreservationViolation(Vec<Violation>),
    #[error("empty request")]
    EmptyRequest,
    #[error("invalid provider config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationRequest {
    pub paragraph_id: usize,
    pub lines: Vec<String>,
    /// `contiguous[i]` says whether line `i + 1` continues line `i`.
    pub contiguous: Vec<bool>,
    pub source_lang: String,
    pub target_lang: String,
}

impl TranslationRequest {
    /// Build a request with contiguity inferred from the line text.
    pub fn new(paragraph_id: usize, lines: Vec<String>, source_lang: &str, target_lang: &str) -> Self {
        let contiguous = infer_contiguity(&lines);
        Self {
            paragraph_id,
            lines,
            contiguous,
            source_lang: source_lang.into(),
            target_lang: target_lang.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationResponse {
    pub paragraph_id: usize,
    pub lines: Vec<String>,
    pub contiguous: Vec<bool>,
    pub direction: Direction,
}

impl TranslationResponse {
    /// Maximal runs of mutually contiguous lines.
    pub fn blocks(&self) -> Vec<Range<usize>> {
        contiguous_blocks(self.lines.len(), &self.contiguous)
    }
}

pub fn contiguous_blocks(n: usize, contiguous: &[bool]) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..n {
        if !contiguous.get(i - 1).copied().unwrap_or(true) {
            out.push(start..i);
            start = i;
        }
    }
    if n > 0 {
        out.push(start..n);
    }
    out
}

fn list_marker() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*(?:[-•*·▪–]|\d{1,3}[.)]|[A-Za-z][.)]|\(\w{1,3}\))\s").unwrap())
}

/// A boundary breaks before a list item or after a line ending in a colon.
pub fn infer_contiguity(lines: &[String]) -> Vec<bool> {
    lines
        .windows(2)
        .map(|w| !(w[0].trim_end().ends_with(':') || list_marker().is_match(&w[1])))
        .collect()
}

fn check_cardinality(expected: usize, got: &[String]) -> Result<(), TranslationError> {
    if got.len() == expected {
        Ok(())
    } else {
        Err(TranslationError::CardinalityViolation {
            expected,
            got: got.len(),
        })
    }
}

/// Translate one paragraph block, keeping one output line per input line and
/// every protected token intact.
///
/// A provider that merges or splits lines gets a second chance with one call
/// per line before the request fails.
pub fn translate_paragraph(
    provider: &dyn TranslationProvider,
    request: &TranslationRequest,
) -> Result<TranslationResponse, TranslationError> {
    if request.lines.is_empty() {
        return Err(TranslationError::EmptyRequest);
    }
    let (masked, tokens): (Vec<String>, Vec<Vec<ProtectedToken>>) =
        request.lines.iter().map(|l| protect_tokens(l)).unzip();
    let (src, tgt) = (request.source_lang.as_str(), request.target_lang.as_str());

    let mut out = provider.translate_lines(&masked, src, tgt)?;
    if out.len() != masked.len() {
        log::warn!(
            "paragraph {}: provider returned {} of {} lines, retrying per line",
            request.paragraph_id,
            out.len(),
            masked.len()
        );
        out = Vec::with_capacity(masked.len());
        for line in &masked {
            let single = provider.translate_lines(std::slice::from_ref(line), src, tgt)?;
            check_cardinality(1, &single)?;
            out.extend(single);
        }
    }
    check_cardinality(masked.len(), &out)?;

    let mut lines = Vec::with_capacity(out.len());
    let mut violations = Vec::new();
    for ((translated, toks), source) in out.iter().zip(&tokens).zip(&request.lines) {
        let present = sentinels_in(translated);
        for (n, t) in toks.iter().enumerate() {
            if !present.contains(&n) {
                violations.push(Violation { token: t.clone() });
            }
        }
        let restored = unprotect(translated, toks);
        if violations.is_empty() {
            violations.extend(verify_preservation(source, &restored));
        }
        lines.push(restored);
    }
    if !violations.is_empty() {
        return Err(TranslationError::PreservationViolation(violations));
    }
    Ok(TranslationResponse {
        paragraph_id: request.paragraph_id,
        lines,
        contiguous: request.contiguous.clone(),
        direction: Direction::for_language(&request.target_lang),
    })
}

/// Translate many paragraphs with at most `max_in_flight` concurrent provider
/// calls. Results come back in request order.
pub fn translate_batch(
    provider: &dyn TranslationProvider,
    requests: &[TranslationRequest],
    max_in_flight: usize,
) -> Vec<Result<TranslationResponse, TranslationError>> {
    let workers = max_in_flight.clamp(1, requests.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<TranslationResponse, TranslationError>>>> =
        requests.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(req) = requests.get(i) else { break };
                let r = translate_paragraph(provider, req);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every request handled"))
        .collect()
}
