//! Diacritic removal and injection, and Eastern/Western numeral substitution.
//!
//! These transforms add visual variety to rendered Arabic text. They are not
//! linguistic diacritization.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::rng::SeededRng;
use crate::script::{is_arabic_letter, is_arabic_mark, is_diacritic, is_eastern_digit, is_western_digit};

#[derive(Debug, Error, PartialEq)]
#[error("{name} = {value} is not a probability")]
pub struct InvalidProbability {
    pub name: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RemovalLevel {
    #[default]
    None,
    Light,
    Medium,
    Heavy,
}

impl RemovalLevel {
    pub const ALL: [RemovalLevel; 4] = [
        RemovalLevel::None,
        RemovalLevel::Light,
        RemovalLevel::Medium,
        RemovalLevel::Heavy,
    ];

    /// Per-mark removal probability.
    pub fn probability(self) -> f64 {
        match self {
            RemovalLevel::None => 0.0,
            RemovalLevel::Light => 0.25,
            RemovalLevel::Medium => 0.50,
            RemovalLevel::Heavy => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct DiacritizationSpec {
    pub removal_level: RemovalLevel,
    /// Chance of giving a bare Arabic letter one random short-vowel mark.
    pub insertion_rate: f64,
    /// Chance that a digit run is written with Eastern Arabic digits.
    pub eastern_numeral_fraction: f64,
}

impl DiacritizationSpec {
    pub fn validate(&self) -> Result<(), InvalidProbability> {
        for (name, value) in [
            ("insertion_rate", self.insertion_rate),
            ("eastern_numeral_fraction", self.eastern_numeral_fraction),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(InvalidProbability { name, value });
            }
        }
        Ok(())
    }

    /// Strip, then insert, then substitute numerals.
    pub fn apply(&self, text: &str, rng: &mut SeededRng) -> String {
        let s = strip_diacritics(text, self.removal_level, rng);
        let s = insert_diacritics(&s, self.insertion_rate, rng);
        substitute_numerals(&s, self.eastern_numeral_fraction, rng)
    }
}

/// Marks drawn by [`insert_diacritics`]: fatha, damma, kasra, sukun, shadda,
/// fathatan, dammatan, kasratan.
pub const SHORT_VOWELS: [char; 8] = [
    '\u{064E}', '\u{064F}', '\u{0650}', '\u{0652}', '\u{0651}', '\u{064B}', '\u{064C}', '\u{064D}',
];

/// Remove each diacritic independently with the level's probability.
pub fn strip_diacritics(text: &str, level: RemovalLevel, rng: &mut SeededRng) -> String {
    let p = level.probability();
    let kept: String = text
        .chars()
        .filter(|&c| !(is_diacritic(c) && rng.chance(p)))
        .collect();
    kept.nfc().collect()
}

/// After each Arabic letter that carries no mark, insert a random short
/// vowel with probability `rate`.
pub fn insert_diacritics(text: &str, rate: f64, rng: &mut SeededRng) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len() * 2);
    for (i, &c) in chars.iter().enumerate() {
        out.push(c);
        let bare = is_arabic_letter(c) && !chars.get(i + 1).is_some_and(|&n| is_arabic_mark(n));
        if bare && rng.chance(rate) {
            out.push(*rng.pick(&SHORT_VOWELS));
        }
    }
    out.nfc().collect()
}

fn is_digit(c: char) -> bool {
    is_western_digit(c) || is_eastern_digit(c)
}

fn is_number_separator(c: char) -> bool {
    matches!(c, '.' | ',' | '\u{066B}' | '\u{066C}')
}

fn to_eastern(c: char) -> char {
    if is_western_digit(c) {
        char::from_u32(0x0660 + (c as u32 - '0' as u32)).unwrap()
    } else {
        c
    }
}

fn to_western(c: char) -> char {
    if is_eastern_digit(c) {
        char::from_u32('0' as u32 + (c as u32 - 0x0660)).unwrap()
    } else {
        c
    }
}

/// Byte ranges of maximal digit runs. A single separator (`.` `,` `٫` `٬`)
/// between two digits stays inside the run, so `3.14` is one number.
pub fn digit_runs(text: &str) -> Vec<std::ops::Range<usize>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut runs = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !is_digit(chars[i].1) {
            i += 1;
            continue;
        }
        let start = chars[i].0;
        let mut j = i + 1;
        loop {
            if j < chars.len() && is_digit(chars[j].1) {
                j += 1;
            } else if j + 1 < chars.len()
                && is_number_separator(chars[j].1)
                && is_digit(chars[j + 1].1)
            {
                j += 2;
            } else {
                break;
            }
        }
        let end = chars.get(j).map_or(text.len(), |c| c.0);
        runs.push(start..end);
        i = j;
    }
    runs
}

/// Rewrite every digit run wholly in Eastern digits (probability
/// `eastern_fraction`) or wholly in Western digits. One draw per run.
pub fn substitute_numerals(text: &str, eastern_fraction: f64, rng: &mut SeededRng) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for run in digit_runs(text) {
        out.push_str(&text[last..run.start]);
        let eastern = rng.chance(eastern_fraction);
        let map = if eastern { to_eastern } else { to_western };
        out.extend(text[run.clone()].chars().map(map));
        last = run.end;
    }
    out.push_str(&text[last..]);
    out
}
