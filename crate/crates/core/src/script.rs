//! Character classes shared by the text modules.

use serde::{Deserialize, Serialize};
use unicode_bidi::{bidi_class, BidiClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Ltr,
    Rtl,
}

impl Direction {
    pub fn is_rtl(self) -> bool {
        self == Direction::Rtl
    }

    /// Direction for a target language tag: RTL for Arabic, Hebrew, Persian, Urdu.
    pub fn for_language(tag: &str) -> Direction {
        let primary = tag.split(['-', '_']).next().unwrap_or("").to_ascii_lowercase();
        match primary.as_str() {
            "ar" | "he" | "fa" | "ur" => Direction::Rtl,
            _ => Direction::Ltr,
        }
    }
}

/// Tashkeel marks handled by the diacritization transforms: U+064B..=U+0652
/// and the superscript alef U+0670.
pub fn is_diacritic(c: char) -> bool {
    matches!(c, '\u{064B}'..='\u{0652}' | '\u{0670}')
}

/// Any Arabic-block combining mark (a superset of [`is_diacritic`]).
pub fn is_arabic_mark(c: char) -> bool {
    matches!(
        c,
        '\u{0610}'..='\u{061A}' | '\u{064B}'..='\u{065F}' | '\u{0670}' | '\u{06D6}'..='\u{06DC}' | '\u{06DF}'..='\u{06E4}' | '\u{06E7}' | '\u{06E8}' | '\u{06EA}'..='\u{06ED}'
    )
}

/// Arabic base letters eligible to carry an inserted diacritic
/// (hamza through yeh, excluding tatweel).
pub fn is_arabic_letter(c: char) -> bool {
    matches!(c, '\u{0621}'..='\u{063A}' | '\u{0641}'..='\u{064A}')
}

pub fn is_western_digit(c: char) -> bool {
    c.is_ascii_digit()
}

pub fn is_eastern_digit(c: char) -> bool {
    matches!(c, '\u{0660}'..='\u{0669}')
}

/// Bidi formatting characters: marks, embeddings, overrides and isolates.
pub fn is_bidi_control(c: char) -> bool {
    matches!(
        c,
        '\u{200E}' | '\u{200F}' | '\u{061C}' | '\u{202A}'..='\u{202E}' | '\u{2066}'..='\u{2069}'
    )
}

/// Code points that never need a glyph: controls, bidi formatting and
/// zero-width format characters.
pub fn is_layout_control(c: char) -> bool {
    c.is_control()
        || is_bidi_control(c)
        || matches!(c, '\u{200B}'..='\u{200D}' | '\u{2060}'..='\u{2064}' | '\u{FEFF}')
}

pub fn is_strong_rtl(c: char) -> bool {
    matches!(bidi_class(c), BidiClass::R | BidiClass::AL)
}

pub fn is_strong_ltr(c: char) -> bool {
    bidi_class(c) == BidiClass::L
}

/// RTL when strong right-to-left characters outnumber strong left-to-right ones.
pub fn majority_direction(text: &str) -> Direction {
    let (mut rtl, mut ltr) = (0usize, 0usize);
    for c in text.chars() {
        if is_strong_rtl(c) {
            rtl += 1;
        } else if is_strong_ltr(c) {
            ltr += 1;
        }
    }
    if rtl > ltr {
        Direction::Rtl
    } else {
        Direction::Ltr
    }
}
