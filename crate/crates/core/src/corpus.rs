//! Built-in word lists and phrase samplers used when no source corpus is
//! configured.

use crate::rng::SeededRng;

/// Fully vocalized Arabic words.
pub const ARABIC_WORDS: &[&str] = &[
    "كَتَبَ", "الطَّالِبُ", "الدَّرْسَ", "المَدْرَسَةُ", "البَيْتُ", "كِتَابٌ", "قَلَمٌ", "مَدِينَةٌ",
    "العِلْمُ", "نُورٌ", "الشَّمْسُ", "القَمَرُ", "السَّمَاءُ", "الأَرْضُ", "المَاءُ", "شَجَرَةٌ",
    "جَمِيلٌ", "كَبِيرٌ", "صَغِيرٌ", "جَدِيدٌ", "قَدِيمٌ", "سَرِيعٌ", "طَوِيلٌ", "قَصِيرٌ",
    "ذَهَبَ", "جَلَسَ", "قَرَأَ", "فَهِمَ", "عَمِلَ", "سَافَرَ", "وَصَلَ", "خَرَجَ",
    "الشَّرِكَةُ", "التَّقْرِيرُ", "السَّنَوِيُّ", "الإِيرَادَاتُ", "الأَرْبَاحُ", "المَبِيعَاتُ", "السُّوقُ", "العَمِيلُ",
    "المُدِيرُ", "المُوَظَّفُ", "الاجْتِمَاعُ", "المَشْرُوعُ", "الخُطَّةُ", "المِيزَانِيَّةُ", "التَّكْلِفَةُ", "السِّعْرُ",
    "الجَامِعَةُ", "البَحْثُ", "الدِّرَاسَةُ", "النَّتَائِجُ", "البَيَانَاتُ", "الجَدْوَلُ", "الرَّسْمُ", "التَّحْلِيلُ",
    "الحُكُومَةُ", "الوِزَارَةُ", "القَانُونُ", "المَحْكَمَةُ", "القَرَارُ", "الوَثِيقَةُ", "العَقْدُ", "الاتِّفَاقِيَّةُ",
    "الصِّحَّةُ", "المُسْتَشْفَى", "الطَّبِيبُ", "الدَّوَاءُ", "المَرِيضُ", "العِلَاجُ", "الوِقَايَةُ", "التَّغْذِيَةُ",
    "الزِّرَاعَةُ", "الصِّنَاعَةُ", "التِّجَارَةُ", "الطَّاقَةُ", "النَّقْلُ", "الاتِّصَالَاتُ", "التَّعْلِيمُ", "الثَّقَافَةُ",
    "فِي", "مِنْ", "إِلَى", "عَلَى", "عَنْ", "مَعَ", "بَعْدَ", "قَبْلَ",
    "هَذَا", "هَذِهِ", "ذَلِكَ", "الَّذِي", "الَّتِي", "كُلُّ", "بَعْضُ", "أَيْضًا",
    "عَامٌ", "شَهْرٌ", "يَوْمٌ", "سَاعَةٌ", "أُسْبُوعٌ", "الرَّبِيعُ", "الصَّيْفُ", "الشِّتَاءُ",
    "الإِجْمَالِيُّ", "المُتَوَسِّطُ", "النِّسْبَةُ", "الزِّيَادَةُ", "النُّقْصَانُ", "العَدَدُ", "القِيمَةُ", "المَجْمُوعُ",
];

/// Short Arabic labels suitable for table headers and chart categories.
pub const ARABIC_LABELS: &[&str] = &[
    "الاسم", "العدد", "القيمة", "النسبة", "السنة", "المدينة", "المنطقة", "الفئة", "الإجمالي", "المتوسط",
    "الربع الأول", "الربع الثاني", "الربع الثالث", "الربع الرابع", "المبيعات", "الأرباح", "التكلفة", "السعر",
    "الرياض", "القاهرة", "بغداد", "دمشق", "عمان", "تونس", "الرباط", "الدوحة", "بيروت", "مسقط",
    "يناير", "فبراير", "مارس", "أبريل", "مايو", "يونيو", "يوليو", "أغسطس", "سبتمبر", "أكتوبر",
];

pub const LATIN_WORDS: &[&str] = &[
    "the", "report", "annual", "revenue", "growth", "market", "share", "customer", "service", "quality",
    "board", "meeting", "review", "budget", "project", "plan", "office", "company", "agreement", "contract",
    "total", "average", "result", "table", "figure", "data", "analysis", "method", "model", "score",
    "increased", "decreased", "remained", "stable", "during", "quarter", "year", "period", "compared", "with",
    "and", "of", "for", "in", "to", "from", "by", "on", "at", "per",
    "North", "South", "East", "West", "Central", "Region", "Group", "Division", "Unit", "Branch",
];

/// Tokens that exercise the protection grammar.
pub const PROTECTED_SAMPLES: &[&str] = &[
    "5%", "12.5%", "$3", "$1,200", "€40", "U.S.", "U.K.", "Inc.", "Ltd.", "Corp.", "Dr.", "No.", "e.g.", "20 °C", "№",
];

pub const FILLER_TOKENS: &[&str] = &["—", "*", "N/A", "…", "-", "x"];

pub fn arabic_phrase(rng: &mut SeededRng, min_words: usize, max_words: usize) -> String {
    let n = rng.int_in(min_words, max_words);
    (0..n).map(|_| *rng.pick(ARABIC_WORDS)).collect::<Vec<_>>().join(" ")
}

pub fn latin_phrase(rng: &mut SeededRng, min_words: usize, max_words: usize) -> String {
    let n = rng.int_in(min_words, max_words);
    (0..n).map(|_| *rng.pick(LATIN_WORDS)).collect::<Vec<_>>().join(" ")
}

/// An English line where each word is a protected token with probability `token_rate`.
pub fn english_line(rng: &mut SeededRng, min_words: usize, max_words: usize, token_rate: f64) -> String {
    let n = rng.int_in(min_words, max_words);
    let mut words = Vec::with_capacity(n);
    for _ in 0..n {
        if rng.chance(token_rate) {
            words.push(*rng.pick(PROTECTED_SAMPLES));
        } else {
            words.push(*rng.pick(LATIN_WORDS));
        }
    }
    words.join(" ")
}

/// A decimal number with up to `decimals` fraction digits.
pub fn number_text(rng: &mut SeededRng, max: usize, decimals: usize) -> String {
    let int = rng.int_in(0, max);
    if decimals == 0 || rng.chance(0.5) {
        int.to_string()
    } else {
        let frac = rng.int_in(0, 10usize.pow(decimals as u32) - 1);
        format!("{int}.{frac:0width$}", width = decimals)
    }
}
