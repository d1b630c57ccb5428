use serde::{Deserialize, Serialize};

use crate::charts::{parse_chart_annotation, ChartAnnotation};

/// Field-level agreement between a reference and a predicted chart annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartScore {
    pub parsed: bool,
    pub title_match: bool,
    pub type_match: bool,
    pub header_match: bool,
    pub cells_matched: usize,
    pub cells_total: usize,
}

impl ChartScore {
    pub fn cell_accuracy(&self) -> f64 {
        if self.cells_total == 0 {
            return 1.0;
        }
        self.cells_matched as f64 / self.cells_total as f64
    }

    pub fn exact(&self) -> bool {
        self.parsed && self.title_match && self.type_match && self.header_match && self.cells_matched == self.cells_total
    }
}

fn cells(a: &ChartAnnotation) -> Vec<Vec<String>> {
    (0..a.data.labels.len())
        .map(|i| {
            let mut row = vec![a.data.labels[i].clone()];
            row.extend(a.data.series.iter().map(|s| format!("{}", s.values[i])));
            row
        })
        .collect()
}

/// Compare fields position by position; every reference cell, labels
/// included, counts once.
pub fn score_chart(reference: &ChartAnnotation, hypothesis: &ChartAnnotation) -> ChartScore {
    let rc = cells(reference);
    let hc = cells(hypothesis);
    let header = |a: &ChartAnnotation| a.data.series.iter().map(|s| s.name.clone()).collect::<Vec<_>>();
    let cells_total = rc.iter().map(Vec::len).sum();
    let cells_matched = rc
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(|(j, v)| hc.get(i).and_then(|h| h.get(*j)) == Some(*v))
                .count()
        })
        .sum();
    ChartScore {
        parsed: true,
        title_match: reference.title == hypothesis.title,
        type_match: reference.chart_type == hypothesis.chart_type,
        header_match: header(reference) == header(hypothesis),
        cells_matched,
        cells_total,
    }
}

/// Score annotation texts. An unparseable hypothesis scores zero on every field.
pub fn score_chart_text(reference: &ChartAnnotation, hypothesis: &str) -> ChartScore {
    match parse_chart_annotation(hypothesis) {
        Ok(h) => score_chart(reference, &h),
        Err(_) => ChartScore {
            parsed: false,
            title_match: false,
            type_match: false,
            header_match: false,
            cells_matched: 0,
            cells_total: cells(reference).iter().map(Vec::len).sum(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REF: &str = "title: t\ntype: bar\nlabel,value\nA,1\nB,2";

    #[test]
    fn identical_is_exact() {
        let r = parse_chart_annotation(REF).unwrap();
        let s = score_chart_text(&r, REF);
        assert!(s.exact());
        assert_eq!((s.cells_matched, s.cells_total), (4, 4));
    }

    #[test]
    fn one_wrong_value() {
        let r = parse_chart_annotation(REF).unwrap();
        let s = score_chart_text(&r, "title: t\ntype: bar\nlabel,value\nA,1\nB,3");
        assert!(!s.exact());
        assert_eq!(s.cell_accuracy(), 0.75);
    }

    #[test]
    fn garbage_scores_zero() {
        let r = parse_chart_annotation(REF).unwrap();
        let s = score_chart_text(&r, "no annotation here");
        assert!(!s.parsed);
        assert_eq!(s.cell_accuracy(), 0.0);
    }
}
