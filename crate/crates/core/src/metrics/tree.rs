use serde::{Deserialize, Serialize};

use super::{levenshtein, MetricsError};
use crate::tables::parse_table;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeLabel {
    pub tag: String,
    pub text: String,
    pub colspan: usize,
    pub rowspan: usize,
}

impl NodeLabel {
    pub fn tag(tag: &str) -> Self {
        Self {
            tag: tag.to_string(),
            text: String::new(),
            colspan: 1,
            rowspan: 1,
        }
    }

    fn carries_text(&self) -> bool {
        matches!(self.tag.as_str(), "td" | "th" | "caption")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub label: NodeLabel,
    pub children: Vec<usize>,
}

/// Ordered labelled tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableTree {
    pub nodes: Vec<TreeNode>,
}

impl TableTree {
    pub fn new(root: NodeLabel) -> Self {
        Self {
            nodes: vec![TreeNode {
                label: root,
                children: Vec::new(),
            }],
        }
    }

    /// Append `label` as the last child of `parent`; returns the new node.
    pub fn push(&mut self, parent: usize, label: NodeLabel) -> usize {
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            label,
            children: Vec::new(),
        });
        self.nodes[parent].children.push(id);
        id
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.nodes[n].children.iter().rev());
        }
        out
    }

    /// Postorder node ids and, per postorder position, the position of the
    /// leftmost leaf below it.
    fn postorder(&self) -> (Vec<usize>, Vec<usize>) {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut leftmost = Vec::with_capacity(self.nodes.len());
        fn walk(t: &TableTree, n: usize, order: &mut Vec<usize>, leftmost: &mut Vec<usize>) -> usize {
            let mut first = None;
            for &c in &t.nodes[n].children {
                let l = walk(t, c, order, leftmost);
                first.get_or_insert(l);
            }
            let pos = order.len();
            order.push(n);
            let l = first.unwrap_or(pos);
            leftmost.push(l);
            l
        }
        walk(self, 0, &mut order, &mut leftmost);
        (order, leftmost)
    }
}

/// Build the tree for a table: `table`, optional `caption`, one node per
/// section, row and cell. Inline formatting is folded into cell text.
pub fn parse_table_tree(html: &str) -> Result<TableTree, MetricsError> {
    let table = parse_table(html).map_err(|e| MetricsError::Parse(e.to_string()))?;
    let mut tree = TableTree::new(NodeLabel::tag("table"));
    if let Some(c) = &table.caption {
        let mut label = NodeLabel::tag("caption");
        label.text = crate::tables::html::plain_text(c);
        tree.push(0, label);
    }
    for s in &table.sections {
        let sec = tree.push(0, NodeLabel::tag(s.kind.tag()));
        for row in &s.rows {
            let tr = tree.push(sec, NodeLabel::tag("tr"));
            for cell in row {
                tree.push(
                    tr,
                    NodeLabel {
                        tag: if cell.header { "th" } else { "td" }.to_string(),
                        text: cell.text(),
                        colspan: cell.colspan,
                        rowspan: cell.rowspan,
                    },
                );
            }
        }
    }
    Ok(tree)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TedsMode {
    /// Cell text differences cost their normalized edit distance.
    #[default]
    TextAware,
    /// Only tags and spans are compared.
    StructureOnly,
}

fn normalized_distance(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let m = a.len().max(b.len());
    if m == 0 {
        0.0
    } else {
        levenshtein(&a, &b) as f64 / m as f64
    }
}

pub(crate) fn rename_cost(a: &NodeLabel, b: &NodeLabel, mode: TedsMode) -> f64 {
    if a.tag != b.tag {
        return 1.0;
    }
    if !a.carries_text() {
        return 0.0;
    }
    if (a.colspan, a.rowspan) != (b.colspan, b.rowspan) {
        return 1.0;
    }
    match mode {
        TedsMode::StructureOnly => 0.0,
        TedsMode::TextAware => normalized_distance(&a.text, &b.text),
    }
}

/// Ordered tree edit distance (Zhang and Shasha) with unit insert and
/// delete costs.
pub fn tree_edit_distance(a: &TableTree, b: &TableTree, mode: TedsMode) -> f64 {
    let (pa, la) = a.postorder();
    let (pb, lb) = b.postorder();
    let keyroots = |l: &[usize]| -> Vec<usize> {
        (0..l.len()).filter(|&k| !(k + 1..l.len()).any(|k2| l[k2] == l[k])).collect()
    };
    let (ka, kb) = (keyroots(&la), keyroots(&lb));
    let mut td = vec![vec![0.0f64; pb.len()]; pa.len()];
    for &i in &ka {
        for &j in &kb {
            let (li, lj) = (la[i], lb[j]);
            let (m, n) = (i - li + 2, j - lj + 2);
            let mut fd = vec![vec![0.0f64; n]; m];
            for x in 1..m {
                fd[x][0] = fd[x - 1][0] + 1.0;
            }
            for y in 1..n {
                fd[0][y] = fd[0][y - 1] + 1.0;
            }
            for x in 1..m {
                for y in 1..n {
                    let (i1, j1) = (li + x - 1, lj + y - 1);
                    let del = fd[x - 1][y] + 1.0;
                    let ins = fd[x][y - 1] + 1.0;
                    if la[i1] == li && lb[j1] == lj {
                        let sub = fd[x - 1][y - 1] + rename_cost(&a.nodes[pa[i1]].label, &b.nodes[pb[j1]].label, mode);
                        fd[x][y] = del.min(ins).min(sub);
                        td[i1][j1] = fd[x][y];
                    } else {
                        let (p, q) = (la[i1] - li, lb[j1] - lj);
                        fd[x][y] = del.min(ins).min(fd[p][q] + td[i1][j1]);
                    }
                }
            }
        }
    }
    td[pa.len() - 1][pb.len() - 1]
}

/// `1 - distance / max(|a|, |b|)`.
pub fn teds_with(a: &TableTree, b: &TableTree, mode: TedsMode) -> f64 {
    let d = tree_edit_distance(a, b, mode);
    (1.0 - d / a.len().max(b.len()) as f64).max(0.0)
}

pub fn teds(a: &TableTree, b: &TableTree) -> f64 {
    teds_with(a, b, TedsMode::TextAware)
}
