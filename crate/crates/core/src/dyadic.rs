//! Reply-pair label conditionals `P(child = Li | parent = Lj)`.

use serde::Serialize;

use crate::error::ConfigError;
use crate::graph::ConversationTree;
use crate::label::ViewpointLabel;

/// Stance-taking labels, the default conditioning set.
pub const STANCE_LABELS: [ViewpointLabel; 2] = [ViewpointLabel::L3, ViewpointLabel::L4];

/// `counts[i][j]` = number of replies labelled `subset[i]` whose parent is
/// labelled `subset[j]`. Only edges with both endpoints in the subset count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicCounts {
    subset: Vec<ViewpointLabel>,
    counts: Vec<Vec<u64>>,
}

impl DyadicCounts {
    pub fn new(subset: &[ViewpointLabel]) -> Result<Self, ConfigError> {
        if subset.len() < 2 {
            return Err(ConfigError::new(
                "dyadic label subset needs at least two labels",
            ));
        }
        let mut sorted = subset.to_vec();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != subset.len() {
            return Err(ConfigError::new("dyadic label subset has duplicates"));
        }
        Ok(Self {
            subset: subset.to_vec(),
            counts: vec![vec![0; subset.len()]; subset.len()],
        })
    }

    pub fn subset(&self) -> &[ViewpointLabel] {
        &self.subset
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    fn position(&self, label: ViewpointLabel) -> Option<usize> {
        self.subset.iter().position(|&l| l == label)
    }

    pub fn record(&mut self, child: ViewpointLabel, parent: ViewpointLabel) {
        if let (Some(i), Some(j)) = (self.position(child), self.position(parent)) {
            self.counts[i][j] += 1;
        }
    }

    pub fn add_tree(&mut self, tree: &ConversationTree, include_self_replies: bool) {
        for (child, parent) in tree.edges() {
            if include_self_replies || child.author_id != parent.author_id {
                self.record(child.label, parent.label);
            }
        }
    }

    /// Element-wise sum. Both sides must use the same subset.
    pub fn merge(mut self, other: &DyadicCounts) -> Self {
        assert_eq!(self.subset, other.subset, "merging counts over different subsets");
        for (row, other_row) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(other_row) {
                *c += o;
            }
        }
        self
    }

    pub fn n_qualifying_edges(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn into_matrix(self) -> DyadicMatrix {
        let k = self.subset.len();
        let column_totals: Vec<u64> = (0..k).map(|j| (0..k).map(|i| self.counts[i][j]).sum()).collect();
        let conditionals = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        (column_totals[j] > 0)
                            .then(|| self.counts[i][j] as f64 / column_totals[j] as f64)
                    })
                    .collect()
            })
            .collect();
        DyadicMatrix {
            n_qualifying_edges: self.n_qualifying_edges(),
            subset: self.subset,
            counts: self.counts,
            conditionals,
        }
    }
}

/// Counts plus column-normalised conditionals. Undefined columns (no
/// qualifying replies to that parent label) hold `None` and serialize as null.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DyadicMatrix {
    pub subset: Vec<ViewpointLabel>,
    pub counts: Vec<Vec<u64>>,
    pub conditionals: Vec<Vec<Option<f64>>>,
    pub n_qualifying_edges: u64,
}

impl DyadicMatrix {
    /// `P(child | parent)`, if both labels are in the subset and the column is defined.
    pub fn conditional(&self, child: ViewpointLabel, parent: ViewpointLabel) -> Option<f64> {
        let i = self.subset.iter().position(|&l| l == child)?;
        let j = self.subset.iter().position(|&l| l == parent)?;
        self.conditionals[i][j]
    }

    pub fn column_defined(&self, parent: ViewpointLabel) -> bool {
        self.subset
            .iter()
            .position(|&l| l == parent)
            .is_some_and(|j| self.conditionals[0][j].is_some())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("dyadic matrix serializes")
    }
}

pub fn dyadic_conditionals(
    trees: &[ConversationTree],
    subset: &[ViewpointLabel],
    include_self_replies: bool,
) -> Result<DyadicMatrix, ConfigError> {
    let mut counts = DyadicCounts::new(subset)?;
    for t in trees {
        counts.add_tree(t, include_self_replies);
    }
    Ok(counts.into_matrix())
}
