//! Viewpoint exposure: who saw which label through a direct reply.

use std::collections::BTreeSet;

use crate::graph::ConversationTree;
use crate::label::ViewpointLabel;

/// `target` was exposed to `label`, written by `source`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Exposure {
    pub source: String,
    pub target: String,
    pub label: ViewpointLabel,
}

/// Multigraph over the users of one conversation.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewpointNetwork {
    pub conversation_id: String,
    pub users: BTreeSet<String>,
    pub exposures: Vec<Exposure>,
}

/// Every reply between two different users exposes each side to the
/// other's label. Self-replies expose nobody.
pub fn build_viewpoint_network(tree: &ConversationTree) -> ViewpointNetwork {
    let users = tree
        .distinct_authors()
        .into_iter()
        .map(str::to_string)
        .collect();
    let mut exposures = Vec::new();
    for (child, parent) in tree.edges() {
        if child.author_id == parent.author_id {
            continue;
        }
        exposures.push(Exposure {
            source: parent.author_id.clone(),
            target: child.author_id.clone(),
            label: parent.label,
        });
        exposures.push(Exposure {
            source: child.author_id.clone(),
            target: parent.author_id.clone(),
            label: child.label,
        });
    }
    ViewpointNetwork {
        conversation_id: tree.conversation_id().to_string(),
        users,
        exposures,
    }
}

/// 4 × U exposure counts. Columns are users in ascending id order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewpointMatrix {
    pub conversation_id: String,
    users: Vec<String>,
    columns: Vec<[u64; 4]>,
}

impl ViewpointMatrix {
    pub fn from_columns(
        conversation_id: impl Into<String>,
        users: Vec<String>,
        columns: Vec<[u64; 4]>,
    ) -> Self {
        assert_eq!(users.len(), columns.len(), "one column per user");
        Self {
            conversation_id: conversation_id.into(),
            users,
            columns,
        }
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn columns(&self) -> &[[u64; 4]] {
        &self.columns
    }

    /// (rows, columns); rows is always 4.
    pub fn shape(&self) -> (usize, usize) {
        (4, self.users.len())
    }

    pub fn get(&self, label: ViewpointLabel, user: usize) -> u64 {
        self.columns[user][label.index()]
    }

    pub fn total(&self) -> u64 {
        self.columns.iter().flatten().sum()
    }

    /// CSV with one header row of author ids and one row per label L1..L4.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.users).expect("in-memory write");
        for label in ViewpointLabel::ALL {
            w.write_record(self.columns.iter().map(|c| c[label.index()].to_string()))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}

pub fn build_viewpoint_matrix(network: &ViewpointNetwork) -> ViewpointMatrix {
    let users: Vec<String> = network.users.iter().cloned().collect();
    let mut columns = vec![[0u64; 4]; users.len()];
    for e in &network.exposures {
        let col = users
            .binary_search(&e.target)
            .expect("exposure target is a conversation user");
        columns[col][e.label.index()] += 1;
    }
    ViewpointMatrix {
        conversation_id: network.conversation_id.clone(),
        users,
        columns,
    }
}

pub fn viewpoint_matrix(tree: &ConversationTree) -> ViewpointMatrix {
    build_viewpoint_matrix(&build_viewpoint_network(tree))
}
