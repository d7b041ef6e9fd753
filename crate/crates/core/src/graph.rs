//! Reply-tree reconstruction, eligibility filtering, size capping and
//! corpus-level structural statistics.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::error::{ConfigError, GraphError};
use crate::ingest::{Corpus, TweetRecord};
use crate::label::ViewpointLabel;

/// One validated reply tree.
///
/// Nodes are stored sorted by tweet id; edges are child → parent and only
/// exist between nodes of the tree, so a retained component whose original
/// parent is missing is rooted at that orphan.
#[derive(Debug, Clone, PartialEq)]
pub struct ConversationTree {
    conversation_id: String,
    nodes: Vec<TweetRecord>,
    parents: Vec<Option<usize>>,
    root: usize,
}

impl ConversationTree {
    /// Build a tree from records, deriving edges from the `parent_id`s that
    /// resolve inside `records`.
    pub fn new(
        conversation_id: impl Into<String>,
        mut records: Vec<TweetRecord>,
    ) -> Result<Self, GraphError> {
        let conversation_id = conversation_id.into();
        let not_a_tree = |reason: String| GraphError::NotATree {
            conversation_id: conversation_id.clone(),
            reason,
        };
        if records.is_empty() {
            return Err(not_a_tree("no tweets".into()));
        }
        records.sort_by(|a, b| a.tweet_id.cmp(&b.tweet_id));
        if let Some(w) = records.windows(2).find(|w| w[0].tweet_id == w[1].tweet_id) {
            return Err(not_a_tree(format!("duplicate tweet id {}", w[0].tweet_id)));
        }
        let parents = resolve_parents(&records);
        let roots: Vec<usize> = (0..records.len()).filter(|&i| parents[i].is_none()).collect();
        match roots.len() {
            0 => {
                return Err(GraphError::Cycle { conversation_id });
            }
            1 => {}
            n => return Err(not_a_tree(format!("{n} parentless tweets"))),
        }
        let root = roots[0];
        let reached = bfs_order(&children_of(&parents), root).len();
        if reached != records.len() {
            // One root and unreachable nodes: those nodes loop among themselves.
            return Err(GraphError::Cycle { conversation_id });
        }
        Ok(Self {
            conversation_id,
            nodes: records,
            parents,
            root,
        })
    }

    pub fn conversation_id(&self) -> &str {
        &self.conversation_id
    }

    pub fn root(&self) -> &TweetRecord {
        &self.nodes[self.root]
    }

    /// Tweets sorted by id.
    pub fn nodes(&self) -> &[TweetRecord] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n_edges(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Parent index of node `i` within [`nodes`](Self::nodes).
    pub fn parent_index(&self, i: usize) -> Option<usize> {
        self.parents[i]
    }

    /// Reply edges as (child, parent) pairs, in child id order.
    pub fn edges(&self) -> impl Iterator<Item = (&TweetRecord, &TweetRecord)> + '_ {
        self.parents
            .iter()
            .enumerate()
            .filter_map(|(c, p)| p.map(|p| (&self.nodes[c], &self.nodes[p])))
    }

    /// tweet id → author id.
    pub fn authors(&self) -> BTreeMap<&str, &str> {
        self.nodes
            .iter()
            .map(|t| (t.tweet_id.as_str(), t.author_id.as_str()))
            .collect()
    }

    pub fn distinct_authors(&self) -> BTreeSet<&str> {
        self.nodes.iter().map(|t| t.author_id.as_str()).collect()
    }

    pub fn label_counts(&self) -> [usize; 4] {
        let mut counts = [0; 4];
        for t in &self.nodes {
            counts[t.label.index()] += 1;
        }
        counts
    }

    /// Node indices in breadth-first order, siblings and same-depth nodes
    /// ordered by ascending tweet id.
    pub fn breadth_first(&self) -> Vec<usize> {
        bfs_order(&children_of(&self.parents), self.root)
    }

    pub fn has_label(&self, label: ViewpointLabel) -> bool {
        self.nodes.iter().any(|t| t.label == label)
    }
}

fn resolve_parents(sorted: &[TweetRecord]) -> Vec<Option<usize>> {
    let index: HashMap<&str, usize> = sorted
        .iter()
        .enumerate()
        .map(|(i, t)| (t.tweet_id.as_str(), i))
        .collect();
    sorted
        .iter()
        .map(|t| t.parent_id.as_deref().and_then(|p| index.get(p).copied()))
        .collect()
}

fn children_of(parents: &[Option<usize>]) -> Vec<Vec<usize>> {
    let mut children = vec![Vec::new(); parents.len()];
    // Ascending child index = ascending tweet id, since nodes are id-sorted.
    for (c, p) in parents.iter().enumerate() {
        if let Some(p) = *p {
            children[p].push(c);
        }
    }
    children
}

/// Level-by-level order; within a level, ascending node index.
fn bfs_order(children: &[Vec<usize>], root: usize) -> Vec<usize> {
    let mut order = vec![root];
    let mut level = vec![root];
    while !level.is_empty() {
        let mut next: Vec<usize> = level.iter().flat_map(|&n| children[n].iter().copied()).collect();
        next.sort_unstable();
        order.extend_from_slice(&next);
        level = next;
    }
    order
}

/// What reconstruction discarded.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ReconstructionDiagnostics {
    pub n_groups: usize,
    /// Conversations whose tweets formed more than one component.
    pub n_groups_disconnected: usize,
    pub n_discarded_components: usize,
    pub n_discarded_tweets: usize,
}

/// Group tweets by conversation and reconstruct one reply tree per group.
///
/// When missing parents split a group, only the largest component is kept
/// (ties go to the component holding the smallest tweet id).
pub fn build_conversations(
    corpus: &Corpus,
) -> Result<(Vec<ConversationTree>, ReconstructionDiagnostics), GraphError> {
    let mut groups: BTreeMap<&str, Vec<&TweetRecord>> = BTreeMap::new();
    for t in corpus.tweets() {
        groups.entry(t.conversation_id.as_str()).or_default().push(t);
    }
    let mut diag = ReconstructionDiagnostics {
        n_groups: groups.len(),
        ..Default::default()
    };
    let mut trees = Vec::with_capacity(groups.len());
    for (conversation_id, mut group) in groups {
        group.sort_by(|a, b| a.tweet_id.cmp(&b.tweet_id));
        let owned: Vec<TweetRecord> = group.into_iter().cloned().collect();
        let parents = resolve_parents(&owned);
        let component_root = component_roots(&parents).ok_or_else(|| GraphError::Cycle {
            conversation_id: conversation_id.to_string(),
        })?;

        // root index -> (size, smallest member index)
        let mut components: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        for (i, &r) in component_root.iter().enumerate() {
            let entry = components.entry(r).or_insert((0, i));
            entry.0 += 1;
            entry.1 = entry.1.min(i);
        }
        let (&keep, &(kept_size, _)) = components
            .iter()
            .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)))
            .expect("non-empty group");
        if components.len() > 1 {
            diag.n_groups_disconnected += 1;
            diag.n_discarded_components += components.len() - 1;
            diag.n_discarded_tweets += owned.len() - kept_size;
        }
        let records: Vec<TweetRecord> = owned
            .into_iter()
            .zip(&component_root)
            .filter(|(_, &r)| r == keep)
            .map(|(t, _)| t)
            .collect();
        trees.push(ConversationTree::new(conversation_id, records)?);
    }
    Ok((trees, diag))
}

/// Root of every node's component, or `None` if any parent chain loops.
fn component_roots(parents: &[Option<usize>]) -> Option<Vec<usize>> {
    const UNSEEN: usize = usize::MAX;
    const IN_PROGRESS: usize = usize::MAX - 1;
    let mut root = vec![UNSEEN; parents.len()];
    let mut path = Vec::new();
    for start in 0..parents.len() {
        let mut n = start;
        while root[n] == UNSEEN {
            root[n] = IN_PROGRESS;
            path.push(n);
            match parents[n] {
                Some(p) => n = p,
                None => {
                    root[n] = n;
                    break;
                }
            }
        }
        if root[n] == IN_PROGRESS {
            return None;
        }
        let r = root[n];
        for m in path.drain(..) {
            root[m] = r;
        }
    }
    Some(root)
}

/// Why a tree fails the eligibility rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ineligible {
    Singleton,
    TooFewAuthors,
}

pub fn check_eligible(tree: &ConversationTree, min_authors: usize) -> Result<(), Ineligible> {
    if tree.len() < 2 {
        Err(Ineligible::Singleton)
    } else if tree.distinct_authors().len() < min_authors {
        Err(Ineligible::TooFewAuthors)
    } else {
        Ok(())
    }
}

/// Keep trees with at least two tweets and at least `min_authors` distinct authors.
pub fn filter_eligible(trees: Vec<ConversationTree>, min_authors: usize) -> Vec<ConversationTree> {
    trees
        .into_iter()
        .filter(|t| check_eligible(t, min_authors).is_ok())
        .collect()
}

/// Default tweet cap per conversation.
pub const DEFAULT_MAX_NODES: usize = 50;

/// Truncate a tree to its first `max_nodes` tweets in breadth-first order.
///
/// Any prefix of a level-ordered traversal contains every kept node's
/// parent, so the result is again a single tree.
pub fn cap_size(tree: ConversationTree, max_nodes: usize) -> Result<ConversationTree, ConfigError> {
    if max_nodes < 2 {
        return Err(ConfigError::new(format!(
            "max tweets per conversation must be at least 2, got {max_nodes}"
        )));
    }
    if tree.len() <= max_nodes {
        return Ok(tree);
    }
    let mut keep = vec![false; tree.len()];
    for &i in tree.breadth_first().iter().take(max_nodes) {
        keep[i] = true;
    }
    let ConversationTree {
        conversation_id,
        nodes,
        ..
    } = tree;
    let records: Vec<TweetRecord> = nodes
        .into_iter()
        .zip(keep)
        .filter_map(|(t, k)| k.then_some(t))
        .collect();
    Ok(ConversationTree::new(conversation_id, records).expect("breadth-first prefix is a tree"))
}

/// Structural and label statistics of a topic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub n_conversations: usize,
    pub n_nodes: usize,
    pub n_edges: usize,
    pub n_distinct_users: usize,
    pub label_counts: [usize; 4],
    /// `None` when there are no nodes.
    pub label_shares: Option<[f64; 4]>,
}

/// Distinct users are deduplicated across the whole topic.
pub fn corpus_stats(trees: &[ConversationTree]) -> CorpusStats {
    let mut users = BTreeSet::new();
    let mut label_counts = [0usize; 4];
    let mut n_nodes = 0;
    let mut n_edges = 0;
    for tree in trees {
        n_nodes += tree.len();
        n_edges += tree.n_edges();
        users.extend(tree.distinct_authors());
        for (acc, c) in label_counts.iter_mut().zip(tree.label_counts()) {
            *acc += c;
        }
    }
    let label_shares = (n_nodes > 0).then(|| label_counts.map(|c| c as f64 / n_nodes as f64));
    CorpusStats {
        n_conversations: trees.len(),
        n_nodes,
        n_edges,
        n_distinct_users: users.len(),
        label_counts,
        label_shares,
    }
}

#[derive(Serialize)]
struct TreeAudit<'a> {
    conversation_id: &'a str,
    root: &'a str,
    nodes: Vec<NodeAudit<'a>>,
    edges: Vec<[&'a str; 2]>,
}

#[derive(Serialize)]
struct NodeAudit<'a> {
    id: &'a str,
    author_id: &'a str,
    label: ViewpointLabel,
}

/// One-line JSON rendering of a tree: conversation id, nodes, and child→parent edges.
pub fn tree_audit_line(tree: &ConversationTree) -> String {
    let audit = TreeAudit {
        conversation_id: tree.conversation_id(),
        root: &tree.root().tweet_id,
        nodes: tree
            .nodes()
            .iter()
            .map(|t| NodeAudit {
                id: &t.tweet_id,
                author_id: &t.author_id,
                label: t.label,
            })
            .collect(),
        edges: tree
            .edges()
            .map(|(c, p)| [c.tweet_id.as_str(), p.tweet_id.as_str()])
            .collect(),
    };
    serde_json::to_string(&audit).expect("audit record serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::ViewpointLabel::*;

    fn rec(id: &str, author: &str, conv: &str, parent: Option<&str>) -> TweetRecord {
        TweetRecord::new(id, author, conv, parent, L2)
    }

    fn fig2() -> Vec<TweetRecord> {
        vec![
            rec("A", "u1", "A", None),
            rec("B", "u2", "A", Some("A")),
            rec("C", "u3", "A", Some("A")),
            rec("D", "u1", "A", Some("C")),
        ]
    }

    fn corpus(records: Vec<TweetRecord>) -> Corpus {
        Corpus::from_records("t", records).unwrap()
    }

    #[test]
    fn fig2_reconstructs_one_tree() {
        let (trees, diag) = build_conversations(&corpus(fig2())).unwrap();
        assert_eq!(trees.len(), 1);
        let t = &trees[0];
        assert_eq!(t.root().tweet_id, "A");
        assert_eq!(t.len(), 4);
        assert_eq!(t.edges().count(), 3);
        assert_eq!(t.distinct_authors().len(), 3);
        assert_eq!(diag.n_discarded_components, 0);
        let edges: Vec<_> = t.edges().map(|(c, p)| (c.tweet_id.as_str(), p.tweet_id.as_str())).collect();
        assert_eq!(edges, [("B", "A"), ("C", "A"), ("D", "C")]);
    }

    #[test]
    fn missing_parent_keeps_largest_component() {
        let records = vec![
            rec("A", "u1", "A", None),
            rec("B", "u2", "A", Some("A")),
            rec("E", "u3", "A", Some("M")),
        ];
        let (trees, diag) = build_conversations(&corpus(records)).unwrap();
        let ids: Vec<_> = trees[0].nodes().iter().map(|t| t.tweet_id.as_str()).collect();
        assert_eq!(ids, ["A", "B"]);
        assert_eq!(diag.n_discarded_components, 1);
        assert_eq!(diag.n_discarded_tweets, 1);
        assert_eq!(diag.n_groups_disconnected, 1);
    }

    #[test]
    fn equal_components_tie_break_on_smallest_id() {
        let records = vec![
            rec("P", "u1", "c", Some("gone1")),
            rec("Q", "u2", "c", Some("P")),
            rec("B", "u3", "c", Some("gone2")),
            rec("Z", "u4", "c", Some("B")),
        ];
        let (trees, _) = build_conversations(&corpus(records)).unwrap();
        assert_eq!(trees[0].root().tweet_id, "B");
        assert_eq!(trees[0].len(), 2);
    }

    #[test]
    fn cycle_is_an_error() {
        let records = vec![rec("A", "u1", "c", Some("B")), rec("B", "u2", "c", Some("A"))];
        match build_conversations(&corpus(records)) {
            Err(GraphError::Cycle { conversation_id }) => assert_eq!(conversation_id, "c"),
            other => panic!("unexpected {other:?}"),
        }
        // A cycle hanging off an otherwise valid tree.
        let records = vec![
            rec("R", "u1", "c", None),
            rec("S", "u2", "c", Some("R")),
            rec("X", "u1", "c", Some("Y")),
            rec("Y", "u2", "c", Some("X")),
        ];
        assert!(matches!(build_conversations(&corpus(records)), Err(GraphError::Cycle { .. })));
        assert!(matches!(
            ConversationTree::new("c", vec![rec("A", "u", "c", Some("B")), rec("B", "u", "c", Some("A"))]),
            Err(GraphError::Cycle { .. })
        ));
    }

    #[test]
    fn new_rejects_forests() {
        let records = vec![rec("A", "u1", "c", None), rec("B", "u2", "c", None)];
        assert!(matches!(ConversationTree::new("c", records), Err(GraphError::NotATree { .. })));
    }

    #[test]
    fn eligibility_filters() {
        let singleton = ConversationTree::new("s", vec![rec("S", "u1", "s", None)]).unwrap();
        let chain = ConversationTree::new(
            "c",
            vec![
                rec("a", "u1", "c", None),
                rec("b", "u1", "c", Some("a")),
                rec("c", "u1", "c", Some("b")),
            ],
        )
        .unwrap();
        let good = ConversationTree::new("A", fig2()).unwrap();
        assert_eq!(check_eligible(&singleton, 2), Err(Ineligible::Singleton));
        assert_eq!(check_eligible(&chain, 2), Err(Ineligible::TooFewAuthors));
        let kept = filter_eligible(vec![singleton, chain, good.clone()], 2);
        assert_eq!(kept, vec![good.clone()]);
        assert_eq!(filter_eligible(kept.clone(), 2), kept);
        assert!(filter_eligible(vec![good], 4).is_empty());
    }

    fn star(n_replies: usize) -> ConversationTree {
        let mut records = vec![rec("r", "root", "r", None)];
        for i in 0..n_replies {
            records.push(rec(&format!("x{i:03}"), &format!("u{i}"), "r", Some("r")));
        }
        ConversationTree::new("r", records).unwrap()
    }

    #[test]
    fn cap_identity_when_small() {
        let t = ConversationTree::new("A", fig2()).unwrap();
        assert_eq!(cap_size(t.clone(), 50).unwrap(), t);
    }

    #[test]
    fn cap_star_keeps_smallest_ids() {
        let capped = cap_size(star(59), 50).unwrap();
        assert_eq!(capped.len(), 50);
        assert_eq!(capped.root().tweet_id, "r");
        let expected: Vec<String> = (0..49).map(|i| format!("x{i:03}")).collect();
        let kept: Vec<&str> = capped.nodes().iter().map(|t| t.tweet_id.as_str()).filter(|&id| id != "r").collect();
        assert_eq!(kept, expected);
        assert_eq!(cap_size(capped.clone(), 50).unwrap(), capped);
    }

    #[test]
    fn cap_is_level_ordered() {
        // r -> a -> z ; r -> b -> c ; cap 4 keeps r,a,b then c (smaller id at depth 2)
        let t = ConversationTree::new(
            "r",
            vec![
                rec("r", "u1", "r", None),
                rec("a", "u2", "r", Some("r")),
                rec("b", "u3", "r", Some("r")),
                rec("z", "u4", "r", Some("a")),
                rec("c", "u5", "r", Some("b")),
            ],
        )
        .unwrap();
        let capped = cap_size(t, 4).unwrap();
        let ids: Vec<_> = capped.nodes().iter().map(|t| t.tweet_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c", "r"]);
    }

    #[test]
    fn cap_below_two_is_config_error() {
        let t = ConversationTree::new("A", fig2()).unwrap();
        assert!(cap_size(t.clone(), 1).is_err());
        assert!(cap_size(t, 0).is_err());
    }

    #[test]
    fn stats_for_fig2_and_empty() {
        let t = ConversationTree::new("A", fig2()).unwrap();
        let s = corpus_stats(&[t]);
        assert_eq!((s.n_conversations, s.n_nodes, s.n_edges, s.n_distinct_users), (1, 4, 3, 3));
        assert_eq!(s.label_shares, Some([0.0, 1.0, 0.0, 0.0]));
        let e = corpus_stats(&[]);
        assert_eq!((e.n_conversations, e.n_nodes, e.n_edges, e.n_distinct_users), (0, 0, 0, 0));
        assert_eq!(e.label_shares, None);
    }

    #[test]
    fn distinct_users_dedupe_across_conversations() {
        let a = ConversationTree::new("A", fig2()).unwrap();
        let b = ConversationTree::new(
            "X",
            vec![rec("X", "u1", "X", None), rec("Y", "u9", "X", Some("X"))],
        )
        .unwrap();
        assert_eq!(corpus_stats(&[a, b]).n_distinct_users, 4);
    }

    #[test]
    fn audit_line_lists_edges() {
        let t = ConversationTree::new("A", fig2()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&tree_audit_line(&t)).unwrap();
        assert_eq!(v["root"], "A");
        assert_eq!(v["edges"].as_array().unwrap().len(), 3);
        assert_eq!(v["nodes"].as_array().unwrap().len(), 4);
    }
}
