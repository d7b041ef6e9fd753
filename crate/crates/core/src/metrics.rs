//! Fragmentation (per user) and Representation (per conversation), plus
//! fixed-width histograms over their scores.

use std::fmt;

use serde::Serialize;

use crate::error::{ConfigError, MetricError};
use crate::exposure::ViewpointMatrix;
use crate::graph::ConversationTree;
use crate::label::ViewpointLabel;

/// Whether the irrelevant label takes part in a metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    WithL1,
    WithoutL1,
}

impl Variant {
    pub const BOTH: [Variant; 2] = [Variant::WithL1, Variant::WithoutL1];

    pub fn excludes_l1(self) -> bool {
        self == Variant::WithoutL1
    }

    /// Labels that take part under this variant, in ordinal order.
    pub fn active_labels(self) -> &'static [ViewpointLabel] {
        match self {
            Variant::WithL1 => &ViewpointLabel::ALL,
            Variant::WithoutL1 => &ViewpointLabel::ALL[1..],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::WithL1 => "with_l1",
            Variant::WithoutL1 => "without_l1",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Why a user has no Fragmentation score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Undefined {
    /// Exposure column is all zero under the variant.
    ZeroExposure,
    /// Fewer than two users with nonzero exposure in the conversation.
    NoPeers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FragmentationScore {
    pub conversation_id: String,
    pub author_id: String,
    pub score: Option<f64>,
    pub undefined: Option<Undefined>,
}

impl FragmentationScore {
    pub fn is_defined(&self) -> bool {
        self.score.is_some()
    }
}

/// Cosine similarity of two nonnegative count vectors, both nonzero.
///
/// Computed as `dot / sqrt(|a|² |b|²)` in integers so that identical
/// vectors give exactly 1.
pub fn cosine_similarity(a: &[u64], b: &[u64]) -> f64 {
    let dot: u128 = a.iter().zip(b).map(|(&x, &y)| x as u128 * y as u128).sum();
    let na: u128 = a.iter().map(|&x| x as u128 * x as u128).sum();
    let nb: u128 = b.iter().map(|&x| x as u128 * x as u128).sum();
    debug_assert!(na > 0 && nb > 0);
    let sim = dot as f64 / ((na as f64) * (nb as f64)).sqrt();
    sim.clamp(0.0, 1.0)
}

/// One minus the mean cosine similarity between a user's exposure column
/// and every other user's, for all users with nonzero exposure.
pub fn fragmentation_scores(matrix: &ViewpointMatrix, variant: Variant) -> Vec<FragmentationScore> {
    let first_row = if variant.excludes_l1() { 1 } else { 0 };
    let rows: Vec<&[u64]> = matrix.columns().iter().map(|c| &c[first_row..]).collect();
    let live: Vec<usize> = (0..rows.len())
        .filter(|&u| rows[u].iter().any(|&x| x > 0))
        .collect();

    let mut scores: Vec<FragmentationScore> = matrix
        .users()
        .iter()
        .map(|author| FragmentationScore {
            conversation_id: matrix.conversation_id.clone(),
            author_id: author.clone(),
            score: None,
            undefined: Some(Undefined::ZeroExposure),
        })
        .collect();

    if live.len() < 2 {
        for &u in &live {
            scores[u].undefined = Some(Undefined::NoPeers);
        }
        return scores;
    }

    let n = live.len();
    let mut sums = vec![0.0f64; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let sim = cosine_similarity(rows[live[i]], rows[live[j]]);
            sums[i] += sim;
            sums[j] += sim;
        }
    }
    for (k, &u) in live.iter().enumerate() {
        let mean = sums[k] / (n - 1) as f64;
        scores[u].score = Some((1.0 - mean).clamp(0.0, 1.0));
        scores[u].undefined = None;
    }
    scores
}

/// Probabilities over the labels active under a variant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelDistribution {
    pub variant: Variant,
    pub counts: Vec<usize>,
    pub probs: Vec<f64>,
}

impl LabelDistribution {
    pub fn from_label_counts(counts: [usize; 4], variant: Variant) -> Self {
        let counts: Vec<usize> = variant
            .active_labels()
            .iter()
            .map(|l| counts[l.index()])
            .collect();
        let total: usize = counts.iter().sum();
        let probs = if total == 0 {
            vec![0.0; counts.len()]
        } else {
            counts.iter().map(|&c| c as f64 / total as f64).collect()
        };
        Self {
            variant,
            counts,
            probs,
        }
    }

    pub fn labels(&self) -> &'static [ViewpointLabel] {
        self.variant.active_labels()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// No tweets fall in the active label set.
    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    pub fn prob(&self, label: ViewpointLabel) -> Option<f64> {
        self.labels()
            .iter()
            .position(|&l| l == label)
            .map(|i| self.probs[i])
    }
}

/// Label proportions over all tweets of a topic.
pub fn pool_distribution(trees: &[ConversationTree], variant: Variant) -> LabelDistribution {
    let mut counts = [0usize; 4];
    for t in trees {
        for (acc, c) in counts.iter_mut().zip(t.label_counts()) {
            *acc += c;
        }
    }
    LabelDistribution::from_label_counts(counts, variant)
}

/// `KL(p ‖ q)` in nats with `0·ln(0/q) = 0`.
///
/// Returns the index of the first label where `p > 0` but `q = 0`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64, usize> {
    assert_eq!(p.len(), q.len());
    let mut kl = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(i);
        }
        kl += pi * (pi / qi).ln();
    }
    Ok(kl.max(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationScore {
    pub conversation_id: String,
    /// `None` when the conversation has no tweets in the active label set.
    pub raw_kl: Option<f64>,
    pub score: Option<f64>,
}

/// KL divergence of each conversation's label distribution from the pool,
/// divided by the largest such divergence in the topic.
pub fn representation_scores(
    trees: &[ConversationTree],
    pool: &LabelDistribution,
    variant: Variant,
) -> Result<Vec<RepresentationScore>, MetricError> {
    if pool.variant != variant {
        return Err(MetricError::PoolShape {
            pool: pool.probs.len(),
            expected: variant.active_labels().len(),
        });
    }
    let mut out = Vec::with_capacity(trees.len());
    for t in trees {
        let dist = LabelDistribution::from_label_counts(t.label_counts(), variant);
        let raw_kl = if dist.is_empty() {
            None
        } else {
            let kl = kl_divergence(&dist.probs, &pool.probs).map_err(|i| MetricError::PoolSupport {
                conversation_id: t.conversation_id().to_string(),
                label: variant.active_labels()[i],
            })?;
            Some(kl)
        };
        out.push(RepresentationScore {
            conversation_id: t.conversation_id().to_string(),
            raw_kl,
            score: None,
        });
    }
    let max = out.iter().filter_map(|s| s.raw_kl).fold(0.0f64, f64::max);
    for s in &mut out {
        s.score = s.raw_kl.map(|kl| if max > 0.0 { kl / max } else { 0.0 });
    }
    Ok(out)
}

pub const DEFAULT_BIN_WIDTH: f64 = 0.05;

/// Counts over `[0, 1]` in half-open bins `[k·w, (k+1)·w)`; the final bin is closed.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_width: f64,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub share: f64,
}

// Tolerance for treating a score as sitting exactly on a bin edge.
const EDGE_EPS: f64 = 1e-9;

fn bin_count(bin_width: f64) -> usize {
    let x = 1.0 / bin_width;
    let r = x.round();
    if (x - r).abs() < EDGE_EPS {
        r as usize
    } else {
        x.ceil() as usize
    }
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn bins(&self) -> Vec<Bin> {
        let total = self.total();
        let n = self.counts.len();
        self.counts
            .iter()
            .enumerate()
            .map(|(k, &count)| Bin {
                lower: k as f64 * self.bin_width,
                upper: if k + 1 == n { 1.0 } else { (k + 1) as f64 * self.bin_width },
                count,
                share: if total == 0 { 0.0 } else { count as f64 / total as f64 },
            })
            .collect()
    }

    /// Share of scores in the first bin.
    pub fn lowest_share(&self) -> f64 {
        self.bins().first().map_or(0.0, |b| b.share)
    }
}

/// Bin scores in `[0, 1]`; values outside are clamped into the edge bins.
pub fn histogram(scores: &[f64], bin_width: f64) -> Result<Histogram, ConfigError> {
    if !(bin_width > 0.0 && bin_width <= 1.0) {
        return Err(ConfigError::new(format!(
            "bin width must be in (0, 1], got {bin_width}"
        )));
    }
    let n = bin_count(bin_width);
    let mut counts = vec![0usize; n];
    for &s in scores {
        let x = s.clamp(0.0, 1.0) / bin_width;
        let nearest = x.round();
        let k = if (x - nearest).abs() < EDGE_EPS { nearest } else { x.floor() };
        counts[(k as usize).min(n - 1)] += 1;
    }
    Ok(Histogram { bin_width, counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::TweetRecord;
    use crate::label::ViewpointLabel::*;

    fn matrix(cols: &[[u64; 4]]) -> ViewpointMatrix {
        let users = (0..cols.len()).map(|i| format!("u{i}")).collect();
        ViewpointMatrix::from_columns("c", users, cols.to_vec())
    }

    fn scores(m: &ViewpointMatrix, v: Variant) -> Vec<Option<f64>> {
        fragmentation_scores(m, v).into_iter().map(|s| s.score).collect()
    }

    #[test]
    fn two_users_distinct_labels_score_one() {
        let m = matrix(&[[0, 0, 0, 1], [0, 0, 1, 0]]);
        assert_eq!(scores(&m, Variant::WithL1), [Some(1.0), Some(1.0)]);
    }

    #[test]
    fn two_users_same_label_score_zero() {
        let m = matrix(&[[0, 0, 1, 0], [0, 0, 1, 0]]);
        assert_eq!(scores(&m, Variant::WithL1), [Some(0.0), Some(0.0)]);
        let m = matrix(&[[0, 3, 2, 0], [0, 3, 2, 0]]);
        assert_eq!(scores(&m, Variant::WithL1), [Some(0.0), Some(0.0)]);
    }

    #[test]
    fn three_user_example() {
        let m = matrix(&[[0, 0, 1, 0], [0, 0, 1, 0], [0, 0, 0, 1]]);
        assert_eq!(scores(&m, Variant::WithL1), [Some(0.5), Some(0.5), Some(1.0)]);
    }

    #[test]
    fn zero_columns_and_lone_users_are_undefined() {
        let m = matrix(&[[0, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0]]);
        let s = fragmentation_scores(&m, Variant::WithL1);
        assert_eq!(s[0].undefined, Some(Undefined::ZeroExposure));
        assert_eq!(s[1].score, Some(1.0));

        let m = matrix(&[[5, 0, 0, 0], [0, 0, 1, 0]]);
        let s = fragmentation_scores(&m, Variant::WithoutL1);
        assert_eq!(s[0].undefined, Some(Undefined::ZeroExposure));
        assert_eq!(s[1].undefined, Some(Undefined::NoPeers));
        assert!(s.iter().all(|x| x.score.is_none()));
    }

    #[test]
    fn l1_row_dropped_under_exclusion() {
        let m = matrix(&[[3, 0, 1, 0], [0, 0, 1, 0]]);
        assert_eq!(scores(&m, Variant::WithoutL1), [Some(0.0), Some(0.0)]);
        let with = scores(&m, Variant::WithL1);
        assert!(with[0].unwrap() > 0.5);
    }

    fn conv(id: &str, labels: &[ViewpointLabel]) -> ConversationTree {
        let recs = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                let parent = (i > 0).then(|| format!("{id}-0"));
                TweetRecord::new(format!("{id}-{i}"), format!("u{i}"), id, parent.as_deref(), l)
            })
            .collect();
        ConversationTree::new(id, recs).unwrap()
    }

    #[test]
    fn pool_shares() {
        let t = conv("a", &[L2, L2, L3, L4]);
        let d = pool_distribution(std::slice::from_ref(&t), Variant::WithoutL1);
        assert_eq!(d.probs, [0.5, 0.25, 0.25]);
        assert_eq!(d.prob(L1), None);
        assert!(pool_distribution(&[], Variant::WithL1).is_empty());
    }

    #[test]
    fn representation_two_conversation_example() {
        let trees = vec![conv("a", &[L1, L1]), conv("b", &[L1, L2])];
        let pool = LabelDistribution::from_label_counts([1, 1, 0, 0], Variant::WithL1);
        assert_eq!(pool.probs, [0.5, 0.5, 0.0, 0.0]);
        let r = representation_scores(&trees, &pool, Variant::WithL1).unwrap();
        assert_eq!(r[0].raw_kl, Some(std::f64::consts::LN_2));
        assert_eq!(r[1].raw_kl, Some(0.0));
        assert_eq!(r[0].score, Some(1.0));
        assert_eq!(r[1].score, Some(0.0));
    }

    #[test]
    fn representation_all_equal_is_zero() {
        let trees = vec![conv("a", &[L2, L3]), conv("b", &[L3, L2])];
        let pool = pool_distribution(&trees, Variant::WithL1);
        let r = representation_scores(&trees, &pool, Variant::WithL1).unwrap();
        assert!(r.iter().all(|s| s.raw_kl == Some(0.0) && s.score == Some(0.0)));
    }

    #[test]
    fn representation_undefined_without_active_labels() {
        let trees = vec![conv("a", &[L1, L1]), conv("b", &[L2, L3])];
        let pool = pool_distribution(&trees, Variant::WithoutL1);
        let r = representation_scores(&trees, &pool, Variant::WithoutL1).unwrap();
        assert_eq!(r[0].raw_kl, None);
        assert_eq!(r[0].score, None);
        assert_eq!(r[1].score, Some(0.0));
    }

    #[test]
    fn representation_rejects_foreign_pool() {
        let trees = vec![conv("a", &[L3, L4])];
        let pool = LabelDistribution::from_label_counts([1, 1, 0, 0], Variant::WithL1);
        assert!(matches!(
            representation_scores(&trees, &pool, Variant::WithL1),
            Err(MetricError::PoolSupport { label: L3, .. })
        ));
        assert!(matches!(
            representation_scores(&trees, &pool, Variant::WithoutL1),
            Err(MetricError::PoolShape { .. })
        ));
    }

    #[test]
    fn histogram_boundaries() {
        let h = histogram(&[0.0, 0.04, 0.05], 0.05).unwrap();
        assert_eq!(h.counts.len(), 20);
        assert_eq!(&h.counts[..2], [2, 1]);
        let h = histogram(&[1.0], 0.05).unwrap();
        assert_eq!(h.counts[19], 1);
    }

    #[test]
    fn histogram_uniform_grid() {
        let grid: Vec<f64> = (0..=20).map(|k| k as f64 * 0.05).collect();
        let h = histogram(&grid, 0.05).unwrap();
        let mut expected = vec![1; 20];
        expected[19] = 2;
        assert_eq!(h.counts, expected);
        // Literal decimal edges land in the same bins as k*w.
        let h2 = histogram(&[0.15, 0.3, 0.7, 0.95], 0.05).unwrap();
        assert_eq!(h2.counts[3], 1);
        assert_eq!(h2.counts[6], 1);
        assert_eq!(h2.counts[14], 1);
        assert_eq!(h2.counts[19], 1);
        let total: f64 = h.bins().iter().map(|b| b.share).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn histogram_width_validation() {
        assert!(histogram(&[], 0.0).is_err());
        assert!(histogram(&[], -0.1).is_err());
        assert!(histogram(&[], 1.5).is_err());
        assert!(histogram(&[], f64::NAN).is_err());
        let h = histogram(&[0.95, 1.0], 0.3).unwrap();
        assert_eq!(h.counts.len(), 4);
        assert_eq!(h.bins()[3].upper, 1.0);
        assert_eq!(h.counts[3], 2);
        let one = histogram(&[0.0, 0.5, 1.0], 1.0).unwrap();
        assert_eq!(one.counts, [3]);
    }

    #[test]
    fn kl_convention() {
        assert_eq!(kl_divergence(&[0.0, 1.0], &[0.5, 0.5]), Ok(std::f64::consts::LN_2));
        assert_eq!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]), Err(1));
    }
}
