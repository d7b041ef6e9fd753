//! The four-way viewpoint labelling and the annotation merge that produces it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Viewpoint label attached to every tweet.
///
/// The ordinal order `L1 < L2 < L3 < L4` is the row order of every viewpoint
/// matrix and of every label-share vector in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ViewpointLabel {
    /// Irrelevant to the topic (also used for non-English and unlabeled tweets).
    L1,
    /// Relevant, but no claim.
    L2,
    /// Diagnostic claim: the oppositional viewpoint.
    L3,
    /// Counterclaim: the supportive viewpoint.
    L4,
}

impl ViewpointLabel {
    pub const ALL: [ViewpointLabel; 4] = [Self::L1, Self::L2, Self::L3, Self::L4];

    /// Row index in `0..4`.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::L1 => "L1",
            Self::L2 => "L2",
            Self::L3 => "L3",
            Self::L4 => "L4",
        }
    }
}

impl fmt::Display for ViewpointLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {kind} value {value:?}")]
pub struct UnknownValue {
    pub kind: &'static str,
    pub value: String,
}

impl FromStr for ViewpointLabel {
    type Err = UnknownValue;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "L1" | "l1" => Ok(Self::L1),
            "L2" | "l2" => Ok(Self::L2),
            "L3" | "l3" => Ok(Self::L3),
            "L4" | "l4" => Ok(Self::L4),
            other => Err(UnknownValue {
                kind: "label",
                value: other.to_string(),
            }),
        }
    }
}

/// Output of the relevance classifier (or annotator).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relevance {
    Relevant,
    Irrelevant,
    NotEnglish,
}

impl Relevance {
    pub const ALL: [Relevance; 3] = [Self::Relevant, Self::Irrelevant, Self::NotEnglish];
}

impl FromStr for Relevance {
    type Err = UnknownValue;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "relevant" => Ok(Self::Relevant),
            "irrelevant" | "not_relevant" => Ok(Self::Irrelevant),
            "not_english" | "not english" => Ok(Self::NotEnglish),
            _ => Err(UnknownValue {
                kind: "relevance",
                value: s.to_string(),
            }),
        }
    }
}

/// Output of the claim classifier (or annotator).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Claim {
    Diagnostic,
    Counterclaim,
    None,
}

impl Claim {
    pub const ALL: [Claim; 3] = [Self::Diagnostic, Self::Counterclaim, Self::None];
}

impl FromStr for Claim {
    type Err = UnknownValue;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "diagnostic" => Ok(Self::Diagnostic),
            "counterclaim" => Ok(Self::Counterclaim),
            "none" => Ok(Self::None),
            _ => Err(UnknownValue {
                kind: "claim",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RawAnnotation {
    pub relevance: Relevance,
    pub claim: Claim,
}

impl RawAnnotation {
    pub fn new(relevance: Relevance, claim: Claim) -> Self {
        Self { relevance, claim }
    }
}

/// Collapse a (relevance, claim) pair into one viewpoint label.
///
/// A claim wins over the relevance verdict; without a claim only relevant
/// tweets become `L2`, everything else is `L1`.
pub fn merge_labels(raw: RawAnnotation) -> ViewpointLabel {
    match (raw.claim, raw.relevance) {
        (Claim::Diagnostic, _) => ViewpointLabel::L3,
        (Claim::Counterclaim, _) => ViewpointLabel::L4,
        (Claim::None, Relevance::Relevant) => ViewpointLabel::L2,
        (Claim::None, Relevance::Irrelevant | Relevance::NotEnglish) => ViewpointLabel::L1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_is_total_and_matches_decision_table() {
        let mut seen = 0;
        for relevance in Relevance::ALL {
            for claim in Claim::ALL {
                let expected = match claim {
                    Claim::Diagnostic => ViewpointLabel::L3,
                    Claim::Counterclaim => ViewpointLabel::L4,
                    Claim::None if relevance == Relevance::Relevant => ViewpointLabel::L2,
                    Claim::None => ViewpointLabel::L1,
                };
                assert_eq!(merge_labels(RawAnnotation::new(relevance, claim)), expected);
                seen += 1;
            }
        }
        assert_eq!(seen, 9);
    }

    #[test]
    fn merge_examples() {
        use Claim::*;
        assert_eq!(
            merge_labels(RawAnnotation::new(Relevance::Irrelevant, Diagnostic)),
            ViewpointLabel::L3
        );
        assert_eq!(
            merge_labels(RawAnnotation::new(Relevance::Relevant, None)),
            ViewpointLabel::L2
        );
        assert_eq!(
            merge_labels(RawAnnotation::new(Relevance::NotEnglish, None)),
            ViewpointLabel::L1
        );
    }

    #[test]
    fn label_order_and_parse() {
        assert!(ViewpointLabel::L1 < ViewpointLabel::L2);
        assert!(ViewpointLabel::L3 < ViewpointLabel::L4);
        for l in ViewpointLabel::ALL {
            assert_eq!(l.as_str().parse::<ViewpointLabel>().unwrap(), l);
            assert_eq!(ViewpointLabel::from_index(l.index()), Some(l));
        }
        assert!("L5".parse::<ViewpointLabel>().is_err());
        assert!("maybe".parse::<Relevance>().is_err());
        assert_eq!("not_english".parse::<Relevance>().unwrap(), Relevance::NotEnglish);
    }
}
