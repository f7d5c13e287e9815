//! Bundled trees, elicitation records and published reference values.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::elicitation::{parse_sessions, ComparisonSession};
use crate::error::{Error, Result};
use crate::fault_tree::FaultTree;
use crate::inference::PriorSpec;

pub const FIG1_TREE: &str = include_str!("../data/fig1_tree.json");
pub const ATV_TREE: &str = include_str!("../data/atv_tree.json");
pub const FIG4_FULL: &str = include_str!("../data/fig4_full.json");
pub const FIG4_INCOMPLETE: &str = include_str!("../data/fig4_incomplete.json");
pub const ATV_ELICITATION: &str = include_str!("../data/atv_elicitation.json");
/// Beta priors exactly as published for the ATV primaries.
pub const ATV_PRIORS_PUBLISHED: &str = include_str!("../data/atv_priors_table7.json");
pub const PAPER_VALUES: &str = include_str!("../data/paper_values.json");

/// True primary probabilities of the four-event simulation study.
pub const FIG1_TRUTH: [f64; 4] = [0.02, 0.05, 0.05, 0.10];

pub fn fig1_tree() -> FaultTree {
    FaultTree::from_json(FIG1_TREE).expect("bundled tree is valid")
}

pub fn atv_tree() -> FaultTree {
    FaultTree::from_json(ATV_TREE).expect("bundled tree is valid")
}

pub fn fig4_full_sessions() -> Vec<ComparisonSession> {
    parse_sessions(FIG4_FULL).expect("bundled comparisons are valid")
}

pub fn fig4_incomplete_sessions() -> Vec<ComparisonSession> {
    parse_sessions(FIG4_INCOMPLETE).expect("bundled comparisons are valid")
}

pub fn atv_sessions() -> Vec<ComparisonSession> {
    parse_sessions(ATV_ELICITATION).expect("bundled comparisons are valid")
}

pub fn atv_published_priors() -> PriorSpec {
    PriorSpec::from_json(&atv_tree(), ATV_PRIORS_PUBLISHED).expect("bundled priors are valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToleranceKind {
    Abs,
    Rel,
}

/// One published value and the tolerance it is checked at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceCheck {
    pub quantity: String,
    pub value: f64,
    pub tolerance: f64,
    pub kind: ToleranceKind,
}

impl ReferenceCheck {
    pub fn passes(&self, observed: f64) -> bool {
        let allowed = match self.kind {
            ToleranceKind::Abs => self.tolerance,
            ToleranceKind::Rel => self.tolerance * self.value.abs(),
        };
        (observed - self.value).abs() <= allowed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceValues {
    pub version: u32,
    pub checks: BTreeMap<String, Vec<ReferenceCheck>>,
    /// Published values that are reported for comparison but not checked.
    #[serde(default)]
    pub reported: BTreeMap<String, BTreeMap<String, f64>>,
}

impl ReferenceValues {
    pub fn bundled() -> Self {
        serde_json::from_str(PAPER_VALUES).expect("bundled reference values are valid")
    }

    pub fn check(&self, group: &str, quantity: &str) -> Result<&ReferenceCheck> {
        self.checks
            .get(group)
            .and_then(|c| c.iter().find(|c| c.quantity == quantity))
            .ok_or_else(|| Error::InvalidArgument(format!("no reference value {group}/{quantity}")))
    }

    pub fn group(&self, group: &str) -> &[ReferenceCheck] {
        self.checks.get(group).map_or(&[], Vec::as_slice)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fault_tree::Structure;

    #[test]
    fn bundled_files_load() {
        let atv = atv_tree();
        assert_eq!((atv.primary_count(), atv.len()), (11, 14));
        assert_eq!(atv.classify_structure(), Structure::PureTree);
        assert_eq!(fig1_tree().len(), 7);
        assert_eq!(atv_sessions().len(), 3);
        assert_eq!(fig4_full_sessions().len(), 1);
        assert_eq!(fig4_incomplete_sessions().len(), 1);
        assert_eq!(atv_published_priors().len(), 11);
        let refs = ReferenceValues::bundled();
        assert!(refs.check("fig4", "weights.full.E2").is_ok());
        assert!(refs.check("fig4", "nothing").is_err());
    }

    #[test]
    fn tolerance_kinds() {
        let abs = ReferenceCheck {
            quantity: "x".into(),
            value: 1.0,
            tolerance: 0.1,
            kind: ToleranceKind::Abs,
        };
        assert!(abs.passes(1.1 - 1e-12) && !abs.passes(1.2));
        let rel = ReferenceCheck {
            kind: ToleranceKind::Rel,
            value: 100.0,
            tolerance: 0.02,
            ..abs
        };
        assert!(rel.passes(101.9) && !rel.passes(97.9));
    }
}
