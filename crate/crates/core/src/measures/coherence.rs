use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::env::{ActionKind, ActionSpec};
use crate::tabular::{Display, FilterOp};
use crate::{Error, Result};

/// Which steps a rule applies to. Absent fields match anything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleMatch {
    pub kind: ActionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub op: Option<FilterOp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior_kind: Option<ActionKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceRule {
    #[serde(rename = "match")]
    pub pattern: RuleMatch,
    pub score: f64,
}

impl CoherenceRule {
    fn matches(&self, prefix: &[ActionSpec], action: &ActionSpec) -> bool {
        let m = &self.pattern;
        if m.kind != action.kind() {
            return false;
        }
        let (column, op) = match action {
            ActionSpec::Group(g) => (Some(g.grp_col.as_str()), None),
            ActionSpec::Filter(p) => (Some(p.column.as_str()), Some(p.op)),
            _ => (None, None),
        };
        if m.column.is_some() && m.column.as_deref() != column {
            return false;
        }
        if m.op.is_some() && m.op != op {
            return false;
        }
        match m.prior_kind {
            Some(kind) => prefix.last().map(ActionSpec::kind) == Some(kind),
            None => true,
        }
    }
}

/// Dataset-specific coherence knowledge. The generic rules (empty or
/// unchanged result) always apply on top of it.
///
/// When `filterable_columns` is non-empty, a FILTER on a listed column adds
/// +0.5 and on any other column −0.5; `groupable_columns` does the same for
/// GROUP.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CoherenceRuleset {
    #[serde(default)]
    pub filterable_columns: BTreeSet<String>,
    #[serde(default)]
    pub groupable_columns: BTreeSet<String>,
    #[serde(default)]
    pub rules: Vec<CoherenceRule>,
}

const MEMBERSHIP_SCORE: f64 = 0.5;

impl CoherenceRuleset {
    pub fn from_rules(rules: Vec<CoherenceRule>) -> Result<Self> {
        let set = Self {
            rules,
            ..Self::default()
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, rule) in self.rules.iter().enumerate() {
            if !(-1.0..=1.0).contains(&rule.score) {
                return Err(Error::InvalidInput(format!(
                    "coherence rule {i}: score {} outside [-1, 1]",
                    rule.score
                )));
            }
            if rule.pattern.op.is_some() && rule.pattern.kind != ActionKind::Filter {
                return Err(Error::InvalidInput(format!(
                    "coherence rule {i}: `op` only applies to FILTER"
                )));
            }
        }
        Ok(())
    }

    fn membership(&self, action: &ActionSpec) -> f64 {
        let (set, column) = match action {
            ActionSpec::Filter(p) => (&self.filterable_columns, &p.column),
            ActionSpec::Group(g) => (&self.groupable_columns, &g.grp_col),
            _ => return 0.0,
        };
        match (set.is_empty(), set.contains(column)) {
            (true, _) => 0.0,
            (false, true) => MEMBERSHIP_SCORE,
            (false, false) => -MEMBERSHIP_SCORE,
        }
    }
}

/// Coherence of `action`, taken after `prefix`, which turned `prev` into
/// `cur`. An operation with an empty or unchanged result scores −1;
/// otherwise matching rule scores are summed and clamped to `[-1, 1]`.
pub fn coherence(
    prefix: &[ActionSpec],
    action: &ActionSpec,
    prev: &Display,
    cur: &Display,
    rules: &CoherenceRuleset,
) -> f64 {
    if action.kind().is_operation() {
        if cur.visible_count() == 0 {
            return -1.0;
        }
        if cur.rows() == prev.rows() && cur.groups() == prev.groups() {
            return -1.0;
        }
    }
    let total: f64 = rules.membership(action)
        + rules
            .rules
            .iter()
            .filter(|r| r.matches(prefix, action))
            .map(|r| r.score)
            .sum::<f64>();
    total.clamp(-1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{AggFunc, ColumnKind, Dataset, FilterPredicate, Grouping, Value};
    use alloc::string::ToString;
    use alloc::vec;

    fn fixture() -> Dataset {
        Dataset::from_rows(
            "coh",
            vec![("c1".into(), ColumnKind::Categorical), ("n".into(), ColumnKind::Numeric)],
            (0..6)
                .map(|i| vec![Value::Text(["a", "b"][i % 2].to_string()), Value::Number(i as f64)])
                .collect(),
        )
        .unwrap()
    }

    fn rule(kind: ActionKind, column: Option<&str>, score: f64) -> CoherenceRule {
        CoherenceRule {
            pattern: RuleMatch {
                kind,
                column: column.map(Into::into),
                op: None,
                prior_kind: None,
            },
            score,
        }
    }

    #[test]
    fn empty_and_unchanged_results_are_incoherent() {
        let ds = fixture();
        let d0 = Display::initial(&ds);
        let none = ActionSpec::Filter(FilterPredicate::new("c1", FilterOp::Eq, "zz"));
        let empty = d0.apply_filter(&ds, &FilterPredicate::new("c1", FilterOp::Eq, "zz")).unwrap();
        assert_eq!(coherence(&[], &none, &d0, &empty, &CoherenceRuleset::default()), -1.0);

        let noop_pred = FilterPredicate::new("c1", FilterOp::Neq, "zz");
        let noop = d0.apply_filter(&ds, &noop_pred).unwrap();
        assert_eq!(
            coherence(&[], &ActionSpec::Filter(noop_pred), &d0, &noop, &CoherenceRuleset::default()),
            -1.0
        );
    }

    #[test]
    fn single_rule_sum_and_clamp() {
        let ds = fixture();
        let d0 = Display::initial(&ds);
        let g = Grouping::new("c1", "n", AggFunc::Sum);
        let d1 = d0.apply_group(&ds, &g).unwrap();
        let action = ActionSpec::Group(g);
        let rules = CoherenceRuleset::from_rules(vec![rule(ActionKind::Group, Some("c1"), 0.5)]).unwrap();
        assert_eq!(coherence(&[], &action, &d0, &d1, &rules), 0.5);

        let rules = CoherenceRuleset::from_rules(vec![
            rule(ActionKind::Group, Some("c1"), 0.75),
            rule(ActionKind::Group, None, 0.75),
            rule(ActionKind::Filter, None, -1.0),
        ])
        .unwrap();
        assert_eq!(coherence(&[], &action, &d0, &d1, &rules), 1.0);
        assert_eq!(coherence(&[], &action, &d0, &d1, &CoherenceRuleset::default()), 0.0);
    }

    #[test]
    fn prior_kind_and_membership() {
        let ds = fixture();
        let d0 = Display::initial(&ds);
        let g = Grouping::new("c1", "n", AggFunc::Sum);
        let d1 = d0.apply_group(&ds, &g).unwrap();
        let action = ActionSpec::Group(g);
        let mut r = rule(ActionKind::Group, None, -0.25);
        r.pattern.prior_kind = Some(ActionKind::Filter);
        let mut rules = CoherenceRuleset::from_rules(vec![r]).unwrap();
        let filter = ActionSpec::Filter(FilterPredicate::new("n", FilterOp::Eq, "1"));
        assert_eq!(coherence(&[], &action, &d0, &d1, &rules), 0.0);
        assert_eq!(coherence(&[filter], &action, &d0, &d1, &rules), -0.25);
        rules.groupable_columns.insert("n".into());
        assert_eq!(coherence(&[], &action, &d0, &d1, &rules), -0.5);
    }

    #[test]
    fn out_of_range_scores_are_rejected() {
        assert!(CoherenceRuleset::from_rules(vec![rule(ActionKind::Back, None, 1.5)]).is_err());
    }
}
