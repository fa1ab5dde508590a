use serde::{Deserialize, Serialize};

use crate::env::{ActionKind, ActionSpec};
use crate::math;

/// How strictly "the same action" is read when penalising repeats.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SameAction {
    /// Kind and every parameter match.
    #[default]
    Full,
    /// Only the kinds match.
    Kind,
}

impl SameAction {
    fn same(self, a: &ActionSpec, b: &ActionSpec) -> bool {
        match self {
            SameAction::Full => a == b,
            SameAction::Kind => a.kind() == b.kind(),
        }
    }
}

/// Penalty for the last action of `actions`, which holds the whole history
/// `a_1..a_t`.
///
/// * `-1` for BACK as the very first action;
/// * `-1` for an operation identical to the one before it;
/// * `-l` when the tail reads `x, BACK, x, BACK, ..., x, BACK` with `l + 1`
///   BACKs at even offsets, each `x` a FILTER or GROUP, the action before
///   the run not a BACK, and `l > 1`;
/// * `0` otherwise. The first matching case wins.
pub fn incoherence_penalty(actions: &[ActionSpec], same: SameAction) -> f64 {
    let t = actions.len();
    let Some(last) = actions.last() else {
        return 0.0;
    };
    let at = |offset: usize| (offset < t).then(|| actions[t - 1 - offset].kind());
    if *last == ActionSpec::Back && t == 1 {
        return -1.0;
    }
    if *last != ActionSpec::Back && t >= 2 && same.same(last, &actions[t - 2]) {
        return -1.0;
    }
    if *last == ActionSpec::Back {
        let mut l = 0;
        while at(2 * (l + 1)) == Some(ActionKind::Back) {
            l += 1;
        }
        let operations = (0..=l).all(|i| matches!(at(2 * i + 1), Some(k) if k.is_operation()));
        if l > 1 && operations {
            return -(l as f64);
        }
    }
    0.0
}

/// Imitation reward `−ln(1 − d)` plus the penalty.
pub fn imitation_reward(d: f64, penalty: f64) -> f64 {
    -math::ln(1.0 - d) + penalty
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{AggFunc, FilterOp, FilterPredicate, Grouping};
    use alloc::vec::Vec;

    fn filter() -> ActionSpec {
        ActionSpec::Filter(FilterPredicate::new("c", FilterOp::Eq, "x"))
    }

    fn group() -> ActionSpec {
        ActionSpec::Group(Grouping::new("c", "d", AggFunc::Count))
    }

    fn of(kind: usize) -> ActionSpec {
        match kind {
            0 => group(),
            1 => filter(),
            2 => ActionSpec::Back,
            _ => ActionSpec::Stop,
        }
    }

    /// Independent reading of the three cases: count trailing
    /// (operation, BACK) pairs walking backwards.
    fn oracle(h: &[ActionSpec]) -> f64 {
        let t = h.len();
        let b = ActionSpec::Back;
        if t == 1 && h[0] == b {
            return -1.0;
        }
        if t >= 2 && h[t - 1] != b && h[t - 1] == h[t - 2] {
            return -1.0;
        }
        let mut k = 0;
        while 2 * k + 2 <= t
            && h[t - 1 - 2 * k] == b
            && matches!(h[t - 2 - 2 * k], ActionSpec::Filter(_) | ActionSpec::Group(_))
        {
            k += 1;
        }
        let before_is_back = 2 * k < t && h[t - 1 - 2 * k] == b;
        if k >= 3 && !before_is_back {
            -((k - 1) as f64)
        } else {
            0.0
        }
    }

    #[test]
    fn quoted_cases() {
        assert_eq!(incoherence_penalty(&[ActionSpec::Back], SameAction::Full), -1.0);
        assert_eq!(incoherence_penalty(&[filter(), filter()], SameAction::Full), -1.0);
        let h = [filter(), ActionSpec::Back, group(), ActionSpec::Back, filter(), ActionSpec::Back];
        assert_eq!(incoherence_penalty(&h, SameAction::Full), -2.0);
    }

    #[test]
    fn short_alternation_is_free() {
        let h = [filter(), ActionSpec::Back, group(), ActionSpec::Back];
        assert_eq!(incoherence_penalty(&h, SameAction::Full), 0.0);
        // a BACK before the run breaks the pattern
        let h = [
            ActionSpec::Back,
            ActionSpec::Back,
            filter(),
            ActionSpec::Back,
            group(),
            ActionSpec::Back,
            filter(),
            ActionSpec::Back,
        ];
        assert_eq!(incoherence_penalty(&h, SameAction::Full), 0.0);
    }

    #[test]
    fn same_action_readings() {
        let a = ActionSpec::Filter(FilterPredicate::new("c", FilterOp::Eq, "x"));
        let b = ActionSpec::Filter(FilterPredicate::new("c", FilterOp::Eq, "y"));
        assert_eq!(incoherence_penalty(&[a.clone(), b.clone()], SameAction::Full), 0.0);
        assert_eq!(incoherence_penalty(&[a, b], SameAction::Kind), -1.0);
        assert_eq!(
            incoherence_penalty(&[ActionSpec::Back, ActionSpec::Back], SameAction::Kind),
            0.0
        );
    }

    #[test]
    fn exhaustive_agreement_with_oracle() {
        let mut cases = 0;
        for len in 1..=6u32 {
            for code in 0..4usize.pow(len) {
                let mut c = code;
                let h: Vec<ActionSpec> = (0..len)
                    .map(|_| {
                        let k = c % 4;
                        c /= 4;
                        of(k)
                    })
                    .collect();
                assert_eq!(incoherence_penalty(&h, SameAction::Full), oracle(&h), "{h:?}");
                cases += 1;
            }
        }
        assert_eq!(cases, 5460);
    }

    #[test]
    fn reward_composition() {
        assert!((imitation_reward(0.5, 0.0) - core::f64::consts::LN_2).abs() < 1e-15);
        let p = incoherence_penalty(&[ActionSpec::Back], SameAction::Full);
        assert!((imitation_reward(0.5, p) - (core::f64::consts::LN_2 - 1.0)).abs() < 1e-15);
        let tiny = imitation_reward(1e-12, 0.0);
        assert!(tiny > 0.0 && tiny < 1e-11);
    }
}
