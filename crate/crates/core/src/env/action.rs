use core::fmt;

use serde::{Deserialize, Serialize};

use crate::tabular::{FilterPredicate, Grouping};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ActionKind {
    Group,
    Filter,
    Back,
    Stop,
}

impl ActionKind {
    pub const ALL: [ActionKind; 4] = [
        ActionKind::Group,
        ActionKind::Filter,
        ActionKind::Back,
        ActionKind::Stop,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::Group => "GROUP",
            ActionKind::Filter => "FILTER",
            ActionKind::Back => "BACK",
            ActionKind::Stop => "STOP",
        }
    }

    /// FILTER and GROUP produce a new display.
    pub fn is_operation(self) -> bool {
        matches!(self, ActionKind::Group | ActionKind::Filter)
    }
}

/// One EDA operation. Serialized with the kind as a tag:
/// `{"kind":"FILTER","column":"c","op":"EQ","term":"x"}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "UPPERCASE")]
pub enum ActionSpec {
    Group(Grouping),
    Filter(FilterPredicate),
    Back,
    Stop,
}

impl ActionSpec {
    pub fn kind(&self) -> ActionKind {
        match self {
            ActionSpec::Group(_) => ActionKind::Group,
            ActionSpec::Filter(_) => ActionKind::Filter,
            ActionSpec::Back => ActionKind::Back,
            ActionSpec::Stop => ActionKind::Stop,
        }
    }
}

impl fmt::Display for ActionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionSpec::Group(g) => g.fmt(f),
            ActionSpec::Filter(p) => p.fmt(f),
            ActionSpec::Back => f.write_str("BACK"),
            ActionSpec::Stop => f.write_str("STOP"),
        }
    }
}
