//! Interestingness measures for EDA steps and their per-session
//! normalization.
//!
//! * A-INT: group conciseness for GROUP, maximum per-column KL deviation
//!   from the previous display for FILTER.
//! * Diversity: minimum Euclidean distance to any earlier display.
//! * Readability: compaction gain between consecutive displays.
//! * Peculiarity: maximum per-column KL deviation from the initial display.
//! * Coherence: generic and declarative rule scores.

mod coherence;
mod score;
mod session;

pub use coherence::{coherence, CoherenceRule, CoherenceRuleset, RuleMatch};
pub use score::{
    a_int, compactness, diversity, kl_divergence, max_column_kl, peculiarity, readability,
    score_session, sigmoid, MeasureConfig, SigmoidSpec,
};
pub use session::{classify_session, flag_above, normalize_session, Measure, MeasureScores};
