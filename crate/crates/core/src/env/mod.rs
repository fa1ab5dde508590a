//! The EDA session as a Markov decision process.
//!
//! An episode starts at the unfiltered display of a dataset. FILTER and
//! GROUP push a new display on a stack, BACK pops it (never below the
//! initial display), and STOP ends the episode. The state seen by the
//! policy is the encoding of the last three current displays.

mod action;
mod encode;
mod episode;
mod heads;
mod trajectory;

pub use action::{ActionKind, ActionSpec};
pub use encode::{display_vec_len, encode_display, state_vec_len};
pub use episode::{EpisodeState, Frame};
pub use heads::{
    action_from_heads, encode_action, encode_heads, heads_for_action, term_candidates, Head,
    HeadIndices, HeadLayout, SUBSTRING_MAX, SUBSTRING_MIN,
};
pub use trajectory::{replay, ReplayedStep, Trajectory, TrajectoryStep};
