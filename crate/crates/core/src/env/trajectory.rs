use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::action::ActionSpec;
use super::episode::EpisodeState;
use super::heads::{heads_for_action, HeadIndices, HeadLayout};
use crate::tabular::Dataset;
use crate::{Error, Result};

/// One recorded step: the action taken and the fingerprint of the display
/// it led to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub step: usize,
    pub action: ActionSpec,
    pub fingerprint: String,
}

/// A recorded session over one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dataset: String,
    pub steps: Vec<TrajectoryStep>,
}

impl Trajectory {
    /// Record `actions` by replaying them on `ds`.
    pub fn from_actions(ds: &Dataset, actions: &[ActionSpec]) -> Result<Self> {
        let mut episode = EpisodeState::new(ds, actions.len().max(1));
        let mut steps = Vec::with_capacity(actions.len());
        for (i, action) in actions.iter().enumerate() {
            episode.step(ds, action)?;
            steps.push(TrajectoryStep {
                step: i,
                action: action.clone(),
                fingerprint: episode.current().fingerprint(),
            });
        }
        Ok(Self {
            dataset: ds.name().into(),
            steps,
        })
    }

    pub fn actions(&self) -> Vec<ActionSpec> {
        self.steps.iter().map(|s| s.action.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// A replayed step with everything the learners need.
#[derive(Debug, Clone)]
pub struct ReplayedStep {
    pub state: Vec<f64>,
    pub action: ActionSpec,
    pub heads: HeadIndices,
    pub next_state: Vec<f64>,
    pub done: bool,
}

/// Replay a trajectory through the environment, checking each recorded
/// fingerprint, and return the state/action pairs.
pub fn replay(ds: &Dataset, traj: &Trajectory, layout: &HeadLayout) -> Result<Vec<ReplayedStep>> {
    let mut episode = EpisodeState::new(ds, traj.len().max(1));
    let mut out = Vec::with_capacity(traj.len());
    for step in &traj.steps {
        let state = episode.encode_state();
        let heads = heads_for_action(&step.action, episode.current(), ds, layout)?;
        episode.step(ds, &step.action)?;
        let fingerprint = episode.current().fingerprint();
        if !step.fingerprint.is_empty() && step.fingerprint != fingerprint {
            return Err(Error::InvalidInput(format!(
                "step {}: recorded fingerprint `{}` but replay produced `{}`",
                step.step, step.fingerprint, fingerprint
            )));
        }
        out.push(ReplayedStep {
            state,
            action: step.action.clone(),
            heads,
            next_state: episode.encode_state(),
            done: episode.is_done(),
        });
    }
    Ok(out)
}
