//! Behavioural cloning, adversarial imitation and PPO.

mod gail;
mod penalty;
mod update;

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::env::{encode_heads, replay, ActionSpec, HeadIndices, HeadLayout, Trajectory};
use crate::tabular::Dataset;
use crate::{Error, Result};

pub use gail::{
    collect_rollouts, train_gail, Checkpoint, IntervalMetrics, Models, Optimizers, RolloutStats,
    TrainOutcome, CHECKPOINT_VERSION,
};
pub use penalty::{imitation_reward, incoherence_penalty, SameAction};
pub use update::{
    action_agreement, advantages, bc_pretrain, clip_advantage, mean_nll, ppo_gradient, ppo_update,
    surrogate, update_discriminator, value_update, BcReport, DiscStats, PpoSample, PpoStats,
};

/// Training hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Episode horizon.
    pub horizon: usize,
    pub total_interactions: usize,
    /// Interactions collected between update rounds.
    pub train_interval: usize,
    pub lr_bc: f64,
    pub lr_adv: f64,
    pub batch_policy: usize,
    pub batch_disc: usize,
    pub gamma: f64,
    /// Drop the discount from the TD target when false.
    pub use_discount: bool,
    pub clip: f64,
    pub l2: f64,
    pub bc_epochs: usize,
    pub bc_batch: usize,
    pub penalty_enabled: bool,
    pub bc_enabled: bool,
    pub same_action: SameAction,
    pub term_bins: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            horizon: 12,
            total_interactions: 100_000,
            train_interval: 1024,
            lr_bc: 1e-4,
            lr_adv: 1e-6,
            batch_policy: 32,
            batch_disc: 192,
            gamma: 0.99,
            use_discount: true,
            clip: 0.2,
            l2: 1e-3,
            bc_epochs: 100,
            bc_batch: 32,
            penalty_enabled: true,
            bc_enabled: true,
            same_action: SameAction::Full,
            term_bins: HeadLayout::DEFAULT_TERM_BINS,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("horizon", self.horizon),
            ("train_interval", self.train_interval),
            ("batch_policy", self.batch_policy),
            ("batch_disc", self.batch_disc),
            ("bc_batch", self.bc_batch),
            ("term_bins", self.term_bins),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if self.batch_policy < 2 || self.batch_disc < 2 {
            return Err(Error::InvalidConfig("batches need room for both halves".into()));
        }
        if !(self.lr_bc > 0.0 && self.lr_adv > 0.0 && self.l2 >= 0.0) {
            return Err(Error::InvalidConfig("learning rates must be positive".into()));
        }
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return Err(Error::InvalidConfig(format!("clip {} outside (0, 1)", self.clip)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig(format!("gamma {} outside [0, 1]", self.gamma)));
        }
        Ok(())
    }

    /// Discount used in TD targets.
    pub fn discount(&self) -> f64 {
        if self.use_discount {
            self.gamma
        } else {
            1.0
        }
    }
}

/// One generated interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: ActionSpec,
    /// Indices sampled from the policy.
    pub heads: HeadIndices,
    /// Discriminator encoding of the executed action.
    pub action_vec: Vec<f64>,
    pub reward: f64,
    pub penalty: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
    pub log_prob: f64,
}

/// Bounded FIFO of generated transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            items: VecDeque::new(),
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn extend(&mut self, ts: impl IntoIterator<Item = Transition>) {
        for t in ts {
            self.push(t);
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }
}

/// One expert state/action pair with what the learners need.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertStep {
    pub dataset: usize,
    pub state: Vec<f64>,
    pub action: ActionSpec,
    pub heads: HeadIndices,
    pub action_vec: Vec<f64>,
    pub next_state: Vec<f64>,
    pub done: bool,
    pub penalty: f64,
}

/// Replay expert trajectories on their datasets. `trajectories[i]` holds
/// the sessions recorded on `datasets[i]`.
pub fn expert_steps(
    datasets: &[Dataset],
    trajectories: &[Vec<Trajectory>],
    layout: &HeadLayout,
    same: SameAction,
) -> Result<Vec<ExpertStep>> {
    if datasets.len() != trajectories.len() {
        return Err(Error::InvalidInput("one trajectory list per dataset expected".into()));
    }
    let mut out = Vec::new();
    for (d, (ds, trajs)) in datasets.iter().zip(trajectories).enumerate() {
        for traj in trajs {
            let steps = replay(ds, traj, layout)?;
            let actions = traj.actions();
            for (i, st) in steps.into_iter().enumerate() {
                out.push(ExpertStep {
                    dataset: d,
                    action_vec: encode_heads(&st.heads, layout),
                    penalty: incoherence_penalty(&actions[..=i], same),
                    state: st.state,
                    action: st.action,
                    heads: st.heads,
                    next_state: st.next_state,
                    done: st.done,
                });
            }
        }
    }
    Ok(out)
}

/// All datasets must share one schema width; returns the common layout.
pub fn shared_layout(datasets: &[Dataset], term_bins: usize) -> Result<HeadLayout> {
    let first = datasets
        .first()
        .ok_or_else(|| Error::InvalidInput("no datasets".into()))?;
    for ds in datasets {
        if ds.width() != first.width() {
            return Err(Error::SchemaMismatch(format!(
                "dataset `{}` has {} columns, `{}` has {}",
                ds.name(),
                ds.width(),
                first.name(),
                first.width()
            )));
        }
    }
    HeadLayout::for_dataset(first, term_bins)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dummy(r: f64) -> Transition {
        Transition {
            state: alloc::vec![0.0],
            action: ActionSpec::Back,
            heads: HeadIndices::default(),
            action_vec: alloc::vec![],
            reward: r,
            penalty: 0.0,
            next_state: alloc::vec![0.0],
            done: false,
            log_prob: 0.0,
        }
    }

    #[test]
    fn buffer_is_bounded_fifo() {
        let mut b = ReplayBuffer::new(3);
        b.extend((0..5).map(|i| dummy(i as f64)));
        assert_eq!(b.len(), 3);
        let rs: Vec<f64> = b.iter().map(|t| t.reward).collect();
        assert_eq!(rs, [2.0, 3.0, 4.0]);
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = TrainConfig::default();
        c.validate().unwrap();
        assert_eq!(c.total_interactions, 100_000);
        assert_eq!((c.bc_epochs, c.lr_bc, c.bc_batch), (100, 1e-4, 32));
        assert_eq!((c.lr_adv, c.batch_disc, c.gamma), (1e-6, 192, 0.99));
        assert!(TrainConfig { clip: 1.0, ..c.clone() }.validate().is_err());
        assert!(TrainConfig { gamma: 1.5, ..c.clone() }.validate().is_err());
        assert!(TrainConfig { horizon: 0, ..c }.validate().is_err());
    }
}
