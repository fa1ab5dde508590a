use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::update::{bc_pretrain, ppo_update, update_discriminator, value_update, BcReport, PpoSample};
use super::{
    expert_steps, imitation_reward, incoherence_penalty, shared_layout, ExpertStep, ReplayBuffer,
    TrainConfig, Transition,
};
use crate::env::{action_from_heads, encode_action, EpisodeState, HeadLayout, Trajectory};
use crate::nn::{sample_action, AdamState, DiscriminatorNet, PolicyNet, ValueNet};
use crate::seed::{self, EngineRng};
use crate::tabular::{ColumnKind, Dataset};
use crate::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Policy, value and discriminator networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Models {
    pub policy: PolicyNet,
    pub value: ValueNet,
    pub discriminator: DiscriminatorNet,
}

impl Models {
    pub fn new(state_len: usize, layout: HeadLayout, seed: u64) -> Result<Self> {
        let mut rng = seed::rng(seed);
        let disc_in = state_len + layout.action_vec_len();
        Ok(Self {
            policy: PolicyNet::new(state_len, layout, &mut rng)?,
            value: ValueNet::new(state_len, &mut rng)?,
            discriminator: DiscriminatorNet::new(disc_in, &mut rng)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.policy.net.validate()?;
        self.value.net.validate()?;
        self.discriminator.net.validate()
    }
}

/// Adversarial-phase optimiser states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimizers {
    pub policy: AdamState,
    pub value: AdamState,
    pub discriminator: AdamState,
}

impl Optimizers {
    pub fn new(models: &Models, lr: f64) -> Self {
        Self {
            policy: AdamState::new(models.policy.net.param_count(), lr),
            value: AdamState::new(models.value.net.param_count(), lr),
            discriminator: AdamState::new(models.discriminator.net.param_count(), lr),
        }
    }
}

/// Everything needed to resume or reuse a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub schema: Vec<(String, ColumnKind)>,
    pub config: TrainConfig,
    pub seed: u64,
    pub interval: usize,
    pub interactions: usize,
    pub models: Models,
    pub optimizers: Option<Optimizers>,
}

impl Checkpoint {
    pub fn validate(&self) -> Result<()> {
        if self.format_version != CHECKPOINT_VERSION {
            return Err(Error::InvalidInput(alloc::format!(
                "checkpoint format {} is not supported",
                self.format_version
            )));
        }
        self.models.validate()
    }

    /// Fails unless `ds` has the schema the model was trained on.
    pub fn check_dataset(&self, ds: &Dataset) -> Result<()> {
        if ds.schema() != self.schema {
            return Err(Error::SchemaMismatch(alloc::format!(
                "dataset `{}` does not match the checkpoint schema",
                ds.name()
            )));
        }
        Ok(())
    }
}

/// Counters for one collection phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RolloutStats {
    pub steps: usize,
    pub episodes_completed: usize,
    pub completed_len_sum: usize,
    pub reward_sum: f64,
    pub penalty_sum: f64,
}

/// Roll out `n_steps` interactions, starting a fresh episode on a random
/// dataset whenever the previous one ends. An episode cut off by the step
/// budget keeps `done = false` on its last transition.
#[allow(clippy::too_many_arguments)]
pub fn collect_rollouts(
    datasets: &[Dataset],
    layout: &HeadLayout,
    policy: &PolicyNet,
    disc: &DiscriminatorNet,
    n_steps: usize,
    cfg: &TrainConfig,
    rng: &mut EngineRng,
) -> Result<(Vec<Transition>, RolloutStats)> {
    if datasets.is_empty() {
        return Err(Error::InvalidInput("no datasets to explore".into()));
    }
    let mut out = Vec::with_capacity(n_steps);
    let mut stats = RolloutStats::default();
    while out.len() < n_steps {
        let ds = &datasets[rng.random_range(0..datasets.len())];
        let mut ep = EpisodeState::new(ds, cfg.horizon);
        while !ep.is_done() && out.len() < n_steps {
            let state = ep.encode_state();
            let dists = policy.forward(&state)?;
            let (heads, log_prob) = sample_action(&dists, rng);
            let action = action_from_heads(&heads, ep.current(), ds, layout);
            let action_vec = encode_action(&action, ep.current(), ds, layout)?;
            let d = disc.forward(&state, &action_vec)?;
            ep.step(ds, &action)?;
            let penalty = if cfg.penalty_enabled {
                incoherence_penalty(ep.actions(), cfg.same_action)
            } else {
                0.0
            };
            let reward = imitation_reward(d, penalty);
            if !reward.is_finite() {
                return Err(Error::NonFinite("reward"));
            }
            stats.reward_sum += reward;
            stats.penalty_sum += penalty;
            out.push(Transition {
                state,
                action,
                heads,
                action_vec,
                reward,
                penalty,
                next_state: ep.encode_state(),
                done: ep.is_done(),
                log_prob,
            });
        }
        if ep.is_done() {
            stats.episodes_completed += 1;
            stats.completed_len_sum += ep.step_count();
        }
    }
    stats.steps = out.len();
    Ok((out, stats))
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalMetrics {
    pub interval: usize,
    pub interactions: usize,
    pub disc_acc: f64,
    pub disc_loss: f64,
    pub mean_reward: f64,
    pub mean_penalty: f64,
    pub mean_ep_len: f64,
    pub surrogate: f64,
    pub value_loss: f64,
}

/// Result of a full training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub models: Models,
    pub optimizers: Optimizers,
    pub bc: Option<BcReport>,
    pub metrics: Vec<IntervalMetrics>,
    pub interactions: usize,
}

fn mixed_batches(
    generated: &[Transition],
    expert: &[ExpertStep],
    models: &Models,
    cfg: &TrainConfig,
    rng: &mut EngineRng,
) -> Result<Vec<Vec<PpoSample>>> {
    let half = cfg.batch_policy / 2;
    let mut order: Vec<usize> = (0..generated.len()).collect();
    order.shuffle(rng);
    let mut out = Vec::new();
    for chunk in order.chunks(half) {
        let mut batch: Vec<PpoSample> = chunk
            .iter()
            .map(|&i| {
                let t = &generated[i];
                PpoSample {
                    state: t.state.clone(),
                    heads: t.heads,
                    reward: t.reward,
                    next_state: t.next_state.clone(),
                    done: t.done,
                    old_log_prob: t.log_prob,
                }
            })
            .collect();
        let k = half.min(expert.len());
        for i in index::sample(rng, expert.len(), k) {
            batch.push(PpoSample::from_expert(
                &expert[i],
                &models.policy,
                &models.discriminator,
                cfg.penalty_enabled,
            )?);
        }
        out.push(batch);
    }
    Ok(out)
}

/// Pretrain (unless disabled) and then alternate collection, one
/// discriminator step, and one pass of mixed-batch PPO and value steps over
/// the freshly collected interactions. `on_interval` sees every interval's
/// metrics and the current models; an error from it aborts training.
pub fn train_gail(
    cfg: &TrainConfig,
    datasets: &[Dataset],
    expert: &[Vec<Trajectory>],
    init: Option<Models>,
    on_interval: &mut dyn FnMut(&IntervalMetrics, &Models, &Optimizers) -> Result<()>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let layout = shared_layout(datasets, cfg.term_bins)?;
    let state_len = EpisodeState::state_len(&datasets[0]);
    let steps = expert_steps(datasets, expert, &layout, cfg.same_action)?;
    if steps.is_empty() {
        return Err(Error::InvalidInput("no expert pairs".into()));
    }
    let mut models = match init {
        Some(m) => {
            if m.policy.layout != layout || m.policy.net.input_len() != state_len {
                return Err(Error::SchemaMismatch("initial models do not fit the datasets".into()));
            }
            m
        }
        None => Models::new(state_len, layout, seed::derive(cfg.seed, "init"))?,
    };
    let bc = if cfg.bc_enabled {
        let mut rng = seed::rng(seed::derive(cfg.seed, "bc"));
        Some(bc_pretrain(&mut models.policy, &steps, cfg, &mut rng)?)
    } else {
        None
    };
    let mut opts = Optimizers::new(&models, cfg.lr_adv);
    let mut rollout_rng = seed::rng(seed::derive(cfg.seed, "rollout"));
    let mut update_rng = seed::rng(seed::derive(cfg.seed, "update"));
    let mut buffer = ReplayBuffer::new(cfg.train_interval);
    let mut metrics = Vec::new();
    let mut interactions = 0;
    let mut interval = 0;
    while interactions < cfg.total_interactions {
        let n = cfg.train_interval.min(cfg.total_interactions - interactions);
        let (generated, stats) = collect_rollouts(
            datasets,
            &layout,
            &models.policy,
            &models.discriminator,
            n,
            cfg,
            &mut rollout_rng,
        )?;
        interactions += generated.len();
        buffer.extend(generated.iter().cloned());
        let disc = update_discriminator(
            &mut models.discriminator,
            &mut opts.discriminator,
            &buffer,
            &steps,
            cfg,
            &mut update_rng,
        )?;
        let mut surrogate = 0.0;
        let mut value_loss = 0.0;
        let batches = mixed_batches(&generated, &steps, &models, cfg, &mut update_rng)?;
        for batch in &batches {
            surrogate += ppo_update(&mut models.policy, &mut opts.policy, &models.value, batch, cfg)?.surrogate;
            value_loss += value_update(&mut models.value, &mut opts.value, batch, cfg)?;
        }
        let nb = batches.len().max(1) as f64;
        let m = IntervalMetrics {
            interval,
            interactions,
            disc_acc: disc.accuracy,
            disc_loss: disc.loss,
            mean_reward: stats.reward_sum / stats.steps.max(1) as f64,
            mean_penalty: stats.penalty_sum / stats.steps.max(1) as f64,
            mean_ep_len: if stats.episodes_completed == 0 {
                0.0
            } else {
                stats.completed_len_sum as f64 / stats.episodes_completed as f64
            },
            surrogate: surrogate / nb,
            value_loss: value_loss / nb,
        };
        on_interval(&m, &models, &opts)?;
        metrics.push(m);
        interval += 1;
    }
    Ok(TrainOutcome {
        models,
        optimizers: opts,
        bc,
        metrics,
        interactions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::ActionSpec;
    use crate::nn::{Activation, Mlp};
    use crate::synth::{paper_schema, synthesize, SynthConfig};
    use crate::tabular::{FilterOp, FilterPredicate};
    use alloc::vec;

    fn small_world(seed: u64) -> (Vec<Dataset>, Vec<Vec<Trajectory>>) {
        let cfg = SynthConfig {
            rows: 200,
            trajectories: 10,
            ..SynthConfig::default()
        };
        let a = synthesize("a", &paper_schema(), &cfg, seed).unwrap();
        let b = synthesize("b", &paper_schema(), &cfg, seed + 1).unwrap();
        (vec![a.dataset, b.dataset], vec![a.train, b.train])
    }

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            total_interactions: 300,
            train_interval: 100,
            bc_epochs: 2,
            seed: 5,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn unit_horizon_episodes_have_one_step() {
        let (ds, _) = small_world(1);
        let layout = shared_layout(&ds, 20).unwrap();
        let models = Models::new(EpisodeState::state_len(&ds[0]), layout, 0).unwrap();
        let cfg = TrainConfig {
            horizon: 1,
            ..TrainConfig::default()
        };
        let mut rng = seed::rng(1);
        let (ts, stats) =
            collect_rollouts(&ds, &layout, &models.policy, &models.discriminator, 50, &cfg, &mut rng).unwrap();
        assert_eq!(ts.len(), 50);
        assert!(ts.iter().all(|t| t.done));
        assert_eq!(stats.episodes_completed, 50);
    }

    #[test]
    fn rewards_follow_the_ablation_switch() {
        let (ds, _) = small_world(2);
        let layout = shared_layout(&ds, 20).unwrap();
        let models = Models::new(EpisodeState::state_len(&ds[0]), layout, 0).unwrap();
        let cfg = TrainConfig {
            penalty_enabled: false,
            ..TrainConfig::default()
        };
        let mut rng = seed::rng(3);
        let (ts, stats) =
            collect_rollouts(&ds, &layout, &models.policy, &models.discriminator, 200, &cfg, &mut rng).unwrap();
        assert_eq!(stats.penalty_sum, 0.0);
        for t in &ts {
            let d = models.discriminator.forward(&t.state, &t.action_vec).unwrap();
            assert_eq!(t.reward, -crate::math::ln(1.0 - d));
        }
    }

    #[test]
    fn rollouts_are_reproducible_and_ratios_start_at_one() {
        let (ds, _) = small_world(3);
        let layout = shared_layout(&ds, 20).unwrap();
        let models = Models::new(EpisodeState::state_len(&ds[0]), layout, 9).unwrap();
        let cfg = TrainConfig::default();
        let run = || {
            let mut rng = seed::rng(4);
            collect_rollouts(&ds, &layout, &models.policy, &models.discriminator, 120, &cfg, &mut rng)
                .unwrap()
                .0
        };
        let a = run();
        assert_eq!(a, run());
        for t in &a {
            let lp = models.policy.log_prob(&t.state, &t.heads).unwrap();
            assert!((lp - t.log_prob).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicates_cost_more_than_backing_out() {
        // frozen discriminator at 1/2 makes the imitation term constant
        let (ds, _) = small_world(4);
        let ds = &ds[0];
        let d = DiscriminatorNet {
            net: Mlp::zeros(&[3, 2, 1], &[Activation::Relu, Activation::Identity]).unwrap(),
        };
        let f = ActionSpec::Filter(FilterPredicate::new("c1", FilterOp::Eq, "cat_c1_0"));
        let g = ActionSpec::Filter(FilterPredicate::new("c2", FilterOp::Eq, "cat_c2_1"));
        let ret = |actions: &[ActionSpec]| {
            let mut ep = EpisodeState::new(ds, 12);
            let mut total = 0.0;
            for a in actions {
                ep.step(ds, a).unwrap();
                let p = incoherence_penalty(ep.actions(), crate::train::SameAction::Full);
                total += imitation_reward(d.forward(&[0.0, 0.0], &[0.0]).unwrap(), p);
            }
            total
        };
        let dup = [f.clone(), g.clone(), g.clone(), ActionSpec::Stop];
        let fixed = [f, g, ActionSpec::Back, ActionSpec::Stop];
        assert!(ret(&dup) < ret(&fixed));
    }

    #[test]
    fn mixed_batches_are_half_expert() {
        let (ds, ex) = small_world(5);
        let layout = shared_layout(&ds, 20).unwrap();
        let models = Models::new(EpisodeState::state_len(&ds[0]), layout, 1).unwrap();
        let cfg = TrainConfig::default();
        let steps = expert_steps(&ds, &ex, &layout, cfg.same_action).unwrap();
        assert!(steps.len() >= 16);
        let mut rng = seed::rng(2);
        let (gen, _) =
            collect_rollouts(&ds, &layout, &models.policy, &models.discriminator, 64, &cfg, &mut rng).unwrap();
        let batches = mixed_batches(&gen, &steps, &models, &cfg, &mut rng).unwrap();
        assert_eq!(batches.len(), 4);
        for b in &batches {
            assert_eq!(b.len(), 32);
            let expert_part = &b[16..];
            for s in expert_part {
                let lp = models.policy.log_prob(&s.state, &s.heads).unwrap();
                assert!((lp - s.old_log_prob).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn training_is_deterministic_and_logs_each_interval() {
        let (ds, ex) = small_world(6);
        let cfg = small_cfg();
        let run = || {
            let mut seen = 0;
            let out = train_gail(&cfg, &ds, &ex, None, &mut |_, _, _| {
                seen += 1;
                Ok(())
            })
            .unwrap();
            (out, seen)
        };
        let (a, seen) = run();
        let (b, _) = run();
        assert_eq!(seen, 3);
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.models, b.models);
        assert_eq!(a.interactions, 300);
        assert!(a.bc.is_some());
        let no_bc = train_gail(&TrainConfig { bc_enabled: false, ..cfg }, &ds, &ex, None, &mut |_, _, _| Ok(())).unwrap();
        assert!(no_bc.bc.is_none());
    }

    #[test]
    fn no_penalty_run_logs_zero_penalty() {
        let (ds, ex) = small_world(7);
        let cfg = TrainConfig {
            penalty_enabled: false,
            ..small_cfg()
        };
        let out = train_gail(&cfg, &ds, &ex, None, &mut |_, _, _| Ok(())).unwrap();
        assert!(out.metrics.iter().all(|m| m.mean_penalty == 0.0));
    }
}
