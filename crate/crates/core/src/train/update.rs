use alloc::vec;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use super::{imitation_reward, ExpertStep, ReplayBuffer, TrainConfig};
use crate::env::HeadIndices;
use crate::math;
use crate::nn::{AdamState, DiscriminatorNet, PolicyNet, ValueNet};
use crate::seed::EngineRng;
use crate::{Error, Result};

fn ensure_finite(xs: &[f64], what: &'static str) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Losses recorded during behavioural cloning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcReport {
    pub initial_nll: f64,
    pub final_nll: f64,
    /// Mean regularised batch loss per epoch.
    pub epoch_loss: Vec<f64>,
}

/// Mean negative log-likelihood of the expert actions.
pub fn mean_nll(policy: &PolicyNet, steps: &[ExpertStep]) -> Result<f64> {
    let mut total = 0.0;
    for s in steps {
        total -= policy.log_prob(&s.state, &s.heads)?;
    }
    Ok(total / steps.len().max(1) as f64)
}

/// Fit the policy to expert pairs by minimising mean NLL plus
/// `l2 · ‖θ‖²` with Adam over shuffled mini-batches.
pub fn bc_pretrain(
    policy: &mut PolicyNet,
    steps: &[ExpertStep],
    cfg: &TrainConfig,
    rng: &mut EngineRng,
) -> Result<BcReport> {
    if steps.is_empty() {
        return Err(Error::InvalidInput("no expert pairs for pretraining".into()));
    }
    let initial_nll = mean_nll(policy, steps)?;
    let mut adam = AdamState::new(policy.net.param_count(), cfg.lr_bc);
    let mut order: Vec<usize> = (0..steps.len()).collect();
    let mut epoch_loss = Vec::with_capacity(cfg.bc_epochs);
    let mut grad = vec![0.0; policy.net.param_count()];
    for _ in 0..cfg.bc_epochs {
        order.shuffle(rng);
        let mut sum = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(cfg.bc_batch) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / chunk.len() as f64;
            let mut loss = 0.0;
            for &i in chunk {
                let s = &steps[i];
                loss -= scale * policy.accumulate_log_prob_grad(&s.state, &s.heads, -scale, &mut grad)?;
            }
            let mut norm2 = 0.0;
            for (g, p) in grad.iter_mut().zip(policy.net.params()) {
                *g += 2.0 * cfg.l2 * p;
                norm2 += p * p;
            }
            loss += cfg.l2 * norm2;
            if !loss.is_finite() {
                return Err(Error::NonFinite("pretraining loss"));
            }
            adam.update(policy.net.params_mut(), &grad)?;
            sum += loss;
            batches += 1;
        }
        epoch_loss.push(sum / batches as f64);
    }
    Ok(BcReport {
        initial_nll,
        final_nll: mean_nll(policy, steps)?,
        epoch_loss,
    })
}

/// Fraction of expert pairs whose greedy policy action equals the expert
/// action on every relevant head.
pub fn action_agreement(policy: &PolicyNet, steps: &[ExpertStep]) -> Result<f64> {
    let mut hits = 0usize;
    for s in steps {
        if policy.greedy(&s.state)? == s.heads.masked() {
            hits += 1;
        }
    }
    Ok(hits as f64 / steps.len().max(1) as f64)
}

/// Clipped advantage: `(1 + ε)A` for `A ≥ 0`, `(1 − ε)A` otherwise.
pub fn clip_advantage(eps: f64, a: f64) -> f64 {
    if a >= 0.0 {
        (1.0 + eps) * a
    } else {
        (1.0 - eps) * a
    }
}

/// Mean of `min(ratio · A, g(ε, A))`.
pub fn surrogate(ratios: &[f64], advantages: &[f64], eps: f64) -> f64 {
    let n = ratios.len().max(1) as f64;
    ratios
        .iter()
        .zip(advantages)
        .map(|(r, a)| (r * a).min(clip_advantage(eps, *a)))
        .sum::<f64>()
        / n
}

/// Discriminator step diagnostics, measured before the step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscStats {
    pub loss: f64,
    pub accuracy: f64,
    pub expert_mean: f64,
    pub generated_mean: f64,
    pub batch_each: usize,
}

/// One Adam step on an equal-sized generated/expert batch of at most
/// `cfg.batch_disc` items, pushing expert pairs toward 1.
pub fn update_discriminator(
    disc: &mut DiscriminatorNet,
    adam: &mut AdamState,
    buffer: &ReplayBuffer,
    expert: &[ExpertStep],
    cfg: &TrainConfig,
    rng: &mut EngineRng,
) -> Result<DiscStats> {
    if buffer.is_empty() || expert.is_empty() {
        return Err(Error::InvalidInput("discriminator needs generated and expert pairs".into()));
    }
    let n = (cfg.batch_disc / 2).min(buffer.len()).min(expert.len());
    let gen_idx = index::sample(rng, buffer.len(), n);
    let exp_idx = index::sample(rng, expert.len(), n);
    let gen: Vec<(&[f64], &[f64])> = gen_idx
        .iter()
        .map(|i| {
            let t = buffer.get(i).expect("index in range");
            (t.state.as_slice(), t.action_vec.as_slice())
        })
        .collect();
    let exp: Vec<(&[f64], &[f64])> = exp_idx
        .iter()
        .map(|i| (expert[i].state.as_slice(), expert[i].action_vec.as_slice()))
        .collect();
    let mut correct = 0usize;
    let (mut em, mut gm) = (0.0, 0.0);
    for (s, a) in &exp {
        let d = disc.forward(s, a)?;
        em += d / n as f64;
        correct += usize::from(d > 0.5);
    }
    for (s, a) in &gen {
        let d = disc.forward(s, a)?;
        gm += d / n as f64;
        correct += usize::from(d < 0.5);
    }
    let (loss, grad) = disc.grad_loss(&gen, &exp)?;
    if !loss.is_finite() {
        return Err(Error::NonFinite("discriminator loss"));
    }
    adam.update(disc.net.params_mut(), &grad)?;
    Ok(DiscStats {
        loss,
        accuracy: correct as f64 / (2 * n) as f64,
        expert_mean: em,
        generated_mean: gm,
        batch_each: n,
    })
}

/// One element of a mixed policy batch.
#[derive(Debug, Clone, PartialEq)]
pub struct PpoSample {
    pub state: Vec<f64>,
    pub heads: HeadIndices,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
    /// Log-probability under the policy that produced or scored the pair.
    pub old_log_prob: f64,
}

impl PpoSample {
    /// Wrap an expert pair, scoring it with the current discriminator and
    /// policy.
    pub fn from_expert(
        step: &ExpertStep,
        policy: &PolicyNet,
        disc: &DiscriminatorNet,
        penalty_enabled: bool,
    ) -> Result<Self> {
        let d = disc.forward(&step.state, &step.action_vec)?;
        let p = if penalty_enabled { step.penalty } else { 0.0 };
        Ok(Self {
            state: step.state.clone(),
            heads: step.heads,
            reward: imitation_reward(d, p),
            next_state: step.next_state.clone(),
            done: step.done,
            old_log_prob: policy.log_prob(&step.state, &step.heads)?,
        })
    }
}

/// Diagnostics from one policy step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpoStats {
    pub surrogate: f64,
    pub mean_advantage: f64,
    pub mean_ratio: f64,
}

/// One-step advantages `r + γ V(s')(1 − done) − V(s)`.
pub fn advantages(value: &ValueNet, batch: &[PpoSample], discount: f64) -> Result<Vec<f64>> {
    batch
        .iter()
        .map(|b| {
            let next = if b.done { 0.0 } else { value.forward(&b.next_state)? };
            Ok(b.reward + discount * next - value.forward(&b.state)?)
        })
        .collect()
}

/// Gradient of the negated clipped surrogate; also returns the stats.
pub fn ppo_gradient(
    policy: &PolicyNet,
    value: &ValueNet,
    batch: &[PpoSample],
    cfg: &TrainConfig,
) -> Result<(PpoStats, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty policy batch".into()));
    }
    let adv = advantages(value, batch, cfg.discount())?;
    let n = batch.len() as f64;
    let mut grad = vec![0.0; policy.net.param_count()];
    let mut ratios = Vec::with_capacity(batch.len());
    for (b, a) in batch.iter().zip(&adv) {
        let ratio = math::exp(policy.log_prob(&b.state, &b.heads)? - b.old_log_prob);
        ratios.push(ratio);
        if ratio * a <= clip_advantage(cfg.clip, *a) && *a != 0.0 {
            policy.accumulate_log_prob_grad(&b.state, &b.heads, -a * ratio / n, &mut grad)?;
        }
    }
    let stats = PpoStats {
        surrogate: surrogate(&ratios, &adv, cfg.clip),
        mean_advantage: adv.iter().sum::<f64>() / n,
        mean_ratio: ratios.iter().sum::<f64>() / n,
    };
    Ok((stats, grad))
}

/// One Adam step ascending the clipped surrogate.
pub fn ppo_update(
    policy: &mut PolicyNet,
    adam: &mut AdamState,
    value: &ValueNet,
    batch: &[PpoSample],
    cfg: &TrainConfig,
) -> Result<PpoStats> {
    let (stats, grad) = ppo_gradient(policy, value, batch, cfg)?;
    ensure_finite(&grad, "policy gradient")?;
    adam.update(policy.net.params_mut(), &grad)?;
    Ok(stats)
}

/// One semi-gradient step on the mean squared TD error; returns the loss
/// before the step.
pub fn value_update(
    value: &mut ValueNet,
    adam: &mut AdamState,
    batch: &[PpoSample],
    cfg: &TrainConfig,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty value batch".into()));
    }
    let targets: Vec<f64> = batch
        .iter()
        .map(|b| {
            let next = if b.done { 0.0 } else { value.forward(&b.next_state)? };
            Ok(b.reward + cfg.discount() * next)
        })
        .collect::<Result<_>>()?;
    let pairs: Vec<(&[f64], f64)> = batch.iter().zip(&targets).map(|(b, t)| (b.state.as_slice(), *t)).collect();
    let (loss, grad) = value.grad_td(&pairs)?;
    if !loss.is_finite() {
        return Err(Error::NonFinite("value loss"));
    }
    adam.update(value.net.params_mut(), &grad)?;
    Ok(loss)
}
