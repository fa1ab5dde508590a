use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::coherence::{coherence, CoherenceRuleset};
use super::session::MeasureScores;
use crate::env::{ActionSpec, EpisodeState};
use crate::math;
use crate::tabular::{Dataset, Display, Distribution};
use crate::Result;

/// A logistic curve with a fixed center and width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmoidSpec {
    pub center: f64,
    pub width: f64,
    pub decreasing: bool,
}

impl SigmoidSpec {
    pub fn increasing(center: f64, width: f64) -> Self {
        Self {
            center,
            width,
            decreasing: false,
        }
    }

    pub fn decreasing(center: f64, width: f64) -> Self {
        Self {
            center,
            width,
            decreasing: true,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let s = math::logistic((x - self.center) / self.width);
        if self.decreasing {
            1.0 - s
        } else {
            s
        }
    }
}

/// `σ((x − center) / width)`, mirrored when the spec is decreasing.
pub fn sigmoid(x: f64, spec: &SigmoidSpec) -> f64 {
    spec.eval(x)
}

/// Sigmoid parameters and smoothing used by the measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureConfig {
    /// Applied to `groups × grouped attributes`.
    pub group_conciseness: SigmoidSpec,
    /// Applied to the number of filtered tuples.
    pub group_rows: SigmoidSpec,
    /// Applied to a KL divergence.
    pub deviation: SigmoidSpec,
    /// Applied to `groups × visible rows`.
    pub compactness: SigmoidSpec,
    pub kl_eps: f64,
}

impl MeasureConfig {
    /// Defaults scaled to a dataset with `rows` rows.
    pub fn for_rows(rows: usize) -> Self {
        let rows = rows.max(1) as f64;
        Self {
            group_conciseness: SigmoidSpec::decreasing(50.0, 15.0),
            group_rows: SigmoidSpec::decreasing(rows / 2.0, rows / 10.0),
            deviation: SigmoidSpec::increasing(1.0, 0.5),
            compactness: SigmoidSpec::decreasing(rows / 2.0, rows / 10.0),
            kl_eps: 1e-6,
        }
    }

    pub fn for_dataset(ds: &Dataset) -> Self {
        Self::for_rows(ds.row_count())
    }
}

/// `D_KL(P ‖ Q)` in nats over the union support, with `Q` smoothed by
/// adding `eps` to every support point and renormalizing. Keys present only
/// in `Q` contribute nothing. Identical inputs give exactly zero.
pub fn kl_divergence<K: Ord>(p: &Distribution<K>, q: &Distribution<K>, eps: f64) -> f64 {
    if p.is_empty() || p == q {
        return 0.0;
    }
    let mut union = p.len();
    for k in q.keys() {
        if p.get(k) == 0.0 {
            union += 1;
        }
    }
    let norm = q.total() + eps * union as f64;
    let kl: f64 = p
        .iter()
        .filter(|(_, pk)| *pk > 0.0)
        .map(|(k, pk)| pk * math::ln(pk * norm / (q.get(k) + eps)))
        .sum();
    kl.max(0.0)
}

/// Largest per-column KL divergence between two displays of `ds`.
pub fn max_column_kl(from: &Display, to: &Display, ds: &Dataset, eps: f64) -> f64 {
    (0..ds.width())
        .map(|c| {
            let p = crate::tabular::histogram::histogram_by_index(from, ds, c);
            let q = crate::tabular::histogram::histogram_by_index(to, ds, c);
            kl_divergence(&p, &q, eps)
        })
        .fold(0.0, f64::max)
}

/// Operation-conditioned interestingness of the step `prev → cur`.
pub fn a_int(prev: &Display, cur: &Display, action: &ActionSpec, ds: &Dataset, cfg: &MeasureConfig) -> f64 {
    match action {
        ActionSpec::Group(_) => {
            // a single grouped attribute per display
            let grouped_attrs = 1.0;
            let numerator = cfg.group_conciseness.eval(cur.group_count() as f64 * grouped_attrs);
            let denominator = cfg.group_rows.eval(cur.filtered_count() as f64);
            if denominator <= 0.0 {
                1.0
            } else {
                (numerator / denominator).clamp(0.0, 1.0)
            }
        }
        ActionSpec::Filter(_) => cfg.deviation.eval(max_column_kl(prev, cur, ds, cfg.kl_eps)),
        ActionSpec::Back | ActionSpec::Stop => 0.0,
    }
}

/// Minimum Euclidean distance between `cur` and the earlier encodings.
pub fn diversity(cur: &[f64], history: &[&[f64]]) -> f64 {
    history
        .iter()
        .map(|h| math::euclidean(cur, h))
        .fold(f64::INFINITY, f64::min)
}

/// Compactness `C(d) = h1(g · |d|)`, with `g = 1` for ungrouped displays,
/// floored at `1e-9`.
pub fn compactness(d: &Display, cfg: &MeasureConfig) -> f64 {
    let groups = if d.is_grouped() { d.group_count() } else { 1 };
    cfg.compactness
        .eval((groups * d.visible_count()) as f64)
        .max(1e-9)
}

/// Compaction gain `1 − C(prev) / C(cur)`.
pub fn readability(prev: &Display, cur: &Display, cfg: &MeasureConfig) -> f64 {
    1.0 - compactness(prev, cfg) / compactness(cur, cfg)
}

/// Deviation of `cur` from the initial display.
pub fn peculiarity(cur: &Display, initial: &Display, ds: &Dataset, cfg: &MeasureConfig) -> f64 {
    cfg.deviation.eval(max_column_kl(initial, cur, ds, cfg.kl_eps))
}

/// Replay `actions` on `ds` and score every step.
pub fn score_session(
    ds: &Dataset,
    actions: &[ActionSpec],
    rules: &CoherenceRuleset,
    cfg: &MeasureConfig,
) -> Result<Vec<MeasureScores>> {
    let mut episode = EpisodeState::new(ds, actions.len().max(1));
    let mut out = Vec::with_capacity(actions.len());
    for (t, action) in actions.iter().enumerate() {
        let prev = episode.current_frame().clone();
        let seen: Vec<_> = episode.history().to_vec();
        episode.step(ds, action)?;
        let cur = episode.current_frame();
        let history: Vec<&[f64]> = seen.iter().map(|f| f.encoding.as_slice()).collect();
        out.push(MeasureScores {
            a_int: a_int(&prev.display, &cur.display, action, ds, cfg),
            diversity: diversity(&cur.encoding, &history),
            coherence: coherence(&actions[..t], action, &prev.display, &cur.display, rules),
            readability: readability(&prev.display, &cur.display, cfg),
            peculiarity: peculiarity(&cur.display, episode.initial(), ds, cfg),
        });
    }
    Ok(out)
}
