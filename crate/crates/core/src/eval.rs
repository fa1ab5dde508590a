//! Session-similarity metrics against gold sessions.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{action_from_heads, ActionSpec, EpisodeState, Head, HeadIndices, Trajectory};
use crate::math;
use crate::nn::{sample_action, PolicyNet};
use crate::seed::{self, EngineRng};
use crate::tabular::Dataset;
use crate::{Error, Result};

/// One view of a session: the display fingerprint and its encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct View {
    pub fingerprint: String,
    pub encoding: Vec<f64>,
}

pub type ViewSeq = Vec<View>;

/// The displays a session produced. BACK and STOP add no view, and a view
/// identical to the one before it is dropped.
pub fn view_seq(ds: &Dataset, traj: &Trajectory) -> Result<ViewSeq> {
    let mut ep = EpisodeState::new(ds, traj.len().max(1));
    let mut out: ViewSeq = Vec::new();
    for step in &traj.steps {
        ep.step(ds, &step.action)?;
        if !step.action.kind().is_operation() {
            continue;
        }
        let frame = ep.current_frame();
        let fingerprint = frame.display.fingerprint();
        if out.last().is_some_and(|v| v.fingerprint == fingerprint) {
            continue;
        }
        out.push(View {
            fingerprint,
            encoding: frame.encoding.clone(),
        });
    }
    Ok(out)
}

fn check_gold(gold: &[ViewSeq]) -> Result<()> {
    if gold.is_empty() {
        return Err(Error::InvalidInput("gold session set is empty".into()));
    }
    Ok(())
}

/// Share of generated views whose fingerprint occurs anywhere in the gold
/// sessions. An empty generated session scores 0.
pub fn precision(gen: &[View], gold: &[ViewSeq]) -> Result<f64> {
    check_gold(gold)?;
    if gen.is_empty() {
        return Ok(0.0);
    }
    let known: alloc::collections::BTreeSet<&str> =
        gold.iter().flatten().map(|v| v.fingerprint.as_str()).collect();
    let hits = gen.iter().filter(|v| known.contains(v.fingerprint.as_str())).count();
    Ok(hits as f64 / gen.len() as f64)
}

fn ngram_counts(seq: &[View], n: usize) -> BTreeMap<Vec<&str>, usize> {
    let mut out = BTreeMap::new();
    if seq.len() >= n {
        for w in seq.windows(n) {
            *out.entry(w.iter().map(|v| v.fingerprint.as_str()).collect()).or_insert(0) += 1;
        }
    }
    out
}

/// Clipped order-`n` view-gram precision times the brevity penalty against
/// the gold length closest to the generated length (shorter on ties).
pub fn tbleu(gen: &[View], gold: &[ViewSeq], n: usize) -> Result<f64> {
    check_gold(gold)?;
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidInput(alloc::format!("n-gram order {n} outside 1..=3")));
    }
    if gen.len() < n {
        return Ok(0.0);
    }
    let counts = ngram_counts(gen, n);
    let gold_counts: Vec<_> = gold.iter().map(|g| ngram_counts(g, n)).collect();
    let mut clipped = 0usize;
    for (gram, c) in &counts {
        let max_ref = gold_counts.iter().map(|g| g.get(gram).copied().unwrap_or(0)).max().unwrap_or(0);
        clipped += (*c).min(max_ref);
    }
    let p = clipped as f64 / (gen.len() + 1 - n) as f64;
    let c = gen.len();
    let r = gold
        .iter()
        .map(|g| g.len())
        .min_by_key(|&len| (len.abs_diff(c), len))
        .expect("gold nonempty");
    let bp = if c > r { 1.0 } else { math::exp(1.0 - r as f64 / c as f64) };
    Ok(p * bp)
}

/// `1 − ‖a − b‖ / √len`: display encodings live in the unit cube.
pub fn display_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.is_empty() {
        return Ok(1.0);
    }
    let d = math::euclidean(a, b) / math::sqrt(a.len() as f64);
    Ok((1.0 - d).clamp(0.0, 1.0))
}

/// How generated views are paired with gold views.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alignment {
    /// Largest order-preserving matching.
    #[default]
    Optimal,
    /// Each generated view takes the earliest remaining gold view it is
    /// similar enough to.
    Greedy,
}

fn similar(gen: &[View], gold: &[View], threshold: f64) -> Result<Vec<Vec<bool>>> {
    gen.iter()
        .map(|g| {
            gold.iter()
                .map(|h| Ok(display_similarity(&g.encoding, &h.encoding)? >= threshold))
                .collect()
        })
        .collect()
}

fn matched(ok: &[Vec<bool>], gold_len: usize, alignment: Alignment) -> usize {
    match alignment {
        Alignment::Greedy => {
            let mut next = 0;
            let mut count = 0;
            for row in ok {
                if let Some(k) = (next..gold_len).find(|&k| row[k]) {
                    count += 1;
                    next = k + 1;
                }
            }
            count
        }
        Alignment::Optimal => {
            let mut dp = vec![vec![0usize; gold_len + 1]; ok.len() + 1];
            for i in 1..=ok.len() {
                for j in 1..=gold_len {
                    let diag = dp[i - 1][j - 1] + usize::from(ok[i - 1][j - 1]);
                    dp[i][j] = diag.max(dp[i - 1][j]).max(dp[i][j - 1]);
                }
            }
            dp[ok.len()][gold_len]
        }
    }
}

/// Best, over the gold sessions, of matched views divided by the longer
/// session length. Views match when their display similarity reaches
/// `threshold`.
pub fn eda_sim(gen: &[View], gold: &[ViewSeq], threshold: f64, alignment: Alignment) -> Result<f64> {
    check_gold(gold)?;
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidInput(alloc::format!("threshold {threshold} outside (0, 1]")));
    }
    let mut best = 0.0f64;
    for g in gold {
        let longest = gen.len().max(g.len());
        if longest == 0 {
            continue;
        }
        let ok = similar(gen, g, threshold)?;
        let m = matched(&ok, g.len(), alignment);
        best = best.max(m as f64 / longest as f64);
    }
    Ok(best)
}

/// The five report metrics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    #[serde(rename = "Precision")]
    pub precision: f64,
    #[serde(rename = "TBLEU-1")]
    pub tbleu1: f64,
    #[serde(rename = "TBLEU-2")]
    pub tbleu2: f64,
    #[serde(rename = "TBLEU-3")]
    pub tbleu3: f64,
    #[serde(rename = "EDA-Sim")]
    pub eda_sim: f64,
}

impl SessionMetrics {
    pub const COLUMNS: [&'static str; 5] = ["Precision", "TBLEU-1", "TBLEU-2", "TBLEU-3", "EDA-Sim"];

    pub fn as_array(&self) -> [f64; 5] {
        [self.precision, self.tbleu1, self.tbleu2, self.tbleu3, self.eda_sim]
    }

    fn mean(items: &[SessionMetrics]) -> SessionMetrics {
        let n = items.len().max(1) as f64;
        let mut out = SessionMetrics::default();
        for m in items {
            out.precision += m.precision / n;
            out.tbleu1 += m.tbleu1 / n;
            out.tbleu2 += m.tbleu2 / n;
            out.tbleu3 += m.tbleu3 / n;
            out.eda_sim += m.eda_sim / n;
        }
        out
    }
}

/// Metric settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub threshold: f64,
    pub alignment: Alignment,
    pub horizon: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            threshold: 0.9,
            alignment: Alignment::Optimal,
            horizon: 12,
        }
    }
}

/// Score one generated session.
pub fn score_views(gen: &[View], gold: &[ViewSeq], cfg: &EvalConfig) -> Result<SessionMetrics> {
    Ok(SessionMetrics {
        precision: precision(gen, gold)?,
        tbleu1: tbleu(gen, gold, 1)?,
        tbleu2: tbleu(gen, gold, 2)?,
        tbleu3: tbleu(gen, gold, 3)?,
        eda_sim: eda_sim(gen, gold, cfg.threshold, cfg.alignment)?,
    })
}

/// How actions are chosen when generating sessions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionMode {
    /// Most likely index on every head.
    Greedy,
    /// Sample from the policy.
    Sample,
    /// Uniform over every head, ignoring the policy.
    Uniform,
}

/// Run one session of at most `horizon` steps on `ds`.
pub fn generate_session(
    policy: &PolicyNet,
    ds: &Dataset,
    horizon: usize,
    mode: SessionMode,
    rng: &mut EngineRng,
) -> Result<Trajectory> {
    let mut ep = EpisodeState::new(ds, horizon);
    while !ep.is_done() {
        let heads = match mode {
            SessionMode::Greedy => policy.greedy(&ep.encode_state())?,
            SessionMode::Sample => sample_action(&policy.forward(&ep.encode_state())?, rng).0,
            SessionMode::Uniform => {
                let mut h = HeadIndices::default();
                for &head in Head::ALL.iter() {
                    h.set(head, rng.random_range(0..policy.layout.size(head)));
                }
                h.masked()
            }
        };
        let action: ActionSpec = action_from_heads(&heads, ep.current(), ds, &policy.layout);
        ep.step(ds, &action)?;
    }
    Trajectory::from_actions(ds, ep.actions())
}

/// One report row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub dataset: String,
    pub sessions: usize,
    #[serde(flatten)]
    pub metrics: SessionMetrics,
}

/// Per-dataset rows plus their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    pub aggregate: ReportRow,
}

impl EvalReport {
    fn from_rows(rows: Vec<ReportRow>) -> Self {
        let metrics: Vec<SessionMetrics> = rows.iter().map(|r| r.metrics).collect();
        let aggregate = ReportRow {
            dataset: "mean".into(),
            sessions: rows.iter().map(|r| r.sessions).sum(),
            metrics: SessionMetrics::mean(&metrics),
        };
        Self { rows, aggregate }
    }

    /// Aligned text table, one row per dataset and a closing mean row.
    pub fn to_table(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.dataset.len())
            .chain([7])
            .max()
            .unwrap_or(7);
        let mut out = alloc::format!("{:<width$}", "Dataset");
        for c in SessionMetrics::COLUMNS {
            out += &alloc::format!("  {c:>9}");
        }
        out.push('\n');
        for r in self.rows.iter().chain([&self.aggregate]) {
            out += &alloc::format!("{:<width$}", r.dataset);
            for v in r.metrics.as_array() {
                out += &alloc::format!("  {v:>9.4}");
            }
            out.push('\n');
        }
        out
    }
}

/// Score already generated sessions. `generated[i]` and `gold[i]` belong
/// to `datasets[i]`.
pub fn evaluate_sessions(
    datasets: &[Dataset],
    generated: &[Vec<Trajectory>],
    gold: &[Vec<Trajectory>],
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    if datasets.len() != generated.len() || datasets.len() != gold.len() {
        return Err(Error::InvalidInput("one session list per dataset expected".into()));
    }
    let mut rows = Vec::with_capacity(datasets.len());
    for ((ds, gen), gold) in datasets.iter().zip(generated).zip(gold) {
        let gold_views: Vec<ViewSeq> = gold.iter().map(|t| view_seq(ds, t)).collect::<Result<_>>()?;
        let scores: Vec<SessionMetrics> = gen
            .iter()
            .map(|t| score_views(&view_seq(ds, t)?, &gold_views, cfg))
            .collect::<Result<_>>()?;
        rows.push(ReportRow {
            dataset: ds.name().into(),
            sessions: gen.len(),
            metrics: SessionMetrics::mean(&scores),
        });
    }
    Ok(EvalReport::from_rows(rows))
}

/// Generate `n_sessions` per dataset and score them against `gold`.
pub fn evaluate_model(
    policy: &PolicyNet,
    datasets: &[Dataset],
    gold: &[Vec<Trajectory>],
    n_sessions: usize,
    mode: SessionMode,
    cfg: &EvalConfig,
    seed: u64,
) -> Result<EvalReport> {
    let mut generated = Vec::with_capacity(datasets.len());
    for (i, ds) in datasets.iter().enumerate() {
        let mut rng = seed::rng(seed::derive_indexed(seed, "eval", i as u64));
        let sessions = (0..n_sessions)
            .map(|_| generate_session(policy, ds, cfg.horizon, mode, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        generated.push(sessions);
    }
    evaluate_sessions(datasets, &generated, gold, cfg)
}
