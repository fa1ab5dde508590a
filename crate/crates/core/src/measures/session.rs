use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::{Error, Result};

/// The five measures, in tie-breaking order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Measure {
    #[serde(rename = "A-INT")]
    AInt,
    Diversity,
    Readability,
    Peculiarity,
    Coherence,
}

impl Measure {
    pub const ALL: [Measure; 5] = [
        Measure::AInt,
        Measure::Diversity,
        Measure::Readability,
        Measure::Peculiarity,
        Measure::Coherence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::AInt => "A-INT",
            Measure::Diversity => "Diversity",
            Measure::Readability => "Readability",
            Measure::Peculiarity => "Peculiarity",
            Measure::Coherence => "Coherence",
        }
    }
}

/// Scores of one step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeasureScores {
    pub a_int: f64,
    pub diversity: f64,
    pub coherence: f64,
    pub readability: f64,
    pub peculiarity: f64,
}

impl MeasureScores {
    pub fn get(&self, m: Measure) -> f64 {
        match m {
            Measure::AInt => self.a_int,
            Measure::Diversity => self.diversity,
            Measure::Readability => self.readability,
            Measure::Peculiarity => self.peculiarity,
            Measure::Coherence => self.coherence,
        }
    }

    pub fn set(&mut self, m: Measure, value: f64) {
        match m {
            Measure::AInt => self.a_int = value,
            Measure::Diversity => self.diversity = value,
            Measure::Readability => self.readability = value,
            Measure::Peculiarity => self.peculiarity = value,
            Measure::Coherence => self.coherence = value,
        }
    }

    /// Values in [`Measure::ALL`] order.
    pub fn as_array(&self) -> [f64; 5] {
        Measure::ALL.map(|m| self.get(m))
    }
}

/// Min-max normalize each measure across a session's steps. A constant
/// series maps to zero everywhere.
pub fn normalize_session(raw: &[MeasureScores]) -> Vec<MeasureScores> {
    let mut out = alloc::vec![MeasureScores::default(); raw.len()];
    for m in Measure::ALL {
        let (lo, hi) = raw
            .iter()
            .map(|s| s.get(m))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
        let span = hi - lo;
        for (o, s) in out.iter_mut().zip(raw) {
            let v = if span > 0.0 { (s.get(m) - lo) / span } else { 0.0 };
            o.set(m, v);
        }
    }
    out
}

/// Measures whose normalized score exceeds `threshold`, per step.
pub fn flag_above(normalized: &[MeasureScores], threshold: f64) -> Vec<Vec<Measure>> {
    normalized
        .iter()
        .map(|s| Measure::ALL.into_iter().filter(|&m| s.get(m) > threshold).collect())
        .collect()
}

/// The measure in `measures` with the highest per-session `quantile`
/// score. Ties go to the measure earliest in [`Measure::ALL`].
pub fn classify_session(normalized: &[MeasureScores], quantile: f64, measures: &[Measure]) -> Result<Measure> {
    if normalized.is_empty() {
        return Err(Error::InvalidInput("cannot classify an empty session".into()));
    }
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(Error::InvalidInput("quantile must lie in (0, 1)".into()));
    }
    let mut ordered: Vec<Measure> = measures.to_vec();
    ordered.sort();
    ordered.dedup();
    let mut best: Option<(Measure, f64)> = None;
    for m in ordered {
        let series: Vec<f64> = normalized.iter().map(|s| s.get(m)).collect();
        let q = math::quantile(&series, quantile);
        if best.is_none_or(|(_, b)| q > b) {
            best = Some((m, q));
        }
    }
    best.map(|(m, _)| m)
        .ok_or_else(|| Error::InvalidInput("no measures to classify by".into()))
}
