use alloc::collections::BTreeMap;

use super::dataset::{Dataset, NULL_CODE};
use super::display::Display;
use crate::Result;

/// A discrete probability distribution over ordered keys.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Distribution<K: Ord = u32> {
    probs: BTreeMap<K, f64>,
}

impl<K: Ord> Distribution<K> {
    pub fn new() -> Self {
        Self {
            probs: BTreeMap::new(),
        }
    }

    /// Normalize non-negative weights. Zero total weight yields the empty
    /// distribution.
    pub fn from_weights(weights: impl IntoIterator<Item = (K, f64)>) -> Self {
        let mut probs: BTreeMap<K, f64> = BTreeMap::new();
        for (k, w) in weights {
            if w > 0.0 {
                *probs.entry(k).or_insert(0.0) += w;
            }
        }
        let total: f64 = probs.values().sum();
        if total > 0.0 {
            probs.values_mut().for_each(|p| *p /= total);
        }
        Self { probs }
    }

    pub fn get(&self, key: &K) -> f64 {
        self.probs.get(key).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, f64)> {
        self.probs.iter().map(|(k, p)| (k, *p))
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.probs.keys()
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }

    pub fn map_keys<J: Ord>(&self, f: impl Fn(&K) -> J) -> Distribution<J> {
        Distribution::from_weights(self.probs.iter().map(|(k, p)| (f(k), *p)))
    }
}

/// Relative frequency of each value of `col` over the display's filtered
/// rows, keyed by dictionary code ([`NULL_CODE`] for nulls).
///
/// Grouping does not change the histogram: each group key carries weight
/// `group size / filtered rows`, which is the same distribution as over
/// the underlying rows.
pub fn column_histogram(d: &Display, ds: &Dataset, col: &str) -> Result<Distribution> {
    let idx = ds.column_index(col)?;
    Ok(histogram_by_index(d, ds, idx))
}

pub(crate) fn histogram_by_index(d: &Display, ds: &Dataset, col: usize) -> Distribution {
    let counts = d.value_counts(ds, col);
    let null_slot = counts.len() - 1;
    Distribution::from_weights(counts.iter().enumerate().map(|(i, &c)| {
        let key = if i == null_slot { NULL_CODE } else { i as u32 };
        (key, c as f64)
    }))
}
