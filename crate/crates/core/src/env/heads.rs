use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::action::{ActionKind, ActionSpec};
use crate::tabular::{
    AggFunc, ColumnKind, Dataset, Display, FilterOp, FilterPredicate, Grouping,
};
use crate::{Error, Result};

/// Shortest and longest substring offered as a text filter term.
pub const SUBSTRING_MIN: usize = 3;
pub const SUBSTRING_MAX: usize = 6;

/// The discrete output heads of the policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Head {
    Kind,
    /// Filter column, or the grouped column for GROUP.
    Column,
    AggColumn,
    AggFunc,
    FilterOp,
    TermBin,
}

impl Head {
    pub const ALL: [Head; 6] = [
        Head::Kind,
        Head::Column,
        Head::AggColumn,
        Head::AggFunc,
        Head::FilterOp,
        Head::TermBin,
    ];

    /// Heads that parameterize an action of the given kind.
    pub fn relevant(kind: ActionKind) -> &'static [Head] {
        match kind {
            ActionKind::Group => &[Head::Kind, Head::Column, Head::AggColumn, Head::AggFunc],
            ActionKind::Filter => &[Head::Kind, Head::Column, Head::FilterOp, Head::TermBin],
            ActionKind::Back | ActionKind::Stop => &[Head::Kind],
        }
    }
}

/// Sizes of the policy heads for a schema of `columns` attributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadLayout {
    pub columns: usize,
    pub term_bins: usize,
}

impl HeadLayout {
    pub const DEFAULT_TERM_BINS: usize = 20;

    pub fn new(columns: usize, term_bins: usize) -> Result<Self> {
        if columns == 0 || term_bins == 0 {
            return Err(Error::InvalidConfig(
                "head layout needs at least one column and one term bin".into(),
            ));
        }
        Ok(Self { columns, term_bins })
    }

    pub fn for_dataset(ds: &Dataset, term_bins: usize) -> Result<Self> {
        Self::new(ds.width(), term_bins)
    }

    pub fn size(&self, head: Head) -> usize {
        match head {
            Head::Kind => ActionKind::ALL.len(),
            Head::Column | Head::AggColumn => self.columns,
            Head::AggFunc => AggFunc::ALL.len(),
            Head::FilterOp => FilterOp::ALL.len(),
            Head::TermBin => self.term_bins,
        }
    }

    pub fn sizes(&self) -> [usize; 6] {
        Head::ALL.map(|h| self.size(h))
    }

    /// Length of an encoded action.
    pub fn action_vec_len(&self) -> usize {
        self.sizes().iter().sum()
    }

    pub fn offset(&self, head: Head) -> usize {
        Head::ALL
            .iter()
            .take_while(|&&h| h != head)
            .map(|&h| self.size(h))
            .sum()
    }
}

/// One selected index per head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct HeadIndices(pub [usize; 6]);

impl HeadIndices {
    pub fn get(&self, head: Head) -> usize {
        self.0[head as usize]
    }

    pub fn set(&mut self, head: Head, index: usize) {
        self.0[head as usize] = index;
    }

    pub fn kind(&self) -> ActionKind {
        ActionKind::ALL[self.get(Head::Kind).min(3)]
    }

    /// Copy with irrelevant heads zeroed.
    pub fn masked(&self) -> Self {
        let mut out = Self::default();
        for &h in Head::relevant(self.kind()) {
            out.set(h, self.get(h));
        }
        out
    }
}

/// Ranked filter-term candidates for `(column, op)` on display `d`.
///
/// For substring operators on text columns the candidates are closed
/// frequent substrings (prefixes for STARTS_WITH, suffixes for ENDS_WITH,
/// any substring for CONTAINS) of `SUBSTRING_MIN..=SUBSTRING_MAX` chars that
/// occur in at least two rows. Otherwise, or when no substring qualifies,
/// they are the distinct non-null values, most frequent first. An empty
/// column falls back to the ranking over the whole dataset.
pub fn term_candidates(d: &Display, ds: &Dataset, col: usize, op: FilterOp) -> Vec<String> {
    let column = ds.column(col);
    let counts = d.value_counts(ds, col);
    if column.kind() == ColumnKind::Text && op != FilterOp::Eq && op != FilterOp::Neq {
        let subs = substring_candidates(column.texts(), &counts, op);
        if !subs.is_empty() {
            return subs;
        }
    }
    let ranked = ranked_values(column.texts(), &counts);
    if !ranked.is_empty() || d.filtered_count() == ds.row_count() {
        return ranked;
    }
    ranked_values(column.texts(), &Display::initial(ds).value_counts(ds, col))
}

fn ranked_values(texts: &[String], counts: &[u32]) -> Vec<String> {
    let mut order: Vec<usize> = (0..texts.len()).filter(|&i| counts[i] > 0).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    order.into_iter().map(|i| texts[i].clone()).collect()
}

fn substring_candidates(texts: &[String], counts: &[u32], op: FilterOp) -> Vec<String> {
    // substring -> number of rows containing it
    let mut freq: BTreeMap<&str, u32> = BTreeMap::new();
    let mut seen: Vec<&str> = Vec::new();
    for (text, &count) in texts.iter().zip(counts) {
        if count == 0 {
            continue;
        }
        seen.clear();
        let bounds: Vec<usize> = text
            .char_indices()
            .map(|(i, _)| i)
            .chain(core::iter::once(text.len()))
            .collect();
        let chars = bounds.len() - 1;
        for len in SUBSTRING_MIN..=SUBSTRING_MAX.min(chars) {
            let starts: &mut dyn Iterator<Item = usize> = match op {
                FilterOp::StartsWith => &mut core::iter::once(0),
                FilterOp::EndsWith => &mut core::iter::once(chars - len),
                _ => &mut (0..=chars - len),
            };
            for s in starts {
                seen.push(&text[bounds[s]..bounds[s + len]]);
            }
        }
        seen.sort_unstable();
        seen.dedup();
        for sub in &seen {
            *freq.entry(sub).or_insert(0) += count;
        }
    }

    // Drop substrings absorbed by a one-char extension with the same count.
    let mut absorbed: BTreeMap<&str, ()> = BTreeMap::new();
    for (&sub, &count) in &freq {
        let n = sub.chars().count();
        if n <= SUBSTRING_MIN {
            continue;
        }
        let first = sub.char_indices().nth(1).map_or(sub.len(), |(i, _)| i);
        let last = sub.char_indices().last().map_or(0, |(i, _)| i);
        let prefix = &sub[..last];
        let suffix = &sub[first..];
        if op != FilterOp::EndsWith && freq.get(prefix) == Some(&count) {
            absorbed.insert(prefix, ());
        }
        if op != FilterOp::StartsWith && freq.get(suffix) == Some(&count) {
            absorbed.insert(suffix, ());
        }
    }
    let mut out: Vec<(&str, u32)> = freq
        .into_iter()
        .filter(|(s, c)| *c >= 2 && !absorbed.contains_key(s))
        .collect();
    out.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then(b.0.chars().count().cmp(&a.0.chars().count()))
            .then(a.0.cmp(b.0))
    });
    out.into_iter().map(|(s, _)| s.to_string()).collect()
}

/// Turn one index per head into a concrete action. Total: out-of-range
/// indices are clamped, the term bin is clamped to the last candidate, and a
/// numeric aggregate over a non-numeric column degrades to COUNT.
pub fn action_from_heads(
    heads: &HeadIndices,
    d: &Display,
    ds: &Dataset,
    layout: &HeadLayout,
) -> ActionSpec {
    let clamp = |h: Head| heads.get(h).min(layout.size(h) - 1);
    let col = clamp(Head::Column).min(ds.width() - 1);
    match heads.kind() {
        ActionKind::Back => ActionSpec::Back,
        ActionKind::Stop => ActionSpec::Stop,
        ActionKind::Group => {
            let agg_col = clamp(Head::AggColumn).min(ds.width() - 1);
            let mut func = AggFunc::ALL[clamp(Head::AggFunc)];
            if func.needs_numeric() && ds.column(agg_col).kind() != ColumnKind::Numeric {
                func = AggFunc::Count;
            }
            ActionSpec::Group(Grouping::new(
                ds.column(col).name(),
                ds.column(agg_col).name(),
                func,
            ))
        }
        ActionKind::Filter => {
            let op = FilterOp::ALL[clamp(Head::FilterOp)];
            let candidates = term_candidates(d, ds, col, op);
            let term = candidates
                .get(clamp(Head::TermBin).min(candidates.len().saturating_sub(1)))
                .cloned()
                .unwrap_or_default();
            ActionSpec::Filter(FilterPredicate::new(ds.column(col).name(), op, term))
        }
    }
}

/// Head indices that reproduce `action` on display `d`, as far as the
/// layout allows. A term outside the top `term_bins` candidates maps to the
/// last bin. Irrelevant heads are zero.
pub fn heads_for_action(
    action: &ActionSpec,
    d: &Display,
    ds: &Dataset,
    layout: &HeadLayout,
) -> Result<HeadIndices> {
    let mut heads = HeadIndices::default();
    heads.set(Head::Kind, action.kind().index());
    match action {
        ActionSpec::Back | ActionSpec::Stop => {}
        ActionSpec::Group(g) => {
            heads.set(Head::Column, ds.column_index(&g.grp_col)?);
            heads.set(Head::AggColumn, ds.column_index(&g.agg_col)?);
            heads.set(Head::AggFunc, g.agg_func.index());
        }
        ActionSpec::Filter(p) => {
            let col = ds.column_index(&p.column)?;
            let term = p.normalized(ds)?.term;
            let candidates = term_candidates(d, ds, col, p.op);
            let bin = candidates
                .iter()
                .position(|c| *c == term)
                .unwrap_or(usize::MAX)
                .min(layout.term_bins - 1);
            heads.set(Head::Column, col);
            heads.set(Head::FilterOp, p.op.index());
            heads.set(Head::TermBin, bin);
        }
    }
    if ds.width() > layout.columns {
        return Err(Error::SchemaMismatch(alloc::format!(
            "dataset has {} columns, layout expects {}",
            ds.width(),
            layout.columns
        )));
    }
    Ok(heads)
}

/// Concatenated one-hot blocks for the relevant heads; irrelevant blocks
/// stay zero.
pub fn encode_heads(heads: &HeadIndices, layout: &HeadLayout) -> Vec<f64> {
    let mut out = vec![0.0; layout.action_vec_len()];
    for &h in Head::relevant(heads.kind()) {
        let idx = heads.get(h).min(layout.size(h) - 1);
        out[layout.offset(h) + idx] = 1.0;
    }
    out
}

/// Encode an action as the discriminator sees it.
pub fn encode_action(
    action: &ActionSpec,
    d: &Display,
    ds: &Dataset,
    layout: &HeadLayout,
) -> Result<Vec<f64>> {
    Ok(encode_heads(&heads_for_action(action, d, ds, layout)?, layout))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::Value;

    fn fixture() -> Dataset {
        let cs = ["x", "x", "y", "x", "z", "y", "x", "w", "y", "x"];
        let ts = ["abcq1", "abcq2", "zzabc", "mabcn", "qqqq", "abcde", "abcdf", "pqrs", "k", "zzz"];
        let rows = cs
            .iter()
            .zip(ts)
            .enumerate()
            .map(|(i, (c, t))| {
                vec![
                    Value::Text(c.to_string()),
                    Value::Number(i as f64 % 3.0),
                    Value::Text(t.to_string()),
                ]
            })
            .collect();
        Dataset::from_rows(
            "h",
            vec![
                ("c".into(), ColumnKind::Categorical),
                ("n".into(), ColumnKind::Numeric),
                ("t".into(), ColumnKind::Text),
            ],
            rows,
        )
        .unwrap()
    }

    #[test]
    fn stop_ignores_other_heads() {
        let ds = fixture();
        let layout = HeadLayout::for_dataset(&ds, 4).unwrap();
        let heads = HeadIndices([3, 2, 1, 4, 4, 3]);
        assert_eq!(
            action_from_heads(&heads, &Display::initial(&ds), &ds, &layout),
            ActionSpec::Stop
        );
    }

    #[test]
    fn bin_zero_is_the_mode() {
        let ds = fixture();
        let layout = HeadLayout::for_dataset(&ds, 4).unwrap();
        let heads = HeadIndices([1, 0, 0, 0, 0, 0]);
        assert_eq!(
            action_from_heads(&heads, &Display::initial(&ds), &ds, &layout),
            ActionSpec::Filter(FilterPredicate::new("c", FilterOp::Eq, "x"))
        );
    }

    #[test]
    fn last_bin_clamps_to_least_frequent() {
        let ds = fixture();
        let layout = HeadLayout::for_dataset(&ds, 20).unwrap();
        // frequency-rank oracle: x:5, y:3, z:1 (first seen before w), w:1
        let heads = HeadIndices([1, 0, 0, 0, 0, 19]);
        assert_eq!(
            action_from_heads(&heads, &Display::initial(&ds), &ds, &layout),
            ActionSpec::Filter(FilterPredicate::new("c", FilterOp::Eq, "w"))
        );
    }

    #[test]
    fn substring_candidates_prefer_closed_frequent_substrings() {
        let ds = fixture();
        let d = Display::initial(&ds);
        let contains = term_candidates(&d, &ds, 2, FilterOp::Contains);
        assert_eq!(contains[0], "abc");
        let starts = term_candidates(&d, &ds, 2, FilterOp::StartsWith);
        // "abcq" (2 rows) and "abcd" (2 rows) are closed, "abc" appears in 4
        assert_eq!(starts, vec!["abc", "abcd", "abcq"]);
        let ends = term_candidates(&d, &ds, 2, FilterOp::EndsWith);
        // no suffix repeats, so the ranking falls back to whole values
        assert_eq!(ends[0], "abcq1");
        assert_eq!(ends.len(), 10);
    }

    #[test]
    fn empty_display_falls_back_to_base_ranking() {
        let ds = fixture();
        let empty = Display::initial(&ds)
            .apply_filter(&ds, &FilterPredicate::new("c", FilterOp::Eq, "nothing"))
            .unwrap();
        assert_eq!(term_candidates(&empty, &ds, 0, FilterOp::Eq)[0], "x");
    }

    #[test]
    fn group_with_non_numeric_sum_degrades_to_count() {
        let ds = fixture();
        let layout = HeadLayout::for_dataset(&ds, 4).unwrap();
        let heads = HeadIndices([0, 0, 2, AggFunc::Sum.index(), 0, 0]);
        assert_eq!(
            action_from_heads(&heads, &Display::initial(&ds), &ds, &layout),
            ActionSpec::Group(Grouping::new("c", "t", AggFunc::Count))
        );
    }

    #[test]
    fn encodings_set_only_relevant_blocks() {
        let ds = fixture();
        let layout = HeadLayout::for_dataset(&ds, 4).unwrap();
        let d = Display::initial(&ds);
        let back = encode_action(&ActionSpec::Back, &d, &ds, &layout).unwrap();
        assert_eq!(back.len(), 4 + 3 + 3 + 5 + 5 + 4);
        assert_eq!(back.iter().sum::<f64>(), 1.0);
        assert_eq!(back[ActionKind::Back.index()], 1.0);

        let group = ActionSpec::Group(Grouping::new("c", "n", AggFunc::Count));
        let v = encode_action(&group, &d, &ds, &layout).unwrap();
        assert_eq!(v.iter().sum::<f64>(), 4.0);
        assert_eq!(v[0], 1.0); // kind GROUP
        assert_eq!(v[4], 1.0); // column c
        assert_eq!(v[4 + 3 + 1], 1.0); // agg column n
        assert_eq!(v[10 + AggFunc::Count.index()], 1.0);
        assert!(v[15..].iter().all(|&x| x == 0.0));
    }
}
