use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::dataset::{parse_number, ColumnKind, Dataset, Value, NULL_CODE};
use crate::{Error, Result};

/// Shortest round-trip decimal text of a finite number, with `-0` folded
/// into `0`.
pub fn canonical_number(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FilterOp {
    Eq,
    Neq,
    Contains,
    StartsWith,
    EndsWith,
}

impl FilterOp {
    pub const ALL: [FilterOp; 5] = [
        FilterOp::Eq,
        FilterOp::Neq,
        FilterOp::Contains,
        FilterOp::StartsWith,
        FilterOp::EndsWith,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FilterOp::Eq => "EQ",
            FilterOp::Neq => "NEQ",
            FilterOp::Contains => "CONTAINS",
            FilterOp::StartsWith => "STARTS_WITH",
            FilterOp::EndsWith => "ENDS_WITH",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    fn matches_text(self, cell: &str, term: &str) -> bool {
        match self {
            FilterOp::Eq => cell == term,
            FilterOp::Neq => cell != term,
            FilterOp::Contains => cell.contains(term),
            FilterOp::StartsWith => cell.starts_with(term),
            FilterOp::EndsWith => cell.ends_with(term),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AggFunc {
    Sum,
    Count,
    Mean,
    Min,
    Max,
}

impl AggFunc {
    pub const ALL: [AggFunc; 5] = [
        AggFunc::Sum,
        AggFunc::Count,
        AggFunc::Mean,
        AggFunc::Min,
        AggFunc::Max,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AggFunc::Sum => "SUM",
            AggFunc::Count => "COUNT",
            AggFunc::Mean => "MEAN",
            AggFunc::Min => "MIN",
            AggFunc::Max => "MAX",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn needs_numeric(self) -> bool {
        self != AggFunc::Count
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FilterPredicate {
    pub column: String,
    pub op: FilterOp,
    pub term: String,
}

impl FilterPredicate {
    pub fn new(column: impl Into<String>, op: FilterOp, term: impl Into<String>) -> Self {
        Self {
            column: column.into(),
            op,
            term: term.into(),
        }
    }

    /// Trim the term and, on numeric columns, rewrite parseable terms in
    /// canonical decimal form.
    pub fn normalized(&self, ds: &Dataset) -> Result<Self> {
        let col = ds.column(ds.column_index(&self.column)?);
        let trimmed = self.term.trim();
        let term = match (col.kind(), parse_number(trimmed)) {
            (ColumnKind::Numeric, Some(x)) => canonical_number(x),
            _ => trimmed.to_string(),
        };
        Ok(Self {
            column: self.column.clone(),
            op: self.op,
            term,
        })
    }

    /// Per-code acceptance mask for this predicate; the last slot is for
    /// nulls. Assumes a normalized predicate.
    fn code_mask(&self, ds: &Dataset, col: usize) -> Vec<bool> {
        let column = ds.column(col);
        let numeric_term = (column.kind() == ColumnKind::Numeric)
            .then(|| parse_number(&self.term))
            .flatten();
        let mut mask: Vec<bool> = column
            .dictionary()
            .iter()
            .zip(column.texts())
            .map(|(value, text)| match (self.op, numeric_term, value) {
                (FilterOp::Eq, Some(t), Value::Number(x)) => *x == t,
                (FilterOp::Neq, Some(t), Value::Number(x)) => *x != t,
                _ => self.op.matches_text(text, &self.term),
            })
            .collect();
        mask.push(self.op == FilterOp::Neq);
        mask
    }
}

impl fmt::Display for FilterPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FILTER {} {} {:?}", self.column, self.op.as_str(), self.term)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Grouping {
    pub grp_col: String,
    pub agg_col: String,
    pub agg_func: AggFunc,
}

impl Grouping {
    pub fn new(grp_col: impl Into<String>, agg_col: impl Into<String>, agg_func: AggFunc) -> Self {
        Self {
            grp_col: grp_col.into(),
            agg_col: agg_col.into(),
            agg_func,
        }
    }

    pub fn validate(&self, ds: &Dataset) -> Result<()> {
        ds.column_index(&self.grp_col)?;
        let agg = ds.column(ds.column_index(&self.agg_col)?);
        if self.agg_func.needs_numeric() && agg.kind() != ColumnKind::Numeric {
            return Err(Error::NonNumericAggregate {
                func: self.agg_func.as_str(),
                column: self.agg_col.clone(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for Grouping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "GROUP {} {}({})",
            self.grp_col,
            self.agg_func.as_str(),
            self.agg_col
        )
    }
}

/// One output row of a grouped display.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    /// Dictionary code of the group key in the grouped column.
    pub key: u32,
    pub size: usize,
    pub aggregate: Option<f64>,
}

/// A view of a dataset: ordered filters, optional grouping, and the rows
/// they select.
#[derive(Debug, Clone, PartialEq)]
pub struct Display {
    dataset: String,
    filters: Vec<FilterPredicate>,
    grouping: Option<Grouping>,
    rows: Vec<u32>,
    groups: Vec<Group>,
}

impl Display {
    /// The unfiltered, ungrouped view.
    pub fn initial(ds: &Dataset) -> Self {
        Self {
            dataset: ds.name().to_string(),
            filters: Vec::new(),
            grouping: None,
            rows: (0..ds.row_count() as u32).collect(),
            groups: Vec::new(),
        }
    }

    pub fn dataset_name(&self) -> &str {
        &self.dataset
    }

    pub fn filters(&self) -> &[FilterPredicate] {
        &self.filters
    }

    pub fn grouping(&self) -> Option<&Grouping> {
        self.grouping.as_ref()
    }

    /// Indices of the dataset rows that pass every filter.
    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn is_grouped(&self) -> bool {
        self.grouping.is_some()
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.size).collect()
    }

    /// Number of rows passing the filters.
    pub fn filtered_count(&self) -> usize {
        self.rows.len()
    }

    /// Number of rows in the visible table: groups when grouped, filtered
    /// rows otherwise.
    pub fn visible_count(&self) -> usize {
        if self.is_grouped() {
            self.groups.len()
        } else {
            self.rows.len()
        }
    }

    /// Append a filter and re-apply any active grouping.
    pub fn apply_filter(&self, ds: &Dataset, predicate: &FilterPredicate) -> Result<Self> {
        let predicate = predicate.normalized(ds)?;
        let col = ds.column_index(&predicate.column)?;
        let mask = predicate.code_mask(ds, col);
        let null_slot = mask.len() - 1;
        let codes = ds.column(col).codes();
        let rows = self
            .rows
            .iter()
            .copied()
            .filter(|&r| {
                let code = codes[r as usize];
                mask[if code == NULL_CODE { null_slot } else { code as usize }]
            })
            .collect();
        let mut filters = self.filters.clone();
        filters.push(predicate);
        let mut next = Self {
            dataset: self.dataset.clone(),
            filters,
            grouping: None,
            rows,
            groups: Vec::new(),
        };
        if let Some(g) = &self.grouping {
            next = next.apply_group(ds, g)?;
        }
        Ok(next)
    }

    /// Group the filtered rows, replacing any previous grouping.
    pub fn apply_group(&self, ds: &Dataset, grouping: &Grouping) -> Result<Self> {
        grouping.validate(ds)?;
        let grp = ds.column(ds.column_index(&grouping.grp_col)?);
        let agg = ds.column(ds.column_index(&grouping.agg_col)?);

        // key code -> (size, non-null aggregate inputs)
        let mut acc: BTreeMap<u32, (usize, Vec<f64>)> = BTreeMap::new();
        for &r in &self.rows {
            let entry = acc.entry(grp.codes()[r as usize]).or_default();
            entry.0 += 1;
            if let Some(x) = agg.value(agg.codes()[r as usize]).as_number() {
                entry.1.push(x);
            }
        }
        let groups = acc
            .into_iter()
            .map(|(key, (size, xs))| Group {
                key,
                size,
                aggregate: aggregate(grouping.agg_func, size, &xs),
            })
            .collect();
        Ok(Self {
            dataset: self.dataset.clone(),
            filters: self.filters.clone(),
            grouping: Some(grouping.clone()),
            rows: self.rows.clone(),
            groups,
        })
    }

    /// The visible table: full rows when ungrouped, `[key, aggregate]` pairs
    /// when grouped.
    pub fn materialize(&self, ds: &Dataset) -> Vec<Vec<Value>> {
        match &self.grouping {
            None => self.rows.iter().map(|&r| ds.row(r as usize)).collect(),
            Some(g) => {
                let grp = ds.column(ds.column_index(&g.grp_col).expect("validated grouping"));
                self.groups
                    .iter()
                    .map(|group| {
                        vec![
                            grp.value(group.key).clone(),
                            group.aggregate.map_or(Value::Null, Value::Number),
                        ]
                    })
                    .collect()
            }
        }
    }

    /// Canonical identity of the operation stack: the set of filters (sorted,
    /// deduplicated) plus the grouping triple.
    pub fn fingerprint(&self) -> String {
        let mut filters: Vec<String> = self
            .filters
            .iter()
            .map(|p| {
                format!(
                    "{}:{}:{}",
                    escape(&p.column),
                    p.op.as_str(),
                    escape(&p.term)
                )
            })
            .collect();
        filters.sort();
        filters.dedup();
        let grouping = match &self.grouping {
            Some(g) => format!(
                "{}:{}:{}",
                escape(&g.grp_col),
                escape(&g.agg_col),
                g.agg_func.as_str()
            ),
            None => "-".to_string(),
        };
        format!("{}|{}", filters.join(";"), grouping)
    }

    /// Counts of each dictionary code of `col` over the filtered rows; the
    /// last slot counts nulls.
    pub fn value_counts(&self, ds: &Dataset, col: usize) -> Vec<u32> {
        let column = ds.column(col);
        let mut counts = vec![0u32; column.distinct_count() + 1];
        let null_slot = column.distinct_count();
        for &r in &self.rows {
            let code = column.codes()[r as usize];
            counts[if code == NULL_CODE { null_slot } else { code as usize }] += 1;
        }
        counts
    }
}

fn aggregate(func: AggFunc, size: usize, xs: &[f64]) -> Option<f64> {
    if func == AggFunc::Count {
        return Some(size as f64);
    }
    if xs.is_empty() {
        return None;
    }
    Some(match func {
        AggFunc::Sum => xs.iter().sum(),
        AggFunc::Mean => xs.iter().sum::<f64>() / xs.len() as f64,
        AggFunc::Min => xs.iter().copied().fold(f64::INFINITY, f64::min),
        AggFunc::Max => xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        AggFunc::Count => unreachable!(),
    })
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        if matches!(ch, '\\' | ':' | ';' | '|') {
            out.push('\\');
        }
        out.push(ch);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::ColumnKind::*;

    fn fixture() -> Dataset {
        let rows: [(&str, Option<f64>, &str); 10] = [
            ("a", Some(1.0), "xaby"),
            ("a", Some(2.0), "abz"),
            ("b", Some(3.0), "qq"),
            ("b", None, "zab"),
            ("c", Some(5.0), "ab"),
            ("c", Some(6.0), "a b"),
            ("a", Some(7.0), "bba"),
            ("b", Some(8.0), "abab"),
            ("c", None, ""),
            ("a", Some(10.0), "ba"),
        ];
        Dataset::from_rows(
            "fx",
            vec![("c".into(), Categorical), ("n".into(), Numeric), ("t".into(), Text)],
            rows.iter()
                .map(|(c, n, t)| {
                    vec![
                        Value::Text(c.to_string()),
                        n.map_or(Value::Null, Value::Number),
                        if t.is_empty() { Value::Null } else { Value::Text(t.to_string()) },
                    ]
                })
                .collect(),
        )
        .unwrap()
    }

    /// Brute-force scan over materialized rows.
    fn scan(ds: &Dataset, col: usize, keep: impl Fn(&Value) -> bool) -> Vec<u32> {
        (0..ds.row_count())
            .filter(|&r| keep(ds.cell(r, col)))
            .map(|r| r as u32)
            .collect()
    }

    #[test]
    fn contains_filter_matches_row_scan() {
        let ds = fixture();
        let d = Display::initial(&ds)
            .apply_filter(&ds, &FilterPredicate::new("t", FilterOp::Contains, "ab"))
            .unwrap();
        let expected = scan(&ds, 2, |v| matches!(v, Value::Text(s) if s.contains("ab")));
        assert_eq!(d.rows(), &expected[..]);
        assert_eq!(d.rows(), &[0, 1, 3, 4, 7]);
    }

    #[test]
    fn eq_filter_without_match_is_empty() {
        let ds = fixture();
        let d = Display::initial(&ds)
            .apply_filter(&ds, &FilterPredicate::new("c", FilterOp::Eq, "zzz"))
            .unwrap();
        assert_eq!(d.visible_count(), 0);
    }

    #[test]
    fn neq_without_match_keeps_rows_and_grows_stack() {
        let ds = fixture();
        let d0 = Display::initial(&ds);
        let d = d0
            .apply_filter(&ds, &FilterPredicate::new("t", FilterOp::Neq, "nothing"))
            .unwrap();
        assert_eq!(d.rows(), d0.rows());
        assert_eq!(d.filters().len(), 1);
    }

    #[test]
    fn numeric_eq_compares_parsed_values() {
        let ds = fixture();
        let d = Display::initial(&ds)
            .apply_filter(&ds, &FilterPredicate::new("n", FilterOp::Eq, " 5.00 "))
            .unwrap();
        assert_eq!(d.rows(), &[4]);
        assert_eq!(d.filters()[0].term, "5");
        // string operator on a numeric column uses canonical text
        let d = Display::initial(&ds)
            .apply_filter(&ds, &FilterPredicate::new("n", FilterOp::StartsWith, "1"))
            .unwrap();
        assert_eq!(d.rows(), &[0, 9]);
    }

    #[test]
    fn unknown_column_is_an_error() {
        let ds = fixture();
        let err = Display::initial(&ds)
            .apply_filter(&ds, &FilterPredicate::new("nope", FilterOp::Eq, "1"))
            .unwrap_err();
        assert_eq!(err, Error::UnknownColumn("nope".into()));
    }

    #[test]
    fn group_sum_matches_brute_force() {
        let ds = fixture();
        let d = Display::initial(&ds)
            .apply_group(&ds, &Grouping::new("c", "n", AggFunc::Sum))
            .unwrap();
        // a: 1+2+7+10, b: 3+8 (null ignored), c: 5+6
        let table = d.materialize(&ds);
        assert_eq!(
            table,
            vec![
                vec![Value::Text("a".into()), Value::Number(20.0)],
                vec![Value::Text("b".into()), Value::Number(11.0)],
                vec![Value::Text("c".into()), Value::Number(11.0)],
            ]
        );
        assert_eq!(d.group_sizes(), vec![4, 3, 3]);
        assert_eq!(d.group_sizes().iter().sum::<usize>(), d.filtered_count());
    }

    #[test]
    fn group_count_single_group_and_null_groups() {
        let ds = fixture();
        let d = Display::initial(&ds)
            .apply_filter(&ds, &FilterPredicate::new("c", FilterOp::Eq, "a"))
            .unwrap()
            .apply_group(&ds, &Grouping::new("c", "t", AggFunc::Count))
            .unwrap();
        assert_eq!(d.group_count(), 1);
        assert_eq!(d.group_sizes(), vec![4]);

        let d = Display::initial(&ds)
            .apply_group(&ds, &Grouping::new("t", "c", AggFunc::Count))
            .unwrap();
        // 9 distinct texts plus the null group
        assert_eq!(d.group_count(), 10);
        assert_eq!(d.groups().last().unwrap().key, NULL_CODE);
    }

    #[test]
    fn mean_of_all_null_group_is_null() {
        let ds = Dataset::from_rows(
            "m",
            vec![("g".into(), Categorical), ("n".into(), Numeric)],
            vec![
                vec![Value::Text("x".into()), Value::Null],
                vec![Value::Text("x".into()), Value::Null],
                vec![Value::Text("y".into()), Value::Number(4.0)],
            ],
        )
        .unwrap();
        let d = Display::initial(&ds)
            .apply_group(&ds, &Grouping::new("g", "n", AggFunc::Mean))
            .unwrap();
        assert_eq!(d.groups()[0].aggregate, None);
        assert_eq!(d.groups()[1].aggregate, Some(4.0));
    }

    #[test]
    fn non_numeric_aggregate_is_rejected() {
        let ds = fixture();
        let err = Display::initial(&ds)
            .apply_group(&ds, &Grouping::new("c", "t", AggFunc::Sum))
            .unwrap_err();
        assert!(matches!(err, Error::NonNumericAggregate { .. }));
    }

    #[test]
    fn filter_on_grouped_view_regroups_underlying_rows() {
        let ds = fixture();
        let d = Display::initial(&ds)
            .apply_group(&ds, &Grouping::new("c", "n", AggFunc::Count))
            .unwrap()
            .apply_filter(&ds, &FilterPredicate::new("c", FilterOp::Neq, "a"))
            .unwrap();
        assert!(d.is_grouped());
        assert_eq!(d.group_sizes(), vec![3, 3]);
    }

    #[test]
    fn fingerprints_are_canonical() {
        let ds = fixture();
        let d0 = Display::initial(&ds);
        let p = FilterPredicate::new("c", FilterOp::Eq, "a");
        let q = FilterPredicate::new("n", FilterOp::Neq, "5");
        let ab = d0.apply_filter(&ds, &p).unwrap().apply_filter(&ds, &q).unwrap();
        let ba = d0.apply_filter(&ds, &q).unwrap().apply_filter(&ds, &p).unwrap();
        assert_eq!(ab.fingerprint(), ba.fingerprint());

        let five = d0.apply_filter(&ds, &FilterPredicate::new("n", FilterOp::Eq, "5")).unwrap();
        let five_f = d0.apply_filter(&ds, &FilterPredicate::new("n", FilterOp::Eq, "5.0")).unwrap();
        assert_eq!(five.fingerprint(), five_f.fingerprint());

        let g1 = d0.apply_group(&ds, &Grouping::new("c", "n", AggFunc::Sum)).unwrap();
        let g2 = d0.apply_group(&ds, &Grouping::new("c", "n", AggFunc::Max)).unwrap();
        assert_ne!(g1.fingerprint(), g2.fingerprint());
    }

    #[test]
    fn fingerprint_escapes_delimiters() {
        let ds = Dataset::from_rows(
            "e",
            vec![("a".into(), Categorical)],
            vec![vec![Value::Text("x".into())]],
        )
        .unwrap();
        let d0 = Display::initial(&ds);
        let one = d0.apply_filter(&ds, &FilterPredicate::new("a", FilterOp::Eq, "x;a:EQ:y")).unwrap();
        let two = d0
            .apply_filter(&ds, &FilterPredicate::new("a", FilterOp::Eq, "x"))
            .unwrap()
            .apply_filter(&ds, &FilterPredicate::new("a", FilterOp::Eq, "y"))
            .unwrap();
        assert_ne!(one.fingerprint(), two.fingerprint());
    }
}
