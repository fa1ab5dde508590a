use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::display::canonical_number;
use crate::{Error, Result};

/// Code stored for a null cell.
pub const NULL_CODE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Categorical,
    Numeric,
    Text,
}

impl ColumnKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnKind::Categorical => "categorical",
            ColumnKind::Numeric => "numeric",
            ColumnKind::Text => "text",
        }
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A single cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Number(f64),
    Text(String),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(x) => Some(*x),
            _ => None,
        }
    }

    /// Text form used for string comparisons; numbers use their canonical
    /// shortest round-trip decimal.
    pub fn canonical_text(&self) -> Option<String> {
        match self {
            Value::Null => None,
            Value::Number(x) => Some(canonical_number(*x)),
            Value::Text(s) => Some(s.clone()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => Ok(()),
            Value::Number(x) => f.write_str(&canonical_number(*x)),
            Value::Text(s) => f.write_str(s),
        }
    }
}

/// Thresholds for column-kind inference from raw text.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KindInference {
    pub min_categorical_distinct: usize,
    pub categorical_fraction: f64,
}

impl Default for KindInference {
    fn default() -> Self {
        Self {
            min_categorical_distinct: 20,
            categorical_fraction: 0.05,
        }
    }
}

impl KindInference {
    /// Infer the kind of a column from its raw cells (empty string = null).
    ///
    /// Columns whose non-null cells all parse as finite numbers are numeric.
    /// Columns mixing numeric and non-numeric cells are text. Otherwise a
    /// column is categorical when it has at most
    /// `max(min_categorical_distinct, categorical_fraction * rows)` distinct
    /// values, and text beyond that.
    pub fn infer<'a>(&self, cells: impl IntoIterator<Item = &'a str>) -> ColumnKind {
        let mut rows = 0usize;
        let mut numeric = 0usize;
        let mut non_null = 0usize;
        let mut distinct: BTreeMap<&str, ()> = BTreeMap::new();
        for cell in cells {
            rows += 1;
            if cell.is_empty() {
                continue;
            }
            non_null += 1;
            if parse_number(cell).is_some() {
                numeric += 1;
            }
            distinct.insert(cell, ());
        }
        if numeric == non_null {
            return ColumnKind::Numeric;
        }
        if numeric > 0 {
            return ColumnKind::Text;
        }
        let limit = self
            .min_categorical_distinct
            .max((self.categorical_fraction * rows as f64) as usize);
        if distinct.len() <= limit {
            ColumnKind::Categorical
        } else {
            ColumnKind::Text
        }
    }
}

pub(crate) fn parse_number(s: &str) -> Option<f64> {
    let x: f64 = s.trim().parse().ok()?;
    x.is_finite().then_some(x)
}

/// One dictionary-encoded column.
#[derive(Debug, Clone)]
pub struct Column {
    name: String,
    kind: ColumnKind,
    codes: Vec<u32>,
    dictionary: Vec<Value>,
    texts: Vec<String>,
    null_count: usize,
}

impl Column {
    fn build(name: String, kind: ColumnKind, cells: Vec<Value>) -> Self {
        let mut lookup: BTreeMap<String, u32> = BTreeMap::new();
        let mut dictionary = Vec::new();
        let mut texts = Vec::new();
        let mut codes = Vec::with_capacity(cells.len());
        let mut null_count = 0;
        for cell in cells {
            let Some(text) = cell.canonical_text() else {
                codes.push(NULL_CODE);
                null_count += 1;
                continue;
            };
            let next = dictionary.len() as u32;
            let code = *lookup.entry(text.clone()).or_insert_with(|| {
                dictionary.push(cell);
                texts.push(text);
                next
            });
            codes.push(code);
        }
        Self {
            name,
            kind,
            codes,
            dictionary,
            texts,
            null_count,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ColumnKind {
        self.kind
    }

    /// Per-row dictionary codes, [`NULL_CODE`] for nulls.
    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    /// Distinct non-null values in order of first appearance.
    pub fn dictionary(&self) -> &[Value] {
        &self.dictionary
    }

    /// Canonical text of each dictionary entry.
    pub fn texts(&self) -> &[String] {
        &self.texts
    }

    pub fn distinct_count(&self) -> usize {
        self.dictionary.len()
    }

    pub fn null_count(&self) -> usize {
        self.null_count
    }

    pub fn value(&self, code: u32) -> &Value {
        if code == NULL_CODE {
            &Value::Null
        } else {
            &self.dictionary[code as usize]
        }
    }

    pub fn text(&self, code: u32) -> Option<&str> {
        (code != NULL_CODE).then(|| self.texts[code as usize].as_str())
    }

    pub fn code_of_text(&self, text: &str) -> Option<u32> {
        self.texts.iter().position(|t| t == text).map(|i| i as u32)
    }
}

/// An immutable table.
#[derive(Debug, Clone)]
pub struct Dataset {
    name: String,
    columns: Vec<Column>,
    row_count: usize,
}

impl Dataset {
    /// Build a dataset from typed rows.
    ///
    /// Numeric columns accept numbers, nulls, and text that parses as a
    /// finite number. Categorical and text columns store numbers as their
    /// canonical text.
    pub fn from_rows(
        name: impl Into<String>,
        columns: Vec<(String, ColumnKind)>,
        rows: Vec<Vec<Value>>,
    ) -> Result<Self> {
        let mut seen = BTreeMap::new();
        for (col, _) in &columns {
            if seen.insert(col.as_str(), ()).is_some() {
                return Err(Error::DuplicateColumn(col.clone()));
            }
        }
        let width = columns.len();
        let row_count = rows.len();
        let mut cells: Vec<Vec<Value>> = (0..width).map(|_| Vec::with_capacity(row_count)).collect();
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != width {
                return Err(Error::RaggedRow {
                    row: r,
                    found: row.len(),
                    expected: width,
                });
            }
            for (c, cell) in row.into_iter().enumerate() {
                let cell = coerce(cell, columns[c].1).ok_or_else(|| {
                    Error::InvalidInput(alloc::format!(
                        "row {r}: column `{}` expects a number",
                        columns[c].0
                    ))
                })?;
                cells[c].push(cell);
            }
        }
        let columns = columns
            .into_iter()
            .zip(cells)
            .map(|((name, kind), cells)| Column::build(name, kind, cells))
            .collect();
        Ok(Self {
            name: name.into(),
            columns,
            row_count,
        })
    }

    /// Build a dataset from raw text cells, inferring kinds for columns
    /// without an override. Empty cells are null.
    pub fn from_text(
        name: impl Into<String>,
        header: Vec<String>,
        rows: Vec<Vec<String>>,
        overrides: &BTreeMap<String, ColumnKind>,
        inference: &KindInference,
    ) -> Result<Self> {
        for (r, row) in rows.iter().enumerate() {
            if row.len() != header.len() {
                return Err(Error::RaggedRow {
                    row: r,
                    found: row.len(),
                    expected: header.len(),
                });
            }
        }
        for col in overrides.keys() {
            if !header.contains(col) {
                return Err(Error::UnknownColumn(col.clone()));
            }
        }
        let columns: Vec<(String, ColumnKind)> = header
            .iter()
            .enumerate()
            .map(|(c, col)| {
                let kind = overrides
                    .get(col)
                    .copied()
                    .unwrap_or_else(|| inference.infer(rows.iter().map(|r| r[c].as_str())));
                (col.clone(), kind)
            })
            .collect();
        let typed = rows
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|s| if s.is_empty() { Value::Null } else { Value::Text(s) })
                    .collect()
            })
            .collect();
        Self::from_rows(name, columns, typed)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, index: usize) -> &Column {
        &self.columns[index]
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    /// Column names and kinds, in order.
    pub fn schema(&self) -> Vec<(String, ColumnKind)> {
        self.columns
            .iter()
            .map(|c| (c.name.clone(), c.kind))
            .collect()
    }

    pub fn cell(&self, row: usize, col: usize) -> &Value {
        let column = &self.columns[col];
        column.value(column.codes[row])
    }

    /// Row `row` as owned values.
    pub fn row(&self, row: usize) -> Vec<Value> {
        (0..self.width()).map(|c| self.cell(row, c).clone()).collect()
    }
}

fn coerce(cell: Value, kind: ColumnKind) -> Option<Value> {
    Some(match (cell, kind) {
        (Value::Null, _) => Value::Null,
        (Value::Number(x), ColumnKind::Numeric) => {
            if !x.is_finite() {
                return None;
            }
            Value::Number(if x == 0.0 { 0.0 } else { x })
        }
        (Value::Text(s), ColumnKind::Numeric) => {
            let x = parse_number(&s)?;
            Value::Number(if x == 0.0 { 0.0 } else { x })
        }
        (Value::Number(x), _) => Value::Text(canonical_number(x)),
        (Value::Text(s), _) => Value::Text(s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn text_rows(rows: &[&[&str]]) -> Vec<Vec<String>> {
        rows.iter()
            .map(|r| r.iter().map(|s| s.to_string()).collect())
            .collect()
    }

    #[test]
    fn infers_kinds() {
        let inf = KindInference::default();
        assert_eq!(inf.infer(["1", "2.5", "", "-3"]), ColumnKind::Numeric);
        assert_eq!(inf.infer(["a", "b", "a"]), ColumnKind::Categorical);
        // mixed numeric and non-numeric cells
        assert_eq!(inf.infer(["1", "2", "x"]), ColumnKind::Text);
        let many: Vec<String> = (0..100).map(|i| alloc::format!("v{i}")).collect();
        assert_eq!(inf.infer(many.iter().map(|s| s.as_str())), ColumnKind::Text);
        // header-only column: vacuously numeric
        assert_eq!(inf.infer(core::iter::empty()), ColumnKind::Numeric);
    }

    #[test]
    fn header_only_file_yields_empty_dataset() {
        let ds = Dataset::from_text(
            "empty",
            vec!["a".into(), "b".into()],
            vec![],
            &BTreeMap::new(),
            &KindInference::default(),
        )
        .unwrap();
        assert_eq!(ds.row_count(), 0);
        assert_eq!(ds.width(), 2);
    }

    #[test]
    fn rejects_ragged_rows_and_duplicate_names() {
        let err = Dataset::from_text(
            "x",
            vec!["a".into(), "b".into()],
            text_rows(&[&["1", "2"], &["3"]]),
            &BTreeMap::new(),
            &KindInference::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::RaggedRow { row: 1, .. }));
        let err = Dataset::from_text(
            "x",
            vec!["a".into(), "a".into()],
            vec![],
            &BTreeMap::new(),
            &KindInference::default(),
        )
        .unwrap_err();
        assert_eq!(err, Error::DuplicateColumn("a".into()));
    }

    #[test]
    fn numeric_cells_share_canonical_codes() {
        let ds = Dataset::from_text(
            "x",
            vec!["n".into()],
            text_rows(&[&["5"], &["5.0"], &[""], &["-0"], &["0"]]),
            &BTreeMap::new(),
            &KindInference::default(),
        )
        .unwrap();
        let col = ds.column(0);
        assert_eq!(col.kind(), ColumnKind::Numeric);
        assert_eq!(col.distinct_count(), 2);
        assert_eq!(col.null_count(), 1);
        assert_eq!(col.codes()[0], col.codes()[1]);
        assert_eq!(col.codes()[3], col.codes()[4]);
    }

    #[test]
    fn override_forces_kind() {
        let mut overrides = BTreeMap::new();
        overrides.insert("n".to_string(), ColumnKind::Categorical);
        let ds = Dataset::from_text(
            "x",
            vec!["n".into()],
            text_rows(&[&["1"], &["2"]]),
            &overrides,
            &KindInference::default(),
        )
        .unwrap();
        assert_eq!(ds.column(0).kind(), ColumnKind::Categorical);
    }
}
