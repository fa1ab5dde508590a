use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::tabular::{Dataset, Display};

/// Features per attribute: normalized entropy, distinct count, null count,
/// role flag.
pub const ATTRIBUTE_FEATURES: usize = 4;
/// Global features: group count, mean group size, group size variance.
pub const GLOBAL_FEATURES: usize = 3;

pub fn display_vec_len(columns: usize) -> usize {
    ATTRIBUTE_FEATURES * columns + GLOBAL_FEATURES
}

/// Three display encodings back to back.
pub fn state_vec_len(columns: usize) -> usize {
    3 * display_vec_len(columns)
}

const ROLE_GROUPED: f64 = 0.5;
const ROLE_AGGREGATED: f64 = 1.0;

/// Encode a display as a vector with every entry in `[0, 1]`.
///
/// Per attribute, over the display's filtered rows: base-2 entropy of the
/// value histogram (nulls included) divided by `log2` of the number of
/// categories in the base dataset (at least 2), distinct non-null values and
/// nulls divided by the base row count, and a role flag (0 neither, 0.5
/// grouped, 1 aggregated). Globals: group count and mean group size divided
/// by the base row count, variance of group sizes divided by its square; all
/// zero when ungrouped.
pub fn encode_display(d: &Display, base: &Dataset) -> Vec<f64> {
    let width = base.width();
    let rows = base.row_count().max(1) as f64;
    let mut out = vec![0.0; display_vec_len(width)];
    let filtered = d.filtered_count() as f64;
    let grouping = d.grouping();

    for col in 0..width {
        let column = base.column(col);
        let features = &mut out[col * ATTRIBUTE_FEATURES..(col + 1) * ATTRIBUTE_FEATURES];
        if let Some(g) = grouping {
            if g.grp_col == column.name() {
                features[3] = ROLE_GROUPED;
            } else if g.agg_col == column.name() {
                features[3] = ROLE_AGGREGATED;
            }
        }
        if filtered == 0.0 {
            continue;
        }
        let counts = d.value_counts(base, col);
        let nulls = *counts.last().unwrap_or(&0) as f64;
        let distinct = counts[..counts.len() - 1].iter().filter(|&&c| c > 0).count();
        let entropy: f64 = counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / filtered;
                -p * math::log2(p)
            })
            .sum();
        let categories = column.distinct_count() + usize::from(column.null_count() > 0);
        features[0] = (entropy / math::log2(categories.max(2) as f64)).clamp(0.0, 1.0);
        features[1] = distinct as f64 / rows;
        features[2] = nulls / rows;
    }

    if d.is_grouped() && d.group_count() > 0 {
        let sizes: Vec<f64> = d.groups().iter().map(|g| g.size as f64).collect();
        let globals = &mut out[width * ATTRIBUTE_FEATURES..];
        globals[0] = sizes.len() as f64 / rows;
        globals[1] = math::mean(&sizes) / rows;
        globals[2] = math::variance(&sizes) / (rows * rows);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{AggFunc, ColumnKind, FilterOp, FilterPredicate, Grouping, Value};
    use alloc::string::ToString;

    fn fixture() -> Dataset {
        // 10 rows: g in {x x x x y y y z z z}, n with two nulls
        let gs = ["x", "x", "x", "x", "y", "y", "y", "z", "z", "z"];
        let ns = [Some(1.0), Some(1.0), None, Some(2.0), Some(3.0), Some(3.0), None, Some(4.0), Some(5.0), Some(5.0)];
        Dataset::from_rows(
            "enc",
            vec![("g".into(), ColumnKind::Categorical), ("n".into(), ColumnKind::Numeric)],
            gs.iter()
                .zip(ns)
                .map(|(g, n)| vec![Value::Text(g.to_string()), n.map_or(Value::Null, Value::Number)])
                .collect(),
        )
        .unwrap()
    }

    /// Independent oracle: entropy from explicit probability lists.
    fn entropy_bits(ps: &[f64]) -> f64 {
        ps.iter().map(|p| -p * std::primitive::f64::log2(*p)).sum()
    }

    #[test]
    fn initial_display_matches_hand_computed_vector() {
        let ds = fixture();
        let v = encode_display(&Display::initial(&ds), &ds);
        assert_eq!(v.len(), 11);
        let g_entropy = entropy_bits(&[0.4, 0.3, 0.3]) / 3f64.log2();
        // n: 1,1,2,3,3,4,5,5 + 2 nulls -> categories 5 values + null
        let n_entropy = entropy_bits(&[0.2, 0.1, 0.2, 0.1, 0.2, 0.2]) / 6f64.log2();
        let expected = [
            g_entropy, 0.3, 0.0, 0.0, //
            n_entropy, 0.5, 0.2, 0.0, //
            0.0, 0.0, 0.0,
        ];
        for (a, b) in v.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{v:?}");
        }
    }

    #[test]
    fn single_group_globals() {
        let ds = fixture();
        let d = Display::initial(&ds)
            .apply_group(&ds, &Grouping::new("g", "n", AggFunc::Count))
            .unwrap()
            .apply_filter(&ds, &FilterPredicate::new("g", FilterOp::Eq, "x"))
            .unwrap();
        let v = encode_display(&d, &ds);
        assert_eq!(v[3], 0.5);
        assert_eq!(v[7], 1.0);
        // one group of 4 rows out of 10
        assert!((v[8] - 0.1).abs() < 1e-12);
        assert!((v[9] - 0.4).abs() < 1e-12);
        assert_eq!(v[10], 0.0);

        let all = Display::initial(&ds)
            .apply_group(&ds, &Grouping::new("g", "n", AggFunc::Count))
            .unwrap();
        let single = Dataset::from_rows(
            "one",
            vec![("g".into(), ColumnKind::Categorical)],
            (0..5).map(|_| vec![Value::Text("k".into())]).collect(),
        )
        .unwrap();
        let one = Display::initial(&single)
            .apply_group(&single, &Grouping::new("g", "g", AggFunc::Count))
            .unwrap();
        let v = encode_display(&one, &single);
        assert_eq!(&v[4..], &[1.0 / 5.0, 1.0, 0.0]);
        assert_eq!(encode_display(&all, &ds).len(), 11);
    }

    #[test]
    fn empty_display_is_zero_except_roles() {
        let ds = fixture();
        let d = Display::initial(&ds)
            .apply_group(&ds, &Grouping::new("g", "n", AggFunc::Sum))
            .unwrap()
            .apply_filter(&ds, &FilterPredicate::new("g", FilterOp::Eq, "none"))
            .unwrap();
        let v = encode_display(&d, &ds);
        let mut expected = vec![0.0; 11];
        expected[3] = 0.5;
        expected[7] = 1.0;
        assert_eq!(v, expected);
    }
}
