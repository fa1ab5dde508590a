//! Dataset, trajectory and JSON file formats.
//!
//! A dataset is a delimited text file with a header row. Its optional
//! schema sidecar sits next to it as `<stem>.schema.json` and maps column
//! names to `categorical`, `numeric` or `text`; columns it omits are
//! inferred.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use autoeda_core::env::{Trajectory, TrajectoryStep};
use autoeda_core::tabular::{ColumnKind, Dataset, KindInference};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub fn sidecar_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.schema.json"))
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

pub fn read_dataset(path: &Path, delimiter: u8) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        rows.push(record.iter().map(str::to_owned).collect());
    }
    let sidecar = sidecar_path(path);
    let overrides: BTreeMap<String, ColumnKind> = if sidecar.exists() {
        read_json(&sidecar)?
    } else {
        BTreeMap::new()
    };
    Ok(Dataset::from_text(
        dataset_name(path),
        header,
        rows,
        &overrides,
        &KindInference::default(),
    )?)
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::data(path, format!("{other:?}")),
    }
}

/// Write `ds` as comma-separated text plus its schema sidecar.
pub fn write_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let names: Vec<&str> = ds.columns().iter().map(|c| c.name()).collect();
    w.write_record(&names).map_err(|e| csv_error(path, e))?;
    for r in 0..ds.row_count() {
        let cells: Vec<String> = ds.row(r).iter().map(|v| v.canonical_text().unwrap_or_default()).collect();
        w.write_record(&cells).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    let schema: BTreeMap<String, ColumnKind> = ds.schema().into_iter().collect();
    write_json(&sidecar_path(path), &schema)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TrajectoryFile {
    Many(Vec<Trajectory>),
    One(Trajectory),
    Steps(Vec<TrajectoryStep>),
}

/// Read a list of sessions, a single session, or a bare list of steps.
pub fn read_trajectories(path: &Path) -> Result<Vec<Trajectory>> {
    Ok(match read_json::<TrajectoryFile>(path)? {
        TrajectoryFile::Many(v) => v,
        TrajectoryFile::One(t) => vec![t],
        TrajectoryFile::Steps(steps) => vec![Trajectory {
            dataset: String::new(),
            steps,
        }],
    })
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::data(path, e))
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json(value))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e)),
        _ => Ok(()),
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use autoeda_core::tabular::Value;

    #[test]
    fn dataset_round_trip_keeps_kinds_and_cells() {
        let dir = tempfile::tempdir().unwrap();
        let ds = Dataset::from_rows(
            "t",
            vec![("n".into(), ColumnKind::Numeric), ("c".into(), ColumnKind::Categorical), ("s".into(), ColumnKind::Text)],
            vec![
                vec![Value::Text("1".into()), Value::Text("7".into()), Value::Text("a,b".into())],
                vec![Value::Null, Value::Text("x".into()), Value::Text("q\"r".into())],
            ],
        )
        .unwrap();
        let path = dir.path().join("t.csv");
        write_dataset(&ds, &path).unwrap();
        let back = read_dataset(&path, b',').unwrap();
        assert_eq!(back.schema(), ds.schema());
        for r in 0..2 {
            assert_eq!(back.row(r), ds.row(r));
        }
    }

    #[test]
    fn missing_sidecar_falls_back_to_inference() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.tsv");
        fs::write(&path, "a\tb\n1\tu\n2\tv\n").unwrap();
        let ds = read_dataset(&path, b'\t').unwrap();
        assert_eq!(ds.column(0).kind(), ColumnKind::Numeric);
        assert_eq!(ds.column(1).kind(), ColumnKind::Categorical);
        assert_eq!(ds.name(), "x");
    }

    #[test]
    fn trajectory_file_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        fs::write(&path, r#"[{"step":0,"action":{"kind":"BACK"},"fingerprint":"f"}]"#).unwrap();
        let t = read_trajectories(&path).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].steps.len(), 1);
        fs::write(&path, "{not json").unwrap();
        assert_eq!(read_trajectories(&path).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn hashes_are_hex_sha256() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h");
        fs::write(&path, "abc").unwrap();
        assert_eq!(
            sha256_file(&path).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
