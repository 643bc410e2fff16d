//! Plain-text dataset files.
//!
//! Matrix file: a header line `n m`, then `n` lines of `m` space-separated
//! decimal reals; row `i` holds feature `i` across all points. Labels
//! file: `m` lines, each `+1`, `1` or `-1`. Split file: `m` lines, each
//! `train` or `test`. Floats are written with Rust's shortest round-trip
//! formatting, so a save/load cycle reproduces every entry bit-exactly.

use crate::error::{Error, Result};
use crate::store::dataset::LabeledDataset;
use crate::store::matrix::SampledMatrix;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// File locations for one dataset.
#[derive(Debug, Clone)]
pub struct DatasetPaths {
    pub matrix: PathBuf,
    pub labels: PathBuf,
    pub split: PathBuf,
}

impl DatasetPaths {
    /// The standard layout inside a dataset directory.
    pub fn in_dir<P: AsRef<Path>>(dir: P) -> Self {
        let dir = dir.as_ref();
        DatasetPaths {
            matrix: dir.join("matrix.txt"),
            labels: dir.join("labels.txt"),
            split: dir.join("split.txt"),
        }
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Reads a matrix file.
pub fn load_matrix(path: &Path) -> Result<SampledMatrix> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "missing header line"))?;
    let mut it = header.split_whitespace();
    let n: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| parse_err(path, 1, "malformed header: expected `n m`"))?;
    let m: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| parse_err(path, 1, "malformed header: expected `n m`"))?;
    if it.next().is_some() {
        return Err(parse_err(path, 1, "malformed header: trailing tokens"));
    }
    if n == 0 || m == 0 {
        return Err(parse_err(path, 1, "dimensions must be positive"));
    }

    let mut entries = Vec::with_capacity(n * m);
    let mut rows_read = 0usize;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if rows_read == n {
            return Err(parse_err(path, line_no, format!("expected {n} rows")));
        }
        let mut count = 0usize;
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(path, line_no, format!("invalid number `{tok}`")))?;
            if !v.is_finite() {
                return Err(parse_err(path, line_no, format!("non-finite value `{tok}`")));
            }
            entries.push(v);
            count += 1;
        }
        if count != m {
            return Err(parse_err(
                path,
                line_no,
                format!("expected {m} values, got {count}"),
            ));
        }
        rows_read += 1;
    }
    if rows_read != n {
        return Err(parse_err(
            path,
            rows_read + 2,
            format!("expected {n} rows, got {rows_read}"),
        ));
    }
    SampledMatrix::from_dense(n, m, entries)
}

/// Writes a matrix file.
pub fn save_matrix(matrix: &SampledMatrix, path: &Path) -> Result<()> {
    let (n, m) = matrix.shape();
    let mut out = String::new();
    let _ = writeln!(out, "{n} {m}");
    for i in 0..n {
        for j in 0..m {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{}", matrix.get(i, j));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a labels file; `expected` is the point count from the matrix.
pub fn load_labels(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    let mut y = Vec::with_capacity(expected);
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let tok = line.trim();
        if tok.is_empty() {
            continue;
        }
        if y.len() == expected {
            return Err(parse_err(path, line_no, format!("expected {expected} labels")));
        }
        match tok {
            "+1" | "1" => y.push(1.0),
            "-1" => y.push(-1.0),
            other => {
                return Err(parse_err(path, line_no, format!("invalid label `{other}`")));
            }
        }
    }
    if y.len() != expected {
        return Err(parse_err(
            path,
            y.len() + 1,
            format!("expected {expected} labels, got {}", y.len()),
        ));
    }
    Ok(y)
}

/// Writes a labels file.
pub fn save_labels(y: &[f64], path: &Path) -> Result<()> {
    let mut out = String::new();
    for &v in y {
        out.push_str(if v > 0.0 { "+1\n" } else { "-1\n" });
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a split file into (train, test) index lists in file order.
pub fn load_split(path: &Path, expected: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    let text = fs::read_to_string(path)?;
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut seen = 0usize;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let tok = line.trim();
        if tok.is_empty() {
            continue;
        }
        if seen == expected {
            return Err(parse_err(path, line_no, format!("expected {expected} entries")));
        }
        match tok {
            "train" => train.push(seen),
            "test" => test.push(seen),
            other => {
                return Err(parse_err(
                    path,
                    line_no,
                    format!("invalid split entry `{other}` (expected `train` or `test`)"),
                ));
            }
        }
        seen += 1;
    }
    if seen != expected {
        return Err(parse_err(
            path,
            seen + 1,
            format!("expected {expected} entries, got {seen}"),
        ));
    }
    Ok((train, test))
}

/// Writes a split file.
pub fn save_split(train_idx: &[usize], test_idx: &[usize], m: usize, path: &Path) -> Result<()> {
    let mut marks = vec![None; m];
    for &j in train_idx {
        marks[j] = Some(true);
    }
    for &j in test_idx {
        marks[j] = Some(false);
    }
    let mut out = String::new();
    for (j, mark) in marks.iter().enumerate() {
        match mark {
            Some(true) => out.push_str("train\n"),
            Some(false) => out.push_str("test\n"),
            None => {
                return Err(Error::InvalidConfig(format!(
                    "point {j} missing from the partition"
                )))
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Loads a complete dataset from its three files.
pub fn load_dataset(paths: &DatasetPaths) -> Result<LabeledDataset> {
    let x = load_matrix(&paths.matrix)?;
    let y = load_labels(&paths.labels, x.m_cols())?;
    let (train_idx, test_idx) = load_split(&paths.split, x.m_cols())?;
    LabeledDataset::new(x, y, train_idx, test_idx)
}

/// Saves a complete dataset to its three files.
pub fn save_dataset(data: &LabeledDataset, paths: &DatasetPaths) -> Result<()> {
    save_matrix(&data.x, &paths.matrix)?;
    save_labels(&data.y, &paths.labels)?;
    save_split(&data.train_idx, &data.test_idx, data.n_points(), &paths.split)
}
