//! LibSVM/svmlight text format and dataset partitioning.
//!
//! ```text
//! +1 1:0.5 3:-2
//! -1 2:1      # trailing comments are ignored
//! ```
//!
//! Indices are 1-based in the file and 0-based in memory. Labels must all come
//! from `{0, 1}` or all from `{−1, +1}`.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{LabelSet, Samples};

#[derive(Clone, Debug, PartialEq)]
pub struct LibsvmDataset {
    /// Sparse rows sorted by feature index.
    pub rows: Vec<Vec<(usize, f64)>>,
    pub labels: Vec<f64>,
    pub label_set: LabelSet,
    /// One past the largest feature index; the bias slot is added later.
    pub dim: usize,
}

impl LibsvmDataset {
    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Canonical text form: sorted indices, shortest round-trip floats.
    pub fn to_libsvm_string(&self) -> String {
        let mut out = String::new();
        for (row, label) in self.rows.iter().zip(&self.labels) {
            write!(out, "{label}").unwrap();
            for (idx, val) in row {
                write!(out, " {}:{val}", idx + 1).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Keep the first `max_rows` rows. The dimension is left unchanged.
    pub fn truncated(mut self, max_rows: usize) -> Self {
        self.rows.truncate(max_rows);
        self.labels.truncate(max_rows);
        self
    }

    /// Dense features and raw labels of the selected rows.
    pub fn samples(&self, rows: &[usize]) -> Samples {
        let mut features = DMatrix::zeros(rows.len(), self.dim);
        for (r, &src) in rows.iter().enumerate() {
            for &(idx, val) in &self.rows[src] {
                features[(r, idx)] = val;
            }
        }
        Samples {
            features,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
        }
    }
}

pub fn parse_libsvm(path: impl AsRef<Path>) -> Result<LibsvmDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_libsvm_str(&text, &path.display().to_string())
}

pub fn parse_libsvm_str(text: &str, origin: &str) -> Result<LibsvmDataset> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_string(),
        line,
        msg,
    };
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut dim = 0;
    // First line that fixed each convention, for mixed-label errors.
    let mut zero_line = None;
    let mut minus_line = None;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_ascii_whitespace();
        let label_tok = toks.next().unwrap();
        let label: f64 = label_tok
            .parse()
            .map_err(|_| err(lineno, format!("malformed label {label_tok:?}")))?;
        if label == 0.0 {
            zero_line.get_or_insert(lineno);
        } else if label == -1.0 {
            minus_line.get_or_insert(lineno);
        } else if label != 1.0 {
            return Err(err(lineno, format!("label {label_tok:?} is not in {{0, 1}} or {{-1, +1}}")));
        }
        if let (Some(z), Some(m)) = (zero_line, minus_line) {
            return Err(err(
                lineno,
                format!("mixed label conventions: 0 on line {z}, -1 on line {m}"),
            ));
        }
        let mut row: Vec<(usize, f64)> = Vec::new();
        for tok in toks {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| err(lineno, format!("malformed token {tok:?}")))?;
            let index: usize = i
                .parse()
                .map_err(|_| err(lineno, format!("malformed token {tok:?}")))?;
            let value: f64 = v
                .parse()
                .map_err(|_| err(lineno, format!("malformed token {tok:?}")))?;
            if index == 0 {
                return Err(err(lineno, format!("feature indices are 1-based, got {tok:?}")));
            }
            if !value.is_finite() {
                return Err(err(lineno, format!("non-finite value in {tok:?}")));
            }
            row.push((index - 1, value));
        }
        row.sort_by_key(|&(i, _)| i);
        if let Some(w) = row.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(err(lineno, format!("duplicate feature index {}", w[0].0 + 1)));
        }
        if let Some(&(last, _)) = row.last() {
            dim = dim.max(last + 1);
        }
        rows.push(row);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(err(0, "no samples".into()));
    }
    let label_set = if zero_line.is_some() {
        LabelSet::ZeroOne
    } else {
        LabelSet::PlusMinusOne
    };
    Ok(LibsvmDataset {
        rows,
        labels,
        label_set,
        dim,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionMode {
    /// Split in file order.
    #[default]
    Contiguous,
    /// Seeded permutation, then a contiguous split.
    Shuffled(u64),
}

/// Row indices held by each of `n` agents; sizes differ by at most one and
/// the first `m mod n` agents get the extra row.
pub fn partition_dataset(m: usize, n: usize, mode: PartitionMode) -> Result<Vec<Vec<usize>>> {
    if n == 0 || n > m {
        return Err(Error::InvalidArgument(format!(
            "cannot split {m} samples across {n} agents"
        )));
    }
    let mut order: Vec<usize> = (0..m).collect();
    if let PartitionMode::Shuffled(seed) = mode {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let (base, extra) = (m / n, m % n);
    let mut shards = Vec::with_capacity(n);
    let mut start = 0;
    for i in 0..n {
        let len = base + usize::from(i < extra);
        shards.push(order[start..start + len].to_vec());
        start += len;
    }
    Ok(shards)
}
