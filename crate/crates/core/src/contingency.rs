//! Sparse contingency (matching) tables.
//!
//! Rows are always indexed by the ground-truth label and columns by the
//! predicted label. All closed-form metrics only need the cell square-sum `S`
//! and the two marginal square-sums `A` (truth) and `B` (prediction).

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::map::{ForegroundMask, SegmentationMap};

/// Label-space size up to which counts go into a dense `rows × cols` buffer.
pub const DENSE_CELL_LIMIT: usize = 4096;

/// Pixel counts per `(truth label, predicted label)` pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContingencyTable {
    cells: Vec<(u32, u32, u64)>,
    row_marginals: Vec<(u32, u64)>,
    col_marginals: Vec<(u32, u64)>,
    total: u64,
    sum_sq_cells: u128,
    row_sq_sum: u128,
    col_sq_sum: u128,
}

impl ContingencyTable {
    /// Builds a table from explicit `(row, col, count)` triples. Duplicate keys
    /// are summed and zero counts dropped.
    pub fn from_counts<I>(counts: I) -> Self
    where
        I: IntoIterator<Item = (u32, u32, u64)>,
    {
        let mut merged: HashMap<(u32, u32), u64> = HashMap::new();
        for (row, col, count) in counts {
            if count > 0 {
                *merged.entry((row, col)).or_default() += count;
            }
        }
        let sum_sq = merged.values().map(|&c| sq(c)).sum();
        Self::from_cells(merged.into_iter().map(|((i, j), c)| (i, j, c)).collect(), sum_sq)
    }

    fn from_cells(mut cells: Vec<(u32, u32, u64)>, sum_sq_cells: u128) -> Self {
        cells.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut rows: HashMap<u32, u64> = HashMap::new();
        let mut cols: HashMap<u32, u64> = HashMap::new();
        for &(i, j, c) in &cells {
            *rows.entry(i).or_default() += c;
            *cols.entry(j).or_default() += c;
        }
        let row_marginals = sorted(rows);
        let col_marginals = sorted(cols);
        let total = row_marginals.iter().map(|&(_, c)| c).sum();
        let row_sq_sum = row_marginals.iter().map(|&(_, c)| sq(c)).sum();
        let col_sq_sum = col_marginals.iter().map(|&(_, c)| sq(c)).sum();
        Self {
            cells,
            row_marginals,
            col_marginals,
            total,
            sum_sq_cells,
            row_sq_sum,
            col_sq_sum,
        }
    }

    /// Nonzero cells sorted by `(row, col)`.
    pub fn cells(&self) -> &[(u32, u32, u64)] {
        &self.cells
    }

    /// Truth class sizes, sorted by label.
    pub fn row_marginals(&self) -> &[(u32, u64)] {
        &self.row_marginals
    }

    /// Predicted class sizes, sorted by label.
    pub fn col_marginals(&self) -> &[(u32, u64)] {
        &self.col_marginals
    }

    /// Number of counted pixels, `m`.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// `S = Σ m_ij²`.
    pub fn sum_sq_cells(&self) -> u128 {
        self.sum_sq_cells
    }

    /// `A = Σ_i m_{i+}²` over truth classes.
    pub fn row_sq_sum(&self) -> u128 {
        self.row_sq_sum
    }

    /// `B = Σ_j m_{+j}²` over predicted classes.
    pub fn col_sq_sum(&self) -> u128 {
        self.col_sq_sum
    }

    /// Table of the swapped argument order (prediction as rows).
    pub fn transpose(&self) -> Self {
        let mut cells: Vec<_> = self.cells.iter().map(|&(i, j, c)| (j, i, c)).collect();
        cells.sort_unstable_by_key(|&(i, j, _)| (i, j));
        Self {
            cells,
            row_marginals: self.col_marginals.clone(),
            col_marginals: self.row_marginals.clone(),
            total: self.total,
            sum_sq_cells: self.sum_sq_cells,
            row_sq_sum: self.col_sq_sum,
            col_sq_sum: self.row_sq_sum,
        }
    }
}

fn sq(c: u64) -> u128 {
    let c = c as u128;
    c * c
}

fn sorted(map: HashMap<u32, u64>) -> Vec<(u32, u64)> {
    let mut out: Vec<_> = map.into_iter().collect();
    out.sort_unstable_by_key(|&(label, _)| label);
    out
}

/// Counts co-occurring labels over all pixels kept by `mask` (all pixels if
/// `None`). Masked-out pixels are dropped from both maps.
pub fn build_contingency(
    truth: &SegmentationMap,
    pred: &SegmentationMap,
    mask: Option<&ForegroundMask>,
) -> Result<ContingencyTable> {
    if !truth.is_aligned(pred) {
        return Err(Error::ShapeMismatch {
            truth: truth.shape(),
            pred: pred.shape(),
        });
    }
    if let Some(mask) = mask {
        if mask.shape() != truth.shape() {
            return Err(Error::ShapeMismatch {
                truth: truth.shape(),
                pred: mask.shape(),
            });
        }
        if mask.kept_count() == 0 {
            return Err(Error::EmptySelection { kept: 0, needed: 1 });
        }
    }

    let rows = truth.max_label() as usize + 1;
    let cols = pred.max_label() as usize + 1;
    let keep = mask.map(ForegroundMask::keep);
    let pairs = truth.labels().iter().zip(pred.labels()).enumerate();
    let pairs = pairs.filter(|(p, _)| keep.map_or(true, |k| k[*p]));

    let mut sum_sq: u128 = 0;
    let cells = if rows.saturating_mul(cols) <= DENSE_CELL_LIMIT {
        let mut dense = vec![0u64; rows * cols];
        for (_, (&i, &j)) in pairs {
            let slot = &mut dense[i as usize * cols + j as usize];
            // (c + 1)² − c² = 2c + 1
            sum_sq += 2 * *slot as u128 + 1;
            *slot += 1;
        }
        dense
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .map(|(idx, c)| ((idx / cols) as u32, (idx % cols) as u32, c))
            .collect()
    } else {
        let mut sparse: HashMap<u64, u64> = HashMap::new();
        for (_, (&i, &j)) in pairs {
            let slot = sparse.entry(((i as u64) << 32) | j as u64).or_default();
            sum_sq += 2 * *slot as u128 + 1;
            *slot += 1;
        }
        sparse
            .into_iter()
            .map(|(key, c)| ((key >> 32) as u32, key as u32, c))
            .collect()
    };
    Ok(ContingencyTable::from_cells(cells, sum_sq))
}
