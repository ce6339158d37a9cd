//! Brute-force reference computations.
//!
//! Nothing here touches the closed forms in [`crate::metrics`]: pair counts
//! come from enumerating every unordered pixel pair, and the chance
//! expectation of `S` from literally rearranging the predicted labels.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::contingency::ContingencyTable;
use crate::error::{Error, Result};
use crate::map::{ForegroundMask, SegmentationMap};

/// Largest table for which every arrangement is enumerated.
pub const MAX_EXACT_PIXELS: u64 = 10;

/// Shuffles per Monte-Carlo chunk. Each chunk draws from its own ChaCha8
/// stream, so the estimate does not depend on the thread count.
pub const MONTE_CARLO_CHUNK: u64 = 1024;

/// Classification of all unordered pixel pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PairCounts {
    /// Same class in both maps.
    pub both_same: u64,
    /// Same truth class, different predicted class.
    pub truth_only: u64,
    /// Same predicted class, different truth class.
    pub pred_only: u64,
    pub both_diff: u64,
}

impl PairCounts {
    pub fn total(&self) -> u64 {
        self.both_same + self.truth_only + self.pred_only + self.both_diff
    }

    /// Precision as `(numerator, denominator)`.
    pub fn precision(&self) -> (u64, u64) {
        (self.both_same, self.both_same + self.pred_only)
    }

    /// Recall as `(numerator, denominator)`.
    pub fn recall(&self) -> (u64, u64) {
        (self.both_same, self.both_same + self.truth_only)
    }
}

/// Enumerates all `m(m−1)/2` pairs of kept pixels.
pub fn pair_count(
    truth: &SegmentationMap,
    pred: &SegmentationMap,
    mask: Option<&ForegroundMask>,
) -> Result<PairCounts> {
    if !truth.is_aligned(pred) || mask.is_some_and(|k| k.shape() != truth.shape()) {
        return Err(Error::ShapeMismatch {
            truth: truth.shape(),
            pred: pred.shape(),
        });
    }
    let pixels: Vec<(u32, u32)> = truth
        .labels()
        .iter()
        .zip(pred.labels())
        .enumerate()
        .filter(|(p, _)| mask.map_or(true, |k| k.keep()[*p]))
        .map(|(_, (&t, &y))| (t, y))
        .collect();
    if pixels.len() < 2 {
        return Err(Error::DegenerateTotal {
            m: pixels.len() as u64,
        });
    }
    let mut counts = PairCounts::default();
    for (a, &(ta, ya)) in pixels.iter().enumerate() {
        for &(tb, yb) in &pixels[a + 1..] {
            match (ta == tb, ya == yb) {
                (true, true) => counts.both_same += 1,
                (true, false) => counts.truth_only += 1,
                (false, true) => counts.pred_only += 1,
                (false, false) => counts.both_diff += 1,
            }
        }
    }
    Ok(counts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpectationMode {
    /// Average over every distinct arrangement of the predicted labels.
    Exact,
    /// Average over `samples` uniform shuffles seeded with `seed`.
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpectationEstimate {
    pub mean: f64,
    /// Standard error of the mean; zero for exact enumeration.
    pub std_error: f64,
    /// Arrangements enumerated or sampled.
    pub samples: u64,
}

/// Truth labels laid out class by class, plus the predicted labels, both as
/// compact indices. Pixel order is irrelevant to the expectation.
struct Layout {
    /// Start offsets of each truth class in `pred`, with a trailing end offset.
    blocks: Vec<usize>,
    pred: Vec<u16>,
    pred_classes: usize,
}

impl Layout {
    fn new(table: &ContingencyTable) -> Result<Self> {
        let m = table.total();
        if m < 2 {
            return Err(Error::DegenerateTotal { m });
        }
        let mut blocks = vec![0];
        for &(_, size) in table.row_marginals() {
            blocks.push(blocks.last().unwrap() + size as usize);
        }
        let cols = table.col_marginals();
        if cols.len() > u16::MAX as usize {
            return Err(Error::Overflow { m });
        }
        let pred = cols
            .iter()
            .enumerate()
            .flat_map(|(idx, &(_, size))| std::iter::repeat(idx as u16).take(size as usize))
            .collect();
        Ok(Self {
            blocks,
            pred,
            pred_classes: cols.len(),
        })
    }

    /// `Σ m_ij²` for the current arrangement of `pred`.
    fn sum_sq(&self, pred: &[u16], scratch: &mut [u64]) -> u64 {
        let mut s = 0;
        for block in self.blocks.windows(2) {
            let pixels = &pred[block[0]..block[1]];
            for &j in pixels {
                let c = &mut scratch[j as usize];
                s += 2 * *c + 1;
                *c += 1;
            }
            for &j in pixels {
                scratch[j as usize] = 0;
            }
        }
        s
    }
}

/// Lexicographic successor of a multiset permutation; false after the last.
fn next_permutation(xs: &mut [u16]) -> bool {
    let Some(pivot) = xs.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let swap = xs.iter().rposition(|&x| x > xs[pivot]).unwrap();
    xs.swap(pivot, swap);
    xs[pivot + 1..].reverse();
    true
}

/// Mean of `Σ m_ij²` over rearrangements of the predicted labels with the
/// class sizes of both maps held fixed.
pub fn permutation_expectation(
    table: &ContingencyTable,
    mode: ExpectationMode,
) -> Result<ExpectationEstimate> {
    let layout = Layout::new(table)?;
    match mode {
        ExpectationMode::Exact => {
            let m = table.total();
            if m > MAX_EXACT_PIXELS {
                return Err(Error::TooLargeForExact {
                    m,
                    max: MAX_EXACT_PIXELS,
                });
            }
            let mut pred = layout.pred.clone();
            let mut scratch = vec![0; layout.pred_classes];
            let mut sum: u128 = 0;
            let mut count: u64 = 0;
            loop {
                sum += layout.sum_sq(&pred, &mut scratch) as u128;
                count += 1;
                if !next_permutation(&mut pred) {
                    break;
                }
            }
            Ok(ExpectationEstimate {
                mean: sum as f64 / count as f64,
                std_error: 0.0,
                samples: count,
            })
        }
        ExpectationMode::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidSampleCount);
            }
            let chunks = samples.div_ceil(MONTE_CARLO_CHUNK);
            let (sum, sum_sq) = (0..chunks)
                .into_par_iter()
                .map(|chunk| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(chunk);
                    let n = MONTE_CARLO_CHUNK.min(samples - chunk * MONTE_CARLO_CHUNK);
                    let mut pred = layout.pred.clone();
                    let mut scratch = vec![0; layout.pred_classes];
                    let mut sum: u128 = 0;
                    let mut sum_sq: u128 = 0;
                    for _ in 0..n {
                        pred.shuffle(&mut rng);
                        let s = layout.sum_sq(&pred, &mut scratch) as u128;
                        sum += s;
                        sum_sq += s * s;
                    }
                    (sum, sum_sq)
                })
                .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
            let n = samples as f64;
            let mean = sum as f64 / n;
            let std_error = if samples > 1 {
                // Exact integer form of Σ(s − mean)² · n.
                let centered = (sum_sq * samples as u128 - sum * sum) as f64;
                (centered / (n * (n - 1.0)) / n).sqrt()
            } else {
                f64::INFINITY
            };
            Ok(ExpectationEstimate {
                mean,
                std_error,
                samples,
            })
        }
    }
}
