//! Closed-form Rand-family metrics over a [`ContingencyTable`].
//!
//! With `S = Σ m_ij²`, truth square-sum `A`, prediction square-sum `B` and `m`
//! counted pixels, the chance expectation of `S` under the hypergeometric
//! (fixed marginals) model is
//!
//! ```text
//! E = A·B / (m(m−1)) + (m² − A − B) / (m−1)
//! ```
//!
//! and the adjusted scores are
//!
//! ```text
//! ARP = (S − E) / (B − E)        precision: prediction pairs that are truth pairs
//! ARR = (S − E) / (A − E)        recall: truth pairs kept together by the prediction
//! ARI = (S − E) / ((A + B)/2 − E)
//! ```
//!
//! Every ratio is evaluated from integers scaled by `m(m−1)`, so the only
//! rounding happens in the final division. That makes zero denominators
//! exactly detectable and `ARP(X, Y) == ARR(Y, X)` hold bit-for-bit.
//!
//! When a denominator is zero the numerator is zero as well for every valid
//! table, and the score falls back to its unadjusted counterpart with
//! [`Score::degenerate`] set (`ARR = 1` for a single-cluster prediction).

use serde::Serialize;

use crate::contingency::ContingencyTable;
use crate::error::{Error, Result};

/// Largest pixel count for which `m⁴` still fits the 128-bit intermediates.
pub const MAX_EXACT_TOTAL: u64 = 1 << 31;

/// A metric value plus whether it came from resolving a `0/0` ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Score {
    pub value: f64,
    pub degenerate: bool,
}

impl Score {
    fn exact(value: f64) -> Self {
        Self {
            value,
            degenerate: false,
        }
    }

    /// `Some(value)` unless degenerate.
    pub fn finite(&self) -> Option<f64> {
        (!self.degenerate).then_some(self.value)
    }
}

/// How a set of scores had to be resolved.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Degeneracy {
    #[default]
    None,
    /// Both partitions are identical and carry no chance-adjustable pairs
    /// (both constant or both all-singleton).
    TrivialIdentical,
    /// At least one adjusted denominator vanished.
    ZeroDenominator,
}

impl Degeneracy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Degeneracy::None => "none",
            Degeneracy::TrivialIdentical => "trivial_identical",
            Degeneracy::ZeroDenominator => "zero_denominator",
        }
    }
}

/// An exact ratio of two integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fraction {
    pub numerator: i128,
    pub denominator: i128,
}

impl Fraction {
    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    /// Exact equality as rationals (cross-multiplied).
    pub fn same_ratio(&self, other: &Fraction) -> bool {
        self.numerator * other.denominator == other.numerator * self.denominator
    }
}

/// Scalars shared by every adjusted metric of one table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdjustmentTerms {
    /// `S = Σ m_ij²`.
    pub sum_sq: u128,
    /// Chance expectation of `S`.
    pub expected: f64,
    /// Precision normaliser, the prediction square-sum `B`.
    pub gamma_precision: u128,
    /// Recall normaliser, the truth square-sum `A`.
    pub gamma_recall: u128,
    /// `(A + B) / 2`.
    pub gamma_ri: f64,
    pub total: u64,
}

impl AdjustmentTerms {
    pub fn new(table: &ContingencyTable) -> Result<Self> {
        let expected = expected_sum_squares(table)?;
        let a = table.row_sq_sum();
        let b = table.col_sq_sum();
        Ok(Self {
            sum_sq: table.sum_sq_cells(),
            expected,
            gamma_precision: b,
            gamma_recall: a,
            gamma_ri: (a + b) as f64 / 2.0,
            total: table.total(),
        })
    }
}

/// Integer form of the adjustment: every quantity multiplied by `m(m−1)`.
struct Scaled {
    /// `(S − E)·m(m−1)`
    numerator: i128,
    /// `(B − E)·m(m−1)`
    precision_den: i128,
    /// `(A − E)·m(m−1)`
    recall_den: i128,
}

fn check_total(table: &ContingencyTable) -> Result<i128> {
    let m = table.total();
    if m < 2 {
        return Err(Error::DegenerateTotal { m });
    }
    if m > MAX_EXACT_TOTAL {
        return Err(Error::Overflow { m });
    }
    Ok(m as i128)
}

/// `m(m−1)·E = m³ + A·B − m(A + B)`, exact.
fn scaled_expectation(table: &ContingencyTable) -> Result<(i128, i128)> {
    let m = check_total(table)?;
    let a = table.row_sq_sum() as i128;
    let b = table.col_sq_sum() as i128;
    let scale = m * (m - 1);
    Ok((m * m * m + a * b - m * (a + b), scale))
}

fn scaled(table: &ContingencyTable) -> Result<Scaled> {
    let (expectation, scale) = scaled_expectation(table)?;
    let s = table.sum_sq_cells() as i128;
    let a = table.row_sq_sum() as i128;
    let b = table.col_sq_sum() as i128;
    Ok(Scaled {
        numerator: s * scale - expectation,
        precision_den: b * scale - expectation,
        recall_den: a * scale - expectation,
    })
}

/// Expected `Σ m_ij²` when the prediction is relabelled at random with its
/// class sizes held fixed.
pub fn expected_sum_squares(table: &ContingencyTable) -> Result<f64> {
    let (expectation, scale) = scaled_expectation(table)?;
    Ok(expectation as f64 / scale as f64)
}

/// Adjusted Rand index, precision and recall of one table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AdjustedMetrics {
    pub ari: Score,
    pub arp: Score,
    pub arr: Score,
    pub degeneracy: Degeneracy,
}

/// Unadjusted Rand precision and recall.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UnadjustedMetrics {
    pub rp: Score,
    pub rr: Score,
}

/// `num/den`, or `fallback` flagged as degenerate when both vanish.
fn resolve(numerator: i128, denominator: i128, fallback: impl FnOnce() -> f64) -> Result<Score> {
    if denominator != 0 {
        return Ok(Score::exact(numerator as f64 / denominator as f64));
    }
    if numerator != 0 {
        return Err(Error::ImpossibleTable(format!(
            "zero denominator with numerator {numerator}"
        )));
    }
    Ok(Score {
        value: fallback(),
        degenerate: true,
    })
}

/// Exact `(S − m)/(B − m)` and `(S − m)/(A − m)`.
pub fn unadjusted_fractions(table: &ContingencyTable) -> Result<(Fraction, Fraction)> {
    let m = check_total(table)?;
    let s = table.sum_sq_cells() as i128;
    let a = table.row_sq_sum() as i128;
    let b = table.col_sq_sum() as i128;
    Ok((
        Fraction {
            numerator: s - m,
            denominator: b - m,
        },
        Fraction {
            numerator: s - m,
            denominator: a - m,
        },
    ))
}

/// Rand precision and recall without chance correction. A ratio with no
/// pairs in its denominator (all-singleton partition) resolves to 1.
pub fn unadjusted_metrics(table: &ContingencyTable) -> Result<UnadjustedMetrics> {
    let (precision, recall) = unadjusted_fractions(table)?;
    Ok(UnadjustedMetrics {
        rp: resolve(precision.numerator, precision.denominator, || 1.0)?,
        rr: resolve(recall.numerator, recall.denominator, || 1.0)?,
    })
}

/// Unadjusted Rand-index analogue `2(S − m)/(A + B − 2m)`, the fallback for a
/// degenerate ARI.
fn unadjusted_ri(table: &ContingencyTable) -> Result<Score> {
    let m = check_total(table)?;
    let s = table.sum_sq_cells() as i128;
    let a = table.row_sq_sum() as i128;
    let b = table.col_sq_sum() as i128;
    resolve(2 * (s - m), a + b - 2 * m, || 1.0)
}

pub fn adjusted_metrics(table: &ContingencyTable) -> Result<AdjustedMetrics> {
    let scaled = scaled(table)?;
    let unadjusted = unadjusted_metrics(table)?;
    let arp = resolve(scaled.numerator, scaled.precision_den, || unadjusted.rp.value)?;
    let arr = resolve(scaled.numerator, scaled.recall_den, || unadjusted.rr.value)?;
    let ri = unadjusted_ri(table)?;
    let ari = resolve(
        2 * scaled.numerator,
        scaled.precision_den + scaled.recall_den,
        || ri.value,
    )?;

    let degeneracy = if !(ari.degenerate || arp.degenerate || arr.degenerate) {
        Degeneracy::None
    } else if table.sum_sq_cells() == table.row_sq_sum() && table.sum_sq_cells() == table.col_sq_sum() {
        Degeneracy::TrivialIdentical
    } else {
        Degeneracy::ZeroDenominator
    };
    Ok(AdjustedMetrics {
        ari,
        arp,
        arr,
        degeneracy,
    })
}
