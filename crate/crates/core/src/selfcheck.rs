//! Randomised property suites comparing the closed forms against the
//! brute-force oracle.
//!
//! Each `check_*` function returns `Err(detail)` on the first violated
//! property of one instance. [`run`] drives them over a seeded corpus and
//! reports a [`Violation`] with the offending maps.

use std::collections::HashMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::contingency::{build_contingency, ContingencyTable};
use crate::error::Result;
use crate::map::{foreground_mask, SegmentationMap};
use crate::metrics::{
    adjusted_metrics, expected_sum_squares, unadjusted_fractions, unadjusted_metrics, AdjustedMetrics, Score,
};
use crate::oracle::{pair_count, permutation_expectation, ExpectationMode, PairCounts};
use crate::report::{evaluate_pair, EvalOptions};

/// A closed form for the chance expectation of `Σ m_ij²`.
pub type ExpectationFn = fn(&ContingencyTable) -> Result<f64>;

/// Largest prefix used for exhaustive expectation checks.
pub const EXACT_CHECK_PIXELS: usize = 8;

pub const ORACLE_TOLERANCE: f64 = 1e-12;
pub const IDENTITY_TOLERANCE: f64 = 1e-10;
pub const EXPECTATION_TOLERANCE: f64 = 1e-9;
pub const RANGE_SLACK: f64 = 1e-12;

/// Deliberately wrong expectation whose first term divides by `m(m−2)`.
/// The expectation suites must reject it.
pub fn faulty_expectation(table: &ContingencyTable) -> Result<f64> {
    let m = table.total() as f64;
    let a = table.row_sq_sum() as f64;
    let b = table.col_sq_sum() as f64;
    Ok(a * b / (m * (m - 2.0)) + (m * m - a - b) / (m - 1.0))
}

/// A pair of aligned flat label maps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub truth: Vec<u32>,
    pub pred: Vec<u32>,
}

impl Instance {
    pub fn maps(&self) -> (SegmentationMap, SegmentationMap) {
        (
            SegmentationMap::from_flat(self.truth.clone()).expect("non-empty instance"),
            SegmentationMap::from_flat(self.pred.clone()).expect("non-empty instance"),
        )
    }

    pub fn table(&self) -> ContingencyTable {
        let (truth, pred) = self.maps();
        build_contingency(&truth, &pred, None).expect("aligned instance")
    }

    /// The first `n` pixels.
    pub fn prefix(&self, n: usize) -> Instance {
        Instance {
            truth: self.truth[..n].to_vec(),
            pred: self.pred[..n].to_vec(),
        }
    }
}

/// Random instance with `2..=max_pixels` pixels and `1..=12` classes per map.
///
/// Predictions are drawn from a mix of independent labels, noisy copies,
/// refinements and coarsenings of the truth, so both chance-level (including
/// negative ARI) and near-perfect agreement appear.
pub fn random_instance<R: Rng>(rng: &mut R, max_pixels: usize) -> Instance {
    let m = rng.random_range(2..=max_pixels.max(2));
    let truth_classes = rng.random_range(1..=12u32);
    let pred_classes = rng.random_range(1..=12u32);
    let truth: Vec<u32> = (0..m).map(|_| rng.random_range(0..truth_classes)).collect();
    let pred: Vec<u32> = match rng.random_range(0..4) {
        0 => (0..m).map(|_| rng.random_range(0..pred_classes)).collect(),
        1 => {
            let noise = rng.random::<f64>();
            truth
                .iter()
                .map(|&t| {
                    if rng.random::<f64>() < noise {
                        rng.random_range(0..pred_classes)
                    } else {
                        t
                    }
                })
                .collect()
        }
        2 => {
            let parts = pred_classes.div_ceil(truth_classes).max(1);
            truth
                .iter()
                .map(|&t| t * parts + rng.random_range(0..parts))
                .collect()
        }
        _ => truth.iter().map(|&t| t % pred_classes).collect(),
    };
    // Occasionally spread ids so the sparse table path is exercised.
    let spread = if rng.random_bool(0.2) { 100_003 } else { 1 };
    Instance {
        truth: truth.into_iter().map(|t| t * spread).collect(),
        pred,
    }
}

pub fn corpus(seed: u64, count: usize, max_pixels: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| random_instance(&mut rng, max_pixels))
        .collect()
}

/// Adjusted scores assembled from pair counts, independent of the square-sum
/// route: with `P = m(m−1)/2` pairs, `t` truth pairs, `p` predicted pairs
/// and `a` pairs joined in both, the chance level of `a` is `t·p/P`.
pub fn oracle_adjusted(counts: &PairCounts) -> (Score, Score, Score) {
    let a = counts.both_same as i128;
    let t = a + counts.truth_only as i128;
    let p = a + counts.pred_only as i128;
    let pairs = counts.total() as i128;
    let numerator = a * pairs - t * p;
    let ratio = |num: i128, den: i128, fallback: (i128, i128)| {
        if den != 0 {
            Score {
                value: num as f64 / den as f64,
                degenerate: false,
            }
        } else {
            let value = if fallback.1 == 0 {
                1.0
            } else {
                fallback.0 as f64 / fallback.1 as f64
            };
            Score {
                value,
                degenerate: true,
            }
        }
    };
    let arp = ratio(numerator, p * pairs - t * p, (a, p));
    let arr = ratio(numerator, t * pairs - t * p, (a, t));
    let ari = ratio(2 * numerator, (t + p) * pairs - 2 * t * p, (2 * a, t + p));
    (ari, arp, arr)
}

fn close(name: &str, got: Score, want: Score, tol: f64) -> std::result::Result<(), String> {
    if got.degenerate != want.degenerate || (got.value - want.value).abs() > tol {
        return Err(format!("{name}: closed form {got:?}, oracle {want:?}"));
    }
    Ok(())
}

/// Unadjusted precision/recall equal the pair-count ratios exactly, and the
/// adjusted values agree with the pair-count assembly.
pub fn check_oracle_equivalence(instance: &Instance) -> std::result::Result<(), String> {
    let (truth, pred) = instance.maps();
    let table = instance.table();
    let counts = pair_count(&truth, &pred, None).map_err(|e| e.to_string())?;
    let (precision, recall) = unadjusted_fractions(&table).map_err(|e| e.to_string())?;
    let (pn, pd) = counts.precision();
    let (rn, rd) = counts.recall();
    let exact = |f: &crate::metrics::Fraction, n: u64, d: u64| {
        // Both 0/0 when no pairs exist on that side.
        (f.denominator == 0 && d == 0 && f.numerator == 0 && n == 0)
            || (f.denominator != 0
                && d != 0
                && f.same_ratio(&crate::metrics::Fraction {
                    numerator: n as i128,
                    denominator: d as i128,
                }))
    };
    if !exact(&precision, pn, pd) {
        return Err(format!("precision {precision:?} != pairs {pn}/{pd}"));
    }
    if !exact(&recall, rn, rd) {
        return Err(format!("recall {recall:?} != pairs {rn}/{rd}"));
    }
    let unadjusted = unadjusted_metrics(&table).map_err(|e| e.to_string())?;
    let pair_ratio = |n: u64, d: u64| if d == 0 { 1.0 } else { n as f64 / d as f64 };
    if unadjusted.rp.value != pair_ratio(pn, pd) || unadjusted.rr.value != pair_ratio(rn, rd) {
        return Err(format!(
            "unadjusted values {unadjusted:?} differ from pair ratios"
        ));
    }

    let got = adjusted_metrics(&table).map_err(|e| e.to_string())?;
    let (ari, arp, arr) = oracle_adjusted(&counts);
    close("ari", got.ari, ari, ORACLE_TOLERANCE)?;
    close("arp", got.arp, arp, ORACLE_TOLERANCE)?;
    close("arr", got.arr, arr, ORACLE_TOLERANCE)
}

/// `ARP(X, Y) == ARR(Y, X)` bit for bit.
pub fn check_antisymmetry(instance: &Instance) -> std::result::Result<(), String> {
    let forward = adjusted_metrics(&instance.table()).map_err(|e| e.to_string())?;
    let swapped = Instance {
        truth: instance.pred.clone(),
        pred: instance.truth.clone(),
    };
    let backward = adjusted_metrics(&swapped.table()).map_err(|e| e.to_string())?;
    if forward.arp != backward.arr || forward.arr != backward.arp || forward.ari != backward.ari {
        return Err(format!("forward {forward:?}, swapped {backward:?}"));
    }
    Ok(())
}

/// ARI is the harmonic mean of ARP and ARR and lies between them.
pub fn check_harmonic_and_bounds(metrics: &AdjustedMetrics) -> std::result::Result<(), String> {
    let (Some(ari), Some(arp), Some(arr)) =
        (metrics.ari.finite(), metrics.arp.finite(), metrics.arr.finite())
    else {
        return Ok(());
    };
    if arp.min(arr) - IDENTITY_TOLERANCE > ari || ari > arp.max(arr) + IDENTITY_TOLERANCE {
        return Err(format!("ari {ari} outside [{}, {}]", arp.min(arr), arp.max(arr)));
    }
    if arp > 0.0 && arr > 0.0 {
        let harmonic = 2.0 / (1.0 / arp + 1.0 / arr);
        if (ari - harmonic).abs() > IDENTITY_TOLERANCE {
            return Err(format!("ari {ari} != harmonic mean {harmonic}"));
        }
    }
    Ok(())
}

pub fn check_range(metrics: &AdjustedMetrics) -> std::result::Result<(), String> {
    for (name, score) in [("ari", metrics.ari), ("arp", metrics.arp), ("arr", metrics.arr)] {
        if !score.value.is_finite() || score.value > 1.0 + RANGE_SLACK {
            return Err(format!("{name} = {} out of range", score.value));
        }
    }
    Ok(())
}

/// Closed-form expectation against exhaustive enumeration.
pub fn check_expectation_exact(
    table: &ContingencyTable,
    expectation: ExpectationFn,
) -> std::result::Result<(), String> {
    let exact = permutation_expectation(table, ExpectationMode::Exact).map_err(|e| e.to_string())?;
    let closed = expectation(table).map_err(|e| e.to_string())?;
    let gap = (closed - exact.mean).abs();
    if gap.is_nan() || gap > EXPECTATION_TOLERANCE {
        return Err(format!(
            "closed form {closed} vs enumeration {} over {} arrangements",
            exact.mean, exact.samples
        ));
    }
    Ok(())
}

/// Foreground scores equal global scores on the foreground pixels alone.
pub fn check_fg_consistency(instance: &Instance, background: &[u32]) -> std::result::Result<(), String> {
    let (truth, pred) = instance.maps();
    let mask = foreground_mask(&truth, background);
    if mask.kept_count() < 2 {
        return Ok(());
    }
    let options = EvalOptions {
        background_ids: background.to_vec(),
        compute_fg: true,
        compute_global: false,
    };
    let report = evaluate_pair(&truth, &pred, &options).map_err(|e| e.to_string())?;
    let kept: Vec<usize> = (0..instance.truth.len()).filter(|&p| mask.keep()[p]).collect();
    let restricted = Instance {
        truth: kept.iter().map(|&p| instance.truth[p]).collect(),
        pred: kept.iter().map(|&p| instance.pred[p]).collect(),
    };
    let global = adjusted_metrics(&restricted.table()).map_err(|e| e.to_string())?;
    if report.fg_ari != Some(global.ari)
        || report.fg_arp != Some(global.arp)
        || report.fg_arr != Some(global.arr)
    {
        return Err(format!(
            "foreground ({:?}, {:?}, {:?}) vs restricted {global:?}",
            report.fg_ari, report.fg_arp, report.fg_arr
        ));
    }
    Ok(())
}

fn relabel<R: Rng>(labels: &[u32], rng: &mut R) -> Vec<u32> {
    let mut distinct: Vec<u32> = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let mut targets: Vec<u32> = (0..distinct.len() as u32).map(|i| i * 7 + 3).collect();
    targets.shuffle(rng);
    let mapping: HashMap<u32, u32> = distinct.into_iter().zip(targets).collect();
    labels.iter().map(|l| mapping[l]).collect()
}

/// Every score is unchanged when both maps are relabelled.
pub fn check_label_permutation<R: Rng>(instance: &Instance, rng: &mut R) -> std::result::Result<(), String> {
    let permuted = Instance {
        truth: relabel(&instance.truth, rng),
        pred: relabel(&instance.pred, rng),
    };
    let before = adjusted_metrics(&instance.table()).map_err(|e| e.to_string())?;
    let after = adjusted_metrics(&permuted.table()).map_err(|e| e.to_string())?;
    if before != after {
        return Err(format!("{before:?} became {after:?} after relabelling"));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug)]
pub struct CheckConfig {
    pub instances: usize,
    pub max_pixels: usize,
    pub seed: u64,
    pub expectation: ExpectationFn,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            instances: 500,
            max_pixels: 64,
            seed: 7,
            expectation: expected_sum_squares,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CheckSummary {
    pub instances: usize,
    pub negative_ari: usize,
    pub degenerate: usize,
    pub exact_expectations: usize,
}

/// A failed property with the instance that broke it.
#[derive(Clone, Debug)]
pub struct Violation {
    pub property: &'static str,
    pub index: usize,
    pub instance: Instance,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "property `{}` violated on instance {}",
            self.property, self.index
        )?;
        writeln!(f, "  {}", self.detail)?;
        writeln!(f, "  truth: {:?}", self.instance.truth)?;
        writeln!(f, "  pred:  {:?}", self.instance.pred)?;
        let table = self.instance.table();
        writeln!(
            f,
            "  m = {}, S = {}, A = {}, B = {}",
            table.total(),
            table.sum_sq_cells(),
            table.row_sq_sum(),
            table.col_sq_sum()
        )?;
        writeln!(f, "  {:>10} {:>10} {:>8}", "truth", "pred", "count")?;
        for &(i, j, c) in table.cells() {
            writeln!(f, "  {i:>10} {j:>10} {c:>8}")?;
        }
        Ok(())
    }
}

/// Runs every suite over a seeded corpus, stopping at the first violation.
pub fn run(config: &CheckConfig) -> std::result::Result<CheckSummary, Violation> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut summary = CheckSummary::default();
    for index in 0..config.instances {
        let instance = random_instance(&mut rng, config.max_pixels);
        let fail = |property: &'static str, instance: &Instance| {
            let instance = instance.clone();
            move |detail: String| Violation {
                property,
                index,
                instance,
                detail,
            }
        };
        let metrics = adjusted_metrics(&instance.table())
            .map_err(|e| e.to_string())
            .map_err(fail("evaluation", &instance))?;
        check_oracle_equivalence(&instance).map_err(fail("oracle equivalence", &instance))?;
        check_antisymmetry(&instance).map_err(fail("antisymmetry", &instance))?;
        check_harmonic_and_bounds(&metrics).map_err(fail("harmonic mean and bounds", &instance))?;
        check_range(&metrics).map_err(fail("range", &instance))?;
        check_fg_consistency(&instance, &[0]).map_err(fail("foreground consistency", &instance))?;
        check_label_permutation(&instance, &mut rng).map_err(fail("label permutation", &instance))?;

        let small = instance.prefix(instance.truth.len().min(EXACT_CHECK_PIXELS));
        check_expectation_exact(&small.table(), config.expectation)
            .map_err(fail("expectation vs enumeration", &small))?;

        summary.instances += 1;
        summary.exact_expectations += 1;
        if metrics.ari.finite().is_some_and(|v| v < 0.0) {
            summary.negative_ari += 1;
        }
        if metrics.degeneracy != crate::metrics::Degeneracy::None {
            summary.degenerate += 1;
        }
    }
    Ok(summary)
}
