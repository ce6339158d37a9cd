//! Per-sample evaluation and dataset-level aggregation.

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use crate::contingency::{build_contingency, ContingencyTable};
use crate::error::{Error, Result};
use crate::map::{foreground_mask, SegmentationMap};
use crate::metrics::{adjusted_metrics, unadjusted_metrics, Degeneracy, Score};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalOptions {
    /// Ground-truth ids treated as background. Prediction labels carry no
    /// background meaning.
    pub background_ids: Vec<u32>,
    pub compute_fg: bool,
    pub compute_global: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            background_ids: vec![0],
            compute_fg: true,
            compute_global: false,
        }
    }
}

/// Metrics of one (truth, prediction) pair.
///
/// `rp_unadj`/`rr_unadj` come from the global table when it is computed and
/// from the foreground table otherwise.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricReport {
    pub ari: Option<Score>,
    pub arp: Option<Score>,
    pub arr: Option<Score>,
    pub rp_unadj: Option<Score>,
    pub rr_unadj: Option<Score>,
    pub fg_ari: Option<Score>,
    pub fg_arp: Option<Score>,
    pub fg_arr: Option<Score>,
    pub pixel_count: u64,
    pub fg_pixel_count: Option<u64>,
    /// Distinct non-background truth labels.
    pub truth_object_count: usize,
    /// Worst degeneracy over all computed tables.
    pub degeneracy: Degeneracy,
}

struct TableScores {
    ari: Score,
    arp: Score,
    arr: Score,
    rp: Score,
    rr: Score,
    degeneracy: Degeneracy,
}

fn score_table(table: &ContingencyTable) -> Result<TableScores> {
    let adjusted = adjusted_metrics(table)?;
    let unadjusted = unadjusted_metrics(table)?;
    Ok(TableScores {
        ari: adjusted.ari,
        arp: adjusted.arp,
        arr: adjusted.arr,
        rp: unadjusted.rp,
        rr: unadjusted.rr,
        degeneracy: adjusted.degeneracy,
    })
}

pub fn evaluate_pair(
    truth: &SegmentationMap,
    pred: &SegmentationMap,
    options: &EvalOptions,
) -> Result<MetricReport> {
    if !truth.is_aligned(pred) {
        return Err(Error::ShapeMismatch {
            truth: truth.shape(),
            pred: pred.shape(),
        });
    }
    let background: HashSet<u32> = options.background_ids.iter().copied().collect();
    let truth_object_count = truth
        .labels()
        .iter()
        .filter(|label| !background.contains(label))
        .collect::<HashSet<_>>()
        .len();

    let mut report = MetricReport {
        ari: None,
        arp: None,
        arr: None,
        rp_unadj: None,
        rr_unadj: None,
        fg_ari: None,
        fg_arp: None,
        fg_arr: None,
        pixel_count: truth.len() as u64,
        fg_pixel_count: None,
        truth_object_count,
        degeneracy: Degeneracy::None,
    };

    if options.compute_fg {
        let mask = foreground_mask(truth, &options.background_ids);
        if mask.kept_count() < 2 {
            return Err(Error::EmptySelection {
                kept: mask.kept_count(),
                needed: 2,
            });
        }
        let fg = score_table(&build_contingency(truth, pred, Some(&mask))?)?;
        report.fg_ari = Some(fg.ari);
        report.fg_arp = Some(fg.arp);
        report.fg_arr = Some(fg.arr);
        report.rp_unadj = Some(fg.rp);
        report.rr_unadj = Some(fg.rr);
        report.fg_pixel_count = Some(mask.kept_count() as u64);
        report.degeneracy = report.degeneracy.max(fg.degeneracy);
    }
    if options.compute_global {
        let global = score_table(&build_contingency(truth, pred, None)?)?;
        report.ari = Some(global.ari);
        report.arp = Some(global.arp);
        report.arr = Some(global.arr);
        report.rp_unadj = Some(global.rp);
        report.rr_unadj = Some(global.rr);
        report.degeneracy = report.degeneracy.max(global.degeneracy);
    }
    Ok(report)
}

/// Metric columns in report and summary order.
pub const METRIC_NAMES: [&str; 8] = ["ari", "arp", "arr", "fg_ari", "fg_arp", "fg_arr", "rp", "rr"];

impl MetricReport {
    /// Scores in [`METRIC_NAMES`] order.
    pub fn scores(&self) -> [Option<Score>; 8] {
        [
            self.ari,
            self.arp,
            self.arr,
            self.fg_ari,
            self.fg_arp,
            self.fg_arr,
            self.rp_unadj,
            self.rr_unadj,
        ]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GroupBy {
    #[default]
    None,
    TruthObjectCount,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricStats {
    pub metric: &'static str,
    /// Non-degenerate values entering the moments.
    pub n: usize,
    pub mean: Option<f64>,
    /// Sample standard deviation (`n − 1` denominator); `None` below two values.
    pub std: Option<f64>,
    pub degenerate: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    /// Object count of the group, `None` for the ungrouped row.
    pub truth_object_count: Option<usize>,
    pub count: usize,
    pub metrics: Vec<MetricStats>,
}

/// Per-sample scores averaged per group. Degenerate values are excluded from
/// the moments and counted separately.
pub fn aggregate(reports: &[MetricReport], group_by: GroupBy) -> Result<Vec<SummaryRow>> {
    if reports.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut groups: BTreeMap<Option<usize>, Vec<&MetricReport>> = BTreeMap::new();
    for report in reports {
        let key = match group_by {
            GroupBy::None => None,
            GroupBy::TruthObjectCount => Some(report.truth_object_count),
        };
        groups.entry(key).or_default().push(report);
    }
    Ok(groups
        .into_iter()
        .map(|(key, members)| SummaryRow {
            truth_object_count: key,
            count: members.len(),
            metrics: METRIC_NAMES
                .iter()
                .enumerate()
                .map(|(idx, &metric)| {
                    let scores: Vec<Score> = members.iter().filter_map(|r| r.scores()[idx]).collect();
                    stats(metric, &scores)
                })
                .collect(),
        })
        .collect())
}

fn stats(metric: &'static str, scores: &[Score]) -> MetricStats {
    let values: Vec<f64> = scores.iter().filter_map(Score::finite).collect();
    let degenerate = scores.len() - values.len();
    let n = values.len();
    let mean = (n > 0).then(|| values.iter().sum::<f64>() / n as f64);
    let std = mean.filter(|_| n > 1).map(|mean| {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    MetricStats {
        metric,
        n,
        mean,
        std,
        degenerate,
    }
}
