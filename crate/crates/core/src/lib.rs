//! Adjusted Rand index, precision and recall for comparing segmentations.
//!
//! The adjusted Rand index (ARI) cannot tell an oversegmenting prediction from
//! an undersegmenting one. Adjusted Rand precision (ARP) and recall (ARR)
//! separate the two: ARP stays at 1 when a prediction only splits ground-truth
//! objects, ARR stays at 1 when it only merges them, and ARI is their harmonic
//! mean.
//!
//! ```
//! use segrand::{adjusted_metrics, build_contingency, SegmentationMap};
//!
//! let truth = SegmentationMap::from_flat(vec![0, 0, 1, 1]).unwrap();
//! let pred = SegmentationMap::from_flat(vec![0, 1, 2, 2]).unwrap();
//! let table = build_contingency(&truth, &pred, None).unwrap();
//! let scores = adjusted_metrics(&table).unwrap();
//! assert_eq!(scores.arp.value, 1.0);
//! assert!((scores.arr.value - 0.4).abs() < 1e-12);
//! assert!((scores.ari.value - 4.0 / 7.0).abs() < 1e-12);
//! ```

pub mod contingency;
pub mod error;
pub mod io;
pub mod map;
pub mod metrics;
pub mod oracle;
pub mod report;
pub mod selfcheck;
pub mod synth;

pub use contingency::{build_contingency, ContingencyTable};
pub use error::{Error, Result};
pub use map::{foreground_mask, relabel_compact, ForegroundMask, SegmentationMap, Shape};
pub use metrics::{
    adjusted_metrics, expected_sum_squares, unadjusted_metrics, AdjustedMetrics, AdjustmentTerms, Degeneracy,
    Score, UnadjustedMetrics,
};
pub use report::{aggregate, evaluate_pair, EvalOptions, GroupBy, MetricReport, SummaryRow};
pub use synth::{make_checkerboard, merge_to, split_to, sweep_curves, GridSpec, SweepCurve};
