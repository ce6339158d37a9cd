//! Synthetic checkerboard ground truth with deterministic under- and
//! oversegmentation.
//!
//! Merging works on whole grid cells in passes. Within a pass, classes are
//! visited in row-major order of their first cell. Each class not yet touched
//! in the pass absorbs its right neighbour, or the class below it at the end
//! of a row, if that neighbour is also untouched. Splitting bisects the
//! largest class (ties: lowest label) across its longer side (ties: a
//! horizontal cut). The new lower/right half takes the next unused label.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};

use serde::Serialize;

use crate::contingency::build_contingency;
use crate::error::{Error, Result};
use crate::map::{SegmentationMap, Shape};
use crate::metrics::{adjusted_metrics, unadjusted_metrics, Degeneracy, Score};

/// Layout of a checkerboard: `grid_rows × grid_cols` cells of
/// `cell_height × cell_width` pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub cell_height: usize,
    pub cell_width: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            grid_rows: 4,
            grid_cols: 4,
            cell_height: 16,
            cell_width: 16,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let dims = [self.grid_rows, self.grid_cols, self.cell_height, self.cell_width];
        if dims.contains(&0) {
            return Err(Error::InvalidGrid(format!(
                "all dimensions must be >= 1, got {self:?}"
            )));
        }
        if self.total_pixels() > u32::MAX as usize {
            return Err(Error::InvalidGrid("image too large".into()));
        }
        Ok(())
    }

    pub fn total_classes(&self) -> usize {
        self.grid_rows * self.grid_cols
    }

    pub fn height(&self) -> usize {
        self.grid_rows * self.cell_height
    }

    pub fn width(&self) -> usize {
        self.grid_cols * self.cell_width
    }

    pub fn total_pixels(&self) -> usize {
        self.height() * self.width()
    }

    fn shape(&self) -> Shape {
        Shape::image(self.height(), self.width())
    }
}

/// Each pixel labelled with the row-major index of its cell.
pub fn make_checkerboard(spec: &GridSpec) -> Result<SegmentationMap> {
    spec.validate()?;
    let cells: Vec<u32> = (0..spec.total_classes() as u32).collect();
    Ok(paint_cells(spec, &cells))
}

fn paint_cells(spec: &GridSpec, cell_labels: &[u32]) -> SegmentationMap {
    let (height, width) = (spec.height(), spec.width());
    let mut labels = Vec::with_capacity(height * width);
    for y in 0..height {
        let row = y / spec.cell_height * spec.grid_cols;
        labels.extend((0..width).map(|x| cell_labels[row + x / spec.cell_width]));
    }
    SegmentationMap::new(spec.shape(), labels).expect("spec validated")
}

fn check_shape(map: &SegmentationMap, spec: &GridSpec) -> Result<()> {
    spec.validate()?;
    if map.shape() != spec.shape() {
        return Err(Error::ShapeMismatch {
            truth: spec.shape(),
            pred: map.shape(),
        });
    }
    Ok(())
}

/// Incremental cell merger; each [`Merger::step`] removes one class.
#[derive(Clone, Debug)]
pub struct Merger {
    spec: GridSpec,
    cells: Vec<u32>,
    classes: usize,
    touched: HashSet<u32>,
    cursor: usize,
    merges_this_pass: usize,
}

impl Merger {
    /// Starts from `map`, which must be constant within every grid cell.
    pub fn new(map: &SegmentationMap, spec: &GridSpec) -> Result<Self> {
        check_shape(map, spec)?;
        let width = spec.width();
        let mut cells = Vec::with_capacity(spec.total_classes());
        for r in 0..spec.grid_rows {
            for c in 0..spec.grid_cols {
                let label = map.labels()[r * spec.cell_height * width + c * spec.cell_width];
                let uniform = (0..spec.cell_height).all(|dy| {
                    let row = (r * spec.cell_height + dy) * width + c * spec.cell_width;
                    map.labels()[row..row + spec.cell_width]
                        .iter()
                        .all(|&l| l == label)
                });
                if !uniform {
                    return Err(Error::InvalidGrid(format!(
                        "cell ({r}, {c}) is not a single class"
                    )));
                }
                cells.push(label);
            }
        }
        let classes = cells.iter().collect::<HashSet<_>>().len();
        Ok(Self {
            spec: *spec,
            cells,
            classes,
            touched: HashSet::new(),
            cursor: 0,
            merges_this_pass: 0,
        })
    }

    pub fn class_count(&self) -> usize {
        self.classes
    }

    pub fn current(&self) -> SegmentationMap {
        paint_cells(&self.spec, &self.cells)
    }

    fn partner(&self, anchor: usize) -> Option<u32> {
        let cols = self.spec.grid_cols;
        let class = self.cells[anchor];
        let mut right = anchor;
        while right % cols + 1 < cols && self.cells[right + 1] == class {
            right += 1;
        }
        if right % cols + 1 < cols {
            return Some(self.cells[right + 1]);
        }
        let mut down = anchor;
        while down + cols < self.cells.len() && self.cells[down + cols] == class {
            down += cols;
        }
        (down + cols < self.cells.len()).then(|| self.cells[down + cols])
    }

    fn absorb(&mut self, keep: u32, gone: u32) {
        for cell in self.cells.iter_mut().filter(|c| **c == gone) {
            *cell = keep;
        }
        self.classes -= 1;
    }

    /// Performs one merge. Returns false once a single class remains.
    pub fn step(&mut self) -> bool {
        if self.classes <= 1 {
            return false;
        }
        loop {
            if self.cursor == self.cells.len() {
                if self.merges_this_pass == 0 {
                    self.fallback_merge();
                    return true;
                }
                self.cursor = 0;
                self.merges_this_pass = 0;
                self.touched.clear();
            }
            let anchor = self.cursor;
            self.cursor += 1;
            let class = self.cells[anchor];
            let is_first_cell = !self.cells[..anchor].contains(&class);
            if !is_first_cell || self.touched.contains(&class) {
                continue;
            }
            let Some(other) = self.partner(anchor) else {
                continue;
            };
            if self.touched.contains(&other) {
                continue;
            }
            self.touched.insert(class);
            self.touched.insert(other);
            self.absorb(class, other);
            self.merges_this_pass += 1;
            return true;
        }
    }

    /// Merges the first pair of edge-adjacent distinct classes. Only needed
    /// when no class found an untouched partner in a whole pass.
    fn fallback_merge(&mut self) {
        let cols = self.spec.grid_cols;
        for idx in 0..self.cells.len() {
            let here = self.cells[idx];
            let right = (idx % cols + 1 < cols).then(|| self.cells[idx + 1]);
            let below = self.cells.get(idx + cols).copied();
            if let Some(other) = right.into_iter().chain(below).find(|&o| o != here) {
                let (keep, gone) = (here.min(other), here.max(other));
                self.absorb(keep, gone);
                self.touched.clear();
                self.cursor = 0;
                return;
            }
        }
        unreachable!("two classes on a connected grid always share an edge");
    }
}

/// Coarsens `map` to exactly `k` classes by merging neighbouring cells.
pub fn merge_to(map: &SegmentationMap, spec: &GridSpec, k: usize) -> Result<SegmentationMap> {
    let mut merger = Merger::new(map, spec)?;
    let classes = merger.class_count();
    if !(1..=classes).contains(&k) {
        return Err(Error::InvalidK {
            k,
            min: 1,
            max: classes,
        });
    }
    while merger.class_count() > k {
        merger.step();
    }
    Ok(merger.current())
}

#[derive(Clone, Copy, Debug)]
struct Rect {
    top: usize,
    left: usize,
    height: usize,
    width: usize,
}

impl Rect {
    fn area(&self) -> usize {
        self.height * self.width
    }
}

/// Incremental bisection; each [`Splitter::step`] adds one class.
#[derive(Clone, Debug)]
pub struct Splitter {
    shape: Shape,
    rects: BTreeMap<u32, Rect>,
    queue: BinaryHeap<(usize, Reverse<u32>)>,
    next_label: u32,
}

impl Splitter {
    /// Starts from `map`, whose classes must each fill their bounding box.
    pub fn new(map: &SegmentationMap, spec: &GridSpec) -> Result<Self> {
        check_shape(map, spec)?;
        let width = spec.width();
        let mut boxes: HashMap<u32, (usize, usize, usize, usize, usize)> = HashMap::new();
        for (idx, &label) in map.labels().iter().enumerate() {
            let (y, x) = (idx / width, idx % width);
            let b = boxes.entry(label).or_insert((y, x, y, x, 0));
            b.0 = b.0.min(y);
            b.1 = b.1.min(x);
            b.2 = b.2.max(y);
            b.3 = b.3.max(x);
            b.4 += 1;
        }
        let mut rects = BTreeMap::new();
        for (label, (y0, x0, y1, x1, count)) in boxes {
            let rect = Rect {
                top: y0,
                left: x0,
                height: y1 - y0 + 1,
                width: x1 - x0 + 1,
            };
            if rect.area() != count {
                return Err(Error::NonRectangularClass { label });
            }
            rects.insert(label, rect);
        }
        let queue = rects
            .iter()
            .map(|(&label, rect)| (rect.area(), Reverse(label)))
            .collect();
        let next_label = map.max_label() + 1;
        Ok(Self {
            shape: map.shape(),
            rects,
            queue,
            next_label,
        })
    }

    pub fn class_count(&self) -> usize {
        self.rects.len()
    }

    pub fn current(&self) -> SegmentationMap {
        let mut labels = vec![0; self.shape.len()];
        for (&label, rect) in &self.rects {
            for y in rect.top..rect.top + rect.height {
                let row = y * self.shape.width;
                labels[row + rect.left..row + rect.left + rect.width].fill(label);
            }
        }
        SegmentationMap::new(self.shape, labels).expect("shape preserved")
    }

    /// Bisects the largest class. Returns false once every class is a single
    /// pixel.
    pub fn step(&mut self) -> bool {
        let Some((area, Reverse(label))) = self.queue.pop() else {
            return false;
        };
        if area < 2 {
            self.queue.push((area, Reverse(label)));
            return false;
        }
        let rect = self.rects[&label];
        let (kept, split) = if rect.width > rect.height {
            let half = rect.width / 2;
            (
                Rect { width: half, ..rect },
                Rect {
                    left: rect.left + half,
                    width: rect.width - half,
                    ..rect
                },
            )
        } else {
            let half = rect.height / 2;
            (
                Rect { height: half, ..rect },
                Rect {
                    top: rect.top + half,
                    height: rect.height - half,
                    ..rect
                },
            )
        };
        let new_label = self.next_label;
        self.next_label += 1;
        self.rects.insert(label, kept);
        self.rects.insert(new_label, split);
        self.queue.push((kept.area(), Reverse(label)));
        self.queue.push((split.area(), Reverse(new_label)));
        true
    }
}

/// Refines `map` to exactly `k` classes by repeated bisection.
pub fn split_to(map: &SegmentationMap, spec: &GridSpec, k: usize) -> Result<SegmentationMap> {
    let mut splitter = Splitter::new(map, spec)?;
    let (min, max) = (splitter.class_count(), spec.total_pixels());
    if !(min..=max).contains(&k) {
        return Err(Error::InvalidK { k, min, max });
    }
    while splitter.class_count() < k {
        splitter.step();
    }
    Ok(splitter.current())
}

/// Calls `visit(k, prediction)` for every `k` in `k_min..=k_max`, in
/// increasing order. Predictions below the checkerboard's class count are
/// merges of it, the rest are splits.
pub fn for_each_prediction<F>(spec: &GridSpec, k_min: usize, k_max: usize, mut visit: F) -> Result<()>
where
    F: FnMut(usize, &SegmentationMap) -> Result<()>,
{
    let truth = make_checkerboard(spec)?;
    let classes = spec.total_classes();
    if k_min < 1 || k_min > classes {
        return Err(Error::InvalidK {
            k: k_min,
            min: 1,
            max: classes,
        });
    }
    if k_max < classes || k_max > spec.total_pixels() {
        return Err(Error::InvalidK {
            k: k_max,
            min: classes,
            max: spec.total_pixels(),
        });
    }

    let mut merged = Vec::with_capacity(classes - k_min);
    let mut merger = Merger::new(&truth, spec)?;
    while merger.class_count() > k_min {
        merger.step();
        merged.push(merger.current());
    }
    for (offset, map) in merged.iter().rev().enumerate() {
        visit(k_min + offset, map)?;
    }

    let mut splitter = Splitter::new(&truth, spec)?;
    visit(classes, &truth)?;
    for k in classes + 1..=k_max {
        splitter.step();
        visit(k, &splitter.current())?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub k: usize,
    pub ari: Score,
    pub arp: Score,
    pub arr: Score,
    /// Unadjusted Rand precision and recall.
    pub rp: Score,
    pub rr: Score,
    pub degeneracy: Degeneracy,
}

/// Metric curves over the number of predicted classes, ordered by `k`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SweepCurve {
    pub rows: Vec<SweepRow>,
}

/// Scores every merged/split prediction against the unmodified checkerboard.
pub fn sweep_curves(spec: &GridSpec, k_min: usize, k_max: usize) -> Result<SweepCurve> {
    let truth = make_checkerboard(spec)?;
    let mut rows = Vec::new();
    for_each_prediction(spec, k_min, k_max, |k, pred| {
        let table = build_contingency(&truth, pred, None)?;
        let adjusted = adjusted_metrics(&table)?;
        let unadjusted = unadjusted_metrics(&table)?;
        rows.push(SweepRow {
            k,
            ari: adjusted.ari,
            arp: adjusted.arp,
            arr: adjusted.arr,
            rp: unadjusted.rp,
            rr: unadjusted.rr,
            degeneracy: adjusted.degeneracy,
        });
        Ok(())
    })?;
    Ok(SweepCurve { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(grid_rows: usize, grid_cols: usize, cell_height: usize, cell_width: usize) -> GridSpec {
        GridSpec {
            grid_rows,
            grid_cols,
            cell_height,
            cell_width,
        }
    }

    #[test]
    fn small_checkerboards() {
        let map = make_checkerboard(&spec(2, 2, 1, 1)).unwrap();
        assert_eq!(map.labels(), &[0, 1, 2, 3]);

        let map = make_checkerboard(&spec(1, 1, 3, 2)).unwrap();
        assert!(map.labels().iter().all(|&l| l == 0));
        assert_eq!(map.len(), 6);
    }

    #[test]
    fn default_checkerboard() {
        let map = make_checkerboard(&GridSpec::default()).unwrap();
        assert_eq!(map.shape(), Shape::image(64, 64));
        let mut sizes = HashMap::new();
        for &l in map.labels() {
            *sizes.entry(l).or_insert(0) += 1;
        }
        assert_eq!(sizes.len(), 16);
        assert!(sizes.values().all(|&n| n == 256));
    }

    #[test]
    fn invalid_spec() {
        assert!(make_checkerboard(&spec(0, 4, 1, 1)).is_err());
    }

    #[test]
    fn merge_extremes() {
        let s = GridSpec::default();
        let board = make_checkerboard(&s).unwrap();
        assert_eq!(merge_to(&board, &s, 16).unwrap(), board);
        let one = merge_to(&board, &s, 1).unwrap();
        assert_eq!(one.class_count(), 1);
        assert!(matches!(merge_to(&board, &s, 0), Err(Error::InvalidK { .. })));
        assert!(matches!(merge_to(&board, &s, 17), Err(Error::InvalidK { .. })));
    }

    #[test]
    fn merge_to_eight_pairs_horizontal_neighbours() {
        let s = spec(4, 4, 1, 1);
        let board = make_checkerboard(&s).unwrap();
        let merged = merge_to(&board, &s, 8).unwrap();
        assert_eq!(
            merged.labels(),
            &[0, 0, 2, 2, 4, 4, 6, 6, 8, 8, 10, 10, 12, 12, 14, 14]
        );
    }

    #[test]
    fn merge_passes_on_default_grid() {
        let s = spec(4, 4, 1, 1);
        let board = make_checkerboard(&s).unwrap();
        let rows = merge_to(&board, &s, 4).unwrap();
        assert_eq!(
            rows.labels(),
            &[0, 0, 0, 0, 4, 4, 4, 4, 8, 8, 8, 8, 12, 12, 12, 12]
        );
        let halves = merge_to(&board, &s, 2).unwrap();
        assert_eq!(halves.labels()[..8], [0; 8]);
        assert_eq!(halves.labels()[8..], [8; 8]);
    }

    #[test]
    fn merge_wraps_vertically_at_row_end() {
        let s = spec(3, 3, 1, 1);
        let board = make_checkerboard(&s).unwrap();
        let merged = merge_to(&board, &s, 7).unwrap();
        // (0,1) pair, then cell 2 has no right neighbour and takes cell 5.
        assert_eq!(merged.labels(), &[0, 0, 2, 3, 4, 2, 6, 7, 8]);
        for k in 1..=9 {
            assert_eq!(merge_to(&board, &s, k).unwrap().class_count(), k);
        }
    }

    #[test]
    fn merger_fallback_handles_enclosed_classes() {
        // Class 0 is an L around class 3; neither finds a right/below partner.
        let s = spec(2, 2, 1, 1);
        let map = SegmentationMap::from_rows(2, 2, vec![0, 0, 0, 3]).unwrap();
        let merged = merge_to(&map, &s, 1).unwrap();
        assert_eq!(merged.labels(), &[0, 0, 0, 0]);
    }

    #[test]
    fn split_extremes() {
        let s = spec(2, 2, 2, 3);
        let board = make_checkerboard(&s).unwrap();
        assert_eq!(split_to(&board, &s, 4).unwrap(), board);
        let all = split_to(&board, &s, 24).unwrap();
        assert_eq!(all.class_count(), 24);
        assert!(matches!(split_to(&board, &s, 3), Err(Error::InvalidK { .. })));
        assert!(matches!(split_to(&board, &s, 25), Err(Error::InvalidK { .. })));
    }

    #[test]
    fn split_to_thirty_two_halves_every_cell() {
        let s = GridSpec::default();
        let board = make_checkerboard(&s).unwrap();
        let split = split_to(&board, &s, 32).unwrap();
        let mut sizes: HashMap<u32, (usize, HashSet<usize>, HashSet<usize>)> = HashMap::new();
        for (idx, &l) in split.labels().iter().enumerate() {
            let e = sizes.entry(l).or_default();
            e.0 += 1;
            e.1.insert(idx / 64);
            e.2.insert(idx % 64);
        }
        assert_eq!(sizes.len(), 32);
        for (count, rows, cols) in sizes.values() {
            assert_eq!((*count, rows.len(), cols.len()), (128, 8, 16));
        }
    }

    #[test]
    fn split_rejects_non_rectangles() {
        let s = spec(2, 2, 1, 1);
        let map = SegmentationMap::from_rows(2, 2, vec![0, 0, 0, 3]).unwrap();
        assert!(matches!(
            split_to(&map, &s, 4),
            Err(Error::NonRectangularClass { label: 0 })
        ));
    }

    #[test]
    fn sweep_range_checks() {
        let s = GridSpec::default();
        assert!(sweep_curves(&s, 0, 20).is_err());
        assert!(sweep_curves(&s, 17, 20).is_err());
        assert!(sweep_curves(&s, 1, 15).is_err());
        assert!(sweep_curves(&s, 1, 4097).is_err());
    }

    #[test]
    fn sweep_identity_row() {
        let curve = sweep_curves(&GridSpec::default(), 1, 40).unwrap();
        assert_eq!(curve.rows.len(), 40);
        let ks: Vec<_> = curve.rows.iter().map(|r| r.k).collect();
        assert_eq!(ks, (1..=40).collect::<Vec<_>>());
        let identity = &curve.rows[15];
        assert_eq!(identity.k, 16);
        for score in [identity.ari, identity.arp, identity.arr] {
            assert_eq!(score.value, 1.0);
        }
    }
}
