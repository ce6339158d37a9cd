//! Dense label maps and foreground masks.
//!
//! A [`SegmentationMap`] is a row-major grid of non-negative class ids, either a
//! single `height × width` image or a `frames × height × width` stack (videos are
//! evaluated as one sample over all their frames).

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};

/// Dimensions of a label map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Shape {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
}

impl Shape {
    pub fn image(height: usize, width: usize) -> Self {
        Self {
            frames: 1,
            height,
            width,
        }
    }

    pub fn video(frames: usize, height: usize, width: usize) -> Self {
        Self {
            frames,
            height,
            width,
        }
    }

    pub fn len(&self) -> usize {
        self.frames * self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.frames == 1 {
            write!(f, "{}x{}", self.height, self.width)
        } else {
            write!(f, "{}x{}x{}", self.frames, self.height, self.width)
        }
    }
}

/// A grid of integer class labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentationMap {
    shape: Shape,
    labels: Vec<u32>,
}

impl SegmentationMap {
    pub fn new(shape: Shape, labels: Vec<u32>) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::EmptyMap);
        }
        if labels.len() != shape.len() {
            return Err(Error::BufferSize {
                shape,
                expected: shape.len(),
                got: labels.len(),
            });
        }
        Ok(Self { shape, labels })
    }

    /// Single-image map from row-major labels.
    pub fn from_rows(height: usize, width: usize, labels: Vec<u32>) -> Result<Self> {
        Self::new(Shape::image(height, width), labels)
    }

    /// A `1 × n` map, convenient for flat label vectors.
    pub fn from_flat(labels: Vec<u32>) -> Result<Self> {
        Self::new(Shape::image(1, labels.len()), labels)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<u32> {
        self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// Always false; maps hold at least one pixel.
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn is_aligned(&self, other: &SegmentationMap) -> bool {
        self.shape == other.shape
    }

    pub fn max_label(&self) -> u32 {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    /// Number of distinct labels.
    pub fn class_count(&self) -> usize {
        self.labels.iter().collect::<HashSet<_>>().len()
    }

    /// Stack single-frame maps of identical size along the frame axis.
    pub fn stack_frames(frames: Vec<SegmentationMap>) -> Result<Self> {
        let first = frames.first().ok_or(Error::EmptyMap)?.shape;
        let mut labels = Vec::with_capacity(first.len() * frames.len());
        let mut total_frames = 0;
        for frame in frames {
            if frame.shape.height != first.height || frame.shape.width != first.width {
                return Err(Error::ShapeMismatch {
                    truth: first,
                    pred: frame.shape,
                });
            }
            total_frames += frame.shape.frames;
            labels.extend(frame.labels);
        }
        Self::new(Shape::video(total_frames, first.height, first.width), labels)
    }
}

/// Pixels whose ground-truth label is not background.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForegroundMask {
    shape: Shape,
    keep: Vec<bool>,
    kept_count: usize,
}

impl ForegroundMask {
    pub fn from_keep(shape: Shape, keep: Vec<bool>) -> Result<Self> {
        if keep.len() != shape.len() {
            return Err(Error::BufferSize {
                shape,
                expected: shape.len(),
                got: keep.len(),
            });
        }
        let kept_count = keep.iter().filter(|&&k| k).count();
        Ok(Self {
            shape,
            keep,
            kept_count,
        })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn keep(&self) -> &[bool] {
        &self.keep
    }

    pub fn kept_count(&self) -> usize {
        self.kept_count
    }
}

/// Marks every pixel whose truth label is not in `background_ids`.
///
/// An all-false mask is legal here; evaluation rejects it later.
pub fn foreground_mask(truth: &SegmentationMap, background_ids: &[u32]) -> ForegroundMask {
    let background: HashSet<u32> = background_ids.iter().copied().collect();
    let keep: Vec<bool> = truth
        .labels
        .iter()
        .map(|label| !background.contains(label))
        .collect();
    let kept_count = keep.iter().filter(|&&k| k).count();
    ForegroundMask {
        shape: truth.shape,
        keep,
        kept_count,
    }
}

/// Relabels classes to `0..K` in order of first appearance.
pub fn relabel_compact(map: &SegmentationMap) -> SegmentationMap {
    let mut ids: HashMap<u32, u32> = HashMap::new();
    let labels = map
        .labels
        .iter()
        .map(|&label| {
            let next = ids.len() as u32;
            *ids.entry(label).or_insert(next)
        })
        .collect();
    SegmentationMap {
        shape: map.shape,
        labels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_drops_background() {
        let truth = SegmentationMap::from_rows(2, 2, vec![0, 1, 1, 0]).unwrap();
        let mask = foreground_mask(&truth, &[0]);
        assert_eq!(mask.keep(), &[false, true, true, false]);
        assert_eq!(mask.kept_count(), 2);
    }

    #[test]
    fn empty_background_keeps_everything() {
        let truth = SegmentationMap::from_rows(1, 1, vec![5]).unwrap();
        let mask = foreground_mask(&truth, &[]);
        assert_eq!(mask.keep(), &[true]);
        assert_eq!(mask.kept_count(), 1);
    }

    #[test]
    fn all_background_mask_is_legal() {
        let truth = SegmentationMap::from_rows(2, 2, vec![0; 4]).unwrap();
        assert_eq!(foreground_mask(&truth, &[0]).kept_count(), 0);
    }

    #[test]
    fn compaction_uses_first_appearance() {
        let cases: [(&[u32], &[u32]); 3] = [
            (&[5, 5, 9, 5], &[0, 0, 1, 0]),
            (&[0, 1, 2], &[0, 1, 2]),
            (&[3], &[0]),
        ];
        for (input, expected) in cases {
            let map = SegmentationMap::from_flat(input.to_vec()).unwrap();
            assert_eq!(relabel_compact(&map).labels(), expected);
        }
    }

    #[test]
    fn rejects_empty_and_misdimensioned_maps() {
        assert!(matches!(SegmentationMap::from_flat(vec![]), Err(Error::EmptyMap)));
        assert!(matches!(
            SegmentationMap::from_rows(2, 2, vec![1, 2, 3]),
            Err(Error::BufferSize {
                expected: 4,
                got: 3,
                ..
            })
        ));
    }

    #[test]
    fn stacking_requires_equal_frame_size() {
        let a = SegmentationMap::from_rows(1, 2, vec![0, 1]).unwrap();
        let b = SegmentationMap::from_rows(1, 2, vec![2, 3]).unwrap();
        let stacked = SegmentationMap::stack_frames(vec![a.clone(), b]).unwrap();
        assert_eq!(stacked.shape(), Shape::video(2, 1, 2));
        assert_eq!(stacked.labels(), &[0, 1, 2, 3]);

        let c = SegmentationMap::from_rows(2, 1, vec![0, 1]).unwrap();
        assert!(SegmentationMap::stack_frames(vec![a, c]).is_err());
    }
}
