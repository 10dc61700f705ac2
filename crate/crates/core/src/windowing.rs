//! Batch buffering and sliding-window sequence construction.

use std::ops::RangeInclusive;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::streamgen::LabeledPoint;

/// Accumulates same-concept points until `capacity` is reached.
#[derive(Debug, Clone)]
pub struct BatchBuffer {
    capacity: usize,
    points: Vec<LabeledPoint>,
}

impl BatchBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "batch capacity must be positive");
        Self { capacity, points: Vec::with_capacity(capacity) }
    }

    /// Appends `point`; returns true once the buffer holds `capacity` points.
    pub fn push(&mut self, point: LabeledPoint) -> bool {
        debug_assert!(
            self.points.first().is_none_or(|p| p.concept == point.concept),
            "buffer mixes concepts"
        );
        self.points.push(point);
        self.points.len() >= self.capacity
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn points(&self) -> &[LabeledPoint] {
        &self.points
    }

    /// Empties the buffer, returning its points in arrival order.
    pub fn take(&mut self) -> Vec<LabeledPoint> {
        std::mem::replace(&mut self.points, Vec::with_capacity(self.capacity))
    }
}

/// A batch of `L` points seen as `L - W + 1` overlapping windows of length `W`.
///
/// Sequence `s` covers points `s..s + W`. Nothing is copied until the step tensors are requested.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceBatch {
    points: Vec<LabeledPoint>,
    window: usize,
}

/// Builds the sliding-window view of `batch`. Fails when the batch is shorter than the window.
pub fn build_sequences(batch: Vec<LabeledPoint>, window: usize) -> Result<SequenceBatch> {
    if window == 0 {
        return Err(Error::Input("window must be positive".into()));
    }
    if batch.len() < window {
        return Err(Error::BatchTooShort { len: batch.len(), window });
    }
    Ok(SequenceBatch { points: batch, window })
}

impl SequenceBatch {
    pub fn points(&self) -> &[LabeledPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn n_sequences(&self) -> usize {
        self.points.len() - self.window + 1
    }

    pub fn sequence(&self, s: usize) -> &[LabeledPoint] {
        &self.points[s..s + self.window]
    }

    /// Indices of the sequences containing point `t`.
    pub fn membership(&self, t: usize) -> RangeInclusive<usize> {
        assert!(t < self.points.len());
        let first = (t + 1).saturating_sub(self.window);
        let last = t.min(self.n_sequences() - 1);
        first..=last
    }

    /// Feature tensor split by timestep: element `t` is the `n_sequences x 2` matrix of the
    /// `t`-th item of every sequence.
    pub fn step_inputs(&self) -> Vec<Array2<f64>> {
        let n = self.n_sequences();
        (0..self.window)
            .map(|t| {
                Array2::from_shape_fn((n, 2), |(s, j)| {
                    let p = &self.points[s + t];
                    if j == 0 {
                        p.x1
                    } else {
                        p.x2
                    }
                })
            })
            .collect()
    }

    /// Label tensor, `n_sequences x W`.
    pub fn labels(&self) -> Array2<u8> {
        Array2::from_shape_fn((self.n_sequences(), self.window), |(s, t)| self.points[s + t].y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(n: usize) -> Vec<LabeledPoint> {
        (0..n)
            .map(|i| LabeledPoint {
                x1: (i as f64 + 0.5) / (n as f64 + 1.0),
                x2: 0.25,
                y: (i % 3 == 0) as u8,
                concept: 0,
            })
            .collect()
    }

    #[test]
    fn push_signals_when_full() {
        let mut buf = BatchBuffer::new(128);
        let all = pts(128);
        assert!(!buf.push(all[0]));
        assert_eq!(buf.len(), 1);
        for p in &all[1..127] {
            assert!(!buf.push(*p));
        }
        assert!(buf.push(all[127]));
        assert_eq!(buf.take(), all);
        assert!(buf.is_empty());
    }

    #[test]
    fn sequence_counts() {
        assert_eq!(build_sequences(pts(128), 10).unwrap().n_sequences(), 119);
        let single = build_sequences(pts(10), 10).unwrap();
        assert_eq!(single.n_sequences(), 1);
        assert!((0..10).all(|t| single.membership(t) == (0..=0)));
        assert!(matches!(build_sequences(pts(5), 10), Err(Error::BatchTooShort { len: 5, window: 10 })));
    }

    #[test]
    fn membership_matches_enumeration() {
        let sb = build_sequences(pts(12), 10).unwrap();
        assert_eq!(sb.n_sequences(), 3);
        for t in 0..12 {
            let brute: Vec<usize> =
                (0..sb.n_sequences()).filter(|&s| s <= t && t < s + sb.window()).collect();
            assert_eq!(sb.membership(t).collect::<Vec<_>>(), brute);
        }
        assert_eq!(sb.membership(10), 1..=2);
    }

    #[test]
    fn tensors_have_expected_shapes() {
        let sb = build_sequences(pts(128), 10).unwrap();
        let xs = sb.step_inputs();
        assert_eq!(xs.len(), 10);
        assert!(xs.iter().all(|x| x.dim() == (119, 2)));
        assert_eq!(sb.labels().dim(), (119, 10));
        assert_eq!(xs[3][[7, 0]], sb.points()[10].x1);
        assert_eq!(sb.labels()[[7, 3]], sb.points()[10].y);
    }

    proptest! {
        #[test]
        fn windows_are_contiguous_slices(len in 1usize..200, w in 1usize..30) {
            prop_assume!(w <= len);
            let batch = pts(len);
            let sb = build_sequences(batch.clone(), w).unwrap();
            prop_assert_eq!(sb.n_sequences(), len - w + 1);
            for s in 0..sb.n_sequences() {
                prop_assert_eq!(sb.sequence(s), &batch[s..s + w]);
            }
            let total: usize = (0..len).map(|t| sb.membership(t).count()).sum();
            prop_assert_eq!(total, w * (len - w + 1));
            for t in (w - 1)..=(len - w) {
                prop_assert_eq!(sb.membership(t).count(), w);
            }
        }
    }
}
