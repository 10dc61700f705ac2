//! Test-then-train loop over a stream with oracle-given abrupt drifts.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::progressive::{average_points, ProgressiveNet};
use crate::streamgen::LabeledPoint;
use crate::windowing::{build_sequences, BatchBuffer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub window: usize,
    pub epochs: usize,
    pub lr: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { batch_size: 128, window: 10, epochs: 10, lr: 0.1 }
    }
}

/// Prequential accuracy of one batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchRecord {
    pub concept: usize,
    /// 1-based position of the batch within its concept.
    pub batch_index: usize,
    pub n_points: usize,
    pub accuracy: f64,
}

/// Evaluates `points` with the current network, then trains on them. Batches shorter than the
/// window are skipped.
fn process_batch(
    net: &mut ProgressiveNet,
    points: Vec<LabeledPoint>,
    cfg: &TrainConfig,
) -> Result<Option<(usize, usize, f64)>> {
    let Some(first) = points.first() else {
        return Ok(None);
    };
    let concept = first.concept;
    let sb = match build_sequences(points, cfg.window) {
        Ok(sb) => sb,
        Err(Error::BatchTooShort { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let inputs = net.last_column_inputs(&sb.step_inputs());
    let probs = net
        .columns()
        .last()
        .expect("at least one column")
        .forward_batch(&inputs)
        .probs;
    if probs.iter().any(|p| p.iter().any(|v| !v.is_finite())) {
        return Err(Error::Numerical("prediction".into()));
    }
    let pred = average_points(&probs, sb.len());
    let accuracy = pred.accuracy(sb.points().iter().map(|p| p.y));
    net.fit_prepared(&inputs, &sb.labels(), cfg.epochs, cfg.lr)?;
    Ok(Some((concept, sb.len(), accuracy)))
}

/// Incremental form of [`run_stream`]: feed points one at a time.
#[derive(Debug, Clone)]
pub struct Prequential {
    cfg: TrainConfig,
    buffer: BatchBuffer,
    current: Option<usize>,
    finished: HashSet<usize>,
    batch_index: usize,
}

impl Prequential {
    pub fn new(cfg: TrainConfig) -> Result<Self> {
        if cfg.window == 0 || cfg.window > cfg.batch_size {
            return Err(Error::Input(format!(
                "window {} must be in 1..={}",
                cfg.window, cfg.batch_size
            )));
        }
        Ok(Self {
            cfg,
            buffer: BatchBuffer::new(cfg.batch_size),
            current: None,
            finished: HashSet::new(),
            batch_index: 0,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    /// Points waiting for the current batch to fill.
    pub fn pending(&self) -> usize {
        self.buffer.len()
    }

    fn flush(&mut self, net: &mut ProgressiveNet, out: &mut Vec<BatchRecord>) -> Result<()> {
        if let Some((concept, n_points, accuracy)) = process_batch(net, self.buffer.take(), &self.cfg)? {
            self.batch_index += 1;
            out.push(BatchRecord { concept, batch_index: self.batch_index, n_points, accuracy });
        }
        Ok(())
    }

    /// Adds one point; returns the records of any batches it completed.
    pub fn push(&mut self, net: &mut ProgressiveNet, point: LabeledPoint) -> Result<Vec<BatchRecord>> {
        let mut out = Vec::new();
        match self.current {
            Some(c) if c != point.concept => {
                self.finished.insert(c);
                if self.finished.contains(&point.concept) {
                    return Err(Error::InterleavedConcept(point.concept));
                }
                self.flush(net, &mut out)?;
                net.add_column();
                self.batch_index = 0;
            }
            _ => {}
        }
        self.current = Some(point.concept);
        if self.buffer.push(point) {
            self.flush(net, &mut out)?;
        }
        Ok(out)
    }
}

/// Runs the prequential loop over `stream`.
///
/// Points are buffered per concept. A batch is evaluated and then trained on when it fills up
/// or when a drift arrives; on a drift the network grows a column and the drifting point opens
/// the next batch. Points left in the buffer when the stream ends are not evaluated.
pub fn run_stream<I>(net: &mut ProgressiveNet, stream: I, cfg: &TrainConfig) -> Result<Vec<BatchRecord>>
where
    I: IntoIterator<Item = LabeledPoint>,
{
    let mut runner = Prequential::new(*cfg)?;
    let mut records = Vec::new();
    for point in stream {
        records.extend(runner.push(net, point)?);
    }
    Ok(records)
}

/// Batch-index ranges over which per-concept accuracy is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Case {
    /// batches 1..=50
    First50,
    /// batches 1..=100
    First100,
    /// batches 101..
    After100,
    /// every batch
    Whole,
}

impl Case {
    pub const ALL: [Case; 4] = [Case::First50, Case::First100, Case::After100, Case::Whole];

    pub fn contains(self, batch_index: usize) -> bool {
        match self {
            Case::First50 => (1..=50).contains(&batch_index),
            Case::First100 => (1..=100).contains(&batch_index),
            Case::After100 => batch_index > 100,
            Case::Whole => batch_index >= 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Case::First50 => "first50",
            Case::First100 => "first100",
            Case::After100 => "after100",
            Case::Whole => "whole",
        }
    }

    /// Interval notation used in reports.
    pub fn label(self) -> &'static str {
        match self {
            Case::First50 => "[1,50]",
            Case::First100 => "[1,100]",
            Case::After100 => "(100,)",
            Case::Whole => "[1,)",
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Case::ALL
            .into_iter()
            .find(|c| c.as_str() == s || c.label() == s)
            .ok_or_else(|| Error::Input(format!("unknown case `{s}`")))
    }
}

/// Unweighted mean of the batch accuracies of `concept` inside `case`; `None` if no batch falls
/// in the range.
pub fn case_accuracy(records: &[BatchRecord], concept: usize, case: Case) -> Option<f64> {
    let (sum, n) = records
        .iter()
        .filter(|r| r.concept == concept && case.contains(r.batch_index))
        .fold((0.0, 0usize), |(s, n), r| (s + r.accuracy, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Sample mean and standard deviation (denominator `R - 1`) across runs.
pub fn aggregate_runs(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::Sample(format!("need at least 2 runs, got {}", values.len())));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}
