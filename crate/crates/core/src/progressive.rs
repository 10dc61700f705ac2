//! Column stacks: cPNN and its two ablations.
//!
//! * `cpnn`: a new column per concept; column `k` reads `[x_t, h_t^(k-1)]`, the raw features
//!   concatenated with the previous column's hidden state at the same step.
//! * `mclstm`: a new column per concept, each reading raw features only.
//! * `clstm`: a single column that keeps training through every drift.
//!
//! Only the last column is trainable and only its head produces the output.

use std::fmt;
use std::str::FromStr;

use ndarray::{concatenate, Array2, ArrayView2, Axis};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rnn::{self, init_column, LstmColumn, N_CLASSES};
use crate::windowing::SequenceBatch;

/// Raw feature width of the stream.
pub const FEATURES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Cpnn,
    Clstm,
    Mclstm,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Cpnn, Mode::Clstm, Mode::Mclstm];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Cpnn => "cpnn",
            Mode::Clstm => "clstm",
            Mode::Mclstm => "mclstm",
        }
    }

    /// Display name used in reports.
    pub fn label(self) -> &'static str {
        match self {
            Mode::Cpnn => "cPNN",
            Mode::Clstm => "cLSTM",
            Mode::Mclstm => "mcLSTM",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cpnn" => Ok(Mode::Cpnn),
            "clstm" => Ok(Mode::Clstm),
            "mclstm" => Ok(Mode::Mclstm),
            other => Err(Error::Mode(other.to_string())),
        }
    }
}

/// Per-point predictions of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPredictions {
    /// `L x 2` averaged class probabilities.
    pub probs: Array2<f64>,
    pub labels: Vec<u8>,
}

impl PointPredictions {
    pub fn accuracy(&self, truth: impl IntoIterator<Item = u8>) -> f64 {
        let mut hits = 0usize;
        let mut n = 0usize;
        for (pred, y) in self.labels.iter().zip(truth) {
            hits += usize::from(*pred == y);
            n += 1;
        }
        hits as f64 / n as f64
    }
}

#[derive(Debug, Clone)]
pub struct ProgressiveNet {
    columns: Vec<LstmColumn>,
    mode: Mode,
    hidden: usize,
    rng: ChaCha8Rng,
}

impl ProgressiveNet {
    /// A network with one fresh column. `rng` also initialises every column added later.
    pub fn new(mode: Mode, hidden: usize, mut rng: ChaCha8Rng) -> Self {
        let first = init_column(FEATURES, hidden, &mut rng);
        Self { columns: vec![first], mode, hidden, rng }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn columns(&self) -> &[LstmColumn] {
        &self.columns
    }

    /// Mutable access to the trainable column.
    pub fn last_column_mut(&mut self) -> &mut LstmColumn {
        self.columns.last_mut().expect("at least one column")
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    /// Reacts to a drift: freezes the current column and appends a fresh one, except in
    /// `clstm` mode where drifts are ignored.
    pub fn add_column(&mut self) {
        let input_dim = match self.mode {
            Mode::Clstm => return,
            Mode::Mclstm => FEATURES,
            Mode::Cpnn => FEATURES + self.hidden,
        };
        self.last_column_mut().frozen = true;
        let col = init_column(input_dim, self.hidden, &mut self.rng);
        self.columns.push(col);
    }

    /// Per-step inputs of the last column for a batch of raw feature steps (`N x 2` each).
    ///
    /// The frozen columns only contribute through this function, so its result can be reused
    /// across every epoch of a fit.
    pub fn last_column_inputs(&self, raw: &[Array2<f64>]) -> Vec<Array2<f64>> {
        if self.mode != Mode::Cpnn || self.columns.len() == 1 {
            return raw.to_vec();
        }
        let mut inputs = raw.to_vec();
        for col in &self.columns[..self.columns.len() - 1] {
            let cache = col.forward_batch(&inputs);
            inputs = raw
                .iter()
                .zip(&cache.hidden)
                .map(|(x, h)| concatenate(Axis(1), &[x.view(), h.view()]).expect("same row count"))
                .collect();
        }
        inputs
    }

    /// Per-step class probabilities (`N x 2` per step) for a batch of raw feature steps.
    pub fn forward_batch(&self, raw: &[Array2<f64>]) -> Vec<Array2<f64>> {
        let inputs = self.last_column_inputs(raw);
        self.columns.last().expect("at least one column").forward_batch(&inputs).probs
    }

    /// Per-step probabilities (`W x 2`) of a single raw sequence (`W x 2`).
    pub fn net_forward(&self, seq: ArrayView2<'_, f64>) -> Array2<f64> {
        let raw: Vec<Array2<f64>> =
            seq.rows().into_iter().map(|r| r.to_owned().insert_axis(Axis(0))).collect();
        let probs = self.forward_batch(&raw);
        let mut out = Array2::zeros((raw.len(), N_CLASSES));
        for (t, p) in probs.iter().enumerate() {
            out.row_mut(t).assign(&p.row(0));
        }
        out
    }

    /// Averages each point's per-step distributions over every sequence containing it.
    pub fn predict_points(&self, sb: &SequenceBatch) -> PointPredictions {
        let probs = self.forward_batch(&sb.step_inputs());
        average_points(&probs, sb.len())
    }

    /// `epochs` full-batch gradient steps on the last column.
    pub fn fit(&mut self, sb: &SequenceBatch, epochs: usize, lr: f64) -> Result<()> {
        let inputs = self.last_column_inputs(&sb.step_inputs());
        self.fit_prepared(&inputs, &sb.labels(), epochs, lr)
    }

    /// [`fit`](Self::fit) on inputs already produced by [`last_column_inputs`](Self::last_column_inputs).
    pub fn fit_prepared(
        &mut self,
        inputs: &[Array2<f64>],
        labels: &Array2<u8>,
        epochs: usize,
        lr: f64,
    ) -> Result<()> {
        let col = self.last_column_mut();
        for _ in 0..epochs {
            let cache = col.forward_batch(inputs);
            let grads = col.backward(&cache, labels);
            if !grads.is_finite() {
                return Err(Error::Numerical("gradient".into()));
            }
            col.sgd_step(&grads, lr)?;
        }
        if !col.is_finite() {
            return Err(Error::Numerical("parameters".into()));
        }
        Ok(())
    }

    /// Mean cross-entropy of the current network on `sb`.
    pub fn loss(&self, sb: &SequenceBatch) -> f64 {
        rnn::loss(&self.forward_batch(&sb.step_inputs()), &sb.labels())
    }
}

/// Averages per-step probabilities of sliding windows back onto the `len` underlying points.
///
/// `probs[t]` row `s` belongs to point `s + t`. Ties predict class 1.
pub fn average_points(probs: &[Array2<f64>], len: usize) -> PointPredictions {
    let mut sums = Array2::<f64>::zeros((len, N_CLASSES));
    let mut counts = vec![0usize; len];
    for (t, p) in probs.iter().enumerate() {
        for (s, row) in p.rows().into_iter().enumerate() {
            let mut acc = sums.row_mut(s + t);
            acc += &row;
            counts[s + t] += 1;
        }
    }
    for (mut row, &c) in sums.rows_mut().into_iter().zip(&counts) {
        row /= c as f64;
    }
    let labels = sums.rows().into_iter().map(|r| u8::from(r[1] >= r[0])).collect();
    PointPredictions { probs: sums, labels }
}
