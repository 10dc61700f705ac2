//! LSTM column with a per-timestep two-class softmax head.
//!
//! Sequences are processed in batches: the input of a forward pass is one `N x D` matrix per
//! timestep, row `n` belonging to sequence `n`. Gate blocks are stacked in the order
//! input, forget, cell candidate, output along the `4H` axis.

use std::fmt::Write as _;

use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;

use crate::error::{Error, Result};

/// Lower bound applied to the true-class probability inside the logarithm.
pub const PROB_CLAMP: f64 = 1e-12;

pub const N_CLASSES: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmColumn {
    /// `4H x D`
    pub w_input: Array2<f64>,
    /// `4H x H`
    pub w_recurrent: Array2<f64>,
    /// `4H`
    pub bias: Array1<f64>,
    /// `2 x H`
    pub head_w: Array2<f64>,
    /// `2`
    pub head_b: Array1<f64>,
    pub frozen: bool,
}

/// Activations kept by [`LstmColumn::forward_batch`] for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub inputs: Vec<Array2<f64>>,
    /// Post-activation gates, `N x 4H` per step.
    pub gates: Vec<Array2<f64>>,
    pub cells: Vec<Array2<f64>>,
    pub cells_tanh: Vec<Array2<f64>>,
    pub hidden: Vec<Array2<f64>>,
    /// Class probabilities, `N x 2` per step.
    pub probs: Vec<Array2<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w_input: Array2<f64>,
    pub w_recurrent: Array2<f64>,
    pub bias: Array1<f64>,
    pub head_w: Array2<f64>,
    pub head_b: Array1<f64>,
    /// Gradient of the loss with respect to every input step.
    pub inputs: Vec<Array2<f64>>,
}

impl Gradients {
    pub fn max_abs(&self) -> f64 {
        [&self.w_input, &self.w_recurrent, &self.head_w]
            .into_iter()
            .flat_map(|m| m.iter())
            .chain(self.bias.iter())
            .chain(self.head_b.iter())
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        [&self.w_input, &self.w_recurrent, &self.head_w]
            .into_iter()
            .flat_map(|m| m.iter())
            .chain(self.bias.iter())
            .chain(self.head_b.iter())
            .chain(self.inputs.iter().flat_map(|m| m.iter()))
            .all(|v| v.is_finite())
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Weights `Uniform(-1/sqrt(H), 1/sqrt(H))`, biases zero.
pub fn init_column(input_dim: usize, hidden_dim: usize, rng: &mut impl Rng) -> LstmColumn {
    assert!(input_dim >= 1 && hidden_dim >= 1);
    let bound = 1.0 / (hidden_dim as f64).sqrt();
    let mut uniform = |rows: usize, cols: usize| {
        Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..=bound))
    };
    let w_input = uniform(4 * hidden_dim, input_dim);
    let w_recurrent = uniform(4 * hidden_dim, hidden_dim);
    let head_w = uniform(N_CLASSES, hidden_dim);
    LstmColumn {
        w_input,
        w_recurrent,
        bias: Array1::zeros(4 * hidden_dim),
        head_w,
        head_b: Array1::zeros(N_CLASSES),
        frozen: false,
    }
}

impl LstmColumn {
    /// All-zero column; mostly useful in tests.
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            w_input: Array2::zeros((4 * hidden_dim, input_dim)),
            w_recurrent: Array2::zeros((4 * hidden_dim, hidden_dim)),
            bias: Array1::zeros(4 * hidden_dim),
            head_w: Array2::zeros((N_CLASSES, hidden_dim)),
            head_b: Array1::zeros(N_CLASSES),
            frozen: false,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_input.ncols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_recurrent.ncols()
    }

    pub fn num_params(&self) -> usize {
        self.w_input.len() + self.w_recurrent.len() + self.bias.len() + self.head_w.len() + self.head_b.len()
    }

    /// Every parameter in a fixed order: input weights, recurrent weights, gate bias, head
    /// weights, head bias.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        out.extend(self.w_input.iter());
        out.extend(self.w_recurrent.iter());
        out.extend(self.bias.iter());
        out.extend(self.head_w.iter());
        out.extend(self.head_b.iter());
        out
    }

    /// Maps a flat parameter index to (tensor, row, col); vectors use row 0.
    fn locate(&self, mut k: usize) -> (usize, usize, usize) {
        let shapes = [
            self.w_input.dim(),
            self.w_recurrent.dim(),
            (1, self.bias.len()),
            self.head_w.dim(),
            (1, self.head_b.len()),
        ];
        for (tensor, (rows, cols)) in shapes.into_iter().enumerate() {
            if k < rows * cols {
                return (tensor, k / cols, k % cols);
            }
            k -= rows * cols;
        }
        panic!("parameter index out of range");
    }

    /// Parameter `k` in [`Self::flat_params`] order.
    pub fn param(&self, k: usize) -> f64 {
        match self.locate(k) {
            (0, r, c) => self.w_input[[r, c]],
            (1, r, c) => self.w_recurrent[[r, c]],
            (2, _, c) => self.bias[c],
            (3, r, c) => self.head_w[[r, c]],
            (_, _, c) => self.head_b[c],
        }
    }

    pub fn set_param(&mut self, k: usize, value: f64) {
        let slot = match self.locate(k) {
            (0, r, c) => &mut self.w_input[[r, c]],
            (1, r, c) => &mut self.w_recurrent[[r, c]],
            (2, _, c) => &mut self.bias[c],
            (3, r, c) => &mut self.head_w[[r, c]],
            (_, _, c) => &mut self.head_b[c],
        };
        *slot = value;
    }

    pub fn is_finite(&self) -> bool {
        self.flat_params().iter().all(|v| v.is_finite())
    }

    /// Runs the recurrence over a batch of sequences starting from `h0 = c0 = 0`.
    ///
    /// `inputs[t]` is `N x D`. Panics on a width mismatch.
    pub fn forward_batch(&self, inputs: &[Array2<f64>]) -> ForwardCache {
        let h = self.hidden_dim();
        let n = inputs.first().map_or(0, |x| x.nrows());
        let steps = inputs.len();
        let mut cache = ForwardCache {
            inputs: inputs.to_vec(),
            gates: Vec::with_capacity(steps),
            cells: Vec::with_capacity(steps),
            cells_tanh: Vec::with_capacity(steps),
            hidden: Vec::with_capacity(steps),
            probs: Vec::with_capacity(steps),
        };
        let mut h_prev = Array2::<f64>::zeros((n, h));
        let mut c_prev = Array2::<f64>::zeros((n, h));
        let w_input_t = self.w_input.t();
        let w_recurrent_t = self.w_recurrent.t();
        let head_t = self.head_w.t();

        for x in inputs {
            assert_eq!(
                x.dim(),
                (n, self.input_dim()),
                "input step has shape {:?}, column expects width {}",
                x.dim(),
                self.input_dim()
            );
            let mut z = x.dot(&w_input_t);
            z += &h_prev.dot(&w_recurrent_t);
            z += &self.bias;
            for mut row in z.rows_mut() {
                for (k, v) in row.iter_mut().enumerate() {
                    *v = if (2 * h..3 * h).contains(&k) { v.tanh() } else { sigmoid(*v) };
                }
            }
            let mut c = Array2::<f64>::zeros((n, h));
            Zip::from(&mut c)
                .and(&c_prev)
                .and(z.slice(s![.., 0..h]))
                .and(z.slice(s![.., h..2 * h]))
                .and(z.slice(s![.., 2 * h..3 * h]))
                .for_each(|c, &cp, &i, &f, &g| *c = f * cp + i * g);
            let c_tanh = c.mapv(f64::tanh);
            let mut hid = Array2::<f64>::zeros((n, h));
            Zip::from(&mut hid)
                .and(z.slice(s![.., 3 * h..4 * h]))
                .and(&c_tanh)
                .for_each(|hv, &o, &ct| *hv = o * ct);

            let mut logits = hid.dot(&head_t);
            logits += &self.head_b;
            let probs = softmax_rows(logits.view());

            cache.gates.push(z);
            cache.cells.push(c.clone());
            cache.cells_tanh.push(c_tanh);
            cache.hidden.push(hid.clone());
            cache.probs.push(probs);
            h_prev = hid;
            c_prev = c;
        }
        cache
    }

    /// Single-sequence convenience wrapper: `seq` is `W x D`. Returns per-step probabilities
    /// (`W x 2`) and hidden states (`W x H`).
    pub fn forward(&self, seq: ArrayView2<'_, f64>) -> (Array2<f64>, Array2<f64>, ForwardCache) {
        let inputs: Vec<Array2<f64>> =
            seq.rows().into_iter().map(|r| r.to_owned().insert_axis(Axis(0))).collect();
        let cache = self.forward_batch(&inputs);
        let steps = inputs.len();
        let mut probs = Array2::zeros((steps, N_CLASSES));
        let mut hidden = Array2::zeros((steps, self.hidden_dim()));
        for t in 0..steps {
            probs.row_mut(t).assign(&cache.probs[t].row(0));
            hidden.row_mut(t).assign(&cache.hidden[t].row(0));
        }
        (probs, hidden, cache)
    }

    /// Exact gradients of [`loss`] with respect to every parameter and input.
    ///
    /// `labels` is `N x W`, matching the cache's batch and step counts.
    pub fn backward(&self, cache: &ForwardCache, labels: &Array2<u8>) -> Gradients {
        let h = self.hidden_dim();
        let steps = cache.inputs.len();
        let n = cache.inputs.first().map_or(0, |x| x.nrows());
        assert_eq!(labels.dim(), (n, steps), "labels shape mismatch");
        let scale = 1.0 / (n * steps) as f64;

        let mut grads = Gradients {
            w_input: Array2::zeros(self.w_input.raw_dim()),
            w_recurrent: Array2::zeros(self.w_recurrent.raw_dim()),
            bias: Array1::zeros(self.bias.raw_dim()),
            head_w: Array2::zeros(self.head_w.raw_dim()),
            head_b: Array1::zeros(self.head_b.raw_dim()),
            inputs: vec![Array2::zeros((n, self.input_dim())); steps],
        };
        let mut dh_next = Array2::<f64>::zeros((n, h));
        let mut dc_next = Array2::<f64>::zeros((n, h));
        let zeros = Array2::<f64>::zeros((n, h));

        for t in (0..steps).rev() {
            let probs = &cache.probs[t];
            let mut dlogits = Array2::<f64>::zeros((n, N_CLASSES));
            for r in 0..n {
                let y = labels[[r, t]] as usize;
                if probs[[r, y]] < PROB_CLAMP {
                    // clamped region of the loss is flat
                    continue;
                }
                for k in 0..N_CLASSES {
                    let target = if k == y { 1.0 } else { 0.0 };
                    dlogits[[r, k]] = (probs[[r, k]] - target) * scale;
                }
            }
            let hid = &cache.hidden[t];
            grads.head_w += &dlogits.t().dot(hid);
            grads.head_b += &dlogits.sum_axis(Axis(0));

            let mut dh = dlogits.dot(&self.head_w);
            dh += &dh_next;

            let gates = &cache.gates[t];
            let c_tanh = &cache.cells_tanh[t];
            let c_prev = if t > 0 { &cache.cells[t - 1] } else { &zeros };
            let h_prev = if t > 0 { &cache.hidden[t - 1] } else { &zeros };

            let mut dz = Array2::<f64>::zeros((n, 4 * h));
            for r in 0..n {
                for k in 0..h {
                    let i = gates[[r, k]];
                    let f = gates[[r, h + k]];
                    let g = gates[[r, 2 * h + k]];
                    let o = gates[[r, 3 * h + k]];
                    let ct = c_tanh[[r, k]];
                    let dhv = dh[[r, k]];
                    let dc = dhv * o * (1.0 - ct * ct) + dc_next[[r, k]];
                    dz[[r, k]] = dc * g * i * (1.0 - i);
                    dz[[r, h + k]] = dc * c_prev[[r, k]] * f * (1.0 - f);
                    dz[[r, 2 * h + k]] = dc * i * (1.0 - g * g);
                    dz[[r, 3 * h + k]] = dhv * ct * o * (1.0 - o);
                    dc_next[[r, k]] = dc * f;
                }
            }
            let dz_t = dz.t();
            grads.w_input += &dz_t.dot(&cache.inputs[t]);
            grads.w_recurrent += &dz_t.dot(h_prev);
            grads.bias += &dz.sum_axis(Axis(0));
            grads.inputs[t] = dz.dot(&self.w_input);
            dh_next = dz.dot(&self.w_recurrent);
        }
        grads
    }

    /// Plain gradient descent, `theta -= lr * grad`.
    pub fn sgd_step(&mut self, grads: &Gradients, lr: f64) -> Result<()> {
        if self.frozen {
            return Err(Error::FrozenColumn);
        }
        self.w_input.scaled_add(-lr, &grads.w_input);
        self.w_recurrent.scaled_add(-lr, &grads.w_recurrent);
        self.bias.scaled_add(-lr, &grads.bias);
        self.head_w.scaled_add(-lr, &grads.head_w);
        self.head_b.scaled_add(-lr, &grads.head_b);
        Ok(())
    }

    /// Text snapshot: a header line `lstm-column <D> <H> <frozen>` followed by one line per
    /// tensor, `name rows cols v...`, values in shortest round-trip notation.
    pub fn snapshot(&self) -> String {
        let mut out = format!("lstm-column {} {} {}\n", self.input_dim(), self.hidden_dim(), self.frozen);
        let tensors: [(&str, usize, usize, Vec<f64>); 5] = [
            ("w_input", self.w_input.nrows(), self.w_input.ncols(), self.w_input.iter().copied().collect()),
            (
                "w_recurrent",
                self.w_recurrent.nrows(),
                self.w_recurrent.ncols(),
                self.w_recurrent.iter().copied().collect(),
            ),
            ("bias", 1, self.bias.len(), self.bias.to_vec()),
            ("head_w", self.head_w.nrows(), self.head_w.ncols(), self.head_w.iter().copied().collect()),
            ("head_b", 1, self.head_b.len(), self.head_b.to_vec()),
        ];
        for (name, rows, cols, values) in tensors {
            let _ = write!(out, "{name} {rows} {cols}");
            for v in values {
                let _ = write!(out, " {v:?}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_snapshot(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Snapshot(msg.to_string());
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty"))?.split_whitespace().collect();
        if header.len() != 4 || header[0] != "lstm-column" {
            return Err(bad("bad header"));
        }
        let d: usize = header[1].parse().map_err(|_| bad("bad input dim"))?;
        let h: usize = header[2].parse().map_err(|_| bad("bad hidden dim"))?;
        let frozen: bool = header[3].parse().map_err(|_| bad("bad frozen flag"))?;

        let mut read = |name: &str, rows: usize, cols: usize| -> Result<Vec<f64>> {
            let line = lines.next().ok_or_else(|| bad("truncated"))?;
            let mut it = line.split_whitespace();
            if it.next() != Some(name) {
                return Err(Error::Snapshot(format!("expected tensor `{name}`")));
            }
            let r: usize = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad("bad rows"))?;
            let c: usize = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad("bad cols"))?;
            if (r, c) != (rows, cols) {
                return Err(Error::Snapshot(format!("tensor `{name}` has shape {r}x{c}")));
            }
            let values = it.map(|v| v.parse::<f64>()).collect::<std::result::Result<Vec<_>, _>>().map_err(|_| bad("bad value"))?;
            if values.len() != rows * cols {
                return Err(Error::Snapshot(format!("tensor `{name}` has {} values", values.len())));
            }
            Ok(values)
        };
        let to2 = |v: Vec<f64>, r: usize, c: usize| Array2::from_shape_vec((r, c), v).expect("checked shape");
        let w_input = to2(read("w_input", 4 * h, d)?, 4 * h, d);
        let w_recurrent = to2(read("w_recurrent", 4 * h, h)?, 4 * h, h);
        let bias = Array1::from(read("bias", 1, 4 * h)?);
        let head_w = to2(read("head_w", N_CLASSES, h)?, N_CLASSES, h);
        let head_b = Array1::from(read("head_b", 1, N_CLASSES)?);
        Ok(Self { w_input, w_recurrent, bias, head_w, head_b, frozen })
    }
}

fn softmax_rows(logits: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = logits.to_owned();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

/// Mean cross-entropy over every (sequence, step) pair. `probs[t]` is `N x 2`, `labels` `N x W`.
pub fn loss(probs: &[Array2<f64>], labels: &Array2<u8>) -> f64 {
    let (n, steps) = labels.dim();
    assert_eq!(probs.len(), steps, "step count mismatch");
    let mut total = 0.0;
    for (t, p) in probs.iter().enumerate() {
        assert_eq!(p.nrows(), n, "sequence count mismatch");
        for r in 0..n {
            total -= p[[r, labels[[r, t]] as usize]].max(PROB_CLAMP).ln();
        }
    }
    total / (n * steps) as f64
}

impl Gradients {
    /// Parameter gradients in the same order as [`LstmColumn::flat_params`].
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        out.extend(self.w_input.iter());
        out.extend(self.w_recurrent.iter());
        out.extend(self.bias.iter());
        out.extend(self.head_w.iter());
        out.extend(self.head_b.iter());
        out
    }
}

/// Largest relative error between [`LstmColumn::backward`] and central finite differences of
/// [`loss`], over every parameter and every input component.
///
/// Relative error is `|a - n| / max(|a|, |n|, floor)`.
pub fn gradient_check(col: &LstmColumn, inputs: &[Array2<f64>], labels: &Array2<u8>, eps: f64, floor: f64) -> f64 {
    let cache = col.forward_batch(inputs);
    let grads = col.backward(&cache, labels);
    let loss_of = |c: &LstmColumn, x: &[Array2<f64>]| loss(&c.forward_batch(x).probs, labels);
    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(floor);

    let mut worst = 0.0f64;
    let analytic = grads.flat_params();
    let mut probe = col.clone();
    for (k, &a) in analytic.iter().enumerate() {
        let orig = probe.param(k);
        probe.set_param(k, orig + eps);
        let up = loss_of(&probe, inputs);
        probe.set_param(k, orig - eps);
        let down = loss_of(&probe, inputs);
        probe.set_param(k, orig);
        worst = worst.max(rel(a, (up - down) / (2.0 * eps)));
    }
    let mut x = inputs.to_vec();
    for t in 0..x.len() {
        for idx in 0..x[t].len() {
            let (r, c) = (idx / x[t].ncols(), idx % x[t].ncols());
            let orig = x[t][[r, c]];
            x[t][[r, c]] = orig + eps;
            let up = loss_of(col, &x);
            x[t][[r, c]] = orig - eps;
            let down = loss_of(col, &x);
            x[t][[r, c]] = orig;
            worst = worst.max(rel(grads.inputs[t][[r, c]], (up - down) / (2.0 * eps)));
        }
    }
    worst
}
