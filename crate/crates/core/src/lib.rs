//! Continuous progressive neural networks (cPNN) for evolving streaming time series.
//!
//! The crate contains everything needed to run the prequential ablation study end to end:
//!
//! * [`streamgen`]: random-walk SINE streams with abrupt concept drifts,
//! * [`windowing`]: batch buffering and sliding-window sequence construction,
//! * [`rnn`]: an LSTM column with a per-step softmax head and exact BPTT,
//! * [`progressive`]: the column stack (cPNN, mcLSTM, cLSTM),
//! * [`prequential`]: the test-then-train loop and per-concept evaluation cases,
//! * [`stats`]: the pairwise significance protocol used to rank architectures,
//! * [`io`]: CSV schemas and the text report.

pub mod error;
pub mod io;
pub mod prequential;
pub mod progressive;
pub mod rnn;
pub mod seed;
pub mod stats;
pub mod streamgen;
pub mod windowing;

pub use error::{Error, Result};
pub use prequential::{BatchRecord, Case, TrainConfig};
pub use progressive::{Mode, ProgressiveNet};
pub use rnn::LstmColumn;
pub use streamgen::{ClassificationFn, DriftScenario, LabeledPoint, WalkConfig};
pub use windowing::{BatchBuffer, SequenceBatch};
