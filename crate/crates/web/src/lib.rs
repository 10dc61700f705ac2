//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Three operations are exposed: generating a drifting stream, measuring label agreement
//! between the four concept functions, and racing the three architectures batch by batch.
//! Each has a plain Rust form used by the native tests and a thin `wasm_bindgen` wrapper.

use cpnn::prequential::Prequential;
use cpnn::seed::{generator_seed, model_seed, rng_from_seed};
use cpnn::streamgen::{generate_concept, generate_scenario, label_agreement};
use cpnn::{ClassificationFn, DriftScenario, LabeledPoint, Mode, ProgressiveNet, TrainConfig, WalkConfig};
use wasm_bindgen::prelude::*;

/// Values per point in [`stream_points`]: `x1, x2, y, concept`.
pub const POINT_STRIDE: usize = 4;
/// Values per record in [`Race::step`]: `mode, concept, batch_index, accuracy`.
pub const RECORD_STRIDE: usize = 4;

pub const FUNCTIONS: [ClassificationFn; 4] =
    [ClassificationFn::S1_PLUS, ClassificationFn::S1_MINUS, ClassificationFn::S2_PLUS, ClassificationFn::S2_MINUS];

fn walk(scenario: &DriftScenario, seed: u64, step_max: f64) -> WalkConfig {
    WalkConfig { step_max, ..WalkConfig::new(generator_seed(seed, &scenario.spec())) }
}

fn stream(spec: &str, points_per_concept: usize, seed: u64, step_max: f64) -> Result<Vec<LabeledPoint>, String> {
    let scenario = DriftScenario::parse(spec, points_per_concept).map_err(|e| e.to_string())?;
    generate_scenario(&scenario, &walk(&scenario, seed, step_max)).map_err(|e| e.to_string())
}

/// The stream of `seed`, flattened as `x1, x2, y, concept` per point.
pub fn stream_points(spec: &str, points_per_concept: usize, seed: u64, step_max: f64) -> Result<Vec<f64>, String> {
    Ok(stream(spec, points_per_concept, seed, step_max)?
        .iter()
        .flat_map(|p| [p.x1, p.x2, f64::from(p.y), p.concept as f64])
        .collect())
}

/// Row-major 4x4 matrix of label agreement between s1+, s1-, s2+, s2- on one walk of `n`
/// points generated under s1+.
pub fn agreement_matrix(n: usize, seed: u64, step_max: f64) -> Result<Vec<f64>, String> {
    let cfg = WalkConfig { step_max, ..WalkConfig::new(seed) };
    let points = generate_concept(ClassificationFn::S1_PLUS, n, &cfg, rng_from_seed(seed), None).map_err(|e| e.to_string())?;
    Ok(FUNCTIONS
        .iter()
        .flat_map(|&a| FUNCTIONS.iter().map(move |&b| (a, b)))
        .map(|(a, b)| label_agreement(&points, a, b))
        .collect())
}

/// All three architectures learning the same stream, advanced a few points at a time.
#[wasm_bindgen]
pub struct Race {
    points: Vec<LabeledPoint>,
    position: usize,
    lanes: Vec<(Mode, ProgressiveNet, Prequential)>,
}

impl Race {
    pub fn create(spec: &str, points_per_concept: usize, seed: u64, hidden: usize, epochs: usize, lr: f64) -> Result<Race, String> {
        if hidden == 0 || epochs == 0 {
            return Err("hidden size and epochs must be positive".into());
        }
        let points = stream(spec, points_per_concept, seed, WalkConfig::DEFAULT_STEP_MAX)?;
        let cfg = TrainConfig { epochs, lr, ..TrainConfig::default() };
        let lanes = Mode::ALL
            .iter()
            .map(|&mode| {
                let net = ProgressiveNet::new(mode, hidden, rng_from_seed(model_seed(seed, mode.as_str())));
                Ok((mode, net, Prequential::new(cfg).map_err(|e| e.to_string())?))
            })
            .collect::<Result<Vec<_>, String>>()?;
        Ok(Race { points, position: 0, lanes })
    }

    /// Feeds up to `max_points` more points to every lane; returns the finished batches as
    /// `mode, concept, batch_index, accuracy` tuples with modes indexed cpnn, clstm, mclstm.
    pub fn advance(&mut self, max_points: usize) -> Result<Vec<f64>, String> {
        let end = (self.position + max_points).min(self.points.len());
        let mut out = Vec::new();
        for &point in &self.points[self.position..end] {
            for (lane, (_, net, runner)) in self.lanes.iter_mut().enumerate() {
                for r in runner.push(net, point).map_err(|e| e.to_string())? {
                    out.extend([lane as f64, r.concept as f64, r.batch_index as f64, r.accuracy]);
                }
            }
        }
        self.position = end;
        Ok(out)
    }
}

#[wasm_bindgen]
impl Race {
    #[wasm_bindgen(constructor)]
    pub fn new(spec: &str, points_per_concept: usize, seed: u64, hidden: usize, epochs: usize, lr: f64) -> Result<Race, JsError> {
        Race::create(spec, points_per_concept, seed, hidden, epochs, lr).map_err(|e| JsError::new(&e))
    }

    pub fn step(&mut self, max_points: usize) -> Result<Vec<f64>, JsError> {
        self.advance(max_points).map_err(|e| JsError::new(&e))
    }

    pub fn done(&self) -> bool {
        self.position >= self.points.len()
    }

    pub fn position(&self) -> usize {
        self.position
    }

    pub fn total(&self) -> usize {
        self.points.len()
    }

    /// Columns currently held by each lane.
    pub fn columns(&self) -> Vec<u32> {
        self.lanes.iter().map(|(_, net, _)| net.num_columns() as u32).collect()
    }

    #[wasm_bindgen(js_name = modeLabels)]
    pub fn mode_labels(&self) -> Vec<String> {
        self.lanes.iter().map(|(m, _, _)| m.label().to_string()).collect()
    }
}

#[wasm_bindgen(js_name = generateStream)]
pub fn generate_stream_js(spec: &str, points_per_concept: usize, seed: u64, step_max: f64) -> Result<Vec<f64>, JsError> {
    stream_points(spec, points_per_concept, seed, step_max).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = agreementMatrix)]
pub fn agreement_matrix_js(n: usize, seed: u64, step_max: f64) -> Result<Vec<f64>, JsError> {
    agreement_matrix(n, seed, step_max).map_err(|e| JsError::new(&e))
}
