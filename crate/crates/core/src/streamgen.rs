//! Random-walk variant of the SINE generator.
//!
//! Each coordinate follows a bounded random walk inside `(0, 1)`, so consecutive points are
//! strongly autocorrelated. Labels come from one of four classification functions built on the
//! two SINE boundary curves, and the number of consecutive identical labels is capped.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed};

/// Attempts at drawing a label-flipping step before the forced crossing kicks in.
pub const FLIP_RETRIES: usize = 1000;

/// A forced crossing lands on the far side of the boundary at this fraction of the distance the
/// rejected candidate had on the near side.
pub const CROSSING_DAMPING: f64 = 0.25;

/// One element of the stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledPoint {
    pub x1: f64,
    pub x2: f64,
    pub y: u8,
    pub concept: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    S1,
    S2,
}

impl Boundary {
    /// The `x1` coordinate of the boundary curve at `x2`.
    pub fn curve(self, x2: f64) -> f64 {
        match self {
            Boundary::S1 => x2.sin(),
            Boundary::S2 => 0.5 + 0.3 * (3.0 * std::f64::consts::PI * x2).sin(),
        }
    }

    /// Signed boundary value; non-negative means "above" the curve.
    pub fn value(self, x1: f64, x2: f64) -> f64 {
        x1 - self.curve(x2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

/// Boundary curve plus orientation. `Plus` labels points on or above the curve with 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClassificationFn {
    pub boundary: Boundary,
    pub sign: Sign,
}

impl ClassificationFn {
    pub const S1_PLUS: Self = Self::new(Boundary::S1, Sign::Plus);
    pub const S1_MINUS: Self = Self::new(Boundary::S1, Sign::Minus);
    pub const S2_PLUS: Self = Self::new(Boundary::S2, Sign::Plus);
    pub const S2_MINUS: Self = Self::new(Boundary::S2, Sign::Minus);

    pub const fn new(boundary: Boundary, sign: Sign) -> Self {
        Self { boundary, sign }
    }

    pub fn classify(&self, x1: f64, x2: f64) -> u8 {
        let above = u8::from(self.boundary.value(x1, x2) >= 0.0);
        match self.sign {
            Sign::Plus => above,
            Sign::Minus => 1 - above,
        }
    }

    /// Same boundary, opposite labels.
    pub fn inverted(&self) -> Self {
        let sign = match self.sign {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        };
        Self::new(self.boundary, sign)
    }
}

impl fmt::Display for ClassificationFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = match self.boundary {
            Boundary::S1 => "s1",
            Boundary::S2 => "s2",
        };
        let s = match self.sign {
            Sign::Plus => '+',
            Sign::Minus => '-',
        };
        write!(f, "{b}{s}")
    }
}

impl FromStr for ClassificationFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "s1+" => Ok(Self::S1_PLUS),
            "s1-" => Ok(Self::S1_MINUS),
            "s2+" => Ok(Self::S2_PLUS),
            "s2-" => Ok(Self::S2_MINUS),
            other => Err(Error::Scenario(format!("unknown classification function `{other}`"))),
        }
    }
}

/// Ordered concepts of a stream with abrupt drifts between them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DriftScenario {
    concepts: Vec<ClassificationFn>,
    points_per_concept: usize,
}

impl DriftScenario {
    /// Two concepts model a classification inversion drift, four a boundary function drift.
    pub fn new(concepts: Vec<ClassificationFn>, points_per_concept: usize) -> Result<Self> {
        if concepts.len() != 2 && concepts.len() != 4 {
            return Err(Error::Scenario(format!(
                "expected 2 or 4 concepts, got {}",
                concepts.len()
            )));
        }
        if points_per_concept == 0 {
            return Err(Error::Scenario("points per concept must be positive".into()));
        }
        Ok(Self { concepts, points_per_concept })
    }

    /// Parses `s1+,s2-,s1-,s2+` style specifications.
    pub fn parse(spec: &str, points_per_concept: usize) -> Result<Self> {
        let concepts = spec
            .split(',')
            .map(str::parse)
            .collect::<Result<Vec<ClassificationFn>>>()?;
        Self::new(concepts, points_per_concept)
    }

    pub fn concepts(&self) -> &[ClassificationFn] {
        &self.concepts
    }

    pub fn points_per_concept(&self) -> usize {
        self.points_per_concept
    }

    pub fn total_points(&self) -> usize {
        self.concepts.len() * self.points_per_concept
    }

    /// Canonical specification string, e.g. `s1+,s1-`.
    pub fn spec(&self) -> String {
        self.concepts.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkConfig {
    /// Per-coordinate steps are drawn from `Uniform(0, step_max)`.
    pub step_max: f64,
    /// Longest allowed run of identical labels.
    pub max_run: usize,
    pub seed: u64,
}

impl WalkConfig {
    pub const DEFAULT_STEP_MAX: f64 = 0.1;
    pub const DEFAULT_MAX_RUN: usize = 10;

    pub fn new(seed: u64) -> Self {
        Self { step_max: Self::DEFAULT_STEP_MAX, max_run: Self::DEFAULT_MAX_RUN, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_max > 0.0 && self.step_max.is_finite()) {
            return Err(Error::WalkConfig(format!("step_max must be positive, got {}", self.step_max)));
        }
        if self.max_run < 1 {
            return Err(Error::WalkConfig("max_run must be at least 1".into()));
        }
        Ok(())
    }
}

fn in_unit(v: f64) -> bool {
    v > 0.0 && v < 1.0
}

/// Applies a step of magnitude `delta` to `prev`, preferring the direction `positive`.
///
/// The sign is flipped when the preferred direction would leave `(0, 1)`. Returns `None` when
/// neither direction stays inside the interval.
pub fn step_within(prev: f64, delta: f64, positive: bool) -> Option<f64> {
    let (first, second) = if positive { (prev + delta, prev - delta) } else { (prev - delta, prev + delta) };
    if in_unit(first) {
        Some(first)
    } else if in_unit(second) {
        Some(second)
    } else {
        None
    }
}

/// One random-walk step of a single coordinate.
pub fn random_walk_next(prev: f64, cfg: &WalkConfig, rng: &mut impl Rng) -> f64 {
    debug_assert!(in_unit(prev));
    loop {
        let delta = rng.random_range(0.0..cfg.step_max);
        let positive = rng.random_bool(0.5);
        if let Some(next) = step_within(prev, delta, positive) {
            return next;
        }
    }
}

/// Stateful generator of a single concept.
pub struct Walker {
    func: ClassificationFn,
    cfg: WalkConfig,
    rng: ChaCha8Rng,
    concept: usize,
    last: Option<LabeledPoint>,
    run: usize,
    start: Option<(f64, f64)>,
}

impl Walker {
    pub fn new(
        func: ClassificationFn,
        concept: usize,
        cfg: WalkConfig,
        rng: ChaCha8Rng,
        start: Option<(f64, f64)>,
    ) -> Result<Self> {
        cfg.validate()?;
        if let Some((x1, x2)) = start {
            if !in_unit(x1) || !in_unit(x2) {
                return Err(Error::Generation(format!("start point ({x1}, {x2}) outside (0,1)^2")));
            }
        }
        Ok(Self { func, cfg, rng, concept, last: None, run: 0, start })
    }

    fn point(&self, x1: f64, x2: f64) -> LabeledPoint {
        LabeledPoint { x1, x2, y: self.func.classify(x1, x2), concept: self.concept }
    }

    fn candidate(&mut self, prev: &LabeledPoint) -> (f64, f64) {
        let x1 = random_walk_next(prev.x1, &self.cfg, &mut self.rng);
        let x2 = random_walk_next(prev.x2, &self.cfg, &mut self.rng);
        (x1, x2)
    }

    /// Moves a candidate that kept the previous label to the other side of the boundary,
    /// along `x1` only.
    fn force_crossing(&self, x1: f64, x2: f64, label: u8) -> Result<(f64, f64)> {
        let curve = self.func.boundary.curve(x2);
        let mut crossed = curve - CROSSING_DAMPING * (x1 - curve);
        let flips = |v: f64| in_unit(v) && self.func.classify(v, x2) != label;
        if !flips(crossed) {
            // mirror fell outside the unit interval or onto the curve itself
            crossed = if x1 >= curve { curve / 2.0 } else { (curve + 1.0) / 2.0 };
        }
        if flips(crossed) {
            Ok((crossed, x2))
        } else {
            Err(Error::Generation(format!(
                "cannot flip label {label} at ({x1}, {x2}) after {FLIP_RETRIES} retries"
            )))
        }
    }

    pub fn next_point(&mut self) -> Result<LabeledPoint> {
        let Some(prev) = self.last else {
            let (x1, x2) = match self.start {
                Some(p) => p,
                None => (self.open_unit(), self.open_unit()),
            };
            let p = self.point(x1, x2);
            self.last = Some(p);
            self.run = 1;
            return Ok(p);
        };

        let (mut x1, mut x2) = self.candidate(&prev);
        if self.run >= self.cfg.max_run {
            let mut retries = 0;
            while self.func.classify(x1, x2) == prev.y && retries < FLIP_RETRIES {
                (x1, x2) = self.candidate(&prev);
                retries += 1;
            }
            if self.func.classify(x1, x2) == prev.y {
                (x1, x2) = self.force_crossing(x1, x2, prev.y)?;
            }
        }

        let p = self.point(x1, x2);
        self.run = if p.y == prev.y { self.run + 1 } else { 1 };
        self.last = Some(p);
        Ok(p)
    }

    fn open_unit(&mut self) -> f64 {
        loop {
            let v: f64 = self.rng.random();
            if v > 0.0 {
                return v;
            }
        }
    }
}

/// Generates `n` points of one concept.
pub fn generate_concept(
    func: ClassificationFn,
    n: usize,
    cfg: &WalkConfig,
    rng: ChaCha8Rng,
    start: Option<(f64, f64)>,
) -> Result<Vec<LabeledPoint>> {
    generate_concept_with_id(func, 0, n, cfg, rng, start)
}

fn generate_concept_with_id(
    func: ClassificationFn,
    concept: usize,
    n: usize,
    cfg: &WalkConfig,
    rng: ChaCha8Rng,
    start: Option<(f64, f64)>,
) -> Result<Vec<LabeledPoint>> {
    if n == 0 {
        return Err(Error::Generation("a concept needs at least one point".into()));
    }
    let mut walker = Walker::new(func, concept, *cfg, rng, start)?;
    (0..n).map(|_| walker.next_point()).collect()
}

/// Concatenates the concepts of `scenario`; concept `k` gets its own substream of `cfg.seed`.
///
/// The walk continues through each drift: the first point of a concept repeats the position of
/// the last point of the previous concept, relabelled by the new function.
pub fn generate_scenario(scenario: &DriftScenario, cfg: &WalkConfig) -> Result<Vec<LabeledPoint>> {
    let mut out = Vec::with_capacity(scenario.total_points());
    let mut start = None;
    for (k, func) in scenario.concepts().iter().enumerate() {
        let rng = rng_from_seed(derive_seed(cfg.seed, &["concept", &k.to_string()]));
        let points =
            generate_concept_with_id(*func, k, scenario.points_per_concept(), cfg, rng, start)?;
        let last = points.last().expect("non-empty concept");
        start = Some((last.x1, last.x2));
        out.extend(points);
    }
    Ok(out)
}

/// Lengths of maximal runs of identical labels, in stream order.
pub fn label_runs(points: &[LabeledPoint]) -> Vec<usize> {
    let mut runs = Vec::new();
    let mut iter = points.iter();
    let Some(first) = iter.next() else {
        return runs;
    };
    let mut current = first.y;
    let mut len = 1;
    for p in iter {
        if p.y == current {
            len += 1;
        } else {
            runs.push(len);
            current = p.y;
            len = 1;
        }
    }
    runs.push(len);
    runs
}

/// Fraction of points whose label is the same under both functions.
pub fn label_agreement(points: &[LabeledPoint], a: ClassificationFn, b: ClassificationFn) -> f64 {
    if points.is_empty() {
        return f64::NAN;
    }
    let same = points.iter().filter(|p| a.classify(p.x1, p.x2) == b.classify(p.x1, p.x2)).count();
    same as f64 / points.len() as f64
}

/// Lag-1 sample autocorrelation.
pub fn lag1_autocorrelation(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let denom: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    let num: f64 = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    num / denom
}
