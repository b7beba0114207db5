//! From impedance loci to network inputs.
//!
//! A locus is rasterized onto an `n × n` R-X image, reduced to a feature
//! vector, and scaled per feature into `[0.1, 0.9]` with extrema taken from the
//! training rows. [`build_dataset`] runs the whole chain for a list of fault
//! scenarios.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netmodel::{
    prefault_solution, samples_per_cycle, solve_slg_fault, synthesize_waveforms, FaultScenario, NetError, Network,
    SamplingSpec, WaveformSet,
};
use crate::relay::{track_locus, ImpedanceLocus, RelayError};
use crate::{Phasor, PhasorExt};

/// Lower end of the normalized scale.
pub const NORM_LO: f64 = 0.1;
/// Upper end of the normalized scale.
pub const NORM_HI: f64 = 0.9;

/// Chords shorter than this (relative to the impedance magnitude) carry no
/// direction.
const MIN_CHORD_REL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Relay(#[from] RelayError),
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum FeatureError {
    #[error("locus is empty")]
    EmptyLocus,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid raster: {0}")]
    InvalidRaster(&'static str),
    #[error("invalid split ratios")]
    InvalidSplit,
    #[error("scenario at {distance_km} km, {rf_ohm} ohm: {source}")]
    Scenario {
        distance_km: f64,
        rf_ohm: f64,
        #[source]
        source: SimError,
    },
}

/// Visible part of the R-X plane, in ohms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RasterWindow {
    pub r_min: f64,
    pub r_max: f64,
    pub x_min: f64,
    pub x_max: f64,
}

impl RasterWindow {
    fn validate(&self) -> Result<(), FeatureError> {
        if !(self.r_max > self.r_min && self.x_max > self.x_min) {
            return Err(FeatureError::InvalidRaster("window must have positive extent"));
        }
        Ok(())
    }

    fn contains(&self, r: f64, x: f64) -> bool {
        r >= self.r_min && r <= self.r_max && x >= self.x_min && x <= self.x_max
    }
}

impl Default for RasterWindow {
    fn default() -> Self {
        Self {
            r_min: -10.0,
            r_max: 120.0,
            x_min: -10.0,
            x_max: 60.0,
        }
    }
}

/// Visit counts of a locus drawn on an `n × n` grid, row 0 at `x_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterImage {
    /// Row-major counts.
    pub grid: Vec<u32>,
    pub window: RasterWindow,
    pub n: usize,
}

impl RasterImage {
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.grid[row * self.n + col]
    }

    pub fn lit_pixels(&self) -> usize {
        self.grid.iter().filter(|&&c| c > 0).count()
    }

    fn pixel_of(&self, r: f64, x: f64) -> (i64, i64) {
        let w = &self.window;
        let n = self.n as f64;
        let cell = |t: f64| (libm::floor(t * n) as i64).clamp(0, self.n as i64 - 1);
        let col = cell((r - w.r_min) / (w.r_max - w.r_min));
        let row = cell((w.x_max - x) / (w.x_max - w.x_min));
        (row, col)
    }
}

/// Clip the segment `p → q` to the window (Liang-Barsky).
fn clip_segment(w: &RasterWindow, p: (f64, f64), q: (f64, f64)) -> Option<((f64, f64), (f64, f64))> {
    let (dr, dx) = (q.0 - p.0, q.1 - p.1);
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (denom, num) in [
        (-dr, p.0 - w.r_min),
        (dr, w.r_max - p.0),
        (-dx, p.1 - w.x_min),
        (dx, w.x_max - p.1),
    ] {
        if denom == 0.0 {
            if num < 0.0 {
                return None;
            }
        } else {
            let t = num / denom;
            if denom < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
        }
    }
    if t0 > t1 {
        return None;
    }
    let at = |t: f64, end: (f64, f64), edge: f64| if t == edge { end } else { (p.0 + t * dr, p.1 + t * dx) };
    Some((at(t0, p, 0.0), at(t1, q, 1.0)))
}

/// Pixels of the discrete line between two cells, both ends included.
pub fn bresenham(from: (i64, i64), to: (i64, i64)) -> Vec<(i64, i64)> {
    let (mut r, mut c) = from;
    let dr = (to.0 - r).abs();
    let dc = -(to.1 - c).abs();
    let sr = if r < to.0 { 1 } else { -1 };
    let sc = if c < to.1 { 1 } else { -1 };
    let mut err = dr + dc;
    let mut out = Vec::with_capacity((dr.max(-dc) + 1) as usize);
    loop {
        out.push((r, c));
        if r == to.0 && c == to.1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dc {
            err += dc;
            r += sr;
        }
        if e2 <= dr {
            err += dr;
            c += sc;
        }
    }
    out
}

/// Draw the locus as a connected pixel walk.
///
/// A pixel's count goes up each time the walk enters it; staying inside the
/// same pixel is one visit. Portions outside the window are clipped away.
pub fn rasterize_locus(locus: &ImpedanceLocus, window: &RasterWindow, n: usize) -> Result<RasterImage, FeatureError> {
    if locus.is_empty() {
        return Err(FeatureError::EmptyLocus);
    }
    if n < 8 {
        return Err(FeatureError::InvalidRaster("grid side must be at least 8"));
    }
    window.validate()?;
    let mut image = RasterImage {
        grid: vec![0; n * n],
        window: *window,
        n,
    };
    let pts: Vec<(f64, f64)> = locus.points.iter().map(|p| (p.z.re, p.z.im)).collect();

    let mut walk: Vec<Option<(i64, i64)>> = Vec::new();
    if pts.len() == 1 {
        if window.contains(pts[0].0, pts[0].1) {
            walk.push(Some(image.pixel_of(pts[0].0, pts[0].1)));
        }
    } else {
        for seg in pts.windows(2) {
            match clip_segment(window, seg[0], seg[1]) {
                Some((a, b)) => {
                    let pa = image.pixel_of(a.0, a.1);
                    let pb = image.pixel_of(b.0, b.1);
                    walk.extend(bresenham(pa, pb).into_iter().map(Some));
                    if b != seg[1] {
                        walk.push(None);
                    }
                }
                None => walk.push(None),
            }
        }
    }

    let mut prev = None;
    for cell in walk {
        if let Some((row, col)) = cell {
            if prev != Some((row, col)) {
                image.grid[row as usize * n + col as usize] += 1;
            }
        }
        prev = cell;
    }
    Ok(image)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMode {
    /// Settled R and X, locus arc length, approach angle.
    #[default]
    Focal,
    /// Binary raster, row-major.
    Pixels,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub mode: FeatureMode,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

/// Component-wise median of the last `window` locus points.
pub fn settled_point(locus: &ImpedanceLocus, window: usize) -> Result<Phasor, FeatureError> {
    if locus.is_empty() {
        return Err(FeatureError::EmptyLocus);
    }
    let tail = &locus.points[locus.len().saturating_sub(window.max(1))..];
    let mut rs: Vec<f64> = tail.iter().map(|p| p.z.re).collect();
    let mut xs: Vec<f64> = tail.iter().map(|p| p.z.im).collect();
    Ok(Phasor::new(median(&mut rs), median(&mut xs)))
}

/// Feature vector of one locus.
///
/// In focal mode, `settle_window` is the number of trailing points (one
/// cycle) whose median gives the settled fault impedance. The approach angle
/// is the direction of the last chord that actually moves; a stationary locus
/// has angle 0.
pub fn extract_features(
    locus: &ImpedanceLocus,
    image: &RasterImage,
    mode: FeatureMode,
    settle_window: usize,
) -> Result<FeatureVector, FeatureError> {
    if locus.is_empty() {
        return Err(FeatureError::EmptyLocus);
    }
    let values = match mode {
        FeatureMode::Focal => {
            let settled = settled_point(locus, settle_window)?;
            let arc: f64 = locus.points.windows(2).map(|w| (w[1].z - w[0].z).magnitude()).sum();
            let angle = locus
                .points
                .windows(2)
                .rev()
                .map(|w| w[1].z - w[0].z)
                .zip(locus.points.iter().rev())
                .find(|(chord, p)| chord.magnitude() > MIN_CHORD_REL * p.z.magnitude().max(1.0))
                .map(|(chord, _)| libm::atan2(chord.im, chord.re).to_degrees())
                .unwrap_or(0.0);
            vec![settled.re, settled.im, arc, angle]
        }
        FeatureMode::Pixels => image.grid.iter().map(|&c| if c > 0 { 1.0 } else { 0.0 }).collect(),
    };
    Ok(FeatureVector { values, mode })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRange {
    pub min: f64,
    pub max: f64,
}

impl FeatureRange {
    pub fn is_degenerate(&self) -> bool {
        self.max == self.min
    }

    fn forward(&self, x: f64, lo: f64, hi: f64) -> f64 {
        if self.is_degenerate() {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * ((x - self.min) / (self.max - self.min))
        }
    }

    fn inverse(&self, y: f64, lo: f64, hi: f64) -> f64 {
        if self.is_degenerate() {
            self.min
        } else {
            self.min + (self.max - self.min) * ((y - lo) / (hi - lo))
        }
    }
}

/// Min-max scaling of every feature and of the target into `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub features: Vec<FeatureRange>,
    pub target: FeatureRange,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

impl NormalizationParams {
    pub fn dim(&self) -> usize {
        self.features.len()
    }

    pub fn degenerate_features(&self) -> Vec<usize> {
        self.features
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_degenerate())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn forward_target(&self, km: f64) -> f64 {
        self.target.forward(km, self.lo, self.hi)
    }

    pub fn inverse_target(&self, y: f64) -> f64 {
        self.target.inverse(y, self.lo, self.hi)
    }

    pub fn apply(&self, values: &[f64], direction: Direction) -> Result<Vec<f64>, FeatureError> {
        if values.len() != self.dim() {
            return Err(FeatureError::DimensionMismatch {
                expected: self.dim(),
                got: values.len(),
            });
        }
        Ok(values
            .iter()
            .zip(&self.features)
            .map(|(&x, r)| match direction {
                Direction::Forward => r.forward(x, self.lo, self.hi),
                Direction::Inverse => r.inverse(x, self.lo, self.hi),
            })
            .collect())
    }
}

/// Scale a feature vector. Values outside the fitted range extrapolate.
pub fn apply_normalizer(
    x: &FeatureVector,
    params: &NormalizationParams,
    direction: Direction,
) -> Result<FeatureVector, FeatureError> {
    Ok(FeatureVector {
        values: params.apply(&x.values, direction)?,
        mode: x.mode,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Split::Train),
            "validation" => Some(Split::Validation),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub features: FeatureVector,
    pub target_km: f64,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub rows: Vec<DatasetRow>,
    pub seed: u64,
}

impl Dataset {
    pub fn feature_dim(&self) -> usize {
        self.rows.first().map_or(0, |r| r.features.len())
    }

    pub fn rows_in(&self, split: Split) -> impl Iterator<Item = &DatasetRow> {
        self.rows.iter().filter(move |r| r.split == split)
    }

    pub fn count(&self, split: Split) -> usize {
        self.rows_in(split).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.70,
            validation: 0.15,
            test: 0.15,
        }
    }
}

impl SplitRatios {
    pub fn all_train() -> Self {
        Self {
            train: 1.0,
            validation: 0.0,
            test: 0.0,
        }
    }
}

/// Shuffle row indices with the seeded generator and cut them into
/// train/validation/test blocks of the requested proportions.
pub fn assign_splits(rows: usize, ratios: &SplitRatios, seed: u64) -> Result<Vec<Split>, FeatureError> {
    let parts = [ratios.train, ratios.validation, ratios.test];
    let total: f64 = parts.iter().sum();
    if parts.iter().any(|p| !(*p >= 0.0)) || !(total > 0.0) {
        return Err(FeatureError::InvalidSplit);
    }
    let n_train = libm::round(rows as f64 * ratios.train / total) as usize;
    let n_val = (libm::round(rows as f64 * ratios.validation / total) as usize).min(rows - n_train.min(rows));
    let n_train = n_train.min(rows);

    let mut order: Vec<usize> = (0..rows).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut splits = vec![Split::Test; rows];
    for (rank, &idx) in order.iter().enumerate() {
        splits[idx] = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_val {
            Split::Validation
        } else {
            Split::Test
        };
    }
    Ok(splits)
}

/// Fit per-feature extrema on the training rows. The target is scaled with
/// the fixed `target_bounds_km`.
pub fn fit_normalizer(dataset: &Dataset, target_bounds_km: (f64, f64)) -> Result<NormalizationParams, FeatureError> {
    let mut train = dataset.rows_in(Split::Train).peekable();
    let dim = match train.peek() {
        Some(row) => row.features.len(),
        None => return Err(FeatureError::EmptyDataset),
    };
    let mut ranges = vec![
        FeatureRange {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        };
        dim
    ];
    for row in train {
        if row.features.len() != dim {
            return Err(FeatureError::DimensionMismatch {
                expected: dim,
                got: row.features.len(),
            });
        }
        for (range, &v) in ranges.iter_mut().zip(&row.features.values) {
            range.min = range.min.min(v);
            range.max = range.max.max(v);
        }
    }
    Ok(NormalizationParams {
        features: ranges,
        target: FeatureRange {
            min: target_bounds_km.0,
            max: target_bounds_km.1,
        },
        lo: NORM_LO,
        hi: NORM_HI,
    })
}

/// How compensation enters the apparent impedance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Compensation {
    /// `k0 = (z0 − z1)/(3·z1)` from the line constants.
    #[default]
    Residual,
    /// `k0 = 0`, the plain `V/I` ratio.
    Raw,
}

/// Everything needed to turn a fault scenario into a feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub network: Network,
    pub sampling: SamplingSpec,
    pub compensation: Compensation,
    pub raster_window: RasterWindow,
    pub raster_n: usize,
    pub feature_mode: FeatureMode,
    pub split: SplitRatios,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            network: Network::default(),
            sampling: SamplingSpec::default(),
            compensation: Compensation::Residual,
            raster_window: RasterWindow::default(),
            raster_n: 32,
            feature_mode: FeatureMode::Focal,
            split: SplitRatios::default(),
            seed: 1,
        }
    }
}

impl PipelineConfig {
    pub fn k0(&self) -> Phasor {
        match self.compensation {
            Compensation::Residual => {
                crate::relay::residual_compensation_factor(self.network.line.z1_per_km, self.network.line.z0_per_km)
            }
            Compensation::Raw => Phasor::new(0.0, 0.0),
        }
    }

    pub fn samples_per_cycle(&self) -> Result<usize, NetError> {
        samples_per_cycle(self.sampling.sample_rate_hz, self.network.line.f_hz)
    }
}

/// Waveforms and locus of one simulated fault.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedFault {
    pub waves: WaveformSet,
    pub locus: ImpedanceLocus,
}

pub fn simulate_fault(config: &PipelineConfig, scenario: &FaultScenario) -> Result<SimulatedFault, SimError> {
    let net = &config.network;
    let pre = prefault_solution(net)?;
    let post = solve_slg_fault(net, scenario)?;
    let waves = synthesize_waveforms(&pre, &post, scenario, net.line.f_hz, &config.sampling)?;
    let locus = track_locus(&waves, config.samples_per_cycle()?, config.k0())?;
    Ok(SimulatedFault { waves, locus })
}

/// Feature vector of one scenario.
pub fn scenario_features(config: &PipelineConfig, scenario: &FaultScenario) -> Result<FeatureVector, FeatureError> {
    let annotate = |source: SimError| FeatureError::Scenario {
        distance_km: scenario.distance_km,
        rf_ohm: scenario.rf_ohm,
        source,
    };
    let sim = simulate_fault(config, scenario).map_err(annotate)?;
    let spc = config.samples_per_cycle().map_err(|e| annotate(SimError::Net(e)))?;
    let image = rasterize_locus(&sim.locus, &config.raster_window, config.raster_n)?;
    extract_features(&sim.locus, &image, config.feature_mode, spc)
}

/// Simulate every scenario, in order, and assign seeded splits.
pub fn build_dataset(scenarios: &[FaultScenario], config: &PipelineConfig) -> Result<Dataset, FeatureError> {
    let features = scenarios
        .iter()
        .map(|sc| scenario_features(config, sc))
        .collect::<Result<Vec<_>, _>>()?;
    assemble_dataset(scenarios, features, config)
}

/// Attach targets and splits to precomputed feature vectors, in scenario
/// order.
pub fn assemble_dataset(
    scenarios: &[FaultScenario],
    features: Vec<FeatureVector>,
    config: &PipelineConfig,
) -> Result<Dataset, FeatureError> {
    if scenarios.is_empty() {
        return Err(FeatureError::EmptyDataset);
    }
    if features.len() != scenarios.len() {
        return Err(FeatureError::DimensionMismatch {
            expected: scenarios.len(),
            got: features.len(),
        });
    }
    let splits = assign_splits(scenarios.len(), &config.split, config.seed)?;
    let rows = scenarios
        .iter()
        .zip(features)
        .zip(splits)
        .map(|((sc, features), split)| DatasetRow {
            features,
            target_km: sc.distance_km,
            split,
        })
        .collect();
    Ok(Dataset {
        rows,
        seed: config.seed,
    })
}

/// Cartesian product of distances and fault resistances, distance-major.
pub fn scenario_grid(distances_km: &[f64], resistances_ohm: &[f64], inception_s: f64) -> Vec<FaultScenario> {
    distances_km
        .iter()
        .flat_map(|&d| {
            resistances_ohm
                .iter()
                .map(move |&rf| FaultScenario::phase_a_to_ground(d, rf, inception_s))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relay::LocusPoint;

    fn locus_of(points: &[(f64, f64)]) -> ImpedanceLocus {
        ImpedanceLocus {
            points: points
                .iter()
                .enumerate()
                .map(|(k, &(r, x))| LocusPoint {
                    t_s: k as f64,
                    z: Phasor::new(r, x),
                })
                .collect(),
        }
    }

    fn unit_window() -> RasterWindow {
        RasterWindow {
            r_min: 0.0,
            r_max: 32.0,
            x_min: 0.0,
            x_max: 32.0,
        }
    }

    #[test]
    fn center_point_lights_one_pixel() {
        let img = rasterize_locus(&locus_of(&[(16.0, 16.0)]), &unit_window(), 32).unwrap();
        assert_eq!(img.lit_pixels(), 1);
        assert_eq!(img.get(16, 16), 1);
        let img = rasterize_locus(&locus_of(&[(55.0, 25.0)]), &RasterWindow::default(), 32).unwrap();
        assert_eq!(img.get(16, 16), 1);
    }

    #[test]
    fn outside_point_is_clipped() {
        let img = rasterize_locus(&locus_of(&[(-5.0, 16.0)]), &unit_window(), 32).unwrap();
        assert_eq!(img.lit_pixels(), 0);
    }

    #[test]
    fn corner_to_corner_diagonal() {
        let img = rasterize_locus(&locus_of(&[(0.0, 0.0), (32.0, 32.0)]), &unit_window(), 32).unwrap();
        assert_eq!(img.lit_pixels(), 32);
        for k in 0..32 {
            assert_eq!(img.get(31 - k, k), 1);
        }
    }

    #[test]
    fn stationary_locus_is_one_visit() {
        let img = rasterize_locus(&locus_of(&[(3.0, 3.0); 10]), &unit_window(), 32).unwrap();
        assert_eq!(img.grid.iter().sum::<u32>(), 1);
    }

    #[test]
    fn revisits_are_counted() {
        let img = rasterize_locus(&locus_of(&[(1.5, 1.5), (5.5, 1.5), (1.5, 1.5)]), &unit_window(), 32).unwrap();
        // out-and-back: the far end is visited once, the start twice
        assert_eq!(img.get(30, 1), 2);
        assert_eq!(img.get(30, 5), 1);
        assert_eq!(img.get(30, 3), 2);
    }

    #[test]
    fn segment_crossing_the_edge_is_clipped() {
        let img = rasterize_locus(&locus_of(&[(-16.0, 16.5), (16.5, 16.5)]), &unit_window(), 32).unwrap();
        assert_eq!(img.lit_pixels(), 17);
        assert_eq!(img.get(15, 0), 1);
    }

    #[test]
    fn raster_rejects_bad_input() {
        assert_eq!(
            rasterize_locus(&ImpedanceLocus::default(), &unit_window(), 32),
            Err(FeatureError::EmptyLocus)
        );
        assert!(rasterize_locus(&locus_of(&[(1.0, 1.0)]), &unit_window(), 7).is_err());
    }

    #[test]
    fn constant_locus_focal_features() {
        let locus = locus_of(&[(10.0, 40.0); 30]);
        let img = rasterize_locus(&locus, &RasterWindow::default(), 32).unwrap();
        let f = extract_features(&locus, &img, FeatureMode::Focal, 20).unwrap();
        assert_eq!(f.values, vec![10.0, 40.0, 0.0, 0.0]);
    }

    #[test]
    fn approach_angle_uses_last_moving_chord() {
        let mut pts = vec![(0.0, 0.0), (10.0, 10.0)];
        pts.extend([(10.0, 10.0); 5]);
        let locus = locus_of(&pts);
        let img = rasterize_locus(&locus, &unit_window(), 32).unwrap();
        let f = extract_features(&locus, &img, FeatureMode::Focal, 4).unwrap();
        assert!((f.values[3] - 45.0).abs() < 1e-12);
        assert!((f.values[2] - libm::sqrt(200.0)).abs() < 1e-12);
    }

    #[test]
    fn pixel_mode_is_row_major_binary() {
        let mut img = RasterImage {
            grid: vec![0; 16],
            window: unit_window(),
            n: 4,
        };
        img.grid[0] = 3;
        let f = extract_features(&locus_of(&[(0.0, 0.0)]), &img, FeatureMode::Pixels, 1).unwrap();
        let mut expected = vec![0.0; 16];
        expected[0] = 1.0;
        assert_eq!(f.values, expected);
    }

    #[test]
    fn settled_point_median_of_even_count() {
        let locus = locus_of(&[(100.0, 100.0), (1.0, 4.0), (3.0, 2.0), (2.0, 3.0), (4.0, 1.0)]);
        assert_eq!(settled_point(&locus, 4).unwrap(), Phasor::new(2.5, 2.5));
    }

    fn toy_dataset(values: &[&[f64]]) -> Dataset {
        Dataset {
            rows: values
                .iter()
                .map(|v| DatasetRow {
                    features: FeatureVector {
                        values: v.to_vec(),
                        mode: FeatureMode::Focal,
                    },
                    target_km: 10.0,
                    split: Split::Train,
                })
                .collect(),
            seed: 0,
        }
    }

    #[test]
    fn normalizer_extrema() {
        let p = fit_normalizer(&toy_dataset(&[&[2.0], &[4.0], &[10.0]]), (0.0, 60.0)).unwrap();
        assert_eq!(p.features, vec![FeatureRange { min: 2.0, max: 10.0 }]);
        let p = fit_normalizer(&toy_dataset(&[&[5.0, 1.0], &[5.0, -1.0], &[5.0, 0.0]]), (0.0, 60.0)).unwrap();
        assert_eq!(p.degenerate_features(), vec![0]);
        assert_eq!(p.features[1], FeatureRange { min: -1.0, max: 1.0 });
    }

    #[test]
    fn normalizer_uses_training_rows_only() {
        let mut ds = toy_dataset(&[&[2.0], &[4.0], &[100.0]]);
        ds.rows[2].split = Split::Test;
        let p = fit_normalizer(&ds, (0.0, 60.0)).unwrap();
        assert_eq!(p.features[0].max, 4.0);
        ds.rows.iter_mut().for_each(|r| r.split = Split::Test);
        assert_eq!(fit_normalizer(&ds, (0.0, 60.0)), Err(FeatureError::EmptyDataset));
    }

    #[test]
    fn forward_map_endpoints() {
        let p = fit_normalizer(&toy_dataset(&[&[2.0, 5.0], &[10.0, 5.0]]), (0.0, 60.0)).unwrap();
        let f = p.apply(&[2.0, 5.0], Direction::Forward).unwrap();
        assert_eq!(f, vec![0.1, 0.5]);
        assert_eq!(p.apply(&[10.0, 7.0], Direction::Forward).unwrap()[0], 0.9);
        assert!((p.apply(&[6.0, 5.0], Direction::Forward).unwrap()[0] - 0.5).abs() < 1e-15);
        // extrapolation, no clamping
        assert!(p.apply(&[18.0, 5.0], Direction::Forward).unwrap()[0] > 0.9);
        // degenerate maps back to min
        assert_eq!(p.apply(&[0.5, 0.5], Direction::Inverse).unwrap()[1], 5.0);
        assert_eq!(
            p.apply(&[1.0], Direction::Forward),
            Err(FeatureError::DimensionMismatch { expected: 2, got: 1 })
        );
    }

    #[test]
    fn splits_partition_rows() {
        let s = assign_splits(230, &SplitRatios::default(), 11).unwrap();
        let count = |k| s.iter().filter(|&&x| x == k).count();
        assert_eq!(count(Split::Train), 161);
        assert_eq!(count(Split::Validation), 35);
        assert_eq!(count(Split::Test), 34);
        assert_eq!(s, assign_splits(230, &SplitRatios::default(), 11).unwrap());
        assert_ne!(s, assign_splits(230, &SplitRatios::default(), 12).unwrap());
        let all = assign_splits(20, &SplitRatios::all_train(), 3).unwrap();
        assert!(all.iter().all(|&x| x == Split::Train));
    }

    #[test]
    fn grid_counts() {
        let d: Vec<f64> = (1..=10).map(|k| 5.0 * k as f64).collect();
        assert_eq!(scenario_grid(&d, &[50.0, 100.0], 0.04).len(), 20);
        let d: Vec<f64> = (5..=50).map(|k| k as f64).collect();
        let rf: Vec<f64> = (1..=5).map(|k| 25.0 * k as f64).collect();
        assert_eq!(scenario_grid(&d, &rf, 0.04).len(), 230);
    }
}
