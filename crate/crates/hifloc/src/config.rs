//! Experiment configuration files.
//!
//! One JSON file describes a whole experiment: network, relay, scenario grid,
//! features, split and per-optimizer training settings. Keys carry their
//! units. Complex impedances are written as `[re, im]` pairs and source EMFs
//! as RMS line-to-neutral kilovolts plus an angle; internally every phasor is
//! a peak value.

use std::path::{Path, PathBuf};

use hifloc_core::features::{Compensation, FeatureMode, PipelineConfig, RasterWindow, SplitRatios};
use hifloc_core::netmodel::{
    samples_per_cycle, DcOffset, FaultScenario, LineParams, Network, SamplingSpec, SourceParams,
};
use hifloc_core::neuralnet::{Activation, CgbParams, GdxParams, OptimizerKind, ScgParams, TrainConfig};
use hifloc_core::relay::MhoZone;
use hifloc_core::{polar_deg, Phasor};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

/// Names accepted by [`ExperimentConfig::preset`].
pub const PRESETS: [&str; 2] = ["paper-grid", "augmented"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub line: LineConfig,
    pub local_source: SourceConfig,
    /// `null` opens the far end of the line.
    pub remote_source: Option<SourceConfig>,
    pub relay: RelayConfig,
    pub sampling: SamplingConfig,
    pub scenarios: ScenarioGrid,
    pub features: FeatureConfig,
    pub split: SplitConfig,
    pub network: MlpConfig,
    pub training: TrainingConfig,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LineConfig {
    pub z1_ohm_per_km: [f64; 2],
    pub z0_ohm_per_km: [f64; 2],
    pub length_km: f64,
    pub f_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    pub emf_rms_kv: f64,
    pub emf_angle_deg: f64,
    pub z1_ohm: [f64; 2],
    pub z0_ohm: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelayConfig {
    pub reach_fraction: f64,
    pub dwell_points: usize,
    pub samples_per_cycle: usize,
    pub compensation: Compensation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub duration_s: f64,
    pub inception_s: f64,
    pub dc_offset: DcOffset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioGrid {
    pub distances_km: Vec<f64>,
    pub resistances_ohm: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub mode: FeatureMode,
    pub raster_n: usize,
    pub r_min_ohm: f64,
    pub r_max_ohm: f64,
    pub x_min_ohm: f64,
    pub x_max_ohm: f64,
    /// Distances mapped to 0.1 and 0.9; `null` means `[0, length_km]`.
    pub target_bounds_km: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    pub hidden_layers: Vec<usize>,
    pub activation: Activation,
    pub init_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    /// Optimizers run by `train` when none is named on the command line.
    pub optimizers: Vec<OptimizerKind>,
    pub gdx: StopSettings<GdxParams>,
    pub scg: StopSettings<ScgParams>,
    pub cgb: StopSettings<CgbParams>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopSettings<P> {
    pub max_epochs: usize,
    pub goal_mse: f64,
    pub max_validation_failures: usize,
    pub min_gradient: f64,
    pub params: P,
}

impl<P: Default> Default for StopSettings<P> {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            max_epochs: t.max_epochs,
            goal_mse: t.goal_mse,
            max_validation_failures: t.max_validation_failures,
            min_gradient: t.min_gradient,
            params: P::default(),
        }
    }
}

fn default_emf_kv() -> f64 {
    154.0 / 3f64.sqrt()
}

impl Default for LineConfig {
    fn default() -> Self {
        Self {
            z1_ohm_per_km: [0.05, 0.488],
            z0_ohm_per_km: [0.25, 1.45],
            length_km: 60.0,
            f_hz: 50.0,
        }
    }
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            emf_rms_kv: default_emf_kv(),
            emf_angle_deg: 0.0,
            z1_ohm: [0.0, 10.0],
            z0_ohm: [0.0, 15.0],
        }
    }
}

fn default_remote() -> SourceConfig {
    SourceConfig {
        emf_rms_kv: default_emf_kv(),
        emf_angle_deg: -10.0,
        z1_ohm: [0.0, 12.0],
        z0_ohm: [0.0, 18.0],
    }
}

impl Default for RelayConfig {
    fn default() -> Self {
        Self {
            reach_fraction: 0.8,
            dwell_points: 3,
            samples_per_cycle: 20,
            compensation: Compensation::Residual,
        }
    }
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            duration_s: 0.1,
            inception_s: 0.04,
            dc_offset: DcOffset::Off,
        }
    }
}

impl Default for ScenarioGrid {
    fn default() -> Self {
        Self {
            distances_km: (1..=10).map(|k| 5.0 * k as f64).collect(),
            resistances_ohm: vec![50.0, 100.0],
        }
    }
}

impl Default for FeatureConfig {
    fn default() -> Self {
        let w = RasterWindow::default();
        Self {
            mode: FeatureMode::Focal,
            raster_n: 32,
            r_min_ohm: w.r_min,
            r_max_ohm: w.r_max,
            x_min_ohm: w.x_min,
            x_max_ohm: w.x_max,
            target_bounds_km: None,
        }
    }
}

impl Default for SplitConfig {
    fn default() -> Self {
        let r = SplitRatios::default();
        Self {
            train: r.train,
            validation: r.validation,
            test: r.test,
            seed: 1,
        }
    }
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden_layers: vec![10],
            activation: Activation::Tanh,
            init_seed: 1,
        }
    }
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            optimizers: OptimizerKind::ALL.to_vec(),
            gdx: StopSettings::default(),
            scg: StopSettings::default(),
            cgb: StopSettings::default(),
        }
    }
}

impl TrainingConfig {
    /// Every optimizer with the same epoch budget and early-stopping
    /// patience, default hyperparameters.
    pub fn with_limits(max_epochs: usize, max_validation_failures: usize) -> Self {
        fn limits<P: Default>(max_epochs: usize, max_validation_failures: usize) -> StopSettings<P> {
            StopSettings {
                max_epochs,
                max_validation_failures,
                ..StopSettings::default()
            }
        }
        Self {
            optimizers: OptimizerKind::ALL.to_vec(),
            gdx: limits(max_epochs, max_validation_failures),
            scg: limits(max_epochs, max_validation_failures),
            cgb: limits(max_epochs, max_validation_failures),
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "default".into(),
            line: LineConfig::default(),
            local_source: SourceConfig::default(),
            remote_source: Some(default_remote()),
            relay: RelayConfig::default(),
            sampling: SamplingConfig::default(),
            scenarios: ScenarioGrid::default(),
            features: FeatureConfig::default(),
            split: SplitConfig::default(),
            network: MlpConfig::default(),
            training: TrainingConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

fn complex(z: [f64; 2]) -> Phasor {
    Phasor::new(z[0], z[1])
}

impl SourceConfig {
    fn to_source(self) -> SourceParams {
        SourceParams {
            emf: polar_deg(self.emf_rms_kv * 1e3 * 2f64.sqrt(), self.emf_angle_deg),
            z1: complex(self.z1_ohm),
            z0: complex(self.z0_ohm),
        }
    }
}

impl ExperimentConfig {
    /// 5 to 50 km in 5 km steps at 50 and 100 ohm, every row used for training.
    pub fn paper_grid() -> Self {
        Self {
            name: "paper-grid".into(),
            split: SplitConfig {
                train: 1.0,
                validation: 0.0,
                test: 0.0,
                seed: 1,
            },
            training: TrainingConfig::with_limits(5000, TrainConfig::default().max_validation_failures),
            output_dir: PathBuf::from("out/paper-grid"),
            ..Self::default()
        }
    }

    /// 1 km steps from 5 to 50 km at five fault resistances, split 70/15/15.
    pub fn augmented() -> Self {
        Self {
            name: "augmented".into(),
            scenarios: ScenarioGrid {
                distances_km: (5..=50).map(f64::from).collect(),
                resistances_ohm: vec![25.0, 50.0, 75.0, 100.0, 125.0],
            },
            training: TrainingConfig::with_limits(5000, 100),
            output_dir: PathBuf::from("out/augmented"),
            ..Self::default()
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "paper-grid" => Some(Self::paper_grid()),
            "augmented" => Some(Self::augmented()),
            _ => None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration always serializes") + "\n"
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        self.network_model()
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let sampling = self.sampling_spec();
        samples_per_cycle(sampling.sample_rate_hz, self.line.f_hz).map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.relay.samples_per_cycle < 4 {
            return bad("relay.samples_per_cycle must be at least 4".into());
        }
        self.zone().map_err(|e| HarnessError::Config(e.to_string()))?;
        for &d in &self.scenarios.distances_km {
            if !(d > 0.0 && d < self.line.length_km) {
                return bad(format!(
                    "scenario distance {d} km lies outside the {} km line",
                    self.line.length_km
                ));
            }
        }
        if self.scenarios.resistances_ohm.iter().any(|r| !(*r >= 0.0)) {
            return bad("fault resistances must be non-negative".into());
        }
        if let Some([lo, hi]) = self.features.target_bounds_km {
            if !(hi > lo) {
                return bad("features.target_bounds_km must be increasing".into());
            }
        }
        if self.network.hidden_layers.is_empty() || self.network.hidden_layers.contains(&0) {
            return bad("network.hidden_layers needs at least one non-empty layer".into());
        }
        if self.network.activation == Activation::Linear {
            return bad("network.activation must be tanh or logistic".into());
        }
        for kind in OptimizerKind::ALL {
            self.train_config(kind, None)
                .validate()
                .map_err(|e| HarnessError::Config(format!("training.{}: {e}", kind.name())))?;
        }
        Ok(())
    }

    pub fn network_model(&self) -> Network {
        let l = &self.line;
        Network {
            line: LineParams {
                z1_per_km: complex(l.z1_ohm_per_km),
                z0_per_km: complex(l.z0_ohm_per_km),
                length_km: l.length_km,
                f_hz: l.f_hz,
            },
            local: self.local_source.to_source(),
            remote: self.remote_source.map(SourceConfig::to_source),
        }
    }

    pub fn sampling_spec(&self) -> SamplingSpec {
        SamplingSpec {
            sample_rate_hz: self.relay.samples_per_cycle as f64 * self.line.f_hz,
            duration_s: self.sampling.duration_s,
            dc_offset: self.sampling.dc_offset,
        }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        let f = &self.features;
        PipelineConfig {
            network: self.network_model(),
            sampling: self.sampling_spec(),
            compensation: self.relay.compensation,
            raster_window: RasterWindow {
                r_min: f.r_min_ohm,
                r_max: f.r_max_ohm,
                x_min: f.x_min_ohm,
                x_max: f.x_max_ohm,
            },
            raster_n: f.raster_n,
            feature_mode: f.mode,
            split: SplitRatios {
                train: self.split.train,
                validation: self.split.validation,
                test: self.split.test,
            },
            seed: self.split.seed,
        }
    }

    pub fn zone(&self) -> Result<MhoZone, hifloc_core::relay::RelayError> {
        MhoZone::from_line(&self.network_model().line, self.relay.reach_fraction)
    }

    pub fn scenarios(&self) -> Vec<FaultScenario> {
        hifloc_core::features::scenario_grid(
            &self.scenarios.distances_km,
            &self.scenarios.resistances_ohm,
            self.sampling.inception_s,
        )
    }

    pub fn scenario(&self, distance_km: f64, rf_ohm: f64) -> FaultScenario {
        FaultScenario::phase_a_to_ground(distance_km, rf_ohm, self.sampling.inception_s)
    }

    pub fn target_bounds(&self) -> (f64, f64) {
        match self.features.target_bounds_km {
            Some([lo, hi]) => (lo, hi),
            None => (0.0, self.line.length_km),
        }
    }

    /// Layer sizes for an input of `input_dim` features and one output.
    pub fn layer_sizes(&self, input_dim: usize) -> Vec<usize> {
        let mut sizes = vec![input_dim];
        sizes.extend(&self.network.hidden_layers);
        sizes.push(1);
        sizes
    }

    /// Training settings for one optimizer; `seed` overrides the
    /// initialization seed.
    pub fn train_config(&self, kind: OptimizerKind, seed: Option<u64>) -> TrainConfig {
        let t = &self.training;
        let mut cfg = TrainConfig {
            optimizer: kind,
            seed: seed.unwrap_or(self.network.init_seed),
            ..TrainConfig::default()
        };
        let (max_epochs, goal_mse, failures, min_gradient) = match kind {
            OptimizerKind::Gdx => {
                cfg.gdx = t.gdx.params;
                (
                    t.gdx.max_epochs,
                    t.gdx.goal_mse,
                    t.gdx.max_validation_failures,
                    t.gdx.min_gradient,
                )
            }
            OptimizerKind::Scg => {
                cfg.scg = t.scg.params;
                (
                    t.scg.max_epochs,
                    t.scg.goal_mse,
                    t.scg.max_validation_failures,
                    t.scg.min_gradient,
                )
            }
            OptimizerKind::Cgb => {
                cfg.cgb = t.cgb.params;
                (
                    t.cgb.max_epochs,
                    t.cgb.goal_mse,
                    t.cgb.max_validation_failures,
                    t.cgb.min_gradient,
                )
            }
        };
        cfg.max_epochs = max_epochs;
        cfg.goal_mse = goal_mse;
        cfg.max_validation_failures = failures;
        cfg.min_gradient = min_gradient;
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_matches_core_defaults() {
        let cfg = ExperimentConfig::default();
        let net = cfg.network_model();
        let core = Network::default();
        assert_eq!(net.line, core.line);
        for (a, b) in [(net.local, core.local), (net.remote.unwrap(), core.remote.unwrap())] {
            assert!((a.emf - b.emf).norm() < 1e-9 * b.emf.norm());
            assert_eq!((a.z1, a.z0), (b.z1, b.z0));
        }
        assert_eq!(cfg.sampling_spec(), SamplingSpec::default());
    }

    #[test]
    fn presets_round_trip_through_json() {
        for name in PRESETS {
            let cfg = ExperimentConfig::preset(name).unwrap();
            assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        }
    }

    #[test]
    fn partial_files_take_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"name": "short", "line": {"z1_ohm_per_km": [0.05, 0.488], "z0_ohm_per_km": [0.25, 1.45], "length_km": 80, "f_hz": 50}}"#).unwrap();
        assert_eq!(cfg.line.length_km, 80.0);
        assert_eq!(cfg.target_bounds(), (0.0, 80.0));
        assert_eq!(cfg.relay, RelayConfig::default());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_distances() {
        assert!(matches!(
            ExperimentConfig::from_json(r#"{"length": 3}"#),
            Err(HarnessError::Config(_))
        ));
        let mut cfg = ExperimentConfig::default();
        cfg.scenarios.distances_km.push(75.0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn radial_when_remote_is_null() {
        let cfg = ExperimentConfig::from_json(r#"{"remote_source": null}"#).unwrap();
        assert!(cfg.network_model().remote.is_none());
    }
}
