//! Epoch loop shared by the three training functions: stopping rules,
//! validation tracking and the best-validation snapshot.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::mlp::{Architecture, Batch, MlpModel};
use super::optim::{Cgb, CgbParams, Gdx, GdxParams, Objective, Scg, ScgParams, StepOutcome};
use super::NetError;
use crate::features::{Dataset, FeatureError, NormalizationParams, Split};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Gdx,
    Scg,
    Cgb,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 3] = [OptimizerKind::Gdx, OptimizerKind::Scg, OptimizerKind::Cgb];

    pub fn name(&self) -> &'static str {
        match self {
            OptimizerKind::Gdx => "gdx",
            OptimizerKind::Scg => "scg",
            OptimizerKind::Cgb => "cgb",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gdx" | "traingdx" => Some(OptimizerKind::Gdx),
            "scg" | "trainscg" => Some(OptimizerKind::Scg),
            "cgb" | "traincgb" => Some(OptimizerKind::Cgb),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub goal_mse: f64,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    #[serde(default)]
    pub gdx: GdxParams,
    #[serde(default)]
    pub scg: ScgParams,
    #[serde(default)]
    pub cgb: CgbParams,
    pub max_validation_failures: usize,
    pub min_gradient: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 1000,
            goal_mse: 0.0,
            seed: 1,
            optimizer: OptimizerKind::Gdx,
            gdx: GdxParams::default(),
            scg: ScgParams::default(),
            cgb: CgbParams::default(),
            max_validation_failures: 6,
            min_gradient: 1e-10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        if self.max_epochs < 1 {
            return Err(NetError::InvalidConfig("max_epochs must be at least 1"));
        }
        if !(self.goal_mse >= 0.0) {
            return Err(NetError::InvalidConfig("goal_mse must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Goal,
    MaxEpochs,
    Validation,
    GradientFloor,
}

impl StopReason {
    pub fn name(&self) -> &'static str {
        match self {
            StopReason::Goal => "goal",
            StopReason::MaxEpochs => "max-epochs",
            StopReason::Validation => "validation",
            StopReason::GradientFloor => "gradient-floor",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub validation_mse: Option<f64>,
    /// Whether the epoch moved the weights; epoch 0 counts as accepted.
    pub accepted: bool,
    /// GDX learning rate after the epoch.
    pub learning_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub optimizer: OptimizerKind,
    /// Epoch 0 is the untrained network.
    pub epochs: Vec<EpochRecord>,
    pub stop_reason: StopReason,
    pub best_epoch: usize,
    /// Network at `best_epoch`.
    pub model: MlpModel,
}

impl TrainingReport {
    pub fn final_record(&self) -> &EpochRecord {
        self.epochs.last().expect("report always holds epoch 0")
    }

    pub fn best_record(&self) -> &EpochRecord {
        &self.epochs[self.best_epoch]
    }
}

/// Normalized training and validation batches.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingData {
    pub train: Batch,
    pub validation: Batch,
}

impl TrainingData {
    /// Normalize features and targets of the train and validation rows.
    pub fn from_dataset(dataset: &Dataset, normalizer: &NormalizationParams) -> Result<Self, FeatureError> {
        let dim = normalizer.dim();
        let mut train = Batch::new(dim, 1);
        let mut validation = Batch::new(dim, 1);
        for row in &dataset.rows {
            let batch = match row.split {
                Split::Train => &mut train,
                Split::Validation => &mut validation,
                Split::Test => continue,
            };
            let x = normalizer.apply(&row.features.values, crate::features::Direction::Forward)?;
            let y = [normalizer.forward_target(row.target_km)];
            batch.push(&x, &y).map_err(|_| FeatureError::DimensionMismatch {
                expected: dim,
                got: x.len(),
            })?;
        }
        Ok(Self { train, validation })
    }
}

struct MlpObjective<'a> {
    arch: &'a Architecture,
    batch: &'a Batch,
}

impl Objective for MlpObjective<'_> {
    fn dim(&self) -> usize {
        self.arch.param_count()
    }

    fn loss(&self, w: &[f64]) -> Result<f64, NetError> {
        self.arch.loss(w, self.batch)
    }

    fn loss_grad(&self, w: &[f64], grad: &mut [f64]) -> Result<f64, NetError> {
        self.arch.loss_grad(w, self.batch, grad)
    }
}

enum Stepper {
    Gdx(Gdx),
    Scg(Scg),
    Cgb(Cgb),
}

impl Stepper {
    fn new(config: &TrainConfig, obj: &MlpObjective<'_>, w: &[f64]) -> Result<Self, NetError> {
        Ok(match config.optimizer {
            OptimizerKind::Gdx => Stepper::Gdx(Gdx::new(config.gdx, obj, w)?),
            OptimizerKind::Scg => Stepper::Scg(Scg::new(config.scg, obj, w)?),
            OptimizerKind::Cgb => Stepper::Cgb(Cgb::new(config.cgb, obj, w)?),
        })
    }

    fn step(&mut self, obj: &MlpObjective<'_>, w: &mut [f64]) -> Result<StepOutcome, NetError> {
        match self {
            Stepper::Gdx(s) => s.step(obj, w),
            Stepper::Scg(s) => s.step(obj, w),
            Stepper::Cgb(s) => s.step(obj, w),
        }
    }

    fn loss(&self) -> f64 {
        match self {
            Stepper::Gdx(s) => s.loss(),
            Stepper::Scg(s) => s.loss(),
            Stepper::Cgb(s) => s.loss(),
        }
    }

    fn grad_norm(&self) -> f64 {
        match self {
            Stepper::Gdx(s) => s.grad_norm(),
            Stepper::Scg(s) => s.grad_norm(),
            Stepper::Cgb(s) => s.grad_norm(),
        }
    }

    fn learning_rate(&self) -> Option<f64> {
        match self {
            Stepper::Gdx(s) => Some(s.learning_rate()),
            _ => None,
        }
    }
}

/// Train `model` with the optimizer named in `config`.
///
/// Stops on the MSE goal, the epoch limit, a gradient norm below
/// `min_gradient`, or `max_validation_failures` epochs in a row without a new
/// best validation MSE. The returned model is the snapshot with the best
/// validation MSE, or the lowest training MSE when there are no validation
/// rows.
pub fn train(model: &MlpModel, data: &TrainingData, config: &TrainConfig) -> Result<TrainingReport, NetError> {
    config.validate()?;
    let arch = &model.arch;
    let obj = MlpObjective {
        arch,
        batch: &data.train,
    };
    let has_validation = !data.validation.is_empty();
    let validation_mse = |w: &[f64]| -> Result<Option<f64>, NetError> {
        if has_validation {
            arch.loss(w, &data.validation).map(Some)
        } else {
            Ok(None)
        }
    };

    let mut w = model.params.clone();
    let mut stepper = Stepper::new(config, &obj, &w)?;
    let mut epochs = Vec::with_capacity(config.max_epochs.min(100_000) + 1);
    epochs.push(EpochRecord {
        epoch: 0,
        train_mse: stepper.loss(),
        validation_mse: validation_mse(&w)?,
        accepted: true,
        learning_rate: stepper.learning_rate(),
    });

    let score = |r: &EpochRecord| r.validation_mse.unwrap_or(r.train_mse);
    let mut best_epoch = 0;
    let mut best_score = score(&epochs[0]);
    let mut best_w = w.clone();
    let mut failures = 0;

    let stop_reason = loop {
        let last = epochs.last().unwrap();
        if last.train_mse <= config.goal_mse {
            break StopReason::Goal;
        }
        if stepper.grad_norm() < config.min_gradient {
            break StopReason::GradientFloor;
        }
        if has_validation && failures >= config.max_validation_failures {
            break StopReason::Validation;
        }
        if last.epoch >= config.max_epochs {
            break StopReason::MaxEpochs;
        }

        let outcome = stepper.step(&obj, &mut w)?;
        if !outcome.loss.is_finite() {
            return Err(NetError::NonFiniteLoss);
        }
        let record = EpochRecord {
            epoch: last.epoch + 1,
            train_mse: outcome.loss,
            validation_mse: validation_mse(&w)?,
            accepted: outcome.accepted,
            learning_rate: stepper.learning_rate(),
        };
        let s = score(&record);
        if s < best_score {
            best_score = s;
            best_epoch = record.epoch;
            best_w.copy_from_slice(&w);
            failures = 0;
        } else if s > best_score {
            failures += 1;
        }
        epochs.push(record);
    };

    Ok(TrainingReport {
        optimizer: config.optimizer,
        epochs,
        stop_reason,
        best_epoch,
        model: MlpModel {
            arch: arch.clone(),
            params: best_w,
        },
    })
}

fn with_optimizer(config: &TrainConfig, optimizer: OptimizerKind) -> TrainConfig {
    TrainConfig {
        optimizer,
        ..config.clone()
    }
}

/// Gradient descent with momentum and adaptive learning rate.
pub fn train_gdx(model: &MlpModel, data: &TrainingData, config: &TrainConfig) -> Result<TrainingReport, NetError> {
    train(model, data, &with_optimizer(config, OptimizerKind::Gdx))
}

/// Scaled conjugate gradient.
pub fn train_scg(model: &MlpModel, data: &TrainingData, config: &TrainConfig) -> Result<TrainingReport, NetError> {
    train(model, data, &with_optimizer(config, OptimizerKind::Scg))
}

/// Conjugate gradient with Powell-Beale restarts.
pub fn train_cgb(model: &MlpModel, data: &TrainingData, config: &TrainConfig) -> Result<TrainingReport, NetError> {
    train(model, data, &with_optimizer(config, OptimizerKind::Cgb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::{init_mlp, Activation};

    fn sine_data() -> TrainingData {
        let mut train = Batch::new(1, 1);
        let mut validation = Batch::new(1, 1);
        for k in 0..40 {
            let x = k as f64 / 39.0;
            let y = 0.5 + 0.3 * libm::sin(3.0 * x);
            if k % 5 == 0 {
                validation.push(&[x], &[y]).unwrap();
            } else {
                train.push(&[x], &[y]).unwrap();
            }
        }
        TrainingData { train, validation }
    }

    #[test]
    fn all_optimizers_reduce_loss() {
        let data = sine_data();
        let model = init_mlp(&[1, 6, 1], Activation::Tanh, 5).unwrap();
        for kind in OptimizerKind::ALL {
            let config = TrainConfig {
                optimizer: kind,
                max_epochs: 300,
                max_validation_failures: 1000,
                ..Default::default()
            };
            let report = train(&model, &data, &config).unwrap();
            let first = report.epochs[0].train_mse;
            let best = report.best_record().train_mse;
            assert!(best < 0.1 * first, "{kind:?}: {first} -> {best}");
        }
    }

    #[test]
    fn snapshot_is_best_validation_epoch() {
        let data = sine_data();
        let model = init_mlp(&[1, 6, 1], Activation::Tanh, 5).unwrap();
        let config = TrainConfig {
            optimizer: OptimizerKind::Scg,
            max_epochs: 200,
            ..Default::default()
        };
        let report = train(&model, &data, &config).unwrap();
        let best = report.best_record().validation_mse.unwrap();
        assert!(report.epochs.iter().all(|r| r.validation_mse.unwrap() >= best));
        let recomputed = report.model.mse(&data.validation).unwrap();
        assert_eq!(recomputed, best);
    }

    #[test]
    fn goal_stops_training() {
        let data = sine_data();
        let model = init_mlp(&[1, 6, 1], Activation::Tanh, 5).unwrap();
        let config = TrainConfig {
            optimizer: OptimizerKind::Cgb,
            max_epochs: 5000,
            goal_mse: 1e-2,
            max_validation_failures: 1000,
            ..Default::default()
        };
        let report = train(&model, &data, &config).unwrap();
        assert_eq!(report.stop_reason, StopReason::Goal);
        assert!(report.final_record().train_mse <= 1e-2);
    }

    #[test]
    fn optimizer_names() {
        assert_eq!(OptimizerKind::parse("TRAINGDX"), Some(OptimizerKind::Gdx));
        assert_eq!(OptimizerKind::parse("cgb"), Some(OptimizerKind::Cgb));
        assert_eq!(OptimizerKind::parse("lm"), None);
    }

    #[test]
    fn rejects_zero_epochs() {
        let model = init_mlp(&[1, 2, 1], Activation::Tanh, 0).unwrap();
        let config = TrainConfig {
            max_epochs: 0,
            ..Default::default()
        };
        assert!(matches!(
            train(&model, &sine_data(), &config),
            Err(NetError::InvalidConfig(_))
        ));
    }
}
