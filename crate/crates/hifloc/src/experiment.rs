//! The experiment steps behind each CLI subcommand, usable in-process.

use hifloc_core::features::{
    assemble_dataset, fit_normalizer, scenario_features, simulate_fault, Dataset, DatasetRow, NormalizationParams,
    SimulatedFault, Split,
};
use hifloc_core::neuralnet::{init_mlp, train, MlpModel, OptimizerKind, TrainingData, TrainingReport};
use hifloc_core::relay::{decide_trip, RelayDecision};

use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::eval::{evaluate_locator, predict_km, ResultsTable};
use crate::plot::FitPanel;

/// Which dataset rows to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSelection {
    Only(Split),
    All,
    /// Test rows, or every row when there is no test split.
    Auto,
}

impl RowSelection {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "all" => Some(RowSelection::All),
            "auto" => Some(RowSelection::Auto),
            other => Split::parse(other).map(RowSelection::Only),
        }
    }

    pub fn select<'a>(&self, dataset: &'a Dataset) -> Vec<&'a DatasetRow> {
        match self {
            RowSelection::Only(split) => dataset.rows_in(*split).collect(),
            RowSelection::All => dataset.rows.iter().collect(),
            RowSelection::Auto if dataset.count(Split::Test) > 0 => dataset.rows_in(Split::Test).collect(),
            RowSelection::Auto => dataset.rows.iter().collect(),
        }
    }
}

pub struct SimulationRun {
    pub fault: SimulatedFault,
    pub decision: RelayDecision,
}

pub fn simulate(cfg: &ExperimentConfig, distance_km: f64, rf_ohm: f64) -> Result<SimulationRun, HarnessError> {
    let scenario = cfg.scenario(distance_km, rf_ohm);
    let fault = simulate_fault(&cfg.pipeline(), &scenario)?;
    let zone = cfg.zone().map_err(|e| HarnessError::Config(e.to_string()))?;
    let decision = decide_trip(&fault.locus, &zone, cfg.relay.dwell_points);
    Ok(SimulationRun { fault, decision })
}

/// Simulate the scenario grid, split it and fit the normalizer on the
/// training rows.
pub fn build_dataset(cfg: &ExperimentConfig) -> Result<(Dataset, NormalizationParams), HarnessError> {
    let pipeline = cfg.pipeline();
    let scenarios = cfg.scenarios();
    let features = scenarios
        .iter()
        .map(|sc| scenario_features(&pipeline, sc))
        .collect::<Result<Vec<_>, _>>()?;
    let dataset = assemble_dataset(&scenarios, features, &pipeline)?;
    let norm = fit_normalizer(&dataset, cfg.target_bounds())?;
    Ok((dataset, norm))
}

pub fn train_locator(
    cfg: &ExperimentConfig,
    dataset: &Dataset,
    norm: &NormalizationParams,
    kind: OptimizerKind,
    seed: Option<u64>,
) -> Result<TrainingReport, HarnessError> {
    let tc = cfg.train_config(kind, seed);
    let data = TrainingData::from_dataset(dataset, norm)?;
    let model = init_mlp(&cfg.layer_sizes(norm.dim()), cfg.network.activation, tc.seed)?;
    Ok(train(&model, &data, &tc)?)
}

/// Evaluate several trained networks on the same rows and join their
/// columns in the order given.
pub fn evaluate(
    models: &[(OptimizerKind, &MlpModel)],
    norm: &NormalizationParams,
    rows: &[&DatasetRow],
) -> Result<ResultsTable, HarnessError> {
    let mut table: Option<ResultsTable> = None;
    for (kind, model) in models {
        let col = evaluate_locator(kind.name(), model, norm, rows)?;
        table = Some(match table {
            None => col,
            Some(t) => t.join(col)?,
        });
    }
    table.ok_or_else(|| HarnessError::Usage("no trained models to evaluate".into()))
}

/// Predicted against target distance for the train, validation and test
/// rows.
pub fn fit_panels(
    model: &MlpModel,
    norm: &NormalizationParams,
    dataset: &Dataset,
) -> Result<Vec<FitPanel>, HarnessError> {
    [
        (Split::Train, "Training"),
        (Split::Validation, "Validation"),
        (Split::Test, "Test"),
    ]
    .iter()
    .map(|&(split, title)| {
        let rows: Vec<_> = dataset.rows_in(split).collect();
        Ok(FitPanel {
            title: title.to_string(),
            targets_km: rows.iter().map(|r| r.target_km).collect(),
            predicted_km: rows
                .iter()
                .map(|r| predict_km(model, norm, &r.features.values))
                .collect::<Result<_, _>>()?,
        })
    })
    .collect()
}
