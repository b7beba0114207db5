//! CSV and JSON artifacts.
//!
//! Every float is written with Rust's shortest round-trip formatting, so a
//! value read back is bit-identical to the one written.

use std::fs;
use std::path::Path;

use hifloc_core::features::{Dataset, DatasetRow, FeatureMode, FeatureVector, NormalizationParams, Split};
use hifloc_core::netmodel::WaveformSet;
use hifloc_core::neuralnet::{Activation, Architecture, MlpModel, OptimizerKind, TrainingReport};
use hifloc_core::relay::ImpedanceLocus;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

fn write_csv(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::io(path, e))?;
    w.write_record(header).map_err(|e| HarnessError::io(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| HarnessError::io(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>), HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| HarnessError::io(path, e))?;
    let header = r
        .headers()
        .map_err(|e| HarnessError::format(path, e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    let rows = r
        .records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| HarnessError::format(path, e.to_string()))?;
    Ok((header, rows))
}

fn parse_f64(path: &Path, field: &str) -> Result<f64, HarnessError> {
    field
        .parse()
        .map_err(|_| HarnessError::format(path, format!("not a number: {field:?}")))
}

fn strings(header: &[&str]) -> Vec<String> {
    header.iter().map(|s| s.to_string()).collect()
}

/// `t,va,ia,iresid`, one row per sample.
pub fn write_waveforms_csv(path: &Path, waves: &WaveformSet) -> Result<(), HarnessError> {
    let rows = (0..waves.len()).map(|k| {
        vec![
            waves.time_of(k).to_string(),
            waves.samples_va[k].to_string(),
            waves.samples_ia[k].to_string(),
            waves.samples_iresidual[k].to_string(),
        ]
    });
    write_csv(path, &strings(&["t", "va", "ia", "iresid"]), rows)
}

/// `t,r_ohm,x_ohm`, one row per locus point.
pub fn write_locus_csv(path: &Path, locus: &ImpedanceLocus) -> Result<(), HarnessError> {
    let rows = locus
        .points
        .iter()
        .map(|p| vec![p.t_s.to_string(), p.z.re.to_string(), p.z.im.to_string()]);
    write_csv(path, &strings(&["t", "r_ohm", "x_ohm"]), rows)
}

pub fn read_locus_csv(path: &Path) -> Result<ImpedanceLocus, HarnessError> {
    let (header, rows) = read_csv(path)?;
    if header != ["t", "r_ohm", "x_ohm"] {
        return Err(HarnessError::format(path, "expected header t,r_ohm,x_ohm"));
    }
    let points = rows
        .iter()
        .map(|row| {
            Ok(hifloc_core::relay::LocusPoint {
                t_s: parse_f64(path, &row[0])?,
                z: hifloc_core::Phasor::new(parse_f64(path, &row[1])?, parse_f64(path, &row[2])?),
            })
        })
        .collect::<Result<_, HarnessError>>()?;
    Ok(ImpedanceLocus { points })
}

/// `f1,...,fk,target_km,split`.
pub fn write_dataset_csv(path: &Path, dataset: &Dataset) -> Result<(), HarnessError> {
    let mut header: Vec<String> = (1..=dataset.feature_dim()).map(|i| format!("f{i}")).collect();
    header.push("target_km".into());
    header.push("split".into());
    let rows = dataset.rows.iter().map(|row| {
        let mut fields: Vec<String> = row.features.values.iter().map(f64::to_string).collect();
        fields.push(row.target_km.to_string());
        fields.push(row.split.as_str().to_string());
        fields
    });
    write_csv(path, &header, rows)
}

/// Read a dataset written by [`write_dataset_csv`]. The file does not record
/// the feature mode or seed, so the caller supplies them.
pub fn read_dataset_csv(path: &Path, mode: FeatureMode, seed: u64) -> Result<Dataset, HarnessError> {
    let (header, records) = read_csv(path)?;
    let k = header.len().saturating_sub(2);
    let expected: Vec<String> = (1..=k)
        .map(|i| format!("f{i}"))
        .chain(["target_km".to_string(), "split".to_string()])
        .collect();
    if k == 0 || header != expected {
        return Err(HarnessError::format(path, "expected header f1,...,fk,target_km,split"));
    }
    let rows = records
        .iter()
        .map(|rec| {
            let values = (0..k).map(|i| parse_f64(path, &rec[i])).collect::<Result<_, _>>()?;
            let split = Split::parse(&rec[k + 1])
                .ok_or_else(|| HarnessError::format(path, format!("unknown split {:?}", &rec[k + 1])))?;
            Ok(DatasetRow {
                features: FeatureVector { values, mode },
                target_km: parse_f64(path, &rec[k])?,
                split,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    if rows.is_empty() {
        return Err(HarnessError::format(path, "dataset has no rows"));
    }
    Ok(Dataset { rows, seed })
}

/// `epoch,train_mse,val_mse`; the validation column is empty when there is
/// no validation set.
pub fn write_report_csv(path: &Path, report: &TrainingReport) -> Result<(), HarnessError> {
    let rows = report.epochs.iter().map(|r| {
        vec![
            r.epoch.to_string(),
            r.train_mse.to_string(),
            r.validation_mse.map(|v| v.to_string()).unwrap_or_default(),
        ]
    });
    write_csv(path, &strings(&["epoch", "train_mse", "val_mse"]), rows)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::io(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::format(path, e.to_string()))
}

pub fn write_normalizer_json(path: &Path, norm: &NormalizationParams) -> Result<(), HarnessError> {
    write_json(path, norm)
}

pub fn read_normalizer_json(path: &Path) -> Result<NormalizationParams, HarnessError> {
    read_json(path)
}

/// A trained network as stored on disk, with the normalizer it was trained
/// against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub optimizer: OptimizerKind,
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    /// Per layer, `outputs × inputs` in row-major order.
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
    /// File name of the normalizer the network was trained against.
    pub normalizer_file: String,
    pub normalizer: NormalizationParams,
}

impl ModelFile {
    pub fn new(
        optimizer: OptimizerKind,
        model: &MlpModel,
        normalizer: &NormalizationParams,
        normalizer_file: &str,
    ) -> Self {
        let arch = &model.arch;
        let layers = 0..arch.num_layers();
        Self {
            optimizer,
            layer_sizes: arch.layer_sizes.clone(),
            hidden_activation: arch.hidden_activation,
            output_activation: arch.output_activation,
            weights: layers
                .clone()
                .map(|l| {
                    let (_, _, n_in, _) = arch.layer_span(l);
                    model.weights(l).chunks(n_in).map(<[f64]>::to_vec).collect()
                })
                .collect(),
            biases: layers.map(|l| model.biases(l).to_vec()).collect(),
            normalizer_file: normalizer_file.to_string(),
            normalizer: normalizer.clone(),
        }
    }

    pub fn model(&self) -> Result<MlpModel, HarnessError> {
        let arch = Architecture {
            layer_sizes: self.layer_sizes.clone(),
            hidden_activation: self.hidden_activation,
            output_activation: self.output_activation,
        };
        arch.validate()?;
        if self.weights.len() != arch.num_layers() || self.biases.len() != arch.num_layers() {
            return Err(HarnessError::Config(
                "model file: layer count does not match layer_sizes".into(),
            ));
        }
        let mut params = Vec::with_capacity(arch.param_count());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let (_, _, n_in, n_out) = arch.layer_span(l);
            if w.len() != n_out || w.iter().any(|row| row.len() != n_in) || b.len() != n_out {
                return Err(HarnessError::Config(format!(
                    "model file: layer {l} has the wrong shape"
                )));
            }
            params.extend(w.iter().flatten());
            params.extend(b);
        }
        Ok(MlpModel::from_parts(arch, params)?)
    }
}

pub fn write_model_json(path: &Path, model: &ModelFile) -> Result<(), HarnessError> {
    write_json(path, model)
}

pub fn read_model_json(path: &Path) -> Result<ModelFile, HarnessError> {
    read_json(path)
}
