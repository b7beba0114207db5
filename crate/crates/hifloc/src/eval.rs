//! Fault-location results tables: one row per evaluated fault, one
//! prediction column per optimizer, MSE footer.

use std::fmt::Write as _;

use hifloc_core::features::{DatasetRow, Direction, NormalizationParams};
use hifloc_core::neuralnet::{MlpModel, NetError};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultsColumn {
    pub label: String,
    pub predicted_km: Vec<f64>,
    pub mse_km2: f64,
    /// Mean squared error on the `[0.1, 0.9]` training scale.
    pub mse_normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultsTable {
    /// Ascending.
    pub real_km: Vec<f64>,
    pub columns: Vec<ResultsColumn>,
}

impl ResultsTable {
    /// Build a one-column table from predictions in kilometres. Rows are
    /// sorted by true distance; ties keep their input order.
    pub fn from_predictions(
        label: &str,
        real_km: &[f64],
        predicted_km: &[f64],
        normalizer: &NormalizationParams,
    ) -> Result<Self, NetError> {
        if real_km.len() != predicted_km.len() {
            return Err(NetError::DimensionMismatch {
                expected: real_km.len(),
                got: predicted_km.len(),
            });
        }
        if real_km.is_empty() {
            return Err(NetError::EmptyBatch);
        }
        let mut order: Vec<usize> = (0..real_km.len()).collect();
        order.sort_by(|&a, &b| real_km[a].total_cmp(&real_km[b]));
        let real: Vec<f64> = order.iter().map(|&i| real_km[i]).collect();
        let pred: Vec<f64> = order.iter().map(|&i| predicted_km[i]).collect();
        let m = real.len() as f64;
        let mse_km2 = real.iter().zip(&pred).map(|(r, p)| (p - r) * (p - r)).sum::<f64>() / m;
        let mse_normalized = real
            .iter()
            .zip(&pred)
            .map(|(&r, &p)| {
                let e = normalizer.forward_target(p) - normalizer.forward_target(r);
                e * e
            })
            .sum::<f64>()
            / m;
        Ok(Self {
            real_km: real,
            columns: vec![ResultsColumn {
                label: label.to_string(),
                predicted_km: pred,
                mse_km2,
                mse_normalized,
            }],
        })
    }

    /// Append the columns of a table evaluated on the same rows.
    pub fn join(mut self, other: ResultsTable) -> Result<Self, NetError> {
        if other.real_km != self.real_km {
            return Err(NetError::DimensionMismatch {
                expected: self.real_km.len(),
                got: other.real_km.len(),
            });
        }
        self.columns.extend(other.columns);
        Ok(self)
    }

    pub fn mean_abs_error(&self, column: usize) -> f64 {
        let c = &self.columns[column];
        self.real_km
            .iter()
            .zip(&c.predicted_km)
            .map(|(r, p)| (p - r).abs())
            .sum::<f64>()
            / self.real_km.len() as f64
    }

    pub fn max_abs_error(&self, column: usize) -> f64 {
        let c = &self.columns[column];
        self.real_km
            .iter()
            .zip(&c.predicted_km)
            .map(|(r, p)| (p - r).abs())
            .fold(0.0, f64::max)
    }

    /// Full-precision CSV; the last two rows hold the MSE values.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("real_km");
        for c in &self.columns {
            write!(out, ",{}", c.label).unwrap();
        }
        out.push('\n');
        for (i, r) in self.real_km.iter().enumerate() {
            write!(out, "{r}").unwrap();
            for c in &self.columns {
                write!(out, ",{}", c.predicted_km[i]).unwrap();
            }
            out.push('\n');
        }
        for (name, pick) in [("mse_km2", 0), ("mse_normalized", 1)] {
            out.push_str(name);
            for c in &self.columns {
                let v = if pick == 0 { c.mse_km2 } else { c.mse_normalized };
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Aligned text table, distances to four decimals and MSE in scientific
    /// notation.
    pub fn to_text(&self) -> String {
        let width = self.columns.iter().map(|c| c.label.len()).max().unwrap_or(0).max(14);
        let mut out = format!("{:>17}", "Real Distance(km)");
        for c in &self.columns {
            write!(out, "  {:>width$}", c.label.to_uppercase()).unwrap();
        }
        out.push('\n');
        for (i, r) in self.real_km.iter().enumerate() {
            write!(out, "{r:>17.4}").unwrap();
            for c in &self.columns {
                write!(out, "  {:>width$.4}", c.predicted_km[i]).unwrap();
            }
            out.push('\n');
        }
        for (name, pick) in [("MSE (km^2)", 0), ("MSE (norm.)", 1)] {
            write!(out, "{name:>17}").unwrap();
            for c in &self.columns {
                let v = if pick == 0 { c.mse_km2 } else { c.mse_normalized };
                write!(out, "  {v:>width$.5e}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Predicted distance of one feature vector.
pub fn predict_km(model: &MlpModel, normalizer: &NormalizationParams, features: &[f64]) -> Result<f64, NetError> {
    let x = normalizer
        .apply(features, Direction::Forward)
        .map_err(|_| NetError::DimensionMismatch {
            expected: normalizer.dim(),
            got: features.len(),
        })?;
    Ok(normalizer.inverse_target(model.forward(&x)?[0]))
}

/// Run the network on `rows` and tabulate predicted against true distance.
pub fn evaluate_locator(
    label: &str,
    model: &MlpModel,
    normalizer: &NormalizationParams,
    rows: &[&DatasetRow],
) -> Result<ResultsTable, NetError> {
    let real: Vec<f64> = rows.iter().map(|r| r.target_km).collect();
    let pred = rows
        .iter()
        .map(|r| predict_km(model, normalizer, &r.features.values))
        .collect::<Result<Vec<_>, _>>()?;
    ResultsTable::from_predictions(label, &real, &pred, normalizer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hifloc_core::features::FeatureRange;

    fn norm(lo: f64, hi: f64) -> NormalizationParams {
        NormalizationParams {
            features: vec![FeatureRange { min: 0.0, max: 1.0 }],
            target: FeatureRange { min: lo, max: hi },
            lo: 0.1,
            hi: 0.9,
        }
    }

    #[test]
    fn perfect_predictor_has_zero_error() {
        let real = [5.0, 10.0, 15.0];
        let t = ResultsTable::from_predictions("gdx", &real, &real, &norm(5.0, 50.0)).unwrap();
        assert_eq!(t.columns[0].mse_km2, 0.0);
        assert_eq!(t.columns[0].mse_normalized, 0.0);
    }

    #[test]
    fn rows_sorted_by_distance() {
        let t = ResultsTable::from_predictions("x", &[30.0, 5.0, 20.0], &[31.0, 6.0, 19.0], &norm(5.0, 50.0)).unwrap();
        assert_eq!(t.real_km, [5.0, 20.0, 30.0]);
        assert_eq!(t.columns[0].predicted_km, [6.0, 19.0, 31.0]);
        assert_eq!(t.max_abs_error(0), 1.0);
    }

    #[test]
    fn join_rejects_other_rows() {
        let n = norm(5.0, 50.0);
        let a = ResultsTable::from_predictions("a", &[5.0], &[5.0], &n).unwrap();
        let b = ResultsTable::from_predictions("b", &[10.0], &[10.0], &n).unwrap();
        assert!(a.join(b).is_err());
    }

    #[test]
    fn text_uses_four_decimals() {
        let t = ResultsTable::from_predictions("cgb", &[25.0], &[24.7611], &norm(5.0, 50.0)).unwrap();
        let text = t.to_text();
        assert!(text.contains("25.0000"));
        assert!(text.contains("24.7611"));
        assert!(text.contains("CGB"));
    }
}
