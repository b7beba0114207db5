use hifloc_core::features::*;
use hifloc_core::netmodel::FaultScenario;
use hifloc_core::relay::{ImpedanceLocus, LocusPoint};
use hifloc_core::Phasor;
use proptest::prelude::*;

fn dataset_from(values: &[Vec<f64>], splits: &[Split]) -> Dataset {
    Dataset {
        rows: values
            .iter()
            .zip(splits)
            .enumerate()
            .map(|(i, (v, &split))| DatasetRow {
                features: FeatureVector {
                    values: v.clone(),
                    mode: FeatureMode::Focal,
                },
                target_km: 5.0 + i as f64,
                split,
            })
            .collect(),
        seed: 0,
    }
}

fn rows_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..6).prop_flat_map(|dim| prop::collection::vec(prop::collection::vec(-1e4f64..1e4, dim), 2..40))
}

proptest! {
    #[test]
    fn training_extrema_map_to_range_ends(rows in rows_strategy()) {
        let splits = vec![Split::Train; rows.len()];
        let ds = dataset_from(&rows, &splits);
        let norm = fit_normalizer(&ds, (5.0, 50.0)).unwrap();
        for (j, range) in norm.features.iter().enumerate() {
            let lo = rows.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min);
            let hi = rows.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(range.min, lo);
            prop_assert_eq!(range.max, hi);
        }
        for row in &rows {
            let y = norm.apply(row, Direction::Forward).unwrap();
            for (j, &v) in y.iter().enumerate() {
                if norm.features[j].is_degenerate() {
                    prop_assert_eq!(v, 0.5);
                } else {
                    prop_assert!((NORM_LO..=NORM_HI).contains(&v));
                    if row[j] == norm.features[j].min { prop_assert_eq!(v, NORM_LO); }
                    if row[j] == norm.features[j].max { prop_assert_eq!(v, NORM_HI); }
                }
            }
        }
    }

    #[test]
    fn forward_then_inverse_round_trips(rows in rows_strategy(), probe in prop::collection::vec(-2e4f64..2e4, 6)) {
        let splits = vec![Split::Train; rows.len()];
        let norm = fit_normalizer(&dataset_from(&rows, &splits), (5.0, 50.0)).unwrap();
        let x: Vec<f64> = probe[..norm.dim()]
            .iter()
            .enumerate()
            .map(|(j, &p)| if norm.features[j].is_degenerate() { norm.features[j].min } else { p })
            .collect();
        let back = norm.apply(&norm.apply(&x, Direction::Forward).unwrap(), Direction::Inverse).unwrap();
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
        let km = 5.0 + 45.0 * probe[0].abs() / 2e4;
        prop_assert!((norm.inverse_target(norm.forward_target(km)) - km).abs() < 1e-12);
    }

    #[test]
    fn splits_partition_rows(rows in 1usize..400, seed in any::<u64>()) {
        let ratios = SplitRatios::default();
        let a = assign_splits(rows, &ratios, seed).unwrap();
        prop_assert_eq!(a.len(), rows);
        prop_assert_eq!(&a, &assign_splits(rows, &ratios, seed).unwrap());
        let count = |s| a.iter().filter(|&&x| x == s).count();
        prop_assert_eq!(count(Split::Train) + count(Split::Validation) + count(Split::Test), rows);
        prop_assert_eq!(count(Split::Train), (rows as f64 * 0.7).round() as usize);
    }

    #[test]
    fn every_segment_visit_is_counted(points in prop::collection::vec((-5.0f64..115.0, -5.0f64..55.0), 1..60)) {
        // every point lies inside the default window, so nothing is clipped;
        // row 0 is the top edge of the window
        let locus = ImpedanceLocus {
            points: points
                .iter()
                .enumerate()
                .map(|(i, &(r, x))| LocusPoint { t_s: i as f64 * 1e-3, z: Phasor::new(r, x) })
                .collect(),
        };
        let n = 32;
        let image = rasterize_locus(&locus, &RasterWindow::default(), n).unwrap();
        let window = RasterWindow::default();
        let pixel = |&(r, x): &(f64, f64)| {
            let col = (((r - window.r_min) / (window.r_max - window.r_min) * n as f64).floor() as i64).min(n as i64 - 1);
            let row = (((window.x_max - x) / (window.x_max - window.x_min) * n as f64).floor() as i64).min(n as i64 - 1);
            (col, row)
        };
        // oracle: walk each segment between consecutive pixels and count
        // every change of pixel, plus the starting pixel
        let mut expected = 1u64;
        for pair in points.windows(2) {
            let (a, b) = (pixel(&pair[0]), pixel(&pair[1]));
            expected += (bresenham(a, b).len() - 1) as u64;
        }
        let total: u64 = image.grid.iter().map(|&v| v as u64).sum();
        prop_assert_eq!(total, expected);
    }
}

#[test]
fn fit_ignores_validation_and_test_rows() {
    let rows = vec![vec![0.0], vec![10.0], vec![-100.0], vec![100.0]];
    let ds = dataset_from(&rows, &[Split::Train, Split::Train, Split::Validation, Split::Test]);
    let norm = fit_normalizer(&ds, (5.0, 50.0)).unwrap();
    assert_eq!(norm.features[0], FeatureRange { min: 0.0, max: 10.0 });
}

#[test]
fn dataset_sizes_follow_grid() {
    let cfg = PipelineConfig::default();
    let distances: Vec<f64> = (1..=10).map(|k| 5.0 * k as f64).collect();
    let ds = build_dataset(&scenario_grid(&distances, &[50.0, 100.0], 0.04), &cfg).unwrap();
    assert_eq!(ds.rows.len(), 20);
    assert_eq!(ds.feature_dim(), 4);
    let targets: Vec<f64> = ds.rows.iter().map(|r| r.target_km).collect();
    assert_eq!(targets[..4], [5.0, 5.0, 10.0, 10.0]);

    let dense: Vec<f64> = (5..=50).map(|d| d as f64).collect();
    let ds = build_dataset(&scenario_grid(&dense, &[25.0, 50.0, 75.0, 100.0, 125.0], 0.04), &cfg).unwrap();
    assert_eq!(ds.rows.len(), 230);
    assert_eq!(
        (
            ds.count(Split::Train),
            ds.count(Split::Validation),
            ds.count(Split::Test)
        ),
        (161, 35, 34)
    );

    let empty: Vec<FaultScenario> = Vec::new();
    assert!(matches!(build_dataset(&empty, &cfg), Err(FeatureError::EmptyDataset)));
}
