use std::f64::consts::PI;

use hifloc_core::features::{simulate_fault, Compensation, FeatureMode, PipelineConfig, RasterWindow, SplitRatios};
use hifloc_core::netmodel::*;
use hifloc_core::relay::*;
use hifloc_core::{polar_deg, Phasor};
use proptest::prelude::*;

fn config(remote: bool) -> PipelineConfig {
    let emf = 154e3 / 3f64.sqrt() * 2f64.sqrt();
    PipelineConfig {
        network: Network {
            line: LineParams {
                z1_per_km: Phasor::new(0.05, 0.488),
                z0_per_km: Phasor::new(0.25, 1.45),
                length_km: 60.0,
                f_hz: 50.0,
            },
            local: SourceParams {
                emf: polar_deg(emf, 0.0),
                z1: Phasor::new(0.0, 10.0),
                z0: Phasor::new(0.0, 15.0),
            },
            remote: remote.then(|| SourceParams {
                emf: polar_deg(emf, -10.0),
                z1: Phasor::new(0.0, 12.0),
                z0: Phasor::new(0.0, 18.0),
            }),
        },
        sampling: SamplingSpec {
            sample_rate_hz: 1000.0,
            duration_s: 0.1,
            dc_offset: DcOffset::Off,
        },
        compensation: Compensation::Residual,
        raster_window: RasterWindow::default(),
        raster_n: 32,
        feature_mode: FeatureMode::Focal,
        split: SplitRatios::default(),
        seed: 1,
    }
}

/// Direct `(2/N)·Σ x[n]·(cos − j·sin)` over one window.
fn brute_phasor(x: &[f64]) -> Phasor {
    let n = x.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for (k, v) in x.iter().enumerate() {
        let a = 2.0 * PI * k as f64 / n;
        re += v * a.cos();
        im -= v * a.sin();
    }
    Phasor::new(re, im) * (2.0 / n)
}

#[test]
fn locus_transition_spans_one_cycle_of_windows() {
    let cfg = config(true);
    let n = 20;
    // inception exactly at sample 40
    let sc = FaultScenario::phase_a_to_ground(25.0, 50.0, 0.0395);
    let sim = simulate_fault(&cfg, &sc).unwrap();
    let w = &sim.waves;
    let first_post = (0..w.len()).find(|&k| w.time_of(k) >= sc.inception_s).unwrap();
    assert_eq!(first_post, 40);
    assert_eq!(sim.locus.len(), w.len() - n + 1);

    let k0 = cfg.k0();
    let oracle: Vec<Phasor> = (0..=w.len() - n)
        .map(|s| {
            let va = brute_phasor(&w.samples_va[s..s + n]);
            let ia = brute_phasor(&w.samples_ia[s..s + n]);
            let ir = brute_phasor(&w.samples_iresidual[s..s + n]);
            va / (ia + k0 * ir)
        })
        .collect();
    for (p, z) in sim.locus.points.iter().zip(&oracle) {
        assert!((p.z - z).norm() < 1e-9 * z.norm());
    }

    let load = oracle[0];
    let fault = *oracle.last().unwrap();
    let last_pre_window = first_post - n;
    for (s, z) in oracle.iter().enumerate() {
        if s <= last_pre_window {
            assert!((z - load).norm() < 1e-9 * load.norm(), "window {s}");
        } else if s >= first_post {
            assert!((z - fault).norm() < 1e-9 * fault.norm(), "window {s}");
        } else {
            assert!((z - load).norm() > 1e-6 && (z - fault).norm() > 1e-6, "window {s}");
        }
    }
    assert_eq!(first_post - last_pre_window, n);
}

#[test]
fn radial_bolted_locus_settles_on_line_impedance() {
    let cfg = config(false);
    for k in 1..=10 {
        let d = 5.0 * k as f64;
        let sim = simulate_fault(&cfg, &FaultScenario::phase_a_to_ground(d, 0.0, 0.04)).unwrap();
        let settled = sim.locus.last().unwrap().z;
        let expected = cfg.network.line.z1_per_km * d;
        assert!(
            (settled - expected).norm() / expected.norm() < 1e-6,
            "{d} km: {settled}"
        );
        // no load flow before the fault, so only windows touching the fault remain
        assert!(sim.locus.len() < sim.waves.len() - 20 + 1);
    }
}

#[test]
fn high_impedance_fault_stays_outside_zone() {
    let cfg = config(true);
    let zone = MhoZone::from_line(&cfg.network.line, 0.8).unwrap();
    let run = |rf| {
        let sim = simulate_fault(&cfg, &FaultScenario::phase_a_to_ground(30.0, rf, 0.04)).unwrap();
        decide_trip(&sim.locus, &zone, 3)
    };
    let bolted = run(0.0);
    assert!(bolted.tripped);
    assert!(bolted.trip_time_s.unwrap() > 0.04);
    let hif = run(100.0);
    assert!(!hif.tripped);
    assert_eq!(hif.first_inzone_index, None);
}

#[test]
fn raw_ratio_mode_differs_for_ground_faults() {
    let mut cfg = config(false);
    cfg.compensation = Compensation::Raw;
    let sim = simulate_fault(&cfg, &FaultScenario::phase_a_to_ground(30.0, 0.0, 0.04)).unwrap();
    let z = sim.locus.last().unwrap().z;
    // without compensation the ground loop over-reaches by the zero-sequence term
    assert!(z.norm() > (cfg.network.line.z1_per_km * 30.0).norm() * 1.2);
}

#[test]
fn locus_is_deterministic() {
    let cfg = config(true);
    let sc = FaultScenario::phase_a_to_ground(17.0, 75.0, 0.043);
    let a = simulate_fault(&cfg, &sc).unwrap();
    let b = simulate_fault(&cfg, &sc).unwrap();
    let bits = |l: &ImpedanceLocus| {
        l.points
            .iter()
            .flat_map(|p| [p.t_s.to_bits(), p.z.re.to_bits(), p.z.im.to_bits()])
            .collect::<Vec<_>>()
    };
    assert_eq!(bits(&a.locus), bits(&b.locus));
}

fn cosine(n: usize, amp: f64, phase: f64, order: usize) -> Vec<f64> {
    (0..n)
        .map(|k| amp * (2.0 * PI * (order * k) as f64 / n as f64 + phase).cos())
        .collect()
}

proptest! {
    #[test]
    fn dft_is_exact_for_fundamental(n in 4usize..=64, amp in 1e-3f64..1e6, phase in 0.0f64..(2.0 * PI)) {
        let p = dft_phasor(&cosine(n, amp, phase, 1), n).unwrap();
        let expected = Phasor::from_polar(amp, phase);
        prop_assert!((p - expected).norm() < 1e-12 * amp);
    }

    #[test]
    fn dft_rejects_harmonics(
        n in 6usize..=64,
        amp in 0.1f64..1e4,
        phase in 0.0f64..(2.0 * PI),
        h_frac in 0.0f64..1.0,
        h_amp in 0.0f64..2.0,
        h_phase in 0.0f64..(2.0 * PI),
    ) {
        let orders = n / 2 - 2;
        prop_assume!(orders >= 1);
        let order = 2 + ((h_frac * orders as f64) as usize).min(orders - 1);
        let clean = dft_phasor(&cosine(n, amp, phase, 1), n).unwrap();
        let mixed: Vec<f64> = cosine(n, amp, phase, 1)
            .iter()
            .zip(cosine(n, h_amp * amp, h_phase, order))
            .map(|(a, b)| a + b)
            .collect();
        let noisy = dft_phasor(&mixed, n).unwrap();
        prop_assert!((noisy - clean).norm() < 1e-9 * amp);
    }

    #[test]
    fn mho_is_homothetic(
        reach in 0.5f64..200.0,
        angle in 1.0f64..179.0,
        r in -300.0f64..300.0,
        x in -300.0f64..300.0,
        s in 1e-3f64..1e3,
    ) {
        let zone = MhoZone::new(reach, angle).unwrap();
        let z = Phasor::new(r, x);
        let ratio = (z - zone.center()).norm() / zone.radius();
        prop_assume!((ratio - 1.0).abs() > 1e-9);
        prop_assert_eq!(mho_contains(z * s, &zone.scaled(s)), mho_contains(z, &zone));
        prop_assert!(mho_contains(Phasor::new(0.0, 0.0), &zone));
    }
}
