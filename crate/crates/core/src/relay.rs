//! Distance relay measurement chain.
//!
//! Phasors come from a one-cycle DFT sliding one sample at a time over the
//! relay-terminal waveforms. Each window gives one apparent impedance
//! `Va / (Ia + k0·3I0)`, and the resulting locus is tested against a mho
//! circle through the origin.

use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netmodel::{LineParams, WaveformSet};
use crate::{polar_deg, Phasor, PhasorExt};

/// Loop current below which the apparent impedance is undefined.
pub const MIN_LOOP_CURRENT_A: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum RelayError {
    #[error("DFT window has {got} samples, expected {expected} (at least 4)")]
    BadWindow { got: usize, expected: usize },
    #[error("loop current {0:e} A is too small for an impedance measurement")]
    ZeroCurrent(f64),
    #[error("record of {got} samples is shorter than one cycle of {needed}")]
    RecordTooShort { got: usize, needed: usize },
    #[error("invalid mho zone: {0}")]
    InvalidZone(&'static str),
    #[error("phasor estimates are not time aligned")]
    Misaligned,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasorEstimate {
    pub value: Phasor,
    /// Time of the last sample in the window.
    pub t_s: f64,
}

/// Fundamental-frequency phasor `(2/N)·Σ x[n]·e^{−j2πn/N}` of one cycle.
///
/// The phase is referenced to the first sample of the window.
pub fn dft_phasor(window: &[f64], samples_per_cycle: usize) -> Result<Phasor, RelayError> {
    if samples_per_cycle < 4 || window.len() != samples_per_cycle {
        return Err(RelayError::BadWindow {
            got: window.len(),
            expected: samples_per_cycle.max(4),
        });
    }
    let twiddles = Twiddles::new(samples_per_cycle);
    Ok(twiddles.apply(window))
}

/// Precomputed `(2/N)·e^{−j2πn/N}` factors.
struct Twiddles(Vec<Phasor>);

impl Twiddles {
    fn new(n: usize) -> Self {
        let scale = 2.0 / n as f64;
        Self(
            (0..n)
                .map(|k| {
                    let angle = -2.0 * PI * k as f64 / n as f64;
                    Phasor::new(libm::cos(angle), libm::sin(angle)) * scale
                })
                .collect(),
        )
    }

    fn apply(&self, window: &[f64]) -> Phasor {
        self.0
            .iter()
            .zip(window)
            .fold(Phasor::new(0.0, 0.0), |acc, (w, &x)| acc + w * x)
    }
}

/// Zero-sequence compensation factor `k0 = (z0 − z1) / (3·z1)`.
pub fn residual_compensation_factor(z1: Phasor, z0: Phasor) -> Phasor {
    (z0 - z1) / (z1 * 3.0)
}

/// Ground-loop apparent impedance `Va / (Ia + k0·Iresidual)`.
///
/// With `k0 = 0` this is the plain `V/I` ratio.
pub fn apparent_impedance(
    va: &PhasorEstimate,
    ia: &PhasorEstimate,
    iresidual: &PhasorEstimate,
    k0: Phasor,
) -> Result<Phasor, RelayError> {
    if va.t_s != ia.t_s || va.t_s != iresidual.t_s {
        return Err(RelayError::Misaligned);
    }
    impedance_ratio(va.value, ia.value, iresidual.value, k0)
}

fn impedance_ratio(va: Phasor, ia: Phasor, iresidual: Phasor, k0: Phasor) -> Result<Phasor, RelayError> {
    let denom = ia + k0 * iresidual;
    let mag = denom.magnitude();
    if !(mag >= MIN_LOOP_CURRENT_A) {
        return Err(RelayError::ZeroCurrent(mag));
    }
    Ok(va / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocusPoint {
    pub t_s: f64,
    pub z: Phasor,
}

/// Time-ordered apparent impedance trajectory.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ImpedanceLocus {
    pub points: Vec<LocusPoint>,
}

impl ImpedanceLocus {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> Option<&LocusPoint> {
        self.points.last()
    }
}

/// Slide a one-cycle window over the record and compute one impedance per
/// window position. Positions with no measurable loop current are skipped.
pub fn track_locus(waves: &WaveformSet, samples_per_cycle: usize, k0: Phasor) -> Result<ImpedanceLocus, RelayError> {
    let n = samples_per_cycle;
    if n < 4 {
        return Err(RelayError::BadWindow { got: n, expected: 4 });
    }
    let len = waves.len();
    if len < n {
        return Err(RelayError::RecordTooShort { got: len, needed: n });
    }
    let twiddles = Twiddles::new(n);
    let points = (0..=len - n)
        .filter_map(|start| {
            let end = start + n;
            let va = twiddles.apply(&waves.samples_va[start..end]);
            let ia = twiddles.apply(&waves.samples_ia[start..end]);
            let ir = twiddles.apply(&waves.samples_iresidual[start..end]);
            impedance_ratio(va, ia, ir, k0).ok().map(|z| LocusPoint {
                t_s: waves.time_of(end - 1),
                z,
            })
        })
        .collect();
    Ok(ImpedanceLocus { points })
}

/// Mho circle through the origin with diameter `reach_ohm∠angle_deg`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MhoZone {
    pub reach_ohm: f64,
    pub angle_deg: f64,
}

impl MhoZone {
    pub fn new(reach_ohm: f64, angle_deg: f64) -> Result<Self, RelayError> {
        let zone = Self { reach_ohm, angle_deg };
        zone.validate()?;
        Ok(zone)
    }

    /// Zone reaching `fraction` of the line positive-sequence impedance, at
    /// the line angle.
    pub fn from_line(line: &LineParams, fraction: f64) -> Result<Self, RelayError> {
        let z = line.total_z1();
        Self::new(fraction * z.magnitude(), z.angle().to_degrees())
    }

    pub fn validate(&self) -> Result<(), RelayError> {
        if !(self.reach_ohm > 0.0 && self.reach_ohm.is_finite()) {
            return Err(RelayError::InvalidZone("reach must be positive"));
        }
        if !(self.angle_deg > 0.0 && self.angle_deg < 180.0) {
            return Err(RelayError::InvalidZone("angle must lie in (0, 180) degrees"));
        }
        Ok(())
    }

    pub fn center(&self) -> Phasor {
        polar_deg(self.reach_ohm / 2.0, self.angle_deg)
    }

    pub fn radius(&self) -> f64 {
        self.reach_ohm / 2.0
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            reach_ohm: self.reach_ohm * s,
            angle_deg: self.angle_deg,
        }
    }
}

/// `|z − c| ≤ |c|`, boundary inclusive.
///
/// A relative slack of a few ulps absorbs the rounding of points placed
/// exactly on the characteristic.
pub fn mho_contains(z: Phasor, zone: &MhoZone) -> bool {
    let c = zone.center();
    let r = c.magnitude();
    (z - c).magnitude() <= r * (1.0 + 4.0 * f64::EPSILON)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelayDecision {
    pub tripped: bool,
    pub trip_time_s: Option<f64>,
    /// Index of the first locus point inside the zone, if any.
    pub first_inzone_index: Option<usize>,
}

/// Trip on the first run of `dwell` consecutive in-zone locus points.
pub fn decide_trip(locus: &ImpedanceLocus, zone: &MhoZone, dwell: usize) -> RelayDecision {
    let dwell = dwell.max(1);
    let mut run = 0;
    let mut first_inzone_index = None;
    for (k, p) in locus.points.iter().enumerate() {
        if mho_contains(p.z, zone) {
            first_inzone_index.get_or_insert(k);
            run += 1;
            if run == dwell {
                return RelayDecision {
                    tripped: true,
                    trip_time_s: Some(p.t_s),
                    first_inzone_index,
                };
            }
        } else {
            run = 0;
        }
    }
    RelayDecision {
        tripped: false,
        trip_time_s: None,
        first_inzone_index,
    }
}
