//! Phasor model of a double-fed transmission line with a phase-a-to-ground
//! fault.
//!
//! The line is a lumped series impedance between two Thevenin sources. Bus A
//! (the relay terminal) sits between the local source impedance and the line.
//! All phasors carry peak amplitude, so a sampled waveform is `Re(P·e^{jωt})`.
//!
//! Faults are solved by connecting the positive, negative and zero sequence
//! networks in series through `3·Rf` and superposing the fault-induced change
//! on the pre-fault load flow.

use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{polar, Phasor, PhasorExt};

/// Relay current below which no load point exists.
pub const MIN_LOAD_CURRENT_A: f64 = 1e-9;

/// Series sequence impedance below which the fault cannot be solved.
pub const MIN_LOOP_IMPEDANCE_OHM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum NetError {
    #[error("invalid line parameters: {0}")]
    InvalidLine(&'static str),
    #[error("invalid source parameters: {0}")]
    InvalidSource(&'static str),
    #[error("invalid fault scenario: {0}")]
    InvalidScenario(&'static str),
    #[error("no pre-fault load flow: relay current is below {MIN_LOAD_CURRENT_A} A")]
    NoLoadFlow,
    #[error("degenerate network: series sequence impedance magnitude {0:e} ohm")]
    DegenerateNetwork(f64),
    #[error("sample rate {sample_rate_hz} Hz is not an integer multiple of {f_hz} Hz")]
    BadSampling { sample_rate_hz: f64, f_hz: f64 },
}

/// Series impedance per kilometre of the protected line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineParams {
    pub z1_per_km: Phasor,
    pub z0_per_km: Phasor,
    pub length_km: f64,
    pub f_hz: f64,
}

impl LineParams {
    pub fn validate(&self) -> Result<(), NetError> {
        if !(self.length_km > 0.0 && self.length_km.is_finite()) {
            return Err(NetError::InvalidLine("length_km must be positive"));
        }
        if !(self.f_hz > 0.0 && self.f_hz.is_finite()) {
            return Err(NetError::InvalidLine("f_hz must be positive"));
        }
        for z in [self.z1_per_km, self.z0_per_km] {
            if !(z.re >= 0.0 && z.im > 0.0) {
                return Err(NetError::InvalidLine("per-km impedances need Re >= 0 and Im > 0"));
            }
        }
        Ok(())
    }

    /// Positive-sequence impedance of the whole line.
    pub fn total_z1(&self) -> Phasor {
        self.z1_per_km * self.length_km
    }
}

/// Thevenin source behind a line terminal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    /// Line-to-neutral EMF of phase a (peak).
    pub emf: Phasor,
    /// Positive- and negative-sequence impedance.
    pub z1: Phasor,
    pub z0: Phasor,
}

impl SourceParams {
    pub fn validate(&self) -> Result<(), NetError> {
        if !(self.emf.magnitude() > 0.0) {
            return Err(NetError::InvalidSource("emf magnitude must be positive"));
        }
        if !(self.z1.im > 0.0) {
            return Err(NetError::InvalidSource("z1 must be inductive"));
        }
        Ok(())
    }
}

/// The protected line with its local source and an optional remote source.
///
/// With `remote = None` the far end is open and the line is radial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub line: LineParams,
    pub local: SourceParams,
    pub remote: Option<SourceParams>,
}

/// 154 kV, 50 Hz, 60 km line between a 0° and a −10° source.
impl Default for Network {
    fn default() -> Self {
        let emf_peak = 154e3 / libm::sqrt(3.0) * libm::sqrt(2.0);
        Self {
            line: LineParams {
                z1_per_km: Phasor::new(0.05, 0.488),
                z0_per_km: Phasor::new(0.25, 1.45),
                length_km: 60.0,
                f_hz: 50.0,
            },
            local: SourceParams {
                emf: crate::polar_deg(emf_peak, 0.0),
                z1: Phasor::new(0.0, 10.0),
                z0: Phasor::new(0.0, 15.0),
            },
            remote: Some(SourceParams {
                emf: crate::polar_deg(emf_peak, -10.0),
                z1: Phasor::new(0.0, 12.0),
                z0: Phasor::new(0.0, 18.0),
            }),
        }
    }
}

impl Network {
    pub fn validate(&self) -> Result<(), NetError> {
        self.line.validate()?;
        self.local.validate()?;
        if let Some(remote) = &self.remote {
            remote.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultKind {
    #[default]
    PhaseAToGround,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultScenario {
    /// Distance from the relay terminal.
    pub distance_km: f64,
    pub rf_ohm: f64,
    pub inception_s: f64,
    #[serde(default)]
    pub kind: FaultKind,
}

impl FaultScenario {
    pub fn phase_a_to_ground(distance_km: f64, rf_ohm: f64, inception_s: f64) -> Self {
        Self {
            distance_km,
            rf_ohm,
            inception_s,
            kind: FaultKind::PhaseAToGround,
        }
    }

    pub fn validate(&self, line: &LineParams) -> Result<(), NetError> {
        if !(self.distance_km > 0.0 && self.distance_km < line.length_km) {
            return Err(NetError::InvalidScenario(
                "distance_km must lie strictly inside the line",
            ));
        }
        if !(self.rf_ohm >= 0.0) {
            return Err(NetError::InvalidScenario("rf_ohm must be non-negative"));
        }
        if !(self.inception_s >= 0.0 && self.inception_s.is_finite()) {
            return Err(NetError::InvalidScenario("inception_s must be non-negative"));
        }
        Ok(())
    }
}

/// Positive, negative and zero sequence components of one quantity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SequenceSet {
    pub pos: Phasor,
    pub neg: Phasor,
    pub zero: Phasor,
}

impl SequenceSet {
    /// Phase quantities `[a, b, c]` from symmetrical components.
    pub fn to_abc(&self) -> [Phasor; 3] {
        let a = operator_a();
        let a2 = a * a;
        [
            self.zero + self.pos + self.neg,
            self.zero + a2 * self.pos + a * self.neg,
            self.zero + a * self.pos + a2 * self.neg,
        ]
    }

    /// Symmetrical components of phase quantities `[a, b, c]`.
    pub fn from_abc(abc: [Phasor; 3]) -> Self {
        let a = operator_a();
        let a2 = a * a;
        let third = 1.0 / 3.0;
        Self {
            zero: (abc[0] + abc[1] + abc[2]) * third,
            pos: (abc[0] + a * abc[1] + a2 * abc[2]) * third,
            neg: (abc[0] + a2 * abc[1] + a * abc[2]) * third,
        }
    }
}

/// The rotation operator `a = 1∠120°`.
pub fn operator_a() -> Phasor {
    Phasor::new(-0.5, libm::sqrt(3.0) / 2.0)
}

/// Steady-state phasors at the relay terminal, plus the fault-point currents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkSolution {
    /// Sequence currents drawn by the fault; all zero before the fault.
    pub i_seq_fault: SequenceSet,
    pub v_relay_abc: [Phasor; 3],
    /// Phase currents flowing from bus A into the line.
    pub i_relay_abc: [Phasor; 3],
    /// `3·I0` on the relay side.
    pub i_relay_residual: Phasor,
    /// `Z1 + Z2 + Z0 + 3·Rf` seen from the fault point, when faulted.
    pub fault_loop_impedance: Option<Phasor>,
}

/// Balanced load flow before the fault, without the no-load check.
///
/// A radial network gives zero relay current and the source EMF at bus A.
pub fn prefault_solution(net: &Network) -> Result<NetworkSolution, NetError> {
    net.validate()?;
    let current = load_current(net);
    let v_pos = net.local.emf - net.local.z1 * current;
    let v = SequenceSet {
        pos: v_pos,
        ..SequenceSet::default()
    };
    let i = SequenceSet {
        pos: current,
        ..SequenceSet::default()
    };
    Ok(NetworkSolution {
        i_seq_fault: SequenceSet::default(),
        v_relay_abc: v.to_abc(),
        i_relay_abc: i.to_abc(),
        i_relay_residual: Phasor::new(0.0, 0.0),
        fault_loop_impedance: None,
    })
}

/// Pre-fault state of the network.
///
/// Fails with [`NetError::NoLoadFlow`] when no current circulates, because the
/// load point `Z = V/I` is then undefined.
pub fn prefault_state(net: &Network) -> Result<NetworkSolution, NetError> {
    let sol = prefault_solution(net)?;
    if sol.i_relay_abc[0].magnitude() < MIN_LOAD_CURRENT_A {
        return Err(NetError::NoLoadFlow);
    }
    Ok(sol)
}

fn load_current(net: &Network) -> Phasor {
    match &net.remote {
        Some(remote) => (net.local.emf - remote.emf) / (net.local.z1 + net.line.total_z1() + remote.z1),
        None => Phasor::new(0.0, 0.0),
    }
}

fn parallel(a: Phasor, b: Phasor) -> Phasor {
    a * b / (a + b)
}

/// Solve a phase-a-to-ground fault through `scenario.rf_ohm`.
pub fn solve_slg_fault(net: &Network, scenario: &FaultScenario) -> Result<NetworkSolution, NetError> {
    scenario.validate(&net.line)?;
    let pre = prefault_solution(net)?;
    let line = &net.line;
    let d = scenario.distance_km;
    let i_load = pre.i_relay_abc[0];
    let v_pre_relay = pre.v_relay_abc[0];
    let e_pre = v_pre_relay - line.z1_per_km * d * i_load;

    // Impedance of the A-side branch and, if present, the B-side branch seen
    // from the fault point, for the positive and zero sequence networks.
    let near = |z_src: Phasor, z_km: Phasor| z_src + z_km * d;
    let far = |z_src: Phasor, z_km: Phasor| z_src + z_km * (line.length_km - d);
    let near1 = near(net.local.z1, line.z1_per_km);
    let near0 = near(net.local.z0, line.z0_per_km);
    let (z1_th, z0_th, share1, share0) = match &net.remote {
        Some(remote) => {
            let far1 = far(remote.z1, line.z1_per_km);
            let far0 = far(remote.z0, line.z0_per_km);
            (
                parallel(near1, far1),
                parallel(near0, far0),
                far1 / (near1 + far1),
                far0 / (near0 + far0),
            )
        }
        None => (near1, near0, Phasor::new(1.0, 0.0), Phasor::new(1.0, 0.0)),
    };

    let loop_z = z1_th * 2.0 + z0_th + 3.0 * scenario.rf_ohm;
    if loop_z.magnitude() < MIN_LOOP_IMPEDANCE_OHM {
        return Err(NetError::DegenerateNetwork(loop_z.magnitude()));
    }
    let i_f = e_pre / loop_z;
    let i_seq_fault = SequenceSet {
        pos: i_f,
        neg: i_f,
        zero: i_f,
    };

    let di = SequenceSet {
        pos: share1 * i_f,
        neg: share1 * i_f,
        zero: share0 * i_f,
    };
    let i_relay = SequenceSet {
        pos: i_load + di.pos,
        neg: di.neg,
        zero: di.zero,
    };
    let v_relay = SequenceSet {
        pos: v_pre_relay - net.local.z1 * di.pos,
        neg: -net.local.z1 * di.neg,
        zero: -net.local.z0 * di.zero,
    };

    Ok(NetworkSolution {
        i_seq_fault,
        v_relay_abc: v_relay.to_abc(),
        i_relay_abc: i_relay.to_abc(),
        i_relay_residual: i_relay.zero * 3.0,
        fault_loop_impedance: Some(loop_z),
    })
}

/// Optional decaying DC component added to the post-fault currents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DcOffset {
    #[default]
    Off,
    /// Exponential offset that keeps the currents continuous at inception,
    /// decaying with the `L/R` time constant of the fault loop.
    LoopTimeConstant,
}

/// 20 samples per cycle at 50 Hz, five cycles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingSpec {
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    #[serde(default)]
    pub dc_offset: DcOffset,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        Self {
            sample_rate_hz: 1000.0,
            duration_s: 0.1,
            dc_offset: DcOffset::Off,
        }
    }
}

/// Sampled phase-a voltage, phase-a current and residual current at the
/// relay terminal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformSet {
    pub sample_rate_hz: f64,
    pub t0_s: f64,
    pub samples_va: Vec<f64>,
    pub samples_ia: Vec<f64>,
    pub samples_iresidual: Vec<f64>,
}

impl WaveformSet {
    pub fn len(&self) -> usize {
        self.samples_va.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples_va.is_empty()
    }

    /// Time of sample `k`.
    pub fn time_of(&self, k: usize) -> f64 {
        self.t0_s + k as f64 / self.sample_rate_hz
    }
}

/// Integer samples per cycle, or [`NetError::BadSampling`].
pub fn samples_per_cycle(sample_rate_hz: f64, f_hz: f64) -> Result<usize, NetError> {
    let bad = NetError::BadSampling { sample_rate_hz, f_hz };
    if !(sample_rate_hz > 0.0 && f_hz > 0.0) {
        return Err(bad);
    }
    let ratio = sample_rate_hz / f_hz;
    let rounded = libm::round(ratio);
    if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * rounded {
        return Err(bad);
    }
    Ok(rounded as usize)
}

/// Sample `Re(P·e^{jωt})` with `P` switching from the pre-fault to the
/// post-fault phasor at `scenario.inception_s`.
pub fn synthesize_waveforms(
    pre: &NetworkSolution,
    post: &NetworkSolution,
    scenario: &FaultScenario,
    f_hz: f64,
    spec: &SamplingSpec,
) -> Result<WaveformSet, NetError> {
    samples_per_cycle(spec.sample_rate_hz, f_hz)?;
    let count = libm::round(spec.duration_s * spec.sample_rate_hz).max(0.0) as usize;
    let omega = 2.0 * PI * f_hz;
    let t_inc = scenario.inception_s;

    let tau = match (spec.dc_offset, post.fault_loop_impedance) {
        (DcOffset::LoopTimeConstant, Some(z)) if z.re > 0.0 => Some(z.im / (omega * z.re)),
        _ => None,
    };
    // Offset amplitude that makes pre- and post-fault currents agree at t_inc.
    let jump = |p_pre: Phasor, p_post: Phasor| {
        let rot = polar(1.0, omega * t_inc);
        (p_pre * rot).re - (p_post * rot).re
    };

    let series = |p_pre: Phasor, p_post: Phasor, with_offset: bool| -> Vec<f64> {
        let offset = if with_offset {
            tau.map(|tau| (tau, jump(p_pre, p_post)))
        } else {
            None
        };
        (0..count)
            .map(|k| {
                let t = k as f64 / spec.sample_rate_hz;
                let rot = polar(1.0, omega * t);
                if t < t_inc {
                    (p_pre * rot).re
                } else {
                    let steady = (p_post * rot).re;
                    match offset {
                        Some((tau, amp)) if tau > 0.0 => steady + amp * libm::exp(-(t - t_inc) / tau),
                        _ => steady,
                    }
                }
            })
            .collect()
    };

    Ok(WaveformSet {
        sample_rate_hz: spec.sample_rate_hz,
        t0_s: 0.0,
        samples_va: series(pre.v_relay_abc[0], post.v_relay_abc[0], false),
        samples_ia: series(pre.i_relay_abc[0], post.i_relay_abc[0], true),
        samples_iresidual: series(pre.i_relay_residual, post.i_relay_residual, true),
    })
}
