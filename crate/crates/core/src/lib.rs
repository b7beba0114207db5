//! Core numerics for locating phase-a-to-ground faults on a double-fed
//! transmission line from the impedance locus seen by a distance relay.
//!
//! The pipeline runs in four stages, each in its own module:
//!
//! * [`netmodel`] solves the faulted network with symmetrical components and
//!   synthesizes sampled relay-terminal waveforms.
//! * [`relay`] estimates phasors with a sliding full-cycle DFT, tracks the
//!   apparent impedance locus and applies the mho zone trip rule.
//! * [`features`] rasterizes loci, extracts location features, normalizes
//!   them into `[0.1, 0.9]` and assembles datasets.
//! * [`neuralnet`] holds the feedforward network and the GDX, SCG and CGB
//!   training functions.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, plotting and
//! the command line live in the companion `hifloc` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod features;
pub mod netmodel;
pub mod neuralnet;
pub mod relay;

pub use num_complex::Complex64;

/// Complex impedance, voltage or current phasor.
pub type Phasor = Complex64;

/// Build a phasor from magnitude and angle in degrees.
pub fn polar_deg(magnitude: f64, angle_deg: f64) -> Phasor {
    polar(magnitude, angle_deg.to_radians())
}

/// Build a phasor from magnitude and angle in radians.
pub fn polar(magnitude: f64, angle_rad: f64) -> Phasor {
    Phasor::new(magnitude * libm::cos(angle_rad), magnitude * libm::sin(angle_rad))
}

/// Polar accessors evaluated with `libm`.
pub trait PhasorExt {
    fn magnitude(&self) -> f64;
    /// Radians in `(-π, π]`.
    fn angle(&self) -> f64;
}

impl PhasorExt for Phasor {
    fn magnitude(&self) -> f64 {
        libm::hypot(self.re, self.im)
    }

    fn angle(&self) -> f64 {
        libm::atan2(self.im, self.re)
    }
}
