//! Experiment harness for high-impedance fault location: configuration
//! files, CSV/JSON artifacts, results tables, SVG figures and the `hifloc`
//! command line. The numerics live in [`hifloc_core`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod io;
pub mod plot;

pub use hifloc_core as core;

pub use config::ExperimentConfig;
pub use error::HarnessError;
pub use eval::{evaluate_locator, ResultsTable};
pub use plot::{render_fit_svg, render_rx_svg};
