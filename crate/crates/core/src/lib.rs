//! General error mitigation (GEM) for noisy quantum circuits.
//!
//! The crate is organised bottom-up:
//!
//! - [`circuits`]: gate set, circuit construction, inversion, transpilation
//!   to device basis gates, greedy depth layering and half-splitting.
//! - [`simulator`]: exact density-matrix evolution under a synthetic noise
//!   model and seeded multinomial shot sampling.
//! - [`calibration`]: QEM, GEM and direct calibration circuits, and the
//!   column-stochastic calibration matrices filled from their outputs.
//! - [`mitigation`]: least-squares unfolding on the probability simplex.
//! - [`metrics`]: RMS errors, mitigation classification and matrix
//!   diagnostics.
//! - [`harness`]: random circuit generation and batch experiments, with
//!   [`report`] rendering the results as CSV or JSON.

pub mod backend;
pub mod calibration;
pub mod circuits;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod mitigation;
pub mod report;
pub mod seed;
pub mod simulator;

pub use backend::{Backend, SimulatorBackend};
pub use calibration::{CalibrationKind, CalibrationMatrix};
pub use circuits::{Circuit, CouplingMap, Gate, GateKind};
pub use error::{GemError, Result};
pub use harness::{ExperimentConfig, ExperimentRecord, Method};
pub use metrics::{Classification, MitigationOutcome};
pub use mitigation::{Mitigated, SolverConfig};
pub use simulator::{Distribution, NoiseModel};
