//! Execution interface: a circuit, a shot count and a seed in, measured
//! relative frequencies out. The noisy simulator is the only implementation;
//! a hardware adapter would implement the same trait.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::circuits::{transpile, Circuit};
use crate::error::Result;
use crate::simulator::{sample_counts, Distribution, NoiseModel};

pub trait Backend: Sync {
    fn execute(&self, circuit: &Circuit, shots: u64, seed: u64) -> Result<Distribution>;
}

/// Runs circuits on the density-matrix simulator after transpiling them to
/// the device basis, so gate errors act on the gates a device would run.
#[derive(Debug, Clone)]
pub struct SimulatorBackend {
    noise: Option<NoiseModel>,
}

impl SimulatorBackend {
    pub fn new(noise: NoiseModel) -> Result<Self> {
        noise.validate()?;
        Ok(SimulatorBackend { noise: Some(noise) })
    }

    pub fn ideal() -> Self {
        SimulatorBackend { noise: None }
    }

    pub fn noise(&self) -> Option<&NoiseModel> {
        self.noise.as_ref()
    }
}

impl Backend for SimulatorBackend {
    fn execute(&self, circuit: &Circuit, shots: u64, seed: u64) -> Result<Distribution> {
        sample_counts(&transpile(circuit), shots, self.noise.as_ref(), seed)
    }
}

/// Wraps a backend and counts executions.
#[derive(Debug)]
pub struct CountingBackend<B> {
    inner: B,
    executions: AtomicUsize,
}

impl<B: Backend> CountingBackend<B> {
    pub fn new(inner: B) -> Self {
        CountingBackend {
            inner,
            executions: AtomicUsize::new(0),
        }
    }

    pub fn executions(&self) -> usize {
        self.executions.load(Ordering::Relaxed)
    }
}

impl<B: Backend> Backend for CountingBackend<B> {
    fn execute(&self, circuit: &Circuit, shots: u64, seed: u64) -> Result<Distribution> {
        self.executions.fetch_add(1, Ordering::Relaxed);
        self.inner.execute(circuit, shots, seed)
    }
}
