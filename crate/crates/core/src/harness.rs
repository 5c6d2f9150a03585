//! Randomised experiments: generate circuits, execute them and their
//! calibration circuits on a noisy backend, mitigate, and score against the
//! ideal simulator output.
//!
//! Every random draw comes from a seed derived from `ExperimentConfig::seed`
//! and the task's position (circuit, repetition, calibration circuit), so a
//! run is reproducible regardless of thread scheduling, and two runs that
//! differ only in `method` see the same circuits and the same main-circuit
//! samples.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::{Backend, SimulatorBackend};
use crate::calibration::{
    build_direct_matrix, build_matrix, combine, direct_calibration_circuits, direct_output_states,
    gem_calibration_circuits, qem_calibration_circuits, reduced_matrix, CalibrationKind,
    CalibrationMatrix, DIRECT_STRIPPED,
};
use crate::circuits::{Circuit, CouplingMap, Gate, GateKind};
use crate::error::{GemError, Result};
use crate::metrics::{classify, rms_error, Classification, MitigationOutcome};
use crate::mitigation::{mitigate, SolverConfig};
use crate::seed;
use crate::simulator::{exact_probabilities, sample_from, Distribution, NoiseModel, MAX_QUBITS};

// Seed-path tags.
const GENERATE: u64 = 1;
const IDEAL: u64 = 2;
const MAIN: u64 = 3;
const CALIBRATE: u64 = 4;
const SELECT: u64 = 5;
const SOLVE: u64 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "GEM")]
    Gem,
    #[serde(rename = "QEM")]
    Qem,
    Reduced,
    Direct,
}

fn default_repetitions() -> usize {
    10
}
fn default_shots_device() -> u64 {
    8192
}
fn default_shots_simulator() -> u64 {
    819_200
}
fn default_gate_set() -> Vec<GateKind> {
    GateKind::APPLIED_SET.to_vec()
}
fn default_method() -> Method {
    Method::Gem
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub num_qubits: usize,
    pub depth_min: usize,
    pub depth_max: usize,
    pub num_circuits: usize,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_shots_device")]
    pub shots_device: u64,
    #[serde(default = "default_shots_simulator")]
    pub shots_simulator: u64,
    /// Shots per calibration circuit; defaults to `shots_device`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration_shots: Option<u64>,
    #[serde(default = "default_gate_set")]
    pub gate_set: Vec<GateKind>,
    /// Allowed CNOT pairs; defaults to a bidirectional linear chain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingMap>,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default = "default_method")]
    pub method: Method,
    /// Number of measured columns for [`Method::Reduced`].
    #[serde(default)]
    pub reduced_columns: usize,
    /// Append an H on every qubit after the random body, giving a uniform
    /// ideal output whenever the body permutes basis states.
    #[serde(default)]
    pub final_hadamard_layer: bool,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    /// Configuration with the default shot budgets, full gate set,
    /// linear coupling and no noise.
    pub fn new(num_qubits: usize, depth_min: usize, depth_max: usize, num_circuits: usize) -> Self {
        ExperimentConfig {
            num_qubits,
            depth_min,
            depth_max,
            num_circuits,
            repetitions: default_repetitions(),
            shots_device: default_shots_device(),
            shots_simulator: default_shots_simulator(),
            calibration_shots: None,
            gate_set: default_gate_set(),
            coupling: None,
            noise: NoiseModel::noiseless(),
            method: Method::Gem,
            reduced_columns: 0,
            final_hadamard_layer: false,
            solver: SolverConfig::default(),
            seed: 0,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| GemError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GemError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| GemError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| GemError::Config(e.to_string()))
    }

    pub fn coupling(&self) -> CouplingMap {
        self.coupling
            .clone()
            .unwrap_or_else(|| CouplingMap::linear(self.num_qubits))
    }

    pub fn calibration_shots(&self) -> u64 {
        self.calibration_shots.unwrap_or(self.shots_device)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(GemError::Config(msg));
        if self.num_qubits == 0 || self.num_qubits > MAX_QUBITS {
            return bad(format!(
                "num_qubits must be in 1..={MAX_QUBITS}, got {}",
                self.num_qubits
            ));
        }
        if self.depth_min > self.depth_max {
            return bad(format!(
                "depth_min {} exceeds depth_max {}",
                self.depth_min, self.depth_max
            ));
        }
        if self.final_hadamard_layer && self.depth_min == 0 {
            return bad("final_hadamard_layer needs depth_min >= 1".into());
        }
        if self.repetitions == 0 || self.num_circuits == 0 {
            return bad("repetitions and num_circuits must be at least 1".into());
        }
        if self.shots_device == 0 || self.shots_simulator == 0 || self.calibration_shots() == 0 {
            return bad("shot counts must be at least 1".into());
        }
        if self.gate_set.is_empty() {
            return bad("gate_set is empty".into());
        }
        if let Some(g) = self
            .gate_set
            .iter()
            .find(|g| !GateKind::APPLIED_SET.contains(g))
        {
            return bad(format!("{g} is not in the applied gate set"));
        }
        if self.method == Method::Reduced && self.reduced_columns > 1 << self.num_qubits {
            return bad(format!(
                "reduced_columns {} exceeds {} columns",
                self.reduced_columns,
                1 << self.num_qubits
            ));
        }
        let coupling = self.coupling();
        coupling.validate(self.num_qubits)?;
        if self.num_qubits >= 2 && self.gate_set.contains(&GateKind::Cnot) && coupling.is_empty() {
            return bad("CNOT is in the gate set but the coupling map is empty".into());
        }
        self.noise.validate()?;
        self.solver.validate()
    }

    /// Gates actually drawable: CNOT is dropped on a single qubit.
    fn drawable_gates(&self) -> Result<Vec<GateKind>> {
        let gates: Vec<GateKind> = self
            .gate_set
            .iter()
            .copied()
            .filter(|&g| g != GateKind::Cnot || self.num_qubits >= 2)
            .collect();
        if gates.is_empty() {
            return Err(GemError::Config(
                "no single-qubit gate available for a one-qubit circuit".into(),
            ));
        }
        Ok(gates)
    }
}

/// Draws a circuit gate by gate (uniform gate, uniform qubit or coupled
/// pair) until its depth reaches a target drawn uniformly from
/// `[depth_min, depth_max]`.
pub fn random_circuit<R: Rng + ?Sized>(cfg: &ExperimentConfig, rng: &mut R) -> Result<Circuit> {
    cfg.validate()?;
    let gates = cfg.drawable_gates()?;
    let edges: Vec<(usize, usize)> = cfg.coupling().edges().collect();
    let n = cfg.num_qubits;

    let target = rng.random_range(cfg.depth_min..=cfg.depth_max);
    let body_target = if cfg.final_hadamard_layer {
        target - 1
    } else {
        target
    };

    let mut circuit = Circuit::new(n)?;
    let mut frontier = vec![0usize; n];
    let mut depth = 0;
    while depth < body_target {
        let kind = gates[rng.random_range(0..gates.len())];
        let gate = match kind {
            GateKind::Cnot => {
                let (c, t) = edges[rng.random_range(0..edges.len())];
                Gate::cnot(c, t)
            }
            GateKind::U1 => Gate::u1(rng.random_range(0.0..TAU), rng.random_range(0..n)),
            other => Gate::single(other, rng.random_range(0..n)),
        };
        let layer = 1 + gate.qubits.iter().map(|&q| frontier[q]).max().unwrap_or(0);
        for &q in &gate.qubits {
            frontier[q] = layer;
        }
        depth = depth.max(layer);
        circuit.push(gate)?;
    }
    if cfg.final_hadamard_layer {
        circuit.extend((0..n).map(|q| Gate::single(GateKind::H, q)))?;
    }
    Ok(circuit)
}

/// The configuration's `num_circuits` random circuits, each from its own
/// derived seed.
pub fn generate_circuits(cfg: &ExperimentConfig) -> Result<Vec<Circuit>> {
    cfg.validate()?;
    (0..cfg.num_circuits)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(cfg.seed, &[GENERATE, i as u64]));
            random_circuit(cfg, &mut rng)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionResult {
    pub delta_v: f64,
    pub delta_x: f64,
    pub delta_g: f64,
    /// Whether the least-squares solver met its tolerance.
    pub converged: bool,
    pub calibration: CalibrationMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment_id: usize,
    pub num_qubits: usize,
    pub depth: usize,
    pub method: Method,
    pub circuit: Circuit,
    pub repetitions: Vec<RepetitionResult>,
    pub avg_delta_v: f64,
    pub min_delta_v: f64,
    pub max_delta_v: f64,
    pub avg_delta_x: f64,
    pub min_delta_x: f64,
    pub max_delta_x: f64,
    /// `avg_delta_v - avg_delta_x`.
    pub delta_g: f64,
    pub classification: Classification,
}

impl ExperimentRecord {
    fn from_repetitions(
        experiment_id: usize,
        method: Method,
        circuit: Circuit,
        repetitions: Vec<RepetitionResult>,
    ) -> Self {
        let stats = |f: fn(&RepetitionResult) -> f64| {
            let values: Vec<f64> = repetitions.iter().map(f).collect();
            let avg = values.iter().sum::<f64>() / values.len() as f64;
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (avg, min, max)
        };
        let (avg_delta_v, min_delta_v, max_delta_v) = stats(|r| r.delta_v);
        let (avg_delta_x, min_delta_x, max_delta_x) = stats(|r| r.delta_x);
        ExperimentRecord {
            experiment_id,
            num_qubits: circuit.num_qubits(),
            depth: circuit.depth(),
            method,
            circuit,
            repetitions,
            avg_delta_v,
            min_delta_v,
            max_delta_v,
            avg_delta_x,
            min_delta_x,
            max_delta_x,
            delta_g: avg_delta_v - avg_delta_x,
            classification: Classification::NoMitigation,
        }
    }

    pub fn outcome(&self) -> MitigationOutcome {
        MitigationOutcome {
            classification: self.classification,
            ..MitigationOutcome::new(self.avg_delta_v, self.avg_delta_x)
        }
    }
}

/// Noisy executions per repetition for `cfg`: the main circuit plus its
/// calibration circuits.
pub fn executions_per_repetition(cfg: &ExperimentConfig) -> usize {
    let dim = 1usize << cfg.num_qubits;
    1 + match cfg.method {
        Method::Gem => 2 * dim,
        Method::Qem | Method::Direct => dim,
        Method::Reduced => 2 * cfg.reduced_columns,
    }
}

/// Generates the configured random circuits and runs them on the simulator
/// with the configured noise model.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    let backend = SimulatorBackend::new(cfg.noise.clone())?;
    let circuits = generate_circuits(cfg)?;
    run_circuits(cfg, &circuits, &backend)
}

/// Runs the given circuits (experiment `i` is `circuits[i]`) and classifies
/// the batch. Records come back ordered by experiment id.
pub fn run_circuits(
    cfg: &ExperimentConfig,
    circuits: &[Circuit],
    backend: &dyn Backend,
) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    if circuits.is_empty() {
        return Err(GemError::Config("no circuits to run".into()));
    }
    if let Some(c) = circuits.iter().find(|c| c.num_qubits() != cfg.num_qubits) {
        return Err(GemError::Config(format!(
            "circuit has {} qubit(s), configuration has {}",
            c.num_qubits(),
            cfg.num_qubits
        )));
    }
    let mut records = circuits
        .par_iter()
        .enumerate()
        .map(|(i, c)| run_one(cfg, i, c, backend))
        .collect::<Result<Vec<_>>>()?;

    let outcomes: Vec<MitigationOutcome> = records.iter().map(ExperimentRecord::outcome).collect();
    for (record, outcome) in records.iter_mut().zip(classify(&outcomes)?) {
        record.classification = outcome.classification;
    }
    Ok(records)
}

fn run_one(
    cfg: &ExperimentConfig,
    id: usize,
    circuit: &Circuit,
    backend: &dyn Backend,
) -> Result<ExperimentRecord> {
    let body = circuit.without_measurements();
    let exact = exact_probabilities(&body, None)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(cfg.seed, &[IDEAL, id as u64]));
    let ideal = sample_from(&exact, cfg.shots_simulator, &mut rng);
    let measured = body.clone().measured();

    let repetitions = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| {
            let path = [id as u64, rep as u64];
            let observed = backend.execute(
                &measured,
                cfg.shots_device,
                seed::derive(cfg.seed, &[MAIN, path[0], path[1]]),
            )?;
            let calibration = calibrate(cfg, &body, backend, path)?;
            let solver = cfg
                .solver
                .clone()
                .with_seed(seed::derive(cfg.seed, &[SOLVE, path[0], path[1]]));
            let mitigated = mitigate(&calibration, &observed, &solver)?;
            let delta_v = rms_error(&observed, &ideal)?;
            let delta_x = rms_error(&mitigated.distribution, &ideal)?;
            Ok(RepetitionResult {
                delta_v,
                delta_x,
                delta_g: delta_v - delta_x,
                converged: mitigated.converged,
                calibration,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ExperimentRecord::from_repetitions(
        id,
        cfg.method,
        body,
        repetitions,
    ))
}

/// Executes calibration circuit `index` of the repetition at `path`.
fn run_calibration(
    cfg: &ExperimentConfig,
    backend: &dyn Backend,
    circuit: &Circuit,
    path: [u64; 2],
    index: usize,
) -> Result<Distribution> {
    backend.execute(
        circuit,
        cfg.calibration_shots(),
        seed::derive(cfg.seed, &[CALIBRATE, path[0], path[1], index as u64]),
    )
}

fn run_all(
    cfg: &ExperimentConfig,
    backend: &dyn Backend,
    circuits: &[Circuit],
    path: [u64; 2],
    offset: usize,
) -> Result<Vec<Distribution>> {
    circuits
        .iter()
        .enumerate()
        .map(|(j, c)| run_calibration(cfg, backend, c, path, offset + j))
        .collect()
}

/// Calibration matrix for one repetition of `body` under `cfg.method`.
pub fn calibrate(
    cfg: &ExperimentConfig,
    body: &Circuit,
    backend: &dyn Backend,
    path: [u64; 2],
) -> Result<CalibrationMatrix> {
    let n = body.num_qubits();
    let dim = 1usize << n;
    match cfg.method {
        Method::Qem => {
            let columns = run_all(cfg, backend, &qem_calibration_circuits(n)?, path, 0)?;
            build_matrix(&columns, CalibrationKind::Qem)
        }
        Method::Gem => {
            let (first, second) = gem_calibration_circuits(body)?;
            let m1 = build_matrix(
                &run_all(cfg, backend, &first, path, 0)?,
                CalibrationKind::GemHalf1,
            )?;
            let m2 = build_matrix(
                &run_all(cfg, backend, &second, path, dim)?,
                CalibrationKind::GemHalf2,
            )?;
            combine(&m1, &m2)
        }
        Method::Reduced => {
            let (first, second) = gem_calibration_circuits(body)?;
            // Nested selection: the first p states of one seeded permutation.
            let mut order: Vec<usize> = (0..dim).collect();
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed::derive(cfg.seed, &[SELECT, path[0], path[1]]));
            order.shuffle(&mut rng);
            let mut partial = BTreeMap::new();
            for &k in &order[..cfg.reduced_columns] {
                let a = run_calibration(cfg, backend, &first[k], path, k)?;
                let b = run_calibration(cfg, backend, &second[k], path, dim + k)?;
                let mean = a
                    .probs()
                    .iter()
                    .zip(b.probs())
                    .map(|(x, y)| 0.5 * (x + y))
                    .collect();
                partial.insert(k, Distribution::from_unnormalized(n, mean));
            }
            reduced_matrix(&partial, n)
        }
        Method::Direct => {
            let stripped = body.without_kinds(&DIRECT_STRIPPED);
            let map = direct_output_states(&stripped)?;
            if !map.is_permutation() {
                return Err(GemError::Config(
                    "direct calibration needs a circuit that permutes basis states".into(),
                ));
            }
            let columns = run_all(
                cfg,
                backend,
                &direct_calibration_circuits(&stripped)?,
                path,
                0,
            )?;
            build_direct_matrix(&columns, &map)
        }
    }
}
