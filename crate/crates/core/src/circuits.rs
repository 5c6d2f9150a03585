//! Gate set, circuits and the structural operations GEM needs: inversion,
//! transpilation to device basis gates, greedy depth layering and splitting
//! a circuit into two halves by layer.
//!
//! Bit order: in every bitstring, distribution index and matrix column the
//! leftmost bit belongs to qubit 0. For `N` qubits, qubit `q` is bit
//! `N - 1 - q` of the integer index.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GemError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateKind {
    Id,
    U1,
    U2,
    U3,
    X,
    Y,
    Z,
    H,
    S,
    Sdg,
    T,
    Tdg,
    #[serde(rename = "CNOT")]
    Cnot,
    Rx,
    Ry,
    Measure,
}

impl GateKind {
    /// Gates the random circuit generator may draw from.
    pub const APPLIED_SET: [GateKind; 11] = [
        GateKind::Id,
        GateKind::U1,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::H,
        GateKind::S,
        GateKind::Sdg,
        GateKind::T,
        GateKind::Tdg,
        GateKind::Cnot,
    ];

    pub fn num_params(self) -> usize {
        match self {
            GateKind::U1 | GateKind::Rx | GateKind::Ry => 1,
            GateKind::U2 => 2,
            GateKind::U3 => 3,
            _ => 0,
        }
    }

    pub fn num_qubits(self) -> usize {
        match self {
            GateKind::Cnot => 2,
            _ => 1,
        }
    }

    /// True for the device-native set `{Id, U1, U2, U3, CNOT}` (plus measurement).
    pub fn is_basis(self) -> bool {
        matches!(
            self,
            GateKind::Id
                | GateKind::U1
                | GateKind::U2
                | GateKind::U3
                | GateKind::Cnot
                | GateKind::Measure
        )
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateKind::Cnot => f.write_str("CNOT"),
            other => write!(f, "{other:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    #[serde(rename = "name")]
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl Gate {
    /// Builds a gate, checking qubit arity, distinct qubits and parameter count.
    pub fn new(kind: GateKind, qubits: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        let gate = Gate {
            kind,
            qubits,
            params,
        };
        gate.check_shape()?;
        Ok(gate)
    }

    pub fn single(kind: GateKind, qubit: usize) -> Self {
        debug_assert!(kind.num_qubits() == 1 && kind.num_params() == 0);
        Gate {
            kind,
            qubits: vec![qubit],
            params: Vec::new(),
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        debug_assert_ne!(control, target);
        Gate {
            kind: GateKind::Cnot,
            qubits: vec![control, target],
            params: Vec::new(),
        }
    }

    pub fn u1(lambda: f64, qubit: usize) -> Self {
        Gate {
            kind: GateKind::U1,
            qubits: vec![qubit],
            params: vec![lambda],
        }
    }

    pub fn u2(phi: f64, lambda: f64, qubit: usize) -> Self {
        Gate {
            kind: GateKind::U2,
            qubits: vec![qubit],
            params: vec![phi, lambda],
        }
    }

    pub fn u3(theta: f64, phi: f64, lambda: f64, qubit: usize) -> Self {
        Gate {
            kind: GateKind::U3,
            qubits: vec![qubit],
            params: vec![theta, phi, lambda],
        }
    }

    pub fn rx(theta: f64, qubit: usize) -> Self {
        Gate {
            kind: GateKind::Rx,
            qubits: vec![qubit],
            params: vec![theta],
        }
    }

    pub fn ry(theta: f64, qubit: usize) -> Self {
        Gate {
            kind: GateKind::Ry,
            qubits: vec![qubit],
            params: vec![theta],
        }
    }

    pub fn measure(qubit: usize) -> Self {
        Gate::single(GateKind::Measure, qubit)
    }

    fn check_shape(&self) -> Result<()> {
        if self.qubits.len() != self.kind.num_qubits() {
            return Err(GemError::InvalidGate(format!(
                "{} acts on {} qubit(s), got {}",
                self.kind,
                self.kind.num_qubits(),
                self.qubits.len()
            )));
        }
        if self.params.len() != self.kind.num_params() {
            return Err(GemError::InvalidGate(format!(
                "{} takes {} parameter(s), got {}",
                self.kind,
                self.kind.num_params(),
                self.params.len()
            )));
        }
        if self.kind == GateKind::Cnot && self.qubits[0] == self.qubits[1] {
            return Err(GemError::InvalidGate(
                "CNOT control and target must differ".into(),
            ));
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            return Err(GemError::InvalidGate(format!(
                "{} has a non-finite parameter",
                self.kind
            )));
        }
        Ok(())
    }

    /// The 2x2 unitary of a single-qubit gate; `None` for CNOT and Measure.
    pub fn matrix(&self) -> Option<Unitary2> {
        single_qubit_matrix(self.kind, &self.params)
    }
}

/// Row-major 2x2 complex matrix.
pub type Unitary2 = [[Complex64; 2]; 2];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub(crate) fn u3_matrix(theta: f64, phi: f64, lambda: f64) -> Unitary2 {
    let (s, co) = (theta / 2.0).sin_cos();
    [
        [c(co, 0.0), -Complex64::from_polar(s, lambda)],
        [
            Complex64::from_polar(s, phi),
            Complex64::from_polar(co, phi + lambda),
        ],
    ]
}

pub(crate) fn single_qubit_matrix(kind: GateKind, params: &[f64]) -> Option<Unitary2> {
    let zero = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let m = match kind {
        GateKind::Id => [[one, zero], [zero, one]],
        GateKind::X => [[zero, one], [one, zero]],
        GateKind::Y => [[zero, c(0.0, -1.0)], [c(0.0, 1.0), zero]],
        GateKind::Z => [[one, zero], [zero, -one]],
        GateKind::H => [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]],
        GateKind::S => [[one, zero], [zero, c(0.0, 1.0)]],
        GateKind::Sdg => [[one, zero], [zero, c(0.0, -1.0)]],
        GateKind::T => [[one, zero], [zero, Complex64::from_polar(1.0, FRAC_PI_4)]],
        GateKind::Tdg => [[one, zero], [zero, Complex64::from_polar(1.0, -FRAC_PI_4)]],
        GateKind::U1 => [[one, zero], [zero, Complex64::from_polar(1.0, params[0])]],
        GateKind::U2 => u3_matrix(FRAC_PI_2, params[0], params[1]),
        GateKind::U3 => u3_matrix(params[0], params[1], params[2]),
        GateKind::Rx => {
            let (s, co) = (params[0] / 2.0).sin_cos();
            [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
        }
        GateKind::Ry => {
            let (s, co) = (params[0] / 2.0).sin_cos();
            [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
        }
        GateKind::Cnot | GateKind::Measure => return None,
    };
    Some(m)
}

/// Ordered set of qubit pairs `(control, target)` on which CNOT is allowed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CouplingMap {
    edges: BTreeSet<(usize, usize)>,
}

impl CouplingMap {
    pub fn new(edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        CouplingMap {
            edges: edges.into_iter().collect(),
        }
    }

    /// Nearest-neighbour chain `0 - 1 - ... - (n-1)`, both directions.
    pub fn linear(num_qubits: usize) -> Self {
        Self::new((1..num_qubits).flat_map(|q| [(q - 1, q), (q, q - 1)]))
    }

    pub fn all_to_all(num_qubits: usize) -> Self {
        Self::new(
            (0..num_qubits)
                .flat_map(|a| (0..num_qubits).map(move |b| (a, b)))
                .filter(|(a, b)| a != b),
        )
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn contains(&self, control: usize, target: usize) -> bool {
        self.edges.contains(&(control, target))
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        for &(a, b) in &self.edges {
            if a >= num_qubits || b >= num_qubits || a == b {
                return Err(GemError::Config(format!(
                    "coupling edge ({a}, {b}) is invalid for {num_qubits} qubit(s)"
                )));
            }
        }
        Ok(())
    }
}

/// Formats basis-state index `k` as an `n`-character bitstring, qubit 0 first.
pub fn index_to_bits(num_qubits: usize, k: usize) -> String {
    (0..num_qubits)
        .map(|q| {
            if k >> (num_qubits - 1 - q) & 1 == 1 {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

pub fn bits_to_index(bits: &str) -> Result<usize> {
    bits.chars().try_fold(0usize, |acc, ch| match ch {
        '0' => Ok(acc << 1),
        '1' => Ok(acc << 1 | 1),
        other => Err(GemError::InvalidCircuit(format!(
            "bitstring {bits:?} contains {other:?}"
        ))),
    })
}

/// Ordered gate list over `num_qubits` qubits, started from a basis state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircuitRepr", into = "CircuitRepr")]
pub struct Circuit {
    num_qubits: usize,
    initial_state: String,
    gates: Vec<Gate>,
}

#[derive(Serialize, Deserialize)]
struct CircuitRepr {
    num_qubits: usize,
    #[serde(default)]
    initial_state: Option<String>,
    gates: Vec<Gate>,
}

impl TryFrom<CircuitRepr> for Circuit {
    type Error = GemError;

    fn try_from(repr: CircuitRepr) -> Result<Self> {
        let mut circuit = Circuit::new(repr.num_qubits)?;
        if let Some(state) = repr.initial_state {
            circuit = circuit.with_initial_state(&state)?;
        }
        for gate in repr.gates {
            circuit.push(gate)?;
        }
        Ok(circuit)
    }
}

impl From<Circuit> for CircuitRepr {
    fn from(c: Circuit) -> Self {
        CircuitRepr {
            num_qubits: c.num_qubits,
            initial_state: Some(c.initial_state),
            gates: c.gates,
        }
    }
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 {
            return Err(GemError::InvalidCircuit(
                "a circuit needs at least one qubit".into(),
            ));
        }
        Ok(Circuit {
            num_qubits,
            initial_state: "0".repeat(num_qubits),
            gates: Vec::new(),
        })
    }

    pub fn from_gates(num_qubits: usize, gates: impl IntoIterator<Item = Gate>) -> Result<Self> {
        let mut circuit = Circuit::new(num_qubits)?;
        for gate in gates {
            circuit.push(gate)?;
        }
        Ok(circuit)
    }

    pub fn with_initial_state(mut self, bits: &str) -> Result<Self> {
        if bits.len() != self.num_qubits {
            return Err(GemError::InvalidCircuit(format!(
                "initial state {bits:?} has {} bits for {} qubit(s)",
                bits.len(),
                self.num_qubits
            )));
        }
        bits_to_index(bits)?;
        self.initial_state = bits.to_string();
        Ok(self)
    }

    /// Appends a gate. Measurements may only form a trailing suffix.
    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.check_shape()?;
        if let Some(&q) = gate.qubits.iter().find(|&&q| q >= self.num_qubits) {
            return Err(GemError::InvalidGate(format!(
                "{} on qubit {q} exceeds circuit width {}",
                gate.kind, self.num_qubits
            )));
        }
        if gate.kind != GateKind::Measure && self.has_measurements() {
            return Err(GemError::InvalidCircuit(format!(
                "{} appended after a measurement",
                gate.kind
            )));
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<()> {
        gates.into_iter().try_for_each(|g| self.push(g))
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn initial_state(&self) -> &str {
        &self.initial_state
    }

    pub fn initial_index(&self) -> usize {
        bits_to_index(&self.initial_state).expect("validated on construction")
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn has_measurements(&self) -> bool {
        self.gates.iter().any(|g| g.kind == GateKind::Measure)
    }

    pub fn without_measurements(&self) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            initial_state: self.initial_state.clone(),
            gates: self
                .gates
                .iter()
                .filter(|g| g.kind != GateKind::Measure)
                .cloned()
                .collect(),
        }
    }

    /// Returns a copy with the gates of the given kinds removed.
    pub fn without_kinds(&self, kinds: &[GateKind]) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            initial_state: self.initial_state.clone(),
            gates: self
                .gates
                .iter()
                .filter(|g| !kinds.contains(&g.kind))
                .cloned()
                .collect(),
        }
    }

    /// Appends a computational-basis measurement on every qubit.
    pub fn measured(mut self) -> Circuit {
        if !self.has_measurements() {
            self.gates.extend((0..self.num_qubits).map(Gate::measure));
        }
        self
    }

    pub fn depth(&self) -> usize {
        depth(self)
    }
}

/// Adjoint of a gate, expressed within the gate set.
pub fn inverse_gate(gate: &Gate) -> Result<Gate> {
    use GateKind::*;
    let q = gate.qubits.clone();
    let p = &gate.params;
    let (kind, params) = match gate.kind {
        Measure => return Err(GemError::NoInverse(Measure)),
        Id | X | Y | Z | H | Cnot => (gate.kind, Vec::new()),
        S => (Sdg, Vec::new()),
        Sdg => (S, Vec::new()),
        T => (Tdg, Vec::new()),
        Tdg => (T, Vec::new()),
        U1 => (U1, vec![-p[0]]),
        Rx => (Rx, vec![-p[0]]),
        Ry => (Ry, vec![-p[0]]),
        U2 => (U3, vec![-FRAC_PI_2, -p[1], -p[0]]),
        U3 => (U3, vec![-p[0], -p[2], -p[1]]),
    };
    Ok(Gate {
        kind,
        qubits: q,
        params,
    })
}

/// Rewrites every gate in terms of the device basis `{Id, U1, U2, U3, CNOT}`.
/// Gate order and qubits are preserved; unitaries agree up to global phase.
pub fn transpile(circuit: &Circuit) -> Circuit {
    let gates = circuit.gates.iter().map(transpile_gate).collect();
    Circuit {
        num_qubits: circuit.num_qubits,
        initial_state: circuit.initial_state.clone(),
        gates,
    }
}

fn transpile_gate(gate: &Gate) -> Gate {
    let q = gate.qubits[0];
    match gate.kind {
        GateKind::X => Gate::u3(PI, 0.0, PI, q),
        GateKind::Y => Gate::u3(PI, FRAC_PI_2, FRAC_PI_2, q),
        GateKind::Z => Gate::u1(PI, q),
        GateKind::H => Gate::u2(0.0, PI, q),
        GateKind::S => Gate::u1(FRAC_PI_2, q),
        GateKind::Sdg => Gate::u1(-FRAC_PI_2, q),
        GateKind::T => Gate::u1(FRAC_PI_4, q),
        GateKind::Tdg => Gate::u1(-FRAC_PI_4, q),
        GateKind::Rx => Gate::u3(gate.params[0], -FRAC_PI_2, FRAC_PI_2, q),
        GateKind::Ry => Gate::u3(gate.params[0], 0.0, 0.0, q),
        GateKind::Id
        | GateKind::U1
        | GateKind::U2
        | GateKind::U3
        | GateKind::Cnot
        | GateKind::Measure => gate.clone(),
    }
}

/// Greedy as-soon-as-possible layer (1-based) of every gate; `None` for
/// measurements, which never occupy a layer.
pub fn layers(circuit: &Circuit) -> Vec<Option<usize>> {
    let mut frontier = vec![0usize; circuit.num_qubits];
    circuit
        .gates
        .iter()
        .map(|g| {
            if g.kind == GateKind::Measure {
                return None;
            }
            let layer = 1 + g.qubits.iter().map(|&q| frontier[q]).max().unwrap_or(0);
            for &q in &g.qubits {
                frontier[q] = layer;
            }
            Some(layer)
        })
        .collect()
}

/// Number of greedy layers of non-measurement gates.
pub fn depth(circuit: &Circuit) -> usize {
    layers(circuit).into_iter().flatten().max().unwrap_or(0)
}

/// Splits at layer `floor(D / 2)`: the first part holds every gate in layers
/// `1..=floor(D/2)`, the second everything else, each in original order.
/// A gate is never divided between the halves.
pub fn split_halves(circuit: &Circuit) -> Result<(Circuit, Circuit)> {
    if circuit.has_measurements() {
        return Err(GemError::InvalidCircuit(
            "strip measurements before splitting".into(),
        ));
    }
    let layer_of = layers(circuit);
    let half = layer_of.iter().flatten().max().unwrap_or(&0) / 2;
    let mut first = Circuit::new(circuit.num_qubits)?;
    let mut second = Circuit::new(circuit.num_qubits)?;
    first.initial_state = circuit.initial_state.clone();
    second.initial_state = circuit.initial_state.clone();
    for (gate, layer) in circuit.gates.iter().zip(layer_of) {
        if layer.is_some_and(|l| l <= half) {
            first.gates.push(gate.clone());
        } else {
            second.gates.push(gate.clone());
        }
    }
    Ok((first, second))
}

/// The inverse circuit: adjoints of the gates in reverse order.
pub fn inverse_circuit(circuit: &Circuit) -> Result<Circuit> {
    let gates = circuit
        .gates
        .iter()
        .rev()
        .map(inverse_gate)
        .collect::<Result<Vec<_>>>()?;
    Ok(Circuit {
        num_qubits: circuit.num_qubits,
        initial_state: circuit.initial_state.clone(),
        gates,
    })
}

/// X on every qubit whose bit is `1`; leftmost bit is qubit 0.
pub fn prepare_state(num_qubits: usize, bits: &str) -> Result<Circuit> {
    if bits.len() != num_qubits {
        return Err(GemError::InvalidCircuit(format!(
            "state {bits:?} has {} bits for {num_qubits} qubit(s)",
            bits.len()
        )));
    }
    bits_to_index(bits)?;
    Circuit::from_gates(
        num_qubits,
        bits.chars()
            .enumerate()
            .filter(|&(_, b)| b == '1')
            .map(|(q, _)| Gate::single(GateKind::X, q)),
    )
}
