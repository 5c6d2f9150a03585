//! Exact density-matrix simulation under a synthetic noise model, and
//! seeded multinomial shot sampling on top of it.
//!
//! Each gate is applied as unitary conjugation followed, when a noise model
//! is present, by a depolarizing channel on the qubits it touched:
//! `rho -> (1 - p) rho + p (I/d tensor Tr_Q rho)`. Parameterized gates
//! receive an additive over-rotation. Readout confusion acts on the final
//! diagonal, since every measurement here is terminal.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution as _};
use serde::{Deserialize, Serialize};

use crate::circuits::{single_qubit_matrix, u3_matrix, Circuit, Gate, GateKind, Unitary2};
use crate::error::{GemError, Result};

/// Largest register the density-matrix simulator accepts (4^N entries).
pub const MAX_QUBITS: usize = 8;

const SUM_TOLERANCE: f64 = 1e-9;

/// Normalised vector of 2^N outcome probabilities or relative frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionRepr", into = "DistributionRepr")]
pub struct Distribution {
    num_qubits: usize,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DistributionRepr {
    num_qubits: usize,
    probs: Vec<f64>,
}

impl TryFrom<DistributionRepr> for Distribution {
    type Error = GemError;

    fn try_from(r: DistributionRepr) -> Result<Self> {
        Distribution::new(r.num_qubits, r.probs)
    }
}

impl From<Distribution> for DistributionRepr {
    fn from(d: Distribution) -> Self {
        DistributionRepr {
            num_qubits: d.num_qubits,
            probs: d.probs,
        }
    }
}

impl Distribution {
    pub fn new(num_qubits: usize, probs: Vec<f64>) -> Result<Self> {
        let expected = 1usize
            .checked_shl(num_qubits as u32)
            .ok_or_else(|| GemError::InvalidDistribution(format!("{num_qubits} qubits")))?;
        if probs.len() != expected {
            return Err(GemError::Dimension {
                expected,
                found: probs.len(),
            });
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(GemError::InvalidDistribution(format!(
                "entry {p} outside [0, 1]"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(GemError::InvalidDistribution(format!(
                "entries sum to {sum}, not 1"
            )));
        }
        Ok(Distribution { num_qubits, probs })
    }

    /// Point mass on basis state `k`.
    pub fn basis(num_qubits: usize, k: usize) -> Self {
        let mut probs = vec![0.0; 1 << num_qubits];
        probs[k] = 1.0;
        Distribution { num_qubits, probs }
    }

    pub fn uniform(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        Distribution {
            num_qubits,
            probs: vec![1.0 / dim as f64; dim],
        }
    }

    /// Clamps tiny negative round-off and renormalises.
    pub(crate) fn from_unnormalized(num_qubits: usize, mut probs: Vec<f64>) -> Self {
        for p in probs.iter_mut() {
            *p = p.max(0.0);
        }
        let sum: f64 = probs.iter().sum();
        for p in probs.iter_mut() {
            *p = (*p / sum).min(1.0);
        }
        Distribution { num_qubits, probs }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    /// Index of the most likely outcome (lowest index on ties).
    pub fn argmax(&self) -> usize {
        self.probs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &p)| {
                if p > best.1 {
                    (i, p)
                } else {
                    best
                }
            })
            .0
    }
}

/// Per-qubit readout confusion, row-major. Column `j` is the distribution of
/// the reported bit given true bit `j`.
pub type Confusion = [[f64; 2]; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Depolarizing probability after each single-qubit gate.
    #[serde(default)]
    pub p1: f64,
    /// Depolarizing probability after each two-qubit gate.
    #[serde(default)]
    pub p2: f64,
    /// Additive angle error (radians) on every parameterized rotation.
    #[serde(default)]
    pub overrotation: f64,
    /// Either empty (perfect readout), a single matrix shared by all qubits,
    /// or one matrix per qubit.
    #[serde(default)]
    pub readout: Vec<Confusion>,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::noiseless()
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        NoiseModel {
            p1: 0.0,
            p2: 0.0,
            overrotation: 0.0,
            readout: Vec::new(),
        }
    }

    pub fn readout_only(confusion: Confusion) -> Self {
        NoiseModel {
            readout: vec![confusion],
            ..NoiseModel::noiseless()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p1", self.p1), ("p2", self.p2)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(GemError::InvalidNoise(format!(
                    "{name} = {p} outside [0, 1]"
                )));
            }
        }
        if !self.overrotation.is_finite() {
            return Err(GemError::InvalidNoise(
                "over-rotation must be finite".into(),
            ));
        }
        for (q, m) in self.readout.iter().enumerate() {
            #[allow(clippy::needless_range_loop)]
            for col in 0..2 {
                let (a, b) = (m[0][col], m[1][col]);
                if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
                    return Err(GemError::InvalidNoise(format!(
                        "readout matrix {q} has an entry outside [0, 1]"
                    )));
                }
                if (a + b - 1.0).abs() > 1e-12 {
                    return Err(GemError::InvalidNoise(format!(
                        "readout matrix {q} column {col} sums to {}",
                        a + b
                    )));
                }
            }
        }
        Ok(())
    }

    fn confusion_for(&self, qubit: usize, num_qubits: usize) -> Result<Option<&Confusion>> {
        match self.readout.len() {
            0 => Ok(None),
            1 => Ok(self.readout.first()),
            n if n == num_qubits => Ok(self.readout.get(qubit)),
            n => Err(GemError::InvalidNoise(format!(
                "{n} readout matrices for {num_qubits} qubit(s)"
            ))),
        }
    }

    /// Gate matrix actually applied by the noisy device.
    fn noisy_matrix(&self, gate: &Gate) -> Option<Unitary2> {
        let eps = self.overrotation;
        let p = &gate.params;
        match gate.kind {
            GateKind::U1 => single_qubit_matrix(GateKind::U1, &[p[0] + eps]),
            GateKind::U2 => Some(u3_matrix(FRAC_PI_2 + eps, p[0], p[1])),
            GateKind::U3 => Some(u3_matrix(p[0] + eps, p[1], p[2])),
            GateKind::Rx | GateKind::Ry => single_qubit_matrix(gate.kind, &[p[0] + eps]),
            _ => gate.matrix(),
        }
    }
}

/// Dense density matrix over `num_qubits` qubits, row-major.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    num_qubits: usize,
    dim: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn basis_state(num_qubits: usize, index: usize) -> Self {
        let dim = 1 << num_qubits;
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        data[index * dim + index] = Complex64::new(1.0, 0.0);
        DensityMatrix {
            num_qubits,
            dim,
            data,
        }
    }

    fn mask(&self, qubit: usize) -> usize {
        1 << (self.num_qubits - 1 - qubit)
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.entry(i, i).re).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.entry(i, i).re).collect()
    }

    /// `rho -> U rho U^dagger` for a single-qubit `U`.
    pub fn apply_single(&mut self, u: &Unitary2, qubit: usize) {
        let m = self.mask(qubit);
        let dim = self.dim;
        // Left multiplication acts on rows.
        for r0 in (0..dim).filter(|r| r & m == 0) {
            let r1 = r0 | m;
            for col in 0..dim {
                let a = self.data[r0 * dim + col];
                let b = self.data[r1 * dim + col];
                self.data[r0 * dim + col] = u[0][0] * a + u[0][1] * b;
                self.data[r1 * dim + col] = u[1][0] * a + u[1][1] * b;
            }
        }
        // Right multiplication by U^dagger acts on columns.
        let ud = [
            [u[0][0].conj(), u[1][0].conj()],
            [u[0][1].conj(), u[1][1].conj()],
        ];
        for row in 0..dim {
            for c0 in (0..dim).filter(|c| c & m == 0) {
                let c1 = c0 | m;
                let a = self.data[row * dim + c0];
                let b = self.data[row * dim + c1];
                self.data[row * dim + c0] = a * ud[0][0] + b * ud[1][0];
                self.data[row * dim + c1] = a * ud[0][1] + b * ud[1][1];
            }
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        let (cm, tm) = (self.mask(control), self.mask(target));
        let perm = |i: usize| if i & cm != 0 { i ^ tm } else { i };
        let dim = self.dim;
        let old = self.data.clone();
        for r in 0..dim {
            let pr = perm(r);
            for col in 0..dim {
                self.data[r * dim + col] = old[pr * dim + perm(col)];
            }
        }
    }

    /// `rho -> (1 - p) rho + p (I_Q / 2^|Q| tensor Tr_Q rho)`.
    pub fn depolarize(&mut self, qubits: &[usize], p: f64) {
        if p == 0.0 {
            return;
        }
        let m = qubits.iter().fold(0, |acc, &q| acc | self.mask(q));
        let subsets: Vec<usize> = (0..self.dim).filter(|s| s & !m == 0).collect();
        let weight = p / subsets.len() as f64;
        let dim = self.dim;
        let old = self.data.clone();
        for r in 0..dim {
            for col in 0..dim {
                let mut value = old[r * dim + col] * (1.0 - p);
                if r & m == col & m {
                    let (rb, cb) = (r & !m, col & !m);
                    let traced: Complex64 = subsets
                        .iter()
                        .map(|&s| old[(rb | s) * dim + (cb | s)])
                        .sum();
                    value += traced * weight;
                }
                self.data[r * dim + col] = value;
            }
        }
    }

    pub fn apply_gate(&mut self, gate: &Gate, noise: Option<&NoiseModel>) {
        match gate.kind {
            GateKind::Measure => return,
            GateKind::Cnot => self.apply_cnot(gate.qubits[0], gate.qubits[1]),
            _ => {
                let u = match noise {
                    Some(n) => n.noisy_matrix(gate),
                    None => gate.matrix(),
                }
                .expect("single-qubit gate has a matrix");
                self.apply_single(&u, gate.qubits[0]);
            }
        }
        if let Some(n) = noise {
            let p = if gate.qubits.len() == 2 { n.p2 } else { n.p1 };
            self.depolarize(&gate.qubits, p);
        }
    }
}

/// Evolves the circuit's initial basis state through every gate and returns
/// the measured outcome distribution. `None` means an ideal device.
pub fn exact_probabilities(circuit: &Circuit, noise: Option<&NoiseModel>) -> Result<Distribution> {
    let n = circuit.num_qubits();
    if n > MAX_QUBITS {
        return Err(GemError::TooManyQubits {
            num_qubits: n,
            max: MAX_QUBITS,
        });
    }
    if let Some(model) = noise {
        model.validate()?;
        model.confusion_for(0, n)?;
    }
    let mut rho = DensityMatrix::basis_state(n, circuit.initial_index());
    for gate in circuit.gates() {
        rho.apply_gate(gate, noise);
    }
    let mut diag = rho.diagonal();
    if let Some(model) = noise {
        for q in 0..n {
            if let Some(conf) = model.confusion_for(q, n)? {
                apply_confusion(&mut diag, n, q, conf);
            }
        }
    }
    Ok(Distribution::from_unnormalized(n, diag))
}

fn apply_confusion(probs: &mut [f64], num_qubits: usize, qubit: usize, conf: &Confusion) {
    let m = 1 << (num_qubits - 1 - qubit);
    for i0 in (0..probs.len()).filter(|i| i & m == 0) {
        let i1 = i0 | m;
        let (t0, t1) = (probs[i0], probs[i1]);
        probs[i0] = conf[0][0] * t0 + conf[0][1] * t1;
        probs[i1] = conf[1][0] * t0 + conf[1][1] * t1;
    }
}

/// Draws `shots` outcomes from `dist` and returns the relative frequencies.
pub fn sample_from<R: rand::Rng + ?Sized>(
    dist: &Distribution,
    shots: u64,
    rng: &mut R,
) -> Distribution {
    let counts = multinomial_counts(dist.probs(), shots, rng);
    let probs = counts
        .into_iter()
        .map(|k| k as f64 / shots as f64)
        .collect();
    Distribution {
        num_qubits: dist.num_qubits,
        probs,
    }
}

/// Multinomial draw by sequential conditional binomials.
pub fn multinomial_counts<R: rand::Rng + ?Sized>(
    probs: &[f64],
    shots: u64,
    rng: &mut R,
) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass = 1.0f64;
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() {
            counts[i] = remaining;
            break;
        }
        let q = if mass > 0.0 {
            (p / mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let k = Binomial::new(remaining, q)
            .expect("probability clamped to [0, 1]")
            .sample(rng);
        counts[i] = k;
        remaining -= k;
        mass -= p;
    }
    counts
}

/// Relative frequencies from `shots` simulated measurements; deterministic
/// for a fixed seed.
pub fn sample_counts(
    circuit: &Circuit,
    shots: u64,
    noise: Option<&NoiseModel>,
    seed: u64,
) -> Result<Distribution> {
    if shots == 0 {
        return Err(GemError::Config("shots must be at least 1".into()));
    }
    let exact = exact_probabilities(circuit, noise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_from(&exact, shots, &mut rng))
}
