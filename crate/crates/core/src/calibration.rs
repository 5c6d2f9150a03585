//! Calibration circuits and the column-stochastic matrices built from their
//! measured outputs.
//!
//! Column `j` (0-based) of every matrix holds the distribution measured when
//! basis state `j` is the ideal output, so a perfect device yields the
//! identity.
//!
//! - QEM: bare state preparations, `2^N` circuits.
//! - GEM: each half of the target circuit composed with its own inverse,
//!   once per basis state and per half (`2^(N+1)` circuits); the two
//!   resulting matrices are averaged.
//! - Direct: the target circuit itself, for circuits that permute basis
//!   states; columns are placed by ideal output state.
//! - Reduced: a subset of columns measured, the rest taken from the identity.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::circuits::{
    index_to_bits, inverse_circuit, prepare_state, split_halves, Circuit, GateKind,
};
use crate::error::{GemError, Result};
use crate::simulator::{exact_probabilities, Distribution};

const COLUMN_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CalibrationKind {
    #[serde(rename = "QEM")]
    Qem,
    #[serde(rename = "GEM_half1")]
    GemHalf1,
    #[serde(rename = "GEM_half2")]
    GemHalf2,
    #[serde(rename = "GEM_combined")]
    GemCombined,
    Reduced,
    Direct,
}

impl fmt::Display for CalibrationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CalibrationKind::Qem => "QEM",
            CalibrationKind::GemHalf1 => "GEM_half1",
            CalibrationKind::GemHalf2 => "GEM_half2",
            CalibrationKind::GemCombined => "GEM_combined",
            CalibrationKind::Reduced => "Reduced",
            CalibrationKind::Direct => "Direct",
        };
        f.write_str(s)
    }
}

/// Square column-stochastic matrix of dimension `2^N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct CalibrationMatrix {
    num_qubits: usize,
    kind: CalibrationKind,
    dim: usize,
    /// Row-major.
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    num_qubits: usize,
    kind: CalibrationKind,
    entries: Vec<Vec<f64>>,
}

impl TryFrom<MatrixRepr> for CalibrationMatrix {
    type Error = GemError;

    fn try_from(r: MatrixRepr) -> Result<Self> {
        CalibrationMatrix::from_rows(r.num_qubits, r.kind, r.entries)
    }
}

impl From<CalibrationMatrix> for MatrixRepr {
    fn from(m: CalibrationMatrix) -> Self {
        MatrixRepr {
            num_qubits: m.num_qubits,
            kind: m.kind,
            entries: m.rows(),
        }
    }
}

impl CalibrationMatrix {
    pub fn identity(num_qubits: usize, kind: CalibrationKind) -> Self {
        let dim = 1 << num_qubits;
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        CalibrationMatrix {
            num_qubits,
            kind,
            dim,
            data,
        }
    }

    /// Builds from row-major entries, checking shape, range and column sums.
    pub fn from_rows(
        num_qubits: usize,
        kind: CalibrationKind,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let dim = 1usize << num_qubits;
        if rows.len() != dim {
            return Err(GemError::Dimension {
                expected: dim,
                found: rows.len(),
            });
        }
        if let Some(row) = rows.iter().find(|r| r.len() != dim) {
            return Err(GemError::Dimension {
                expected: dim,
                found: row.len(),
            });
        }
        let m = CalibrationMatrix {
            num_qubits,
            kind,
            dim,
            data: rows.into_iter().flatten().collect(),
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        if let Some(x) = self.data.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(GemError::InvalidMatrix(format!("entry {x} outside [0, 1]")));
        }
        for j in 0..self.dim {
            let sum: f64 = (0..self.dim).map(|i| self.get(i, j)).sum();
            if (sum - 1.0).abs() > COLUMN_SUM_TOLERANCE {
                return Err(GemError::InvalidMatrix(format!("column {j} sums to {sum}")));
            }
        }
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn kind(&self) -> CalibrationKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, col)).collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    /// `M x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(GemError::Dimension {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(self
            .data
            .chunks(self.dim)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `M^T y`.
    pub fn apply_transpose(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.dim {
            return Err(GemError::Dimension {
                expected: self.dim,
                found: y.len(),
            });
        }
        let mut out = vec![0.0; self.dim];
        for (row, &yi) in self.data.chunks(self.dim).zip(y) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * yi;
            }
        }
        Ok(out)
    }

    /// Largest-magnitude entrywise difference to `other`.
    pub fn max_abs_diff(&self, other: &CalibrationMatrix) -> Result<f64> {
        if self.dim != other.dim {
            return Err(GemError::Dimension {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Reorders rows by `perm`: row `i` of the result is row `perm[i]`.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for &p in perm {
            data.extend_from_slice(&self.data[p * self.dim..(p + 1) * self.dim]);
        }
        CalibrationMatrix {
            data,
            ..self.clone()
        }
    }
}

/// One circuit per basis state `0..2^N`: preparation then measurement.
pub fn qem_calibration_circuits(num_qubits: usize) -> Result<Vec<Circuit>> {
    if num_qubits == 0 {
        return Err(GemError::InvalidCircuit(
            "at least one qubit required".into(),
        ));
    }
    (0..1usize << num_qubits)
        .map(|k| Ok(prepare_state(num_qubits, &index_to_bits(num_qubits, k))?.measured()))
        .collect()
}

/// GEM calibration circuits for `circuit`: for each half `A` of the split,
/// and each basis state `k`, the circuit `prep(k) A A^dagger` followed by
/// measurement. Returns the first-half and second-half lists.
pub fn gem_calibration_circuits(circuit: &Circuit) -> Result<(Vec<Circuit>, Vec<Circuit>)> {
    let body = circuit.without_measurements();
    let (first, second) = split_halves(&body)?;
    Ok((echo_circuits(&first)?, echo_circuits(&second)?))
}

fn echo_circuits(half: &Circuit) -> Result<Vec<Circuit>> {
    let n = half.num_qubits();
    let undo = inverse_circuit(half)?;
    (0..1usize << n)
        .map(|k| {
            let mut c = prepare_state(n, &index_to_bits(n, k))?;
            c.extend(half.gates().iter().cloned())?;
            c.extend(undo.gates().iter().cloned())?;
            Ok(c.measured())
        })
        .collect()
}

/// Column `j` of the result is `columns[j]`, the output measured for
/// calibration state `j`.
pub fn build_matrix(columns: &[Distribution], kind: CalibrationKind) -> Result<CalibrationMatrix> {
    let first = columns
        .first()
        .ok_or_else(|| GemError::InvalidMatrix("no columns".into()))?;
    let n = first.num_qubits();
    let dim = 1usize << n;
    if columns.len() != dim {
        return Err(GemError::Dimension {
            expected: dim,
            found: columns.len(),
        });
    }
    let mut m = CalibrationMatrix::identity(n, kind);
    for (j, col) in columns.iter().enumerate() {
        if col.len() != dim {
            return Err(GemError::Dimension {
                expected: dim,
                found: col.len(),
            });
        }
        for (i, &p) in col.probs().iter().enumerate() {
            m.data[i * dim + j] = p;
        }
    }
    Ok(m)
}

/// `(M1 + M2) / 2`.
pub fn combine(m1: &CalibrationMatrix, m2: &CalibrationMatrix) -> Result<CalibrationMatrix> {
    if m1.dim != m2.dim {
        return Err(GemError::Dimension {
            expected: m1.dim,
            found: m2.dim,
        });
    }
    let data = m1
        .data
        .iter()
        .zip(&m2.data)
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    Ok(CalibrationMatrix {
        num_qubits: m1.num_qubits,
        kind: CalibrationKind::GemCombined,
        dim: m1.dim,
        data,
    })
}

/// Matrix with only some columns measured; missing columns are the
/// corresponding identity basis vectors.
pub fn reduced_matrix(
    partial_columns: &BTreeMap<usize, Distribution>,
    num_qubits: usize,
) -> Result<CalibrationMatrix> {
    let mut m = CalibrationMatrix::identity(num_qubits, CalibrationKind::Reduced);
    let dim = m.dim;
    for (&j, col) in partial_columns {
        if j >= dim {
            return Err(GemError::InvalidMatrix(format!(
                "column {j} out of range for {num_qubits} qubit(s)"
            )));
        }
        if col.len() != dim {
            return Err(GemError::Dimension {
                expected: dim,
                found: col.len(),
            });
        }
        for (i, &p) in col.probs().iter().enumerate() {
            m.data[i * dim + j] = p;
        }
    }
    Ok(m)
}

/// Calibration by the target circuit itself: `prep(k) C` then measurement.
/// Only meaningful when `C` maps basis states to distinct basis states; see
/// [`direct_output_states`].
pub fn direct_calibration_circuits(circuit: &Circuit) -> Result<Vec<Circuit>> {
    let body = circuit.without_measurements();
    let n = body.num_qubits();
    (0..1usize << n)
        .map(|k| {
            let mut c = prepare_state(n, &index_to_bits(n, k))?;
            c.extend(body.gates().iter().cloned())?;
            Ok(c.measured())
        })
        .collect()
}

/// Ideal output state of `C` for every input basis state.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputMap {
    /// `outputs[k]` is the most likely noiseless output on input `k`.
    pub outputs: Vec<usize>,
    /// Smallest peak probability over all inputs; below `1 - 1e-6` the
    /// outputs are not basis states and the direct strategy is unsound.
    pub min_peak: f64,
}

impl OutputMap {
    pub fn is_permutation(&self) -> bool {
        let mut seen = vec![false; self.outputs.len()];
        self.outputs
            .iter()
            .all(|&o| !std::mem::replace(&mut seen[o], true))
    }

    pub fn is_deterministic(&self) -> bool {
        self.min_peak >= 1.0 - 1e-6
    }
}

/// Noiseless output of every direct calibration circuit.
pub fn direct_output_states(circuit: &Circuit) -> Result<OutputMap> {
    let mut outputs = Vec::new();
    let mut min_peak = 1.0f64;
    for c in direct_calibration_circuits(circuit)? {
        let d = exact_probabilities(&c, None)?;
        let peak = d.argmax();
        min_peak = min_peak.min(d.probs()[peak]);
        outputs.push(peak);
    }
    Ok(OutputMap { outputs, min_peak })
}

/// Places the measured output for input `k` in column `outputs[k]`.
pub fn build_direct_matrix(columns: &[Distribution], map: &OutputMap) -> Result<CalibrationMatrix> {
    if !map.is_permutation() {
        return Err(GemError::InvalidMatrix(
            "direct calibration outputs are not distinct basis states".into(),
        ));
    }
    if columns.len() != map.outputs.len() {
        return Err(GemError::Dimension {
            expected: map.outputs.len(),
            found: columns.len(),
        });
    }
    let mut ordered: Vec<Option<Distribution>> = vec![None; columns.len()];
    for (col, &out) in columns.iter().zip(&map.outputs) {
        ordered[out] = Some(col.clone());
    }
    let ordered: Vec<Distribution> = ordered.into_iter().map(Option::unwrap).collect();
    build_matrix(&ordered, CalibrationKind::Direct)
}

/// Gates dropped from direct calibration circuits: continuous rotations
/// that would break the basis-state permutation.
pub const DIRECT_STRIPPED: [GateKind; 2] = [GateKind::Rx, GateKind::Ry];
