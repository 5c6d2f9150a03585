//! Test-only oracles, independent of the library's own numerical paths.
#![allow(dead_code)]

use gem_core::circuits::{Circuit, GateKind};
use gem_core::{CalibrationKind, CalibrationMatrix};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

pub type CMatrix = DMatrix<Complex64>;

/// Full 2^n x 2^n unitary of a measurement-free circuit, built from
/// Kronecker products (qubit 0 is the most significant factor).
pub fn circuit_unitary(circuit: &Circuit) -> CMatrix {
    let n = circuit.num_qubits();
    let dim = 1 << n;
    let mut u = CMatrix::identity(dim, dim);
    for gate in circuit.gates() {
        let g = match gate.kind {
            GateKind::Measure => continue,
            GateKind::Cnot => {
                let (cm, tm) = (1 << (n - 1 - gate.qubits[0]), 1 << (n - 1 - gate.qubits[1]));
                CMatrix::from_fn(dim, dim, |r, c| {
                    let image = if c & cm != 0 { c ^ tm } else { c };
                    if r == image {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
            }
            _ => {
                let m = gate.matrix().unwrap();
                let small = CMatrix::from_fn(2, 2, |r, c| m[r][c]);
                let q = gate.qubits[0];
                let left = CMatrix::identity(1 << q, 1 << q);
                let right = CMatrix::identity(1 << (n - 1 - q), 1 << (n - 1 - q));
                left.kronecker(&small).kronecker(&right)
            }
        };
        u = g * u;
    }
    u
}

/// True when `a = e^{i phi} b` entrywise within `tol`.
pub fn equal_up_to_phase(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    let (idx, _) = a
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
        .unwrap();
    let bi = b.as_slice()[idx];
    if bi.norm() < 1e-9 {
        return false;
    }
    let phase = a.as_slice()[idx] / bi;
    a.iter()
        .zip(b.iter())
        .all(|(x, y)| (x - phase * y).norm() < tol)
}

/// Output probabilities of the ideal circuit via its statevector.
pub fn statevector_probs(circuit: &Circuit) -> Vec<f64> {
    let u = circuit_unitary(circuit);
    let dim = u.nrows();
    let mut psi = DVector::from_element(dim, Complex64::new(0.0, 0.0));
    psi[circuit.initial_index()] = Complex64::new(1.0, 0.0);
    (u * psi).iter().map(|a| a.norm_sqr()).collect()
}

pub fn objective(m: &[Vec<f64>], x: &[f64], v: &[f64]) -> f64 {
    m.iter()
        .zip(v)
        .map(|(row, vi)| {
            let mx: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            (vi - mx).powi(2)
        })
        .sum()
}

/// Grid-search minimiser of `||M x - v||^2` on the simplex, for 2 or 4
/// outcomes: an exhaustive grid at step `coarse` followed by local grids
/// that are re-centred until stable, at steps 1e-3, 1e-4 and 1e-5.
pub fn grid_oracle(m: &[Vec<f64>], v: &[f64], coarse: f64) -> (Vec<f64>, f64) {
    let dim = v.len();
    assert!(dim == 2 || dim == 4);
    let free = dim - 1;
    let point = |y: &[f64]| -> Option<Vec<f64>> {
        if y.iter().any(|&t| t < -1e-12) {
            return None;
        }
        let last = 1.0 - y.iter().sum::<f64>();
        if last < -1e-12 {
            return None;
        }
        let mut x: Vec<f64> = y.iter().map(|&t| t.max(0.0)).collect();
        x.push(last.max(0.0));
        Some(x)
    };

    // Exhaustive coarse grid over the free coordinates.
    let steps = (1.0 / coarse).round() as i64;
    let mut best: (Vec<f64>, f64) = (vec![], f64::INFINITY);
    let visit = |y: &[f64], best: &mut (Vec<f64>, f64)| {
        if let Some(x) = point(y) {
            let f = objective(m, &x, v);
            if f < best.1 {
                *best = (x, f);
            }
        }
    };
    if free == 1 {
        for i in 0..=steps {
            visit(&[i as f64 / steps as f64], &mut best);
        }
    } else {
        for i in 0..=steps {
            for j in 0..=steps - i {
                for k in 0..=steps - i - j {
                    let y = [i as f64, j as f64, k as f64].map(|t| t / steps as f64);
                    visit(&y, &mut best);
                }
            }
        }
    }

    for (h, radius) in [(1e-3, 30i64), (1e-4, 20), (1e-5, 20)] {
        for _ in 0..200 {
            let centre: Vec<f64> = best.0[..free].to_vec();
            let before = best.1;
            let mut offsets = vec![-radius; free];
            'grid: loop {
                let y: Vec<f64> = centre
                    .iter()
                    .zip(&offsets)
                    .map(|(c, &o)| c + o as f64 * h)
                    .collect();
                visit(&y, &mut best);
                for d in 0..free {
                    if offsets[d] < radius {
                        offsets[d] += 1;
                        for e in offsets.iter_mut().take(d) {
                            *e = -radius;
                        }
                        continue 'grid;
                    }
                }
                break;
            }
            if best.1 >= before {
                break;
            }
        }
    }
    best
}

/// Random column-stochastic matrix; `dominance` in [0, 1] mixes in the identity.
pub fn random_stochastic<R: Rng>(dim: usize, dominance: f64, rng: &mut R) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; dim]; dim];
    #[allow(clippy::needless_range_loop)]
    for j in 0..dim {
        let raw: Vec<f64> = (0..dim)
            .map(|_| -rng.random::<f64>().max(1e-300).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        for i in 0..dim {
            let id = if i == j { 1.0 } else { 0.0 };
            m[i][j] = dominance * id + (1.0 - dominance) * raw[i] / total;
        }
    }
    // Exact column sums.
    for j in 0..dim {
        let s: f64 = (0..dim).map(|i| m[i][j]).sum();
        for row in m.iter_mut() {
            row[j] /= s;
        }
    }
    m
}

pub fn random_simplex<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..dim)
        .map(|_| -rng.random::<f64>().max(1e-300).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

pub fn matrix(num_qubits: usize, rows: Vec<Vec<f64>>) -> CalibrationMatrix {
    CalibrationMatrix::from_rows(num_qubits, CalibrationKind::Qem, rows).unwrap()
}

/// The 4x4 calibration matrix measured for the Rx-plus-repeated-sequence
/// circuit on a two-qubit device, rounded to 7 digits (columns sum to 1
/// within 1e-7).
pub const HARDWARE_MATRIX: [[f64; 4]; 4] = [
    [0.5526123, 0.1893310, 0.1623535, 0.1437988],
    [0.1372070, 0.5322266, 0.1494141, 0.1748047],
    [0.1693115, 0.1330566, 0.5349121, 0.1687012],
    [0.1408691, 0.1453857, 0.1533203, 0.5126953],
];

/// The hardware matrix with each column rescaled to sum to exactly 1.
pub fn hardware_matrix() -> CalibrationMatrix {
    let mut rows: Vec<Vec<f64>> = HARDWARE_MATRIX.iter().map(|r| r.to_vec()).collect();
    for j in 0..4 {
        let s: f64 = (0..4).map(|i| rows[i][j]).sum();
        for row in rows.iter_mut() {
            row[j] /= s;
        }
    }
    matrix(2, rows)
}

/// Average ranks (ties share the mean rank), 1-based.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation and its two-sided p-value (t approximation).
pub fn spearman(x: &[f64], y: &[f64]) -> (f64, f64) {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let cov: f64 = rx
        .iter()
        .zip(&ry)
        .map(|(a, b)| (a - mean) * (b - mean))
        .sum();
    let vx: f64 = rx.iter().map(|a| (a - mean).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - mean).powi(2)).sum();
    let rho = cov / (vx * vy).sqrt();
    let t = rho * ((n - 2.0) / (1.0 - rho * rho).max(1e-300)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, n - 2.0).unwrap();
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    (rho, p)
}

/// 3-sigma multinomial band for a frequency estimate of probability `p`.
pub fn three_sigma(p: f64, shots: u64) -> f64 {
    3.0 * (p * (1.0 - p) / shots as f64).sqrt()
}
