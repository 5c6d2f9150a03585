mod common;

use common::{grid_oracle, hardware_matrix, matrix, random_simplex, random_stochastic};
use gem_core::mitigation::{mitigate, objective, project_onto_simplex, SolverConfig};
use gem_core::simulator::Distribution;
use gem_core::{CalibrationKind, CalibrationMatrix};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn dist(p: &[f64]) -> Distribution {
    Distribution::new(p.len().trailing_zeros() as usize, p.to_vec()).unwrap()
}

fn two_by_two() -> CalibrationMatrix {
    matrix(1, vec![vec![0.9, 0.2], vec![0.1, 0.8]])
}

fn forward(m: &CalibrationMatrix, x: &[f64]) -> Distribution {
    // Renormalise away the last-ulp drift of the product.
    let y = m.apply(x).unwrap();
    let s: f64 = y.iter().sum();
    dist(&y.iter().map(|v| v / s).collect::<Vec<_>>())
}

fn assert_feasible(x: &Distribution) {
    assert!(x.probs().iter().all(|&p| (0.0..=1.0).contains(&p)));
    assert!((x.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
}

#[test]
fn interior_example_matches_grid_oracle() {
    let m = two_by_two();
    let v = dist(&[0.69, 0.31]);
    let (oracle, _) = grid_oracle(&m.rows(), v.probs(), 1e-4);
    assert!((oracle[0] - 0.7).abs() < 1e-4);

    let x = mitigate(&m, &v, &SolverConfig::default()).unwrap();
    assert!(x.converged);
    assert!((x.distribution.probs()[0] - 0.7).abs() < 1e-6);
    assert!((x.distribution.probs()[1] - 0.3).abs() < 1e-6);
}

#[test]
fn boundary_example_matches_grid_oracle() {
    let m = two_by_two();
    let v = dist(&[1.0, 0.0]);
    // Unconstrained inverse is (8/7, -1/7).
    let inv: DVector<f64> = DMatrix::from_row_slice(2, 2, &[0.9, 0.2, 0.1, 0.8])
        .try_inverse()
        .unwrap()
        * DVector::from_row_slice(&[1.0, 0.0]);
    assert!((inv[0] - 8.0 / 7.0).abs() < 1e-12 && (inv[1] + 1.0 / 7.0).abs() < 1e-12);

    let (oracle, _) = grid_oracle(&m.rows(), v.probs(), 1e-4);
    assert_eq!(oracle, vec![1.0, 0.0]);
    let x = mitigate(&m, &v, &SolverConfig::default()).unwrap();
    assert!((x.distribution.probs()[0] - 1.0).abs() < 1e-6);
    assert!(x.distribution.probs()[1].abs() < 1e-6);
}

#[test]
fn hardware_matrix_objective_zero_at_first_column() {
    let m = hardware_matrix();
    let v = dist(&m.column(0));
    let e1 = dist(&[1.0, 0.0, 0.0, 0.0]);
    assert!(objective(&m, &e1, &v).unwrap() < 1e-24);
    // Raw entries, unrescaled, sum within 1e-4 per column.
    for j in 0..4 {
        let s: f64 = common::HARDWARE_MATRIX.iter().map(|r| r[j]).sum();
        assert!((s - 1.0).abs() < 1e-4);
    }
}

#[test]
fn identity_mitigation_returns_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 1..=3 {
        let v = dist(&random_simplex(1 << n, &mut rng));
        let x = mitigate(
            &CalibrationMatrix::identity(n, CalibrationKind::Qem),
            &v,
            &SolverConfig::default(),
        )
        .unwrap();
        for (a, b) in x.distribution.probs().iter().zip(v.probs()) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn exact_recovery_matches_matrix_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..50 {
        let dim: usize = [2, 4, 8][trial % 3];
        let m = matrix(
            dim.trailing_zeros() as usize,
            random_stochastic(dim, 0.6, &mut rng),
        );
        // Interior point: keep every coordinate away from the boundary.
        let x_true: Vec<f64> = random_simplex(dim, &mut rng)
            .iter()
            .map(|p| 0.5 * p + 0.5 / dim as f64)
            .collect();
        let v = forward(&m, &x_true);
        let inverse = DMatrix::from_row_slice(dim, dim, &m.rows().concat())
            .try_inverse()
            .unwrap()
            * DVector::from_row_slice(v.probs());
        let x = mitigate(&m, &v, &SolverConfig::default()).unwrap();
        for i in 0..dim {
            assert!(
                (x.distribution.probs()[i] - inverse[i]).abs() < 1e-6,
                "trial {trial}"
            );
        }
    }
}

#[test]
fn malformed_observations_rejected() {
    // A non-normalised vector cannot be constructed or deserialised.
    assert!(Distribution::new(1, vec![0.7, 0.7]).is_err());
    assert!(serde_json::from_str::<Distribution>(r#"{"num_qubits":1,"probs":[0.7,0.7]}"#).is_err());
    let wide = dist(&[0.25; 4]);
    assert!(mitigate(&two_by_two(), &wide, &SolverConfig::default()).is_err());
}

#[test]
fn max_iterations_exhaustion_still_feasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = matrix(3, random_stochastic(8, 0.1, &mut rng));
    let v = dist(&random_simplex(8, &mut rng));
    let cfg = SolverConfig {
        max_iterations: 1,
        ..SolverConfig::default()
    };
    let x = mitigate(&m, &v, &cfg).unwrap();
    assert_feasible(&x.distribution);
}

fn arb_instance(
    dims: &'static [usize],
) -> impl Strategy<Value = (CalibrationMatrix, Distribution, u64)> {
    (
        prop::sample::select(dims),
        any::<u64>(),
        0.0..0.9f64,
        any::<u64>(),
    )
        .prop_map(|(dim, seed, dom, solver_seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = matrix(
                dim.trailing_zeros() as usize,
                random_stochastic(dim, dom, &mut rng),
            );
            let v = dist(&random_simplex(dim, &mut rng));
            (m, v, solver_seed)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn feasible_and_no_worse_than_observed((m, v, seed) in arb_instance(&[2, 4, 8, 16])) {
        let x = mitigate(&m, &v, &SolverConfig::default().with_seed(seed)).unwrap();
        prop_assert!(x.distribution.probs().iter().all(|&p| (0.0..=1.0).contains(&p)));
        prop_assert!((x.distribution.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let fv = objective(&m, &v, &v).unwrap();
        prop_assert!(x.objective <= fv + 1e-12);
        prop_assert!((objective(&m, &x.distribution, &v).unwrap() - x.objective).abs() < 1e-15);
    }

    #[test]
    fn deterministic_for_fixed_seed((m, v, seed) in arb_instance(&[2, 4, 8])) {
        let cfg = SolverConfig::default().with_seed(seed);
        let a = mitigate(&m, &v, &cfg).unwrap();
        let b = mitigate(&m, &v, &cfg).unwrap();
        prop_assert_eq!(a.distribution.probs(), b.distribution.probs());
    }

    #[test]
    fn row_permutation_leaves_solution_unchanged(
        (m, v, _) in arb_instance(&[2, 4, 8]),
        perm_seed in any::<u64>(),
    ) {
        // Reordering the equations of the least-squares problem does not
        // change its minimiser.
        use rand::seq::SliceRandom;
        let dim = v.len();
        let mut perm: Vec<usize> = (0..dim).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(perm_seed));
        let pm = m.permute_rows(&perm);
        let pv = dist(&perm.iter().map(|&i| v.probs()[i]).collect::<Vec<_>>());
        let a = mitigate(&m, &v, &SolverConfig::default()).unwrap();
        let b = mitigate(&pm, &pv, &SolverConfig::default()).unwrap();
        prop_assert!((a.objective - b.objective).abs() < 1e-12);
        for (x, y) in a.distribution.probs().iter().zip(b.distribution.probs()) {
            prop_assert!((x - y).abs() < 1e-5);
        }
    }

    #[test]
    fn relabelling_outcomes_permutes_solution(
        (m, v, _) in arb_instance(&[2, 4, 8]),
        perm_seed in any::<u64>(),
    ) {
        // Rows and columns of M together with V: X is permuted identically.
        use rand::seq::SliceRandom;
        let dim = v.len();
        let mut perm: Vec<usize> = (0..dim).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(perm_seed));
        let rows = m.rows();
        let pm_rows: Vec<Vec<f64>> = perm
            .iter()
            .map(|&i| perm.iter().map(|&j| rows[i][j]).collect())
            .collect();
        let pm = matrix(m.num_qubits(), pm_rows);
        let pv = dist(&perm.iter().map(|&i| v.probs()[i]).collect::<Vec<_>>());
        let a = mitigate(&m, &v, &SolverConfig::default()).unwrap();
        let b = mitigate(&pm, &pv, &SolverConfig::default()).unwrap();
        prop_assert!((a.objective - b.objective).abs() < 1e-12);
        for (k, &i) in perm.iter().enumerate() {
            prop_assert!((b.distribution.probs()[k] - a.distribution.probs()[i]).abs() < 1e-5);
        }
    }

    #[test]
    fn projection_is_nearest_simplex_point(y in prop::collection::vec(-3.0..3.0f64, 1..12)) {
        let p = project_onto_simplex(&y);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // Optimality: (y - p) . (q - p) <= 0 for every vertex q.
        for k in 0..y.len() {
            let dot: f64 = (0..y.len())
                .map(|i| (y[i] - p[i]) * (if i == k { 1.0 } else { 0.0 } - p[i]))
                .sum();
            prop_assert!(dot <= 1e-12);
        }
    }
}

#[test]
fn oracle_optimality_small_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..40 {
        let dim = if trial % 2 == 0 { 2 } else { 4 };
        let m = random_stochastic(dim, 0.3, &mut rng);
        let v = dist(&random_simplex(dim, &mut rng));
        let (_, best) = grid_oracle(&m, v.probs(), if dim == 2 { 1e-3 } else { 0.02 });
        let x = mitigate(
            &matrix(dim.trailing_zeros() as usize, m),
            &v,
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(
            x.objective <= best + 1e-6,
            "trial {trial}: {} vs {best}",
            x.objective
        );
        assert_feasible(&x.distribution);
    }
}

#[test]
fn hardware_matrix_round_trip() {
    let m = hardware_matrix();
    for k in 0..4 {
        let mut e = [0.0; 4];
        e[k] = 1.0;
        let v = forward(&m, &e);
        let x = mitigate(&m, &v, &SolverConfig::default()).unwrap();
        for (a, b) in x.distribution.probs().iter().zip(e) {
            assert!((a - b).abs() < 1e-3);
        }
    }
}
