//! Least-squares unfolding on the probability simplex:
//! minimise `f(x) = sum_i (v_i - (M x)_i)^2` subject to `x_i >= 0`,
//! `sum_i x_i = 1`.
//!
//! The objective is a convex quadratic, so any feasible descent method that
//! reaches a stationary point is globally optimal. We use accelerated
//! projected gradient with an exact sort-based simplex projection and a
//! monotone safeguard: a momentum step is accepted only if it does not
//! increase `f`, otherwise a plain projected-gradient step is taken and the
//! momentum is reset. Every iterate is feasible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp1};
use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationMatrix;
use crate::error::{GemError, Result};
use crate::seed;
use crate::simulator::Distribution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Objective-improvement threshold for declaring convergence.
    pub tolerance: f64,
    pub seed: u64,
    /// Number of random starting points, tried in addition to the observed
    /// distribution itself.
    pub restarts: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 10_000,
            tolerance: 1e-12,
            seed: 0,
            restarts: 4,
        }
    }
}

impl SolverConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(GemError::Config("max_iterations must be at least 1".into()));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(GemError::Config("tolerance must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(GemError::Config("restarts must be at least 1".into()));
        }
        Ok(())
    }
}

/// Result of [`mitigate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Mitigated {
    pub distribution: Distribution,
    pub objective: f64,
    /// False when the winning run hit `max_iterations` first; the returned
    /// point is still the best feasible iterate found.
    pub converged: bool,
    /// 0 is the start at the observed distribution, `1..` the random starts.
    pub start_index: usize,
    pub iterations: usize,
}

fn check_dims(m: &CalibrationMatrix, len: usize) -> Result<()> {
    if m.dim() != len {
        return Err(GemError::Dimension {
            expected: m.dim(),
            found: len,
        });
    }
    Ok(())
}

/// `f(X) = sum_i (v_i - (M X)_i)^2`.
pub fn objective(m: &CalibrationMatrix, x: &Distribution, v: &Distribution) -> Result<f64> {
    check_dims(m, x.len())?;
    check_dims(m, v.len())?;
    objective_raw(m, x.probs(), v.probs())
}

fn objective_raw(m: &CalibrationMatrix, x: &[f64], v: &[f64]) -> Result<f64> {
    Ok(m.apply(x)?
        .iter()
        .zip(v)
        .map(|(mx, vi)| (vi - mx).powi(2))
        .sum())
}

/// `grad f(x) = 2 M^T (M x - v)`.
fn gradient(m: &CalibrationMatrix, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let residual: Vec<f64> = m
        .apply(x)?
        .iter()
        .zip(v)
        .map(|(a, b)| 2.0 * (a - b))
        .collect();
    m.apply_transpose(&residual)
}

/// Euclidean projection onto `{x : x_i >= 0, sum x_i = 1}` by sorting.
pub fn project_onto_simplex(y: &[f64]) -> Vec<f64> {
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    let mut x: Vec<f64> = y.iter().map(|&yi| (yi - theta).max(0.0)).collect();
    // Round-off can leave the sum a few ulps from 1.
    let sum: f64 = x.iter().sum();
    if sum > 0.0 {
        x.iter_mut().for_each(|xi| *xi = (*xi / sum).min(1.0));
    }
    x
}

/// Uniform point on the simplex: normalised i.i.d. exponentials.
fn random_simplex_point(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e: Vec<f64> = (0..dim).map(|_| Exp1.sample(&mut rng)).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|x| x / total).collect()
}

/// Upper bound on the largest eigenvalue of `M^T M`: `||M||_1 ||M||_inf`.
fn spectral_bound(m: &CalibrationMatrix) -> f64 {
    let dim = m.dim();
    let max_col = (0..dim)
        .map(|j| (0..dim).map(|i| m.get(i, j).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let max_row = (0..dim)
        .map(|i| (0..dim).map(|j| m.get(i, j).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    max_col * max_row
}

struct Run {
    x: Vec<f64>,
    f: f64,
    converged: bool,
    iterations: usize,
}

fn descend(m: &CalibrationMatrix, v: &[f64], start: Vec<f64>, cfg: &SolverConfig) -> Result<Run> {
    // Lipschitz constant of the gradient.
    let lipschitz = (2.0 * spectral_bound(m)).max(f64::MIN_POSITIVE);
    let step = 1.0 / lipschitz;

    let mut x = project_onto_simplex(&start);
    let mut f = objective_raw(m, &x, v)?;
    let mut y = x.clone();
    let mut momentum = 1.0f64;

    for iteration in 1..=cfg.max_iterations {
        // A stall is only a fixed point when the step was taken from x.
        let from_x = y == x;
        let g = gradient(m, &y, v)?;
        let mut candidate = project_onto_simplex(
            &y.iter()
                .zip(&g)
                .map(|(a, b)| a - step * b)
                .collect::<Vec<_>>(),
        );
        let mut f_candidate = objective_raw(m, &candidate, v)?;
        let mut restarted = false;
        if f_candidate > f {
            // Momentum overshot: fall back to a plain step from x.
            let g = gradient(m, &x, v)?;
            candidate = project_onto_simplex(
                &x.iter()
                    .zip(&g)
                    .map(|(a, b)| a - step * b)
                    .collect::<Vec<_>>(),
            );
            f_candidate = objective_raw(m, &candidate, v)?;
            restarted = true;
        }
        if f_candidate > f {
            // Only reachable through round-off at the optimum.
            return Ok(Run {
                x,
                f,
                converged: true,
                iterations: iteration,
            });
        }

        let improvement = f - f_candidate;
        let movement = x
            .iter()
            .zip(&candidate)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);

        let stalled = improvement <= cfg.tolerance && movement <= cfg.tolerance.sqrt() * 1e-3;
        if stalled && !(from_x || restarted) {
            // Extrapolation ran off the simplex and projected back onto x.
            momentum = 1.0;
            y = x.clone();
            continue;
        }

        if restarted {
            momentum = 1.0;
            y = candidate.clone();
        } else {
            let next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            let beta = (momentum - 1.0) / next;
            y = candidate
                .iter()
                .zip(&x)
                .map(|(c, old)| c + beta * (c - old))
                .collect();
            momentum = next;
        }
        x = candidate;
        f = f_candidate;

        if stalled {
            return Ok(Run {
                x,
                f,
                converged: true,
                iterations: iteration,
            });
        }
    }
    Ok(Run {
        x,
        f,
        converged: false,
        iterations: cfg.max_iterations,
    })
}

/// Finds the feasible minimiser of `f` from the observed distribution and
/// `cfg.restarts` random simplex points, returning the lowest objective
/// (ties go to the earlier start). Deterministic for a fixed `cfg`.
pub fn mitigate(m: &CalibrationMatrix, v: &Distribution, cfg: &SolverConfig) -> Result<Mitigated> {
    cfg.validate()?;
    check_dims(m, v.len())?;
    let sum: f64 = v.probs().iter().sum();
    if (sum - 1.0).abs() > 1e-9 || v.probs().iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(GemError::InvalidDistribution(format!(
            "observed distribution is not normalised (sum {sum})"
        )));
    }

    let dim = m.dim();
    let starts = std::iter::once(v.probs().to_vec()).chain(
        (0..cfg.restarts).map(|r| random_simplex_point(dim, seed::derive(cfg.seed, &[r as u64]))),
    );

    let mut best: Option<(usize, Run)> = None;
    for (index, start) in starts.enumerate() {
        let run = descend(m, v.probs(), start, cfg)?;
        if best.as_ref().is_none_or(|(_, b)| run.f < b.f) {
            best = Some((index, run));
        }
    }
    let (start_index, run) = best.expect("at least one start");
    Ok(Mitigated {
        distribution: Distribution::from_unnormalized(v.num_qubits(), run.x),
        objective: run.f,
        converged: run.converged,
        start_index,
        iterations: run.iterations,
    })
}
