//! Error measures, mitigation classification and calibration-matrix
//! diagnostics.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationMatrix;
use crate::error::{GemError, Result};
use crate::simulator::Distribution;

/// Fraction of the largest average raw error below which `|delta_g|` counts
/// as no mitigation.
pub const NO_MITIGATION_FRACTION: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    Positive,
    Negative,
    #[serde(rename = "None")]
    NoMitigation,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Positive => "Positive",
            Classification::Negative => "Negative",
            Classification::NoMitigation => "None",
        })
    }
}

/// Raw and mitigated error of one experiment, averaged over repetitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MitigationOutcome {
    pub delta_v: f64,
    pub delta_x: f64,
    pub delta_g: f64,
    pub classification: Classification,
}

impl MitigationOutcome {
    /// Unclassified outcome; [`classify`] assigns the label.
    pub fn new(delta_v: f64, delta_x: f64) -> Self {
        MitigationOutcome {
            delta_v,
            delta_x,
            delta_g: delta_v - delta_x,
            classification: Classification::NoMitigation,
        }
    }
}

/// Euclidean distance `sqrt(sum_k (a_k - s_k)^2)`.
pub fn rms_error(a: &Distribution, s: &Distribution) -> Result<f64> {
    if a.len() != s.len() {
        return Err(GemError::Dimension {
            expected: s.len(),
            found: a.len(),
        });
    }
    Ok(a.probs()
        .iter()
        .zip(s.probs())
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Labels each experiment against `t = 0.03 * max(delta_v)`: no mitigation
/// when `|delta_g| < t`, otherwise by the sign of `delta_g`.
pub fn classify(outcomes: &[MitigationOutcome]) -> Result<Vec<MitigationOutcome>> {
    if outcomes.is_empty() {
        return Err(GemError::Config("cannot classify an empty batch".into()));
    }
    let threshold = NO_MITIGATION_FRACTION
        * outcomes
            .iter()
            .map(|o| o.delta_v)
            .fold(f64::NEG_INFINITY, f64::max)
            .abs();
    Ok(outcomes
        .iter()
        .map(|o| {
            let classification = if o.delta_g.abs() < threshold {
                Classification::NoMitigation
            } else if o.delta_g > 0.0 {
                Classification::Positive
            } else {
                Classification::Negative
            };
            MitigationOutcome {
                classification,
                ..*o
            }
        })
        .collect())
}

/// Smallest half-L1 distance between any two columns, in `[0, 1]`.
///
/// This is a proxy for how distinguishable the device's responses to
/// different basis states are: 1 for the identity, 0 when two columns (for
/// example all of them, on a completely random device) coincide.
pub fn column_distinguishability(m: &CalibrationMatrix) -> f64 {
    let dim = m.dim();
    let columns: Vec<Vec<f64>> = (0..dim).map(|j| m.column(j)).collect();
    let mut best = f64::INFINITY;
    for a in 0..dim {
        for b in a + 1..dim {
            let d: f64 = columns[a]
                .iter()
                .zip(&columns[b])
                .map(|(x, y)| (x - y).abs())
                .sum();
            best = best.min(0.5 * d);
        }
    }
    if best.is_finite() {
        best
    } else {
        1.0
    }
}

/// 2-norm condition number `sigma_max / sigma_min`; infinite when singular.
pub fn condition_number(m: &CalibrationMatrix) -> f64 {
    let dim = m.dim();
    let dense = DMatrix::from_fn(dim, dim, |i, j| m.get(i, j));
    let sv = dense.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= f64::EPSILON * max {
        f64::INFINITY
    } else {
        max / min
    }
}
