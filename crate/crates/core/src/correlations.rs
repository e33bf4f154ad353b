//! Local, joint and conditional outcome probabilities in the Schmidt bases,
//! and the deviation-from-separability table Δ.

use serde::Serialize;

use crate::schmidt::{SchmidtDecomposition, RANK_TOL};

/// Outcome statistics for Alice measuring in `{|i_A⟩}` and Bob in `{|j_B⟩}`.
///
/// `conditional[i][j] = P(i_A | j_B)` is `None` where `P(j_B) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationTable {
    pub n: usize,
    pub local_a: Vec<f64>,
    pub local_b: Vec<f64>,
    pub joint: Vec<Vec<f64>>,
    pub conditional: Vec<Vec<Option<f64>>>,
    pub delta: Vec<Vec<f64>>,
}

impl CorrelationTable {
    /// Builds the table from an `n × n` joint distribution; the marginals,
    /// conditionals and Δ follow from it. Δ uses `|P(i,j) − P(i)P(j)|`,
    /// which needs no division.
    pub fn from_joint(joint: Vec<Vec<f64>>) -> CorrelationTable {
        let n = joint.len();
        let local_a: Vec<f64> = joint.iter().map(|row| row.iter().sum()).collect();
        let local_b: Vec<f64> = (0..n)
            .map(|j| joint.iter().map(|row| row[j]).sum())
            .collect();
        let conditional = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (local_b[j] > RANK_TOL).then(|| joint[i][j] / local_b[j]))
                    .collect()
            })
            .collect();
        let delta = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (joint[i][j] - local_a[i] * local_b[j]).abs())
                    .collect()
            })
            .collect();
        CorrelationTable {
            n,
            local_a,
            local_b,
            joint,
            conditional,
            delta,
        }
    }

    /// `Σᵢⱼ Δ(i_A, j_B)`.
    pub fn delta_sum(&self) -> f64 {
        self.delta.iter().flatten().sum()
    }

    pub fn max_delta(&self) -> f64 {
        self.delta.iter().flatten().copied().fold(0.0, f64::max)
    }
}

/// The Schmidt-basis table: `P(i_A) = P(i_B) = λᵢ` and `P(i_A, j_B) = δᵢⱼ λⱼ`.
pub fn correlation_table(dec: &SchmidtDecomposition) -> CorrelationTable {
    let lambdas = dec.lambdas();
    let n = lambdas.len();
    let joint = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { lambdas[j] } else { 0.0 })
                .collect()
        })
        .collect();
    let mut table = CorrelationTable::from_joint(joint);
    // marginals of a diagonal table are exactly λ; avoid the summation rounding
    table.local_a = lambdas.to_vec();
    table.local_b = lambdas.to_vec();
    table.conditional = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (lambdas[j] > RANK_TOL).then_some(if i == j { 1.0 } else { 0.0 }))
                .collect()
        })
        .collect();
    table
}

/// True when every Δ is within `tol`, i.e. the joint distribution is the
/// product of its marginals.
pub fn is_factorizable(table: &CorrelationTable, tol: f64) -> bool {
    table.max_delta() <= tol
}
