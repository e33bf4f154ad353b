//! Entanglement measures built from the Δ table.
//!
//! For two qubits, `E₂ = Σᵢⱼ Δ(i_A, j_B) = 4λ(1−λ)`, the squared
//! concurrence. For `N = min(M, M')` Schmidt terms,
//! `E_N = N/(2(N−1)) · Σᵢⱼ Δ(i_A, j_B) = N/(N−1) · (1 − Σᵢ λᵢ²)`, which is
//! the I-concurrence rescaled to `[0, 1]`.

use serde::Serialize;

use crate::convexroof::concurrence_from_factor;
use crate::correlations::CorrelationTable;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::qstate::PureState;
use crate::schmidt::{schmidt_decompose, SchmidtDecomposition};

/// Excursions outside `[0, 1]` up to this size are rounding and get clamped.
pub const RANGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    CorrelationSum,
    ClosedForm,
    ConvexRoof,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntanglementValue {
    pub value: f64,
    pub method: Method,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TangleValue {
    pub value: f64,
}

/// Clamps rounding noise into `[0, 1]`; anything further out is a bug.
pub(crate) fn clamp_unit(value: f64, what: &str) -> Result<f64> {
    if !value.is_finite() || !(-RANGE_TOL..=1.0 + RANGE_TOL).contains(&value) {
        return Err(Error::Consistency(format!(
            "{what} = {value} outside [0, 1]"
        )));
    }
    Ok(value.clamp(0.0, 1.0))
}

/// `N/(2(N−1))`.
pub fn normalization(n: usize) -> f64 {
    n as f64 / (2.0 * (n as f64 - 1.0))
}

/// Sum of the four Δ's of a two-qubit table.
pub fn e2_correlation_sum(table: &CorrelationTable) -> Result<EntanglementValue> {
    if table.n != 2 {
        return Err(Error::WrongDimension(format!(
            "E₂ needs a two-term Schmidt table, got n = {}",
            table.n
        )));
    }
    Ok(EntanglementValue {
        value: clamp_unit(table.delta_sum(), "E2")?,
        method: Method::CorrelationSum,
        n: 2,
    })
}

pub fn en_correlation_sum(table: &CorrelationTable) -> Result<EntanglementValue> {
    if table.n < 2 {
        return Err(Error::WrongDimension(format!(
            "E_N needs N ≥ 2, got N = {}",
            table.n
        )));
    }
    Ok(EntanglementValue {
        value: clamp_unit(normalization(table.n) * table.delta_sum(), "E_N")?,
        method: Method::CorrelationSum,
        n: table.n,
    })
}

pub fn en_closed_form(dec: &SchmidtDecomposition) -> Result<EntanglementValue> {
    let n = dec.n();
    if n < 2 {
        return Err(Error::WrongDimension(format!(
            "E_N needs N ≥ 2, got N = {n}"
        )));
    }
    let sum_sq: f64 = dec.lambdas().iter().map(|l| l * l).sum();
    let value = n as f64 / (n as f64 - 1.0) * (1.0 - sum_sq);
    Ok(EntanglementValue {
        value: clamp_unit(value, "E_N")?,
        method: Method::ClosedForm,
        n,
    })
}

/// Residual tangle `τ = C²_{A(BC)} − C²_{AB} − C²_{AC}` of a three-qubit
/// pure state.
pub fn three_tangle(psi: &PureState) -> Result<TangleValue> {
    if psi.dims() != [2, 2, 2] {
        return Err(Error::WrongDimension(format!(
            "three-tangle needs dims [2, 2, 2], got {:?}",
            psi.dims()
        )));
    }
    let a_bc = en_closed_form(&schmidt_decompose(&psi.split_first()?)?)?.value;
    // ρ_AB = W W† where column c of W holds the amplitudes ψ_{ab,c}; same for ρ_AC
    let amps = psi.amplitudes();
    let w_ab = CMatrix::from_fn(4, 2, |ab, c| amps[2 * ab + c]);
    let w_ac = CMatrix::from_fn(4, 2, |ac, b| amps[4 * (ac / 2) + 2 * b + ac % 2]);
    let c_ab = concurrence_from_factor(&w_ab)?;
    let c_ac = concurrence_from_factor(&w_ac)?;
    let tau = a_bc - c_ab * c_ab - c_ac * c_ac;
    Ok(TangleValue {
        value: clamp_unit(tau, "three-tangle")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convexroof::two_qubit_concurrence_oracle;
    use crate::correlations::correlation_table;
    use crate::linalg;
    use crate::qstate::{validate_density, validate_pure};
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table_of(lambdas: &[f64]) -> CorrelationTable {
        correlation_table(&SchmidtDecomposition::from_lambdas(lambdas).unwrap())
    }

    /// Cayley hyperdeterminant form of the residual tangle, independent of
    /// any reduced density matrix or concurrence computation.
    fn tangle_hyperdeterminant(a: &[Complex64]) -> f64 {
        let d1 = a[0] * a[0] * a[7] * a[7]
            + a[1] * a[1] * a[6] * a[6]
            + a[2] * a[2] * a[5] * a[5]
            + a[4] * a[4] * a[3] * a[3];
        let d2 = a[0] * a[7] * a[3] * a[4]
            + a[0] * a[7] * a[5] * a[2]
            + a[0] * a[7] * a[6] * a[1]
            + a[3] * a[4] * a[5] * a[2]
            + a[3] * a[4] * a[6] * a[1]
            + a[5] * a[2] * a[6] * a[1];
        let d3 = a[0] * a[6] * a[5] * a[3] + a[7] * a[1] * a[2] * a[4];
        4.0 * (d1 - 2.0 * d2 + 4.0 * d3).norm()
    }

    #[test]
    fn e2_examples() {
        assert!((e2_correlation_sum(&table_of(&[0.5, 0.5])).unwrap().value - 1.0).abs() < 1e-12);
        assert_eq!(
            e2_correlation_sum(&table_of(&[1.0, 0.0])).unwrap().value,
            0.0
        );
        assert!((e2_correlation_sum(&table_of(&[0.25, 0.75])).unwrap().value - 0.75).abs() < 1e-12);
        assert!(matches!(
            e2_correlation_sum(&table_of(&[0.5, 0.3, 0.2])),
            Err(Error::WrongDimension(_))
        ));
    }

    #[test]
    fn en_examples() {
        let third = 1.0 / 3.0;
        let v = en_correlation_sum(&table_of(&[third, third, third])).unwrap();
        assert!((v.value - 1.0).abs() < 1e-12);
        assert_eq!(v.method, Method::CorrelationSum);
        assert_eq!(
            en_correlation_sum(&table_of(&[1.0, 0.0, 0.0]))
                .unwrap()
                .value,
            0.0
        );
        let v = en_correlation_sum(&table_of(&[0.5, 0.3, 0.2])).unwrap();
        assert!((v.value - 0.93).abs() < 1e-12);
        assert!(matches!(
            en_correlation_sum(&table_of(&[1.0])),
            Err(Error::WrongDimension(_))
        ));
    }

    #[test]
    fn closed_form_examples() {
        let dec = |l: &[f64]| SchmidtDecomposition::from_lambdas(l).unwrap();
        assert!((en_closed_form(&dec(&[0.5, 0.5])).unwrap().value - 1.0).abs() < 1e-12);
        assert_eq!(en_closed_form(&dec(&[1.0, 0.0])).unwrap().value, 0.0);
        let v = en_closed_form(&dec(&[0.7, 0.3])).unwrap();
        assert!((v.value - 0.84).abs() < 1e-12);
        assert!((v.value - 4.0 * 0.7 * 0.3).abs() < 1e-12);
        assert_eq!(v.method, Method::ClosedForm);
        assert!(matches!(
            en_closed_form(&dec(&[1.0])),
            Err(Error::WrongDimension(_))
        ));
    }

    #[test]
    fn clamp_rejects_large_excursions() {
        assert_eq!(clamp_unit(1.0 + 5e-10, "x").unwrap(), 1.0);
        assert_eq!(clamp_unit(-5e-10, "x").unwrap(), 0.0);
        assert!(clamp_unit(1.01, "x").unwrap_err().is_internal());
        assert!(clamp_unit(f64::NAN, "x").is_err());
    }

    #[test]
    fn tangle_of_named_states() {
        let ghz = PureState::ghz();
        assert!((tangle_hyperdeterminant(ghz.amplitudes()) - 1.0).abs() < 1e-12);
        assert!((three_tangle(&ghz).unwrap().value - 1.0).abs() < 1e-9);

        let w = PureState::w_state();
        assert!(tangle_hyperdeterminant(w.amplitudes()).abs() < 1e-12);
        assert!(three_tangle(&w).unwrap().value.abs() < 1e-9);

        let mut zero = vec![Complex64::new(0.0, 0.0); 8];
        zero[0] = Complex64::new(1.0, 0.0);
        let product = validate_pure(&[2, 2, 2], &zero).unwrap();
        assert!(three_tangle(&product).unwrap().value.abs() < 1e-9);

        assert!(matches!(
            three_tangle(&PureState::epr()),
            Err(Error::WrongDimension(_))
        ));
    }

    #[test]
    fn tangle_matches_hyperdeterminant() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..300 {
            let psi = PureState::random(&[2, 2, 2], &mut rng).unwrap();
            let tau = three_tangle(&psi).unwrap().value;
            assert!((tau - tangle_hyperdeterminant(psi.amplitudes())).abs() < 1e-9);
        }
    }

    #[test]
    fn tangle_from_reduced_density_matrices() {
        // same quantity through explicit partial traces and the ρ-level oracle
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for _ in 0..100 {
            let psi = PureState::random(&[2, 2, 2], &mut rng).unwrap();
            let pair = |keep: [usize; 2]| {
                let rho = linalg::reduced_density(psi.amplitudes(), psi.dims(), &keep);
                two_qubit_concurrence_oracle(&validate_density(&[2, 2], &rho).unwrap())
                    .unwrap()
                    .powi(2)
            };
            let a_bc = en_closed_form(&schmidt_decompose(&psi.split_first().unwrap()).unwrap())
                .unwrap()
                .value;
            let tau = a_bc - pair([0, 1]) - pair([0, 2]);
            assert!((three_tangle(&psi).unwrap().value - tau).abs() < 1e-7);
        }
    }

    #[test]
    fn qubit_measures_agree_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..300 {
            let psi = PureState::random(&[2, 2], &mut rng).unwrap();
            let dec = schmidt_decompose(&psi).unwrap();
            let l = dec.lambdas()[0];
            let e2 = e2_correlation_sum(&correlation_table(&dec)).unwrap().value;
            let en = en_closed_form(&dec).unwrap().value;
            assert!((e2 - 4.0 * l * (1.0 - l)).abs() < 1e-9);
            assert!((en - e2).abs() < 1e-9);
        }
    }

    #[test]
    fn local_unitaries_preserve_en() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..100 {
            let psi = PureState::random(&[3, 3], &mut rng).unwrap();
            let u = [
                linalg::random_unitary(3, &mut rng),
                linalg::random_unitary(3, &mut rng),
            ];
            let a = en_closed_form(&schmidt_decompose(&psi).unwrap())
                .unwrap()
                .value;
            let b = en_closed_form(&schmidt_decompose(&psi.apply_local(&u).unwrap()).unwrap())
                .unwrap()
                .value;
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn extremes() {
        for n in 2..=8 {
            let flat = vec![1.0 / n as f64; n];
            let t = table_of(&flat);
            assert!(en_correlation_sum(&t).unwrap().value >= 1.0 - 1e-9);
            let mut peaked = vec![0.0; n];
            peaked[0] = 1.0;
            assert!(en_correlation_sum(&table_of(&peaked)).unwrap().value <= 1e-9);
        }
    }

    proptest! {
        #[test]
        fn sum_equals_closed_form(
            raw in proptest::collection::vec(0.0f64..1.0, 2..=8)
        ) {
            let s: f64 = raw.iter().sum();
            prop_assume!(s > 1e-6);
            let lambdas: Vec<f64> = raw.iter().map(|x| x / s).collect();
            let dec = SchmidtDecomposition::from_lambdas(&lambdas).unwrap();
            let a = en_correlation_sum(&correlation_table(&dec)).unwrap().value;
            let b = en_closed_form(&dec).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-9);
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }
}
