//! Schmidt decomposition of bipartite pure states.
//!
//! `|ψ⟩ = Σᵢ √λᵢ |i_A⟩⊗|i_B⟩` with `N = min(M, M')` terms. The λᵢ are the
//! squared singular values of the `M × M'` amplitude matrix.
//!
//! When some λᵢ coincide the local bases are not unique; the bases returned
//! here are one valid choice. Everything computed downstream depends only on
//! the multiset of λᵢ.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::qstate::PureState;

/// Schmidt coefficients at or below this are treated as zero.
pub const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtDecomposition {
    lambdas: Vec<f64>,
    basis_a: CMatrix,
    basis_b: CMatrix,
}

/// Number of Schmidt coefficients above [`RANK_TOL`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SchmidtRank(pub usize);

impl SchmidtRank {
    pub fn is_separable(self) -> bool {
        self.0 == 1
    }
}

impl SchmidtDecomposition {
    /// Coefficients in descending order.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// `N = min(M, M')`.
    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    /// `M × N`; column `i` is `|i_A⟩`.
    pub fn basis_a(&self) -> &CMatrix {
        &self.basis_a
    }

    /// `M' × N`; column `i` is `|i_B⟩`.
    pub fn basis_b(&self) -> &CMatrix {
        &self.basis_b
    }

    /// Builds a decomposition directly from coefficients, with computational
    /// bases on both sides. Coefficients are sorted and must sum to one.
    pub fn from_lambdas(lambdas: &[f64]) -> Result<SchmidtDecomposition> {
        if lambdas.is_empty() || lambdas.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::InvalidArgument(
                "Schmidt coefficients must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = lambdas.iter().sum();
        if (sum - 1.0).abs() > crate::qstate::NORM_TOL {
            return Err(Error::NotNormalized {
                deviation: (sum - 1.0).abs(),
            });
        }
        let mut sorted = lambdas.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let n = sorted.len();
        Ok(SchmidtDecomposition {
            lambdas: sorted,
            basis_a: CMatrix::identity(n, n),
            basis_b: CMatrix::identity(n, n),
        })
    }

    /// `Σᵢ √λᵢ |i_A⟩⊗|i_B⟩` as a row-major amplitude vector over `M·M'`.
    pub fn reconstruct(&self) -> Vec<Complex64> {
        let (m, mp) = (self.basis_a.nrows(), self.basis_b.nrows());
        let mut amps = vec![Complex64::new(0.0, 0.0); m * mp];
        for (k, &l) in self.lambdas.iter().enumerate() {
            let s = l.sqrt();
            for i in 0..m {
                let a = self.basis_a[(i, k)] * s;
                for j in 0..mp {
                    amps[i * mp + j] += a * self.basis_b[(j, k)];
                }
            }
        }
        amps
    }
}

/// Schmidt decomposition of a two-party pure state.
pub fn schmidt_decompose(psi: &PureState) -> Result<SchmidtDecomposition> {
    let amp = psi.amplitude_matrix()?;
    let (m, mp) = amp.shape();
    let n = m.min(mp);
    let svd = amp.svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut lambdas: Vec<f64> = order
        .iter()
        .map(|&k| svd.singular_values[k].powi(2))
        .collect();
    let total: f64 = lambdas.iter().sum();
    for l in &mut lambdas {
        *l /= total;
    }

    // amp = U Σ V†, so ψ_ij = Σ_k s_k U_ik (V†)_kj: basis_b column k is row k of V†
    let mut basis_a = CMatrix::from_fn(m, n, |i, c| u[(i, order[c])]);
    let mut basis_b = CMatrix::from_fn(mp, n, |j, c| v_t[(order[c], j)]);

    for c in 0..n {
        let pivot = basis_a
            .column(c)
            .iter()
            .copied()
            .max_by(|x, y| x.norm().total_cmp(&y.norm()))
            .unwrap_or(Complex64::new(1.0, 0.0));
        if pivot.norm() == 0.0 {
            continue;
        }
        let phase = pivot / pivot.norm();
        for i in 0..m {
            basis_a[(i, c)] *= phase.conj();
        }
        for j in 0..mp {
            basis_b[(j, c)] *= phase;
        }
    }

    Ok(SchmidtDecomposition {
        lambdas,
        basis_a,
        basis_b,
    })
}

pub fn schmidt_rank(dec: &SchmidtDecomposition) -> SchmidtRank {
    let r = dec.lambdas.iter().filter(|&&l| l > RANK_TOL).count();
    SchmidtRank(r.max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{self, random_unitary};
    use crate::qstate::validate_pure;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn max_dev_up_to_phase(a: &[Complex64], b: &[Complex64]) -> f64 {
        let overlap: Complex64 = a.iter().zip(b).map(|(x, y)| y.conj() * x).sum();
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            c(1.0)
        };
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y * phase).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn epr_has_equal_coefficients() {
        let dec = schmidt_decompose(&PureState::epr()).unwrap();
        assert!((dec.lambdas()[0] - 0.5).abs() < 1e-12);
        assert!((dec.lambdas()[1] - 0.5).abs() < 1e-12);
        assert_eq!(schmidt_rank(&dec), SchmidtRank(2));
    }

    #[test]
    fn product_state_has_rank_one() {
        // |V⟩⊗|H⟩
        let psi = validate_pure(&[2, 2], &[c(0.0), c(1.0), c(0.0), c(0.0)]).unwrap();
        let dec = schmidt_decompose(&psi).unwrap();
        assert!((dec.lambdas()[0] - 1.0).abs() < 1e-12);
        assert!(dec.lambdas()[1].abs() < 1e-12);
        assert_eq!(schmidt_rank(&dec), SchmidtRank(1));
    }

    #[test]
    fn rectangular_state() {
        // √0.7|0,0⟩ + √0.3|1,2⟩; oracle: the reduced state of A is diag(0.7, 0.3)
        let mut amps = vec![c(0.0); 6];
        amps[0] = c(0.7f64.sqrt());
        amps[5] = c(0.3f64.sqrt());
        let psi = validate_pure(&[2, 3], &amps).unwrap();
        let rho_a = linalg::reduced_density(psi.amplitudes(), &[2, 3], &[0]);
        let (oracle, _) = linalg::hermitian_eigen(&rho_a);
        let dec = schmidt_decompose(&psi).unwrap();
        assert_eq!(dec.n(), 2);
        assert!((dec.lambdas()[0] - oracle[1]).abs() < 1e-12);
        assert!((dec.lambdas()[1] - oracle[0]).abs() < 1e-12);
        assert!((dec.lambdas()[0] - 0.7).abs() < 1e-12);
        assert!((dec.lambdas()[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn rank_tolerance() {
        let dec = SchmidtDecomposition::from_lambdas(&[0.5, 0.5]).unwrap();
        assert_eq!(schmidt_rank(&dec).0, 2);
        let dec = SchmidtDecomposition::from_lambdas(&[1.0, 0.0]).unwrap();
        assert_eq!(schmidt_rank(&dec).0, 1);
        let dec = SchmidtDecomposition::from_lambdas(&[1.0 - 1e-14, 1e-14]).unwrap();
        assert_eq!(schmidt_rank(&dec).0, 1);
    }

    #[test]
    fn random_states_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let shapes = [[2, 2], [2, 3], [3, 2], [4, 4], [3, 5], [5, 3], [1, 4]];
        for k in 0..1000 {
            let dims = shapes[k % shapes.len()];
            let psi = PureState::random(&dims, &mut rng).unwrap();
            let dec = schmidt_decompose(&psi).unwrap();
            let sum: f64 = dec.lambdas().iter().sum();
            assert!((sum - 1.0).abs() <= 1e-9);
            assert!(dec.lambdas().windows(2).all(|w| w[0] >= w[1]));
            assert!(max_dev_up_to_phase(&dec.reconstruct(), psi.amplitudes()) <= 1e-9);
            let n = dec.n();
            let id = CMatrix::identity(n, n);
            assert!(linalg::max_abs_diff(&(dec.basis_a().adjoint() * dec.basis_a()), &id) < 1e-9);
            assert!(linalg::max_abs_diff(&(dec.basis_b().adjoint() * dec.basis_b()), &id) < 1e-9);
        }
    }

    #[test]
    fn rank_deficient_bases_stay_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let psi = PureState::random_product(&[4, 3], &mut rng).unwrap();
            let dec = schmidt_decompose(&psi).unwrap();
            assert!(schmidt_rank(&dec).is_separable());
            let id = CMatrix::identity(3, 3);
            assert!(linalg::max_abs_diff(&(dec.basis_a().adjoint() * dec.basis_a()), &id) < 1e-9);
            assert!(linalg::max_abs_diff(&(dec.basis_b().adjoint() * dec.basis_b()), &id) < 1e-9);
        }
    }

    #[test]
    fn largest_basis_a_entry_is_real_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let psi = PureState::random(&[3, 3], &mut rng).unwrap();
        let dec = schmidt_decompose(&psi).unwrap();
        for col in dec.basis_a().column_iter() {
            let pivot = col
                .iter()
                .max_by(|x, y| x.norm().total_cmp(&y.norm()))
                .unwrap();
            assert!(pivot.im.abs() < 1e-15 && pivot.re > 0.0);
        }
    }

    #[test]
    fn lambdas_invariant_under_local_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            let psi = PureState::random(&[3, 4], &mut rng).unwrap();
            let ua = random_unitary(3, &mut rng);
            let ub = random_unitary(4, &mut rng);
            let moved = psi.apply_local(&[ua, ub]).unwrap();
            let l0 = schmidt_decompose(&psi).unwrap();
            let l1 = schmidt_decompose(&moved).unwrap();
            for (a, b) in l0.lambdas().iter().zip(l1.lambdas()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn tripartite_input_rejected() {
        assert!(matches!(
            schmidt_decompose(&PureState::ghz()),
            Err(Error::WrongDimension(_))
        ));
    }
}
