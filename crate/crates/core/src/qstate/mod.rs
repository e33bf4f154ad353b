//! Pure states and density matrices over a factored Hilbert space.
//!
//! Amplitudes are stored row-major over subsystem indices: for dims
//! `[M, M']` the amplitude of `|i⟩⊗|j⟩` sits at `i·M' + j`, and the same
//! rule extends to three factors.

mod file;

pub use file::{
    parse_record_file, parse_state_file, write_record_file, write_state_file, LoadedState,
    RecordFile, StateData, StateFile,
};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// Tolerance for normalization, Hermiticity and unit trace.
pub const NORM_TOL: f64 = 1e-9;
/// Smallest eigenvalue accepted for a density matrix.
pub const POSITIVITY_TOL: f64 = -1e-9;

/// A single complex coefficient.
pub type ComplexAmplitude = Complex64;

/// Normalized pure state of two or three subsystems.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    dims: Vec<usize>,
    amplitudes: Vec<Complex64>,
}

/// Hermitian, positive semidefinite, unit-trace matrix over two subsystems.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    matrix: CMatrix,
}

fn check_dims(dims: &[usize], allowed: &[usize]) -> Result<usize> {
    if !allowed.contains(&dims.len()) {
        return Err(Error::WrongDimension(format!(
            "expected {:?} subsystems, got {}",
            allowed,
            dims.len()
        )));
    }
    if dims.contains(&0) {
        return Err(Error::WrongDimension("subsystem dimension 0".into()));
    }
    Ok(dims.iter().product())
}

/// Builds a [`PureState`], rejecting malformed input.
///
/// A norm within [`NORM_TOL`] of one is rescaled to unit norm; anything
/// further away is an error. Rescaling is skipped when the norm is already
/// one to within a few ulps, so the operation is idempotent.
pub fn validate_pure(dims: &[usize], amplitudes: &[Complex64]) -> Result<PureState> {
    let total = check_dims(dims, &[2, 3])?;
    if amplitudes.len() != total {
        return Err(Error::DimensionMismatch {
            expected: total,
            got: amplitudes.len(),
        });
    }
    if amplitudes
        .iter()
        .any(|a| !a.re.is_finite() || !a.im.is_finite())
    {
        return Err(Error::NonFinite);
    }
    let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    let deviation = (norm_sqr - 1.0).abs();
    if deviation > NORM_TOL {
        return Err(Error::NotNormalized { deviation });
    }
    let amplitudes = if deviation > 4.0 * f64::EPSILON {
        let scale = norm_sqr.sqrt().recip();
        amplitudes.iter().map(|a| a * scale).collect()
    } else {
        amplitudes.to_vec()
    };
    Ok(PureState {
        dims: dims.to_vec(),
        amplitudes,
    })
}

/// Builds a [`DensityMatrix`], checking shape, Hermiticity, trace and
/// positivity. The stored matrix is the exact Hermitian part of the input.
pub fn validate_density(dims: &[usize], matrix: &CMatrix) -> Result<DensityMatrix> {
    let total = check_dims(dims, &[2])?;
    if matrix.nrows() != total || matrix.ncols() != total {
        return Err(Error::DimensionMismatch {
            expected: total * total,
            got: matrix.nrows() * matrix.ncols(),
        });
    }
    if matrix
        .iter()
        .any(|a| !a.re.is_finite() || !a.im.is_finite())
    {
        return Err(Error::NonFinite);
    }
    let adjoint = matrix.adjoint();
    let deviation = linalg::max_abs_diff(matrix, &adjoint);
    if deviation > NORM_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let hermitian = (matrix + adjoint) * Complex64::new(0.5, 0.0);
    let trace = hermitian.trace().re;
    if (trace - 1.0).abs() > NORM_TOL {
        return Err(Error::TraceNotOne { trace });
    }
    let (values, _) = linalg::hermitian_eigen(&hermitian);
    let min_eigenvalue = values[0];
    if min_eigenvalue < POSITIVITY_TOL {
        return Err(Error::NotPositive { min_eigenvalue });
    }
    Ok(DensityMatrix {
        dims: dims.to_vec(),
        matrix: hermitian,
    })
}

/// `tr(ρ²)`, in `[1/d, 1]`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    let m = &rho.matrix;
    // tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ
    m.iter().map(|z| z.norm_sqr()).sum()
}

impl PureState {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn total_dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// The amplitudes of a bipartite state reshaped as an `M × M'` matrix.
    pub fn amplitude_matrix(&self) -> Result<CMatrix> {
        if self.dims.len() != 2 {
            return Err(Error::WrongDimension(format!(
                "expected a bipartite state, got dims {:?}",
                self.dims
            )));
        }
        let (m, mp) = (self.dims[0], self.dims[1]);
        Ok(DMatrix::from_fn(m, mp, |i, j| self.amplitudes[i * mp + j]))
    }

    /// Regroups the factors of a tripartite state as `first | rest`, giving a
    /// bipartite state with dims `[d0, d1·d2]`.
    pub fn split_first(&self) -> Result<PureState> {
        if self.dims.len() != 3 {
            return Err(Error::WrongDimension(format!(
                "expected three subsystems, got dims {:?}",
                self.dims
            )));
        }
        Ok(PureState {
            dims: vec![self.dims[0], self.dims[1] * self.dims[2]],
            amplitudes: self.amplitudes.clone(),
        })
    }

    /// `|ψ⟩⟨ψ|` for a bipartite state.
    pub fn projector(&self) -> Result<DensityMatrix> {
        check_dims(&self.dims, &[2])?;
        let v = linalg::CVector::from_column_slice(&self.amplitudes);
        Ok(DensityMatrix {
            dims: self.dims.clone(),
            matrix: &v * v.adjoint(),
        })
    }

    /// Applies one unitary per subsystem.
    pub fn apply_local(&self, unitaries: &[CMatrix]) -> Result<PureState> {
        if unitaries.len() != self.dims.len()
            || unitaries
                .iter()
                .zip(&self.dims)
                .any(|(u, &d)| u.nrows() != d || u.ncols() != d)
        {
            return Err(Error::WrongDimension(
                "one square unitary per subsystem required".into(),
            ));
        }
        let full = unitaries[1..]
            .iter()
            .fold(unitaries[0].clone(), |acc, u| linalg::kron(&acc, u));
        let v = linalg::CVector::from_column_slice(&self.amplitudes);
        let out = full * v;
        validate_pure(&self.dims, out.as_slice())
    }

    /// `Σᵢ √λᵢ |i⟩⊗|i⟩` on dims `[N, N]`.
    pub fn from_schmidt_coefficients(lambdas: &[f64]) -> Result<PureState> {
        let n = lambdas.len();
        if lambdas.iter().any(|&l| !l.is_finite() || l < 0.0) {
            return Err(Error::InvalidArgument(
                "Schmidt coefficients must be finite and non-negative".into(),
            ));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); n * n];
        for (i, &l) in lambdas.iter().enumerate() {
            amps[i * n + i] = Complex64::new(l.sqrt(), 0.0);
        }
        validate_pure(&[n, n], &amps)
    }

    /// `(|VV⟩ − |HH⟩)/√2` with V ↦ index 0 and H ↦ index 1.
    pub fn epr() -> PureState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let amps = [h, 0.0, 0.0, -h].map(|x| Complex64::new(x, 0.0));
        validate_pure(&[2, 2], &amps).expect("EPR state is normalized")
    }

    /// `(|000⟩ + |111⟩)/√2`.
    pub fn ghz() -> PureState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![Complex64::new(0.0, 0.0); 8];
        amps[0] = Complex64::new(h, 0.0);
        amps[7] = Complex64::new(h, 0.0);
        validate_pure(&[2, 2, 2], &amps).expect("GHZ state is normalized")
    }

    /// `(|001⟩ + |010⟩ + |100⟩)/√3`.
    pub fn w_state() -> PureState {
        let t = 1.0 / 3f64.sqrt();
        let mut amps = vec![Complex64::new(0.0, 0.0); 8];
        for idx in [1, 2, 4] {
            amps[idx] = Complex64::new(t, 0.0);
        }
        validate_pure(&[2, 2, 2], &amps).expect("W state is normalized")
    }

    /// Haar-random pure state (normalized complex Gaussian amplitudes).
    pub fn random<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<PureState> {
        let total = check_dims(dims, &[2, 3])?;
        let raw: Vec<Complex64> = (0..total).map(|_| linalg::complex_normal(rng)).collect();
        let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let amps: Vec<Complex64> = raw.iter().map(|a| a / norm).collect();
        validate_pure(dims, &amps)
    }

    /// Tensor product of independent Haar-random single-party states.
    pub fn random_product<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<PureState> {
        check_dims(dims, &[2, 3])?;
        let factors: Vec<Vec<Complex64>> = dims
            .iter()
            .map(|&d| {
                let v: Vec<Complex64> = (0..d).map(|_| linalg::complex_normal(rng)).collect();
                let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                v.into_iter().map(|a| a / n).collect()
            })
            .collect();
        let amps = factors[1..].iter().fold(factors[0].clone(), |acc, f| {
            acc.iter()
                .flat_map(|a| f.iter().map(move |b| a * b))
                .collect()
        });
        validate_pure(dims, &amps)
    }
}

impl DensityMatrix {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn total_dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `I/d` over the given dims.
    pub fn maximally_mixed(dims: &[usize]) -> Result<DensityMatrix> {
        let d = check_dims(dims, &[2])?;
        let m = CMatrix::identity(d, d) * Complex64::new(1.0 / d as f64, 0.0);
        validate_density(dims, &m)
    }

    /// `Σ pᵢ |ψᵢ⟩⟨ψᵢ|`; weights must be non-negative and sum to one.
    pub fn mixture(weights: &[f64], states: &[PureState]) -> Result<DensityMatrix> {
        if weights.len() != states.len() || states.is_empty() {
            return Err(Error::InvalidArgument(
                "one weight per state, at least one state".into(),
            ));
        }
        let dims = states[0].dims().to_vec();
        let d = states[0].total_dim();
        let mut m = CMatrix::zeros(d, d);
        for (&p, s) in weights.iter().zip(states) {
            if s.dims() != dims.as_slice() {
                return Err(Error::WrongDimension("mixed dims in ensemble".into()));
            }
            m += s.projector()?.matrix * Complex64::new(p, 0.0);
        }
        validate_density(&dims, &m)
    }

    /// Werner state `p·|Φ⁺⟩⟨Φ⁺| + (1−p)·I/4`.
    pub fn werner(p: f64) -> Result<DensityMatrix> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi = validate_pure(&[2, 2], &[h, 0.0, 0.0, h].map(|x| Complex64::new(x, 0.0)))?;
        let m = phi.projector()?.matrix * Complex64::new(p, 0.0)
            + CMatrix::identity(4, 4) * Complex64::new((1.0 - p) / 4.0, 0.0);
        validate_density(&[2, 2], &m)
    }

    /// The dominant eigenvector when `ρ` is pure to within [`NORM_TOL`].
    pub fn as_pure(&self) -> Option<PureState> {
        if (purity(self) - 1.0).abs() > NORM_TOL {
            return None;
        }
        let (values, vectors) = linalg::hermitian_eigen(&self.matrix);
        let top = values.len() - 1;
        let col = vectors.column(top);
        // fix global phase: largest entry real-positive
        let (_, pivot) =
            col.iter()
                .enumerate()
                .fold((0.0, Complex64::new(1.0, 0.0)), |(best, z), (_, a)| {
                    if a.norm() > best {
                        (a.norm(), *a)
                    } else {
                        (best, z)
                    }
                });
        let phase = pivot.conj() / pivot.norm();
        let amps: Vec<Complex64> = col.iter().map(|a| a * phase).collect();
        validate_pure(&self.dims, &amps).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn epr_state_is_valid() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = validate_pure(&[2, 2], &[c(h), c(0.0), c(0.0), c(-h)]).unwrap();
        assert_eq!(psi, PureState::epr());
    }

    #[test]
    fn basis_state_is_valid() {
        let psi = validate_pure(&[2, 2], &[c(1.0), c(0.0), c(0.0), c(0.0)]).unwrap();
        assert_eq!(psi.amplitudes()[0], c(1.0));
    }

    #[test]
    fn unnormalized_rejected() {
        let err = validate_pure(&[2, 2], &[c(1.0), c(0.0), c(0.0), c(1.0)]).unwrap_err();
        assert!(matches!(err, Error::NotNormalized { .. }));
    }

    #[test]
    fn length_and_finiteness_checked() {
        assert_eq!(
            validate_pure(&[2, 2], &[c(1.0)]).unwrap_err(),
            Error::DimensionMismatch {
                expected: 4,
                got: 1
            }
        );
        assert_eq!(
            validate_pure(&[2, 2], &[c(f64::NAN), c(0.0), c(0.0), c(0.0)]).unwrap_err(),
            Error::NonFinite
        );
        assert!(matches!(
            validate_pure(&[4], &[c(1.0), c(0.0), c(0.0), c(0.0)]),
            Err(Error::WrongDimension(_))
        ));
    }

    #[test]
    fn near_normalized_is_rescaled_exactly_once() {
        let a = (0.5f64 + 2e-10).sqrt();
        let psi = validate_pure(&[2, 2], &[c(a), c(0.0), c(0.0), c(a)]).unwrap();
        let norm: f64 = psi.amplitudes().iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 4.0 * f64::EPSILON);
        let again = validate_pure(psi.dims(), psi.amplitudes()).unwrap();
        assert_eq!(again, psi);
    }

    #[test]
    fn validate_pure_idempotent_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let psi = PureState::random(&[3, 4], &mut rng).unwrap();
            let again = validate_pure(psi.dims(), psi.amplitudes()).unwrap();
            assert_eq!(again, psi);
        }
    }

    #[test]
    fn density_examples() {
        let mixed = DensityMatrix::maximally_mixed(&[2, 2]).unwrap();
        assert!((purity(&mixed) - 0.25).abs() < 1e-15);

        let proj = PureState::epr().projector().unwrap();
        let rho = validate_density(&[2, 2], proj.matrix()).unwrap();
        assert!((purity(&rho) - 1.0).abs() < 1e-12);

        let bad = CMatrix::from_diagonal(&linalg::CVector::from_vec(vec![
            c(0.6),
            c(0.3),
            c(0.2),
            c(-0.1),
        ]));
        assert!(matches!(
            validate_density(&[2, 2], &bad),
            Err(Error::NotPositive { min_eigenvalue }) if (min_eigenvalue + 0.1).abs() < 1e-12
        ));
    }

    #[test]
    fn density_rejections() {
        let mut m = CMatrix::identity(4, 4) * c(0.25);
        m[(0, 1)] = Complex64::new(0.0, 0.1);
        assert!(matches!(
            validate_density(&[2, 2], &m),
            Err(Error::NotHermitian { .. })
        ));
        let m = CMatrix::identity(4, 4) * c(0.3);
        assert!(matches!(
            validate_density(&[2, 2], &m),
            Err(Error::TraceNotOne { .. })
        ));
        let m = CMatrix::identity(3, 3) * c(1.0 / 3.0);
        assert!(matches!(
            validate_density(&[2, 2], &m),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            validate_density(&[2, 2, 2], &CMatrix::identity(8, 8)),
            Err(Error::WrongDimension(_))
        ));
    }

    #[test]
    fn purity_of_classical_mixture() {
        // oracle: ρ = diag(0.5, 0, 0, 0.5); tr ρ² = 0.25 + 0.25
        let rho = DensityMatrix::mixture(
            &[0.5, 0.5],
            &[
                validate_pure(&[2, 2], &[c(1.0), c(0.0), c(0.0), c(0.0)]).unwrap(),
                validate_pure(&[2, 2], &[c(0.0), c(0.0), c(0.0), c(1.0)]).unwrap(),
            ],
        )
        .unwrap();
        let oracle: f64 = (0..4)
            .map(|i| {
                (0..4)
                    .map(|k| (rho.matrix()[(i, k)] * rho.matrix()[(k, i)]).re)
                    .sum::<f64>()
            })
            .sum();
        assert!((purity(&rho) - oracle).abs() < 1e-15);
        assert!((purity(&rho) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn purity_one_iff_single_unit_eigenvalue() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in 0..50 {
            let a = PureState::random(&[2, 3], &mut rng).unwrap();
            let b = PureState::random(&[2, 3], &mut rng).unwrap();
            let w = if k % 2 == 0 { 1.0 } else { 0.7 };
            let rho = DensityMatrix::mixture(&[w, 1.0 - w], &[a, b]).unwrap();
            let (values, _) = linalg::hermitian_eigen(rho.matrix());
            let has_unit = values.iter().any(|v| (v - 1.0).abs() < 1e-9);
            assert_eq!((purity(&rho) - 1.0).abs() < 1e-9, has_unit);
            assert_eq!(rho.as_pure().is_some(), has_unit);
        }
    }

    #[test]
    fn as_pure_recovers_state_up_to_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let psi = PureState::random(&[2, 2], &mut rng).unwrap();
        let back = psi.projector().unwrap().as_pure().unwrap();
        let overlap: Complex64 = psi
            .amplitudes()
            .iter()
            .zip(back.amplitudes())
            .map(|(a, b)| a.conj() * b)
            .sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_product_is_a_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let psi = PureState::random_product(&[2, 3], &mut rng).unwrap();
        let m = psi.amplitude_matrix().unwrap();
        let s = m.singular_values();
        assert!(s.iter().filter(|&&x| x > 1e-10).count() == 1);
    }
}
