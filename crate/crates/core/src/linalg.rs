//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Eigenvalues (ascending) and matching eigenvector columns of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Principal square root of a positive semidefinite Hermitian matrix.
/// Slightly negative eigenvalues from rounding are clipped to zero.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let n = m.nrows();
    let mut scaled = vectors.clone();
    for (c, v) in values.iter().enumerate() {
        let s = v.max(0.0).sqrt();
        for r in 0..n {
            scaled[(r, c)] *= s;
        }
    }
    &scaled * vectors.adjoint()
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Complex standard normal with E|z|² = 1.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-random `d × d` unitary (QR of a Ginibre matrix with the R-diagonal
/// phases folded back into Q).
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| complex_normal(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..d {
        let diag = r[(c, c)];
        let phase = if diag.norm() > 0.0 {
            diag / diag.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for row in 0..d {
            q[(row, c)] *= phase;
        }
    }
    q
}

/// Kronecker product.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |r, c| {
        a[(r / br, c / bc)] * b[(r % br, c % bc)]
    })
}

/// Reduced density matrix of subsystem `keep` from a pure state over `dims`
/// (row-major amplitude layout).
pub fn reduced_density(amplitudes: &[Complex64], dims: &[usize], keep: &[usize]) -> CMatrix {
    let kept_dim: usize = keep.iter().map(|&k| dims[k]).product();
    let mut rho = CMatrix::zeros(kept_dim, kept_dim);
    let strides = strides(dims);
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let traced_dim: usize = traced.iter().map(|&k| dims[k]).product();
    let index = |kept_idx: usize, traced_idx: usize| -> usize {
        let mut flat = 0;
        let mut rem = kept_idx;
        for &k in keep.iter().rev() {
            flat += (rem % dims[k]) * strides[k];
            rem /= dims[k];
        }
        let mut rem = traced_idx;
        for &k in traced.iter().rev() {
            flat += (rem % dims[k]) * strides[k];
            rem /= dims[k];
        }
        flat
    };
    for r in 0..kept_dim {
        for c in 0..kept_dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..traced_dim {
                acc += amplitudes[index(r, t)] * amplitudes[index(c, t)].conj();
            }
            rho[(r, c)] = acc;
        }
    }
    rho
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}
