//! Mixed-state extension of the pure-state measures by convex roof:
//! the minimum, over pure-state ensembles `{pᵢ, |ψᵢ⟩}` realizing `ρ`, of
//! `Σᵢ pᵢ E(ψᵢ)`.
//!
//! Every ensemble of `m` states is reached from the eigen-ensemble by a
//! left-unitary `m × r` mixing matrix `U`:
//! `|ψ̃ᵢ⟩ = Σⱼ Uᵢⱼ √μⱼ |vⱼ⟩`, `pᵢ = ⟨ψ̃ᵢ|ψ̃ᵢ⟩`. `U` is parametrized as the first
//! `r` columns of a product of complex Givens rotations and the average is
//! minimized by Hooke–Jeeves pattern search from several starting points.
//! Restart 0 always starts at the eigen-ensemble, so the result never
//! exceeds the eigen-ensemble average.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::correlations::correlation_table;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::measures::{clamp_unit, e2_correlation_sum, en_closed_form};
use crate::qstate::{validate_pure, DensityMatrix, PureState};
use crate::schmidt::schmidt_decompose;

/// Eigenvalues of `ρ` at or below this are treated as rounding noise.
const EIGEN_TOL: f64 = 1e-14;
/// Ensemble members lighter than this are dropped from reported decompositions.
const WEIGHT_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RoofMeasure {
    E2,
    En,
}

impl std::str::FromStr for RoofMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "e2" => Ok(RoofMeasure::E2),
            "en" => Ok(RoofMeasure::En),
            other => Err(Error::InvalidArgument(format!(
                "unknown measure \"{other}\" (expected e2 or en)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoofOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Ensemble size; `None` means `rank(ρ)²`.
    pub ensemble_cap: Option<usize>,
    pub conv_tol: f64,
    pub patience: usize,
    pub max_iterations: usize,
}

impl Default for RoofOptions {
    fn default() -> Self {
        RoofOptions {
            restarts: 8,
            seed: 0,
            ensemble_cap: None,
            conv_tol: 1e-7,
            patience: 25,
            max_iterations: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub weights: Vec<f64>,
    pub states: Vec<PureState>,
}

impl Decomposition {
    /// `Σᵢ pᵢ |ψᵢ⟩⟨ψᵢ|`.
    pub fn reconstruct(&self) -> CMatrix {
        let d = self.states.first().map_or(0, PureState::total_dim);
        let mut m = CMatrix::zeros(d, d);
        for (p, s) in self.weights.iter().zip(&self.states) {
            let v = linalg::CVector::from_column_slice(s.amplitudes());
            m += (&v * v.adjoint()) * Complex64::new(*p, 0.0);
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoofResult {
    pub value: f64,
    pub decomposition: Decomposition,
    pub iterations: usize,
    pub converged: bool,
    pub restarts_used: usize,
    /// Best objective after each iteration of the winning restart.
    pub trace: Vec<f64>,
}

/// Concurrence of a two-qubit density matrix:
/// `C = max(0, s₁ − s₂ − s₃ − s₄)` with `sᵢ` the descending square roots of
/// the eigenvalues of `ρ (σy⊗σy) ρ* (σy⊗σy)`.
///
/// With `ρ = W W†`, those square roots are the singular values of the
/// symmetric matrix `Wᵀ (σy⊗σy) W`; `W` is built from the eigenpairs of `ρ`.
pub fn two_qubit_concurrence_oracle(rho: &DensityMatrix) -> Result<f64> {
    if rho.dims() != [2, 2] {
        return Err(Error::WrongDimension(format!(
            "two-qubit concurrence needs dims [2, 2], got {:?}",
            rho.dims()
        )));
    }
    let (values, vectors) = linalg::hermitian_eigen(rho.matrix());
    let kept: Vec<usize> = (0..4).filter(|&k| values[k] > EIGEN_TOL).collect();
    let factor = CMatrix::from_fn(4, kept.len(), |r, c| {
        vectors[(r, kept[c])] * values[kept[c]].sqrt()
    });
    concurrence_from_factor(&factor)
}

/// Concurrence of `ρ = W W†` for any `4 × k` factor `W`.
pub(crate) fn concurrence_from_factor(factor: &CMatrix) -> Result<f64> {
    // σy⊗σy is real: antidiag(-1, 1, 1, -1)
    let flip_sign = [-1.0, 1.0, 1.0, -1.0];
    let flipped = CMatrix::from_fn(4, factor.ncols(), |r, c| factor[(3 - r, c)] * flip_sign[r]);
    let tau = factor.transpose() * flipped;
    let mut s: Vec<f64> = tau.singular_values().iter().copied().collect();
    s.resize(4.max(s.len()), 0.0);
    s.sort_by(|a, b| b.total_cmp(a));
    let c = (s[0] - s[1] - s[2] - s[3]).max(0.0);
    clamp_unit(c, "concurrence")
}

/// Objective over the mixing-matrix parameters.
struct RoofProblem {
    /// Rows are `√μⱼ |vⱼ⟩`.
    scaled_eigvecs: Vec<Vec<Complex64>>,
    dims: [usize; 2],
    schmidt_n: usize,
    m: usize,
    pairs: Vec<(usize, usize)>,
}

impl RoofProblem {
    fn new(rho: &DensityMatrix, cap: Option<usize>) -> RoofProblem {
        let (values, vectors) = linalg::hermitian_eigen(rho.matrix());
        let d = rho.total_dim();
        let scaled_eigvecs: Vec<Vec<Complex64>> = values
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, &mu)| mu > EIGEN_TOL)
            .map(|(k, &mu)| (0..d).map(|i| vectors[(i, k)] * mu.sqrt()).collect())
            .collect();
        let r = scaled_eigvecs.len();
        let m = cap.unwrap_or(r * r).max(r);
        let pairs = (0..m)
            .flat_map(|k| (k + 1..m).map(move |l| (k, l)))
            .collect();
        let dims = [rho.dims()[0], rho.dims()[1]];
        RoofProblem {
            scaled_eigvecs,
            dims,
            schmidt_n: dims[0].min(dims[1]),
            m,
            pairs,
        }
    }

    fn rank(&self) -> usize {
        self.scaled_eigvecs.len()
    }

    fn n_params(&self) -> usize {
        2 * self.pairs.len()
    }

    /// First `r` columns of `G₁ G₂ ⋯ G_K`, each `G` a rotation by angle θ with
    /// phase φ in the (k, l) plane.
    fn mixing_matrix(&self, params: &[f64]) -> Vec<Vec<Complex64>> {
        let r = self.rank();
        let mut u: Vec<Vec<Complex64>> = (0..self.m)
            .map(|i| {
                (0..r)
                    .map(|j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
                    .collect()
            })
            .collect();
        for (idx, &(k, l)) in self.pairs.iter().enumerate().rev() {
            let (theta, phi) = (params[2 * idx], params[2 * idx + 1]);
            let (s, c) = theta.sin_cos();
            let e = Complex64::from_polar(1.0, phi);
            for j in 0..r {
                let (a, b) = (u[k][j], u[l][j]);
                u[k][j] = a * c - e.conj() * b * s;
                u[l][j] = e * a * s + b * c;
            }
        }
        u
    }

    /// Unnormalized ensemble members `|ψ̃ᵢ⟩`.
    fn ensemble(&self, params: &[f64]) -> Vec<Vec<Complex64>> {
        let u = self.mixing_matrix(params);
        let d = self.dims[0] * self.dims[1];
        u.iter()
            .map(|row| {
                let mut psi = vec![Complex64::new(0.0, 0.0); d];
                for (coef, vec) in row.iter().zip(&self.scaled_eigvecs) {
                    for (out, v) in psi.iter_mut().zip(vec) {
                        *out += coef * v;
                    }
                }
                psi
            })
            .collect()
    }

    /// `p · E_N(ψ̃/√p) = N/(N−1) · (p − tr(ρ̃_A²)/p)`.
    fn weighted_measure(&self, psi: &[Complex64]) -> f64 {
        let [da, db] = self.dims;
        let p: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        if p < WEIGHT_TOL {
            return 0.0;
        }
        let mut tr_sq = 0.0;
        for i in 0..da {
            for k in 0..da {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..db {
                    acc += psi[i * db + j] * psi[k * db + j].conj();
                }
                tr_sq += acc.norm_sqr();
            }
        }
        let n = self.schmidt_n as f64;
        n / (n - 1.0) * (p - tr_sq / p)
    }

    fn objective(&self, params: &[f64]) -> f64 {
        self.ensemble(params)
            .iter()
            .map(|psi| self.weighted_measure(psi))
            .sum()
    }
}

struct LocalRun {
    params: Vec<f64>,
    value: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

/// Hooke–Jeeves: coordinate exploration with per-coordinate steps, followed
/// by a pattern move along the last successful displacement.
fn pattern_search(problem: &RoofProblem, start: Vec<f64>, opts: &RoofOptions) -> LocalRun {
    const MIN_STEP: f64 = 1e-10;
    let n = start.len();
    let mut x = start;
    let mut fx = problem.objective(&x);
    let mut steps = vec![0.4; n];
    let mut trace = Vec::new();
    let mut converged = n == 0;
    let mut iterations = 0;

    while !converged && iterations < opts.max_iterations {
        iterations += 1;
        let base = x.clone();
        for k in 0..n {
            let orig = x[k];
            let mut improved = false;
            for dir in [1.0, -1.0] {
                x[k] = orig + dir * steps[k];
                let f = problem.objective(&x);
                if f < fx {
                    fx = f;
                    improved = true;
                    break;
                }
            }
            if improved {
                steps[k] *= 1.5;
            } else {
                x[k] = orig;
                steps[k] *= 0.5;
            }
        }
        let moved = x.iter().zip(&base).any(|(a, b)| a != b);
        if moved {
            let jump: Vec<f64> = x.iter().zip(&base).map(|(a, b)| 2.0 * a - b).collect();
            let f = problem.objective(&jump);
            if f < fx {
                x = jump;
                fx = f;
            }
        }
        debug_assert!(trace.last().is_none_or(|&prev: &f64| fx <= prev));
        trace.push(fx);

        if trace.len() > opts.patience {
            let earlier = trace[trace.len() - 1 - opts.patience];
            if earlier - fx < opts.conv_tol {
                converged = true;
            }
        }
        if steps.iter().all(|&s| s < MIN_STEP) {
            converged = true;
        }
    }
    LocalRun {
        params: x,
        value: fx,
        iterations,
        converged,
        trace,
    }
}

fn pure_measure(psi: &PureState, measure: RoofMeasure) -> Result<f64> {
    let dec = schmidt_decompose(psi)?;
    match measure {
        RoofMeasure::E2 => Ok(e2_correlation_sum(&correlation_table(&dec))?.value),
        RoofMeasure::En => Ok(en_closed_form(&dec)?.value),
    }
}

/// Minimizes the ensemble average of `measure` over decompositions of `rho`.
///
/// Restarts run in parallel; restart `k` draws its starting point from the
/// ChaCha stream `k` keyed by `opts.seed`, and ties between restarts go to
/// the lowest index, so the result does not depend on the thread count.
pub fn convex_roof(
    rho: &DensityMatrix,
    measure: RoofMeasure,
    opts: &RoofOptions,
) -> Result<RoofResult> {
    match (measure, rho.dims()) {
        (RoofMeasure::E2, [2, 2]) | (RoofMeasure::En, [2, 2]) | (RoofMeasure::En, [3, 3]) => {}
        (RoofMeasure::E2, dims) => {
            return Err(Error::WrongDimension(format!(
                "e2 roof needs dims [2, 2], got {dims:?}"
            )))
        }
        (RoofMeasure::En, dims) => {
            return Err(Error::WrongDimension(format!(
                "en roof is available for dims [2, 2] and [3, 3], got {dims:?}"
            )))
        }
    }
    if opts.restarts == 0 {
        return Err(Error::InvalidArgument(
            "at least one restart required".into(),
        ));
    }
    let problem = RoofProblem::new(rho, opts.ensemble_cap);
    let n_params = problem.n_params();
    let restarts = if n_params == 0 { 1 } else { opts.restarts };

    let runs: Vec<LocalRun> = (0..restarts)
        .into_par_iter()
        .map(|k| {
            let start = if k == 0 {
                vec![0.0; n_params]
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(k as u64);
                (0..n_params)
                    .map(|i| {
                        if i % 2 == 0 {
                            rng.random_range(0.0..std::f64::consts::FRAC_PI_2)
                        } else {
                            rng.random_range(0.0..std::f64::consts::TAU)
                        }
                    })
                    .collect()
            };
            pattern_search(&problem, start, opts)
        })
        .collect();

    let best = runs
        .into_iter()
        .reduce(|a, b| if b.value < a.value { b } else { a })
        .expect("at least one restart");

    let mut weights = Vec::new();
    let mut states = Vec::new();
    for psi in problem.ensemble(&best.params) {
        let p: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        if p < WEIGHT_TOL {
            continue;
        }
        let scale = p.sqrt().recip();
        let normalized: Vec<Complex64> = psi.iter().map(|a| a * scale).collect();
        states.push(validate_pure(rho.dims(), &normalized)?);
        weights.push(p);
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let mut value = 0.0;
    for (p, s) in weights.iter().zip(&states) {
        value += p * pure_measure(s, measure)?;
    }
    if (value - best.value).abs() > 1e-8 {
        return Err(Error::Consistency(format!(
            "roof objective {} disagrees with its decomposition average {}",
            best.value, value
        )));
    }

    Ok(RoofResult {
        value: clamp_unit(value, "convex roof")?,
        decomposition: Decomposition { weights, states },
        iterations: best.iterations,
        converged: best.converged,
        restarts_used: restarts,
        trace: best.trace,
    })
}

/// Average measure of the eigen-ensemble of `ρ`; an upper bound for the roof.
pub fn eigen_ensemble_average(rho: &DensityMatrix, measure: RoofMeasure) -> Result<f64> {
    let problem = RoofProblem::new(rho, Some(0));
    let mut total = 0.0;
    for psi in problem.ensemble(&vec![0.0; problem.n_params()]) {
        let p: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        let scale = p.sqrt().recip();
        let normalized: Vec<Complex64> = psi.iter().map(|a| a * scale).collect();
        total += p * pure_measure(&validate_pure(rho.dims(), &normalized)?, measure)?;
    }
    Ok(total)
}
