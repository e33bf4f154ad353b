//! Joint polarization expectations and the CHSH combination for two qubits.
//!
//! An analyzer at angle θ measures `cos2θ·σz + sin2θ·σx`, with outcome +1
//! for V (basis index 0) and −1 for H (index 1).

use std::f64::consts::{PI, SQRT_2};

use nalgebra::Matrix4;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qstate::{DensityMatrix, LoadedState, PureState};

/// Largest |s| quantum mechanics allows.
pub const TSIRELSON: f64 = 2.0 * SQRT_2;
const TSIRELSON_TOL: f64 = 1e-9;

fn canonical_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(PI);
    // rem_euclid can round up to exactly π
    if a >= PI {
        0.0
    } else {
        a
    }
}

/// Analyzer orientation in radians, canonicalized to `[0, π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct MeasurementSetting(f64);

impl MeasurementSetting {
    pub fn new(angle: f64) -> Result<MeasurementSetting> {
        if !angle.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(MeasurementSetting(canonical_angle(angle)))
    }

    pub fn angle(self) -> f64 {
        self.0
    }

    /// `(cos2θ, sin2θ)`: the observable's (z, x) components.
    fn direction(self) -> [f64; 2] {
        let (s, c) = (2.0 * self.0).sin_cos();
        [c, s]
    }

    fn observable(self) -> [[f64; 2]; 2] {
        let [c, s] = self.direction();
        [[c, s], [s, -c]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshValue {
    pub s: f64,
    /// `(a, a′, b, b′)`.
    pub settings: [f64; 4],
}

/// States the Bell functions accept.
pub trait TwoQubitState {
    fn two_qubit_matrix(&self) -> Result<Matrix4<Complex64>>;
}

fn require_qubits(dims: &[usize]) -> Result<()> {
    if dims != [2, 2] {
        return Err(Error::WrongDimension(format!(
            "Bell measurements need dims [2, 2], got {dims:?}"
        )));
    }
    Ok(())
}

impl TwoQubitState for PureState {
    fn two_qubit_matrix(&self) -> Result<Matrix4<Complex64>> {
        require_qubits(self.dims())?;
        let a = self.amplitudes();
        Ok(Matrix4::from_fn(|r, c| a[r] * a[c].conj()))
    }
}

impl TwoQubitState for DensityMatrix {
    fn two_qubit_matrix(&self) -> Result<Matrix4<Complex64>> {
        require_qubits(self.dims())?;
        let m = self.matrix();
        Ok(Matrix4::from_fn(|r, c| m[(r, c)]))
    }
}

impl TwoQubitState for LoadedState {
    fn two_qubit_matrix(&self) -> Result<Matrix4<Complex64>> {
        match self {
            LoadedState::Pure(p) => p.two_qubit_matrix(),
            LoadedState::Mixed(m) => m.two_qubit_matrix(),
        }
    }
}

fn trace_with(rho: &Matrix4<Complex64>, a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> f64 {
    // tr(ρ (A⊗B)) = Σ_{rc} ρ_rc (A⊗B)_cr
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..4 {
        for c in 0..4 {
            let op = a[c / 2][r / 2] * b[c % 2][r % 2];
            if op != 0.0 {
                acc += rho[(r, c)] * op;
            }
        }
    }
    acc.re
}

/// `E(a, b) = tr(ρ A(a)⊗B(b))`.
pub fn joint_expectation<S: TwoQubitState + ?Sized>(
    state: &S,
    a: MeasurementSetting,
    b: MeasurementSetting,
) -> Result<f64> {
    let rho = state.two_qubit_matrix()?;
    Ok(trace_with(&rho, a.observable(), b.observable()).clamp(-1.0, 1.0))
}

/// `T[i][j] = tr(ρ σᵢ⊗σⱼ)` for σ ∈ {σz, σx}; then `E(a, b) = u(a)ᵀ T u(b)`.
fn correlation_tensor(rho: &Matrix4<Complex64>) -> [[f64; 2]; 2] {
    let z = [[1.0, 0.0], [0.0, -1.0]];
    let x = [[0.0, 1.0], [1.0, 0.0]];
    let paulis = [z, x];
    let mut t = [[0.0; 2]; 2];
    for (i, pa) in paulis.iter().enumerate() {
        for (j, pb) in paulis.iter().enumerate() {
            t[i][j] = trace_with(rho, *pa, *pb);
        }
    }
    t
}

fn expectation_from_tensor(t: &[[f64; 2]; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * (t[0][0] * b[0] + t[0][1] * b[1]) + a[1] * (t[1][0] * b[0] + t[1][1] * b[1])
}

fn checked(s: f64, settings: [f64; 4]) -> Result<ChshValue> {
    if s.abs() > TSIRELSON + TSIRELSON_TOL {
        return Err(Error::Consistency(format!(
            "CHSH value {s} exceeds the Tsirelson bound"
        )));
    }
    Ok(ChshValue { s, settings })
}

/// `s = E(a,b) + E(a,b′) + E(a′,b) − E(a′,b′)`.
pub fn chsh<S: TwoQubitState + ?Sized>(
    state: &S,
    a: MeasurementSetting,
    a_prime: MeasurementSetting,
    b: MeasurementSetting,
    b_prime: MeasurementSetting,
) -> Result<ChshValue> {
    let rho = state.two_qubit_matrix()?;
    let e = |x: MeasurementSetting, y: MeasurementSetting| {
        trace_with(&rho, x.observable(), y.observable())
    };
    let s = e(a, b) + e(a, b_prime) + e(a_prime, b) - e(a_prime, b_prime);
    checked(s, [a.angle(), a_prime.angle(), b.angle(), b_prime.angle()])
}

fn chsh_from_tensor(t: &[[f64; 2]; 2], angles: &[f64; 4]) -> f64 {
    let dir = |th: f64| {
        let (s, c) = (2.0 * th).sin_cos();
        [c, s]
    };
    let [a, ap, b, bp] = angles.map(dir);
    expectation_from_tensor(t, a, b)
        + expectation_from_tensor(t, a, bp)
        + expectation_from_tensor(t, ap, b)
        - expectation_from_tensor(t, ap, bp)
}

/// Candidate ordering for the grid: larger |s| first, then the
/// lexicographically smallest index tuple.
fn better(a: (f64, [usize; 4]), b: (f64, [usize; 4])) -> (f64, [usize; 4]) {
    match b.0.partial_cmp(&a.0) {
        Some(std::cmp::Ordering::Greater) => b,
        Some(std::cmp::Ordering::Equal) if b.1 < a.1 => b,
        _ => a,
    }
}

/// Largest |s| over a uniform grid of `grid_density` angles per party
/// setting, optionally polished by a pattern search in the continuous
/// angles. The returned `s` carries its sign.
pub fn chsh_maximize<S: TwoQubitState + ?Sized>(
    state: &S,
    grid_density: usize,
    refine: bool,
) -> Result<ChshValue> {
    if grid_density < 8 {
        return Err(Error::InvalidArgument(format!(
            "grid density must be at least 8, got {grid_density}"
        )));
    }
    let rho = state.two_qubit_matrix()?;
    let t = correlation_tensor(&rho);
    let g = grid_density;
    let dirs: Vec<[f64; 2]> = (0..g)
        .map(|k| MeasurementSetting(k as f64 * PI / g as f64).direction())
        .collect();
    let table: Vec<Vec<f64>> = dirs
        .iter()
        .map(|&a| {
            dirs.iter()
                .map(|&b| expectation_from_tensor(&t, a, b))
                .collect()
        })
        .collect();

    let (_, idx) = (0..g)
        .into_par_iter()
        .map(|i| {
            let mut best = (f64::NEG_INFINITY, [usize::MAX; 4]);
            for ip in 0..g {
                for j in 0..g {
                    for jp in 0..g {
                        let s = table[i][j] + table[i][jp] + table[ip][j] - table[ip][jp];
                        best = better(best, (s.abs(), [i, ip, j, jp]));
                    }
                }
            }
            best
        })
        .reduce(|| (f64::NEG_INFINITY, [usize::MAX; 4]), better);

    let mut angles = idx.map(|k| k as f64 * PI / g as f64);
    if refine {
        let mut best = chsh_from_tensor(&t, &angles).abs();
        let mut step = PI / g as f64 / 2.0;
        while step > 1e-12 {
            let mut improved = false;
            for k in 0..4 {
                for dir in [1.0, -1.0] {
                    let mut trial = angles;
                    trial[k] += dir * step;
                    let v = chsh_from_tensor(&t, &trial).abs();
                    if v > best {
                        best = v;
                        angles = trial;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
    }
    let settings = angles.map(canonical_angle);
    let s = chsh_from_tensor(&t, &settings);
    checked(s, settings)
}
