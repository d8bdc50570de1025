//! Reduced Gaussian dynamics of the central mode.
//!
//! From a propagator trajectory and the reservoir covariance F this module
//! extracts the averaged-propagator covariance M* = R12 F R12ᵀ, the exact
//! drift A = 𝒜11 + 𝒜12 R21 R11⁻¹ and the exact diffusion
//! 2D = 𝒜12 (R22 − R21 R11⁻¹ R12) F R12ᵀ + transpose. Ṙ11 and Ṁ* are never
//! differentiated numerically.

use nalgebra::{DMatrix, Matrix2, Vector2};
use num_complex::Complex64;
use serde::Serialize;

use crate::exec::{map_slice, Execution};
use crate::propagate::PropagatorState;
use crate::system::{build_a11, build_a12, SystemSpec};

/// Condition number of R11 above which extraction is skipped.
pub const R11_CONDITION_LIMIT: f64 = 1e8;

/// Mean and covariance of the central mode in (p0, x0) order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CentralGaussian {
    pub mean: Vector2<f64>,
    pub cov: Matrix2<f64>,
}

impl CentralGaussian {
    /// Ground state of the unit-frequency oscillator: cov = I/2.
    pub fn vacuum() -> Self {
        Self::thermal(1.0)
    }

    /// cov = (G/2)·I.
    pub fn thermal(g: f64) -> Self {
        Self {
            mean: Vector2::zeros(),
            cov: Matrix2::identity() * (0.5 * g),
        }
    }

    /// Vacuum covariance displaced to `(p, x)`.
    pub fn coherent(p: f64, x: f64) -> Self {
        Self {
            mean: Vector2::new(p, x),
            ..Self::vacuum()
        }
    }

    /// ½⟨p² + x² − 1⟩.
    pub fn photon_number(&self) -> f64 {
        photon_number(self)
    }

    /// det(cov); at least 1/4 for physical states.
    pub fn uncertainty(&self) -> f64 {
        self.cov.determinant()
    }
}

/// ½(cov_pp + cov_xx + |mean|² − 1).
pub fn photon_number(state: &CentralGaussian) -> f64 {
    0.5 * (state.cov.trace() + state.mean.norm_squared() - 1.0)
}

/// Langevin noise correlation matrix, stored in (p, x) order like every
/// other matrix here: `X[(0,0)] = χ_pp`, `X[(0,1)] = χ_px`,
/// `X[(1,0)] = χ_xp`, `X[(1,1)] = χ_xx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseMatrix(pub Matrix2<Complex64>);

impl NoiseMatrix {
    pub fn chi_pp(&self) -> Complex64 {
        self.0[(0, 0)]
    }
    pub fn chi_px(&self) -> Complex64 {
        self.0[(0, 1)]
    }
    pub fn chi_xp(&self) -> Complex64 {
        self.0[(1, 0)]
    }
    pub fn chi_xx(&self) -> Complex64 {
        self.0[(1, 1)]
    }

    /// Same matrix with rows and columns in (x, p) order.
    pub fn in_xp_order(&self) -> Matrix2<Complex64> {
        Matrix2::new(self.chi_xx(), self.chi_xp(), self.chi_px(), self.chi_pp())
    }

    /// (X + Xᵀ)/4, which equals the diffusion matrix.
    pub fn diffusion(&self) -> Matrix2<f64> {
        (self.0 + self.0.transpose()).map(|c| c.re) * 0.25
    }

    /// Eigenvalues of the (Hermitian) matrix, ascending.
    pub fn hermitian_eigenvalues(&self) -> [f64; 2] {
        let a = self.0[(0, 0)].re;
        let d = self.0[(1, 1)].re;
        let b = self.0[(0, 1)];
        let mid = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        [mid - r, mid + r]
    }

    pub fn determinant(&self) -> f64 {
        (self.0[(0, 0)] * self.0[(1, 1)] - self.0[(0, 1)] * self.0[(1, 0)]).re
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (self.0 - self.0.adjoint()).iter().all(|c| c.norm() <= tol)
    }

    /// Positive semidefinite as a Hermitian matrix, with eigenvalue slack `tol`.
    pub fn is_psd(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && self.hermitian_eigenvalues()[0] >= -tol
    }
}

/// X = 2D plus the imaginary antisymmetric part fixed by commutator
/// preservation, χ_xp − χ_px = 2iγ. In (x, p) order this is
/// X = 2D + iγ·[[0, 1], [−1, 0]].
pub fn noise_matrix(d: &Matrix2<f64>, gamma: f64) -> NoiseMatrix {
    let i = Complex64::new(0.0, 1.0);
    let mut x = d.map(|v| Complex64::new(2.0 * v, 0.0));
    x[(0, 1)] -= i * gamma;
    x[(1, 0)] += i * gamma;
    NoiseMatrix(x)
}

/// γ(t) = −½ tr(A − 𝒜11).
pub fn damping_rate(a: &Matrix2<f64>, a11: &Matrix2<f64>) -> f64 {
    -0.5 * (a - a11).trace()
}

/// M* = R12 F R12ᵀ.
pub fn reduced_covariance(state: &PropagatorState, f: &DMatrix<f64>) -> Matrix2<f64> {
    let m = &state.r12 * f * state.r12.transpose();
    let m = Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    (m + m.transpose()) * 0.5
}

/// Applies the averaged propagator: mean → R11·mean, cov → R11 cov R11ᵀ + M*.
pub fn evolve_gaussian(
    state0: &CentralGaussian,
    r: &PropagatorState,
    f: &DMatrix<f64>,
) -> CentralGaussian {
    let cov = r.r11 * state0.cov * r.r11.transpose() + reduced_covariance(r, f);
    CentralGaussian {
        mean: r.r11 * state0.mean,
        cov: (cov + cov.transpose()) * 0.5,
    }
}

/// Spectral condition number of a 2×2 matrix.
pub fn condition_number(m: &Matrix2<f64>) -> f64 {
    let s = m.singular_values();
    let (hi, lo) = (s.max(), s.min());
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

fn to_dmatrix(m: &Matrix2<f64>) -> DMatrix<f64> {
    DMatrix::from_iterator(2, 2, m.iter().copied())
}

fn to_matrix2(m: &DMatrix<f64>) -> Matrix2<f64> {
    Matrix2::from_iterator(m.iter().copied())
}

/// Values extracted at the regular points of a trajectory; times where R11
/// was too ill-conditioned to invert are listed separately.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extraction<T> {
    pub values: Vec<(f64, T)>,
    pub singular: Vec<f64>,
}

fn r11_inverse(state: &PropagatorState) -> Option<Matrix2<f64>> {
    let cond = condition_number(&state.r11);
    if cond > R11_CONDITION_LIMIT {
        log::warn!("R11 ill-conditioned (cond {cond:e}) at t = {}", state.t);
        return None;
    }
    state.r11.try_inverse()
}

fn drift_at(state: &PropagatorState, spec: &SystemSpec, r11_inv: &Matrix2<f64>) -> Matrix2<f64> {
    let a12 = build_a12(&spec.bath, state.t);
    let corr = a12 * &state.r21 * to_dmatrix(r11_inv);
    build_a11(spec, state.t) + to_matrix2(&corr)
}

fn diffusion_at(
    state: &PropagatorState,
    spec: &SystemSpec,
    f: &DMatrix<f64>,
    r11_inv: &Matrix2<f64>,
) -> Matrix2<f64> {
    let a12 = build_a12(&spec.bath, state.t);
    let schur = &state.r22 - &state.r21 * to_dmatrix(r11_inv) * &state.r12;
    let k = to_matrix2(&(a12 * schur * f * state.r12.transpose()));
    (k + k.transpose()) * 0.5
}

/// Exact drift matrix A(t) = 𝒜11 + 𝒜12 R21 R11⁻¹.
pub fn drift_exact(trajectory: &[PropagatorState], spec: &SystemSpec) -> Extraction<Matrix2<f64>> {
    let mut out = Extraction {
        values: Vec::with_capacity(trajectory.len()),
        singular: vec![],
    };
    for s in trajectory {
        match r11_inverse(s) {
            Some(inv) => out.values.push((s.t, drift_at(s, spec, &inv))),
            None => out.singular.push(s.t),
        }
    }
    out
}

/// Exact diffusion matrix D(t), symmetric by construction.
pub fn diffusion_exact(
    trajectory: &[PropagatorState],
    f: &DMatrix<f64>,
    spec: &SystemSpec,
) -> Extraction<Matrix2<f64>> {
    let mut out = Extraction {
        values: Vec::with_capacity(trajectory.len()),
        singular: vec![],
    };
    for s in trajectory {
        match r11_inverse(s) {
            Some(inv) => out.values.push((s.t, diffusion_at(s, spec, f, &inv))),
            None => out.singular.push(s.t),
        }
    }
    out
}

/// Reduced-dynamics record at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedDynamics {
    pub t: f64,
    /// Drift A(t).
    pub a: Matrix2<f64>,
    /// M*(t) = R12 F R12ᵀ.
    pub mstar: Matrix2<f64>,
    /// Diffusion D(t).
    pub d: Matrix2<f64>,
    /// Noise matrix X(t).
    pub x: NoiseMatrix,
    /// γ(t) = −½ tr(A − 𝒜11).
    pub gamma: f64,
}

/// All reduced quantities along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedSeries {
    pub records: Vec<ReducedDynamics>,
    pub singular: Vec<f64>,
}

/// Extracts [`ReducedDynamics`] at every regular point, fanning out over
/// time points.
pub fn reduce_trajectory(
    trajectory: &[PropagatorState],
    spec: &SystemSpec,
    f: &DMatrix<f64>,
    exec: Execution,
) -> ReducedSeries {
    let per_point = map_slice(exec, trajectory, |s| {
        let inv = r11_inverse(s)?;
        let a = drift_at(s, spec, &inv);
        let d = diffusion_at(s, spec, f, &inv);
        let gamma = damping_rate(&a, &build_a11(spec, s.t));
        Some(ReducedDynamics {
            t: s.t,
            a,
            mstar: reduced_covariance(s, f),
            d,
            x: noise_matrix(&d, gamma),
            gamma,
        })
    });
    let mut series = ReducedSeries {
        records: vec![],
        singular: vec![],
    };
    for (s, rec) in trajectory.iter().zip(per_point) {
        match rec {
            Some(r) => series.records.push(r),
            None => series.singular.push(s.t),
        }
    }
    series
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn photon_numbers() {
        assert_eq!(CentralGaussian::vacuum().photon_number(), 0.0);
        assert_eq!(CentralGaussian::coherent(1.0, 1.0).photon_number(), 1.0);
        let g = 1.7;
        assert!((CentralGaussian::thermal(g).photon_number() - (g - 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn reduced_covariance_direct_product() {
        let mut s = PropagatorState::identity(1);
        assert_eq!(reduced_covariance(&s, &DMatrix::identity(2, 2)), Matrix2::zeros());
        s.r12 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let f = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.3, 0.8]));
        assert_eq!(reduced_covariance(&s, &f), Matrix2::new(0.3, 0.0, 0.0, 0.0));
    }

    #[test]
    fn min_noise_example() {
        let d = Matrix2::new(0.05, 0.0, 0.0, 0.05);
        let x = noise_matrix(&d, 0.1);
        let i = Complex64::new(0.0, 1.0);
        let expected_xp = Matrix2::new(
            Complex64::new(0.1, 0.0),
            i * 0.1,
            -i * 0.1,
            Complex64::new(0.1, 0.0),
        );
        assert!((x.in_xp_order() - expected_xp).iter().all(|c| c.norm() < 1e-15));
        assert!(((x.chi_xp() - x.chi_px()) - i * 0.2).norm() < 1e-15);
        assert_eq!(x.diffusion(), d);
        assert!(x.is_psd(1e-14));
        assert!(x.determinant().abs() < 1e-15);
    }

    #[test]
    fn zero_gamma_noise_is_real_symmetric() {
        let d = Matrix2::new(0.2, 0.03, 0.03, 0.1);
        let x = noise_matrix(&d, 0.0);
        assert!(x.0.iter().all(|c| c.im == 0.0));
        assert_eq!(x.0.map(|c| c.re), d * 2.0);
    }

    #[test]
    fn condition_number_of_singular() {
        assert!(condition_number(&Matrix2::new(1.0, 0.0, 0.0, 0.0)).is_infinite());
        assert!((condition_number(&Matrix2::new(2.0, 0.0, 0.0, 0.5)) - 4.0).abs() < 1e-12);
    }
}
