//! Phenomenological Heisenberg–Langevin model of the central mode.
//!
//! Drift in (p, x) order is `[[−γp, −ω²], [1, −γx]]` with
//! `γp = (1+y)γ`, `γx = (1−y)γ`. Second moments obey
//! `C' = A C + C Aᵀ + 2D`; only the symmetric noise part D enters them.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::perturb::NoiseSet;
use crate::profiles::TimeProfile;
use crate::propagate::{check_grid, substeps, STEPS_PER_SCALE};
use crate::reduce::CentralGaussian;

/// Mean and covariance of the quadratures; same layout as [`CentralGaussian`].
pub type MomentState = CentralGaussian;

/// Time-dependent drift and diffusion of a Gaussian process.
pub trait GaussianDynamics: Sync {
    fn drift(&self, t: f64) -> Matrix2<f64>;
    fn diffusion(&self, t: f64) -> Matrix2<f64>;
    /// Largest RK4 step that resolves the coefficients.
    fn step_hint(&self) -> f64;
}

/// Phenomenological model: ω(t), γ(t), asymmetry y and noise coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LangevinModel {
    pub omega: TimeProfile,
    pub noise: NoiseSet,
}

impl LangevinModel {
    pub fn new(omega: TimeProfile, noise: NoiseSet) -> Result<Self> {
        omega.validate("omega")?;
        if omega.bounds().0 <= 0.0 {
            return Err(Error::invalid("omega", "frequency must stay > 0"));
        }
        noise.gamma.validate("gamma")?;
        if noise.gamma.bounds().0 < 0.0 {
            return Err(Error::invalid("gamma", "must be >= 0"));
        }
        if !(-1.0..=1.0).contains(&noise.y) {
            return Err(Error::invalid("y", "must lie in [-1, 1]"));
        }
        if !noise.preserves_commutator() {
            return Err(Error::invalid(
                "chi",
                format!(
                    "Im(chi_xp) - Im(chi_px) = {}·gamma, commutator preservation needs 2·gamma",
                    noise.xp - noise.px
                ),
            ));
        }
        if noise.y != 0.0 && !noise.gamma.is_continuous() {
            return Err(Error::invalid(
                "gamma",
                "discontinuous damping profile with y != 0; smooth it first",
            ));
        }
        Ok(Self { omega, noise })
    }

    /// Symmetric minimum-noise model.
    pub fn min_sym(omega: TimeProfile, gamma: TimeProfile, omega0: f64, g: f64) -> Result<Self> {
        Self::new(omega, crate::perturb::min_noise_set(gamma, omega0, g)?)
    }

    pub fn y(&self) -> f64 {
        self.noise.y
    }

    pub fn drift_matrix(&self, t: f64) -> Matrix2<f64> {
        let w = self.omega.value(t);
        Matrix2::new(-self.noise.gamma_p(t), -w * w, 1.0, -self.noise.gamma_x(t))
    }

    /// δ = (γx − γp)/2 = −yγ and its time derivative.
    pub fn delta(&self, t: f64) -> (f64, f64) {
        let y = self.noise.y;
        (-y * self.noise.gamma.value(t), -y * self.noise.gamma.derivative(t))
    }

    /// ω_ef² = ω² + δ̇ − δ².
    pub fn effective_frequency(&self, t: f64) -> f64 {
        let w = self.omega.value(t);
        if self.noise.y == 0.0 {
            return w * w;
        }
        let (d, dd) = self.delta(t);
        w * w + dd - d * d
    }
}

impl GaussianDynamics for LangevinModel {
    fn drift(&self, t: f64) -> Matrix2<f64> {
        self.drift_matrix(t)
    }
    fn diffusion(&self, t: f64) -> Matrix2<f64> {
        self.noise.diffusion(t)
    }
    fn step_hint(&self) -> f64 {
        let mut scale = 2.0 * PI / self.omega.bounds().1;
        for p in [&self.omega, &self.noise.gamma] {
            if let Some(s) = p.time_scale() {
                scale = scale.min(s);
            }
        }
        let g = self.noise.gamma.bounds().1 * (1.0 + self.noise.y.abs());
        if g > 0.0 {
            scale = scale.min(1.0 / g);
        }
        scale / STEPS_PER_SCALE
    }
}

/// Drift and diffusion sampled on a time table and linearly interpolated
/// between nodes; node values are returned exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TabulatedDynamics {
    times: Vec<f64>,
    a: Vec<Matrix2<f64>>,
    d: Vec<Matrix2<f64>>,
}

impl TabulatedDynamics {
    pub fn new(times: Vec<f64>, a: Vec<Matrix2<f64>>, d: Vec<Matrix2<f64>>) -> Result<Self> {
        if times.len() < 2 || a.len() != times.len() || d.len() != times.len() {
            return Err(Error::invalid("table", "needs >= 2 nodes with matching A and D"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("table", "times must be strictly increasing"));
        }
        Ok(Self { times, a, d })
    }

    fn interp(&self, values: &[Matrix2<f64>], t: f64) -> Matrix2<f64> {
        let last = self.times.len() - 1;
        let i = self.times.partition_point(|&x| x <= t).clamp(1, last) - 1;
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let snap = 1e-9 * (t1 - t0);
        if (t - t0).abs() <= snap {
            return values[i];
        }
        if (t - t1).abs() <= snap {
            return values[i + 1];
        }
        let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        values[i] * (1.0 - w) + values[i + 1] * w
    }
}

impl GaussianDynamics for TabulatedDynamics {
    fn drift(&self, t: f64) -> Matrix2<f64> {
        self.interp(&self.a, t)
    }
    fn diffusion(&self, t: f64) -> Matrix2<f64> {
        self.interp(&self.d, t)
    }
    fn step_hint(&self) -> f64 {
        let h = self
            .times
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        2.0 * h * (1.0 + 1e-12)
    }
}

fn moment_rhs<G: GaussianDynamics + ?Sized>(
    g: &G,
    t: f64,
    m: &Vector2<f64>,
    c: &Matrix2<f64>,
) -> (Vector2<f64>, Matrix2<f64>) {
    let a = g.drift(t);
    (a * m, a * c + c * a.transpose() + g.diffusion(t) * 2.0)
}

/// RK4 integration of the moment equations, output at every grid time.
/// The grid must start at 0 or any other time the dynamics are defined at.
pub fn evolve_moments<G: GaussianDynamics + ?Sized>(
    dynamics: &G,
    state0: &MomentState,
    grid: &[f64],
) -> Result<Vec<MomentState>> {
    if grid.is_empty() {
        return Err(Error::invalid("grid", "must not be empty"));
    }
    check_grid(grid, grid[0], f64::INFINITY)?;
    let hint = dynamics.step_hint();
    let mut m = state0.mean;
    let mut c = state0.cov;
    let mut out = Vec::with_capacity(grid.len());
    out.push(*state0);
    for w in grid.windows(2) {
        let n = substeps(w[1] - w[0], hint, w[0])?;
        let h = (w[1] - w[0]) / n as f64;
        for i in 0..n {
            let t = w[0] + i as f64 * h;
            let (k1m, k1c) = moment_rhs(dynamics, t, &m, &c);
            let (k2m, k2c) = moment_rhs(dynamics, t + 0.5 * h, &(m + k1m * (0.5 * h)), &(c + k1c * (0.5 * h)));
            let (k3m, k3c) = moment_rhs(dynamics, t + 0.5 * h, &(m + k2m * (0.5 * h)), &(c + k2c * (0.5 * h)));
            let (k4m, k4c) = moment_rhs(dynamics, t + h, &(m + k3m * h), &(c + k3c * h));
            m += (k1m + k2m * 2.0 + k3m * 2.0 + k4m) * (h / 6.0);
            c += (k1c + k2c * 2.0 + k3c * 2.0 + k4c) * (h / 6.0);
            c = (c + c.transpose()) * 0.5;
        }
        if !(m.iter().chain(c.iter()).all(|x| x.is_finite())) {
            return Err(Error::Integration {
                time: w[1],
                reason: "non-finite moments".into(),
            });
        }
        out.push(MomentState { mean: m, cov: c });
    }
    Ok(out)
}

/// Symmetric C solving A C + C Aᵀ + 2D = 0.
pub fn lyapunov_2x2(a: &Matrix2<f64>, d: &Matrix2<f64>) -> Result<Matrix2<f64>> {
    // unknowns (c11, c12, c22)
    let m = Matrix3::new(
        2.0 * a[(0, 0)],
        2.0 * a[(0, 1)],
        0.0,
        a[(1, 0)],
        a[(0, 0)] + a[(1, 1)],
        a[(0, 1)],
        0.0,
        2.0 * a[(1, 0)],
        2.0 * a[(1, 1)],
    );
    let rhs = Vector3::new(-2.0 * d[(0, 0)], -(d[(0, 1)] + d[(1, 0)]), -2.0 * d[(1, 1)]);
    let c = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::UnsupportedForm("singular Lyapunov operator".into()))?;
    Ok(Matrix2::new(c[0], c[1], c[1], c[2]))
}

/// Solution of ε̈ + ω_ef²(t)ε = 0 with ε(0) = 1, ε̇(0) = iω0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonSolution {
    pub t: Vec<f64>,
    pub eps: Vec<Complex64>,
    pub deps: Vec<Complex64>,
    /// max |W(t) − W(0)|/|W(0)| with W = ε̇ε* − ε̇*ε.
    pub wronskian_drift: f64,
}

impl EpsilonSolution {
    pub fn final_modulus(&self) -> f64 {
        self.eps.last().map_or(f64::NAN, |e| e.norm())
    }
}

fn wronskian(e: Complex64, de: Complex64) -> Complex64 {
    de * e.conj() - de.conj() * e
}

/// Integrates the classical ε-equation on `grid` (starting at 0) with RK4.
pub fn epsilon_solver(model: &LangevinModel, grid: &[f64]) -> Result<EpsilonSolution> {
    check_grid(grid, 0.0, f64::INFINITY)?;
    let omega0 = model.noise.omega0;
    let w_max = model.omega.bounds().1;
    let mut scale = 2.0 * PI / w_max;
    for p in [&model.omega, &model.noise.gamma] {
        if let Some(s) = p.time_scale() {
            scale = scale.min(s);
        }
    }
    let hint = scale / STEPS_PER_SCALE;
    let f = |t: f64, e: Complex64, de: Complex64| (de, -model.effective_frequency(t) * e);
    let mut e = Complex64::new(1.0, 0.0);
    let mut de = Complex64::new(0.0, omega0);
    let w0 = wronskian(e, de);
    let mut drift: f64 = 0.0;
    let mut sol = EpsilonSolution {
        t: vec![grid[0]],
        eps: vec![e],
        deps: vec![de],
        wronskian_drift: 0.0,
    };
    for w in grid.windows(2) {
        let n = substeps(w[1] - w[0], hint, w[0])?;
        let h = (w[1] - w[0]) / n as f64;
        for i in 0..n {
            let t = w[0] + i as f64 * h;
            let (a1, b1) = f(t, e, de);
            let (a2, b2) = f(t + 0.5 * h, e + a1 * (0.5 * h), de + b1 * (0.5 * h));
            let (a3, b3) = f(t + 0.5 * h, e + a2 * (0.5 * h), de + b2 * (0.5 * h));
            let (a4, b4) = f(t + h, e + a3 * h, de + b3 * h);
            e += (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (h / 6.0);
            de += (b1 + b2 * 2.0 + b3 * 2.0 + b4) * (h / 6.0);
        }
        if !(e.is_finite() && de.is_finite()) {
            return Err(Error::Integration {
                time: w[1],
                reason: "non-finite epsilon".into(),
            });
        }
        drift = drift.max((wronskian(e, de) - w0).norm() / w0.norm());
        sol.t.push(w[1]);
        sol.eps.push(e);
        sol.deps.push(de);
    }
    if drift > 1e-8 {
        log::warn!("epsilon Wronskian drifted by {drift:e}");
    }
    sol.wronskian_drift = drift;
    Ok(sol)
}

/// Monte Carlo estimate of the moments at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub t: f64,
    pub mean: Vector2<f64>,
    pub cov: Matrix2<f64>,
    pub mean_se: Vector2<f64>,
    /// Standard errors of the covariance entries (Gaussian sampling formula).
    pub cov_se: Matrix2<f64>,
}

/// Trajectories per reduction chunk. Fixed so that sums are formed in the
/// same order for every worker count.
const CHUNK: usize = 64;

/// Square root of a symmetric PSD 2×2 matrix; negative parts are clipped.
fn psd_sqrt(m: &Matrix2<f64>) -> Matrix2<f64> {
    let m = (m + m.transpose()) * 0.5;
    let s = m.determinant().max(0.0).sqrt();
    let tr = m.trace() + 2.0 * s;
    if tr <= 0.0 {
        return Matrix2::zeros();
    }
    (m + Matrix2::identity() * s) / tr.sqrt()
}

#[derive(Clone)]
struct Sums {
    m: Vec<Vector2<f64>>,
    mm: Vec<Matrix2<f64>>,
}

/// Samples `count` Euler–Maruyama trajectories of
/// `dq = A q dt + √(2D) dW`, one step per grid interval, and returns the
/// sample moments at every grid time. Trajectory `k` draws from ChaCha
/// stream `k` of `seed`, so results do not depend on the worker count.
pub fn sample_trajectories<G: GaussianDynamics + ?Sized>(
    dynamics: &G,
    state0: &MomentState,
    grid: &[f64],
    count: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<MomentEstimate>> {
    if count < 2 {
        return Err(Error::invalid("count", "needs at least 2 trajectories"));
    }
    if grid.is_empty() {
        return Err(Error::invalid("grid", "must not be empty"));
    }
    check_grid(grid, grid[0], f64::INFINITY)?;
    let l0 = psd_sqrt(&state0.cov);
    let steps: Vec<(Matrix2<f64>, Matrix2<f64>)> = grid
        .windows(2)
        .map(|w| {
            let h = w[1] - w[0];
            (dynamics.drift(w[0]), psd_sqrt(&(dynamics.diffusion(w[0]) * (2.0 * h))))
        })
        .collect();
    let chunks = count.div_ceil(CHUNK);
    let partial = map_indexed(exec, chunks, |c| {
        let mut sums = Sums {
            m: vec![Vector2::zeros(); grid.len()],
            mm: vec![Matrix2::zeros(); grid.len()],
        };
        for k in c * CHUNK..((c + 1) * CHUNK).min(count) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut normal = || -> Vector2<f64> {
                Vector2::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
            };
            let mut q = state0.mean + l0 * normal();
            sums.m[0] += q;
            sums.mm[0] += q * q.transpose();
            for (i, (a, l)) in steps.iter().enumerate() {
                let h = grid[i + 1] - grid[i];
                q = q + a * q * h + l * normal();
                sums.m[i + 1] += q;
                sums.mm[i + 1] += q * q.transpose();
            }
        }
        sums
    });
    let mut total = Sums {
        m: vec![Vector2::zeros(); grid.len()],
        mm: vec![Matrix2::zeros(); grid.len()],
    };
    for s in &partial {
        for i in 0..grid.len() {
            total.m[i] += s.m[i];
            total.mm[i] += s.mm[i];
        }
    }
    let n = count as f64;
    Ok(grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mean = total.m[i] / n;
            let cov = (total.mm[i] - mean * mean.transpose() * n) / (n - 1.0);
            let cov = (cov + cov.transpose()) * 0.5;
            let mean_se = Vector2::new((cov[(0, 0)] / n).sqrt(), (cov[(1, 1)] / n).sqrt());
            let cov_se = Matrix2::from_fn(|r, c| {
                ((cov[(r, r)] * cov[(c, c)] + cov[(r, c)] * cov[(r, c)]) / (n - 1.0)).sqrt()
            });
            MomentEstimate {
                t,
                mean,
                cov,
                mean_se,
                cov_se,
            }
        })
        .collect())
}
