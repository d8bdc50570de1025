//! Symplectic propagator of the full system.
//!
//! R(t) solves Ṙ = 𝒜(t)R with R(0) = I. It is integrated block by block
//! (R11, R12, R21, R22) with fixed-step classical RK4. The symplectic defect
//! ‖RᵀJR − J‖_F is recorded at every output time; it is monitored, never
//! projected away.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::system::{a12_layout, a21_layout, central_generator, symplectic_unit, Coupling, SystemSpec};

/// Default fraction of the shortest time scale used as the RK4 step.
pub const STEPS_PER_SCALE: f64 = 400.0;

/// Defect above which integration is abandoned.
pub const DEFECT_HARD_LIMIT: f64 = 1e-6;

/// Propagator blocks at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropagatorState {
    pub t: f64,
    pub r11: Matrix2<f64>,
    pub r12: DMatrix<f64>,
    pub r21: DMatrix<f64>,
    pub r22: DMatrix<f64>,
    /// ‖RᵀJR − J‖_F at `t`.
    pub defect: f64,
}

impl PropagatorState {
    /// R(0) = I.
    pub fn identity(n: usize) -> Self {
        Self {
            t: 0.0,
            r11: Matrix2::identity(),
            r12: DMatrix::zeros(2, 2 * n),
            r21: DMatrix::zeros(2 * n, 2),
            r22: DMatrix::identity(2 * n, 2 * n),
            defect: 0.0,
        }
    }

    pub fn modes(&self) -> usize {
        self.r22.nrows() / 2
    }

    pub fn assemble(&self) -> DMatrix<f64> {
        let m = self.r22.nrows() + 2;
        let mut r = DMatrix::zeros(m, m);
        r.fixed_view_mut::<2, 2>(0, 0).copy_from(&self.r11);
        r.view_mut((0, 2), (2, m - 2)).copy_from(&self.r12);
        r.view_mut((2, 0), (m - 2, 2)).copy_from(&self.r21);
        r.view_mut((2, 2), (m - 2, m - 2)).copy_from(&self.r22);
        r
    }

    pub fn symplectic_defect(&self) -> f64 {
        let r = self.assemble();
        let j = symplectic_unit(self.modes());
        (r.transpose() * &j * &r - j).norm()
    }

    fn is_finite(&self) -> bool {
        self.r11.iter().all(|x| x.is_finite())
            && self.r12.iter().all(|x| x.is_finite())
            && self.r21.iter().all(|x| x.is_finite())
            && self.r22.iter().all(|x| x.is_finite())
    }
}

/// Closed-form exp(𝒜22 t): cos blocks on the diagonal, −ω sin upper-right,
/// sin/ω lower-left. Valid for any real `t`.
pub fn expm_bath(omegas: &[f64], t: f64) -> DMatrix<f64> {
    let n = omegas.len();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for (k, &w) in omegas.iter().enumerate() {
        let (s, c) = (w * t).sin_cos();
        m[(k, k)] = c;
        m[(n + k, n + k)] = c;
        m[(k, n + k)] = -w * s;
        m[(n + k, k)] = s / w;
    }
    m
}

/// Integration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorOptions {
    /// Largest RK4 step; `None` selects [`default_step`].
    pub max_step: Option<f64>,
    /// Defect that aborts the run.
    pub defect_limit: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            max_step: None,
            defect_limit: DEFECT_HARD_LIMIT,
        }
    }
}

/// (1/400)·min(2π/ω_max, shortest profile time scale).
pub fn default_step(spec: &SystemSpec) -> f64 {
    let mut scale = 2.0 * PI / spec.max_frequency();
    for p in [&spec.omega, &spec.bath.nu] {
        if let Some(s) = p.time_scale() {
            scale = scale.min(s);
        }
    }
    scale / STEPS_PER_SCALE
}

/// `points` equally spaced times from 0 to `t_end` inclusive.
pub fn uniform_grid(t_end: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    (0..points)
        .map(|i| t_end * i as f64 / (points - 1) as f64)
        .collect()
}

pub(crate) fn check_grid(grid: &[f64], t0: f64, t_max: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("grid", "must not be empty"));
    }
    if grid[0] != t0 {
        return Err(Error::invalid("grid", format!("must start at {t0}")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("grid", "must be strictly increasing"));
    }
    if grid[grid.len() - 1] > t_max * (1.0 + 1e-12) {
        return Err(Error::invalid("grid", "extends beyond t_max"));
    }
    Ok(())
}

/// Number of equal substeps covering `dt` with steps no longer than `h`.
pub(crate) fn substeps(dt: f64, h: f64, t: f64) -> Result<usize> {
    if !(h > 0.0) || h < 1e-14 * t.abs().max(1.0) {
        return Err(Error::Integration {
            time: t,
            reason: format!("step size {h:e} underflow"),
        });
    }
    let n = (dt / h).ceil();
    if n > 1e9 {
        return Err(Error::Integration {
            time: t,
            reason: format!("step size {h:e} too small for interval {dt}"),
        });
    }
    Ok((n as usize).max(1))
}

/// Applies 𝒜22 to a 2N-row matrix without forming it.
fn apply_bath_generator(omegas: &[f64], x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = omegas.len();
    let mut out = DMatrix::zeros(x.nrows(), x.ncols());
    for (k, w) in omegas.iter().enumerate() {
        let w2 = w * w;
        for c in 0..x.ncols() {
            out[(k, c)] = -w2 * x[(n + k, c)];
            out[(n + k, c)] = x[(k, c)];
        }
    }
    out
}

struct Blocks {
    r11: DMatrix<f64>,
    r12: DMatrix<f64>,
    r21: DMatrix<f64>,
    r22: DMatrix<f64>,
}

impl Blocks {
    fn from_state(s: &PropagatorState) -> Self {
        Self {
            r11: DMatrix::from_iterator(2, 2, s.r11.iter().copied()),
            r12: s.r12.clone(),
            r21: s.r21.clone(),
            r22: s.r22.clone(),
        }
    }

    fn into_state(self, t: f64) -> PropagatorState {
        PropagatorState {
            t,
            r11: Matrix2::from_iterator(self.r11.iter().copied()),
            r12: self.r12,
            r21: self.r21,
            r22: self.r22,
            defect: 0.0,
        }
    }

    fn offset(&self, k: &Blocks, h: f64) -> Blocks {
        Blocks {
            r11: &self.r11 + &k.r11 * h,
            r12: &self.r12 + &k.r12 * h,
            r21: &self.r21 + &k.r21 * h,
            r22: &self.r22 + &k.r22 * h,
        }
    }
}

fn derivative(spec: &SystemSpec, t: f64, y: &Blocks) -> Blocks {
    let omegas = &spec.bath.omegas;
    let w = spec.omega.value(t);
    let a11 = DMatrix::from_row_slice(2, 2, &[0.0, -w * w, 1.0, 0.0]);
    let mut d = Blocks {
        r11: &a11 * &y.r11,
        r12: &a11 * &y.r12,
        r21: apply_bath_generator(omegas, &y.r21),
        r22: apply_bath_generator(omegas, &y.r22),
    };
    if spec.bath.nu.value(t) != 0.0 {
        let c = spec.bath.at(t);
        let a12 = a12_layout(&c);
        let a21 = a21_layout(&c);
        d.r11 += &a12 * &y.r21;
        d.r21 += &a21 * &y.r11;
        d.r12 += &a12 * &y.r22;
        d.r22 += &a21 * &y.r12;
    }
    d
}

fn rk4_step(spec: &SystemSpec, t: f64, y: &Blocks, h: f64) -> Blocks {
    let k1 = derivative(spec, t, y);
    let k2 = derivative(spec, t + 0.5 * h, &y.offset(&k1, 0.5 * h));
    let k3 = derivative(spec, t + 0.5 * h, &y.offset(&k2, 0.5 * h));
    let k4 = derivative(spec, t + h, &y.offset(&k3, h));
    let w = h / 6.0;
    let combine = |y: &DMatrix<f64>, a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>| {
        let mut s = a + d;
        s += (b + c) * 2.0;
        y + s * w
    };
    Blocks {
        r11: combine(&y.r11, &k1.r11, &k2.r11, &k3.r11, &k4.r11),
        r12: combine(&y.r12, &k1.r12, &k2.r12, &k3.r12, &k4.r12),
        r21: combine(&y.r21, &k1.r21, &k2.r21, &k3.r21, &k4.r21),
        r22: combine(&y.r22, &k1.r22, &k2.r22, &k3.r22, &k4.r22),
    }
}

/// Integrates R from R(0) = I and records it at every grid time.
pub fn integrate_r(
    spec: &SystemSpec,
    grid: &[f64],
    opts: &IntegratorOptions,
) -> Result<Vec<PropagatorState>> {
    spec.validate()?;
    check_grid(grid, 0.0, spec.t_max)?;
    integrate_from(spec, PropagatorState::identity(spec.modes()), grid, opts)
}

/// Continues integration from `start`; `grid[0]` must equal `start.t`.
pub fn integrate_from(
    spec: &SystemSpec,
    start: PropagatorState,
    grid: &[f64],
    opts: &IntegratorOptions,
) -> Result<Vec<PropagatorState>> {
    check_grid(grid, start.t, spec.t_max)?;
    if start.modes() != spec.modes() {
        return Err(Error::invalid("state", "bath size mismatch"));
    }
    let h_max = opts.max_step.unwrap_or_else(|| default_step(spec));
    let mut out = Vec::with_capacity(grid.len());
    let mut current = start;
    current.defect = current.symplectic_defect();
    out.push(current.clone());
    for w in grid.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let n = substeps(t1 - t0, h_max, t0)?;
        let h = (t1 - t0) / n as f64;
        let mut y = Blocks::from_state(&current);
        for i in 0..n {
            let t = t0 + i as f64 * h;
            y = rk4_step(spec, t, &y, h);
            if !y.r11.iter().all(|x| x.is_finite()) {
                return Err(Error::Integration {
                    time: t + h,
                    reason: "non-finite propagator".into(),
                });
            }
        }
        current = y.into_state(t1);
        if !current.is_finite() {
            return Err(Error::Integration {
                time: t1,
                reason: "non-finite propagator".into(),
            });
        }
        current.defect = current.symplectic_defect();
        if !(current.defect <= opts.defect_limit) {
            return Err(Error::Integration {
                time: t1,
                reason: format!(
                    "symplectic defect {:e} exceeds {:e}",
                    current.defect, opts.defect_limit
                ),
            });
        }
        out.push(current.clone());
    }
    Ok(out)
}

fn central_rk4(spec: &SystemSpec, t: f64, r: &Matrix2<f64>, h: f64) -> Matrix2<f64> {
    let a = |t: f64| central_generator(spec.omega.value(t));
    let k1 = a(t) * r;
    let k2 = a(t + 0.5 * h) * (r + k1 * (0.5 * h));
    let k3 = a(t + 0.5 * h) * (r + k2 * (0.5 * h));
    let k4 = a(t + h) * (r + k3 * h);
    r + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// R11 of the uncoupled central oscillator, Ṙ = 𝒜11(t)R, R(0) = I, at each
/// grid time.
pub fn free_central_r11(
    spec: &SystemSpec,
    grid: &[f64],
    opts: &IntegratorOptions,
) -> Result<Vec<Matrix2<f64>>> {
    spec.omega.validate("omega")?;
    check_grid(grid, 0.0, f64::INFINITY)?;
    let h_max = opts.max_step.unwrap_or_else(|| free_central_step(spec));
    let mut r = Matrix2::identity();
    let mut out = vec![r];
    for w in grid.windows(2) {
        let n = substeps(w[1] - w[0], h_max, w[0])?;
        let h = (w[1] - w[0]) / n as f64;
        for i in 0..n {
            r = central_rk4(spec, w[0] + i as f64 * h, &r, h);
        }
        if !r.iter().all(|x| x.is_finite()) {
            return Err(Error::Integration {
                time: w[1],
                reason: "non-finite propagator".into(),
            });
        }
        out.push(r);
    }
    Ok(out)
}

fn free_central_step(spec: &SystemSpec) -> f64 {
    let mut scale = 2.0 * PI / spec.omega.bounds().1;
    if let Some(s) = spec.omega.time_scale() {
        scale = scale.min(s);
    }
    scale / STEPS_PER_SCALE
}

/// Free central propagator tabulated on a uniform fine grid, evaluable at
/// any time in range by a partial RK4 step from the nearest node below.
#[derive(Debug, Clone)]
pub struct FreeCentral {
    spec: SystemSpec,
    h: f64,
    nodes: Vec<Matrix2<f64>>,
}

impl FreeCentral {
    pub fn new(spec: &SystemSpec, t_end: f64) -> Result<Self> {
        let h_nominal = free_central_step(spec);
        let n = substeps(t_end.max(h_nominal), h_nominal, 0.0)?;
        let h = t_end.max(h_nominal) / n as f64;
        let grid: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
        let opts = IntegratorOptions {
            max_step: Some(h),
            ..Default::default()
        };
        let nodes = free_central_r11(spec, &grid, &opts)?;
        Ok(Self {
            spec: spec.clone(),
            h,
            nodes,
        })
    }

    pub fn at(&self, t: f64) -> Matrix2<f64> {
        let last = self.nodes.len() - 1;
        let i = ((t / self.h).floor().max(0.0) as usize).min(last);
        let t_i = i as f64 * self.h;
        let dt = t - t_i;
        if dt == 0.0 {
            self.nodes[i]
        } else {
            central_rk4(&self.spec, t_i, &self.nodes[i], dt)
        }
    }
}

/// Convenience for callers that need only 𝒜12/𝒜21 without a full spec.
pub fn coupling_blocks<C: Coupling + ?Sized>(c: &C, t: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let k = c.at(t);
    (a12_layout(&k), a21_layout(&k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::TimeProfile;
    use crate::system::{BathSpec, Couplings};

    fn uncoupled(omegas: Vec<f64>) -> SystemSpec {
        let n = omegas.len();
        SystemSpec {
            omega: TimeProfile::constant(1.0),
            omega0: 1.0,
            bath: BathSpec {
                omegas,
                couplings: Couplings::random(n, 0.3, &mut rand::rng()),
                nu: TimeProfile::constant(0.0),
                temperature: 0.0,
                f_override: None,
            },
            t_max: 10.0,
        }
    }

    #[test]
    fn expm_bath_examples() {
        let m = expm_bath(&[2.0], PI / 4.0);
        assert!((m - DMatrix::from_row_slice(2, 2, &[0.0, -2.0, 0.5, 0.0])).amax() < 1e-15);
        assert_eq!(expm_bath(&[1.0, 3.0, 0.4], 0.0), DMatrix::identity(6, 6));
    }

    #[test]
    fn decoupled_quarter_period() {
        let spec = uncoupled(vec![0.5, 2.0]);
        let traj = integrate_r(&spec, &[0.0, PI / 2.0], &Default::default()).unwrap();
        let end = &traj[1];
        assert!((end.r11 - Matrix2::new(0.0, -1.0, 1.0, 0.0)).amax() < 1e-10);
        assert_eq!(end.r12.amax(), 0.0);
        assert_eq!(end.r21.amax(), 0.0);
        assert!((&end.r22 - expm_bath(&[0.5, 2.0], PI / 2.0)).amax() < 1e-8);
    }

    #[test]
    fn free_central_is_rotation() {
        let spec = uncoupled(vec![1.0]);
        let grid = uniform_grid(5.0, 11);
        let r = free_central_r11(&spec, &grid, &Default::default()).unwrap();
        for (t, m) in grid.iter().zip(&r) {
            let (s, c) = t.sin_cos();
            assert!((m - Matrix2::new(c, -s, s, c)).amax() < 1e-8);
        }
        let fc = FreeCentral::new(&spec, 5.0).unwrap();
        let (s, c) = 2.345f64.sin_cos();
        assert!((fc.at(2.345) - Matrix2::new(c, -s, s, c)).amax() < 1e-8);
    }

    #[test]
    fn bad_grid_rejected() {
        let spec = uncoupled(vec![1.0]);
        assert!(integrate_r(&spec, &[0.1, 1.0], &Default::default()).is_err());
        assert!(integrate_r(&spec, &[0.0, 1.0, 1.0], &Default::default()).is_err());
        assert!(integrate_r(&spec, &[0.0, 11.0], &Default::default()).is_err());
    }

    #[test]
    fn huge_step_fails_with_time() {
        let mut spec = uncoupled(vec![3.0]);
        spec.bath.nu = TimeProfile::constant(1.0);
        let opts = IntegratorOptions {
            max_step: Some(2.0),
            ..Default::default()
        };
        let err = integrate_r(&spec, &uniform_grid(10.0, 6), &opts).unwrap_err();
        assert!(err.is_numerical());
        match err {
            Error::Integration { time, .. } => assert!(time > 0.0),
            _ => unreachable!(),
        }
    }
}
