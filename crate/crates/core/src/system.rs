//! Full-system generator for the central oscillator plus bath.
//!
//! Phase-space ordering is `q = (p0, x0, p1..pN, x1..xN)`: momentum before
//! coordinate for the central pair, all bath momenta before all bath
//! coordinates. Every matrix in this crate uses that ordering.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::TimeProfile;

/// Coupling coefficients `(u, v, g, z)` for each bath mode, in the
/// interaction `z p_k p0 + v p_k x0 + u x_k p0 + g x_k x0`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Couplings {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub g: Vec<f64>,
    pub z: Vec<f64>,
}

impl Couplings {
    pub fn zeros(n: usize) -> Self {
        Self {
            u: vec![0.0; n],
            v: vec![0.0; n],
            g: vec![0.0; n],
            z: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Independent uniform draws in `[-scale, scale]`.
    pub fn random<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> Self {
        let mut draw = || (0..n).map(|_| rng.random_range(-scale..=scale)).collect::<Vec<_>>();
        Self {
            u: draw(),
            v: draw(),
            g: draw(),
            z: draw(),
        }
    }

    /// Every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let s = |x: &Vec<f64>| x.iter().map(|c| c * factor).collect();
        Self {
            u: s(&self.u),
            v: s(&self.v),
            g: s(&self.g),
            z: s(&self.z),
        }
    }

    /// Σ_k (U_k V_k − G_k Z_k).
    pub fn dissipative_sum(&self) -> f64 {
        (0..self.len())
            .map(|k| self.u[k] * self.v[k] - self.g[k] * self.z[k])
            .sum()
    }
}

/// Complex RWA amplitudes with independent standard normal real and
/// imaginary parts, times `scale`.
pub fn random_rho<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> Vec<Complex64> {
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im) * scale
        })
        .collect()
}

/// `n` frequencies spread uniformly over `[lo, hi]` (endpoints included).
pub fn uniform_frequencies(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Maps RWA amplitudes ρ_k (interaction ν(t)Σ(ρ_k a0 a_k† + h.c.)) onto
/// the bilinear constants. Returns `(U, V, G, Z)` packed in [`Couplings`].
pub fn rwa_couplings(rho: &[Complex64], omega0: f64, omegas: &[f64]) -> Result<Couplings> {
    if !(omega0 > 0.0) {
        return Err(Error::invalid("omega0", "must be > 0"));
    }
    if rho.len() != omegas.len() {
        return Err(Error::invalid("rho", "length must match the bath size"));
    }
    let mut c = Couplings::zeros(rho.len());
    for (k, (r, &w)) in rho.iter().zip(omegas).enumerate() {
        if !(w > 0.0) {
            return Err(Error::invalid(format!("omegas[{k}]"), "must be > 0"));
        }
        let root = (omega0 * w).sqrt();
        c.g[k] = root * r.re;
        c.z[k] = r.re / root;
        c.v[k] = (omega0 / w).sqrt() * r.im;
        c.u[k] = -(w / omega0).sqrt() * r.im;
    }
    Ok(c)
}

/// Bath of oscillators with couplings that share one envelope ν(t):
/// `u_k(t) = ν(t) U_k` and likewise for `v, g, z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub omegas: Vec<f64>,
    pub couplings: Couplings,
    pub nu: TimeProfile,
    /// Reservoir temperature in units of ħω0/k_B.
    pub temperature: f64,
    /// Explicit per-mode `f_i`, replacing the thermal values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_override: Option<Vec<f64>>,
}

impl BathSpec {
    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        for (k, w) in self.omegas.iter().enumerate() {
            if !(*w > 0.0 && w.is_finite()) {
                return Err(Error::invalid(format!("bath.omegas[{k}]"), "must be > 0"));
            }
        }
        let c = &self.couplings;
        for (name, seq) in [("U", &c.u), ("V", &c.v), ("G", &c.g), ("Z", &c.z)] {
            if seq.len() != n {
                return Err(Error::invalid(
                    format!("bath.{name}"),
                    format!("expected {n} values, got {}", seq.len()),
                ));
            }
            if seq.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("bath.{name}"), "must be finite"));
            }
        }
        self.nu.validate("bath.nu")?;
        if self.nu.bounds().0 < 0.0 {
            return Err(Error::invalid("bath.nu", "coupling envelope must be >= 0"));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::invalid("bath.temperature", "must be >= 0"));
        }
        if let Some(f) = &self.f_override {
            if f.len() != n {
                return Err(Error::invalid("bath.f", format!("expected {n} values")));
            }
            if f.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                return Err(Error::invalid("bath.f", "entries must be > 0"));
            }
        }
        Ok(())
    }

    /// Per-mode `f_i`: coth(ω_i/2T)/(2ω_i), or 1/(2ω_i) at T = 0.
    pub fn f_factors(&self) -> Vec<f64> {
        if let Some(f) = &self.f_override {
            return f.clone();
        }
        self.omegas
            .iter()
            .map(|&w| thermal_g(w, self.temperature) / (2.0 * w))
            .collect()
    }

    pub fn max_frequency(&self) -> f64 {
        self.omegas.iter().copied().fold(0.0, f64::max)
    }
}

/// coth(ω/2T), with the T → 0 limit equal to one.
pub fn thermal_g(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return 1.0;
    }
    let x = omega / (2.0 * temperature);
    if x > 40.0 {
        1.0
    } else {
        1.0 / x.tanh()
    }
}

/// Reservoir covariance `diag(ω_i² f_i) ⊕ diag(f_i)` (momenta, then coordinates).
pub fn thermal_f(bath: &BathSpec) -> DMatrix<f64> {
    let n = bath.len();
    let f = bath.f_factors();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        m[(k, k)] = bath.omegas[k] * bath.omegas[k] * f[k];
        m[(n + k, n + k)] = f[k];
    }
    m
}

/// Time-dependent coupling coefficients of an arbitrary bilinear interaction.
pub trait Coupling: Sync {
    fn modes(&self) -> usize;
    /// `(u_k(t), v_k(t), g_k(t), z_k(t))` for all modes.
    fn at(&self, t: f64) -> Couplings;
    /// ∫_{t0}^{t1} of every coefficient, when a closed form is available.
    fn integral(&self, _t0: f64, _t1: f64) -> Option<Couplings> {
        None
    }
    /// Sorted points in `(t0, t1)` where some coefficient may be non-smooth.
    fn breakpoints(&self, _t0: f64, _t1: f64) -> Vec<f64> {
        vec![]
    }
}

impl Coupling for BathSpec {
    fn modes(&self) -> usize {
        self.len()
    }
    fn at(&self, t: f64) -> Couplings {
        self.couplings.scaled(self.nu.value(t))
    }
    fn integral(&self, t0: f64, t1: f64) -> Option<Couplings> {
        self.nu.integral(t0, t1).ok().map(|i| self.couplings.scaled(i))
    }
    fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        self.nu.breakpoints(t0, t1)
    }
}

/// Per-mode coupling profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeProfiles {
    pub u: TimeProfile,
    pub v: TimeProfile,
    pub g: TimeProfile,
    pub z: TimeProfile,
}

/// Coupling in which every coefficient has its own time dependence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralCoupling {
    pub modes: Vec<ModeProfiles>,
}

impl Coupling for GeneralCoupling {
    fn modes(&self) -> usize {
        self.modes.len()
    }
    fn at(&self, t: f64) -> Couplings {
        Couplings {
            u: self.modes.iter().map(|m| m.u.value(t)).collect(),
            v: self.modes.iter().map(|m| m.v.value(t)).collect(),
            g: self.modes.iter().map(|m| m.g.value(t)).collect(),
            z: self.modes.iter().map(|m| m.z.value(t)).collect(),
        }
    }
    fn integral(&self, t0: f64, t1: f64) -> Option<Couplings> {
        let int = |f: fn(&ModeProfiles) -> &TimeProfile| {
            self.modes
                .iter()
                .map(|m| f(m).integral(t0, t1).ok())
                .collect::<Option<Vec<_>>>()
        };
        Some(Couplings {
            u: int(|m| &m.u)?,
            v: int(|m| &m.v)?,
            g: int(|m| &m.g)?,
            z: int(|m| &m.z)?,
        })
    }
    fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .modes
            .iter()
            .flat_map(|m| [&m.u, &m.v, &m.g, &m.z])
            .flat_map(|p| p.breakpoints(t0, t1))
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

/// Central oscillator with frequency ω(t) coupled to a bath.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub omega: TimeProfile,
    pub omega0: f64,
    pub bath: BathSpec,
    pub t_max: f64,
}

impl SystemSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return Err(Error::invalid("omega0", "must be > 0"));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::invalid("t_max", "must be > 0"));
        }
        self.omega.validate("omega")?;
        let (lo, hi) = self.omega.domain();
        if lo > 0.0 || hi < self.t_max {
            return Err(Error::invalid("omega", "profile must cover [0, t_max]"));
        }
        if self.omega.bounds().0 <= 0.0 {
            return Err(Error::invalid("omega", "frequency must stay > 0"));
        }
        let w0 = self.omega.value(0.0);
        if (w0 - self.omega0).abs() > 1e-9 * self.omega0 {
            return Err(Error::invalid(
                "omega",
                format!("omega(0) = {w0} differs from omega0 = {}", self.omega0),
            ));
        }
        self.bath.validate()?;
        let (lo, hi) = self.bath.nu.domain();
        if lo > 0.0 || hi < self.t_max {
            return Err(Error::invalid("bath.nu", "profile must cover [0, t_max]"));
        }
        Ok(())
    }

    pub fn modes(&self) -> usize {
        self.bath.len()
    }

    /// Largest frequency present: bath modes or the upper bound of ω(t).
    pub fn max_frequency(&self) -> f64 {
        self.bath.max_frequency().max(self.omega.bounds().1)
    }
}

/// 𝒜11 = [[0, −ω²(t)], [1, 0]].
pub fn build_a11(spec: &SystemSpec, t: f64) -> Matrix2<f64> {
    central_generator(spec.omega.value(t))
}

pub(crate) fn central_generator(omega: f64) -> Matrix2<f64> {
    Matrix2::new(0.0, -omega * omega, 1.0, 0.0)
}

/// 𝒜22: `−diag(ω_i²)` in the upper-right block, identity in the lower-left.
pub fn build_a22(bath: &BathSpec) -> DMatrix<f64> {
    let n = bath.len();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for (k, w) in bath.omegas.iter().enumerate() {
        m[(k, n + k)] = -w * w;
        m[(n + k, k)] = 1.0;
    }
    m
}

/// 2×2N block: row p0 = (−v, −g), row x0 = (z, u).
pub fn a12_layout(c: &Couplings) -> DMatrix<f64> {
    let n = c.len();
    let mut m = DMatrix::zeros(2, 2 * n);
    for k in 0..n {
        m[(0, k)] = -c.v[k];
        m[(0, n + k)] = -c.g[k];
        m[(1, k)] = c.z[k];
        m[(1, n + k)] = c.u[k];
    }
    m
}

/// 2N×2 block: row p_k = (−u_k, −g_k), row x_k = (z_k, v_k).
pub fn a21_layout(c: &Couplings) -> DMatrix<f64> {
    let n = c.len();
    let mut m = DMatrix::zeros(2 * n, 2);
    for k in 0..n {
        m[(k, 0)] = -c.u[k];
        m[(k, 1)] = -c.g[k];
        m[(n + k, 0)] = c.z[k];
        m[(n + k, 1)] = c.v[k];
    }
    m
}

pub fn build_a12<C: Coupling + ?Sized>(coupling: &C, t: f64) -> DMatrix<f64> {
    a12_layout(&coupling.at(t))
}

pub fn build_a21<C: Coupling + ?Sized>(coupling: &C, t: f64) -> DMatrix<f64> {
    a21_layout(&coupling.at(t))
}

/// Blocks of the generator at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorBlocks {
    pub a11: Matrix2<f64>,
    pub a12: DMatrix<f64>,
    pub a21: DMatrix<f64>,
    pub a22: DMatrix<f64>,
}

impl GeneratorBlocks {
    pub fn new(spec: &SystemSpec, t: f64) -> Self {
        let c = spec.bath.at(t);
        Self {
            a11: build_a11(spec, t),
            a12: a12_layout(&c),
            a21: a21_layout(&c),
            a22: build_a22(&spec.bath),
        }
    }

    /// The assembled (2N+2)×(2N+2) generator.
    pub fn assemble(&self) -> DMatrix<f64> {
        let m = self.a22.nrows() + 2;
        let mut a = DMatrix::zeros(m, m);
        a.fixed_view_mut::<2, 2>(0, 0).copy_from(&self.a11);
        a.view_mut((0, 2), (2, m - 2)).copy_from(&self.a12);
        a.view_mut((2, 0), (m - 2, 2)).copy_from(&self.a21);
        a.view_mut((2, 2), (m - 2, m - 2)).copy_from(&self.a22);
        a
    }
}

/// Full generator 𝒜(t).
pub fn full_generator(spec: &SystemSpec, t: f64) -> DMatrix<f64> {
    GeneratorBlocks::new(spec, t).assemble()
}

/// Canonical form J for `n` bath modes: `[[0,−1],[1,0]]` on the central
/// pair and `[[0,−I],[I,0]]` on the bath, so that q̇ = J ∇H.
pub fn symplectic_unit(n: usize) -> DMatrix<f64> {
    let m = 2 * n + 2;
    let mut j = DMatrix::zeros(m, m);
    j[(0, 1)] = -1.0;
    j[(1, 0)] = 1.0;
    for k in 0..n {
        j[(2 + k, 2 + n + k)] = -1.0;
        j[(2 + n + k, 2 + k)] = 1.0;
    }
    j
}
