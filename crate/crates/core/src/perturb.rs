//! First-order perturbation theory and the short-time closed forms.
//!
//! Sign bookkeeping: with the drift written as `[[−γp, −ω²], [1, −γx]]` in
//! (p, x) order, the dissipative part μ = A − 𝒜11 maps to damping rates as
//! `γp = −μ11`, `γx = −μ22`.

use nalgebra::{DMatrix, Matrix2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::profiles::TimeProfile;
use crate::propagate::{expm_bath, FreeCentral};
use crate::quad::Quadrature;
use crate::reduce::{noise_matrix, NoiseMatrix};
use crate::system::{a12_layout, a21_layout, build_a11, thermal_g, BathSpec, Coupling, SystemSpec};

/// Dissipative part of the drift, μ = 𝒜12(t)∫₀ᵗ𝒜21(τ)dτ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MuMatrix {
    pub t: f64,
    pub mu11: f64,
    pub mu12: f64,
    pub mu21: f64,
    pub mu22: f64,
}

impl MuMatrix {
    pub fn from_matrix(t: f64, m: &Matrix2<f64>) -> Self {
        Self {
            t,
            mu11: m[(0, 0)],
            mu12: m[(0, 1)],
            mu21: m[(1, 0)],
            mu22: m[(1, 1)],
        }
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.mu11, self.mu12, self.mu21, self.mu22)
    }

    /// max(|μ12|, |μ21|, |μ11 − μ22|).
    pub fn asymmetry(&self) -> f64 {
        self.mu12
            .abs()
            .max(self.mu21.abs())
            .max((self.mu11 - self.mu22).abs())
    }

    /// γp = −μ11.
    pub fn gamma_p(&self) -> f64 {
        -self.mu11
    }

    /// γx = −μ22.
    pub fn gamma_x(&self) -> f64 {
        -self.mu22
    }
}

fn to_matrix2(m: &DMatrix<f64>) -> Matrix2<f64> {
    Matrix2::from_iterator(m.iter().copied())
}

fn integrated_a21_quadrature<C: Coupling + ?Sized>(c: &C, t: f64, quad: &Quadrature) -> DMatrix<f64> {
    let (lo, hi) = if t >= 0.0 { (0.0, t) } else { (t, 0.0) };
    let mut edges = vec![lo];
    edges.extend(c.breakpoints(lo, hi));
    edges.push(hi);
    let mut total = DMatrix::zeros(2 * c.modes(), 2);
    for w in edges.windows(2) {
        total += quad.integrate(|tau| a21_layout(&c.at(tau)), w[0], w[1]).0;
    }
    if t >= 0.0 {
        total
    } else {
        -total
    }
}

/// μ(t) from the element integrals. Uses the coupling's closed-form
/// integrals when it has them, quadrature otherwise.
pub fn mu_elements<C: Coupling + ?Sized>(c: &C, t: f64) -> MuMatrix {
    let int = match c.integral(0.0, t) {
        Some(k) => a21_layout(&k),
        None => integrated_a21_quadrature(c, t, &Quadrature::default()),
    };
    MuMatrix::from_matrix(t, &to_matrix2(&(a12_layout(&c.at(t)) * int)))
}

/// μ(t) with ∫𝒜21 always evaluated by adaptive quadrature.
pub fn mu_elements_quadrature<C: Coupling + ?Sized>(c: &C, t: f64, quad: &Quadrature) -> MuMatrix {
    let int = integrated_a21_quadrature(c, t, quad);
    MuMatrix::from_matrix(t, &to_matrix2(&(a12_layout(&c.at(t)) * int)))
}

/// Closed form for a single-factor coupling: μ11 = μ22 = λ(t)Σ(U V − G Z),
/// μ12 = μ21 = 0.
pub fn mu_single_factor(bath: &BathSpec, t: f64) -> Result<MuMatrix> {
    let m = bath.nu.lambda_factor(t)? * bath.couplings.dissipative_sum();
    Ok(MuMatrix {
        t,
        mu11: m,
        mu12: 0.0,
        mu21: 0.0,
        mu22: m,
    })
}

/// A⁽¹⁾(t) = 𝒜11(t) + μ(t).
pub fn drift_first_order(spec: &SystemSpec, t: f64) -> Matrix2<f64> {
    build_a11(spec, t) + mu_elements(&spec.bath, t).matrix()
}

/// ∫₀ᵗ 𝒜12(τ)dτ, which is also the short-time approximation of R12.
pub fn r12_short_time<C: Coupling + ?Sized>(c: &C, t: f64) -> DMatrix<f64> {
    match c.integral(0.0, t) {
        Some(k) => a12_layout(&k),
        None => {
            Quadrature::with_tol(1e-10)
                .integrate(|tau| a12_layout(&c.at(tau)), 0.0, t)
                .0
        }
    }
}

/// First-order R21(t) = exp(𝒜22 t)∫₀ᵗ exp(−𝒜22 τ)𝒜21(τ)R11⁽⁰⁾(τ)dτ.
pub fn r21_first_order(spec: &SystemSpec, t: f64) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let n = spec.modes();
    if t == 0.0 {
        return Ok(DMatrix::zeros(2 * n, 2));
    }
    let free = FreeCentral::new(spec, t)?;
    let omegas = &spec.bath.omegas;
    let integrand = |tau: f64| {
        let r11 = free.at(tau);
        let r11 = DMatrix::from_iterator(2, 2, r11.iter().copied());
        expm_bath(omegas, -tau) * a21_layout(&spec.bath.at(tau)) * r11
    };
    let (int, _) = Quadrature::with_tol(1e-10).integrate(integrand, 0.0, t);
    Ok(expm_bath(omegas, t) * int)
}

/// First-order R12(t) = R11⁽⁰⁾(t)∫₀ᵗ R11⁽⁰⁾(τ)⁻¹𝒜12(τ)exp(𝒜22 τ)dτ.
pub fn r12_first_order(spec: &SystemSpec, t: f64) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let n = spec.modes();
    if t == 0.0 {
        return Ok(DMatrix::zeros(2, 2 * n));
    }
    let free = FreeCentral::new(spec, t)?;
    let omegas = &spec.bath.omegas;
    let integrand = |tau: f64| {
        // det R11⁽⁰⁾ = 1, so the inverse is the adjugate
        let r = free.at(tau);
        let inv = DMatrix::from_row_slice(2, 2, &[r[(1, 1)], -r[(0, 1)], -r[(1, 0)], r[(0, 0)]]);
        inv * a12_layout(&spec.bath.at(tau)) * expm_bath(omegas, tau)
    };
    let (int, _) = Quadrature::with_tol(1e-10).integrate(integrand, 0.0, t);
    let r = free.at(t);
    Ok(DMatrix::from_iterator(2, 2, r.iter().copied()) * int)
}

/// 2D = 𝒜12(t) F (∫₀ᵗ𝒜12 dτ)ᵀ + transpose.
pub fn diffusion_first_order<C: Coupling + ?Sized>(c: &C, f: &DMatrix<f64>, t: f64) -> Matrix2<f64> {
    let k = to_matrix2(&(a12_layout(&c.at(t)) * f * r12_short_time(c, t).transpose()));
    (k + k.transpose()) * 0.5
}

/// Closed-form short-time diffusion for a single-factor coupling and a
/// diagonal reservoir matrix `F = diag(a) ⊕ diag(b)`:
/// D11 = λΣ(a V² + b G²), D22 = λΣ(a Z² + b U²), D12 = −λΣ(a V Z + b G U).
/// For a thermal reservoir `a = ω²f`, `b = f`.
pub fn d_closed_form(bath: &BathSpec, f: &DMatrix<f64>, t: f64) -> Result<Matrix2<f64>> {
    let n = bath.len();
    if f.nrows() != 2 * n || f.ncols() != 2 * n {
        return Err(Error::invalid("F", format!("expected {0}x{0}", 2 * n)));
    }
    for i in 0..2 * n {
        for j in 0..2 * n {
            if i != j && f[(i, j)] != 0.0 {
                return Err(Error::UnsupportedForm(
                    "closed-form diffusion needs a diagonal reservoir matrix".into(),
                ));
            }
        }
    }
    let lambda = bath.nu.lambda_factor(t)?;
    let c = &bath.couplings;
    let (mut d11, mut d22, mut d12) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let (a, b) = (f[(k, k)], f[(n + k, n + k)]);
        d11 += a * c.v[k] * c.v[k] + b * c.g[k] * c.g[k];
        d22 += a * c.z[k] * c.z[k] + b * c.u[k] * c.u[k];
        d12 += a * c.v[k] * c.z[k] + b * c.g[k] * c.u[k];
    }
    Ok(Matrix2::new(lambda * d11, -lambda * d12, -lambda * d12, lambda * d22))
}

/// G = coth(ω0/2T), equal to one at T = 0.
pub fn g_from_temperature(omega0: f64, temperature: f64) -> Result<f64> {
    if !(temperature >= 0.0) {
        return Err(Error::invalid("temperature", "must be >= 0"));
    }
    Ok(thermal_g(omega0, temperature))
}

/// Phenomenological Langevin noise coefficients built on a total damping
/// rate γ(t) with asymmetry `y`:
/// γp = (1+y)γ, γx = (1−y)γ, χ_pp = γp ω0 G, χ_xx = γx G/ω0,
/// Im χ_xp = `xp`·γ, Im χ_px = `px`·γ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseSet {
    pub gamma: TimeProfile,
    pub y: f64,
    /// Thermal factor G.
    pub g: f64,
    pub omega0: f64,
    pub xp: f64,
    pub px: f64,
}

impl NoiseSet {
    /// Standard set for asymmetry `y`; commutator-preserving by construction.
    pub fn phenomenological(gamma: TimeProfile, y: f64, omega0: f64, g: f64) -> Result<Self> {
        if !(g >= 1.0) {
            return Err(Error::UnphysicalTemperature(g));
        }
        if !(omega0 > 0.0) {
            return Err(Error::invalid("omega0", "must be > 0"));
        }
        if !(-1.0..=1.0).contains(&y) {
            return Err(Error::invalid("y", "must lie in [-1, 1]"));
        }
        gamma.validate("gamma")?;
        if gamma.bounds().0 < 0.0 {
            return Err(Error::invalid("gamma", "must be >= 0"));
        }
        Ok(Self {
            gamma,
            y,
            g,
            omega0,
            xp: 1.0,
            px: -1.0,
        })
    }

    pub fn gamma_p(&self, t: f64) -> f64 {
        (1.0 + self.y) * self.gamma.value(t)
    }

    pub fn gamma_x(&self, t: f64) -> f64 {
        (1.0 - self.y) * self.gamma.value(t)
    }

    pub fn chi_pp(&self, t: f64) -> f64 {
        self.gamma_p(t) * self.omega0 * self.g
    }

    pub fn chi_xx(&self, t: f64) -> f64 {
        self.gamma_x(t) * self.g / self.omega0
    }

    /// Imaginary part of χ_xp.
    pub fn chi_xp(&self, t: f64) -> f64 {
        self.xp * self.gamma.value(t)
    }

    /// Imaginary part of χ_px.
    pub fn chi_px(&self, t: f64) -> f64 {
        self.px * self.gamma.value(t)
    }

    /// Whether χ_xp − χ_px = 2iγ holds identically.
    pub fn preserves_commutator(&self) -> bool {
        self.xp - self.px == 2.0
    }

    /// D = diag(χ_pp, χ_xx)/2 in (p, x) order.
    pub fn diffusion(&self, t: f64) -> Matrix2<f64> {
        Matrix2::new(0.5 * self.chi_pp(t), 0.0, 0.0, 0.5 * self.chi_xx(t))
    }

    pub fn noise_matrix(&self, t: f64) -> NoiseMatrix {
        let mut x = noise_matrix(&self.diffusion(t), 0.0);
        let i = num_complex::Complex64::new(0.0, 1.0);
        x.0[(1, 0)] += i * self.chi_xp(t);
        x.0[(0, 1)] += i * self.chi_px(t);
        x
    }
}

/// Minimum-noise symmetric set: γx = γp = γ, χ_xp = −χ_px = iγ,
/// χ_pp = ω0²χ_xx = γω0G.
pub fn min_noise_set(gamma: TimeProfile, omega0: f64, g: f64) -> Result<NoiseSet> {
    NoiseSet::phenomenological(gamma, 0.0, omega0, g)
}

/// Least-squares slope of log(gap) against log(ε).
pub fn fitted_order(epsilons: &[f64], gaps: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = epsilons
        .iter()
        .zip(gaps)
        .filter(|(e, g)| **e > 0.0 && **g > 0.0)
        .map(|(e, g)| (e.ln(), g.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{rwa_couplings, Couplings, GeneralCoupling, ModeProfiles};
    use num_complex::Complex64;

    fn bath(c: Couplings, omegas: Vec<f64>, nu: TimeProfile) -> BathSpec {
        BathSpec {
            omegas,
            couplings: c,
            nu,
            temperature: 0.0,
            f_override: None,
        }
    }

    fn one(u: f64, v: f64, g: f64, z: f64) -> Couplings {
        Couplings {
            u: vec![u],
            v: vec![v],
            g: vec![g],
            z: vec![z],
        }
    }

    #[test]
    fn general_coupling_mu12() {
        let t = 1.7;
        let c = GeneralCoupling {
            modes: vec![ModeProfiles {
                u: TimeProfile::constant(0.0),
                v: TimeProfile::PiecewiseLinear {
                    times: vec![0.0, 10.0],
                    values: vec![0.0, 10.0],
                },
                g: TimeProfile::constant(1.0),
                z: TimeProfile::constant(0.0),
            }],
        };
        for mu in [mu_elements(&c, t), mu_elements_quadrature(&c, t, &Quadrature::default())] {
            assert!((mu.mu12 - t * t / 2.0).abs() < 1e-12);
            assert!(mu.mu11.abs() < 1e-15 && mu.mu21.abs() < 1e-15 && mu.mu22.abs() < 1e-15);
        }
    }

    #[test]
    fn factorized_unit_mu() {
        let b = bath(one(1.0, 1.0, 0.0, 0.0), vec![1.0], TimeProfile::constant(1.0));
        let mu = mu_elements(&b, 2.5);
        assert!((mu.mu11 - 2.5).abs() < 1e-15 && (mu.mu22 - 2.5).abs() < 1e-15);
        assert_eq!((mu.mu12, mu.mu21), (0.0, 0.0));
        assert_eq!(mu_single_factor(&b, 2.5).unwrap().mu11, 2.5);
    }

    #[test]
    fn rwa_mu_is_minus_lambda_rho_squared() {
        let rho = [Complex64::new(0.3, -0.2), Complex64::new(-0.1, 0.5)];
        let omegas = vec![0.7, 1.9];
        let c = rwa_couplings(&rho, 1.0, &omegas).unwrap();
        let b = bath(c, omegas, TimeProfile::exp_decay(1.0, 0.0, 0.8));
        let t = 0.6;
        let lambda = b.nu.lambda_factor(t).unwrap();
        let expected = -lambda * rho.iter().map(|r| r.norm_sqr()).sum::<f64>();
        let mu = mu_elements_quadrature(&b, t, &Quadrature::default());
        assert!((mu.mu11 - expected).abs() < 1e-12);
        assert!((mu.mu22 - expected).abs() < 1e-12);
        assert!((mu_single_factor(&b, t).unwrap().mu11 - expected).abs() < 1e-14);
    }

    #[test]
    fn r12_short_time_constant() {
        let b = bath(one(0.0, 1.0, 0.0, 0.0), vec![1.0], TimeProfile::constant(1.0));
        let r = r12_short_time(&b, 2.0);
        assert_eq!(r, DMatrix::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn r12_short_time_pulse_area() {
        let c = one(0.3, -0.2, 0.5, 0.1);
        let b = bath(c.clone(), vec![1.0], TimeProfile::gaussian(2.0, 1.0, 0.05));
        let area = 2.0 * 0.05 * (2.0 * std::f64::consts::PI).sqrt();
        let r = r12_short_time(&b, 3.0);
        assert!((r - a12_layout(&c.scaled(area))).amax() < 1e-12);
    }

    #[test]
    fn zero_coupling_first_order() {
        let b = bath(one(0.3, -0.2, 0.5, 0.1), vec![1.3], TimeProfile::constant(0.0));
        let spec = SystemSpec {
            omega: TimeProfile::constant(1.0),
            omega0: 1.0,
            bath: b,
            t_max: 3.0,
        };
        assert_eq!(r21_first_order(&spec, 2.0).unwrap().amax(), 0.0);
        assert_eq!(drift_first_order(&spec, 2.0), build_a11(&spec, 2.0));
        let f = DMatrix::identity(2, 2);
        assert_eq!(diffusion_first_order(&spec.bath, &f, 2.0), Matrix2::zeros());
    }

    #[test]
    fn r21_first_order_small_t() {
        let c = one(0.3, -0.2, 0.5, 0.1);
        let spec = SystemSpec {
            omega: TimeProfile::constant(1.0),
            omega0: 1.0,
            bath: bath(c.clone(), vec![1.3], TimeProfile::constant(1.0)),
            t_max: 1.0,
        };
        let t = 1e-3;
        let r = r21_first_order(&spec, t).unwrap();
        assert!((r / t - a21_layout(&c)).amax() < 2e-3);
    }

    #[test]
    fn diffusion_single_mode() {
        let mut b = bath(one(0.0, 1.0, 0.0, 0.0), vec![1.0], TimeProfile::constant(1.0));
        b.f_override = Some(vec![1.0]);
        let f = crate::system::thermal_f(&b);
        let t = 1.3;
        let d = diffusion_first_order(&b, &f, t);
        assert!((d - Matrix2::new(t, 0.0, 0.0, 0.0)).amax() < 1e-15);
        assert!((d_closed_form(&b, &f, t).unwrap() - d).amax() < 1e-15);
    }

    #[test]
    fn closed_form_examples() {
        let b = bath(Couplings::zeros(2), vec![1.0, 2.0], TimeProfile::constant(1.0));
        let f = crate::system::thermal_f(&b);
        assert_eq!(d_closed_form(&b, &f, 1.0).unwrap(), Matrix2::zeros());
        let c = rwa_couplings(&[Complex64::new(1.0, 0.0)], 1.0, &[1.0]).unwrap();
        let b = bath(c, vec![1.0], TimeProfile::constant(1.0));
        let f = crate::system::thermal_f(&b);
        let d = d_closed_form(&b, &f, 2.0).unwrap();
        assert!((d[(0, 0)] - 1.0).abs() < 1e-15);
        let mut dense = f.clone();
        dense[(0, 1)] = 0.1;
        assert!(matches!(d_closed_form(&b, &dense, 1.0), Err(Error::UnsupportedForm(_))));
    }

    #[test]
    fn min_noise_examples() {
        let s = min_noise_set(TimeProfile::constant(0.1), 1.0, 1.0).unwrap();
        assert_eq!((s.chi_xx(0.0), s.chi_pp(0.0), s.chi_xp(0.0)), (0.1, 0.1, 0.1));
        assert_eq!(s.gamma_x(3.0), s.gamma_p(3.0));
        assert!(s.preserves_commutator());
        assert!(matches!(
            min_noise_set(TimeProfile::constant(0.1), 1.0, 0.9),
            Err(Error::UnphysicalTemperature(_))
        ));
        assert_eq!(g_from_temperature(1.0, 0.0).unwrap(), 1.0);
        assert!((g_from_temperature(1.0, 0.5).unwrap() - 1.313_035_285_5).abs() < 1e-9);
    }

    #[test]
    fn noise_set_matrix_matches_reduce() {
        let s = min_noise_set(TimeProfile::constant(0.1), 1.0, 1.4).unwrap();
        let x = s.noise_matrix(0.0);
        let y = noise_matrix(&s.diffusion(0.0), 0.1);
        assert!((x.0 - y.0).iter().all(|c| c.norm() < 1e-16));
    }

    #[test]
    fn order_of_power_law() {
        let eps = [0.2, 0.1, 0.05];
        let gaps: Vec<f64> = eps.iter().map(|e| 3.0 * e * e).collect();
        assert!((fitted_order(&eps, &gaps) - 2.0).abs() < 1e-12);
    }
}
