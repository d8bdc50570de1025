//! Short-time limit: exact drift extraction against the single-factor
//! closed form over a ladder of ε = ω_max·τ.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ScenarioReport, Table, Verdict};
use crate::error::{Error, Result};
use crate::exec::{map_slice, Execution};
use crate::perturb::{fitted_order, mu_elements, mu_elements_quadrature, mu_single_factor, MuMatrix};
use crate::profiles::TimeProfile;
use crate::propagate::{integrate_r, uniform_grid, IntegratorOptions};
use crate::quad::Quadrature;
use crate::reduce::drift_exact;
use crate::system::{
    build_a11, random_rho, rwa_couplings, uniform_frequencies, BathSpec, Couplings, GeneralCoupling,
    ModeProfiles, SystemSpec,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShortTimeParams {
    pub modes: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    /// Scale of the complex RWA amplitudes.
    pub rho_scale: f64,
    /// Scale of the random counter-rotating admixture, relative to `rho_scale`.
    pub counter_rotating: f64,
    /// Peak of the coupling envelope ν.
    pub amplitude: f64,
    pub epsilons: Vec<f64>,
    /// Extraction window in units of the decay time τ.
    pub window: f64,
    pub points: usize,
    pub min_order: f64,
    pub reference_epsilon: f64,
    pub max_relative_mu11_gap: f64,
    pub closed_form_tolerance: f64,
    pub control_threshold: f64,
}

impl Default for ShortTimeParams {
    fn default() -> Self {
        Self {
            modes: 16,
            omega_min: 0.2,
            omega_max: 3.0,
            rho_scale: 0.3,
            counter_rotating: 0.3,
            amplitude: 1.0,
            epsilons: vec![0.2, 0.1, 0.05, 0.025],
            window: 4.0,
            points: 41,
            min_order: 1.0,
            reference_epsilon: 0.05,
            max_relative_mu11_gap: 0.1,
            closed_form_tolerance: 1e-12,
            control_threshold: 1e-3,
        }
    }
}

impl ShortTimeParams {
    pub fn validate(&self) -> Result<()> {
        if self.modes == 0 {
            return Err(Error::invalid("modes", "must be >= 1"));
        }
        if !(self.omega_min > 0.0 && self.omega_max >= self.omega_min) {
            return Err(Error::invalid("omega_max", "need 0 < omega_min <= omega_max"));
        }
        if self.epsilons.len() < 2 || self.epsilons.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::invalid("epsilons", "need at least two positive values"));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::invalid("epsilons", "ladder must be descending"));
        }
        if !(self.window > 0.0) || self.points < 2 {
            return Err(Error::invalid("window", "need window > 0 and points >= 2"));
        }
        if !(self.amplitude > 0.0) {
            return Err(Error::invalid("amplitude", "must be > 0"));
        }
        Ok(())
    }

    /// Bath frequencies and factorized couplings drawn from `seed`.
    pub fn bath(&self, seed: u64) -> Result<(Vec<f64>, Couplings)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let omegas = uniform_frequencies(self.modes, self.omega_min, self.omega_max);
        let rho = random_rho(self.modes, self.rho_scale, &mut rng);
        let mut c = rwa_couplings(&rho, 1.0, &omegas)?;
        let extra = Couplings::random(self.modes, self.counter_rotating * self.rho_scale, &mut rng);
        for k in 0..self.modes {
            c.u[k] += extra.u[k];
            c.v[k] += extra.v[k];
            c.g[k] += extra.g[k];
            c.z[k] += extra.z[k];
        }
        Ok((omegas, c))
    }

    /// System with envelope ν(t) = amplitude·exp(−t/τ), τ = ε/ω_max.
    pub fn system(&self, omegas: &[f64], c: &Couplings, epsilon: f64) -> SystemSpec {
        let tau = epsilon / self.omega_max;
        SystemSpec {
            omega: TimeProfile::constant(1.0),
            omega0: 1.0,
            bath: BathSpec {
                omegas: omegas.to_vec(),
                couplings: c.clone(),
                nu: TimeProfile::exp_decay(self.amplitude, 0.0, tau),
                temperature: 0.0,
                f_override: None,
            },
            t_max: self.window * tau,
        }
    }
}

/// Gap metrics at one ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergencePoint {
    pub epsilon: f64,
    pub max_mu12: f64,
    pub max_mu21: f64,
    pub max_diag_gap: f64,
    /// max|μ11_exact − μ11_closed| / max|μ11_closed|.
    pub relative_mu11_gap: f64,
    /// max over the window of |μ_quadrature − μ_closed|.
    pub closed_form_gap: f64,
    pub singular_points: usize,
}

/// Integrates the full system at one ε and measures the gaps.
pub fn convergence_point(
    params: &ShortTimeParams,
    omegas: &[f64],
    c: &Couplings,
    epsilon: f64,
) -> Result<ConvergencePoint> {
    let spec = params.system(omegas, c, epsilon);
    let grid = uniform_grid(spec.t_max, params.points);
    let traj = integrate_r(&spec, &grid, &IntegratorOptions::default())?;
    let drift = drift_exact(&traj, &spec);
    let quad = Quadrature::default();
    let mut p = ConvergencePoint {
        epsilon,
        max_mu12: 0.0,
        max_mu21: 0.0,
        max_diag_gap: 0.0,
        relative_mu11_gap: 0.0,
        closed_form_gap: 0.0,
        singular_points: drift.singular.len(),
    };
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for (t, a) in &drift.values {
        let exact = MuMatrix::from_matrix(*t, &(a - build_a11(&spec, *t)));
        let closed = mu_single_factor(&spec.bath, *t)?;
        let q = mu_elements_quadrature(&spec.bath, *t, &quad);
        p.max_mu12 = p.max_mu12.max(exact.mu12.abs());
        p.max_mu21 = p.max_mu21.max(exact.mu21.abs());
        p.max_diag_gap = p.max_diag_gap.max((exact.mu11 - exact.mu22).abs());
        p.closed_form_gap = p.closed_form_gap.max((q.matrix() - closed.matrix()).amax());
        num = num.max((exact.mu11 - closed.mu11).abs());
        den = den.max(closed.mu11.abs());
    }
    p.relative_mu11_gap = if den > 0.0 { num / den } else { f64::NAN };
    Ok(p)
}

/// Non-factorized control: each coefficient gets its own decay time.
/// Magnitudes of `c` are used so per-mode contributions to μ12 add up.
pub fn control_coupling(c: &Couplings, tau: f64, amplitude: f64) -> GeneralCoupling {
    let shape = |x: f64, s: f64| TimeProfile::exp_decay(amplitude * x.abs(), 0.0, tau * s);
    GeneralCoupling {
        modes: (0..c.len())
            .map(|k| ModeProfiles {
                u: shape(c.u[k], 1.0),
                v: shape(c.v[k], 0.5),
                g: shape(c.g[k], 2.0),
                z: shape(c.z[k], 1.5),
            })
            .collect(),
    }
}

fn descending(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

pub fn run_short_time_convergence(
    params: &ShortTimeParams,
    seed: u64,
    exec: Execution,
) -> Result<ScenarioReport> {
    params.validate()?;
    let mut report = ScenarioReport::new("short-time-convergence", params, seed);
    let (omegas, c) = params.bath(seed)?;
    let points = map_slice(exec, &params.epsilons, |&e| convergence_point(params, &omegas, &c, e))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut table = Table::new(
        "convergence",
        &[
            "epsilon",
            "max_mu12",
            "max_mu21",
            "max_mu11_minus_mu22",
            "relative_mu11_gap",
            "closed_form_gap",
            "control_mu12",
        ],
    );
    let mut control = vec![];
    for p in &points {
        let tau = p.epsilon / params.omega_max;
        let cc = control_coupling(&c, tau, params.amplitude);
        let grid = uniform_grid(params.window * tau, params.points);
        let m = grid
            .iter()
            .map(|&t| mu_elements(&cc, t).mu12.abs())
            .fold(0.0, f64::max);
        control.push(m);
        table.push(vec![
            p.epsilon,
            p.max_mu12,
            p.max_mu21,
            p.max_diag_gap,
            p.relative_mu11_gap,
            p.closed_form_gap,
            m,
        ]);
    }
    report.tables.push(table);

    let eps: Vec<f64> = points.iter().map(|p| p.epsilon).collect();
    let metrics: [(&str, Vec<f64>); 3] = [
        ("mu12", points.iter().map(|p| p.max_mu12).collect()),
        ("mu21", points.iter().map(|p| p.max_mu21).collect()),
        ("mu11-mu22", points.iter().map(|p| p.max_diag_gap).collect()),
    ];
    let mut orders = Table::new("fitted-order", &["order_mu12", "order_mu21", "order_mu11_minus_mu22"]);
    let mut row = vec![];
    for (name, gaps) in &metrics {
        let order = fitted_order(&eps, gaps);
        row.push(order);
        report.verdicts.push(Verdict::holds(
            &format!("gap-{name}-decreases"),
            descending(gaps),
            format!("{gaps:?}"),
        ));
        report
            .verdicts
            .push(Verdict::at_least(&format!("gap-{name}-order"), order, params.min_order));
    }
    orders.push(row);
    report.tables.push(orders);

    if let Some(p) = points
        .iter()
        .find(|p| (p.epsilon - params.reference_epsilon).abs() <= 1e-12 * params.reference_epsilon)
    {
        report.verdicts.push(Verdict::at_most(
            "relative-mu11-gap",
            p.relative_mu11_gap,
            params.max_relative_mu11_gap,
        ));
    }
    let cf = points.iter().map(|p| p.closed_form_gap).fold(0.0, f64::max);
    report
        .verdicts
        .push(Verdict::at_most("closed-form-matches-quadrature", cf, params.closed_form_tolerance));
    let reference = points
        .iter()
        .position(|p| (p.epsilon - params.reference_epsilon).abs() <= 1e-12 * params.reference_epsilon)
        .unwrap_or(0);
    report.verdicts.push(Verdict::at_least(
        "control-breaks-symmetry",
        control[reference],
        params.control_threshold,
    ));
    let singular: usize = points.iter().map(|p| p.singular_points).sum();
    report.note("singular_points", singular);
    report.note("dissipative_sum", c.dissipative_sum());
    Ok(report)
}
