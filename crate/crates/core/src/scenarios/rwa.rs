//! RWA coupling: diffusion structure of the closed form and of the exact
//! extraction, the minimum-noise set and the long-time bridge.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ScenarioReport, Table, Verdict};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::perturb::{d_closed_form, g_from_temperature, min_noise_set};
use crate::profiles::TimeProfile;
use crate::propagate::{integrate_r, uniform_grid, IntegratorOptions};
use crate::reduce::{noise_matrix, reduce_trajectory};
use crate::system::{random_rho, rwa_couplings, thermal_f, uniform_frequencies, BathSpec, SystemSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RwaParams {
    pub modes: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    pub rho_scale: f64,
    pub temperature: f64,
    pub epsilon: f64,
    pub amplitude: f64,
    /// Extraction window in units of the pulse decay time.
    pub window: f64,
    pub points: usize,
    /// Relative depth of the frequency dip applied during the pulse.
    pub dip_depth: f64,
    pub max_d12_ratio: f64,
    /// Rounding allowance, relative to ‖D‖, for the closed-form identities.
    pub closed_form_tolerance: f64,
    pub bridge_coupling: f64,
    pub bridge_t_max: f64,
    pub bridge_points: usize,
    pub bridge_tolerance: f64,
    /// γ used for the noise-matrix positivity sweep.
    pub noise_gamma: f64,
    pub g_values: Vec<f64>,
}

impl Default for RwaParams {
    fn default() -> Self {
        Self {
            modes: 16,
            omega_min: 0.2,
            omega_max: 3.0,
            rho_scale: 0.3,
            temperature: 0.5,
            epsilon: 0.05,
            amplitude: 1.0,
            window: 4.0,
            points: 41,
            dip_depth: 0.01,
            max_d12_ratio: 0.05,
            closed_form_tolerance: 1e-14,
            bridge_coupling: 0.05,
            bridge_t_max: 40.0,
            bridge_points: 201,
            bridge_tolerance: 0.1,
            noise_gamma: 0.1,
            g_values: vec![0.5, 0.9, 1.0, 1.1, 2.0],
        }
    }
}

impl RwaParams {
    pub fn validate(&self) -> Result<()> {
        if self.modes == 0 {
            return Err(Error::invalid("modes", "must be >= 1"));
        }
        if !(self.omega_min > 0.0 && self.omega_max >= self.omega_min) {
            return Err(Error::invalid("omega_max", "need 0 < omega_min <= omega_max"));
        }
        if !(self.temperature >= 0.0) {
            return Err(Error::invalid("temperature", "must be >= 0"));
        }
        if !(self.epsilon > 0.0 && self.window > 0.0) || self.points < 2 || self.bridge_points < 2 {
            return Err(Error::invalid("epsilon", "need epsilon, window > 0 and >= 2 points"));
        }
        if !(0.0..1.0).contains(&self.dip_depth) {
            return Err(Error::invalid("dip_depth", "must lie in [0, 1)"));
        }
        if !(self.bridge_t_max > 0.0 && self.bridge_coupling >= 0.0) {
            return Err(Error::invalid("bridge_t_max", "must be > 0"));
        }
        if !(self.noise_gamma >= 0.0) {
            return Err(Error::invalid("noise_gamma", "must be >= 0"));
        }
        Ok(())
    }

    pub fn bath(&self, seed: u64, nu: TimeProfile) -> Result<BathSpec> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let omegas = uniform_frequencies(self.modes, self.omega_min, self.omega_max);
        let rho = random_rho(self.modes, self.rho_scale, &mut rng);
        Ok(BathSpec {
            couplings: rwa_couplings(&rho, 1.0, &omegas)?,
            omegas,
            nu,
            temperature: self.temperature,
            f_override: None,
        })
    }

    /// Pulsed system with a frequency dip centred at 3τ.
    pub fn pulsed_system(&self, seed: u64) -> Result<SystemSpec> {
        let tau = self.epsilon / self.omega_max;
        let bath = self.bath(seed, TimeProfile::exp_decay(self.amplitude, 0.0, tau))?;
        Ok(SystemSpec {
            omega: TimeProfile::GaussianPulse {
                amplitude: -self.dip_depth,
                center: 3.0 * tau,
                width: 0.5 * tau,
                baseline: 1.0,
            },
            omega0: 1.0,
            bath,
            t_max: self.window * tau,
        })
    }
}

pub fn run_rwa_check(params: &RwaParams, seed: u64, _exec: Execution) -> Result<ScenarioReport> {
    params.validate()?;
    let mut report = ScenarioReport::new("rwa-check", params, seed);
    let spec = params.pulsed_system(seed)?;
    let f = thermal_f(&spec.bath);
    let grid = uniform_grid(spec.t_max, params.points);

    // closed form
    let mut cf = Table::new("closed-form", &["t", "D11", "D22", "D12"]);
    let (mut d12, mut diag, mut norm) = (0.0f64, 0.0f64, 0.0f64);
    for &t in &grid {
        let d = d_closed_form(&spec.bath, &f, t)?;
        cf.push(vec![t, d[(0, 0)], d[(1, 1)], d[(0, 1)]]);
        d12 = d12.max(d[(0, 1)].abs());
        diag = diag.max((d[(0, 0)] - spec.omega0 * spec.omega0 * d[(1, 1)]).abs());
        norm = norm.max(d.norm());
    }
    report.tables.push(cf);
    report.verdicts.push(Verdict::at_most(
        "closed-form-d12-zero",
        d12 / norm,
        params.closed_form_tolerance,
    ));
    report.verdicts.push(Verdict::at_most(
        "closed-form-d11-equals-omega0-squared-d22",
        diag / norm,
        params.closed_form_tolerance,
    ));

    // exact extraction
    let traj = integrate_r(&spec, &grid, &IntegratorOptions::default())?;
    let series = reduce_trajectory(&traj, &spec, &f, Execution::Sequential);
    let mut ex = Table::new("exact", &["t", "D11", "D22", "D12", "gamma"]);
    let (mut d12, mut norm) = (0.0f64, 0.0f64);
    for r in &series.records {
        ex.push(vec![r.t, r.d[(0, 0)], r.d[(1, 1)], r.d[(0, 1)], r.gamma]);
        d12 = d12.max(r.d[(0, 1)].abs());
        norm = norm.max(r.d.norm());
    }
    report.tables.push(ex);
    let ratio = if norm > 0.0 { d12 / norm } else { 0.0 };
    report
        .verdicts
        .push(Verdict::at_most("exact-d12-small", ratio, params.max_d12_ratio));

    // minimum-noise set at the reservoir temperature and the positivity sweep
    let g = g_from_temperature(1.0, params.temperature)?;
    report.note("G", g);
    let set = min_noise_set(TimeProfile::constant(params.noise_gamma), 1.0, g)?;
    let x = set.noise_matrix(0.0);
    report.verdicts.push(Verdict::holds(
        "min-noise-x-psd",
        x.is_psd(1e-12),
        format!("eigenvalues {:?}", x.hermitian_eigenvalues()),
    ));
    let mut sweep = Table::new("noise-positivity", &["G", "min_eigenvalue", "determinant", "psd"]);
    let mut iff = true;
    let gm = params.noise_gamma;
    for &gv in &params.g_values {
        let d = nalgebra::Matrix2::new(0.5 * gm * gv, 0.0, 0.0, 0.5 * gm * gv);
        let x = noise_matrix(&d, gm);
        let psd = x.is_psd(1e-12);
        iff &= psd == (gv >= 1.0);
        sweep.push(vec![gv, x.hermitian_eigenvalues()[0], x.determinant(), psd as u8 as f64]);
    }
    report.tables.push(sweep);
    report
        .verdicts
        .push(Verdict::holds("x-psd-iff-g-at-least-one", iff, format!("G values {:?}", params.g_values)));

    // bridge: constant coupling, long run, time-averaged D11/D22
    let bridge = SystemSpec {
        omega: TimeProfile::constant(1.0),
        omega0: 1.0,
        bath: params.bath(seed, TimeProfile::constant(params.bridge_coupling))?,
        t_max: params.bridge_t_max,
    };
    let bgrid = uniform_grid(bridge.t_max, params.bridge_points);
    let btraj = integrate_r(&bridge, &bgrid, &IntegratorOptions::default())?;
    let bf = thermal_f(&bridge.bath);
    let bseries = reduce_trajectory(&btraj, &bridge, &bf, Execution::Sequential);
    let half = 0.5 * bridge.t_max;
    let (mut pp, mut xx) = (0.0, 0.0);
    let mut bt = Table::new("bridge", &["t", "D11", "D22", "D12"]);
    for r in &bseries.records {
        bt.push(vec![r.t, r.d[(0, 0)], r.d[(1, 1)], r.d[(0, 1)]]);
        if r.t >= half {
            pp += r.d[(0, 0)];
            xx += r.d[(1, 1)];
        }
    }
    report.tables.push(bt);
    let chi_ratio = pp / xx;
    report.note("bridge_chi_ratio", chi_ratio);
    report.verdicts.push(Verdict::at_most(
        "bridge-chi-ratio",
        (chi_ratio - 1.0).abs(),
        params.bridge_tolerance,
    ));
    report.note("singular_points", series.singular.len() + bseries.singular.len());
    Ok(report)
}
