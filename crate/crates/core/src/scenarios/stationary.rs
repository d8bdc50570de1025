//! Thermal steady state of the symmetric minimum-noise model.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use super::{ScenarioReport, Table, Verdict};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::langevin::{evolve_moments, lyapunov_2x2, sample_trajectories, GaussianDynamics, LangevinModel};
use crate::perturb::g_from_temperature;
use crate::profiles::TimeProfile;
use crate::propagate::uniform_grid;
use crate::reduce::CentralGaussian;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationaryParams {
    pub gamma: f64,
    pub omega0: f64,
    pub temperature: f64,
    /// Relaxation time in units of 1/γ.
    pub relaxation: f64,
    pub tolerance: f64,
    pub lyapunov_tolerance: f64,
    pub trajectories: usize,
    pub trajectory_t_max: f64,
    pub trajectory_step: f64,
    /// Allowed deviation in standard errors.
    pub standard_errors: f64,
}

impl Default for StationaryParams {
    fn default() -> Self {
        Self {
            gamma: 0.1,
            omega0: 1.0,
            temperature: 0.5,
            relaxation: 20.0,
            tolerance: 1e-6,
            lyapunov_tolerance: 1e-8,
            trajectories: 10_000,
            trajectory_t_max: 2.0,
            trajectory_step: 1e-3,
            standard_errors: 3.0,
        }
    }
}

impl StationaryParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(Error::invalid("gamma", "must be > 0"));
        }
        if !(self.omega0 > 0.0) {
            return Err(Error::invalid("omega0", "must be > 0"));
        }
        if !(self.temperature >= 0.0) {
            return Err(Error::invalid("temperature", "must be >= 0"));
        }
        if !(self.relaxation > 0.0) {
            return Err(Error::invalid("relaxation", "must be > 0"));
        }
        if self.trajectories < 2 || !(self.trajectory_t_max > 0.0 && self.trajectory_step > 0.0) {
            return Err(Error::invalid("trajectories", "need >= 2 trajectories and positive times"));
        }
        Ok(())
    }
}

pub fn run_stationary(params: &StationaryParams, seed: u64, exec: Execution) -> Result<ScenarioReport> {
    params.validate()?;
    let mut report = ScenarioReport::new("stationary", params, seed);
    let g = g_from_temperature(params.omega0, params.temperature)?;
    let w0 = params.omega0;
    let model = LangevinModel::min_sym(TimeProfile::constant(w0), TimeProfile::constant(params.gamma), w0, g)?;
    // stationary covariance of the min-sym set
    let target = Matrix2::new(0.5 * g * w0, 0.0, 0.0, 0.5 * g / w0);
    let lyap = lyapunov_2x2(&model.drift(0.0), &model.diffusion(0.0))?;
    report.verdicts.push(Verdict::at_most(
        "lyapunov-matches-thermal",
        (lyap - target).amax(),
        params.lyapunov_tolerance,
    ));

    let t_end = params.relaxation / params.gamma;
    let grid = uniform_grid(t_end, 201);
    let states = evolve_moments(&model, &CentralGaussian::vacuum(), &grid)?;
    let mut table = Table::new("relaxation", &["t", "cov_pp", "cov_px", "cov_xx", "photon_number"]);
    for (t, s) in grid.iter().zip(&states) {
        table.push(vec![*t, s.cov[(0, 0)], s.cov[(0, 1)], s.cov[(1, 1)], s.photon_number()]);
    }
    report.tables.push(table);
    let last = states[states.len() - 1];
    report.verdicts.push(Verdict::at_most(
        "moments-reach-thermal-covariance",
        (last.cov - target).amax(),
        params.tolerance,
    ));
    if w0 == 1.0 {
        report.verdicts.push(Verdict::at_most(
            "thermal-photon-number",
            (last.photon_number() - 0.5 * (g - 1.0)).abs(),
            params.tolerance,
        ));
    }
    report.verdicts.push(Verdict::at_most(
        "moments-match-lyapunov",
        (last.cov - lyap).amax(),
        params.tolerance,
    ));

    let n = (params.trajectory_t_max / params.trajectory_step).round() as usize;
    let tgrid = uniform_grid(n as f64 * params.trajectory_step, n + 1);
    let start = CentralGaussian {
        mean: nalgebra::Vector2::zeros(),
        cov: target,
    };
    let est = sample_trajectories(&model, &start, &tgrid, params.trajectories, seed, exec)?;
    let mut st = Table::new(
        "trajectories",
        &["t", "cov_pp", "cov_px", "cov_xx", "se_pp", "se_px", "se_xx"],
    );
    let stride = (n / 20).max(1);
    for e in est.iter().step_by(stride) {
        st.push(vec![
            e.t,
            e.cov[(0, 0)],
            e.cov[(0, 1)],
            e.cov[(1, 1)],
            e.cov_se[(0, 0)],
            e.cov_se[(0, 1)],
            e.cov_se[(1, 1)],
        ]);
    }
    report.tables.push(st);
    let end = est[est.len() - 1];
    let z = Matrix2::from_fn(|r, c| (end.cov[(r, c)] - target[(r, c)]).abs() / end.cov_se[(r, c)]).max();
    report
        .verdicts
        .push(Verdict::at_most("trajectories-match-moments", z, params.standard_errors));
    report.note("G", g);
    report.note("trajectory_count", params.trajectories);
    Ok(report)
}
