//! Sanity checks: an uncoupled oscillator keeps its photon number, the
//! vacuum stays pure without coupling and never beats the uncertainty
//! bound with it.

use std::f64::consts::PI;

use nalgebra::Vector2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ScenarioReport, Table, Verdict};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::profiles::TimeProfile;
use crate::propagate::{integrate_r, uniform_grid, IntegratorOptions};
use crate::reduce::{evolve_gaussian, CentralGaussian};
use crate::system::{thermal_f, uniform_frequencies, BathSpec, Couplings, SystemSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConservationParams {
    pub modes: usize,
    pub periods: u32,
    /// RK4 steps per field period in the uncoupled run.
    pub steps_per_period: u32,
    pub photon_tolerance: f64,
    pub purity_tolerance: f64,
    pub coupling_scale: f64,
    pub coupled_t_max: f64,
    pub coupled_points: usize,
}

impl Default for ConservationParams {
    fn default() -> Self {
        Self {
            modes: 2,
            periods: 100,
            steps_per_period: 4000,
            photon_tolerance: 1e-10,
            purity_tolerance: 1e-9,
            coupling_scale: 0.1,
            coupled_t_max: 50.0,
            coupled_points: 101,
        }
    }
}

impl ConservationParams {
    pub fn validate(&self) -> Result<()> {
        if self.modes == 0 || self.periods == 0 || self.steps_per_period == 0 {
            return Err(Error::invalid("periods", "modes, periods and steps must be >= 1"));
        }
        if !(self.coupled_t_max > 0.0) || self.coupled_points < 2 {
            return Err(Error::invalid("coupled_t_max", "must be > 0 with >= 2 points"));
        }
        Ok(())
    }

    fn system(&self, seed: u64, nu: f64, t_max: f64) -> SystemSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SystemSpec {
            omega: TimeProfile::constant(1.0),
            omega0: 1.0,
            bath: BathSpec {
                omegas: uniform_frequencies(self.modes, 0.5, 2.0),
                couplings: Couplings::random(self.modes, self.coupling_scale, &mut rng),
                nu: TimeProfile::constant(nu),
                temperature: 0.0,
                f_override: None,
            },
            t_max,
        }
    }
}

pub fn run_conservation(params: &ConservationParams, seed: u64, _exec: Execution) -> Result<ScenarioReport> {
    params.validate()?;
    let mut report = ScenarioReport::new("conservation", params, seed);
    let period = 2.0 * PI;
    let t_max = period * params.periods as f64;
    let spec = params.system(seed, 0.0, t_max);
    let grid = uniform_grid(t_max, params.periods as usize + 1);
    let opts = IntegratorOptions {
        max_step: Some(period / params.steps_per_period as f64),
        ..Default::default()
    };
    let traj = integrate_r(&spec, &grid, &opts)?;
    let f = thermal_f(&spec.bath);
    let coherent = CentralGaussian::coherent(1.0, 0.5);
    let vacuum = CentralGaussian::vacuum();
    let n0 = coherent.photon_number();
    let mut table = Table::new("uncoupled", &["t", "photon_number", "vacuum_det_minus_quarter"]);
    let (mut dn, mut dp) = (0.0f64, 0.0f64);
    for r in &traj {
        let n = evolve_gaussian(&coherent, r, &f).photon_number();
        let p = evolve_gaussian(&vacuum, r, &f).uncertainty() - 0.25;
        dn = dn.max((n - n0).abs());
        dp = dp.max(p.abs());
        table.push(vec![r.t, n, p]);
    }
    report.tables.push(table);
    report
        .verdicts
        .push(Verdict::at_most("uncoupled-photon-number-constant", dn, params.photon_tolerance));
    report
        .verdicts
        .push(Verdict::at_most("uncoupled-vacuum-pure", dp, params.purity_tolerance));

    let spec = params.system(seed, 1.0, params.coupled_t_max);
    let grid = uniform_grid(params.coupled_t_max, params.coupled_points);
    let traj = integrate_r(&spec, &grid, &IntegratorOptions::default())?;
    let f = thermal_f(&spec.bath);
    let mut table = Table::new("coupled", &["t", "photon_number", "vacuum_det_minus_quarter"]);
    let mut worst = f64::INFINITY;
    for r in &traj {
        let s = evolve_gaussian(&vacuum, r, &f);
        let p = s.uncertainty() - 0.25;
        worst = worst.min(p);
        table.push(vec![r.t, s.photon_number(), p]);
    }
    report.tables.push(table);
    report.verdicts.push(Verdict::at_least(
        "coupled-uncertainty-bound",
        worst,
        -params.purity_tolerance,
    ));
    report.note("coherent_mean", Vector2::new(1.0, 0.5));
    Ok(report)
}
