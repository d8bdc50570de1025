//! Closure: the moment equations driven by the exact A(t), D(t) must
//! reproduce the covariance obtained directly from the propagator.

use nalgebra::Matrix2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ScenarioReport, Table, Verdict};
use crate::error::{Error, Result};
use crate::exec::{map_slice, Execution};
use crate::langevin::{evolve_moments, TabulatedDynamics};
use crate::profiles::TimeProfile;
use crate::propagate::{integrate_r, IntegratorOptions};
use crate::reduce::{evolve_gaussian, reduce_trajectory, CentralGaussian};
use crate::system::{thermal_f, uniform_frequencies, BathSpec, Couplings, SystemSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClosureParams {
    pub modes: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    pub temperature: f64,
    /// Coupling scales κ, descending; couplings are κ times uniform [−1, 1] draws.
    pub coupling_scales: Vec<f64>,
    pub t_max: f64,
    /// RK4 step of the moment equations.
    pub moment_step: f64,
    /// Spacing of the comparison times; a multiple of `moment_step`.
    pub compare_every: f64,
    pub max_relative_gap: f64,
    /// Accepted range of gap(κ)/gap(κ/2).
    pub ratio_range: [f64; 2],
}

impl Default for ClosureParams {
    fn default() -> Self {
        Self {
            modes: 4,
            omega_min: 0.5,
            omega_max: 2.5,
            temperature: 0.3,
            coupling_scales: vec![0.1, 0.05, 0.025],
            t_max: 10.0,
            moment_step: 0.05,
            compare_every: 0.5,
            max_relative_gap: 1e-6,
            ratio_range: [2.0, 8.0],
        }
    }
}

impl ClosureParams {
    pub fn validate(&self) -> Result<()> {
        if self.modes == 0 {
            return Err(Error::invalid("modes", "must be >= 1"));
        }
        if !(self.omega_min > 0.0 && self.omega_max >= self.omega_min) {
            return Err(Error::invalid("omega_max", "need 0 < omega_min <= omega_max"));
        }
        if self.coupling_scales.is_empty() || self.coupling_scales.iter().any(|k| !(*k >= 0.0)) {
            return Err(Error::invalid("coupling_scales", "need non-negative values"));
        }
        if !(self.t_max > 0.0 && self.moment_step > 0.0 && self.compare_every > 0.0) {
            return Err(Error::invalid("moment_step", "times must be > 0"));
        }
        let per = self.compare_every / self.moment_step;
        if (per - per.round()).abs() > 1e-9 || per.round() < 1.0 {
            return Err(Error::invalid("compare_every", "must be a multiple of moment_step"));
        }
        let total = self.t_max / self.compare_every;
        if (total - total.round()).abs() > 1e-9 {
            return Err(Error::invalid("t_max", "must be a multiple of compare_every"));
        }
        if !(self.temperature >= 0.0) {
            return Err(Error::invalid("temperature", "must be >= 0"));
        }
        Ok(())
    }

    pub fn system(&self, seed: u64, scale: f64) -> SystemSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let omegas = uniform_frequencies(self.modes, self.omega_min, self.omega_max);
        SystemSpec {
            omega: TimeProfile::constant(1.0),
            omega0: 1.0,
            bath: BathSpec {
                couplings: Couplings::random(self.modes, 1.0, &mut rng).scaled(scale),
                omegas,
                nu: TimeProfile::constant(1.0),
                temperature: self.temperature,
                f_override: None,
            },
            t_max: self.t_max,
        }
    }
}

/// Per-scale outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureRun {
    pub scale: f64,
    pub times: Vec<f64>,
    pub micro: Vec<Matrix2<f64>>,
    pub moments: Vec<Matrix2<f64>>,
    pub max_relative_gap: f64,
}

/// Closure comparison for one coupling scale.
pub fn closure_run(params: &ClosureParams, seed: u64, scale: f64) -> Result<ClosureRun> {
    let spec = params.system(seed, scale);
    let half = 0.5 * params.moment_step;
    let fine_n = (params.t_max / half).round() as usize;
    let fine: Vec<f64> = (0..=fine_n).map(|i| i as f64 * half).collect();
    let opts = IntegratorOptions {
        max_step: Some(crate::propagate::default_step(&spec).min(half)),
        ..Default::default()
    };
    let traj = integrate_r(&spec, &fine, &opts)?;
    let f = thermal_f(&spec.bath);
    let series = reduce_trajectory(&traj, &spec, &f, Execution::Sequential);
    if let Some(t) = series.singular.first() {
        return Err(Error::Integration {
            time: *t,
            reason: "R11 singular; closure needs A(t), D(t) on the whole table".into(),
        });
    }
    let table = TabulatedDynamics::new(
        series.records.iter().map(|r| r.t).collect(),
        series.records.iter().map(|r| r.a).collect(),
        series.records.iter().map(|r| r.d).collect(),
    )?;
    let stride = (params.compare_every / half).round() as usize;
    let idx: Vec<usize> = (0..=fine_n).step_by(stride).collect();
    let times: Vec<f64> = idx.iter().map(|&i| fine[i]).collect();
    let vacuum = CentralGaussian::vacuum();
    let moments: Vec<Matrix2<f64>> = evolve_moments(&table, &vacuum, &times)?
        .iter()
        .map(|s| s.cov)
        .collect();
    let micro: Vec<Matrix2<f64>> = idx
        .iter()
        .map(|&i| evolve_gaussian(&vacuum, &traj[i], &f).cov)
        .collect();
    let max_relative_gap = micro
        .iter()
        .zip(&moments)
        .map(|(a, b)| (a - b).norm() / a.norm())
        .fold(0.0, f64::max);
    Ok(ClosureRun {
        scale,
        times,
        micro,
        moments,
        max_relative_gap,
    })
}

pub fn run_closure(params: &ClosureParams, seed: u64, exec: Execution) -> Result<ScenarioReport> {
    params.validate()?;
    let mut report = ScenarioReport::new("closure", params, seed);
    let runs = map_slice(exec, &params.coupling_scales, |&k| closure_run(params, seed, k))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut sweep = Table::new("gap-vs-coupling", &["coupling_scale", "max_relative_gap"]);
    for r in &runs {
        sweep.push(vec![r.scale, r.max_relative_gap]);
        report.verdicts.push(Verdict::at_most(
            &format!("closure-gap-scale-{}", r.scale),
            r.max_relative_gap,
            params.max_relative_gap,
        ));
    }
    report.tables.push(sweep);
    if let Some(r) = runs.first() {
        let mut cov = Table::new(
            "covariance",
            &["t", "micro_pp", "micro_px", "micro_xx", "moment_pp", "moment_px", "moment_xx"],
        );
        for ((t, a), b) in r.times.iter().zip(&r.micro).zip(&r.moments) {
            cov.push(vec![*t, a[(0, 0)], a[(0, 1)], a[(1, 1)], b[(0, 0)], b[(0, 1)], b[(1, 1)]]);
        }
        report.tables.push(cov);
    }
    for w in runs.windows(2) {
        if w[1].scale > 0.0 && (w[0].scale / w[1].scale - 2.0).abs() < 1e-12 {
            let ratio = w[0].max_relative_gap / w[1].max_relative_gap;
            report.verdicts.push(Verdict::holds(
                &format!("closure-gap-ratio-{}-{}", w[0].scale, w[1].scale),
                ratio >= params.ratio_range[0] && ratio <= params.ratio_range[1],
                format!("ratio {ratio}"),
            ));
        }
    }
    Ok(report)
}
