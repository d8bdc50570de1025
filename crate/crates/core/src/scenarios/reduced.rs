//! Exact reduced dynamics of an arbitrary single-factor system.

use nalgebra::{Matrix2, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ScenarioReport, Table, Verdict};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::profiles::TimeProfile;
use crate::propagate::{integrate_r, uniform_grid, IntegratorOptions, DEFECT_HARD_LIMIT};
use crate::reduce::{evolve_gaussian, reduce_trajectory, CentralGaussian};
use crate::system::{thermal_f, uniform_frequencies, BathSpec, Couplings, SystemSpec};

/// Initial central state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialState {
    /// (⟨p⟩, ⟨x⟩).
    pub mean: [f64; 2],
    /// Row-major (p, x) covariance.
    pub cov: [[f64; 2]; 2],
}

impl Default for InitialState {
    fn default() -> Self {
        Self {
            mean: [0.0, 0.0],
            cov: [[0.5, 0.0], [0.0, 0.5]],
        }
    }
}

impl InitialState {
    pub fn gaussian(&self) -> CentralGaussian {
        CentralGaussian {
            mean: Vector2::new(self.mean[0], self.mean[1]),
            cov: Matrix2::new(self.cov[0][0], self.cov[0][1], self.cov[1][0], self.cov[1][1]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReducedParams {
    pub system: SystemSpec,
    pub points: usize,
    pub max_step: Option<f64>,
    pub defect_limit: f64,
    pub initial: InitialState,
    pub psd_slack: f64,
    pub purity_tolerance: f64,
}

impl Default for ReducedParams {
    fn default() -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 4;
        Self {
            system: SystemSpec {
                omega: TimeProfile::constant(1.0),
                omega0: 1.0,
                bath: BathSpec {
                    omegas: uniform_frequencies(n, 0.5, 2.5),
                    couplings: Couplings::random(n, 0.2, &mut rng),
                    nu: TimeProfile::gaussian(1.0, 3.0, 1.0),
                    temperature: 0.2,
                    f_override: None,
                },
                t_max: 10.0,
            },
            points: 101,
            max_step: None,
            defect_limit: DEFECT_HARD_LIMIT,
            initial: InitialState::default(),
            psd_slack: 1e-12,
            purity_tolerance: 1e-9,
        }
    }
}

impl ReducedParams {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if self.points < 2 {
            return Err(Error::invalid("points", "must be >= 2"));
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return Err(Error::invalid("max_step", "must be > 0"));
            }
        }
        let c = self.initial.gaussian().cov;
        if c[(0, 1)] != c[(1, 0)] || c.determinant() < 0.25 - 1e-12 || c[(0, 0)] <= 0.0 {
            return Err(Error::invalid("initial.cov", "must be symmetric with det >= 1/4"));
        }
        Ok(())
    }
}

pub fn run_reduced_dynamics(params: &ReducedParams, seed: u64, exec: Execution) -> Result<ScenarioReport> {
    params.validate()?;
    let mut report = ScenarioReport::new("reduced-dynamics", params, seed);
    let spec = &params.system;
    let grid = uniform_grid(spec.t_max, params.points);
    let opts = IntegratorOptions {
        max_step: params.max_step,
        defect_limit: params.defect_limit,
    };
    let traj = integrate_r(spec, &grid, &opts)?;
    let f = thermal_f(&spec.bath);
    let series = reduce_trajectory(&traj, spec, &f, exec);
    let mut table = Table::new(
        "reduced",
        &[
            "t", "A11", "A12", "A21", "A22", "D11", "D12", "D22", "M11", "M12", "M22",
            "photon_number", "gamma",
        ],
    );
    let s0 = params.initial.gaussian();
    let mut rec = series.records.iter().peekable();
    let (mut min_eig, mut min_det, mut defect) = (f64::INFINITY, f64::INFINITY, 0.0f64);
    for r in &traj {
        let state = evolve_gaussian(&s0, r, &f);
        let m = crate::reduce::reduced_covariance(r, &f);
        min_eig = min_eig.min(m.symmetric_eigenvalues().min());
        min_det = min_det.min(state.uncertainty());
        defect = defect.max(r.defect);
        if let Some(x) = rec.next_if(|x| x.t == r.t) {
            table.push(vec![
                r.t,
                x.a[(0, 0)],
                x.a[(0, 1)],
                x.a[(1, 0)],
                x.a[(1, 1)],
                x.d[(0, 0)],
                x.d[(0, 1)],
                x.d[(1, 1)],
                m[(0, 0)],
                m[(0, 1)],
                m[(1, 1)],
                state.photon_number(),
                x.gamma,
            ]);
        }
    }
    report.tables.push(table);
    let mut singular = Table::new("singular-times", &["t"]);
    for t in &series.singular {
        singular.push(vec![*t]);
    }
    report.tables.push(singular);
    report
        .verdicts
        .push(Verdict::at_least("mstar-psd", min_eig, -params.psd_slack));
    report.verdicts.push(Verdict::at_least(
        "uncertainty-bound",
        min_det - 0.25,
        -params.purity_tolerance,
    ));
    report.note("max_symplectic_defect", defect);
    Ok(report)
}
