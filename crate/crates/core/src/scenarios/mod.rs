//! Packaged experiments that wire the modules together and judge the
//! results against configured tolerances.

mod closure;
mod conservation;
mod mir;
mod reduced;
mod rwa;
mod short_time;
mod stationary;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::exec::{map_indexed, Execution};

pub use closure::{closure_run, run_closure, ClosureParams, ClosureRun};
pub use conservation::{run_conservation, ConservationParams};
pub use mir::{mir_profiles, run_mir_pulse_train, MirParams, MirProfiles};
pub use reduced::{run_reduced_dynamics, ReducedParams};
pub use rwa::{run_rwa_check, RwaParams};
pub use short_time::{
    control_coupling, convergence_point, run_short_time_convergence, ConvergencePoint, ShortTimeParams,
};
pub use stationary::{run_stationary, StationaryParams};

/// Numeric table with named columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: vec![],
        }
    }

    pub fn with_columns(name: &str, columns: Vec<String>) -> Self {
        Self {
            name: name.into(),
            columns,
            rows: vec![],
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    /// Name of the invariant being checked.
    pub invariant: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Verdict {
    pub fn at_most(invariant: &str, value: f64, threshold: f64) -> Self {
        Self {
            invariant: invariant.into(),
            passed: value <= threshold,
            value,
            threshold,
            detail: format!("{value:e} <= {threshold:e}"),
        }
    }

    pub fn at_least(invariant: &str, value: f64, threshold: f64) -> Self {
        Self {
            invariant: invariant.into(),
            passed: value >= threshold,
            value,
            threshold,
            detail: format!("{value:e} >= {threshold:e}"),
        }
    }

    pub fn holds(invariant: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            invariant: invariant.into(),
            passed,
            value: if passed { 1.0 } else { 0.0 },
            threshold: 1.0,
            detail: detail.into(),
        }
    }
}

/// Everything a scenario produces. Apart from `wall_time` the report is a
/// pure function of the parameters and the seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    /// sha256 of the canonical parameter JSON and the seed.
    pub digest: String,
    pub seed: u64,
    pub parameters: serde_json::Value,
    pub tables: Vec<Table>,
    pub verdicts: Vec<Verdict>,
    /// Derived quantities worth recording (unit conversions, fitted orders).
    pub notes: serde_json::Map<String, serde_json::Value>,
    #[serde(skip)]
    pub wall_time: f64,
}

impl ScenarioReport {
    pub fn new<P: Serialize>(scenario: &str, params: &P, seed: u64) -> Self {
        let parameters = serde_json::to_value(params).unwrap_or(serde_json::Value::Null);
        Self {
            scenario: scenario.into(),
            digest: digest(scenario, &parameters, seed),
            seed,
            parameters,
            tables: vec![],
            verdicts: vec![],
            notes: Default::default(),
            wall_time: 0.0,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn verdict(&self, invariant: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.invariant == invariant)
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        if let Ok(v) = serde_json::to_value(value) {
            self.notes.insert(key.into(), v);
        }
    }
}

/// Hex sha256 of `scenario`, the canonical JSON of `params` and `seed`.
pub fn digest(scenario: &str, params: &serde_json::Value, seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(scenario.as_bytes());
    h.update([0u8]);
    h.update(params.to_string().as_bytes());
    h.update([0u8]);
    h.update(seed.to_le_bytes());
    hex::encode(h.finalize())
}

/// A scenario with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "kebab-case")]
#[allow(clippy::large_enum_variant)]
pub enum Scenario {
    ShortTimeConvergence(ShortTimeParams),
    RwaCheck(RwaParams),
    MirPulseTrain(MirParams),
    Closure(ClosureParams),
    Conservation(ConservationParams),
    Stationary(StationaryParams),
    ReducedDynamics(ReducedParams),
}

/// Names accepted by [`Scenario`].
pub const SCENARIOS: [(&str, &str); 7] = [
    ("short-time-convergence", "exact drift vs single-factor closed form over an epsilon ladder"),
    ("rwa-check", "RWA diffusion structure and minimum-noise verdicts"),
    ("mir-pulse-train", "parametric photon growth under a pulsed frequency and damping"),
    ("closure", "Langevin moments driven by exact A(t), D(t) vs microscopic covariance"),
    ("conservation", "uncoupled photon number and vacuum purity"),
    ("stationary", "min-sym thermal steady state, Lyapunov solve and trajectory sampling"),
    ("reduced-dynamics", "exact reduced dynamics of a user-specified system"),
];

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::ShortTimeConvergence(_) => "short-time-convergence",
            Scenario::RwaCheck(_) => "rwa-check",
            Scenario::MirPulseTrain(_) => "mir-pulse-train",
            Scenario::Closure(_) => "closure",
            Scenario::Conservation(_) => "conservation",
            Scenario::Stationary(_) => "stationary",
            Scenario::ReducedDynamics(_) => "reduced-dynamics",
        }
    }

    /// Default parameters for a scenario name.
    pub fn default_for(name: &str) -> Option<Self> {
        Some(match name {
            "short-time-convergence" => Scenario::ShortTimeConvergence(Default::default()),
            "rwa-check" => Scenario::RwaCheck(Default::default()),
            "mir-pulse-train" => Scenario::MirPulseTrain(Default::default()),
            "closure" => Scenario::Closure(Default::default()),
            "conservation" => Scenario::Conservation(Default::default()),
            "stationary" => Scenario::Stationary(Default::default()),
            "reduced-dynamics" => Scenario::ReducedDynamics(Default::default()),
            _ => return None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Scenario::ShortTimeConvergence(p) => p.validate(),
            Scenario::RwaCheck(p) => p.validate(),
            Scenario::MirPulseTrain(p) => p.validate(),
            Scenario::Closure(p) => p.validate(),
            Scenario::Conservation(p) => p.validate(),
            Scenario::Stationary(p) => p.validate(),
            Scenario::ReducedDynamics(p) => p.validate(),
        }
    }

    pub fn run(&self, seed: u64, exec: Execution) -> Result<ScenarioReport> {
        let start = Instant::now();
        let mut report = match self {
            Scenario::ShortTimeConvergence(p) => run_short_time_convergence(p, seed, exec),
            Scenario::RwaCheck(p) => run_rwa_check(p, seed, exec),
            Scenario::MirPulseTrain(p) => run_mir_pulse_train(p, seed, exec),
            Scenario::Closure(p) => run_closure(p, seed, exec),
            Scenario::Conservation(p) => run_conservation(p, seed, exec),
            Scenario::Stationary(p) => run_stationary(p, seed, exec),
            Scenario::ReducedDynamics(p) => run_reduced_dynamics(p, seed, exec),
        }?;
        report.wall_time = start.elapsed().as_secs_f64();
        Ok(report)
    }
}

/// Runs several scenarios concurrently; reports come back sorted by name.
pub fn run_sweep(
    scenarios: &[Scenario],
    seed: u64,
    exec: Execution,
) -> Vec<(String, Result<ScenarioReport>)> {
    let mut out = map_indexed(exec, scenarios.len(), |i| {
        (scenarios[i].name().to_string(), scenarios[i].run(seed, exec))
    });
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}
