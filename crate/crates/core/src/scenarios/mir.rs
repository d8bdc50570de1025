//! Pulsed-semiconductor-mirror setting: a resonant train of short pulses
//! that lowers the cavity frequency and adds damping while it lasts.
//!
//! Units: ω0 = 1, so one field period (400 ps by default) is 2π.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use super::{ScenarioReport, Table, Verdict};
use crate::error::{Error, Result};
use crate::exec::{map_slice, Execution};
use crate::langevin::{epsilon_solver, evolve_moments, LangevinModel};
use crate::perturb::{g_from_temperature, NoiseSet};
use crate::profiles::{PulseShape, TimeProfile};
use crate::reduce::CentralGaussian;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MirParams {
    /// Field period in picoseconds.
    pub period_ps: f64,
    /// Carrier recombination time in picoseconds; used as the pulse FWHM.
    pub recombination_ps: f64,
    /// Peak relative frequency reduction.
    pub depth: f64,
    pub pulses: u32,
    /// Peak damping rate; half the depth when absent.
    pub gamma_peak: Option<f64>,
    pub y_values: Vec<f64>,
    pub temperature: f64,
    /// Tolerance of the ε integration, used to judge the asymmetry effect.
    pub epsilon_tolerance: f64,
}

impl Default for MirParams {
    fn default() -> Self {
        Self {
            period_ps: 400.0,
            recombination_ps: 30.0,
            depth: 0.01,
            pulses: 50,
            gamma_peak: None,
            y_values: vec![0.0, 0.5],
            temperature: 0.0,
            epsilon_tolerance: 1e-8,
        }
    }
}

/// Profiles derived from [`MirParams`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MirProfiles {
    pub omega: TimeProfile,
    pub gamma: TimeProfile,
    /// Dimensionless recombination time.
    pub recombination: f64,
    pub width: f64,
    pub train_period: f64,
    pub t_final: f64,
}

impl MirParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.period_ps > 0.0 && self.recombination_ps > 0.0) {
            return Err(Error::invalid("period_ps", "times must be > 0"));
        }
        if !(0.0..1.0).contains(&self.depth) {
            return Err(Error::invalid("depth", "must lie in [0, 1)"));
        }
        if self.pulses == 0 {
            return Err(Error::invalid("pulses", "must be >= 1"));
        }
        if let Some(g) = self.gamma_peak {
            if !(g >= 0.0) {
                return Err(Error::invalid("gamma_peak", "must be >= 0"));
            }
        }
        if self.y_values.iter().any(|y| !(-1.0..=1.0).contains(y)) {
            return Err(Error::invalid("y_values", "entries must lie in [-1, 1]"));
        }
        if !(self.temperature >= 0.0) {
            return Err(Error::invalid("temperature", "must be >= 0"));
        }
        Ok(())
    }

    pub fn gamma_peak(&self) -> f64 {
        self.gamma_peak.unwrap_or(0.5 * self.depth)
    }
}

/// Builds ω(t) = 1 − depth·s(t) and γ(t) = γ_peak·s(t), with s a train of
/// unit Gaussians whose FWHM is the recombination time. The period is
/// π/ω̄, ω̄ the time-averaged frequency, which puts the train on the
/// parametric resonance.
pub fn mir_profiles(p: &MirParams) -> MirProfiles {
    let recombination = 2.0 * PI * p.recombination_ps / p.period_ps;
    let width = recombination / (2.0 * (2.0 * LN_2).sqrt());
    let area = width * (2.0 * PI).sqrt();
    let mut period = PI;
    for _ in 0..100 {
        period = PI / (1.0 - p.depth * area / period);
    }
    let train = |amplitude: f64, baseline: f64| TimeProfile::PulseTrain {
        shape: PulseShape::Gaussian { amplitude, width },
        start: 0.0,
        period,
        count: p.pulses,
        offset: 0.5 * period,
        baseline,
    };
    MirProfiles {
        omega: train(-p.depth, 1.0),
        gamma: train(p.gamma_peak(), 0.0),
        recombination,
        width,
        train_period: period,
        t_final: period * p.pulses as f64,
    }
}

pub fn run_mir_pulse_train(params: &MirParams, seed: u64, exec: Execution) -> Result<ScenarioReport> {
    params.validate()?;
    let mut report = ScenarioReport::new("mir-pulse-train", params, seed);
    let prof = mir_profiles(params);
    report.note("recombination_dimensionless", prof.recombination);
    report.note("pulse_width_sigma", prof.width);
    report.note("train_period", prof.train_period);
    report.note("omega0_per_ps", 2.0 * PI / params.period_ps);
    report.note("gamma_peak", params.gamma_peak());
    let g = g_from_temperature(1.0, params.temperature)?;

    let cells: Vec<f64> = (0..=params.pulses).map(|n| n as f64 * prof.train_period).collect();
    let vacuum = CentralGaussian::vacuum();

    // undamped parametric amplification
    let undamped = LangevinModel::new(
        prof.omega.clone(),
        NoiseSet::phenomenological(TimeProfile::constant(0.0), 0.0, 1.0, g)?,
    )?;
    let base: Vec<f64> = evolve_moments(&undamped, &vacuum, &cells)?
        .iter()
        .map(|s| s.photon_number())
        .collect();
    let growth = base.windows(2).all(|w| w[1] > w[0]);
    report.verdicts.push(Verdict::holds(
        "undamped-photon-growth-monotone",
        growth,
        format!("N from {:e} to {:e}", base[0], base[base.len() - 1]),
    ));

    let models = params
        .y_values
        .iter()
        .map(|&y| {
            LangevinModel::new(
                prof.omega.clone(),
                NoiseSet::phenomenological(prof.gamma.clone(), y, 1.0, g)?,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let runs = map_slice(exec, &models, |m| -> Result<_> {
        let photons: Vec<f64> = evolve_moments(m, &vacuum, &cells)?
            .iter()
            .map(|s| s.photon_number())
            .collect();
        let eps = epsilon_solver(m, &cells)?;
        Ok((photons, eps))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut cols = vec!["pulse".to_string(), "N_undamped".to_string()];
    for y in &params.y_values {
        cols.push(format!("N_y_{y}"));
    }
    let mut photons = Table::with_columns("photons", cols);
    for (n, &b) in base.iter().enumerate().take(cells.len()) {
        let mut row = vec![n as f64, b];
        row.extend(runs.iter().map(|r| r.0[n]));
        photons.push(row);
    }
    report.tables.push(photons);

    let mut eps_table = Table::new("epsilon", &["y", "abs_eps_final", "wronskian_drift"]);
    for (y, (_, e)) in params.y_values.iter().zip(&runs) {
        eps_table.push(vec![*y, e.final_modulus(), e.wronskian_drift]);
        report.verdicts.push(Verdict::at_most(
            &format!("wronskian-conserved-y-{y}"),
            e.wronskian_drift,
            params.epsilon_tolerance,
        ));
    }
    report.tables.push(eps_table);

    // ω_ef² decomposition over the first cell
    let mut decomposition = Table::new(
        "effective-frequency",
        &["y", "max_abs_omega2_minus_1", "max_abs_delta_dot", "max_delta_squared"],
    );
    for m in &models {
        let (mut w2, mut dd, mut d2) = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..=2000 {
            let t = prof.train_period * i as f64 / 2000.0;
            let w = m.omega.value(t);
            let (d, ddot) = m.delta(t);
            w2 = w2.max((w * w - 1.0).abs());
            dd = dd.max(ddot.abs());
            d2 = d2.max(d * d);
        }
        decomposition.push(vec![m.y(), w2, dd, d2]);
    }
    report.tables.push(decomposition);

    let find = |y: f64| params.y_values.iter().position(|v| *v == y);
    if let (Some(i0), Some(i1)) = (find(0.0), find(0.5)) {
        let diff = (runs[i1].1.final_modulus() - runs[i0].1.final_modulus()).abs();
        report.note("abs_eps_difference", diff);
        report.verdicts.push(Verdict::at_least(
            "asymmetry-changes-epsilon",
            diff,
            10.0 * params.epsilon_tolerance,
        ));
    }
    Ok(report)
}
