use std::f64::consts::PI;

use serde_json::json;
use wvalab::coupling::{aav_condition_margin, transition_curves, CouplingConfig, Generator, MeterState};
use wvalab::estimate::{run_experiment_detailed, ExperimentPlan};
use wvalab::infometrics::info_budget;
use wvalab::meter::GaussianMeter;
use wvalab::noise::{information_row, CorrelatedNoiseModel, NoiseRegime};
use wvalab::qsys::{bloch_state, optimal_postselection, weak_value, Observable};
use wvalab::schemes::{run_scheme, standard, WeakKind};
use wvalab::table::Table;

use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::output::Output;

/// Largest tolerated `|Σ parts/Q_jt − 1|` in the budget table.
const BUDGET_TOLERANCE: f64 = 1e-6;
/// Factor used to call one scale much smaller than another.
const REGIME_MARGIN: f64 = 10.0;

/// `n` points at the cell centres of `(0, π)`, which never hit `0` or `π/2`.
fn open_angles(n: usize) -> Vec<f64> {
    (0..n).map(|k| (k as f64 + 0.5) * PI / n as f64).collect()
}

pub fn shift(cfg: &ScenarioConfig, out: &mut Output) -> Result<(), CliError> {
    let block = cfg.shift.as_ref().ok_or(CliError::MissingBlock("shift"))?;
    if block.gammas.is_empty() {
        return Err(CliError::Config("shift.gammas is empty".into()));
    }
    let thetas = block.thetas.clone().unwrap_or_else(|| open_angles(block.theta_points));
    // Unit γ0t, so the shift column is already normalized.
    let table = transition_curves(&block.gammas, &thetas, 1.0)?;
    out.table(&table)
}

pub fn budget(cfg: &ScenarioConfig, out: &mut Output) -> Result<(), CliError> {
    let block = cfg.budget.clone().ok_or(CliError::MissingBlock("budget"))?;
    let sigma = block.sigma;
    let g = 2.0 * sigma * block.g_over_2sigma;
    let a = Observable::pauli_z();
    let coupling = CouplingConfig::new(g, Generator::MomentumKick, a.clone())?;
    let meter = MeterState::Grid(GaussianMeter::new(sigma)?.default_grid(g)?);

    let mut table = Table::new(
        "budget",
        &[
            "theta_i",
            "overlap",
            "weak_value_abs",
            "amplified_ratio",
            "aav_margin",
            "p_f",
            "q_wva_ratio",
            "f_p_ratio",
            "failure_ratio",
            "sum_ratio",
        ],
    );
    let mut worst: f64 = 0.0;
    for theta in open_angles(block.theta_points) {
        let pre = bloch_state(theta, 0.0);
        let post = optimal_postselection(&pre, &a)?;
        let b = info_budget(&pre, &post, &coupling, &meter)?;
        let w = weak_value(&pre, &post, &a)?;
        let parts = [b.pf_qf / b.q_jt, b.f_p / b.q_jt, b.pr_qr / b.q_jt];
        let sum: f64 = parts.iter().sum();
        worst = worst.max((sum - 1.0).abs());
        table.push(vec![
            theta,
            post.overlap(&pre).norm(),
            w.norm(),
            g * w.norm() / sigma,
            aav_condition_margin(&pre, &post, &a, g, sigma, 8)?,
            b.p_f,
            parts[0],
            parts[1],
            parts[2],
            sum,
        ]);
    }
    out.table(&table)?;

    if let Some(values) = &block.p_f_values {
        let mut fisher = Table::new(
            "fisher_vs_pf",
            &["p_f", "p_f_real", "fisher_real", "p_f_imaginary", "fisher_imaginary", "q_wva"],
        );
        for &p_f in values {
            let (p_real, f_real) = standard::selection_fisher(WeakKind::Real, g, sigma, p_f)?;
            let (p_imag, f_imag) = standard::selection_fisher(WeakKind::Imaginary, g, sigma, p_f)?;
            fisher.push(vec![p_f, p_real, f_real, p_imag, f_imag, 1.0 / (sigma * sigma)]);
        }
        out.table(&fisher)?;
    }

    if worst > BUDGET_TOLERANCE {
        return Err(CliError::CheckFailed(format!(
            "budget parts sum to Q_jt only within {worst:e} (tolerance {BUDGET_TOLERANCE:e})"
        )));
    }
    Ok(())
}

fn regime_code(regime: NoiseRegime) -> f64 {
    match regime {
        NoiseRegime::General => 0.0,
        NoiseRegime::White => 1.0,
        NoiseRegime::SlowDecorrelated => 2.0,
        NoiseRegime::SlowCorrelated => 3.0,
    }
}

pub fn noise(cfg: &ScenarioConfig, out: &mut Output) -> Result<(), CliError> {
    let block = cfg.noise.as_ref().ok_or(CliError::MissingBlock("noise"))?;
    let n = block.n.ok_or_else(|| CliError::Config("noise.n is required by the noise command".into()))?;
    let p_f = block.p_f.unwrap_or(0.01);
    let w = block.weak_value.unwrap_or(1.0 / p_f.sqrt());
    // Without an explicit sweep: the configured τ, then one τ inside each limit.
    let taus = block.tau_sweep.clone().unwrap_or_else(|| {
        vec![
            block.tau_c,
            1e-3 * block.dt,
            block.dt / p_f.sqrt(),
            100.0 * block.dt / p_f,
        ]
    });
    let mut table = Table::new(
        "information",
        &[
            "tau_c",
            "regime",
            "i_cm_closed",
            "i_cm_numeric",
            "f_cm_closed",
            "f_cm_numeric",
            "i_wva_closed",
            "i_wva_numeric",
            "f_wva_closed",
            "f_wva_numeric",
        ],
    );
    for tau in taus {
        let model = CorrelatedNoiseModel::new(block.a, block.c, block.dt, tau, n)?;
        let row = information_row(&model, p_f, w, REGIME_MARGIN)?;
        table.push(vec![
            tau,
            regime_code(row.regime),
            row.i_cm.0,
            row.i_cm.1,
            row.f_cm.0,
            row.f_cm.1,
            row.i_wva.0,
            row.i_wva.1,
            row.f_wva.0,
            row.f_wva.1,
        ]);
    }
    out.table(&table)
}

pub fn scheme(cfg: &ScenarioConfig, out: &mut Output) -> Result<(), CliError> {
    let result = run_scheme(cfg.require_scheme()?)?;
    out.report("scheme", &result.report)?;
    for table in &result.tables {
        out.table(table)?;
    }
    Ok(())
}

pub fn estimate(cfg: &ScenarioConfig, out: &mut Output) -> Result<(), CliError> {
    let experiment = cfg.experiment.as_ref().ok_or(CliError::MissingBlock("experiment"))?;
    let plan = ExperimentPlan {
        scheme: cfg.require_scheme()?.clone(),
        noise: cfg.noise.as_ref().map(|n| n.spec()),
        nu: experiment.nu,
        trials: experiment.trials,
        seed: experiment.seed,
        estimator: experiment.estimator,
    };
    let outcome = run_experiment_detailed(&plan)?;
    out.report("estimate", &json!({ "plan": plan, "result": outcome.report }))?;
    let mut estimates = Table::new("estimates", &["trial", "estimate"]);
    for (t, e) in outcome.estimates.iter().enumerate() {
        estimates.push(vec![t as f64, *e]);
    }
    out.table(&estimates)?;
    if experiment.dump_samples {
        let mut samples = Table::new("samples", &["index", "value"]);
        for (i, s) in outcome.first_trial_samples.iter().enumerate() {
            samples.push(vec![i as f64, *s]);
        }
        out.table(&samples)?;
    }
    Ok(())
}
