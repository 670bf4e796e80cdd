//! Phase-space WVA: a qubit coupled to a photon-number meter through `e^{−igC⊗n}`
//! with `C = |1⟩⟨1|`, pre-selected in `|+⟩` and post-selected on
//! `(|1⟩ − e^{−iε}|0⟩)/√2`.
//!
//! The post-selection probability `p_f = ½Σ P(n)[1 − cos(gn + ε)]` alone carries
//! `F_p ≈ n̄²` for a coherent meter.

use serde::{Deserialize, Serialize};

use super::standard::finish_model;
use super::{check_finite, MeasurementModel, OutcomeSpace, SchemeOutput, SchemeReport};
use crate::coupling::{evolve_joint, postselect, CouplingConfig, Generator, MeterState};
use crate::error::{Error, Result};
use crate::infometrics::{info_budget, InfoBudget};
use crate::meter::{fock_moments, FockMeter};
use crate::qsys::{weak_value, Observable, SystemState};
use crate::table::Table;
use crate::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FockSpec {
    Coherent {
        mean_photons: f64,
        #[serde(default)]
        n_max: Option<usize>,
    },
    /// Equal mixture of vacuum and `|√N⟩` with `N = peak_photons`; photon-number
    /// variance `N²/4 + N/2`.
    TwoPeak {
        peak_photons: f64,
        #[serde(default)]
        n_max: Option<usize>,
    },
}

impl FockSpec {
    pub fn build(&self) -> Result<FockMeter> {
        let (components, n_max) = match *self {
            FockSpec::Coherent { mean_photons, n_max } => {
                check_nonnegative(mean_photons)?;
                (vec![(1.0, Complex64::new(mean_photons.sqrt(), 0.0))], n_max)
            }
            FockSpec::TwoPeak { peak_photons, n_max } => {
                check_nonnegative(peak_photons)?;
                let peak = Complex64::new(peak_photons.sqrt(), 0.0);
                (vec![(0.5, Complex64::new(0.0, 0.0)), (0.5, peak)], n_max)
            }
        };
        match n_max {
            Some(n) => FockMeter::mixture_truncated(components, n),
            None => FockMeter::mixture(components),
        }
    }
}

fn check_nonnegative(n: f64) -> Result<()> {
    if !(n >= 0.0) || !n.is_finite() {
        return Err(Error::InvalidParameter(format!("mean photon number must be ≥ 0, got {n}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpaceSpec {
    pub g: f64,
    pub epsilon: f64,
    pub meter: FockSpec,
    /// Mean photon numbers for a coherent-meter scan of `F_p`.
    #[serde(default)]
    pub sweep: Option<Vec<f64>>,
}

impl PhaseSpaceSpec {
    pub fn states(&self) -> (SystemState, SystemState) {
        let pre = SystemState::new(vec![Complex64::new(FRAC_1_SQRT_2, 0.0); 2]).expect("normalized");
        let post = SystemState::new(vec![
            -Complex64::from_polar(FRAC_1_SQRT_2, -self.epsilon),
            Complex64::new(FRAC_1_SQRT_2, 0.0),
        ])
        .expect("normalized");
        (pre, post)
    }

    pub fn config(&self, g: f64) -> Result<CouplingConfig> {
        CouplingConfig::new(g, Generator::PhotonNumberPhase, Observable::diagonal(&[0.0, 1.0]))
    }

    pub fn budget(&self, meter: &FockMeter) -> Result<InfoBudget> {
        let (pre, post) = self.states();
        info_budget(&pre, &post, &self.config(self.g)?, &MeterState::Fock(meter.clone()))
    }

    /// Closed-form `p_f(g)` and its derivative for photon distribution `P(n)`.
    pub fn selection_probability(photons: &[f64], epsilon: f64, g: f64) -> (f64, f64) {
        photons
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(p, dp), (n, w)| {
                let x = g * n as f64 + epsilon;
                (p + 0.5 * w * (1.0 - x.cos()), dp + 0.5 * w * n as f64 * x.sin())
            })
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// `F_p` of coherent meters over `mean_photons`, with the fitted log-log slope.
pub fn heisenberg_sweep(spec: &PhaseSpaceSpec, mean_photons: &[f64]) -> Result<(Table, f64)> {
    if mean_photons.len() < 2 {
        return Err(Error::InvalidParameter("a sweep needs at least two photon numbers".into()));
    }
    let mut table = Table::new("heisenberg_sweep", &["mean_photons", "f_p", "q_jt", "p_f"]);
    let mut fp = Vec::with_capacity(mean_photons.len());
    for &n in mean_photons {
        let meter = FockSpec::Coherent {
            mean_photons: n,
            n_max: None,
        }
        .build()?;
        let b = spec.budget(&meter)?;
        table.push(vec![n, b.f_p, b.q_jt, b.p_f]);
        fp.push(b.f_p);
    }
    Ok((table, log_log_slope(mean_photons, &fp)))
}

pub fn run(spec: &PhaseSpaceSpec) -> Result<SchemeOutput> {
    check_finite("g", spec.g)?;
    check_finite("epsilon", spec.epsilon)?;
    let meter = spec.meter.build()?;
    let (pre, post) = spec.states();
    let cfg = spec.config(spec.g)?;
    let budget = spec.budget(&meter)?;
    let joint = evolve_joint(&pre, &MeterState::Fock(meter.clone()), &cfg)?;
    let selected = postselect(&joint, &post)?;
    let initial = meter.photon_distribution();
    let conditioned = selected.success.generator_density();
    let (mean_n, var_n) = fock_moments(&meter)?;
    let mean_selected: f64 = conditioned.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    let w = weak_value(&pre, &post, &cfg.observable)?;

    let mut report = SchemeReport::new("phase_space", budget.p_f, budget.f_p);
    report.q_jt = Some(budget.q_jt);
    if spec.g != 0.0 {
        report.amplification = Some((mean_selected - mean_n) / spec.g);
    }
    for (k, v) in [
        ("q_jt", budget.q_jt),
        ("pf_qf", budget.pf_qf),
        ("pr_qr", budget.pr_qr),
        ("f_p", budget.f_p),
        ("budget_relative_residual", budget.relative_residual()),
        ("p_f_small_coupling", 0.5 * (1.0 - (spec.g * mean_n + spec.epsilon).cos())),
        ("weak_value_re", w.re),
        ("weak_value_im", w.im),
        ("mean_photons", mean_n),
        ("var_photons", var_n),
        ("mean_photon_shift", mean_selected - mean_n),
        ("mean_photon_shift_linear", 2.0 * spec.g * w.im * var_n),
        ("f_wva_ps", 4.0 * budget.p_f * w.im * w.im * var_n),
    ] {
        report.detail(k, v);
    }

    let mut photons = Table::new("photon_distribution", &["n", "initial", "postselected"]);
    for (n, (a, b)) in initial.iter().zip(&conditioned).enumerate() {
        photons.push(vec![n as f64, *a, *b]);
    }
    let mut tables = vec![photons];
    if let Some(ns) = &spec.sweep {
        let (table, slope) = heisenberg_sweep(spec, ns)?;
        report.detail("heisenberg_slope", slope);
        tables.push(table);
    }
    Ok(SchemeOutput { report, tables })
}

/// Success/failure statistics alone: outcome 1 is a successful post-selection.
pub fn model(spec: &PhaseSpaceSpec) -> Result<MeasurementModel> {
    check_finite("g", spec.g)?;
    check_finite("epsilon", spec.epsilon)?;
    let photons = spec.meter.build()?.photon_distribution();
    let epsilon = spec.epsilon;
    let family = move |g: f64| -> Result<Vec<f64>> {
        let (p, _) = PhaseSpaceSpec::selection_probability(&photons, epsilon, g);
        Ok(vec![p, 1.0 - p])
    };
    // Every probe is recorded, as either success or failure.
    finish_model(spec.g, OutcomeSpace::Discrete, vec![1.0, 0.0], Box::new(family), 1.0)
}
