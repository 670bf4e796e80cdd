//! Entanglement-assisted WVA over `N` probes, and its iterative single-probe twin.
//!
//! Both reduce to a qubit on `{|0⟩^⊗N, |1⟩^⊗N}` with `A = diag(N, −N)`,
//! pre-selected in `|+⟩` and coupled to a qubit meter `|+⟩` through `e^{−igA⊗σ_z}`.
//! The post-selection `(|0⟩ − e^{iχ}|1⟩)/√2` gives weak value `−iN cot(χ/2)` and
//! `p_f = sin²(χ/2)`; the meter is read out in `σ_z`.

use serde::{Deserialize, Serialize};

use super::standard::finish_model;
use super::{check_finite, MeasurementModel, OutcomeSpace, SchemeOutput, SchemeReport};
use crate::coupling::{CouplingConfig, Generator};
use crate::error::{Error, Result};
use crate::infometrics::fisher_sum;
use crate::qsys::{weak_value, Observable, SystemState};
use crate::table::Table;
use crate::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

/// Largest probe number for which `4N²` is exact in `f64`.
pub const MAX_PROBES: u64 = 1 << 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostVariant {
    /// `χ = 2Nε`: `p_f ≈ N²ε²`, `|w| ≈ 1/ε` per unit of `N`.
    MaxProb,
    /// `χ = 2√N ε`: `p_f ≈ Nε²`, `|w| ≈ √N/ε`.
    MaxWeakValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntangledSpec {
    pub g: f64,
    pub epsilon: f64,
    pub n: u64,
    pub variant: PostVariant,
    /// One probe interacting `N` times instead of `N` entangled probes.
    #[serde(default)]
    pub iterative: bool,
}

impl EntangledSpec {
    pub fn validate(&self) -> Result<()> {
        check_finite("g", self.g)?;
        check_finite("epsilon", self.epsilon)?;
        if self.n == 0 || self.n > MAX_PROBES {
            return Err(Error::InvalidParameter(format!(
                "probe number must lie in [1, {MAX_PROBES}], got {}",
                self.n
            )));
        }
        Ok(())
    }

    /// Post-selection phase `χ`.
    pub fn chi(&self) -> f64 {
        let n = self.n as f64;
        match self.variant {
            PostVariant::MaxProb => 2.0 * n * self.epsilon,
            PostVariant::MaxWeakValue => 2.0 * n.sqrt() * self.epsilon,
        }
    }

    /// Joint-state QFI `4N²`, computed in integer arithmetic.
    pub fn q_jt(&self) -> f64 {
        let n = self.n as u128;
        (4 * n * n) as f64
    }

    pub fn states(&self) -> (SystemState, SystemState) {
        let pre = SystemState::new(vec![Complex64::new(FRAC_1_SQRT_2, 0.0); 2]).expect("normalized");
        let post = SystemState::new(vec![
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            -Complex64::from_polar(FRAC_1_SQRT_2, self.chi()),
        ])
        .expect("normalized");
        (pre, post)
    }

    pub fn observable(&self) -> Observable {
        let n = self.n as f64;
        Observable::diagonal(&[n, -n])
    }

    pub fn config(&self) -> Result<CouplingConfig> {
        CouplingConfig::new(self.g, Generator::PauliZ, self.observable())
    }

    /// `[P(success, σ_z = +1), P(success, σ_z = −1), P(failure)]` and their derivatives.
    pub fn outcomes(&self, g: f64) -> ([f64; 3], [f64; 3]) {
        let n = self.n as f64;
        let chi = self.chi();
        let (a, b) = (2.0 * g * n - chi, 2.0 * g * n + chi);
        let plus = 0.25 * (1.0 - a.cos());
        let minus = 0.25 * (1.0 - b.cos());
        let dplus = 0.5 * n * a.sin();
        let dminus = 0.5 * n * b.sin();
        (
            [plus, minus, 1.0 - plus - minus],
            [dplus, dminus, -dplus - dminus],
        )
    }
}

pub fn run(spec: &EntangledSpec) -> Result<SchemeOutput> {
    spec.validate()?;
    let (p, dp) = spec.outcomes(spec.g);
    let p_f = p[0] + p[1];
    let fisher = fisher_sum(&p[..2], &dp[..2]);
    let total = fisher_sum(&p, &dp);
    let (pre, post) = spec.states();
    let w = weak_value(&pre, &post, &spec.observable())?;

    let mut report = SchemeReport::new("entangled", p_f, fisher);
    report.q_jt = Some(spec.q_jt());
    report.amplification = Some(w.norm());
    let n = spec.n as f64;
    let small = match spec.variant {
        PostVariant::MaxProb => n * n * spec.epsilon * spec.epsilon,
        PostVariant::MaxWeakValue => n * spec.epsilon * spec.epsilon,
    };
    for (k, v) in [
        ("probes", n),
        ("chi", spec.chi()),
        ("weak_value_re", w.re),
        ("weak_value_im", w.im),
        ("p_f_exact", (spec.chi() / 2.0).sin().powi(2)),
        ("p_f_small_angle", small),
        ("fisher_all_outcomes", total),
        ("q_sql", 4.0 * n),
        ("iterative", if spec.iterative { 1.0 } else { 0.0 }),
    ] {
        report.detail(k, v);
    }
    let mut table = Table::new("meter_outcomes", &["sigma_z", "probability", "derivative"]);
    table.push(vec![1.0, p[0], dp[0]]);
    table.push(vec![-1.0, p[1], dp[1]]);
    table.push(vec![0.0, p[2], dp[2]]);
    Ok(SchemeOutput {
        report,
        tables: vec![table],
    })
}

/// Outcomes `+1`, `−1` (meter readout after success) and `0` (failure).
pub fn model(spec: &EntangledSpec) -> Result<MeasurementModel> {
    spec.validate()?;
    let s = *spec;
    let family = move |g: f64| -> Result<Vec<f64>> { Ok(s.outcomes(g).0.to_vec()) };
    finish_model(spec.g, OutcomeSpace::Discrete, vec![1.0, -1.0, 0.0], Box::new(family), 1.0)
}
