//! Standard real and imaginary WVA with a Gaussian pointer, plus the
//! conventional (no post-selection) reference.

use serde::{Deserialize, Serialize};

use super::{check_finite, check_positive, masses, MeasurementModel, OutcomeSpace, PointerSetup, SchemeOutput, SchemeReport, WeakKind};
use crate::coupling::{aav_condition_margin, aav_shifts, classify_regime, exact_shifts};
use crate::dist::SampledDistribution;
use crate::error::Result;
use crate::infometrics::{classical_fisher, default_step, qfi_joint, FnDistribution};
use crate::meter::{gaussian_density, GaussianMeter};
use crate::qsys::{bloch_state, weak_value, SystemState};
use crate::table::Table;
use crate::Complex64;
use std::f64::consts::FRAC_PI_2;

/// Pointer shifted by `g` without any selection: the conventional measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConventionalSpec {
    pub g: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StandardSpec {
    pub g: f64,
    pub sigma: f64,
    pub weak: WeakKind,
    /// `ε` for the real scheme, `φ` for the imaginary one.
    pub angle: f64,
}

impl StandardSpec {
    pub fn validate(&self) -> Result<()> {
        check_finite("g", self.g)?;
        check_positive("sigma", self.sigma)?;
        check_finite("angle", self.angle)
    }

    /// Real: weak value `cot(ε/2)`; imaginary: `−i cot(φ/2)`.
    pub fn states(&self) -> (SystemState, SystemState) {
        match self.weak {
            WeakKind::Real => (bloch_state(FRAC_PI_2 - self.angle, 0.0), bloch_state(-FRAC_PI_2, 0.0)),
            WeakKind::Imaginary => (bloch_state(FRAC_PI_2, 0.0), bloch_state(-FRAC_PI_2, self.angle)),
        }
    }

    fn setup(&self) -> Result<(PointerSetup, Complex64)> {
        self.validate()?;
        let (pre, post) = self.states();
        let w = weak_value(&pre, &post, &crate::qsys::Observable::pauli_z())?;
        let shift = 2.0 * (self.g * w.norm()).abs().min(self.sigma) + self.g.abs();
        Ok((PointerSetup::new(pre, post, self.sigma, shift)?, w))
    }

    fn readout(&self, meter: &crate::meter::GridMeter) -> SampledDistribution {
        readout(self.weak, meter)
    }
}

/// Quadrature read out: position for real, momentum for imaginary weak values.
fn readout(weak: WeakKind, meter: &crate::meter::GridMeter) -> SampledDistribution {
    match weak {
        WeakKind::Real => meter.position_density(),
        WeakKind::Imaginary => meter.momentum_density(),
    }
}

/// `(p_f, p_f·F_f)` for a selection with zero-coupling success probability
/// `p_f`, reading the quadrature matched to the weak value.
///
/// Real: `|ψ_i⟩ = bloch(θ)`, `|ψ_f⟩ = bloch(−θ)` with `cos²θ = p_f`, so `w = 1/cos θ`.
/// Imaginary: `bloch(π/2)` to `bloch(−π/2, φ)` with `sin²(φ/2) = p_f`.
pub fn selection_fisher(weak: WeakKind, g: f64, sigma: f64, p_f: f64) -> Result<(f64, f64)> {
    check_finite("g", g)?;
    check_positive("sigma", sigma)?;
    if !(p_f > 0.0 && p_f <= 1.0) {
        return Err(crate::Error::InvalidParameter(format!("p_f must lie in (0, 1], got {p_f}")));
    }
    let (pre, post) = match weak {
        WeakKind::Real => {
            let theta = p_f.sqrt().acos();
            (bloch_state(theta, 0.0), bloch_state(-theta, 0.0))
        }
        WeakKind::Imaginary => {
            let phi = 2.0 * p_f.sqrt().asin();
            (bloch_state(FRAC_PI_2, 0.0), bloch_state(-FRAC_PI_2, phi))
        }
    };
    let w = weak_value(&pre, &post, &crate::qsys::Observable::pauli_z())?;
    let shift = 2.0 * (g * w.norm()).abs().min(sigma) + g.abs();
    let setup = PointerSetup::new(pre, post, sigma, shift)?;
    let (selected, meter) = setup.conditioned(g)?;
    let support = readout(weak, &meter).nodes();
    let dist = FnDistribution::new(support, move |x| {
        let (_, m) = setup.conditioned(x)?;
        let d = readout(weak, &m);
        Ok(masses(d.density(), d.dx()))
    });
    let fi = classical_fisher(&dist, g, default_step(g))?.fi;
    Ok((selected, selected * fi))
}

pub fn run(spec: &StandardSpec) -> Result<SchemeOutput> {
    let (setup, w) = spec.setup()?;
    let (g, sigma) = (spec.g, spec.sigma);
    let (p_f, meter) = setup.conditioned(g)?;
    let readout = spec.readout(&meter);
    let model = model(spec)?;
    let fisher = p_f * model.fisher;
    let q_jt = qfi_joint(&setup.pre, &setup.meter(), &setup.config(g)?)?;

    let mut report = SchemeReport::new("standard", p_f, fisher);
    let shift = readout.mean();
    let unit = match spec.weak {
        WeakKind::Real => 1.0,
        WeakKind::Imaginary => 1.0 / (2.0 * sigma * sigma),
    };
    if g != 0.0 {
        report.amplification = Some(shift / (g * unit));
    }
    report.q_jt = Some(q_jt);
    report.snr_per_root_nu = Some(p_f.sqrt() * shift.abs() / readout.variance().sqrt());
    report.regime = Some(classify_regime(g.abs(), sigma, w));
    let margin = aav_condition_margin(&setup.pre, &setup.post, &setup.observable, g, sigma, 8)?;
    if margin >= 1.0 {
        report
            .warnings
            .push(format!("weak-coupling condition violated: margin {margin:.3} ≥ 1"));
    }
    let (aq, ap) = aav_shifts(w, g, sigma);
    let (eq, ep) = exact_shifts(w, g, sigma);
    for (k, v) in [
        ("weak_value_re", w.re),
        ("weak_value_im", w.im),
        ("shift_q", meter.mean_q()),
        ("shift_p", meter.mean_p()),
        ("shift_q_linear", aq),
        ("shift_p_linear", ap),
        ("shift_q_second_order", eq),
        ("shift_p_second_order", ep),
        ("aav_margin", margin),
        ("p_f_overlap", setup.post.overlap(&setup.pre).norm_sqr()),
        ("fisher_postselected", model.fisher),
    ] {
        report.detail(k, v);
    }

    let mut table = Table::new("meter", &["q", "position_density", "p", "momentum_density"]);
    let pos = meter.position_density();
    let mom = meter.momentum_density();
    for i in 0..pos.len() {
        table.push(vec![pos.x(i), pos.density()[i], mom.x(i), mom.density()[i]]);
    }
    Ok(SchemeOutput {
        report,
        tables: vec![table],
    })
}

/// Post-selected readout distribution about `g`.
pub fn model(spec: &StandardSpec) -> Result<MeasurementModel> {
    let (setup, _) = spec.setup()?;
    let g = spec.g;
    let (p_f, meter) = setup.conditioned(g)?;
    let reference = spec.readout(&meter);
    let (x0, dx) = (reference.x0(), reference.dx());
    let support = reference.nodes();
    let s = *spec;
    let family = move |x: f64| -> Result<Vec<f64>> {
        let (_, m) = setup.conditioned(x)?;
        let d = s.readout(&m);
        Ok(masses(d.density(), d.dx()))
    };
    finish_model(g, OutcomeSpace::Continuous { x0, dx }, support, Box::new(family), p_f)
}

pub(crate) fn finish_model(
    g: f64,
    space: OutcomeSpace,
    support: Vec<f64>,
    family: Box<dyn Fn(f64) -> Result<Vec<f64>> + Send + Sync>,
    p_f: f64,
) -> Result<MeasurementModel> {
    let h = default_step(g);
    let mut model = MeasurementModel {
        g,
        space,
        support,
        family,
        calibration: 0.0,
        fisher: 0.0,
        p_f,
    };
    model.calibration = (model.mean(g + h)? - model.mean(g - h)?) / (2.0 * h);
    let fisher = {
        let dist = FnDistribution::new(model.support.clone(), |x| model.probabilities(x));
        classical_fisher(&dist, g, h)?.fi
    };
    model.fisher = fisher;
    Ok(model)
}

pub fn run_conventional(spec: &ConventionalSpec) -> Result<SchemeOutput> {
    let model = conventional_model(spec)?;
    let mut report = SchemeReport::new("conventional", 1.0, model.fisher);
    report.amplification = Some(model.calibration);
    report.q_jt = Some(1.0 / (spec.sigma * spec.sigma));
    report.snr_per_root_nu = Some(spec.g.abs() / spec.sigma);
    let mut table = Table::new("meter", &["q", "position_density"]);
    let p = model.probabilities(spec.g)?;
    if let OutcomeSpace::Continuous { dx, .. } = model.space {
        for (x, m) in model.support.iter().zip(&p) {
            table.push(vec![*x, m / dx]);
        }
    }
    Ok(SchemeOutput {
        report,
        tables: vec![table],
    })
}

/// Gaussian pointer of width `σ` centred at `g`, on a grid fixed around the true value.
pub fn conventional_model(spec: &ConventionalSpec) -> Result<MeasurementModel> {
    check_finite("g", spec.g)?;
    check_positive("sigma", spec.sigma)?;
    let meter = GaussianMeter::new(spec.sigma)?;
    let points = 4001;
    let half = 10.0 * spec.sigma;
    let x0 = spec.g - half;
    let dx = 2.0 * half / (points - 1) as f64;
    let support: Vec<f64> = (0..points).map(|i| x0 + i as f64 * dx).collect();
    let nodes = support.clone();
    let family = move |g: f64| -> Result<Vec<f64>> {
        Ok(nodes.iter().map(|x| gaussian_density(&meter, x - g) * dx).collect())
    };
    finish_model(spec.g, OutcomeSpace::Continuous { x0, dx }, support, Box::new(family), 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_selection_keeps_information_at_every_p_f() {
        for p_f in [0.05, 0.3, 1.0] {
            let (p, f) = selection_fisher(WeakKind::Real, 1e-3, 1.0, p_f).unwrap();
            assert!((p - p_f).abs() < 1e-3, "{p}");
            assert!((f - 1.0).abs() < 1e-2, "{p_f}: {f}");
        }
    }

    #[test]
    fn imaginary_selection_needs_small_p_f() {
        let (_, small) = selection_fisher(WeakKind::Imaginary, 1e-3, 1.0, 0.01).unwrap();
        let (_, large) = selection_fisher(WeakKind::Imaginary, 1e-3, 1.0, 0.9).unwrap();
        assert!((small - 1.0).abs() < 0.02, "{small}");
        assert!(large < 0.2, "{large}");
    }
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn real_weak_value_two_over_epsilon() {
        let sigma = FRAC_1_SQRT_2;
        let spec = StandardSpec {
            g: sigma / 400.0,
            sigma,
            weak: WeakKind::Real,
            angle: 0.01,
        };
        let out = run(&spec).unwrap();
        let r = &out.report;
        assert!((r.details["weak_value_re"] - 200.0).abs() < 0.01);
        assert!((r.details["p_f_overlap"] - (0.005f64).sin().powi(2)).abs() < 1e-15);
        let amp = r.amplification.unwrap();
        assert!((amp / 200.0 - 1.0).abs() < 0.1, "{amp}");
        assert!(r.fisher <= r.q_jt.unwrap() * (1.0 + 1e-4));
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn imaginary_shift_in_momentum() {
        let sigma = 1.0;
        let g = 1e-4;
        let phi = 0.01;
        let spec = StandardSpec {
            g,
            sigma,
            weak: WeakKind::Imaginary,
            angle: phi,
        };
        let r = run(&spec).unwrap().report;
        let expected = g * (-1.0 / (phi / 2.0).tan()) / (2.0 * sigma * sigma);
        assert!((r.details["shift_p"] / expected - 1.0).abs() < 1e-2);
        assert!(r.details["shift_q"].abs() < 1e-3 * expected.abs());
    }

    #[test]
    fn balanced_selection_is_conventional_like() {
        let spec = StandardSpec {
            g: 0.01,
            sigma: 1.0,
            weak: WeakKind::Real,
            angle: FRAC_PI_2,
        };
        let r = run(&spec).unwrap().report;
        assert!((r.p_f - 0.5).abs() < 1e-4);
        let c = run_conventional(&ConventionalSpec { g: 0.01, sigma: 1.0 }).unwrap().report;
        assert!((c.fisher - 1.0).abs() < 1e-6);
        assert!((r.fisher - 0.5 * c.fisher).abs() < 1e-3, "{}", r.fisher);
    }
}
