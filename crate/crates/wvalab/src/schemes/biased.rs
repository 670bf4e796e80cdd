//! Biased WVA: a bias phase `β` before the coupling turns a longitudinal delay
//! `τ` into a centroid shift of the post-selected spectrum
//! `S(ω) = sin²[ω(β + τ) − ε] |f(ω)|²`.
//!
//! The spectrum is Gaussian, `|f(ω)|² = exp(−(ω − ω0)²/δ²)/(√π δ)`, so its
//! frequency variance is `δ²/2`.

use serde::{Deserialize, Serialize};

use super::{centroid, check_finite, check_positive, SchemeOutput, SchemeReport};
use crate::error::{Error, Result};
use crate::infometrics::{classical_fisher, default_step, FnDistribution};
use crate::table::Table;
use std::f64::consts::PI;

const POINTS: usize = 20001;
/// Window half-width in units of `δ`.
const WINDOW: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasedSpec {
    pub tau: f64,
    /// Bias phase; the symmetric point `β_s` is solved for when absent.
    #[serde(default)]
    pub beta: Option<f64>,
    pub epsilon: f64,
    pub omega0: f64,
    pub delta_omega: f64,
    /// Spectrometer resolution `ΔΩ`; enables the resolution bounds in the report.
    #[serde(default)]
    pub resolution: Option<f64>,
}

impl BiasedSpec {
    pub fn validate(&self) -> Result<()> {
        check_finite("tau", self.tau)?;
        check_finite("epsilon", self.epsilon)?;
        check_positive("omega0", self.omega0)?;
        check_positive("delta_omega", self.delta_omega)?;
        if let Some(b) = self.beta {
            check_finite("beta", b)?;
        }
        if let Some(r) = self.resolution {
            check_positive("resolution", r)?;
        }
        Ok(())
    }

    pub fn grid(&self) -> (Vec<f64>, f64) {
        let half = WINDOW * self.delta_omega;
        let dw = 2.0 * half / (POINTS - 1) as f64;
        ((0..POINTS).map(|i| self.omega0 - half + i as f64 * dw).collect(), dw)
    }

    pub fn envelope(&self, omega: f64) -> f64 {
        let u = (omega - self.omega0) / self.delta_omega;
        (-u * u).exp() / (PI.sqrt() * self.delta_omega)
    }

    pub fn spectrum(&self, beta: f64, tau: f64) -> Vec<f64> {
        let (w, _) = self.grid();
        w.iter()
            .map(|&x| (x * (beta + tau) - self.epsilon).sin().powi(2) * self.envelope(x))
            .collect()
    }

    /// Centroid of `S` relative to `ω0`.
    pub fn centroid_shift(&self, beta: f64, tau: f64) -> f64 {
        let (w, _) = self.grid();
        centroid(&w, &self.spectrum(beta, tau)) - self.omega0
    }

    /// `β_s`: root of the centroid shift at `τ = 0`, bracketed around `ε/ω0`.
    pub fn symmetric_bias(&self) -> Result<f64> {
        let guess = self.epsilon / self.omega0;
        let f = |b: f64| self.centroid_shift(b, 0.0);
        let width = 0.5 * guess.abs().max(1e-12);
        let (mut lo, mut hi) = (guess - width, guess + width);
        let (mut flo, fhi) = (f(lo), f(hi));
        if flo.signum() == fhi.signum() {
            return Err(Error::DegenerateDenominator(format!(
                "no sign change of the centroid shift on [{lo}, {hi}]"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if fm == 0.0 || (hi - lo) < 1e-15 * guess.abs() {
                return Ok(mid);
            }
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn beta(&self) -> Result<f64> {
        match self.beta {
            Some(b) => Ok(b),
            None => self.symmetric_bias(),
        }
    }

    /// Leading-order `p_f ≈ δ²ε²/(2ω0²)` at the symmetric bias.
    pub fn p_f_closed_form(&self) -> f64 {
        (self.delta_omega * self.epsilon / self.omega0).powi(2) / 2.0
    }
}

pub fn run(spec: &BiasedSpec) -> Result<SchemeOutput> {
    spec.validate()?;
    let beta = spec.beta()?;
    let (w, dw) = spec.grid();
    let s = spec.spectrum(beta, spec.tau);
    let p_f = s.iter().sum::<f64>() * dw;
    let shift = spec.centroid_shift(beta, spec.tau);
    let h = default_step(spec.tau).max(1e-6 / spec.omega0);
    let slope = (spec.centroid_shift(beta, spec.tau + h) - spec.centroid_shift(beta, spec.tau - h)) / (2.0 * h);

    // Shape information about τ of the normalized post-selected spectrum.
    let dist = FnDistribution::new(w.clone(), |t| {
        let v = spec.spectrum(beta, t);
        let total: f64 = v.iter().sum();
        Ok(v.into_iter().map(|x| x / total).collect())
    });
    let shape_fi = classical_fisher(&dist, spec.tau, h)?.fi;

    let mut report = SchemeReport::new("biased", p_f, p_f * shape_fi);
    report.amplification = Some(slope);
    let amplification_unbiased = spec.delta_omega * spec.delta_omega / spec.epsilon;
    for (k, v) in [
        ("beta", beta),
        ("beta_symmetric_guess", spec.epsilon / spec.omega0),
        ("centroid_shift", shift),
        ("slope", slope),
        ("slope_closed_form", 2.0 * spec.omega0 * spec.omega0 / spec.epsilon),
        ("amplification_unbiased", amplification_unbiased),
        ("p_f_grid", p_f),
        ("p_f_closed_form", spec.p_f_closed_form()),
        ("fisher_postselected", shape_fi),
    ] {
        report.detail(k, v);
    }
    if let Some(res) = spec.resolution {
        let e = spec.epsilon.abs();
        report.detail("tau_min_unbiased", e * res / (spec.delta_omega * spec.delta_omega));
        report.detail("tau_min_biased", e * res / (2.0 * spec.omega0 * spec.omega0));
    }
    let mut table = Table::new("spectrum", &["omega", "envelope", "postselected"]);
    for (x, v) in w.iter().zip(&s) {
        table.push(vec![*x, spec.envelope(*x), *v]);
    }
    Ok(SchemeOutput {
        report,
        tables: vec![table],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(tau: f64, beta: Option<f64>) -> BiasedSpec {
        BiasedSpec {
            tau,
            beta,
            epsilon: 0.1,
            omega0: 10.0,
            delta_omega: 1.0,
            resolution: None,
        }
    }

    #[test]
    fn symmetric_bias_gives_no_shift() {
        let s = spec(0.0, None);
        let b = s.symmetric_bias().unwrap();
        assert!((b - 0.01).abs() < 1e-12, "{b}");
        assert!(s.centroid_shift(b, 0.0).abs() < 1e-12);
    }

    #[test]
    fn slope_at_symmetric_bias() {
        let r = run(&spec(0.0, None)).unwrap().report;
        let ratio = r.details["slope"] / r.details["slope_closed_form"];
        assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
        let pf = r.details["p_f_grid"] / r.details["p_f_closed_form"];
        assert!((pf - 1.0).abs() < 0.01, "{pf}");
    }

    #[test]
    fn unbiased_limit_is_standard_imaginary() {
        let s = spec(1e-6, Some(0.0));
        let (w, _) = s.grid();
        let spectrum = s.spectrum(0.0, 0.0);
        for (x, v) in w.iter().zip(&spectrum).step_by(997) {
            assert!((v - 0.1f64.sin().powi(2) * s.envelope(*x)).abs() < 1e-15);
        }
        let r = run(&s).unwrap().report;
        let ratio = r.details["slope"].abs() / r.details["amplification_unbiased"];
        assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
    }
}
