//! Almost-balanced WVA: two nearly orthogonal post-selections read together.
//!
//! With pre-selection `|+⟩` and post-selections `(|0⟩ ± i e^{−iε}|1⟩)/√2` the
//! two momentum distributions are `P_{1,2}(p) = ½[1 ± sin(ε + 2gp)] P0(p)`.

use serde::{Deserialize, Serialize};

use super::{centroid, check_finite, check_positive, SchemeOutput, SchemeReport};
use crate::error::Result;
use crate::infometrics::fisher_sum;
use crate::qsys::SystemState;
use crate::table::Table;
use crate::Complex64;

const POINTS: usize = 8001;
/// Momentum window in units of the pointer's momentum spread `1/(2σ)`.
const WINDOW: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbwvaSpec {
    pub g: f64,
    pub sigma: f64,
    pub epsilon: f64,
}

/// Both port distributions and their combinations on a shared momentum grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AbwvaSignals {
    pub p: Vec<f64>,
    pub p0: Vec<f64>,
    pub port1: Vec<f64>,
    pub port2: Vec<f64>,
    pub sum: Vec<f64>,
    pub difference: Vec<f64>,
}

impl AbwvaSpec {
    pub fn validate(&self) -> Result<()> {
        check_finite("g", self.g)?;
        check_positive("sigma", self.sigma)?;
        check_finite("epsilon", self.epsilon)
    }

    pub fn pre(&self) -> SystemState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        SystemState::new(vec![Complex64::new(h, 0.0), Complex64::new(h, 0.0)]).expect("normalized")
    }

    /// Post-selection for port 1 (`sign = +1`) or port 2 (`sign = −1`).
    pub fn post(&self, sign: f64) -> SystemState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let b = Complex64::new(0.0, sign) * Complex64::from_polar(1.0, -self.epsilon);
        SystemState::new(vec![Complex64::new(h, 0.0), b * h]).expect("normalized")
    }

    pub fn momentum_grid(&self) -> (Vec<f64>, f64) {
        let half = WINDOW / (2.0 * self.sigma);
        let dp = 2.0 * half / (POINTS - 1) as f64;
        ((0..POINTS).map(|i| -half + i as f64 * dp).collect(), dp)
    }

    /// Port distributions at coupling `g`. The larger port is computed first and
    /// the smaller one as `P0 − larger`, which is exact in floating point because
    /// the larger port lies in `[P0/2, P0]`; hence `P1 + P2 == P0` bitwise.
    pub fn signals_at(&self, g: f64) -> AbwvaSignals {
        let (p, _) = self.momentum_grid();
        let s2 = self.sigma * self.sigma;
        let norm = (2.0 * s2 / std::f64::consts::PI).sqrt();
        let p0: Vec<f64> = p.iter().map(|&x| norm * (-2.0 * s2 * x * x).exp()).collect();
        let mut port1 = Vec::with_capacity(p.len());
        let mut port2 = Vec::with_capacity(p.len());
        let mut difference = Vec::with_capacity(p.len());
        for (&x, &base) in p.iter().zip(&p0) {
            let s = (self.epsilon + 2.0 * g * x).sin();
            let big = base * (1.0 + s.abs()) / 2.0;
            let small = base - big;
            let (a, b) = if s >= 0.0 { (big, small) } else { (small, big) };
            port1.push(a);
            port2.push(b);
            difference.push(a - b);
        }
        let sum = port1.iter().zip(&port2).map(|(a, b)| a + b).collect();
        AbwvaSignals {
            p,
            p0,
            port1,
            port2,
            sum,
            difference,
        }
    }

    /// Leading-order centroid of the difference signal, `g·cot ε/(2σ²)`.
    pub fn centroid_closed_form(&self) -> f64 {
        self.g / self.epsilon.tan() / (2.0 * self.sigma * self.sigma)
    }
}

pub fn run(spec: &AbwvaSpec) -> Result<SchemeOutput> {
    spec.validate()?;
    let (_, dp) = spec.momentum_grid();
    let sig = spec.signals_at(spec.g);
    let mass = |v: &[f64]| v.iter().sum::<f64>() * dp;
    let p1 = mass(&sig.port1);
    let p2 = mass(&sig.port2);

    // FI about g from both ports and the momentum readout.
    let h = crate::infometrics::default_step(spec.g);
    let up = spec.signals_at(spec.g + h);
    let down = spec.signals_at(spec.g - h);
    let cells = |s: &AbwvaSignals| -> Vec<f64> {
        s.port1.iter().chain(&s.port2).map(|v| v * dp).collect()
    };
    let (pc, pu, pd) = (cells(&sig), cells(&up), cells(&down));
    let dcell: Vec<f64> = pu.iter().zip(&pd).map(|(u, d)| (u - d) / (2.0 * h)).collect();
    let fisher = fisher_sum(&pc, &dcell);

    let mut report = SchemeReport::new("abwva", p1, fisher);
    let diff_centroid = centroid(&sig.p, &sig.difference);
    if spec.g != 0.0 {
        report.amplification = Some(diff_centroid / spec.g);
    }
    report.q_jt = Some(1.0 / (spec.sigma * spec.sigma));
    let signal = mass(&sig.difference);
    let standard_signal = (spec.epsilon / 2.0).sin().powi(2);
    for (k, v) in [
        ("p_port1", p1),
        ("p_port2", p2),
        ("difference_centroid", diff_centroid),
        ("difference_centroid_closed_form", spec.centroid_closed_form()),
        ("difference_signal", signal),
        ("signal_strength_abwva", spec.epsilon.sin().abs()),
        ("signal_strength_standard", standard_signal),
        ("sum_rule_max_abs_error", max_sum_error(&sig)),
    ] {
        report.detail(k, v);
    }

    let mut table = Table::new("ports", &["p", "p0", "port1", "port2", "sum", "difference"]);
    for i in 0..sig.p.len() {
        table.push(vec![sig.p[i], sig.p0[i], sig.port1[i], sig.port2[i], sig.sum[i], sig.difference[i]]);
    }
    Ok(SchemeOutput {
        report,
        tables: vec![table],
    })
}

fn max_sum_error(sig: &AbwvaSignals) -> f64 {
    sig.sum
        .iter()
        .zip(&sig.p0)
        .map(|(s, p)| (s - p).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{evolve_joint, postselect, CouplingConfig, Generator, MeterState};
    use crate::meter::GaussianMeter;
    use crate::qsys::Observable;

    fn spec(g: f64, epsilon: f64) -> AbwvaSpec {
        AbwvaSpec { g, sigma: 1.0, epsilon }
    }

    #[test]
    fn sum_rule_is_bitwise() {
        for (g, e) in [(1e-4, 0.05), (0.3, 0.7), (-0.2, -0.1), (0.0, 0.0)] {
            let sig = spec(g, e).signals_at(g);
            assert!(sig.sum.iter().zip(&sig.p0).all(|(s, p)| s == p));
            assert!(sig.port1.iter().chain(&sig.port2).all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn zero_coupling_difference_is_scaled_p0() {
        let s = spec(0.0, 0.05);
        let sig = s.signals_at(0.0);
        for (d, p) in sig.difference.iter().zip(&sig.p0) {
            assert!((d - 0.05f64.sin() * p).abs() < 1e-15);
        }
        assert!(centroid(&sig.p, &sig.difference).abs() < 1e-12);
    }

    #[test]
    fn difference_centroid_matches_closed_form() {
        let s = spec(1e-4, 0.05);
        let r = run(&s).unwrap().report;
        let ratio = r.details["difference_centroid"] / r.details["difference_centroid_closed_form"];
        assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
        assert!((r.fisher - 1.0).abs() < 1e-3);
    }

    #[test]
    fn ports_match_joint_evolution() {
        let s = spec(0.2, 0.3);
        let cfg = CouplingConfig::new(0.2, Generator::MomentumKick, Observable::pauli_z()).unwrap();
        let meter = MeterState::Gaussian(GaussianMeter::new(1.0).unwrap());
        let joint = evolve_joint(&s.pre(), &meter, &cfg).unwrap();
        let ps = postselect(&joint, &s.post(1.0)).unwrap();
        let grid = ps.success.to_grid().unwrap();
        let mom = grid.momentum_density();
        // Compare on the simulation's own momentum nodes.
        let centre = mom.len() / 2;
        for i in [centre - 4, centre, centre + 3] {
            let p = mom.x(i);
            let p0 = (2.0 / std::f64::consts::PI).sqrt() * (-2.0 * p * p).exp();
            let exact = 0.5 * (1.0 + (0.3 + 0.4 * p).sin()) * p0;
            let sim = mom.density()[i] * ps.p_f;
            assert!((sim - exact).abs() < 1e-9, "p = {p}: {sim} vs {exact}");
        }
    }
}
