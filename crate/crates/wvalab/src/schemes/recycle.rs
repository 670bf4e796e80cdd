//! Power recycling: photons rejected by the post-selection are sent back in.

use serde::{Deserialize, Serialize};

use super::{check_probability, SchemeOutput, SchemeReport};
use crate::error::{Error, Result};
use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RecycleMode {
    /// Pulses re-injected `rounds` times; `None` sums the infinite series.
    Pulsed {
        #[serde(default)]
        rounds: Option<u32>,
    },
    /// Resonant cavity closed by a mirror of reflectivity `r`.
    Cavity { reflectivity: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecycleSpec {
    pub p_f: f64,
    /// Fractional loss per round trip.
    #[serde(default)]
    pub loss: f64,
    pub mode: RecycleMode,
    /// Input photons per pulse (scales the reported totals only).
    #[serde(default = "one")]
    pub photons: f64,
}

fn one() -> f64 {
    1.0
}

impl RecycleSpec {
    pub fn validate(&self) -> Result<()> {
        check_probability("loss", self.loss)?;
        if !(self.p_f > 0.0 && self.p_f <= 1.0) {
            return Err(Error::InvalidParameter(format!("p_f must lie in (0, 1], got {}", self.p_f)));
        }
        if !(self.photons > 0.0) || !self.photons.is_finite() {
            return Err(Error::InvalidParameter("photons must be positive".into()));
        }
        if let RecycleMode::Cavity { reflectivity } = self.mode {
            if !(0.0..1.0).contains(&reflectivity) {
                return Err(Error::InvalidParameter(format!(
                    "reflectivity must lie in [0, 1), got {reflectivity}"
                )));
            }
        }
        Ok(())
    }

    /// Fraction of a pulse surviving one failed round trip, `(1 − p_f)(1 − β)`.
    fn survival(&self) -> f64 {
        (1.0 - self.p_f) * (1.0 - self.loss)
    }

    /// Detected photons per input photon, `p_f Σ_j x^j` over the recycling rounds.
    pub fn detected_fraction(&self) -> f64 {
        let x = self.survival();
        let series = match self.mode {
            RecycleMode::Pulsed { rounds: Some(r) } => {
                if x == 1.0 {
                    r as f64
                } else {
                    (1.0 - x.powi(r as i32)) / (1.0 - x)
                }
            }
            RecycleMode::Pulsed { rounds: None } => 1.0 / (1.0 - x),
            RecycleMode::Cavity { .. } => return self.cavity_gain() * self.p_f,
        };
        self.p_f * series
    }

    /// `G = (1 − r)/[1 + (1 − β)r − 2√(r(1 − β))]`.
    pub fn cavity_gain(&self) -> f64 {
        match self.mode {
            RecycleMode::Cavity { reflectivity: r } => {
                let t = 1.0 - self.loss;
                (1.0 - r) / (1.0 + t * r - 2.0 * (r * t).sqrt())
            }
            RecycleMode::Pulsed { .. } => 1.0,
        }
    }

    /// SNR improvement over a single post-selection round.
    pub fn snr_gain(&self) -> f64 {
        match self.mode {
            RecycleMode::Cavity { .. } => self.cavity_gain().sqrt(),
            RecycleMode::Pulsed { .. } => (self.detected_fraction() / self.p_f).sqrt(),
        }
    }
}

/// `fisher` is the detected-photon count relative to one round, which is the
/// factor by which the information about the coupling grows.
pub fn run(spec: &RecycleSpec) -> Result<SchemeOutput> {
    spec.validate()?;
    let detected = spec.detected_fraction();
    let gain = detected / spec.p_f;
    let mut report = SchemeReport::new("power_recycle", spec.p_f, gain);
    report.amplification = Some(spec.snr_gain());
    report.detail("detected_photons", detected * spec.photons);
    report.detail("snr_gain", spec.snr_gain());
    report.detail("lossless_snr_gain", 1.0 / spec.p_f.sqrt());
    if let RecycleMode::Cavity { .. } = spec.mode {
        report.detail("cavity_gain", spec.cavity_gain());
    }

    let mut table = Table::new("rounds", &["round", "photons_in", "detected", "cumulative"]);
    if let RecycleMode::Pulsed { rounds } = spec.mode {
        let x = spec.survival();
        let mut cumulative = 0.0;
        let mut incoming = spec.photons;
        for j in 0..rounds.unwrap_or(50).min(1000) {
            let d = spec.p_f * incoming;
            cumulative += d;
            table.push(vec![j as f64, incoming, d, cumulative]);
            incoming *= x;
            if incoming < 1e-12 * spec.photons {
                break;
            }
        }
    }
    Ok(SchemeOutput {
        report,
        tables: vec![table],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pulsed(p_f: f64, loss: f64) -> RecycleSpec {
        RecycleSpec {
            p_f,
            loss,
            mode: RecycleMode::Pulsed { rounds: None },
            photons: 1e6,
        }
    }

    #[test]
    fn lossless_recycling_detects_every_photon() {
        for p_f in [0.01, 0.2, 0.7] {
            let s = pulsed(p_f, 0.0);
            assert!((s.detected_fraction() - 1.0).abs() < 1e-9);
            assert!((s.snr_gain() - 1.0 / p_f.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn certain_selection_gains_nothing() {
        assert_eq!(pulsed(1.0, 0.3).snr_gain(), 1.0);
    }

    #[test]
    fn finite_rounds_approach_the_series() {
        let mut s = pulsed(0.1, 0.16);
        let inf = s.detected_fraction();
        s.mode = RecycleMode::Pulsed { rounds: Some(400) };
        assert!((s.detected_fraction() - inf).abs() < 1e-12);
    }

    #[test]
    fn cavity_gain_reference_point() {
        let s = RecycleSpec {
            p_f: 0.1,
            loss: 0.4,
            mode: RecycleMode::Cavity { reflectivity: 0.7 },
            photons: 1.0,
        };
        let g = s.cavity_gain();
        assert!((g - 0.3 / (1.42 - 2.0 * 0.42f64.sqrt())).abs() < 1e-12);
        assert!((g - 2.42).abs() < 0.01, "{g}");
        assert!((s.snr_gain() - g.sqrt()).abs() < 1e-15);
    }
}
