//! Catalog of complete measurement protocols.
//!
//! Each scheme is described by a declarative spec and compiled into states,
//! coupling and readout, so that the information and estimation code treats
//! them uniformly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::coupling::{evolve_joint, postselect, CouplingConfig, Generator, MeterState, RegimeLabel};
use crate::error::{Error, Result};
use crate::meter::{GaussianMeter, GridMeter};
use crate::qsys::{Observable, SystemState};
use crate::table::Table;

pub mod abwva;
pub mod biased;
pub mod entangled;
pub mod inverse;
pub mod joint_wm;
pub mod phase_space;
pub mod recycle;
pub mod standard;

pub use abwva::AbwvaSpec;
pub use biased::BiasedSpec;
pub use entangled::{EntangledSpec, PostVariant};
pub use inverse::InverseSpec;
pub use joint_wm::JointWmSpec;
pub use phase_space::{FockSpec, PhaseSpaceSpec};
pub use recycle::{RecycleMode, RecycleSpec};
pub use standard::{ConventionalSpec, StandardSpec};

/// Whether the selection produces a real or an imaginary weak value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeakKind {
    Real,
    Imaginary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeSpec {
    Conventional(ConventionalSpec),
    Standard(StandardSpec),
    Inverse(InverseSpec),
    Abwva(AbwvaSpec),
    JointWm(JointWmSpec),
    Biased(BiasedSpec),
    PowerRecycle(RecycleSpec),
    PhaseSpace(PhaseSpaceSpec),
    Entangled(EntangledSpec),
}

impl SchemeSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeSpec::Conventional(_) => "conventional",
            SchemeSpec::Standard(_) => "standard",
            SchemeSpec::Inverse(_) => "inverse",
            SchemeSpec::Abwva(_) => "abwva",
            SchemeSpec::JointWm(_) => "joint_wm",
            SchemeSpec::Biased(_) => "biased",
            SchemeSpec::PowerRecycle(_) => "power_recycle",
            SchemeSpec::PhaseSpace(_) => "phase_space",
            SchemeSpec::Entangled(_) => "entangled",
        }
    }
}

/// Summary numbers shared by every scheme; scheme-specific values go in `details`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeReport {
    pub scheme: String,
    /// Output shift per unit of the estimated parameter, where meaningful.
    pub amplification: Option<f64>,
    pub p_f: f64,
    /// Fisher information per input probe about the scheme's parameter.
    pub fisher: f64,
    /// Quantum Fisher information of the joint state, when defined.
    pub q_jt: Option<f64>,
    /// Signal-to-noise ratio per input probe of the averaging readout.
    pub snr_per_root_nu: Option<f64>,
    pub regime: Option<RegimeLabel>,
    pub warnings: Vec<String>,
    pub details: BTreeMap<String, f64>,
}

impl SchemeReport {
    pub(crate) fn new(scheme: &str, p_f: f64, fisher: f64) -> Self {
        Self {
            scheme: scheme.to_string(),
            amplification: None,
            p_f,
            fisher: fisher.max(0.0),
            q_jt: None,
            snr_per_root_nu: None,
            regime: None,
            warnings: Vec::new(),
            details: BTreeMap::new(),
        }
    }

    pub(crate) fn detail(&mut self, key: &str, value: f64) {
        self.details.insert(key.to_string(), value);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeOutput {
    pub report: SchemeReport,
    pub tables: Vec<Table>,
}

pub fn run_scheme(spec: &SchemeSpec) -> Result<SchemeOutput> {
    match spec {
        SchemeSpec::Conventional(s) => standard::run_conventional(s),
        SchemeSpec::Standard(s) => standard::run(s),
        SchemeSpec::Inverse(s) => inverse::run(s),
        SchemeSpec::Abwva(s) => abwva::run(s),
        SchemeSpec::JointWm(s) => joint_wm::run(s),
        SchemeSpec::Biased(s) => biased::run(s),
        SchemeSpec::PowerRecycle(s) => recycle::run(s),
        SchemeSpec::PhaseSpace(s) => phase_space::run(s),
        SchemeSpec::Entangled(s) => entangled::run(s),
    }
}

/// Which outcome space a measurement model samples from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutcomeSpace {
    /// Uniform nodes `x0 + i·dx`; probabilities are cell masses of a density.
    Continuous { x0: f64, dx: f64 },
    /// Labelled discrete outcomes.
    Discrete,
}

type Family = Box<dyn Fn(f64) -> Result<Vec<f64>> + Send + Sync>;

/// A scheme reduced to a parameterized outcome distribution about `g`.
pub struct MeasurementModel {
    pub g: f64,
    pub space: OutcomeSpace,
    pub support: Vec<f64>,
    pub family: Family,
    /// `d⟨x⟩/dg` at the true value; divides the sample mean in the averaging estimator.
    pub calibration: f64,
    /// Fisher information per recorded outcome.
    pub fisher: f64,
    /// Fraction of input probes that yield a recorded outcome.
    pub p_f: f64,
}

impl MeasurementModel {
    pub fn probabilities(&self, g: f64) -> Result<Vec<f64>> {
        (self.family)(g)
    }

    pub fn mean(&self, g: f64) -> Result<f64> {
        let p = self.probabilities(g)?;
        let total: f64 = p.iter().sum();
        Ok(p.iter().zip(&self.support).map(|(p, x)| p * x).sum::<f64>() / total)
    }
}

impl crate::infometrics::ParamDistribution for MeasurementModel {
    fn probabilities(&self, g: f64) -> Result<Vec<f64>> {
        (self.family)(g)
    }

    fn support(&self) -> Vec<f64> {
        self.support.clone()
    }
}

/// Compiles a scheme into the distribution of its recorded outcomes.
pub fn measurement_model(spec: &SchemeSpec) -> Result<MeasurementModel> {
    match spec {
        SchemeSpec::Conventional(s) => standard::conventional_model(s),
        SchemeSpec::Standard(s) => standard::model(s),
        SchemeSpec::Inverse(s) => inverse::model(s),
        SchemeSpec::PhaseSpace(s) => phase_space::model(s),
        SchemeSpec::Entangled(s) => entangled::model(s),
        other => Err(Error::UnsupportedCombination {
            scheme: other.name().to_string(),
            case: "sampling-based estimation".into(),
        }),
    }
}

/// Pre/post-selection on a qubit with `A = σ_z` and a Gaussian pointer.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PointerSetup {
    pub pre: SystemState,
    pub post: SystemState,
    pub observable: Observable,
    pub grid: GridMeter,
}

impl PointerSetup {
    /// Fixes the grid once so that every `g` near `g_ref` is evaluated on the same nodes.
    pub fn new(pre: SystemState, post: SystemState, sigma: f64, max_shift: f64) -> Result<Self> {
        let grid = GaussianMeter::new(sigma)?.default_grid(max_shift)?;
        Ok(Self {
            pre,
            post,
            observable: Observable::pauli_z(),
            grid,
        })
    }

    /// `(p_f, conditioned meter)` at coupling `g`.
    pub fn conditioned(&self, g: f64) -> Result<(f64, GridMeter)> {
        let cfg = CouplingConfig::new(g, Generator::MomentumKick, self.observable.clone())?;
        let joint = evolve_joint(&self.pre, &MeterState::Grid(self.grid.clone()), &cfg)?;
        let ps = postselect(&joint, &self.post)?;
        if ps.success.is_empty() {
            return Err(Error::EmptyPostselection { p_f: ps.p_f });
        }
        Ok((ps.p_f, ps.success.to_grid()?))
    }

    pub fn config(&self, g: f64) -> Result<CouplingConfig> {
        CouplingConfig::new(g, Generator::MomentumKick, self.observable.clone())
    }

    pub fn meter(&self) -> MeterState {
        MeterState::Grid(self.grid.clone())
    }
}

/// Cell masses of a density sampled on the grid nodes.
pub(crate) fn masses(density: &[f64], dx: f64) -> Vec<f64> {
    density.iter().map(|d| d * dx).collect()
}

/// Centroid of a sampled signal (which may be signed).
pub(crate) fn centroid(x: &[f64], y: &[f64]) -> f64 {
    let num: f64 = x.iter().zip(y).map(|(x, y)| x * y).sum();
    let den: f64 = y.iter().sum();
    num / den
}

pub(crate) fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

pub(crate) fn check_finite(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")));
    }
    Ok(())
}

pub(crate) fn check_probability(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidParameter(format!("{name} must lie in [0, 1], got {v}")));
    }
    Ok(())
}
