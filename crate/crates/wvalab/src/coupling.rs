//! Impulsive system–meter coupling `exp(-i g A⊗G)`, post-selection and meter shifts.
//!
//! The meter is held in the eigenbasis of the generator `G` (momentum for the
//! position-kick coupling, photon number for the phase coupling, `σ_z` for a qubit
//! meter), where every branch of the joint state is a pointwise phase
//! `e^{-i g a_k x}` of the free meter.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meter::{FockMeter, GaussianMeter, GridMeter};
use crate::numeric::{inner, norm_sqr};
use crate::qsys::{Observable, SystemState};
use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Generator {
    /// `A ⊗ P`: displaces the pointer position by `g·a`.
    MomentumKick,
    /// `A ⊗ n`: phase `e^{-i g a n}` on each photon-number level.
    PhotonNumberPhase,
    /// `A ⊗ σ_z` on a qubit meter.
    PauliZ,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingConfig {
    pub g: f64,
    pub generator: Generator,
    pub observable: Observable,
}

impl CouplingConfig {
    pub fn new(g: f64, generator: Generator, observable: Observable) -> Result<Self> {
        if !g.is_finite() {
            return Err(Error::InvalidParameter("coupling strength must be finite".into()));
        }
        Ok(Self {
            g,
            generator,
            observable,
        })
    }

    pub fn with_g(&self, g: f64) -> Self {
        Self {
            g,
            generator: self.generator,
            observable: self.observable.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeterState {
    Gaussian(GaussianMeter),
    Grid(GridMeter),
    Fock(FockMeter),
    Qubit(SystemState),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasisKind {
    /// Momentum grid conjugate to a position window `[-half_width, half_width)`.
    Momentum { half_width: f64 },
    Number,
    Qubit,
}

/// Generator eigenvalues together with the quadrature weight of each node.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorBasis {
    pub kind: BasisKind,
    pub values: Vec<f64>,
    pub weight: f64,
}

/// Meter as a mixture of pure amplitude vectors in the generator basis.
#[derive(Debug, Clone, PartialEq)]
pub struct MeterEnsemble {
    pub basis: GeneratorBasis,
    pub components: Vec<(f64, Vec<Complex64>)>,
}

impl MeterEnsemble {
    /// Expresses `meter` in the eigenbasis of the generator in `cfg`, sizing grids
    /// so that every displaced branch stays inside the window.
    pub fn prepare(meter: &MeterState, cfg: &CouplingConfig) -> Result<Self> {
        let max_shift = cfg.g.abs() * spectral_radius(&cfg.observable);
        match (cfg.generator, meter) {
            (Generator::MomentumKick, MeterState::Gaussian(m)) => {
                Ok(Self::from_grid(&m.default_grid(max_shift)?))
            }
            (Generator::MomentumKick, MeterState::Grid(grid)) => {
                let reach = grid.mean_q().abs() + 8.0 * grid.var_q().sqrt() + max_shift;
                let mut factor = 1usize;
                while reach > grid.half_width() * factor as f64 {
                    factor *= 2;
                }
                Ok(Self::from_grid(&grid.padded(factor)?))
            }
            (Generator::PhotonNumberPhase, MeterState::Fock(f)) => Ok(Self {
                basis: GeneratorBasis {
                    kind: BasisKind::Number,
                    values: (0..=f.n_max()).map(|n| n as f64).collect(),
                    weight: 1.0,
                },
                components: f.pure_components(),
            }),
            (Generator::PauliZ, MeterState::Qubit(s)) if s.dim() == 2 => Ok(Self {
                basis: GeneratorBasis {
                    kind: BasisKind::Qubit,
                    values: vec![1.0, -1.0],
                    weight: 1.0,
                },
                components: vec![(1.0, s.amplitudes().to_vec())],
            }),
            (gen, m) => Err(Error::IncompatibleMeter(format!(
                "{gen:?} cannot act on {}",
                match m {
                    MeterState::Gaussian(_) => "a Gaussian meter",
                    MeterState::Grid(_) => "a grid meter",
                    MeterState::Fock(_) => "a Fock meter",
                    MeterState::Qubit(_) => "a qubit meter",
                }
            ))),
        }
    }

    pub fn from_grid(grid: &GridMeter) -> Self {
        Self {
            basis: GeneratorBasis {
                kind: BasisKind::Momentum {
                    half_width: grid.half_width(),
                },
                values: grid.p_grid(),
                weight: grid.dp(),
            },
            components: vec![(1.0, grid.momentum_amplitudes())],
        }
    }

    pub fn is_pure(&self) -> bool {
        self.components.len() == 1
    }

    /// `(⟨G⟩, Var G)` of the free meter.
    pub fn generator_moments(&self) -> (f64, f64) {
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (w, amps) in &self.components {
            for (x, a) in self.basis.values.iter().zip(amps) {
                let p = w * a.norm_sqr() * self.basis.weight;
                m1 += p * x;
                m2 += p * x * x;
            }
        }
        (m1, (m2 - m1 * m1).max(0.0))
    }
}

fn spectral_radius(a: &Observable) -> f64 {
    a.spectral_projectors()
        .iter()
        .fold(0.0f64, |m, (v, _)| m.max(v.abs()))
}

/// One eigenvalue branch: `a_k` and the projected system vector `P_k|pre⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub eigenvalue: f64,
    pub system: DVector<Complex64>,
}

/// `exp(-i g A⊗G)|pre⟩|meter⟩`, stored branch-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub g: f64,
    pub branches: Vec<Branch>,
    pub meter: MeterEnsemble,
}

impl JointState {
    pub fn total_norm(&self) -> f64 {
        let w = self.meter.basis.weight;
        let meter_norm: f64 = self
            .meter
            .components
            .iter()
            .map(|(p, amps)| p * norm_sqr(amps) * w)
            .sum();
        self.branches.iter().map(|b| b.system.norm_squared()).sum::<f64>() * meter_norm
    }

    /// Meter amplitudes of branch `k` for mixture component `c`.
    pub fn branch_meter(&self, k: usize, c: usize) -> Vec<Complex64> {
        let a = self.branches[k].eigenvalue;
        self.meter.basis
            .values
            .iter()
            .zip(&self.meter.components[c].1)
            .map(|(x, amp)| amp * Complex64::from_polar(1.0, -self.g * a * x))
            .collect()
    }

    /// `⟨post|P_k|pre⟩` for every branch.
    pub fn branch_weights(&self, post: &SystemState) -> Vec<Complex64> {
        let f = post.to_vector();
        self.branches.iter().map(|b| f.dotc(&b.system)).collect()
    }

    /// Unnormalized conditioned meter `⟨post|Ψ⟩` and its `g`-derivative, per component.
    pub fn arm(&self, post: &SystemState) -> Vec<(f64, Arm)> {
        let c = self.branch_weights(post);
        let a: Vec<f64> = self.branches.iter().map(|b| b.eigenvalue).collect();
        self.meter
            .components
            .iter()
            .map(|(w, amps)| (*w, Arm::build(&self.meter.basis.values, amps, &c, &a, self.g)))
            .collect()
    }
}

/// Conditioned (unnormalized) meter amplitudes `m(x)` and `∂_g m(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    pub amps: Vec<Complex64>,
    pub deriv: Vec<Complex64>,
}

impl Arm {
    fn build(values: &[f64], meter: &[Complex64], c: &[Complex64], a: &[f64], g: f64) -> Self {
        let mut amps = Vec::with_capacity(values.len());
        let mut deriv = Vec::with_capacity(values.len());
        for (x, phi) in values.iter().zip(meter) {
            let mut m = Complex64::new(0.0, 0.0);
            let mut dm = Complex64::new(0.0, 0.0);
            for (ck, ak) in c.iter().zip(a) {
                let term = ck * Complex64::from_polar(1.0, -g * ak * x);
                m += term;
                dm += term * Complex64::new(0.0, -ak * x);
            }
            amps.push(m * phi);
            deriv.push(dm * phi);
        }
        Self { amps, deriv }
    }

    /// `(‖m‖², ∂_g‖m‖², ‖∂m‖², ⟨m|∂m⟩)` with the basis weight applied.
    pub fn moments(&self, weight: f64) -> (f64, f64, f64, Complex64) {
        let p = norm_sqr(&self.amps) * weight;
        let overlap = inner(&self.amps, &self.deriv) * weight;
        let dd = norm_sqr(&self.deriv) * weight;
        (p, 2.0 * overlap.re, dd, overlap)
    }
}

/// Evolves `pre ⊗ meter` under the impulsive coupling; exact, no weak expansion.
pub fn evolve_joint(pre: &SystemState, meter: &MeterState, cfg: &CouplingConfig) -> Result<JointState> {
    if pre.dim() != cfg.observable.dim() {
        return Err(Error::DimensionMismatch {
            expected: cfg.observable.dim(),
            found: pre.dim(),
        });
    }
    let ensemble = MeterEnsemble::prepare(meter, cfg)?;
    let v = pre.to_vector();
    let branches = cfg
        .observable
        .spectral_projectors()
        .into_iter()
        .map(|(eigenvalue, p)| Branch {
            eigenvalue,
            system: &p * &v,
        })
        .filter(|b| b.system.norm() > 0.0)
        .collect();
    Ok(JointState {
        g: cfg.g,
        branches,
        meter: ensemble,
    })
}

/// Meter conditioned on one post-selection outcome, normalized per mixture component.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedMeter {
    pub basis: GeneratorBasis,
    pub components: Vec<(f64, Vec<Complex64>)>,
}

impl ConditionedMeter {
    fn from_arms(basis: &GeneratorBasis, arms: Vec<(f64, Vec<Complex64>)>) -> Self {
        let total: f64 = arms.iter().map(|(w, a)| w * norm_sqr(a) * basis.weight).sum();
        let components = if total > 0.0 {
            arms.into_iter()
                .filter_map(|(w, a)| {
                    let n = norm_sqr(&a) * basis.weight;
                    (n > 0.0).then(|| {
                        let s = 1.0 / n.sqrt();
                        (w * n / total, a.into_iter().map(|x| x * s).collect())
                    })
                })
                .collect()
        } else {
            Vec::new()
        };
        Self {
            basis: basis.clone(),
            components,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn is_pure(&self) -> bool {
        self.components.len() == 1
    }

    /// Probability (or density) of each generator eigenvalue.
    pub fn generator_density(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.basis.values.len()];
        for (w, amps) in &self.components {
            for (o, a) in out.iter_mut().zip(amps) {
                *o += w * a.norm_sqr();
            }
        }
        out
    }

    pub fn mean_generator(&self) -> f64 {
        self.generator_density()
            .iter()
            .zip(&self.basis.values)
            .map(|(p, x)| p * x * self.basis.weight)
            .sum()
    }

    /// Position-grid form of a pure momentum-basis meter.
    pub fn to_grid(&self) -> Result<GridMeter> {
        match self.basis.kind {
            BasisKind::Momentum { half_width } if self.is_pure() => {
                GridMeter::from_momentum(half_width, &self.components[0].1)
            }
            BasisKind::Momentum { .. } => Err(Error::MixedMeter),
            _ => Err(Error::IncompatibleMeter("not a position-grid meter".into())),
        }
    }

    /// Truncated density matrix of a photon-number meter.
    pub fn to_fock(&self) -> Result<FockMeter> {
        if self.basis.kind != BasisKind::Number {
            return Err(Error::IncompatibleMeter("not a photon-number meter".into()));
        }
        let d = self.basis.values.len();
        let mut rho = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
        for (w, amps) in &self.components {
            let v = DVector::from_column_slice(amps);
            rho += &v * v.adjoint() * Complex64::new(*w, 0.0);
        }
        let tr = rho.trace();
        FockMeter::density(rho / tr)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostSelectedMeter {
    pub success: ConditionedMeter,
    pub p_f: f64,
    pub failure: ConditionedMeter,
    pub p_r: f64,
}

/// Projects the system onto `post` (success) and its orthogonal complement (failure).
pub fn postselect(joint: &JointState, post: &SystemState) -> Result<PostSelectedMeter> {
    let dim = joint.branches.first().map(|b| b.system.len()).unwrap_or(0);
    if post.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: post.dim(),
        });
    }
    let weight = joint.meter.basis.weight;
    let collect = |state: &SystemState| -> Vec<(f64, Vec<Complex64>)> {
        joint.arm(state).into_iter().map(|(w, arm)| (w, arm.amps)).collect()
    };
    let mass = |arms: &[(f64, Vec<Complex64>)]| -> f64 {
        arms.iter().map(|(w, a)| w * norm_sqr(a) * weight).sum()
    };
    let success_arms = collect(post);
    let p_success = mass(&success_arms);
    let mut failure_arms = Vec::new();
    for r in post.orthogonal_complement() {
        failure_arms.extend(collect(&r));
    }
    let norm = joint.total_norm();
    let p_f = (p_success / norm).clamp(0.0, 1.0);
    Ok(PostSelectedMeter {
        success: ConditionedMeter::from_arms(&joint.meter.basis, success_arms),
        p_f,
        failure: ConditionedMeter::from_arms(&joint.meter.basis, failure_arms),
        p_r: 1.0 - p_f,
    })
}

/// First-order shifts `(g Re w, g Im w / 2σ²)`.
pub fn aav_shifts(weak_value: Complex64, g: f64, sigma: f64) -> (f64, f64) {
    (g * weak_value.re, g * weak_value.im / (2.0 * sigma * sigma))
}

/// Shifts to second order in `g` for an observable with `A² = I`.
pub fn exact_shifts(weak_value: Complex64, g: f64, sigma: f64) -> (f64, f64) {
    let s2 = sigma * sigma;
    let denom = 4.0 * s2 + g * g * (weak_value.norm_sqr() - 1.0);
    (4.0 * g * weak_value.re * s2 / denom, 2.0 * g * weak_value.im / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Strong,
    StandardWva,
    InverseWva,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeLabel {
    pub regime: Regime,
    /// `g/σ`.
    pub coupling_ratio: f64,
    /// `g|w|/σ`.
    pub amplified_ratio: f64,
}

pub fn classify_regime(g: f64, sigma: f64, weak_value: Complex64) -> RegimeLabel {
    let coupling_ratio = g.abs() / sigma;
    let amplified_ratio = g.abs() * weak_value.norm() / sigma;
    let regime = if coupling_ratio >= 1.0 {
        Regime::Strong
    } else if amplified_ratio >= 1.0 {
        Regime::InverseWva
    } else {
        Regime::StandardWva
    };
    RegimeLabel {
        regime,
        coupling_ratio,
        amplified_ratio,
    }
}

/// Post-selected position shift across the weak-to-strong transition.
pub fn trapped_ion_shift(gamma: f64, theta: f64, gamma0_t: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!("relative coupling must be ≥ 0, got {gamma}")));
    }
    let denom = 1.0 - (2.0 * theta).cos() * (-0.5 * gamma * gamma).exp();
    if denom.abs() < 1e-14 {
        return Err(Error::DegenerateDenominator(format!(
            "1 - cos2θ·e^(-Γ²/2) = {denom:e}"
        )));
    }
    Ok(-gamma0_t * (2.0 * theta).sin() / denom)
}

/// Shift curves over a grid of relative couplings and selection angles, with
/// columns `gamma`, `theta`, `shift`.
pub fn transition_curves(gammas: &[f64], thetas: &[f64], gamma0_t: f64) -> Result<Table> {
    let mut table = Table::new("transition", &["gamma", "theta", "shift"]);
    for &gamma in gammas {
        for &theta in thetas {
            table.push(vec![gamma, theta, trapped_ion_shift(gamma, theta, gamma0_t)?]);
        }
    }
    Ok(table)
}

/// Angle maximizing `|trapped_ion_shift|` at relative coupling `Γ`.
pub fn trapped_ion_optimal_angle(gamma: f64) -> f64 {
    (-0.5 * gamma * gamma).exp().acos() / 2.0
}

/// Shifts for strictly orthogonal selections in terms of the orthogonal weak value `⟨A⟩_ow^{1,0}`.
pub fn orthogonal_shifts(orthogonal_weak_value: Complex64, g: f64, sigma: f64) -> (f64, f64) {
    (
        g * orthogonal_weak_value.re,
        3.0 * g * orthogonal_weak_value.im / (2.0 * sigma * sigma),
    )
}

/// `max_{1≤n≤n_max} g |⟨f|Aⁿ|i⟩|^{1/n} / (|⟨f|i⟩| σ)`; below 1 the weak expansion holds.
pub fn aav_condition_margin(
    pre: &SystemState,
    post: &SystemState,
    a: &Observable,
    g: f64,
    sigma: f64,
    n_max: u32,
) -> Result<f64> {
    let overlap = post.overlap(pre).norm();
    if overlap <= crate::qsys::ORTHOGONALITY_THRESHOLD {
        return Err(Error::OrthogonalSelection { overlap });
    }
    let f = post.to_vector();
    let i = pre.to_vector();
    let mut margin: f64 = 0.0;
    for n in 1..=n_max.max(1) {
        let an = f.dotc(&(a.power(n) * &i)).norm();
        margin = margin.max(g.abs() * an.powf(1.0 / n as f64) / overlap / sigma);
    }
    Ok(margin)
}
