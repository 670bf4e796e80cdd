//! Fisher information, quantum Fisher information and the post-selection budget.
//!
//! All information quantities are in inverse squared units of the estimated
//! parameter (usually the coupling `g`).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coupling::{evolve_joint, BasisKind, CouplingConfig, JointState, MeterEnsemble, MeterState};
use crate::error::{Error, Result};
use crate::numeric::{inner, norm_sqr};
use crate::qsys::SystemState;

/// Probabilities below this are left out of Fisher sums.
pub const PROBABILITY_FLOOR: f64 = 1e-14;
/// Eigenvalue-pair cutoff for the symmetric logarithmic derivative.
pub const SLD_CUTOFF: f64 = 1e-12;

/// Default central-difference step for a parameter value.
pub fn default_step(g: f64) -> f64 {
    (1e-4 * g.abs()).max(1e-6)
}

/// Parameterized probability family `g ↦ P(x|g)`.
///
/// Implementations return cell masses (densities already multiplied by the cell
/// width), so that Fisher sums need no quadrature weights.
pub trait ParamDistribution {
    fn probabilities(&self, g: f64) -> Result<Vec<f64>>;

    /// Analytic `∂_g P`, when the family knows it.
    fn derivative(&self, _g: f64) -> Option<Result<Vec<f64>>> {
        None
    }

    /// Outcome value attached to each cell, used for moments and SNR.
    fn support(&self) -> Vec<f64>;

    /// Parameter values for which the family is defined.
    fn domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
}

type ProbFn<'a> = Box<dyn Fn(f64) -> Result<Vec<f64>> + Send + Sync + 'a>;

/// Closure-backed [`ParamDistribution`].
pub struct FnDistribution<'a> {
    support: Vec<f64>,
    probs: ProbFn<'a>,
    deriv: Option<ProbFn<'a>>,
    domain: (f64, f64),
}

impl<'a> FnDistribution<'a> {
    pub fn new<F>(support: Vec<f64>, probs: F) -> Self
    where
        F: Fn(f64) -> Result<Vec<f64>> + Send + Sync + 'a,
    {
        Self {
            support,
            probs: Box::new(probs),
            deriv: None,
            domain: (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn with_derivative<F>(mut self, deriv: F) -> Self
    where
        F: Fn(f64) -> Result<Vec<f64>> + Send + Sync + 'a,
    {
        self.deriv = Some(Box::new(deriv));
        self
    }

    pub fn with_domain(mut self, lo: f64, hi: f64) -> Self {
        self.domain = (lo, hi);
        self
    }
}

impl ParamDistribution for FnDistribution<'_> {
    fn probabilities(&self, g: f64) -> Result<Vec<f64>> {
        (self.probs)(g)
    }

    fn derivative(&self, g: f64) -> Option<Result<Vec<f64>>> {
        self.deriv.as_ref().map(|d| d(g))
    }

    fn support(&self) -> Vec<f64> {
        self.support.clone()
    }

    fn domain(&self) -> (f64, f64) {
        self.domain
    }
}

/// Binary outcome `{p(g), 1 - p(g)}`.
pub fn binary_distribution<'a, F>(p: F) -> FnDistribution<'a>
where
    F: Fn(f64) -> f64 + Send + Sync + 'a,
{
    FnDistribution::new(vec![1.0, 0.0], move |g| {
        let v = p(g);
        Ok(vec![v, 1.0 - v])
    })
}

/// Gaussian location family `N(g, σ²)` sampled on a fixed window.
pub fn gaussian_location<'a>(sigma: f64, half_width: f64, points: usize) -> FnDistribution<'a> {
    let dx = 2.0 * half_width / (points - 1) as f64;
    let xs: Vec<f64> = (0..points).map(|i| -half_width + i as f64 * dx).collect();
    let norm = dx / (2.0 * std::f64::consts::PI * sigma * sigma).sqrt();
    let xs2 = xs.clone();
    FnDistribution::new(xs, move |g| {
        Ok(xs2
            .iter()
            .map(|x| norm * (-(x - g).powi(2) / (2.0 * sigma * sigma)).exp())
            .collect())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FisherMethod {
    Analytic,
    CentralDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherReport {
    pub fi: f64,
    pub method: FisherMethod,
    pub step: f64,
}

/// `Σ (∂P)²/P`, skipping cells below [`PROBABILITY_FLOOR`].
pub fn fisher_sum(p: &[f64], dp: &[f64]) -> f64 {
    let terms: Vec<f64> = p
        .iter()
        .zip(dp)
        .filter(|(p, _)| **p >= PROBABILITY_FLOOR)
        .map(|(p, d)| d * d / p)
        .collect();
    crate::numeric::pairwise_sum(&terms)
}

fn check_step(dist: &dyn ParamDistribution, g: f64, h: f64) -> Result<()> {
    let (lo, hi) = dist.domain();
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("difference step must be positive, got {h}")));
    }
    if g - h < lo || g + h > hi {
        return Err(Error::StepTooLarge { lo: g - h, hi: g + h });
    }
    Ok(())
}

/// Richardson-refined central difference of a vector-valued function.
pub fn richardson<T, F>(f: F, g: f64, h: f64) -> Result<Vec<T>>
where
    F: Fn(f64) -> Result<Vec<T>>,
    T: Copy + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let d = |step: f64| -> Result<Vec<T>> {
        let plus = f(g + step)?;
        let minus = f(g - step)?;
        if plus.len() != minus.len() {
            return Err(Error::DimensionMismatch {
                expected: plus.len(),
                found: minus.len(),
            });
        }
        Ok(plus
            .into_iter()
            .zip(minus)
            .map(|(a, b)| (a - b) * (0.5 / step))
            .collect())
    };
    let coarse = d(h)?;
    let fine = d(0.5 * h)?;
    Ok(fine
        .into_iter()
        .zip(coarse)
        .map(|(f, c)| f * (4.0 / 3.0) + c * (-1.0 / 3.0))
        .collect())
}

pub fn classical_fisher(dist: &dyn ParamDistribution, g: f64, h: f64) -> Result<FisherReport> {
    let p = dist.probabilities(g)?;
    let (dp, method, step) = match dist.derivative(g) {
        Some(d) => (d?, FisherMethod::Analytic, 0.0),
        None => {
            check_step(dist, g, h)?;
            (
                richardson(|x| dist.probabilities(x), g, h)?,
                FisherMethod::CentralDifference,
                h,
            )
        }
    };
    if dp.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: dp.len(),
        });
    }
    Ok(FisherReport {
        fi: fisher_sum(&p, &dp).max(0.0),
        method,
        step,
    })
}

/// `4[⟨∂ψ|∂ψ⟩ − |⟨ψ|∂ψ⟩|²]` from a state and its derivative; `weight` is the
/// quadrature weight of the inner product (1 for finite-dimensional states).
pub fn qfi_from_derivative(psi: &[Complex64], dpsi: &[Complex64], weight: f64) -> f64 {
    let n = norm_sqr(psi) * weight;
    let c = inner(psi, dpsi) * weight;
    let dd = norm_sqr(dpsi) * weight;
    (4.0 * (dd / n - c.norm_sqr() / (n * n))).max(0.0)
}

/// QFI of a pure-state family, differentiated numerically with step `h`.
pub fn qfi_pure<F>(family: F, g: f64, h: f64, weight: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<Vec<Complex64>>,
{
    let psi = family(g)?;
    let dpsi = richardson(&family, g, h)?;
    Ok(qfi_from_derivative(&psi, &dpsi, weight))
}

/// QFI from `ρ` and `∂ρ` through the symmetric logarithmic derivative.
pub fn sld_qfi(rho: &DMatrix<Complex64>, drho: &DMatrix<Complex64>) -> f64 {
    let eig = rho.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let d = v.adjoint() * drho * v;
    let lam = &eig.eigenvalues;
    let mut q = 0.0;
    for j in 0..lam.len() {
        for k in 0..lam.len() {
            let s = lam[j] + lam[k];
            if s > SLD_CUTOFF {
                q += 2.0 * d[(j, k)].norm_sqr() / s;
            }
        }
    }
    q.max(0.0)
}

/// QFI of a mixed-state family via the SLD, numeric derivative with step `h`.
pub fn qfi_mixed<F>(family: F, g: f64, h: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<DMatrix<Complex64>>,
{
    let rho = family(g)?;
    let flat = |x: f64| -> Result<Vec<Complex64>> { Ok(family(x)?.as_slice().to_vec()) };
    let d = richardson(flat, g, h)?;
    let drho = DMatrix::from_column_slice(rho.nrows(), rho.ncols(), &d);
    Ok(sld_qfi(&rho, &drho))
}

fn ensemble_density(ensemble: &MeterEnsemble) -> DMatrix<Complex64> {
    let n = ensemble.basis.values.len();
    let mut rho = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for (w, amps) in &ensemble.components {
        let v = DVector::from_column_slice(amps);
        rho += &v * v.adjoint() * Complex64::new(*w, 0.0);
    }
    rho
}

/// QFI of the meter alone under `e^{-igG}`.
fn meter_generator_qfi(ensemble: &MeterEnsemble) -> Result<f64> {
    if ensemble.is_pure() {
        return Ok(4.0 * ensemble.generator_moments().1);
    }
    if matches!(ensemble.basis.kind, BasisKind::Momentum { .. }) {
        return Err(Error::MixedMeter);
    }
    let rho = ensemble_density(ensemble);
    let x = &ensemble.basis.values;
    let drho = DMatrix::from_fn(rho.nrows(), rho.ncols(), |j, k| {
        rho[(j, k)] * Complex64::new(0.0, -(x[j] - x[k]))
    });
    Ok(sld_qfi(&rho, &drho))
}

/// QFI of `e^{-igA⊗G}|pre⟩⊗ρ_m`: `⟨A⟩²·Q_m(G) + 4 Var(A) ⟨G²⟩_m`.
///
/// For a pure meter this is `4[⟨A²⟩⟨G²⟩ − ⟨A⟩²⟨G⟩²]`.
pub fn qfi_joint(pre: &SystemState, meter: &MeterState, cfg: &CouplingConfig) -> Result<f64> {
    if pre.dim() != cfg.observable.dim() {
        return Err(Error::DimensionMismatch {
            expected: cfg.observable.dim(),
            found: pre.dim(),
        });
    }
    let ensemble = MeterEnsemble::prepare(meter, cfg)?;
    let mean_a = cfg.observable.expectation(pre);
    let var_a = cfg.observable.variance(pre);
    let (mean_g, var_g) = ensemble.generator_moments();
    let q_m = meter_generator_qfi(&ensemble)?;
    Ok(mean_a * mean_a * q_m + 4.0 * var_a * (var_g + mean_g * mean_g))
}

/// Probability, its `g`-derivative and the QFI of the normalized conditioned meter
/// for one post-selection outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmInfo {
    pub p: f64,
    pub dp: f64,
    pub qfi: f64,
}

/// Information carried by the arm that projects the system onto `outcome`.
pub fn arm_info(joint: &JointState, outcome: &SystemState) -> Result<ArmInfo> {
    let weight = joint.meter.basis.weight;
    let arms = joint.arm(outcome);
    let norm = joint.total_norm();
    if arms.len() == 1 {
        let (p, dp, dd, c) = arms[0].1.moments(weight);
        let (p, dp, dd, c) = (p / norm, dp / norm, dd / norm, c / norm);
        let qfi = if p >= PROBABILITY_FLOOR {
            (4.0 * (dd / p - c.norm_sqr() / (p * p))).max(0.0)
        } else {
            0.0
        };
        return Ok(ArmInfo { p, dp, qfi });
    }
    if matches!(joint.meter.basis.kind, BasisKind::Momentum { .. }) {
        return Err(Error::MixedMeter);
    }
    let n = joint.meter.basis.values.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut m = DMatrix::from_element(n, n, zero);
    let mut dm = DMatrix::from_element(n, n, zero);
    for (w, arm) in &arms {
        let a = DVector::from_column_slice(&arm.amps);
        let da = DVector::from_column_slice(&arm.deriv);
        let w = Complex64::new(*w / norm, 0.0);
        m += &a * a.adjoint() * w;
        dm += (&da * a.adjoint() + &a * da.adjoint()) * w;
    }
    let p = m.trace().re;
    let dp = dm.trace().re;
    let qfi = if p >= PROBABILITY_FLOOR {
        let rho = &m / Complex64::new(p, 0.0);
        let drho = &dm / Complex64::new(p, 0.0) - &m * Complex64::new(dp / (p * p), 0.0);
        sld_qfi(&rho, &drho)
    } else {
        0.0
    };
    Ok(ArmInfo { p, dp, qfi })
}

/// `(p_f, Q_f)` for the success arm.
pub fn qfi_postselected(
    pre: &SystemState,
    post: &SystemState,
    cfg: &CouplingConfig,
    meter: &MeterState,
) -> Result<(f64, f64)> {
    let joint = evolve_joint(pre, meter, cfg)?;
    let info = arm_info(&joint, post)?;
    if info.p <= 1e-12 {
        return Err(Error::EmptyPostselection { p_f: info.p });
    }
    Ok((info.p, info.qfi))
}

/// The decomposition `Q_jt = p_f Q_f + p_r Q_r + F_p`.
///
/// For systems with more than two levels the failure outcome is resolved in a
/// basis of the orthogonal complement, and the information from telling those
/// failure outcomes apart is counted in `pr_qr`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoBudget {
    pub q_jt: f64,
    pub pf_qf: f64,
    pub pr_qr: f64,
    pub f_p: f64,
    pub p_f: f64,
}

impl InfoBudget {
    /// `Q_jt` minus the sum of the three parts.
    pub fn residual(&self) -> f64 {
        self.q_jt - (self.pf_qf + self.pr_qr + self.f_p)
    }

    pub fn relative_residual(&self) -> f64 {
        self.residual().abs() / self.q_jt.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn info_budget(
    pre: &SystemState,
    post: &SystemState,
    cfg: &CouplingConfig,
    meter: &MeterState,
) -> Result<InfoBudget> {
    let joint = evolve_joint(pre, meter, cfg)?;
    let q_jt = qfi_joint(pre, meter, cfg)?;
    let success = arm_info(&joint, post)?;
    let failures = post
        .orthogonal_complement()
        .iter()
        .map(|r| arm_info(&joint, r))
        .collect::<Result<Vec<_>>>()?;
    let p_r: f64 = failures.iter().map(|a| a.p).sum();
    let dp_r: f64 = failures.iter().map(|a| a.dp).sum();
    let f_p = if success.p >= PROBABILITY_FLOOR && p_r >= PROBABILITY_FLOOR {
        success.dp * success.dp / success.p + dp_r * dp_r / p_r
    } else {
        0.0
    };
    let resolved: f64 = failures
        .iter()
        .filter(|a| a.p >= PROBABILITY_FLOOR)
        .map(|a| a.p * a.qfi + a.dp * a.dp / a.p)
        .sum();
    let pr_qr = if p_r >= PROBABILITY_FLOOR {
        resolved - dp_r * dp_r / p_r
    } else {
        0.0
    };
    Ok(InfoBudget {
        q_jt,
        pf_qf: success.p * success.qfi,
        pr_qr,
        f_p,
        p_f: success.p,
    })
}

/// `√ν·|⟨x⟩ − x0| / std(x)` for the distribution at `g`.
pub fn snr(dist: &dyn ParamDistribution, g: f64, nu: u64, x0: f64) -> Result<f64> {
    if nu == 0 {
        return Err(Error::InvalidParameter("at least one measurement is needed".into()));
    }
    let p = dist.probabilities(g)?;
    let x = dist.support();
    let total: f64 = p.iter().sum();
    let mean = p.iter().zip(&x).map(|(p, x)| p * x).sum::<f64>() / total;
    let var = p.iter().zip(&x).map(|(p, x)| p * (x - mean).powi(2)).sum::<f64>() / total;
    if !(var > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok((nu as f64).sqrt() * (mean - x0).abs() / var.sqrt())
}

/// `(N·Δh², N²·Δh²)`: standard quantum limit and Heisenberg limit for `N` probes.
pub fn scaling_bounds(n: u64, h_min: f64, h_max: f64) -> Result<(f64, f64)> {
    if n == 0 || !(h_max > h_min) {
        return Err(Error::InvalidParameter("need N ≥ 1 and h_max > h_min".into()));
    }
    let spread = (h_max - h_min).powi(2);
    let n = n as f64;
    Ok((n * spread, n * n * spread))
}

/// Phase variance `1/[8(n̄² + n̄)]` reachable with a two-mode squeezed vacuum.
pub fn tmsv_phase_variance(mean_photons: f64) -> f64 {
    1.0 / (8.0 * (mean_photons * mean_photons + mean_photons))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::Generator;
    use crate::meter::{FockMeter, GaussianMeter};
    use crate::qsys::{bloch_state, optimal_postselection, Observable};
    use std::f64::consts::PI;

    #[test]
    fn gaussian_location_has_unit_information() {
        let d = gaussian_location(1.0, 12.0, 4001);
        let r = classical_fisher(&d, 0.3, default_step(0.3)).unwrap();
        assert!((r.fi - 1.0).abs() < 1e-8, "{}", r.fi);
        assert_eq!(r.method, FisherMethod::CentralDifference);
    }

    #[test]
    fn constant_binary_has_none() {
        let d = binary_distribution(|_| 0.3);
        assert_eq!(classical_fisher(&d, 0.1, 1e-6).unwrap().fi, 0.0);
    }

    #[test]
    fn phase_binary_approaches_n_squared() {
        let n = 50.0;
        let eps = 1e-3;
        let d = binary_distribution(move |g| (1.0 - (2.0 * g * n + eps).cos()) / 2.0);
        let f = classical_fisher(&d, 1e-5, 1e-8).unwrap().fi;
        assert!((f / (4.0 * n * n) - 1.0).abs() < 1e-2, "{f}");
    }

    #[test]
    fn step_outside_domain_rejected() {
        let d = binary_distribution(|g| g).with_domain(0.0, 1.0);
        assert!(matches!(classical_fisher(&d, 0.0, 1e-3), Err(Error::StepTooLarge { .. })));
    }

    #[test]
    fn pure_qfi_examples() {
        let sigma = 0.7;
        let grid = GaussianMeter::new(sigma).unwrap().default_grid(1.0).unwrap();
        let p = grid.p_grid();
        let phi = grid.momentum_amplitudes();
        let q = qfi_pure(
            |g| {
                Ok(phi
                    .iter()
                    .zip(&p)
                    .map(|(a, x)| a * Complex64::from_polar(1.0, -g * x))
                    .collect())
            },
            0.2,
            1e-4,
            grid.dp(),
        )
        .unwrap();
        assert!((q - 1.0 / (sigma * sigma)).abs() < 1e-8, "{q}");

        let plus = [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        let q = qfi_pure(
            |g| {
                Ok(vec![
                    plus[0] * Complex64::from_polar(1.0, -g),
                    plus[1] * Complex64::from_polar(1.0, g),
                ])
            },
            0.0,
            1e-4,
            0.5,
        )
        .unwrap();
        assert!((q - 4.0).abs() < 1e-8);
    }

    fn rotated(g: f64, mix: f64) -> DMatrix<Complex64> {
        let psi = DVector::from_vec(vec![
            Complex64::from_polar(FRAC, -g),
            Complex64::from_polar(FRAC, g),
        ]);
        let pure = &psi * psi.adjoint();
        pure * Complex64::new(1.0 - mix, 0.0) + DMatrix::identity(2, 2) * Complex64::new(mix / 2.0, 0.0)
    }

    const FRAC: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn mixed_qfi_consistency() {
        let pure = qfi_mixed(|g| Ok(rotated(g, 0.0)), 0.1, 1e-4).unwrap();
        assert!((pure - 4.0).abs() < 1e-8, "{pure}");
        let mixed = qfi_mixed(|g| Ok(rotated(g, 0.3)), 0.1, 1e-4).unwrap();
        assert!(mixed <= 0.7 * 4.0 + 1e-9);
        assert!((mixed - 4.0 * 0.7 * 0.7).abs() < 1e-8);
        let product = qfi_mixed(
            |g| {
                let r = rotated(g, 0.3);
                Ok(r.kronecker(&r))
            },
            0.1,
            1e-4,
        )
        .unwrap();
        assert!((product - 2.0 * mixed).abs() < 1e-7);
    }

    #[test]
    fn joint_qfi_examples() {
        let sigma = 0.8;
        let cfg = CouplingConfig::new(0.01, Generator::MomentumKick, Observable::pauli_z()).unwrap();
        let meter = MeterState::Gaussian(GaussianMeter::new(sigma).unwrap());
        let q = qfi_joint(&bloch_state(PI / 2.0, 0.0), &meter, &cfg).unwrap();
        assert!((q - 1.0 / (sigma * sigma)).abs() < 1e-9);

        let n: f64 = 10.0;
        let c = Observable::diagonal(&[0.0, 1.0]);
        let cfg = CouplingConfig::new(0.001, Generator::PhotonNumberPhase, c).unwrap();
        let meter = MeterState::Fock(FockMeter::coherent(Complex64::new(n.sqrt(), 0.0)).unwrap());
        let q = qfi_joint(&bloch_state(PI / 2.0, 0.0), &meter, &cfg).unwrap();
        assert!((q - (2.0 * n + n * n)).abs() < 1e-6, "{q}");
    }

    #[test]
    fn budget_closes_for_optimal_real_selection() {
        let sigma = 1.0;
        let g = 0.2 * sigma;
        let pre = bloch_state(0.5, 0.3);
        let a = Observable::pauli_z();
        let post = optimal_postselection(&pre, &a).unwrap();
        let cfg = CouplingConfig::new(g, Generator::MomentumKick, a).unwrap();
        let meter = MeterState::Gaussian(GaussianMeter::new(sigma).unwrap());
        let b = info_budget(&pre, &post, &cfg, &meter).unwrap();
        assert!(b.relative_residual() < 1e-8, "{b:?}");
        assert!((b.pf_qf / b.q_jt - 1.0).abs() < 1e-2, "{b:?}");
    }

    #[test]
    fn qutrit_budget_resolves_failures() {
        let pre = SystemState::normalized(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.3, 0.2),
            Complex64::new(-0.5, 0.1),
        ])
        .unwrap();
        let post = SystemState::normalized(vec![
            Complex64::new(0.2, 0.0),
            Complex64::new(1.0, -0.4),
            Complex64::new(0.1, 0.3),
        ])
        .unwrap();
        let a = Observable::diagonal(&[1.0, -1.0, 1.0]);
        let cfg = CouplingConfig::new(0.3, Generator::MomentumKick, a).unwrap();
        let meter = MeterState::Gaussian(GaussianMeter::new(1.0).unwrap());
        let b = info_budget(&pre, &post, &cfg, &meter).unwrap();
        assert!(b.relative_residual() < 1e-8, "{b:?}");
    }

    #[test]
    fn snr_matches_fisher_for_location_family() {
        let d = gaussian_location(2.0, 30.0, 6001);
        let g = 0.5;
        let s = snr(&d, g, 100, 0.0).unwrap();
        let f = classical_fisher(&d, g, default_step(g)).unwrap().fi;
        assert!((s / (g * (100.0 * f).sqrt()) - 1.0).abs() < 1e-6);
        assert!(snr(&d, 0.0, 100, 0.0).unwrap() < 1e-12);
    }

    #[test]
    fn bounds() {
        assert_eq!(scaling_bounds(1, -1.0, 1.0).unwrap(), (4.0, 4.0));
        assert_eq!(scaling_bounds(100, -1.0, 1.0).unwrap(), (400.0, 40000.0));
        assert!((tmsv_phase_variance(2.0) - 1.0 / 48.0).abs() < 1e-15);
    }
}
