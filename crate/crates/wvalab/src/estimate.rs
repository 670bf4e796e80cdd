//! Sampling, estimators and Monte Carlo checks of Cramér–Rao saturation.
//!
//! Every trial draws from its own ChaCha stream keyed by `(seed, trial)`, so
//! results do not depend on how trials are scheduled across threads.

use nalgebra::{DMatrix, DVector};
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dist::SampledDistribution;
use crate::error::{Error, Result};
use crate::noise::{covariance, inverse_row_sums, CorrelatedNoiseModel};
use crate::schemes::{measurement_model, MeasurementModel, OutcomeSpace, SchemeSpec};

/// Independent generator for trial `trial` of an experiment seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Pre-computed sampler for one member of a measurement family.
pub enum Sampler {
    Continuous {
        dist: SampledDistribution,
        cumulative: Vec<f64>,
    },
    Discrete {
        labels: Vec<f64>,
        alias: WeightedAliasIndex<f64>,
    },
}

impl Sampler {
    pub fn new(model: &MeasurementModel, g: f64) -> Result<Self> {
        let p = model.probabilities(g)?;
        match model.space {
            OutcomeSpace::Continuous { x0, dx } => {
                let dist = SampledDistribution::new(x0, dx, p.iter().map(|m| m / dx).collect())?;
                let cumulative = dist.cumulative();
                Ok(Sampler::Continuous { dist, cumulative })
            }
            OutcomeSpace::Discrete => {
                let alias = WeightedAliasIndex::new(p.iter().map(|v| v.max(0.0)).collect())
                    .map_err(|e| Error::InvalidParameter(format!("outcome weights: {e}")))?;
                Ok(Sampler::Discrete {
                    labels: model.support.clone(),
                    alias,
                })
            }
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Continuous { dist, cumulative } => {
                let total = cumulative[cumulative.len() - 1];
                dist.quantile_with(cumulative, rng.random::<f64>() * total)
            }
            Sampler::Discrete { labels, alias } => labels[alias.sample(rng)],
        }
    }

    pub fn draw_n<R: Rng + ?Sized>(&self, nu: usize, rng: &mut R) -> Vec<f64> {
        (0..nu).map(|_| self.draw(rng)).collect()
    }
}

/// `ν` i.i.d. outcomes of `model` at `g`: inverse CDF on the grid for continuous
/// outcomes, the alias method for discrete ones.
pub fn sample(model: &MeasurementModel, g: f64, nu: usize, seed: u64) -> Result<Vec<f64>> {
    let sampler = Sampler::new(model, g)?;
    Ok(sampler.draw_n(nu, &mut trial_rng(seed, 0)))
}

/// Averaging estimator: sample mean over the shift-to-parameter factor.
pub fn amr_estimate(samples: &[f64], calibration: f64) -> Result<f64> {
    if calibration == 0.0 || !calibration.is_finite() {
        return Err(Error::InvalidParameter(format!("calibration must be finite and nonzero, got {calibration}")));
    }
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    Ok(mean(samples) / calibration)
}

/// Weights `f_k = Σ_l [C⁻¹]_kl / Σ_kl [C⁻¹]_kl` of the correlated-noise MLE.
pub fn correlated_weights(c: &DMatrix<f64>) -> Result<Vec<f64>> {
    if c.nrows() != c.ncols() || c.nrows() == 0 {
        return Err(Error::DimensionMismatch {
            expected: c.nrows(),
            found: c.ncols(),
        });
    }
    let n = c.nrows();
    if exchangeable(c) {
        return Ok(vec![1.0 / n as f64; n]);
    }
    let rows = inverse_row_sums(c)?;
    let total: f64 = rows.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::SingularCovariance);
    }
    Ok(rows.iter().map(|r| r / total).collect())
}

/// Equal diagonal and equal off-diagonal entries, so the weights are uniform.
fn exchangeable(c: &DMatrix<f64>) -> bool {
    let n = c.nrows();
    let d = c[(0, 0)];
    let off = if n > 1 { c[(0, 1)] } else { 0.0 };
    (0..n).all(|k| (0..n).all(|l| c[(k, l)] == if k == l { d } else { off }))
}

/// `Σ f_k s_k`; uniform weights reduce to the plain mean so that the result is
/// bitwise identical to [`amr_estimate`] with unit calibration.
pub fn weighted_mean(samples: &[f64], weights: &[f64]) -> Result<f64> {
    if samples.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.len(),
            found: samples.len(),
        });
    }
    if weights.windows(2).all(|w| w[0] == w[1]) {
        return Ok(mean(samples));
    }
    Ok(samples.iter().zip(weights).map(|(s, f)| s * f).sum())
}

pub fn mle_correlated(samples: &[f64], c: &DMatrix<f64>) -> Result<f64> {
    weighted_mean(samples, &correlated_weights(c)?)
}

/// Maximizer of `loglik` over `grid`, refined by a parabola through the best
/// node and its neighbours.
pub fn grid_argmax<F: Fn(f64) -> f64>(loglik: F, grid: &[f64]) -> Result<f64> {
    let values: Vec<f64> = grid.iter().map(|&g| loglik(g)).collect();
    refine_argmax(grid, &values)
}

fn refine_argmax(grid: &[f64], values: &[f64]) -> Result<f64> {
    if grid.len() < 3 {
        return Err(Error::InvalidParameter("likelihood grid needs at least three nodes".into()));
    }
    let (k, _) = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::FlatLikelihood("likelihood is not finite anywhere on the grid".into()))?;
    if k == 0 || k == grid.len() - 1 {
        return Err(Error::BoundaryMaximum { at: grid[k] });
    }
    let (a, b, c) = (values[k - 1], values[k], values[k + 1]);
    let curvature = a - 2.0 * b + c;
    if !(curvature < 0.0) {
        return Ok(grid[k]);
    }
    let step = 0.5 * (grid[k + 1] - grid[k - 1]);
    let offset = 0.5 * (a - c) / curvature;
    Ok(grid[k] + offset.clamp(-1.0, 1.0) * step)
}

/// Log-likelihood evaluator for i.i.d. samples under one model; family members
/// are cached by grid node, so repeated trials reuse them.
pub struct Likelihood {
    grid: Vec<f64>,
    members: Vec<Vec<f64>>,
    space: OutcomeSpace,
    support: Vec<f64>,
}

impl Likelihood {
    pub fn new(model: &MeasurementModel, grid: &[f64]) -> Result<Self> {
        let members = grid
            .iter()
            .map(|&g| {
                let p = model.probabilities(g)?;
                let total: f64 = p.iter().sum();
                Ok(p.into_iter().map(|v| v / total).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(Self {
            grid: grid.to_vec(),
            members,
            space: model.space,
            support: model.support.clone(),
        })
    }

    fn log_likelihoods(&self, samples: &[f64]) -> Vec<f64> {
        match self.space {
            OutcomeSpace::Continuous { x0, dx } => {
                let last = self.support.len() - 1;
                let cells: Vec<(usize, f64)> = samples
                    .iter()
                    .map(|&x| {
                        let t = ((x - x0) / dx).clamp(0.0, last as f64);
                        let i = (t.floor() as usize).min(last - 1);
                        (i, t - i as f64)
                    })
                    .collect();
                self.members
                    .iter()
                    .map(|p| {
                        cells
                            .iter()
                            .map(|&(i, f)| (p[i] * (1.0 - f) + p[i + 1] * f).ln())
                            .sum()
                    })
                    .collect()
            }
            OutcomeSpace::Discrete => {
                let mut counts = vec![0usize; self.support.len()];
                for s in samples {
                    if let Some(j) = self.support.iter().position(|l| l == s) {
                        counts[j] += 1;
                    } else {
                        return vec![f64::NEG_INFINITY; self.grid.len()];
                    }
                }
                self.members
                    .iter()
                    .map(|p| {
                        counts
                            .iter()
                            .zip(p)
                            .filter(|(c, _)| **c > 0)
                            .map(|(c, p)| *c as f64 * p.ln())
                            .sum()
                    })
                    .collect()
            }
        }
    }

    pub fn argmax(&self, samples: &[f64]) -> Result<f64> {
        refine_argmax(&self.grid, &self.log_likelihoods(samples))
    }
}

/// Grid maximum-likelihood estimate of the model parameter.
pub fn mle_grid(samples: &[f64], model: &MeasurementModel, grid: &[f64]) -> Result<f64> {
    Likelihood::new(model, grid)?.argmax(samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Amr,
    MleCorrelated,
    MleGrid,
}

/// Detector noise added to every recorded sample: white variance `a` plus
/// `c·exp(−|Δt|/τ_c)`, with `dt` the spacing of input probes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub a: f64,
    pub c: f64,
    pub dt: f64,
    pub tau_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub scheme: SchemeSpec,
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    /// Recorded samples per trial.
    pub nu: usize,
    pub trials: usize,
    pub seed: u64,
    pub estimator: Estimator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub scheme: String,
    pub estimator: Estimator,
    pub seed: u64,
    pub nu: usize,
    pub trials: usize,
    pub true_value: f64,
    pub mean_estimate: f64,
    pub empirical_variance: f64,
    /// Fisher information of one trial's `ν` samples.
    pub fisher: f64,
    pub crb: f64,
    pub crb_ratio: f64,
    /// Jackknife standard error over trials; absent with fewer than three trials.
    pub crb_ratio_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub report: EstimateReport,
    pub estimates: Vec<f64>,
    pub first_trial_samples: Vec<f64>,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.nu == 0 || self.trials == 0 {
            return Err(Error::InvalidParameter("nu and trials must be ≥ 1".into()));
        }
        if let Some(n) = &self.noise {
            CorrelatedNoiseModel::new(n.a, n.c, n.dt, n.tau_c, 1)?;
            if self.estimator == Estimator::MleGrid {
                return Err(Error::UnsupportedCombination {
                    scheme: self.scheme.name().to_string(),
                    case: "grid likelihood under correlated noise".into(),
                });
            }
        }
        Ok(())
    }
}

/// Everything that is fixed across trials.
struct Prepared {
    model: MeasurementModel,
    sampler: Sampler,
    offset: f64,
    noise_factor: Option<DMatrix<f64>>,
    weights: Option<Vec<f64>>,
    likelihood: Option<Likelihood>,
    fisher: f64,
}

fn prepare(plan: &ExperimentPlan) -> Result<Prepared> {
    plan.validate()?;
    let model = measurement_model(&plan.scheme)?;
    let g = model.g;
    if model.calibration == 0.0 && plan.estimator != Estimator::MleGrid {
        return Err(Error::InvalidParameter(
            "readout mean does not respond to the parameter; averaging is undefined".into(),
        ));
    }
    let sampler = Sampler::new(&model, g)?;
    let offset = model.mean(0.0)?;
    let nu = plan.nu;
    let mut noise_factor = None;
    let mut weights = None;
    let fisher;
    match plan.noise {
        Some(n) => {
            let p_f = model.p_f.clamp(f64::MIN_POSITIVE, 1.0);
            let noise = CorrelatedNoiseModel::new(n.a, n.c, n.dt / p_f, n.tau_c, nu)?;
            let c = covariance(&noise);
            let intrinsic = readout_variance(&model, g)?;
            let total = &c + DMatrix::identity(nu, nu) * intrinsic;
            let rows: DVector<f64> = inverse_row_sums(&total)?;
            fisher = model.calibration.powi(2) * rows.sum();
            if plan.estimator == Estimator::MleCorrelated {
                weights = Some(correlated_weights(&total)?);
            }
            noise_factor = Some(c.cholesky().ok_or(Error::SingularCovariance)?.l());
        }
        None => {
            fisher = nu as f64 * model.fisher;
            if plan.estimator == Estimator::MleCorrelated {
                weights = Some(vec![1.0 / nu as f64; nu]);
            }
        }
    }
    let likelihood = if plan.estimator == Estimator::MleGrid {
        let sd = 1.0 / fisher.sqrt();
        if !sd.is_finite() {
            return Err(Error::FlatLikelihood("zero Fisher information".into()));
        }
        let points = 81;
        let grid: Vec<f64> = (0..points)
            .map(|i| g + sd * (-8.0 + 16.0 * i as f64 / (points - 1) as f64))
            .collect();
        Some(Likelihood::new(&model, &grid)?)
    } else {
        None
    };
    Ok(Prepared {
        model,
        sampler,
        offset,
        noise_factor,
        weights,
        likelihood,
        fisher,
    })
}

fn readout_variance(model: &MeasurementModel, g: f64) -> Result<f64> {
    let p = model.probabilities(g)?;
    let total: f64 = p.iter().sum();
    let m = p.iter().zip(&model.support).map(|(p, x)| p * x).sum::<f64>() / total;
    Ok(p.iter().zip(&model.support).map(|(p, x)| p * (x - m).powi(2)).sum::<f64>() / total)
}

fn run_trial(plan: &ExperimentPlan, prep: &Prepared, trial: u64) -> Result<(f64, Vec<f64>)> {
    let mut rng = trial_rng(plan.seed, trial);
    let mut samples = prep.sampler.draw_n(plan.nu, &mut rng);
    if let Some(l) = &prep.noise_factor {
        let z = DVector::from_fn(plan.nu, |_, _| rng.sample::<f64, _>(StandardNormal));
        let noise = l * z;
        for (s, e) in samples.iter_mut().zip(noise.iter()) {
            *s += e;
        }
    }
    let estimate = match plan.estimator {
        Estimator::Amr => {
            let centred: Vec<f64> = samples.iter().map(|s| s - prep.offset).collect();
            amr_estimate(&centred, prep.model.calibration)?
        }
        Estimator::MleCorrelated => {
            let centred: Vec<f64> = samples.iter().map(|s| s - prep.offset).collect();
            let w = prep.weights.as_ref().expect("weights prepared");
            weighted_mean(&centred, w)? / prep.model.calibration
        }
        Estimator::MleGrid => prep.likelihood.as_ref().expect("likelihood prepared").argmax(&samples)?,
    };
    Ok((estimate, samples))
}

/// Runs `trials` independent replications, in parallel when threads are available.
pub fn run_experiment_detailed(plan: &ExperimentPlan) -> Result<ExperimentOutcome> {
    let prep = prepare(plan)?;
    let trials = plan.trials;
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(trials);
    let chunk = trials.div_ceil(threads);
    let mut results: Vec<Result<(f64, Option<Vec<f64>>)>> = Vec::with_capacity(trials);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let prep = &prep;
                scope.spawn(move || {
                    let lo = t * chunk;
                    let hi = ((t + 1) * chunk).min(trials);
                    (lo..hi)
                        .map(|i| {
                            run_trial(plan, prep, i as u64).map(|(e, s)| (e, (i == 0).then_some(s)))
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            results.extend(h.join().expect("trial thread panicked"));
        }
    });
    let mut estimates = Vec::with_capacity(trials);
    let mut first = Vec::new();
    for r in results {
        let (e, s) = r?;
        if let Some(s) = s {
            first = s;
        }
        estimates.push(e);
    }

    let mean_estimate = mean(&estimates);
    let empirical_variance = sample_variance(&estimates);
    let crb = 1.0 / prep.fisher;
    let report = EstimateReport {
        scheme: plan.scheme.name().to_string(),
        estimator: plan.estimator,
        seed: plan.seed,
        nu: plan.nu,
        trials,
        true_value: prep.model.g,
        mean_estimate,
        empirical_variance,
        fisher: prep.fisher,
        crb,
        crb_ratio: empirical_variance * prep.fisher,
        crb_ratio_se: jackknife_variance_se(&estimates).map(|se| se * prep.fisher),
    };
    Ok(ExperimentOutcome {
        report,
        estimates,
        first_trial_samples: first,
    })
}

pub fn run_experiment(plan: &ExperimentPlan) -> Result<EstimateReport> {
    Ok(run_experiment_detailed(plan)?.report)
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance; zero for a single value.
pub fn sample_variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

/// Jackknife standard error of the unbiased sample variance.
pub fn jackknife_variance_se(x: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 3 {
        return None;
    }
    let m = mean(x);
    let d: Vec<f64> = x.iter().map(|v| v - m).collect();
    let s1: f64 = d.iter().sum();
    let s2: f64 = d.iter().map(|v| v * v).sum();
    let k = (n - 1) as f64;
    let loo: Vec<f64> = d
        .iter()
        .map(|v| ((s2 - v * v) - (s1 - v).powi(2) / k) / (k - 1.0))
        .collect();
    let lm = mean(&loo);
    let spread: f64 = loo.iter().map(|v| (v - lm).powi(2)).sum();
    Some((k / n as f64 * spread).sqrt())
}
