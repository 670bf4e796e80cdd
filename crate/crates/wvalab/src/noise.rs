//! Technical-noise and detector models: time-correlated noise, beam jitter,
//! pixelation and saturating detectors.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::coupling::{evolve_joint, postselect, CouplingConfig, Generator, MeterState};
use crate::dist::{DiscreteDistribution, SampledDistribution};
use crate::error::{Error, Result};
use crate::infometrics::{classical_fisher, default_step, fisher_sum, FnDistribution, PROBABILITY_FLOOR};
use crate::meter::GaussianMeter;
use crate::numeric::{normal_cdf, pairwise_sum};
use crate::qsys::{Observable, SystemState};

/// Stationary noise `C_kl = a δ_kl + c exp(−|k−l| δt/τ)` over `n` equally spaced samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatedNoiseModel {
    /// White-noise floor variance.
    pub a: f64,
    /// Variance of the correlated component.
    pub c: f64,
    pub dt: f64,
    pub tau_c: f64,
    pub n: usize,
}

impl CorrelatedNoiseModel {
    pub fn new(a: f64, c: f64, dt: f64, tau_c: f64, n: usize) -> Result<Self> {
        let m = Self { a, c, dt, tau_c, n };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) || !(self.c >= 0.0) || !(self.dt > 0.0) || !(self.tau_c > 0.0) || self.n == 0 {
            return Err(Error::InvalidParameter(
                "noise model needs a > 0, c ≥ 0, dt > 0, tau_c > 0 and n ≥ 1".into(),
            ));
        }
        Ok(())
    }

    /// Correlation between samples `lag` steps apart.
    pub fn correlation(&self, lag: usize) -> f64 {
        self.c * (-(lag as f64) * self.dt / self.tau_c).exp()
    }

    /// Same noise seen by every `1/p_f`-th sample: `N p_f` samples at spacing `δt/p_f`.
    pub fn postselected(&self, p_f: f64) -> Result<Self> {
        if !(p_f > 0.0 && p_f <= 1.0) {
            return Err(Error::InvalidParameter(format!("p_f must lie in (0, 1], got {p_f}")));
        }
        let n = ((self.n as f64) * p_f).round().max(1.0) as usize;
        Self::new(self.a, self.c, self.dt / p_f, self.tau_c, n)
    }
}

pub fn covariance(model: &CorrelatedNoiseModel) -> DMatrix<f64> {
    let n = model.n;
    let row: Vec<f64> = (0..n).map(|lag| model.correlation(lag)).collect();
    DMatrix::from_fn(n, n, |k, l| {
        let base = row[k.abs_diff(l)];
        if k == l {
            base + model.a
        } else {
            base
        }
    })
}

/// `Σ_kl C_kl`, summed over lags without building the matrix.
pub fn covariance_total(model: &CorrelatedNoiseModel) -> f64 {
    let n = model.n;
    let terms: Vec<f64> = (1..n)
        .map(|lag| 2.0 * (n - lag) as f64 * model.correlation(lag))
        .collect();
    n as f64 * (model.a + model.c) + pairwise_sum(&terms)
}

pub fn write_covariance_csv<W: Write>(c: &DMatrix<f64>, mut w: W) -> std::io::Result<()> {
    for k in 0..c.nrows() {
        let row: Vec<String> = (0..c.ncols()).map(|l| format!("{:.12e}", c[(k, l)])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// `C⁻¹·1` via Cholesky, retrying once with a small diagonal jitter.
pub fn inverse_row_sums(c: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = c.nrows();
    let ones = DVector::from_element(n, 1.0);
    if let Some(ch) = c.clone().cholesky() {
        return Ok(ch.solve(&ones));
    }
    let jitter = 1e-12 * c.trace() / n as f64;
    let shifted = c + DMatrix::identity(n, n) * jitter;
    shifted
        .cholesky()
        .map(|ch| ch.solve(&ones))
        .ok_or(Error::SingularCovariance)
}

/// Fisher information `Σ_kl [C⁻¹]_kl` of `N` correlated Gaussian readings of `g`.
pub fn cm_fisher_correlated(model: &CorrelatedNoiseModel) -> Result<f64> {
    model.validate()?;
    if model.c == 0.0 {
        return Ok(model.n as f64 / model.a);
    }
    Ok(pairwise_sum(inverse_row_sums(&covariance(model))?.as_slice()))
}

/// Fisher information of the post-selected readings `s' = g w + x'`.
pub fn wva_fisher_correlated(model: &CorrelatedNoiseModel, p_f: f64, weak_value: f64) -> Result<f64> {
    Ok(weak_value * weak_value * cm_fisher_correlated(&model.postselected(p_f)?)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AmrScheme {
    Cm,
    /// Real WVA with success probability `p_f` and weak value `w`.
    Wva { p_f: f64, weak_value: f64 },
}

impl AmrScheme {
    /// Real WVA on the optimal trade-off line `p_f w² = 1`.
    pub fn wva_on_tradeoff(p_f: f64) -> Self {
        AmrScheme::Wva {
            p_f,
            weak_value: 1.0 / p_f.sqrt(),
        }
    }
}

/// Noise regime of the averaging-estimator table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseRegime {
    /// Evaluate `1/V` from the full covariance.
    General,
    /// `τ ≪ δt`.
    White,
    /// `δt ≪ τ` and `p_f ≪ δt/τ`: post-selection decorrelates the kept samples.
    SlowDecorrelated,
    /// `δt ≪ τ` and `p_f ≫ δt/τ`: kept samples stay correlated.
    SlowCorrelated,
}

impl NoiseRegime {
    /// Picks the asymptotic regime nearest to the model, using a factor `margin`
    /// (e.g. 10) to decide that one scale is much smaller than another; returns
    /// `General` when neither inequality is clear.
    pub fn suggest(model: &CorrelatedNoiseModel, p_f: f64, margin: f64) -> Self {
        let ratio = model.tau_c / model.dt;
        if ratio * margin <= 1.0 {
            NoiseRegime::White
        } else if ratio >= margin {
            let threshold = model.dt / model.tau_c;
            if p_f * margin <= threshold {
                NoiseRegime::SlowDecorrelated
            } else if p_f >= threshold * margin {
                NoiseRegime::SlowCorrelated
            } else {
                NoiseRegime::General
            }
        } else {
            NoiseRegime::General
        }
    }
}

/// Information `1/V` of the averaging estimator, from the closed form of the
/// chosen regime or (for `General`) from the full covariance.
pub fn amr_information(model: &CorrelatedNoiseModel, scheme: AmrScheme, regime: NoiseRegime) -> Result<f64> {
    model.validate()?;
    let n = model.n as f64;
    let (a, c) = (model.a, model.c);
    match (scheme, regime) {
        (AmrScheme::Cm, NoiseRegime::General) => {
            Ok(n * n / covariance_total(model))
        }
        (AmrScheme::Cm, NoiseRegime::White) => Ok(n / (a + c)),
        (AmrScheme::Cm, _) => Ok(n / (a + n * c)),
        (AmrScheme::Wva { p_f, weak_value }, regime) => {
            let w2 = weak_value * weak_value;
            match regime {
                NoiseRegime::General => {
                    let sub = model.postselected(p_f)?;
                    let m = sub.n as f64;
                    Ok(w2 * m * m / covariance_total(&sub))
                }
                NoiseRegime::White | NoiseRegime::SlowDecorrelated => Ok(w2 * p_f * n / (a + c)),
                NoiseRegime::SlowCorrelated => Ok(w2 * p_f * n / (a + p_f * n * c)),
            }
        }
    }
}

/// One column of the CM/WVA information table: closed form of the regime
/// next to the value from the full covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InformationRow {
    pub regime: NoiseRegime,
    pub i_cm: (f64, f64),
    pub f_cm: (f64, f64),
    pub i_wva: (f64, f64),
    pub f_wva: (f64, f64),
}

/// Averaging information and Fisher information of CM and real WVA, as
/// `(closed form, numeric)` pairs. The regime is picked by [`NoiseRegime::suggest`];
/// in the `General` regime the closed form is the numeric value.
pub fn information_row(model: &CorrelatedNoiseModel, p_f: f64, weak_value: f64, margin: f64) -> Result<InformationRow> {
    model.validate()?;
    let regime = NoiseRegime::suggest(model, p_f, margin);
    let wva = AmrScheme::Wva { p_f, weak_value };
    let numeric_i_cm = amr_information(model, AmrScheme::Cm, NoiseRegime::General)?;
    let numeric_f_cm = cm_fisher_correlated(model)?;
    let numeric_i_wva = amr_information(model, wva, NoiseRegime::General)?;
    let numeric_f_wva = wva_fisher_correlated(model, p_f, weak_value)?;
    let n = model.n as f64;
    let gain = weak_value * weak_value * p_f;
    let (f_cm, f_wva) = match regime {
        NoiseRegime::General => (numeric_f_cm, numeric_f_wva),
        NoiseRegime::White => (n / (model.a + model.c), gain * n / (model.a + model.c)),
        NoiseRegime::SlowDecorrelated => (n / model.a, gain * n / (model.a + model.c)),
        NoiseRegime::SlowCorrelated => (n / model.a, gain * n / model.a),
    };
    Ok(InformationRow {
        regime,
        i_cm: (amr_information(model, AmrScheme::Cm, regime)?, numeric_i_cm),
        f_cm: (f_cm, numeric_f_cm),
        i_wva: (amr_information(model, wva, regime)?, numeric_i_wva),
        f_wva: (f_wva, numeric_f_wva),
    })
}

/// Optical geometry of the beam-deflection experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamGeometry {
    pub k0: f64,
    pub l1: f64,
    pub l2: f64,
    pub focal_length: f64,
    /// Beam waist.
    pub sigma: f64,
    pub photons: f64,
}

impl BeamGeometry {
    pub fn validate(&self) -> Result<()> {
        let all = [self.k0, self.l1, self.l2, self.focal_length, self.sigma, self.photons];
        if all.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidParameter("beam geometry entries must be positive".into()));
        }
        Ok(())
    }

    /// `(l1 + l2)/(2 k0 σ²)`, the diffraction factor suppressing angular jitter.
    pub fn diffraction_factor(&self) -> f64 {
        (self.l1 + self.l2) / (2.0 * self.k0 * self.sigma * self.sigma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JitterCase {
    /// Random deflection of the first mirror, standard deviation `B0`.
    AngularB0,
    /// Random displacement of the first mirror, standard deviation `Q0`.
    DisplacementQ0,
    /// Transverse jitter of the detector, standard deviation `D0`.
    DetectorD0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JitterScheme {
    Cm,
    ImaginaryWva,
}

/// Fisher information about the mirror deflection under beam or detector jitter.
pub fn jitter_fisher(case: JitterCase, geometry: &BeamGeometry, noise_std: f64, scheme: JitterScheme) -> Result<f64> {
    geometry.validate()?;
    if !(noise_std >= 0.0) {
        return Err(Error::InvalidParameter("jitter standard deviation must be ≥ 0".into()));
    }
    let s = geometry.sigma;
    let base = 4.0 * geometry.photons * s * s;
    match (case, scheme) {
        (JitterCase::AngularB0, JitterScheme::Cm) => Ok(base / (1.0 + (2.0 * s * noise_std).powi(2))),
        (JitterCase::AngularB0, JitterScheme::ImaginaryWva) => {
            let d = geometry.diffraction_factor();
            Ok(base / (1.0 + d * d * (1.0 + (2.0 * s * noise_std).powi(2))))
        }
        (JitterCase::DisplacementQ0, JitterScheme::ImaginaryWva) => {
            Ok(4.0 * geometry.photons * (s * s + noise_std * noise_std))
        }
        (JitterCase::DetectorD0, JitterScheme::Cm) => {
            let x = 2.0 * geometry.k0 * s * noise_std / geometry.focal_length;
            Ok(base / (1.0 + x * x))
        }
        (JitterCase::DetectorD0, JitterScheme::ImaginaryWva) => {
            Ok(base / (1.0 + noise_std * noise_std / (s * s)))
        }
        (case, scheme) => Err(Error::UnsupportedCombination {
            scheme: format!("{scheme:?}"),
            case: format!("{case:?}"),
        }),
    }
}

/// Pixel `n` covers `[(n − ½) r + h, (n + ½) r + h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelatedDetector {
    pub r: f64,
    pub h: f64,
}

impl PixelatedDetector {
    pub fn new(r: f64, h: f64) -> Result<Self> {
        if !(r > 0.0) || !(0.0..r).contains(&h) {
            return Err(Error::InvalidParameter(format!(
                "pixel needs r > 0 and 0 ≤ h < r, got r={r}, h={h}"
            )));
        }
        Ok(Self { r, h })
    }

    pub fn lower_edge(&self, n: i64) -> f64 {
        (n as f64 - 0.5) * self.r + self.h
    }

    pub fn pixel_of(&self, x: f64) -> i64 {
        ((x - self.h) / self.r).round() as i64
    }

    /// Same detector with width and offset multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.r * factor, self.h * factor)
    }
}

fn pixel_range(dist: &SampledDistribution, det: &PixelatedDetector) -> (i64, i64) {
    (det.pixel_of(dist.x0()) - 1, det.pixel_of(dist.x_max()) + 1)
}

/// Integrates the density over every pixel touching its support.
pub fn pixelate(dist: &SampledDistribution, det: &PixelatedDetector) -> Result<DiscreteDistribution> {
    if det.r < 8.0 * dist.dx() {
        return Err(Error::ResolutionTooCoarse {
            pixel: det.r,
            spacing: dist.dx(),
        });
    }
    let cum = dist.cumulative();
    let (lo, hi) = pixel_range(dist, det);
    let mut labels = Vec::new();
    let mut probs = Vec::new();
    let mut below = dist.cdf_with(&cum, det.lower_edge(lo));
    for n in lo..=hi {
        let above = dist.cdf_with(&cum, det.lower_edge(n + 1));
        labels.push(n as f64 * det.r + det.h);
        probs.push(above - below);
        below = above;
    }
    DiscreteDistribution::new(labels, probs)
}

/// Location-family information `∫ f'²/f` of the piecewise-linear density.
pub fn location_fisher(dist: &SampledDistribution) -> f64 {
    let d = dist.density();
    let mass = dist.total_mass();
    let terms: Vec<f64> = d
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            if a <= PROBABILITY_FLOOR || b <= PROBABILITY_FLOOR || a == b {
                0.0
            } else {
                (b - a) / dist.dx() * (b / a).ln()
            }
        })
        .collect();
    pairwise_sum(&terms) / mass
}

/// Information about a rigid shift of `dist` left after pixelation.
pub fn pixelated_location_fisher(dist: &SampledDistribution, det: &PixelatedDetector) -> Result<f64> {
    let pix = pixelate(dist, det)?;
    let (lo, _) = pixel_range(dist, det);
    let dp: Vec<f64> = (0..pix.probs.len())
        .map(|i| {
            let n = lo + i as i64;
            dist.density_at(det.lower_edge(n)) - dist.density_at(det.lower_edge(n + 1))
        })
        .collect();
    Ok(fisher_sum(&pix.probs, &dp) / dist.total_mass())
}

/// Fraction `α` of the shift information that survives pixelation.
pub fn pixelation_ratio(dist: &SampledDistribution, det: &PixelatedDetector) -> Result<f64> {
    Ok(pixelated_location_fisher(dist, det)? / location_fisher(dist))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PixelScheme {
    /// Position readout of a real weak value.
    RealWva,
    /// Momentum (far-field) readout of an imaginary weak value.
    ImaginaryWva,
}

/// `p_f·F(pixelated WVA) / F(pixelated CM)`.
///
/// The conventional reference puts the system in the eigenstate with the
/// largest `|a|` and reads the pointer position on the same detector. For the
/// imaginary scheme the detector is rescaled so that `r/Δp` of the momentum
/// readout equals `r/Δq` of the position readout.
pub fn pixelated_fisher_ratio(
    scheme: PixelScheme,
    g: f64,
    sigma: f64,
    det: &PixelatedDetector,
    pre: &SystemState,
    post: &SystemState,
    observable: &Observable,
) -> Result<f64> {
    let grid = GaussianMeter::new(sigma)?.default_grid(4.0 * g.abs() * max_abs_eigenvalue(observable))?;
    let meter = MeterState::Grid(grid.clone());
    let cfg = CouplingConfig::new(g, Generator::MomentumKick, observable.clone())?;
    let h = default_step(g);

    let wva_detector = match scheme {
        PixelScheme::RealWva => *det,
        PixelScheme::ImaginaryWva => det.scaled(1.0 / (2.0 * sigma * sigma))?,
    };
    let readout = |x: f64| -> Result<(f64, Vec<f64>)> {
        let ps = postselect(&evolve_joint(pre, &meter, &cfg.with_g(x))?, post)?;
        let success = ps.success.to_grid()?;
        let density = match scheme {
            PixelScheme::RealWva => success.position_density(),
            PixelScheme::ImaginaryWva => success.momentum_density(),
        };
        Ok((ps.p_f, pixelate(&density, &wva_detector)?.probs))
    };
    let (p_f, _) = readout(g)?;
    let wva = FnDistribution::new(Vec::new(), |x| Ok(readout(x)?.1));
    let f_wva = classical_fisher(&wva, g, h)?.fi;

    let (lambda, eigenstate) = extremal_eigenstate(observable)?;
    let cm = FnDistribution::new(Vec::new(), |x| {
        let ps = postselect(&evolve_joint(&eigenstate, &meter, &cfg.with_g(x))?, &eigenstate)?;
        Ok(pixelate(&ps.success.to_grid()?.position_density(), det)?.probs)
    });
    let f_cm = classical_fisher(&cm, g, h)?.fi;
    if !(f_cm > 0.0) {
        return Err(Error::ValidityViolation(format!(
            "conventional reference carries no information (eigenvalue {lambda})"
        )));
    }
    Ok(p_f * f_wva / f_cm)
}

fn max_abs_eigenvalue(a: &Observable) -> f64 {
    a.spectral_projectors().iter().fold(0.0f64, |m, (v, _)| m.max(v.abs()))
}

fn extremal_eigenstate(a: &Observable) -> Result<(f64, SystemState)> {
    let eig = a.matrix().clone().symmetric_eigen();
    let k = eig.eigenvalues.iamax();
    let v: Vec<_> = eig.eigenvectors.column(k).iter().copied().collect();
    Ok((eig.eigenvalues[k], SystemState::normalized(v)?))
}

/// Readout model of a photon-counting pixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturatingDetector {
    /// Largest reportable count.
    pub k_s: u64,
    pub eta: f64,
    /// Gaussian readout noise, in counts.
    pub readout_sigma: f64,
    /// Counts per digitization level.
    pub quantization: u64,
}

impl SaturatingDetector {
    pub fn new(k_s: u64, eta: f64, readout_sigma: f64, quantization: u64) -> Result<Self> {
        if k_s < 1 || !(eta > 0.0 && eta <= 1.0) || !(readout_sigma >= 0.0) || quantization == 0 {
            return Err(Error::InvalidParameter(
                "detector needs k_s ≥ 1, 0 < η ≤ 1, readout σ ≥ 0 and quantization ≥ 1".into(),
            ));
        }
        Ok(Self {
            k_s,
            eta,
            readout_sigma,
            quantization,
        })
    }
}

/// `R(k|N)` as a function of the incident photon number.
pub trait Response {
    /// Nonzero stretch of the row `R(·|n)`: first count index and probabilities.
    fn row(&self, n: u64) -> Result<(usize, Vec<f64>)>;
    /// Number of distinct readout counts.
    fn counts(&self) -> usize;
}

impl Response for SaturatingDetector {
    fn row(&self, n: u64) -> Result<(usize, Vec<f64>)> {
        let q = self.quantization as f64;
        let ks = self.k_s as usize;
        let level = |x: f64| -> usize { ((x / q).round().max(0.0) * q).min(self.k_s as f64) as usize };
        if self.readout_sigma == 0.0 {
            return Ok((level(n as f64), vec![1.0]));
        }
        let s = self.readout_sigma;
        let lo_level = level(n as f64 - 10.0 * s - q);
        let hi_level = level(n as f64 + 10.0 * s + q);
        let mut probs = vec![0.0; hi_level - lo_level + 1];
        let cdf = |x: f64| normal_cdf((x - n as f64) / s);
        // A reading x maps to round(x/q)·q, clipped to [0, k_s]; sweep the level boundaries.
        let mut m = (lo_level as f64 / q).round() as i64;
        loop {
            let v = m as f64 * q;
            let k = level(v);
            if k < lo_level || k > hi_level {
                break;
            }
            let lower = if k == 0 { f64::NEG_INFINITY } else { v - 0.5 * q };
            let upper = if k >= ks { f64::INFINITY } else { v + 0.5 * q };
            let lower_p = if lower.is_finite() { cdf(lower) } else { 0.0 };
            let upper_p = if upper.is_finite() { cdf(upper) } else { 1.0 };
            probs[k - lo_level] += (upper_p - lower_p).max(0.0);
            if k >= ks || k >= hi_level {
                break;
            }
            m += 1;
        }
        Ok((lo_level, probs))
    }

    fn counts(&self) -> usize {
        self.k_s as usize + 1
    }
}

/// Readout distribution `R(·|N)` of the parametric detector over counts `0..=k_s`.
pub fn saturating_response(det: &SaturatingDetector, n_in: u64) -> Result<DiscreteDistribution> {
    let (start, row) = det.row(n_in)?;
    let mut probs = vec![0.0; det.counts()];
    for (i, p) in row.into_iter().enumerate() {
        probs[start + i] += p;
    }
    DiscreteDistribution::new((0..det.counts()).map(|k| k as f64).collect(), probs)
}

/// Measured response matrix: row `N` holds `R(k|N)` for `k = 0, 1, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix {
    rows: Vec<Vec<f64>>,
}

impl ResponseMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = rows.first().map(Vec::len).unwrap_or(0);
        if width == 0 {
            return Err(Error::Parse("response matrix is empty".into()));
        }
        for (n, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Parse(format!("row {n} has {} columns, expected {width}", row.len())));
            }
            let total: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-6 {
                return Err(Error::Parse(format!("row {n} is not a probability distribution (sum {total})")));
            }
        }
        Ok(Self { rows })
    }

    /// Reads a headerless CSV; lines starting with `#` are skipped.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(format!("response row {i}: {e}")))?;
            let row = rec
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|e| Error::Parse(format!("response row {i}, value {f:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::new(rows)
    }

    pub fn max_input(&self) -> u64 {
        self.rows.len() as u64 - 1
    }
}

impl Response for ResponseMatrix {
    fn row(&self, n: u64) -> Result<(usize, Vec<f64>)> {
        self.rows
            .get(n as usize)
            .map(|r| (0, r.clone()))
            .ok_or_else(|| Error::InvalidParameter(format!("response matrix has no row for N = {n}")))
    }

    fn counts(&self) -> usize {
        self.rows[0].len()
    }
}

/// Mean photon number per pixel and its derivative with respect to `g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamProfile {
    pub mean: Vec<f64>,
    pub slope: Vec<f64>,
}

impl BeamProfile {
    /// Gaussian spot of `photons` photons and width `sigma`, displaced by `gain·g`,
    /// integrated over the pixels of `det` within `±reach` of the origin.
    pub fn gaussian_spot(photons: f64, sigma: f64, gain: f64, g: f64, det: &PixelatedDetector, reach: f64) -> Self {
        let lo = det.pixel_of(-reach);
        let hi = det.pixel_of(reach);
        let center = gain * g;
        let density = |x: f64| (-(x * x) / (2.0 * sigma * sigma)).exp() / ((2.0 * std::f64::consts::PI).sqrt() * sigma);
        let mut mean = Vec::new();
        let mut slope = Vec::new();
        for n in lo..=hi {
            let a = det.lower_edge(n) - center;
            let b = det.lower_edge(n + 1) - center;
            mean.push(photons * (normal_cdf(b / sigma) - normal_cdf(a / sigma)));
            slope.push(photons * gain * (density(a) - density(b)));
        }
        Self { mean, slope }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationReport {
    pub fi: f64,
    /// Per-pixel information relative to the shot-noise value `(η/n̄)(dn̄/dg)²`.
    pub gamma: Vec<f64>,
}

fn ln_poisson(n: u64, lambda: f64) -> f64 {
    n as f64 * lambda.ln() - lambda - libm::lgamma(n as f64 + 1.0)
}

/// Information in one pixel's readout when `N ~ Poisson(λ)`, `dλ/dg = dlambda`.
pub fn pixel_fisher(response: &dyn Response, lambda: f64, dlambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Ok(0.0);
    }
    let spread = 10.0 * lambda.sqrt() + 10.0;
    let n_lo = (lambda - spread).floor().max(0.0) as u64;
    let n_hi = (lambda + spread).ceil() as u64;
    let width = response.counts();
    let mut p = vec![0.0; width];
    let mut dp = vec![0.0; width];
    for n in n_lo..=n_hi {
        let pois = ln_poisson(n, lambda).exp();
        if pois == 0.0 {
            continue;
        }
        let dpois = pois * (n as f64 / lambda - 1.0) * dlambda;
        let (start, row) = response.row(n)?;
        for (i, r) in row.iter().enumerate() {
            let k = start + i;
            if k < width {
                p[k] += r * pois;
                dp[k] += r * dpois;
            }
        }
    }
    Ok(fisher_sum(&p, &dp))
}

/// Summed per-pixel information of a detector array with readout `response`.
pub fn saturated_fisher(profile: &BeamProfile, response: &dyn Response, eta: f64) -> Result<SaturationReport> {
    if profile.mean.len() != profile.slope.len() {
        return Err(Error::DimensionMismatch {
            expected: profile.mean.len(),
            found: profile.slope.len(),
        });
    }
    let mut terms = Vec::with_capacity(profile.mean.len());
    let mut gamma = Vec::with_capacity(profile.mean.len());
    for (&nbar, &dn) in profile.mean.iter().zip(&profile.slope) {
        if !(nbar > 0.0) {
            gamma.push(0.0);
            continue;
        }
        let f = pixel_fisher(response, eta * nbar, eta * dn)?;
        let shot = eta * dn * dn / nbar;
        gamma.push(if shot > 0.0 { f / shot } else { 0.0 });
        terms.push(f);
    }
    Ok(SaturationReport {
        fi: pairwise_sum(&terms),
        gamma,
    })
}

/// Saturating-detector comparison at equal input power: the conventional beam
/// carries all `photons` with shift `g`, the post-selected beam carries
/// `p_f·photons` with shift `g·w`. Returns `(F_CM, F_WVA)`.
pub fn saturation_comparison(
    photons: f64,
    sigma: f64,
    g: f64,
    p_f: f64,
    weak_value: f64,
    det: &PixelatedDetector,
    detector: &SaturatingDetector,
) -> Result<(f64, f64)> {
    let reach = 8.0 * sigma + (g * weak_value).abs();
    let cm = BeamProfile::gaussian_spot(photons, sigma, 1.0, g, det, reach);
    let wva = BeamProfile::gaussian_spot(photons * p_f, sigma, weak_value, g, det, reach);
    Ok((
        saturated_fisher(&cm, detector, detector.eta)?.fi,
        saturated_fisher(&wva, detector, detector.eta)?.fi,
    ))
}
