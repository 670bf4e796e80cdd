//! Meter states: analytic Gaussian pointers, sampled grids, truncated Fock states.
//!
//! Conventions: `[Q, P] = i`, position grid `q_j = -L + j·dq` with `dq = 2L/n`,
//! conjugate momentum grid `p_k = (k - n/2)·dp` with `dp = π/L`.

use std::f64::consts::PI;
use std::io::{self, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dist::SampledDistribution;
use crate::error::{Error, Result};
use crate::numeric::{norm_sqr, pairwise_sum};

/// Default number of grid points.
pub const DEFAULT_POINTS: usize = 4096;
/// Half-width of the default grid in units of `σ + |shift|`.
pub const SPAN_FACTOR: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMeter {
    pub sigma: f64,
    #[serde(default)]
    pub mean_q: f64,
    #[serde(default)]
    pub mean_p: f64,
}

impl GaussianMeter {
    pub fn new(sigma: f64) -> Result<Self> {
        Self::displaced(sigma, 0.0, 0.0)
    }

    pub fn displaced(sigma: f64, mean_q: f64, mean_p: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self {
            sigma,
            mean_q,
            mean_p,
        })
    }

    pub fn var_q(&self) -> f64 {
        self.sigma * self.sigma
    }

    pub fn var_p(&self) -> f64 {
        1.0 / (4.0 * self.sigma * self.sigma)
    }

    /// Position amplitude `(2πσ²)^{-1/4} exp[-(q-q₀)²/4σ²] e^{i p₀ q}`.
    pub fn amplitude(&self, q: f64) -> Complex64 {
        let s2 = self.sigma * self.sigma;
        let mag = (2.0 * PI * s2).powf(-0.25) * (-(q - self.mean_q).powi(2) / (4.0 * s2)).exp();
        Complex64::from_polar(mag, self.mean_p * q)
    }

    /// Default grid for a pointer that will be displaced by at most `shift`.
    pub fn default_grid(&self, shift: f64) -> Result<GridMeter> {
        let span = SPAN_FACTOR * (self.sigma + shift.abs()) + self.mean_q.abs();
        let span = span.max(SPAN_FACTOR * self.sigma);
        to_grid(self, span, DEFAULT_POINTS)
    }
}

/// `|⟨q|Φ⟩|²` for the Gaussian pointer.
pub fn gaussian_density(meter: &GaussianMeter, q: f64) -> f64 {
    meter.amplitude(q).norm_sqr()
}

/// Samples the pointer on `[-span, span)` with `points` nodes and renormalizes.
pub fn to_grid(meter: &GaussianMeter, span: f64, points: usize) -> Result<GridMeter> {
    let required = SPAN_FACTOR * meter.sigma + meter.mean_q.abs();
    if span < required * (1.0 - 1e-12) {
        return Err(Error::InsufficientSpan { span, required });
    }
    if points < 256 || points % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "grid needs an even number of points ≥ 256, got {points}"
        )));
    }
    let dq = 2.0 * span / points as f64;
    let amps: Vec<Complex64> = (0..points).map(|j| meter.amplitude(-span + j as f64 * dq)).collect();
    GridMeter::normalized(span, amps)
}

/// Complex amplitudes on a uniform position grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMeter {
    half_width: f64,
    amplitudes: Vec<Complex64>,
}

impl GridMeter {
    pub fn new(half_width: f64, amplitudes: Vec<Complex64>) -> Result<Self> {
        let g = Self::unchecked(half_width, amplitudes)?;
        let norm = g.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("grid norm {norm} differs from 1")));
        }
        Ok(g)
    }

    pub fn normalized(half_width: f64, amplitudes: Vec<Complex64>) -> Result<Self> {
        let mut g = Self::unchecked(half_width, amplitudes)?;
        let norm = g.norm();
        if !(norm > 0.0) {
            return Err(Error::InvalidState("grid amplitudes vanish".into()));
        }
        let s = 1.0 / norm.sqrt();
        g.amplitudes.iter_mut().for_each(|a| *a *= s);
        Ok(g)
    }

    fn unchecked(half_width: f64, amplitudes: Vec<Complex64>) -> Result<Self> {
        if !(half_width > 0.0) || amplitudes.len() < 4 || amplitudes.len() % 2 != 0 {
            return Err(Error::InvalidParameter(
                "grid needs positive half-width and an even number of points".into(),
            ));
        }
        Ok(Self {
            half_width,
            amplitudes,
        })
    }

    /// Builds a grid from momentum amplitudes on the matching `p` grid.
    pub fn from_momentum(half_width: f64, momentum: &[Complex64]) -> Result<Self> {
        let dp = PI / half_width;
        Self::unchecked(half_width, p_to_q(momentum, dp))
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn dq(&self) -> f64 {
        2.0 * self.half_width / self.len() as f64
    }

    pub fn dp(&self) -> f64 {
        PI / self.half_width
    }

    pub fn q(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dq()
    }

    pub fn p(&self, k: usize) -> f64 {
        (k as f64 - (self.len() / 2) as f64) * self.dp()
    }

    pub fn q_grid(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.q(j)).collect()
    }

    pub fn p_grid(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.p(k)).collect()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.amplitudes) * self.dq()
    }

    pub fn momentum_amplitudes(&self) -> Vec<Complex64> {
        q_to_p(&self.amplitudes, self.dq())
    }

    pub fn position_density(&self) -> SampledDistribution {
        let d = self.amplitudes.iter().map(|a| a.norm_sqr()).collect();
        SampledDistribution::new(-self.half_width, self.dq(), d).expect("valid grid")
    }

    pub fn momentum_density(&self) -> SampledDistribution {
        let d = self.momentum_amplitudes().iter().map(|a| a.norm_sqr()).collect();
        SampledDistribution::new(self.p(0), self.dp(), d).expect("valid grid")
    }

    pub fn mean_q(&self) -> f64 {
        moment(&self.amplitudes, |j| self.q(j), self.dq(), 1) / self.norm()
    }

    pub fn var_q(&self) -> f64 {
        let m = self.mean_q();
        moment(&self.amplitudes, |j| self.q(j) - m, self.dq(), 2) / self.norm()
    }

    pub fn mean_p(&self) -> f64 {
        let phi = self.momentum_amplitudes();
        moment(&phi, |k| self.p(k), self.dp(), 1) / (norm_sqr(&phi) * self.dp())
    }

    pub fn var_p(&self) -> f64 {
        let phi = self.momentum_amplitudes();
        let m = self.mean_p();
        moment(&phi, |k| self.p(k) - m, self.dp(), 2) / (norm_sqr(&phi) * self.dp())
    }

    /// Symmetrized covariance `⟨(QP + PQ)/2⟩ - ⟨Q⟩⟨P⟩`.
    pub fn cov_qp(&self) -> f64 {
        let phi = self.momentum_amplitudes();
        let dphi: Vec<Complex64> = phi
            .iter()
            .enumerate()
            .map(|(k, a)| a * self.p(k))
            .collect();
        let p_psi = p_to_q(&dphi, self.dp());
        let qp: Complex64 = self
            .amplitudes
            .iter()
            .zip(&p_psi)
            .enumerate()
            .map(|(j, (a, b))| a.conj() * self.q(j) * b)
            .sum::<Complex64>()
            * self.dq();
        qp.re / self.norm() - self.mean_q() * self.mean_p()
    }

    /// Extends the position window by zero padding, keeping `dq`.
    pub fn padded(&self, factor: usize) -> Result<Self> {
        if factor <= 1 {
            return Ok(self.clone());
        }
        let n = self.len();
        let extra = (factor - 1) * n / 2;
        let mut amps = vec![Complex64::new(0.0, 0.0); extra];
        amps.extend_from_slice(&self.amplitudes);
        amps.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), extra));
        Self::unchecked(self.half_width * factor as f64, amps)
    }

    /// Refines `dq` by zero padding in momentum, keeping the window.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        if factor <= 1 {
            return Ok(self.clone());
        }
        let phi = self.momentum_amplitudes();
        let n = self.len();
        let extra = (factor - 1) * n / 2;
        let mut wide = vec![Complex64::new(0.0, 0.0); extra];
        wide.extend_from_slice(&phi);
        wide.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), extra));
        Self::from_momentum(self.half_width, &wide)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "q,re,im")?;
        for (j, a) in self.amplitudes.iter().enumerate() {
            writeln!(w, "{:.12e},{:.12e},{:.12e}", self.q(j), a.re, a.im)?;
        }
        Ok(())
    }
}

fn moment<F: Fn(usize) -> f64>(amps: &[Complex64], x: F, dx: f64, power: i32) -> f64 {
    let terms: Vec<f64> = amps
        .iter()
        .enumerate()
        .map(|(i, a)| a.norm_sqr() * x(i).powi(power))
        .collect();
    pairwise_sum(&terms) * dx
}

/// `i^n` for even `n`.
fn quarter_turns(n: usize) -> f64 {
    if n % 4 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Position amplitudes to momentum amplitudes on the conjugate grid.
pub(crate) fn q_to_p(psi: &[Complex64], dq: f64) -> Vec<Complex64> {
    let n = psi.len();
    let mut buf: Vec<Complex64> = psi
        .iter()
        .enumerate()
        .map(|(j, a)| if j % 2 == 0 { *a } else { -a })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = dq / (2.0 * PI).sqrt() * quarter_turns(n);
    buf.iter()
        .enumerate()
        .map(|(k, a)| if k % 2 == 0 { a * scale } else { -a * scale })
        .collect()
}

/// Momentum amplitudes to position amplitudes on the conjugate grid.
pub(crate) fn p_to_q(phi: &[Complex64], dp: f64) -> Vec<Complex64> {
    let n = phi.len();
    let mut buf: Vec<Complex64> = phi
        .iter()
        .enumerate()
        .map(|(k, a)| if k % 2 == 0 { *a } else { -a })
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = dp / (2.0 * PI).sqrt() * quarter_turns(n);
    buf.iter()
        .enumerate()
        .map(|(j, a)| if j % 2 == 0 { a * scale } else { -a * scale })
        .collect()
}

/// Wigner function sampled on a rectangular `(q, p)` lattice; `values` is row-major in `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerMap {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub values: Vec<f64>,
}

impl WignerMap {
    pub fn value(&self, iq: usize, ip: usize) -> f64 {
        self.values[iq * self.p.len() + ip]
    }

    fn step(axis: &[f64]) -> f64 {
        axis[1] - axis[0]
    }

    /// `∫∫ W dq dp` by the trapezoid rule.
    pub fn integral(&self) -> f64 {
        self.marginal_q().iter().enumerate().map(|(i, v)| trap_w(i, self.q.len()) * v).sum::<f64>()
            * Self::step(&self.q)
    }

    /// `∫ W dp` at each `q` node.
    pub fn marginal_q(&self) -> Vec<f64> {
        let np = self.p.len();
        let dp = Self::step(&self.p);
        (0..self.q.len())
            .map(|i| (0..np).map(|k| trap_w(k, np) * self.value(i, k)).sum::<f64>() * dp)
            .collect()
    }

    /// `∫ W dq` at each `p` node.
    pub fn marginal_p(&self) -> Vec<f64> {
        let nq = self.q.len();
        let dq = Self::step(&self.q);
        (0..self.p.len())
            .map(|k| (0..nq).map(|i| trap_w(i, nq) * self.value(i, k)).sum::<f64>() * dq)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "q,p,value")?;
        for (i, q) in self.q.iter().enumerate() {
            for (k, p) in self.p.iter().enumerate() {
                writeln!(w, "{:.12e},{:.12e},{:.12e}", q, p, self.value(i, k))?;
            }
        }
        Ok(())
    }
}

fn trap_w(i: usize, n: usize) -> f64 {
    if i == 0 || i + 1 == n {
        0.5
    } else {
        1.0
    }
}

/// Wigner function on a default lattice: about 201 × 201 nodes covering ±7 standard
/// deviations of each quadrature around its mean.
pub fn wigner(meter: &GridMeter) -> WignerMap {
    let (mq, sq) = (meter.mean_q(), meter.var_q().sqrt());
    let (mp, sp) = (meter.mean_p(), meter.var_p().sqrt());
    let dq = meter.dq();
    let lo = ((mq - 7.0 * sq + meter.half_width) / dq).floor().max(0.0) as usize;
    let hi = (((mq + 7.0 * sq + meter.half_width) / dq).ceil() as usize).min(meter.len() - 1);
    let stride = ((hi - lo) / 200).max(1);
    let q_idx: Vec<usize> = (lo..=hi).step_by(stride).collect();
    let np = 201;
    let p_vals: Vec<f64> = (0..np)
        .map(|k| mp - 7.0 * sp + 14.0 * sp * k as f64 / (np - 1) as f64)
        .collect();
    wigner_on(meter, &q_idx, &p_vals)
}

/// `W(q_j, p) = (dq/π) Σ_k ψ*(q_{j+k}) ψ(q_{j-k}) e^{2ipk·dq}` at the given grid indices and momenta.
pub fn wigner_on(meter: &GridMeter, q_indices: &[usize], p_values: &[f64]) -> WignerMap {
    let psi = meter.amplitudes();
    let n = psi.len();
    let dq = meter.dq();
    let mut values = Vec::with_capacity(q_indices.len() * p_values.len());
    for &j in q_indices {
        let kmax = j.min(n - 1 - j);
        let pairs: Vec<(f64, Complex64)> = (1..=kmax)
            .map(|k| (k as f64 * dq, psi[j + k].conj() * psi[j - k]))
            .filter(|(_, c)| c.norm() > 1e-300)
            .collect();
        let centre = psi[j].norm_sqr();
        for &p in p_values {
            let mut acc = centre;
            for &(y, c) in &pairs {
                // the ±y terms are complex conjugates once paired
                let e = Complex64::from_polar(1.0, 2.0 * p * y);
                acc += 2.0 * (c * e).re;
            }
            values.push(acc * dq / PI);
        }
    }
    WignerMap {
        q: q_indices.iter().map(|&j| meter.q(j)).collect(),
        p: p_values.to_vec(),
        values,
    }
}

/// Distribution of `S_θ = Q cosθ + P sinθ`, computed exactly by shearing the state.
pub fn quadrature_marginal(meter: &GridMeter, theta: f64) -> Result<SampledDistribution> {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    let mut sign = 1.0;
    if t > PI / 2.0 {
        t -= PI;
        sign = -1.0;
    } else if t < -PI / 2.0 {
        t += PI;
        sign = -1.0;
    }
    let (vq, vp, c) = (meter.var_q(), meter.var_p(), meter.cov_qp());
    let (mq, mp) = (meter.mean_q(), meter.mean_p());
    let dist = if t.abs() <= PI / 4.0 {
        // S = cosθ (Q + tanθ P): free propagation e^{-i tanθ P²/2}
        let tan = t.tan();
        let mean_x = mq + tan * mp;
        let sd_x = (vq + 2.0 * tan * c + tan * tan * vp).max(0.0).sqrt();
        let need = mean_x.abs() + 12.0 * sd_x;
        let grid = meter.padded(pow2_factor(need / meter.half_width()))?;
        let phi: Vec<Complex64> = grid
            .momentum_amplitudes()
            .iter()
            .enumerate()
            .map(|(k, a)| a * Complex64::from_polar(1.0, -0.5 * tan * grid.p(k).powi(2)))
            .collect();
        let psi = p_to_q(&phi, grid.dp());
        let density = psi.iter().map(|a| a.norm_sqr()).collect();
        SampledDistribution::new(-grid.half_width(), grid.dq(), density)?.rescaled(t.cos())?
    } else {
        // S = sinθ (P + cotθ Q): chirp e^{i cotθ Q²/2}, then Fourier transform
        let cot = 1.0 / t.tan();
        let mean_y = mp + cot * mq;
        let sd_y = (vp + 2.0 * cot * c + cot * cot * vq).max(0.0).sqrt();
        let q_reach = mq.abs() + 12.0 * vq.sqrt();
        let p_max = PI / meter.dq();
        let need = (mean_y.abs() + 12.0 * sd_y).max(mp.abs() + cot.abs() * q_reach + 12.0 * vp.sqrt());
        let grid = meter.refined(pow2_factor(need / p_max))?;
        let psi: Vec<Complex64> = grid
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(j, a)| a * Complex64::from_polar(1.0, 0.5 * cot * grid.q(j).powi(2)))
            .collect();
        let phi = q_to_p(&psi, grid.dq());
        let density = phi.iter().map(|a| a.norm_sqr()).collect();
        SampledDistribution::new(grid.p(0), grid.dp(), density)?.rescaled(t.sin())?
    };
    if sign < 0.0 {
        dist.rescaled(-1.0)
    } else {
        Ok(dist)
    }
}

fn pow2_factor(ratio: f64) -> usize {
    let mut f = 1usize;
    while (f as f64) < ratio {
        f *= 2;
    }
    f
}

/// Quadrature angle maximizing the post-selected mean of `S_θ` for weak value `w`.
pub fn optimal_quadrature_angle(weak_value: Complex64, sigma: f64) -> f64 {
    (weak_value.im / (2.0 * sigma * sigma)).atan2(weak_value.re)
}

/// Meter in the photon-number basis.
#[derive(Debug, Clone, PartialEq)]
pub enum FockMeter {
    /// Mixture `Σ_j p_j |α_j⟩⟨α_j|` truncated at `n_max`.
    CoherentMixture {
        components: Vec<(f64, Complex64)>,
        n_max: usize,
    },
    /// Explicit truncated density matrix.
    Density { matrix: DMatrix<Complex64> },
}

/// Default truncation for mean photon number `n̄`.
pub fn default_truncation(mean_photons: f64) -> usize {
    (mean_photons + 10.0 * mean_photons.sqrt() + 20.0).ceil() as usize
}

impl FockMeter {
    pub fn coherent(alpha: Complex64) -> Result<Self> {
        Self::mixture(vec![(1.0, alpha)])
    }

    pub fn mixture(components: Vec<(f64, Complex64)>) -> Result<Self> {
        let n_max = components
            .iter()
            .map(|(_, a)| default_truncation(a.norm_sqr()))
            .max()
            .unwrap_or(20);
        Self::mixture_truncated(components, n_max)
    }

    pub fn mixture_truncated(components: Vec<(f64, Complex64)>, n_max: usize) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidState("empty coherent mixture".into()));
        }
        if components.iter().any(|(p, _)| *p < 0.0) {
            return Err(Error::InvalidState("negative mixture weight".into()));
        }
        let total: f64 = components.iter().map(|(p, _)| p).sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("mixture weights sum to {total}")));
        }
        let meter = FockMeter::CoherentMixture { components, n_max };
        meter.check_truncation()?;
        Ok(meter)
    }

    pub fn density(matrix: DMatrix<Complex64>) -> Result<Self> {
        let rho = crate::qsys::DensityState::new(matrix)?;
        Ok(FockMeter::Density {
            matrix: rho.matrix().clone(),
        })
    }

    /// Two equal-weight coherent states `|0⟩` and `|√N⟩`; photon-number variance `N²/4 + N/2`.
    pub fn two_peak(n: f64) -> Result<Self> {
        Self::mixture(vec![(0.5, Complex64::new(0.0, 0.0)), (0.5, Complex64::new(n.sqrt(), 0.0))])
    }

    pub fn n_max(&self) -> usize {
        match self {
            FockMeter::CoherentMixture { n_max, .. } => *n_max,
            FockMeter::Density { matrix } => matrix.nrows() - 1,
        }
    }

    fn check_truncation(&self) -> Result<()> {
        if let FockMeter::CoherentMixture { components, n_max } = self {
            let tail: f64 = components
                .iter()
                .map(|(p, a)| p * poisson_tail(a.norm_sqr(), *n_max))
                .sum();
            if tail >= 1e-8 {
                return Err(Error::TruncationTooTight {
                    tail,
                    n_max: *n_max,
                });
            }
        }
        Ok(())
    }

    /// Pure-state decomposition `Σ_j w_j |v_j⟩⟨v_j|` in the number basis.
    pub fn pure_components(&self) -> Vec<(f64, Vec<Complex64>)> {
        match self {
            FockMeter::CoherentMixture { components, n_max } => components
                .iter()
                .filter(|(p, _)| *p > 0.0)
                .map(|(p, a)| (*p, coherent_amplitudes(*a, *n_max)))
                .collect(),
            FockMeter::Density { matrix } => {
                let eig = matrix.clone().symmetric_eigen();
                (0..matrix.nrows())
                    .filter(|&k| eig.eigenvalues[k] > 1e-14)
                    .map(|k| {
                        (
                            eig.eigenvalues[k],
                            eig.eigenvectors.column(k).iter().copied().collect(),
                        )
                    })
                    .collect()
            }
        }
    }

    pub fn is_pure(&self) -> bool {
        self.pure_components().len() == 1
    }

    /// `P(n)` for `n = 0..=n_max`.
    pub fn photon_distribution(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_max() + 1];
        match self {
            FockMeter::Density { matrix } => {
                for (n, o) in out.iter_mut().enumerate() {
                    *o = matrix[(n, n)].re;
                }
            }
            _ => {
                for (w, amps) in self.pure_components() {
                    for (o, a) in out.iter_mut().zip(&amps) {
                        *o += w * a.norm_sqr();
                    }
                }
            }
        }
        out
    }
}

/// Number-basis amplitudes `e^{-|α|²/2} αⁿ/√n!`, evaluated in log space.
pub fn coherent_amplitudes(alpha: Complex64, n_max: usize) -> Vec<Complex64> {
    let r2 = alpha.norm_sqr();
    if r2 == 0.0 {
        let mut v = vec![Complex64::new(0.0, 0.0); n_max + 1];
        v[0] = Complex64::new(1.0, 0.0);
        return v;
    }
    let ln_r = 0.5 * r2.ln();
    let arg = alpha.arg();
    (0..=n_max)
        .map(|n| {
            let ln_mag = -0.5 * r2 + n as f64 * ln_r - 0.5 * libm::lgamma(n as f64 + 1.0);
            Complex64::from_polar(ln_mag.exp(), n as f64 * arg)
        })
        .collect()
}

/// Poisson mass above `n_max` for mean `mean`.
fn poisson_tail(mean: f64, n_max: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let mut tail = 0.0;
    let ln_m = mean.ln();
    let mut n = n_max + 1;
    loop {
        let term = (-mean + n as f64 * ln_m - libm::lgamma(n as f64 + 1.0)).exp();
        tail += term;
        if (n as f64 > mean && term < 1e-20 * tail.max(1e-300)) || term == 0.0 && n as f64 > mean {
            break;
        }
        n += 1;
        if n > n_max + 100_000 {
            break;
        }
    }
    tail
}

/// Exact moments `(n̄, Var n)` of the truncated photon-number distribution.
pub fn fock_moments(meter: &FockMeter) -> Result<(f64, f64)> {
    meter.check_truncation()?;
    let p = meter.photon_distribution();
    let total: f64 = pairwise_sum(&p);
    let mean = p.iter().enumerate().map(|(n, w)| n as f64 * w).sum::<f64>() / total;
    let var = p
        .iter()
        .enumerate()
        .map(|(n, w)| (n as f64 - mean).powi(2) * w)
        .sum::<f64>()
        / total;
    Ok((mean, var))
}
