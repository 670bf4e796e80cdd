//! Sampled one-dimensional densities and discrete distributions.

use std::io::{self, Write};

use crate::error::{Error, Result};

/// Density sampled on uniform nodes `x_i = x0 + i·dx`, read as the piecewise-linear
/// interpolant of the nodes and zero outside them.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledDistribution {
    x0: f64,
    dx: f64,
    density: Vec<f64>,
}

impl SampledDistribution {
    pub fn new(x0: f64, dx: f64, density: Vec<f64>) -> Result<Self> {
        if !(dx > 0.0) || density.len() < 2 {
            return Err(Error::InvalidParameter(
                "sampled distribution needs dx > 0 and two or more nodes".into(),
            ));
        }
        if density.iter().any(|d| !d.is_finite() || *d < -1e-12) {
            return Err(Error::InvalidParameter("density must be finite and nonnegative".into()));
        }
        Ok(Self {
            x0,
            dx,
            density: density.into_iter().map(|d| d.max(0.0)).collect(),
        })
    }

    /// Samples a density function on `n` nodes covering `[lo, hi]`.
    pub fn from_fn<F: Fn(f64) -> f64>(lo: f64, hi: f64, n: usize, f: F) -> Result<Self> {
        let dx = (hi - lo) / (n - 1) as f64;
        Self::new(lo, dx, (0..n).map(|i| f(lo + i as f64 * dx)).collect())
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.density.len()
    }

    pub fn is_empty(&self) -> bool {
        self.density.is_empty()
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.len() - 1)
    }

    /// Trapezoid weight of node `i` times the density there.
    fn mass(&self, i: usize) -> f64 {
        let w = if i == 0 || i + 1 == self.len() { 0.5 } else { 1.0 };
        w * self.density[i] * self.dx
    }

    pub fn total_mass(&self) -> f64 {
        crate::numeric::pairwise_sum(&(0..self.len()).map(|i| self.mass(i)).collect::<Vec<_>>())
    }

    /// Returns a copy rescaled to unit mass.
    pub fn normalized(&self) -> Result<Self> {
        let m = self.total_mass();
        if !(m > 0.0) {
            return Err(Error::InvalidParameter("distribution has zero mass".into()));
        }
        Ok(Self {
            x0: self.x0,
            dx: self.dx,
            density: self.density.iter().map(|d| d / m).collect(),
        })
    }

    pub fn mean(&self) -> f64 {
        let m = self.total_mass();
        (0..self.len()).map(|i| self.x(i) * self.mass(i)).sum::<f64>() / m
    }

    pub fn variance(&self) -> f64 {
        let m = self.total_mass();
        let mu = self.mean();
        (0..self.len())
            .map(|i| (self.x(i) - mu).powi(2) * self.mass(i))
            .sum::<f64>()
            / m
    }

    /// Linear interpolation of the density; zero outside the nodes.
    pub fn density_at(&self, x: f64) -> f64 {
        let t = (x - self.x0) / self.dx;
        if t < 0.0 || t > (self.len() - 1) as f64 {
            return 0.0;
        }
        let i = (t.floor() as usize).min(self.len() - 2);
        let f = t - i as f64;
        self.density[i] * (1.0 - f) + self.density[i + 1] * f
    }

    /// Cumulative table `F(x_i)` of the interpolant.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        let mut acc = 0.0;
        out.push(0.0);
        for i in 0..self.len() - 1 {
            acc += 0.5 * (self.density[i] + self.density[i + 1]) * self.dx;
            out.push(acc);
        }
        out
    }

    /// Exact integral of the interpolant up to `x`, given its cumulative table.
    pub fn cdf_with(&self, cumulative: &[f64], x: f64) -> f64 {
        let t = (x - self.x0) / self.dx;
        if t <= 0.0 {
            return 0.0;
        }
        let last = self.len() - 1;
        if t >= last as f64 {
            return cumulative[last];
        }
        let i = t.floor() as usize;
        let f = t - i as f64;
        let a = self.density[i];
        let b = self.density[i + 1];
        cumulative[i] + self.dx * (a * f + 0.5 * (b - a) * f * f)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.cdf_with(&self.cumulative(), x)
    }

    /// Inverse of the interpolant's CDF for `u` in `[0, total]`.
    pub fn quantile_with(&self, cumulative: &[f64], u: f64) -> f64 {
        let last = self.len() - 1;
        if u <= 0.0 {
            return self.x0;
        }
        if u >= cumulative[last] {
            return self.x(last);
        }
        let i = cumulative.partition_point(|&c| c <= u).saturating_sub(1).min(last - 1);
        let target = (u - cumulative[i]) / self.dx;
        let a = self.density[i];
        let b = self.density[i + 1];
        let slope = b - a;
        let f = if slope.abs() < 1e-12 * (a.abs() + b.abs()).max(1e-300) {
            if a > 0.0 {
                target / a
            } else {
                0.5
            }
        } else {
            let disc = (a * a + 2.0 * slope * target).max(0.0);
            (disc.sqrt() - a) / slope
        };
        self.x(i) + f.clamp(0.0, 1.0) * self.dx
    }

    /// Maps `x ↦ scale·x`; a negative scale reflects the nodes.
    pub fn rescaled(&self, scale: f64) -> Result<Self> {
        if scale == 0.0 {
            return Err(Error::InvalidParameter("zero scale".into()));
        }
        let s = scale.abs();
        let mut density: Vec<f64> = self.density.iter().map(|d| d / s).collect();
        let x0 = if scale > 0.0 {
            self.x0 * scale
        } else {
            density.reverse();
            self.x_max() * scale
        };
        Self::new(x0, self.dx * s, density)
    }

    pub fn write_csv<W: Write>(&self, mut w: W, column: &str) -> io::Result<()> {
        writeln!(w, "{column},density")?;
        for i in 0..self.len() {
            writeln!(w, "{:.12e},{:.12e}", self.x(i), self.density[i])?;
        }
        Ok(())
    }
}

/// Probability masses over labelled outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    pub labels: Vec<f64>,
    pub probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(labels: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if labels.len() != probs.len() || labels.is_empty() {
            return Err(Error::InvalidParameter("labels and probabilities must align".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < -1e-12) {
            return Err(Error::InvalidParameter("probabilities must be nonnegative".into()));
        }
        Ok(Self { labels, probs })
    }

    pub fn total(&self) -> f64 {
        crate::numeric::pairwise_sum(&self.probs)
    }

    pub fn mean(&self) -> f64 {
        self.labels.iter().zip(&self.probs).map(|(x, p)| x * p).sum::<f64>() / self.total()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.labels
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| (x - mu).powi(2) * p)
            .sum::<f64>()
            / self.total()
    }

    pub fn write_csv<W: Write>(&self, mut w: W, column: &str) -> io::Result<()> {
        writeln!(w, "{column},probability")?;
        for (x, p) in self.labels.iter().zip(&self.probs) {
            writeln!(w, "{x},{p:.12e}")?;
        }
        Ok(())
    }
}
