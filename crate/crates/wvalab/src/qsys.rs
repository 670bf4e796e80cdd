//! Finite-dimensional system states, observables and weak values.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Overlap magnitude below which a pre/post pair counts as orthogonal.
pub const ORTHOGONALITY_THRESHOLD: f64 = 1e-12;

const NORM_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-12;

/// Normalized pure state of a d-level system, d ≥ 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    amplitudes: Vec<Complex64>,
}

impl SystemState {
    /// Wraps amplitudes that are already normalized.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::InvalidState(format!(
                "dimension {} < 2",
                amplitudes.len()
            )));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("norm {norm} differs from 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NullVector);
        }
        Self::new(amplitudes.into_iter().map(|a| a / norm).collect())
    }

    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::InvalidParameter(format!("basis index {k} >= {dim}")));
        }
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        v[k] = Complex64::new(1.0, 0.0);
        Self::new(v)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn to_vector(&self) -> DVector<Complex64> {
        DVector::from_column_slice(&self.amplitudes)
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &SystemState) -> Complex64 {
        crate::numeric::inner(&self.amplitudes, &other.amplitudes)
    }

    pub fn with_global_phase(&self, phase: f64) -> SystemState {
        let f = Complex64::from_polar(1.0, phase);
        SystemState {
            amplitudes: self.amplitudes.iter().map(|a| a * f).collect(),
        }
    }

    pub fn density(&self) -> DensityState {
        let v = self.to_vector();
        DensityState {
            matrix: &v * v.adjoint(),
        }
    }

    pub fn projector(&self) -> Observable {
        Observable {
            matrix: self.density().matrix,
        }
    }

    /// Orthonormal basis of the complement of this state (d − 1 vectors).
    pub fn orthogonal_complement(&self) -> Vec<SystemState> {
        let d = self.dim();
        let me = self.to_vector();
        let mut basis: Vec<DVector<Complex64>> = vec![me];
        let mut out = Vec::with_capacity(d - 1);
        for k in 0..d {
            let mut v = DVector::from_element(d, Complex64::new(0.0, 0.0));
            v[k] = Complex64::new(1.0, 0.0);
            for _ in 0..2 {
                for b in &basis {
                    let c = b.dotc(&v);
                    v -= b * c;
                }
            }
            let n = v.norm();
            if n > 1e-8 {
                v /= Complex64::new(n, 0.0);
                basis.push(v.clone());
                out.push(SystemState {
                    amplitudes: v.iter().copied().collect(),
                });
            }
            if out.len() == d - 1 {
                break;
            }
        }
        out
    }
}

/// Qubit state `cos(θ/2)|0⟩ + sin(θ/2)e^{iφ}|1⟩`.
pub fn bloch_state(theta: f64, phi: f64) -> SystemState {
    let theta = theta.rem_euclid(2.0 * std::f64::consts::PI);
    let phi = phi.rem_euclid(2.0 * std::f64::consts::PI);
    SystemState {
        amplitudes: vec![
            Complex64::new((theta / 2.0).cos(), 0.0),
            Complex64::from_polar((theta / 2.0).sin(), phi),
        ],
    }
}

/// Density matrix, validated once on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    matrix: DMatrix<Complex64>,
}

impl DensityState {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() < 2 {
            return Err(Error::InvalidState("density matrix must be square, d ≥ 2".into()));
        }
        if hermitian_defect(&matrix) > HERMITIAN_TOL {
            return Err(Error::InvalidState("density matrix is not Hermitian".into()));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let eig = matrix.clone().symmetric_eigen();
        if let Some(min) = eig.eigenvalues.iter().copied().reduce(f64::min) {
            if min < -1e-10 {
                return Err(Error::InvalidState(format!("negative eigenvalue {min}")));
            }
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn expectation(&self, a: &Observable) -> f64 {
        (&self.matrix * &a.matrix).trace().re
    }
}

/// Hermitian operator on the system space.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    matrix: DMatrix<Complex64>,
}

impl Observable {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidOperator("matrix must be square".into()));
        }
        if hermitian_defect(&matrix) > HERMITIAN_TOL {
            return Err(Error::InvalidOperator("matrix is not Hermitian".into()));
        }
        Ok(Self { matrix })
    }

    /// Builds a Hermitian operator from real-and-imaginary row-major entries.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidOperator("rows must form a square matrix".into()));
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn pauli_x() -> Self {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        Self {
            matrix: DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
        }
    }

    pub fn pauli_y() -> Self {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        Self {
            matrix: DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
        }
    }

    pub fn pauli_z() -> Self {
        Self::diagonal(&[1.0, -1.0])
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let d = values.len();
        Self {
            matrix: DMatrix::from_fn(d, d, |i, j| {
                if i == j {
                    Complex64::new(values[i], 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            matrix: &self.matrix * Complex64::new(factor, 0.0),
        }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, state: &SystemState) -> DVector<Complex64> {
        &self.matrix * state.to_vector()
    }

    pub fn power(&self, n: u32) -> DMatrix<Complex64> {
        let d = self.dim();
        let mut out = DMatrix::identity(d, d);
        for _ in 0..n {
            out = &out * &self.matrix;
        }
        out
    }

    /// `⟨ψ|A|ψ⟩`.
    pub fn expectation(&self, state: &SystemState) -> f64 {
        state.to_vector().dotc(&self.apply(state)).re
    }

    pub fn variance(&self, state: &SystemState) -> f64 {
        let v = self.apply(state);
        let second = v.norm_squared();
        let first = self.expectation(state);
        (second - first * first).max(0.0)
    }

    /// Spectral decomposition grouped by eigenvalue: `(a_k, P_k)` with `Σ P_k = I`.
    pub fn spectral_projectors(&self) -> Vec<(f64, DMatrix<Complex64>)> {
        let eig = self.matrix.clone().symmetric_eigen();
        let d = self.dim();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let scale = eig.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
        for idx in order {
            let val = eig.eigenvalues[idx];
            match groups.last_mut() {
                Some((v, members)) if (val - *v).abs() <= 1e-9 * scale => members.push(idx),
                _ => groups.push((val, vec![idx])),
            }
        }
        groups
            .into_iter()
            .map(|(_, members)| {
                let mut p = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
                let mut mean = 0.0;
                for &m in &members {
                    let col = eig.eigenvectors.column(m);
                    p += &col * col.adjoint();
                    mean += eig.eigenvalues[m];
                }
                (mean / members.len() as f64, p)
            })
            .collect()
    }
}

fn hermitian_defect(m: &DMatrix<Complex64>) -> f64 {
    let scale = m.iter().fold(1.0f64, |acc, v| acc.max(v.norm()));
    (m - m.adjoint()).iter().fold(0.0f64, |acc, v| acc.max(v.norm())) / scale
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        Err(Error::DimensionMismatch { expected, found })
    } else {
        Ok(())
    }
}

/// `⟨post|A|pre⟩ / ⟨post|pre⟩`.
pub fn weak_value(pre: &SystemState, post: &SystemState, a: &Observable) -> Result<Complex64> {
    check_dims(pre.dim(), post.dim())?;
    check_dims(pre.dim(), a.dim())?;
    let overlap = post.overlap(pre);
    if overlap.norm() <= ORTHOGONALITY_THRESHOLD {
        return Err(Error::OrthogonalSelection {
            overlap: overlap.norm(),
        });
    }
    let num = post.to_vector().dotc(&a.apply(pre));
    Ok(num / overlap)
}

/// `Tr(Π A^m ρ A^l) / Tr(Π ρ)`.
pub fn high_order_weak_value(
    rho: &DensityState,
    post_projector: &Observable,
    a: &Observable,
    m: u32,
    l: u32,
) -> Result<Complex64> {
    check_dims(rho.dim(), post_projector.dim())?;
    check_dims(rho.dim(), a.dim())?;
    let denom = (post_projector.matrix() * rho.matrix()).trace();
    if denom.norm() <= ORTHOGONALITY_THRESHOLD {
        return Err(Error::OrthogonalSelection {
            overlap: denom.norm(),
        });
    }
    let num = (post_projector.matrix() * a.power(m) * rho.matrix() * a.power(l)).trace();
    Ok(num / denom)
}

/// `Tr(Π A^{m+1} ρ A^{l+1}) / [(m+1)(l+1) Tr(Π A ρ A)]` for strictly orthogonal selections.
pub fn orthogonal_weak_value(
    rho: &DensityState,
    post_projector: &Observable,
    a: &Observable,
    m: u32,
    l: u32,
) -> Result<Complex64> {
    check_dims(rho.dim(), post_projector.dim())?;
    check_dims(rho.dim(), a.dim())?;
    let overlap = (post_projector.matrix() * rho.matrix()).trace().norm();
    if overlap > ORTHOGONALITY_THRESHOLD {
        return Err(Error::NotOrthogonal { overlap });
    }
    let am = a.matrix();
    let denom = (post_projector.matrix() * am * rho.matrix() * am).trace();
    if denom.norm() <= ORTHOGONALITY_THRESHOLD {
        return Err(Error::DegenerateDenominator("Tr(Π A ρ A) = 0".into()));
    }
    let num = (post_projector.matrix() * a.power(m + 1) * rho.matrix() * a.power(l + 1)).trace();
    Ok(num / (denom * ((m + 1) * (l + 1)) as f64))
}

/// Post-selection `A|pre⟩ / ‖A|pre⟩‖` that maximizes the post-selected QFI in the weak regime.
pub fn optimal_postselection(pre: &SystemState, a: &Observable) -> Result<SystemState> {
    check_dims(pre.dim(), a.dim())?;
    let v = a.apply(pre);
    if v.norm() <= 1e-14 {
        return Err(Error::NullVector);
    }
    SystemState::normalized(v.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn bloch_examples() {
        let s = bloch_state(0.0, 0.0);
        assert!((s.amplitudes()[0] - c(1.0, 0.0)).norm() < 1e-15);
        let s = bloch_state(PI / 2.0, 0.0);
        assert!((s.amplitudes()[1] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        let s = bloch_state(PI / 2.0, PI / 2.0);
        assert!((s.amplitudes()[1] - c(0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
    }

    #[test]
    fn real_weak_value_of_two_hundred() {
        // cot(0.005) ≈ 200 when the post-selection is tilted by 0.01 rad.
        let pre = bloch_state(PI / 2.0, 0.0);
        let post = bloch_state(-PI / 2.0 + 0.01, 0.0);
        let w = weak_value(&pre, &post, &Observable::pauli_z()).unwrap();
        let expected = 1.0 / (0.005f64).tan();
        assert!((w.re - expected).abs() < 1e-9, "{w}");
        assert!(w.im.abs() < 1e-9);
        assert!((w.re - 200.0).abs() < 0.01);
    }

    #[test]
    fn imaginary_weak_value_of_minus_two_hundred_i() {
        let pre = bloch_state(PI / 2.0, 0.0);
        let post = bloch_state(-PI / 2.0, 0.01);
        let w = weak_value(&pre, &post, &Observable::pauli_z()).unwrap();
        assert!(w.re.abs() < 1e-9);
        assert!((w.im + 1.0 / (0.005f64).tan()).abs() < 1e-9, "{w}");
    }

    #[test]
    fn orthogonal_pair_is_rejected() {
        let pre = bloch_state(0.0, 0.0);
        let post = bloch_state(PI, 0.0);
        assert!(matches!(
            weak_value(&pre, &post, &Observable::pauli_x()),
            Err(Error::OrthogonalSelection { .. })
        ));
    }

    #[test]
    fn orthogonal_weak_value_by_matrix_products() {
        let rho = SystemState::basis(2, 0).unwrap().density();
        let pi_f = SystemState::basis(2, 1).unwrap().projector();
        let x = Observable::pauli_x();
        assert!((orthogonal_weak_value(&rho, &pi_f, &x, 0, 0).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        // σ_x² = I, so the numerator Tr(Π σ_x² ρ σ_x) = ⟨1|ρ σ_x|1⟩ = 0.
        let v = orthogonal_weak_value(&rho, &pi_f, &x, 1, 0).unwrap();
        let direct = (pi_f.matrix() * x.power(2) * rho.matrix() * x.matrix()).trace()
            / (pi_f.matrix() * x.matrix() * rho.matrix() * x.matrix()).trace()
            / 2.0;
        assert!((v - direct).norm() < 1e-15);
        assert!(matches!(
            orthogonal_weak_value(&rho, &SystemState::basis(2, 0).unwrap().projector(), &x, 0, 0),
            Err(Error::NotOrthogonal { .. })
        ));
        assert!(matches!(
            orthogonal_weak_value(&rho, &pi_f, &Observable::pauli_z(), 0, 0),
            Err(Error::DegenerateDenominator(_))
        ));
    }

    #[test]
    fn optimal_postselection_examples() {
        let f = optimal_postselection(&SystemState::basis(2, 0).unwrap(), &Observable::pauli_x()).unwrap();
        assert!((f.amplitudes()[1] - c(1.0, 0.0)).norm() < 1e-15);
        let f = optimal_postselection(&bloch_state(PI / 2.0, 0.0), &Observable::pauli_z()).unwrap();
        assert!((f.amplitudes()[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((f.amplitudes()[1] + c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        let zero = Observable::diagonal(&[0.0, 1.0]);
        assert_eq!(
            optimal_postselection(&SystemState::basis(2, 0).unwrap(), &zero),
            Err(Error::NullVector)
        );
    }

    #[test]
    fn density_validation() {
        let bad = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), c(0.2, 0.0), c(0.5, 0.0)]);
        assert!(DensityState::new(bad).is_err());
        let neg = DMatrix::from_row_slice(2, 2, &[c(1.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
        assert!(DensityState::new(neg).is_err());
        let ok = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.0, 0.1), c(0.0, -0.1), c(0.5, 0.0)]);
        assert!(DensityState::new(ok).is_ok());
    }

    #[test]
    fn spectral_projectors_resolve_identity() {
        let a = Observable::diagonal(&[1.0, 1.0, -2.0]);
        let proj = a.spectral_projectors();
        assert_eq!(proj.len(), 2);
        let sum = proj.iter().fold(DMatrix::zeros(3, 3), |acc, (_, p)| acc + p);
        assert!((sum - DMatrix::<Complex64>::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn complement_is_orthonormal() {
        let s = SystemState::normalized(vec![c(1.0, 0.2), c(0.3, -0.4), c(0.0, 0.7)]).unwrap();
        let comp = s.orthogonal_complement();
        assert_eq!(comp.len(), 2);
        for v in &comp {
            assert!(v.overlap(&s).norm() < 1e-12);
        }
        assert!(comp[0].overlap(&comp[1]).norm() < 1e-12);
    }
}
