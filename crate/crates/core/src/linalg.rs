//! Small dense helpers shared by the filter, the mixture and the HMM.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, Matrix2, SMatrix, SVector, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;

/// Eigenvalue floor applied to every learned covariance, in px².
pub const COV_FLOOR: f64 = 1e-6;

/// `log Σ exp(xs)`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Log-density of `N(residual | 0, cov)`. `None` when `cov` is not SPD.
pub fn log_normal<const D: usize>(residual: &SVector<f64, D>, cov: &SMatrix<f64, D, D>) -> Option<f64> {
    let chol = Cholesky::new(*cov)?;
    let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let z = chol.l().solve_lower_triangular(residual)?;
    let value = -0.5 * (D as f64 * (2.0 * PI).ln() + log_det + z.norm_squared());
    value.is_finite().then_some(value)
}

/// Precomputed Gaussian for repeated evaluation.
#[derive(Debug, Clone)]
pub struct GaussianEval<const D: usize> {
    mean: SVector<f64, D>,
    chol_l: SMatrix<f64, D, D>,
    norm: f64,
}

impl<const D: usize> GaussianEval<D> {
    pub fn new(mean: SVector<f64, D>, cov: &SMatrix<f64, D, D>) -> Option<Self> {
        let chol = Cholesky::new(*cov)?;
        let l = chol.l();
        let log_det: f64 = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Some(Self {
            mean,
            chol_l: l,
            norm: -0.5 * (D as f64 * (2.0 * PI).ln() + log_det),
        })
    }

    pub fn log_pdf(&self, x: &SVector<f64, D>) -> f64 {
        let d = x - self.mean;
        match self.chol_l.solve_lower_triangular(&d) {
            Some(z) => self.norm - 0.5 * z.norm_squared(),
            None => f64::NEG_INFINITY,
        }
    }
}

pub fn symmetrize<const D: usize>(m: &SMatrix<f64, D, D>) -> SMatrix<f64, D, D> {
    (m + m.transpose()) * 0.5
}

pub fn is_spd<const D: usize>(m: &SMatrix<f64, D, D>) -> bool {
    let scale = m.amax().max(1.0);
    m.iter().all(|v| v.is_finite())
        && (m - m.transpose()).amax() <= 1e-9 * scale
        && Cholesky::new(symmetrize(m)).is_some()
}

/// Symmetrize and clamp eigenvalues from below.
pub fn floor_cov<const D: usize>(m: &SMatrix<f64, D, D>, floor: f64) -> SMatrix<f64, D, D> {
    let sym = symmetrize(m);
    let eig = DMatrix::from_column_slice(D, D, sym.as_slice()).symmetric_eigen();
    if eig.eigenvalues.iter().all(|&l| l >= floor) {
        return sym;
    }
    let clamped = eig.eigenvalues.map(|l| l.max(floor));
    let v = &eig.eigenvectors;
    let rebuilt = v * DMatrix::from_diagonal(&clamped) * v.transpose();
    symmetrize(&SMatrix::<f64, D, D>::from_column_slice(rebuilt.as_slice()))
}

/// Lower factor of a 2×2 positive semidefinite matrix; zero pivots are allowed.
pub fn psd_factor2(cov: &Matrix2<f64>) -> Matrix2<f64> {
    let l11 = cov[(0, 0)].max(0.0).sqrt();
    let l21 = if l11 > 0.0 { cov[(1, 0)] / l11 } else { 0.0 };
    let l22 = (cov[(1, 1)] - l21 * l21).max(0.0).sqrt();
    Matrix2::new(l11, 0.0, l21, l22)
}

/// Draw from `N(mean, cov)` with `cov` positive semidefinite.
pub fn sample_gaussian2<R: Rng + ?Sized>(mean: &Vector2<f64>, cov: &Matrix2<f64>, rng: &mut R) -> Vector2<f64> {
    let z = Vector2::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal));
    mean + psd_factor2(cov) * z
}
