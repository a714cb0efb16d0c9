use num_complex::Complex64;

use super::SpectralField;
use crate::error::{Error, Result};

/// Largest `|û(0)|` accepted as mean-zero.
pub const MEAN_ZERO_TOLERANCE: f64 = 1e-10;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Fourier-mode selectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    /// `k ≥ 1`
    Positive,
    /// `k ≤ -1`
    Negative,
    /// `k = 0`
    Mean,
    /// `|k| < N`
    Below(usize),
    /// `k ≥ N`
    AtOrAbove(usize),
}

impl Projection {
    fn keeps(self, k: i64) -> bool {
        match self {
            Projection::Positive => k >= 1,
            Projection::Negative => k <= -1,
            Projection::Mean => k == 0,
            Projection::Below(n) => k.unsigned_abs() < n as u64,
            Projection::AtOrAbove(n) => k >= n as i64,
        }
    }
}

impl SpectralField {
    /// Hilbert transform, multiplier `-i sgn(k)`.
    pub fn hilbert_transform(&self) -> Self {
        self.map_coeffs(|k, c| -I * (k.signum() as f64) * c)
    }

    /// `∂ₓ`, multiplier `ik`.
    pub fn derivative(&self) -> Self {
        self.map_coeffs(|k, c| I * k as f64 * c)
    }

    /// `∂ₓ⁻¹` on mean-zero fields, multiplier `1/(ik)`.
    pub fn antiderivative(&self) -> Result<Self> {
        self.require_mean_zero()?;
        Ok(self.map_coeffs(|k, c| {
            if k == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                c / (I * k as f64)
            }
        }))
    }

    pub fn require_mean_zero(&self) -> Result<()> {
        let mean = self.coeff(0).norm();
        if mean > MEAN_ZERO_TOLERANCE {
            Err(Error::NotMeanZero { mean })
        } else {
            Ok(())
        }
    }

    pub fn project(&self, selector: Projection) -> Self {
        self.map_coeffs(|k, c| {
            if selector.keeps(k) {
                c
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Coefficients of `f·g` for `|k| ≤ K`, exact for band-limited inputs.
    pub fn dealiased_product(&self, other: &Self) -> Result<Self> {
        if self.grid() != other.grid() {
            return Err(Error::GridMismatch);
        }
        let grid = self.grid();
        let a = self.complex_values();
        let b = other.complex_values();
        let prod = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        let mut out = SpectralField::from_coeffs(grid, grid.analyze(prod))?;
        if self.is_real(0.0) && other.is_real(0.0) {
            out.symmetrize();
        }
        Ok(out)
    }

    /// `x ↦ f(x - offset)`.
    pub fn galilean_shift(&self, offset: f64) -> Self {
        self.map_coeffs(|k, c| c * Complex64::from_polar(1.0, -(k as f64) * offset))
    }

    /// Gauge variable `w = ∂ₓ P₊ exp(iF/2)` with `F = ∂ₓ⁻¹(u + ζ)`.
    ///
    /// The exponential is evaluated on the collocation grid and truncated
    /// back to `|k| ≤ K`, so this is a diagnostic, not an exact transform.
    pub fn gauge_transform(&self, zeta: &Self) -> Result<Self> {
        if self.grid() != zeta.grid() {
            return Err(Error::GridMismatch);
        }
        let primitive = (self + zeta).antiderivative()?;
        let grid = self.grid();
        let phase = primitive
            .complex_values()
            .into_iter()
            .map(|f| (I * f.re * 0.5).exp())
            .collect();
        let exp = SpectralField::from_coeffs(grid, grid.analyze(phase))?;
        Ok(exp.project(Projection::Positive).derivative())
    }
}
