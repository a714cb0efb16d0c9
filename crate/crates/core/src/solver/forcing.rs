use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{SpectralField, TorusGrid};

/// One piece of a piecewise-constant forcing: the profile `η(x)` applied for
/// `duration` time units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcingSegment {
    pub duration: f64,
    pub profile: SpectralField,
}

/// Orthonormal temporal basis on `(0, T)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemporalBasis {
    /// `e₁ = 1/√T`, `e_j = √(2/T) cos((j-1)πt/T)` for `j ≥ 2`.
    Cosine,
}

impl TemporalBasis {
    /// `e_j(t)` for the 1-based index `j`.
    pub fn eval(self, j: usize, t: f64, period: f64) -> f64 {
        match self {
            TemporalBasis::Cosine => {
                if j == 1 {
                    1.0 / period.sqrt()
                } else {
                    (2.0 / period).sqrt() * ((j - 1) as f64 * PI * t / period).cos()
                }
            }
        }
    }

    /// `sup_t |e_j(t)|`.
    pub fn sup(self, j: usize, period: f64) -> f64 {
        match self {
            TemporalBasis::Cosine => {
                if j == 1 {
                    1.0 / period.sqrt()
                } else {
                    (2.0 / period).sqrt()
                }
            }
        }
    }
}

/// Time-dependent forcing `η(t, x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForcingInput {
    PiecewiseConstant {
        segments: Vec<ForcingSegment>,
    },
    /// `η(t,x) = (Σ_j c₁ⱼ e_j(t)) sin x + (Σ_j c₂ⱼ e_j(t)) cos x` on `(0, period)`.
    BasisSeries {
        period: f64,
        basis: TemporalBasis,
        sin_coeffs: Vec<f64>,
        cos_coeffs: Vec<f64>,
    },
}

impl ForcingInput {
    /// Zero forcing over `[0, duration]`.
    pub fn zero(grid: TorusGrid, duration: f64) -> Result<Self> {
        Self::piecewise(vec![ForcingSegment {
            duration,
            profile: SpectralField::zeros(grid),
        }])
    }

    /// A single constant profile over `[0, duration]`.
    pub fn constant(profile: SpectralField, duration: f64) -> Result<Self> {
        Self::piecewise(vec![ForcingSegment { duration, profile }])
    }

    pub fn piecewise(segments: Vec<ForcingSegment>) -> Result<Self> {
        let f = ForcingInput::PiecewiseConstant { segments };
        f.validate()?;
        Ok(f)
    }

    pub fn basis_series(
        period: f64,
        basis: TemporalBasis,
        sin_coeffs: Vec<f64>,
        cos_coeffs: Vec<f64>,
    ) -> Result<Self> {
        let f = ForcingInput::BasisSeries {
            period,
            basis,
            sin_coeffs,
            cos_coeffs,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ForcingInput::PiecewiseConstant { segments } => {
                if segments.is_empty() {
                    return Err(Error::InvalidForcing("no segments".into()));
                }
                for (i, seg) in segments.iter().enumerate() {
                    if !(seg.duration > 0.0 && seg.duration.is_finite()) {
                        return Err(Error::InvalidForcing(format!(
                            "segment {i}: duration {} must be positive",
                            seg.duration
                        )));
                    }
                    if seg.profile.require_mean_zero().is_err() || !seg.profile.is_real(1e-12) {
                        return Err(Error::InvalidForcing(format!(
                            "segment {i}: profile must be real and mean-zero"
                        )));
                    }
                }
                Ok(())
            }
            ForcingInput::BasisSeries {
                period,
                sin_coeffs,
                cos_coeffs,
                ..
            } => {
                if !(*period > 0.0 && period.is_finite()) {
                    return Err(Error::InvalidForcing(format!(
                        "period {period} must be positive"
                    )));
                }
                if sin_coeffs.len() != cos_coeffs.len() {
                    return Err(Error::InvalidForcing(
                        "channel coefficient arrays differ in length".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn duration(&self) -> f64 {
        match self {
            ForcingInput::PiecewiseConstant { segments } => {
                segments.iter().map(|s| s.duration).sum()
            }
            ForcingInput::BasisSeries { period, .. } => *period,
        }
    }

    /// Intervals on which the forcing is smooth, as `(start, end)` pairs.
    pub(crate) fn pieces(&self) -> Vec<(f64, f64)> {
        match self {
            ForcingInput::PiecewiseConstant { segments } => {
                let mut t = 0.0;
                segments
                    .iter()
                    .map(|s| {
                        let start = t;
                        t += s.duration;
                        (start, t)
                    })
                    .collect()
            }
            ForcingInput::BasisSeries { period, .. } => vec![(0.0, *period)],
        }
    }

    /// Upper bound on `sup_{t,x} |η|` over piece `i`.
    pub(crate) fn amplitude_bound(&self, piece: usize) -> f64 {
        match self {
            ForcingInput::PiecewiseConstant { segments } => segments[piece].profile.max_abs(),
            ForcingInput::BasisSeries {
                period,
                basis,
                sin_coeffs,
                cos_coeffs,
            } => sin_coeffs
                .iter()
                .zip(cos_coeffs)
                .enumerate()
                .map(|(i, (a, b))| (a.abs() + b.abs()) * basis.sup(i + 1, *period))
                .sum(),
        }
    }

    /// Add `η(t)` on piece `piece` into the coefficient buffer `out`.
    pub(crate) fn add_profile(&self, piece: usize, t: f64, grid: TorusGrid, out: &mut [Complex64]) {
        match self {
            ForcingInput::PiecewiseConstant { segments } => {
                for (o, c) in out.iter_mut().zip(segments[piece].profile.coeffs()) {
                    *o += c;
                }
            }
            ForcingInput::BasisSeries { .. } => {
                let (a, b) = self.channels_at(t);
                // a sin x + b cos x: û(±1) = (b ∓ i a) / 2
                let c = Complex64::new(b / 2.0, -a / 2.0);
                out[grid.index(1)] += c;
                out[grid.index(-1)] += c.conj();
            }
        }
    }

    /// `(η₁(t), η₂(t))` for basis-series forcing; zero otherwise.
    pub fn channels_at(&self, t: f64) -> (f64, f64) {
        match self {
            ForcingInput::BasisSeries {
                period,
                basis,
                sin_coeffs,
                cos_coeffs,
            } => {
                let mut a = 0.0;
                let mut b = 0.0;
                for (i, (ca, cb)) in sin_coeffs.iter().zip(cos_coeffs).enumerate() {
                    let e = basis.eval(i + 1, t, *period);
                    a += ca * e;
                    b += cb * e;
                }
                (a, b)
            }
            ForcingInput::PiecewiseConstant { .. } => (0.0, 0.0),
        }
    }

    /// The spatial profile `η(t, ·)` on `grid`.
    pub fn profile_at(&self, t: f64, grid: TorusGrid) -> SpectralField {
        let pieces = self.pieces();
        let piece = pieces
            .iter()
            .position(|&(_, end)| t < end)
            .unwrap_or(pieces.len() - 1);
        let mut field = SpectralField::zeros(grid);
        self.add_profile(piece, t, grid, field.coeffs_mut());
        field
    }
}
