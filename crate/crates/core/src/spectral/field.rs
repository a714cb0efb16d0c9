use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{SobolevIndex, TorusGrid};
use crate::error::{Error, Result};

/// Function on the torus held as Fourier coefficients `û(k)`, `|k| ≤ K`.
///
/// Real-valued functions satisfy `û(-k) = conj(û(k))`. Projections onto
/// positive or negative frequencies break that symmetry, so the type does
/// not enforce it; [`SpectralField::is_real`] checks it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FieldRecord", into = "FieldRecord")]
pub struct SpectralField {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

impl SpectralField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            coeffs: vec![ZERO; grid.n_modes()],
        }
    }

    /// Build from coefficients ordered `k = -K..=K`.
    pub fn from_coeffs(grid: TorusGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n_modes() {
            return Err(Error::InvalidGrid(format!(
                "expected {} coefficients, got {}",
                grid.n_modes(),
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    /// Band-limited interpolant of `f` sampled on the collocation nodes.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid
            .nodes()
            .into_iter()
            .map(|x| Complex64::new(f(x), 0.0))
            .collect();
        let mut field = Self {
            grid,
            coeffs: grid.analyze(values),
        };
        field.symmetrize();
        field
    }

    /// `amp · sin(kx)`.
    pub fn sin(grid: TorusGrid, k: usize, amp: f64) -> Self {
        Self::trig(grid, &[(k, amp, 0.0)])
    }

    /// `amp · cos(kx)`.
    pub fn cos(grid: TorusGrid, k: usize, amp: f64) -> Self {
        Self::trig(grid, &[(k, 0.0, amp)])
    }

    /// Sum of `a sin(kx) + b cos(kx)` over `(k, a, b)` terms. `k = 0` sets the
    /// mean to `b`.
    pub fn trig(grid: TorusGrid, terms: &[(usize, f64, f64)]) -> Self {
        let mut field = Self::zeros(grid);
        for &(k, a, b) in terms {
            assert!(
                k <= grid.cutoff(),
                "mode {k} above cutoff {}",
                grid.cutoff()
            );
            if k == 0 {
                field.coeffs[grid.index(0)] += b;
                continue;
            }
            let c = Complex64::new(b / 2.0, -a / 2.0);
            field.coeffs[grid.index(k as i64)] += c;
            field.coeffs[grid.index(-(k as i64))] += c.conj();
        }
        field
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn cutoff(&self) -> usize {
        self.grid.cutoff()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient `û(k)`; zero outside the retained band.
    pub fn coeff(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.grid.cutoff() {
            ZERO
        } else {
            self.coeffs[self.grid.index(k)]
        }
    }

    /// Mean value `û(0)` (real part).
    pub fn mean(&self) -> f64 {
        self.coeff(0).re
    }

    /// Largest `|k|` with a coefficient above `tol`; 0 for constants.
    pub fn max_mode(&self, tol: f64) -> usize {
        self.grid
            .wavenumbers()
            .filter(|&k| self.coeff(k).norm() > tol)
            .map(|k| k.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Zero every coefficient with modulus at most `tol`.
    pub fn chop(&mut self, tol: f64) {
        for c in self.coeffs.iter_mut() {
            if c.norm() <= tol {
                *c = ZERO;
            }
        }
    }

    pub fn is_real(&self, tol: f64) -> bool {
        let k_max = self.grid.cutoff() as i64;
        (0..=k_max).all(|k| (self.coeff(k) - self.coeff(-k).conj()).norm() <= tol)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Replace `û(k)`, `û(-k)` by their Hermitian average, removing the
    /// imaginary round-off of real-valued data.
    pub fn symmetrize(&mut self) {
        let k_max = self.grid.cutoff() as i64;
        let i0 = self.grid.index(0);
        self.coeffs[i0] = Complex64::new(self.coeffs[i0].re, 0.0);
        for k in 1..=k_max {
            let (ip, im) = (self.grid.index(k), self.grid.index(-k));
            let avg = (self.coeffs[ip] + self.coeffs[im].conj()) * 0.5;
            self.coeffs[ip] = avg;
            self.coeffs[im] = avg.conj();
        }
    }

    /// Values on the collocation nodes. Real part only; use
    /// [`SpectralField::complex_values`] for non-real fields.
    pub fn values(&self) -> Vec<f64> {
        self.complex_values().into_iter().map(|v| v.re).collect()
    }

    pub fn complex_values(&self) -> Vec<Complex64> {
        self.grid.synthesize(&self.coeffs)
    }

    /// Pointwise evaluation from the Fourier series.
    pub fn eval(&self, x: f64) -> Complex64 {
        self.grid
            .wavenumbers()
            .zip(&self.coeffs)
            .map(|(k, c)| c * Complex64::from_polar(1.0, k as f64 * x))
            .sum()
    }

    /// `max_x |f(x)|` over the collocation nodes.
    pub fn max_abs(&self) -> f64 {
        self.complex_values()
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    /// `sqrt(∫₀^{2π} |f|² dx)`.
    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(SobolevIndex::L2)
    }

    /// `sqrt(2π Σ_k (1+k²)^s |û(k)|²)`.
    pub fn sobolev_norm(&self, s: SobolevIndex) -> f64 {
        let sum: f64 = self
            .grid
            .wavenumbers()
            .zip(&self.coeffs)
            .map(|(k, c)| s.weight_sq(k) * c.norm_sqr())
            .sum();
        (2.0 * PI * sum).sqrt()
    }

    /// Real `L²(0, 2π)` inner product `∫ f ḡ dx` (real part).
    pub fn inner(&self, other: &Self) -> f64 {
        let sum: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a * b.conj()).re)
            .sum();
        2.0 * PI * sum
    }

    /// `∫₀^{2π} f² dx` for real fields.
    pub fn momentum(&self) -> f64 {
        self.inner(self)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (self - other).l2_norm()
    }

    /// Coordinates `[a₁, b₁, a₂, b₂, …]` on the basis `{sin kx, cos kx}`,
    /// `1 ≤ k ≤ K`. The mean is dropped.
    pub fn trig_coords(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.grid.cutoff());
        for k in 1..=self.grid.cutoff() as i64 {
            let c = self.coeff(k);
            // û(k) = (b - i a)/2
            out.push(-2.0 * c.im);
            out.push(2.0 * c.re);
        }
        out
    }

    /// Inverse of [`SpectralField::trig_coords`].
    pub fn from_trig_coords(grid: TorusGrid, coords: &[f64]) -> Self {
        assert_eq!(
            coords.len(),
            2 * grid.cutoff(),
            "coordinate length mismatch"
        );
        let terms: Vec<(usize, f64, f64)> = coords
            .chunks_exact(2)
            .enumerate()
            .map(|(i, ab)| (i + 1, ab[0], ab[1]))
            .collect();
        Self::trig(grid, &terms)
    }

    /// Same function on a grid with a different cutoff. Modes above the new
    /// cutoff are dropped.
    pub fn regrid(&self, grid: TorusGrid) -> Self {
        let mut out = Self::zeros(grid);
        for k in grid.wavenumbers() {
            out.coeffs[grid.index(k)] = self.coeff(k);
        }
        out
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    /// `self + a · other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        Self {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| x + y * a)
                .collect(),
        }
    }

    pub(crate) fn map_coeffs(&self, f: impl Fn(i64, Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self
                .grid
                .wavenumbers()
                .zip(&self.coeffs)
                .map(|(k, &c)| f(k, c))
                .collect(),
        }
    }
}

impl Add<&SpectralField> for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(1.0, rhs)
    }
}

impl Sub<&SpectralField> for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(-1.0, rhs)
    }
}

impl Add for SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: SpectralField) -> SpectralField {
        &self + &rhs
    }
}

impl Sub for SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: SpectralField) -> SpectralField {
        &self - &rhs
    }
}

impl AddAssign<&SpectralField> for SpectralField {
    fn add_assign(&mut self, rhs: &SpectralField) {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl SubAssign<&SpectralField> for SpectralField {
    fn sub_assign(&mut self, rhs: &SpectralField) {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scale(-1.0)
    }
}

impl Neg for SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, a: f64) -> SpectralField {
        self.scale(a)
    }
}

impl Mul<f64> for SpectralField {
    type Output = SpectralField;
    fn mul(self, a: f64) -> SpectralField {
        self.scale(a)
    }
}

/// JSON form of a field: grid header plus `[k, re, im]` triples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldRecord {
    pub cutoff: usize,
    pub n_points: usize,
    pub coeffs: Vec<(i64, f64, f64)>,
}

impl From<SpectralField> for FieldRecord {
    fn from(f: SpectralField) -> Self {
        FieldRecord {
            cutoff: f.grid.cutoff(),
            n_points: f.grid.n_points(),
            coeffs: f
                .grid
                .wavenumbers()
                .zip(&f.coeffs)
                .map(|(k, c)| (k, c.re, c.im))
                .collect(),
        }
    }
}

impl TryFrom<FieldRecord> for SpectralField {
    type Error = Error;

    fn try_from(rec: FieldRecord) -> Result<Self> {
        let grid = TorusGrid::with_points(rec.cutoff, rec.n_points)?;
        let mut field = SpectralField::zeros(grid);
        for (k, re, im) in rec.coeffs {
            if k.unsigned_abs() as usize > grid.cutoff() {
                return Err(Error::InvalidGrid(format!(
                    "coefficient for k = {k} above cutoff {}",
                    grid.cutoff()
                )));
            }
            field.coeffs[grid.index(k)] = Complex64::new(re, im);
        }
        Ok(field)
    }
}
