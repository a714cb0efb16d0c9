//! Fourier representation of real functions on the torus `R / 2πZ`.
//!
//! A [`SpectralField`] stores the coefficients `û(k)` for `|k| ≤ K`, with the
//! normalization `û(k) = (1/2π) ∫ f(x) e^{-ikx} dx`, so that `û(0)` is the
//! mean of `f` and `f(x) = Σ_k û(k) e^{ikx}`. Quadratic products are evaluated
//! on a collocation grid of at least `2(2K+1)` points, which keeps every
//! retained coefficient of a product of two band-limited fields exact.

mod field;
mod ops;

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use field::{FieldRecord, SpectralField};
pub use ops::{Projection, MEAN_ZERO_TOLERANCE};

/// Spatial discretization: modes `|k| ≤ cutoff`, sampled at `n_points`
/// equispaced nodes `x_m = 2πm / n_points`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusGrid {
    cutoff: usize,
    n_points: usize,
}

impl TorusGrid {
    pub const MIN_CUTOFF: usize = 4;

    /// Grid with the smallest 5-smooth even point count that supports
    /// dealiased products.
    pub fn new(cutoff: usize) -> Result<Self> {
        let min = 2 * (2 * cutoff + 1);
        let n = (min..).step_by(2).find(|&n| is_smooth(n)).unwrap_or(min);
        Self::with_points(cutoff, n)
    }

    pub fn with_points(cutoff: usize, n_points: usize) -> Result<Self> {
        if cutoff < Self::MIN_CUTOFF {
            return Err(Error::InvalidGrid(format!(
                "mode cutoff {cutoff} below minimum {}",
                Self::MIN_CUTOFF
            )));
        }
        if !n_points.is_multiple_of(2) || n_points < 2 * (2 * cutoff + 1) {
            return Err(Error::InvalidGrid(format!(
                "n_points = {n_points} must be even and at least {}",
                2 * (2 * cutoff + 1)
            )));
        }
        Ok(Self { cutoff, n_points })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Number of stored coefficients, `2K + 1`.
    pub fn n_modes(&self) -> usize {
        2 * self.cutoff + 1
    }

    /// Wavenumbers `-K..=K` in storage order.
    pub fn wavenumbers(&self) -> impl Iterator<Item = i64> + Clone {
        let k = self.cutoff as i64;
        -k..=k
    }

    pub fn nodes(&self) -> Vec<f64> {
        let n = self.n_points as f64;
        (0..self.n_points)
            .map(|m| 2.0 * PI * m as f64 / n)
            .collect()
    }

    pub(crate) fn index(&self, k: i64) -> usize {
        (k + self.cutoff as i64) as usize
    }

    /// Evaluate coefficients on the collocation nodes.
    pub(crate) fn synthesize(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let n = self.n_points;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (k, c) in self.wavenumbers().zip(coeffs) {
            buf[k.rem_euclid(n as i64) as usize] = *c;
        }
        with_plan(n, |_, inv| inv.process(&mut buf));
        buf
    }

    /// Fourier coefficients `|k| ≤ K` of sampled values.
    pub(crate) fn analyze(&self, mut values: Vec<Complex64>) -> Vec<Complex64> {
        let n = self.n_points;
        debug_assert_eq!(values.len(), n);
        with_plan(n, |fwd, _| fwd.process(&mut values));
        let scale = 1.0 / n as f64;
        self.wavenumbers()
            .map(|k| values[k.rem_euclid(n as i64) as usize] * scale)
            .collect()
    }
}

fn is_smooth(mut n: usize) -> bool {
    for p in [2, 3, 5] {
        while n.is_multiple_of(p) {
            n /= p;
        }
    }
    n == 1
}

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

thread_local! {
    static PLANS: RefCell<HashMap<usize, PlanPair>> = RefCell::new(HashMap::new());
}

fn with_plan<R>(n: usize, f: impl FnOnce(&dyn Fft<f64>, &dyn Fft<f64>) -> R) -> R {
    let (fwd, inv) = PLANS.with(|plans| {
        plans
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
            })
            .clone()
    });
    f(fwd.as_ref(), inv.as_ref())
}

/// Sobolev regularity index `s ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SobolevIndex(f64);

impl SobolevIndex {
    pub const L2: SobolevIndex = SobolevIndex(0.0);
    pub const H1: SobolevIndex = SobolevIndex(1.0);

    pub fn new(s: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&s) {
            Ok(Self(s))
        } else {
            Err(Error::InvalidSobolevIndex(s))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Squared weight `(1 + k²)^s` of mode `k`.
    pub fn weight_sq(self, k: i64) -> f64 {
        (1.0 + (k * k) as f64).powf(self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_invariants() {
        let g = TorusGrid::new(64).unwrap();
        assert!(g.n_points() >= 2 * 129);
        assert_eq!(g.n_points() % 2, 0);
        assert!(TorusGrid::new(3).is_err());
        assert!(TorusGrid::with_points(8, 33).is_err());
        assert!(TorusGrid::with_points(8, 32).is_err());
        assert!(TorusGrid::with_points(8, 34).is_ok());
        let nodes = g.nodes();
        assert_eq!(nodes.len(), g.n_points());
        assert_eq!(nodes[0], 0.0);
    }

    #[test]
    fn sobolev_index_range() {
        assert!(SobolevIndex::new(-0.1).is_err());
        assert!(SobolevIndex::new(1.5).is_err());
        assert_eq!(SobolevIndex::new(0.5).unwrap().value(), 0.5);
    }

    #[test]
    fn synthesis_analysis_roundtrip() {
        let g = TorusGrid::new(16).unwrap();
        let coeffs: Vec<Complex64> = g
            .wavenumbers()
            .map(|k| Complex64::new((k as f64).sin(), (0.3 * k as f64).cos()))
            .collect();
        let back = g.analyze(g.synthesize(&coeffs));
        for (a, b) in coeffs.iter().zip(&back) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
