//! Statistically periodic noise and the period map it induces.
//!
//! Each period `[kT, (k+1)T)` receives a fresh forcing
//! `η_k(t) = Σ_l Σ_j b_j ξ_{l,k,j} e_j(t) φ_l(x)` with `φ₁ = sin x`,
//! `φ₂ = cos x`, so that `u_{k+1} = R_T(u_k, η_k)` is a Markov chain.

mod ensemble;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{ForcingInput, Solver, TemporalBasis};
use crate::spectral::{SobolevIndex, SpectralField};

pub use ensemble::{
    ensemble_hitting, ensemble_with, trial_seeds, wilson_interval, EnsembleSummary, HittingCurve,
};

/// Noise law: amplitudes `b_j = b₀/j`, `j = 1..=J`, over an orthonormal
/// temporal basis, with standard normal variates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    pub period: f64,
    pub truncation: usize,
    pub b0: f64,
    pub basis: TemporalBasis,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            period: 1.0,
            truncation: 16,
            b0: 0.5,
            basis: TemporalBasis::Cosine,
        }
    }
}

impl NoiseModel {
    pub fn new(period: f64, truncation: usize, b0: f64) -> Result<Self> {
        let model = Self {
            period,
            truncation,
            b0,
            basis: TemporalBasis::Cosine,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "period {} must be positive",
                self.period
            )));
        }
        if self.truncation == 0 {
            return Err(Error::InvalidModel("truncation must be at least 1".into()));
        }
        if !(self.b0 > 0.0 && self.b0.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "b0 = {} makes some amplitude vanish; all b_j must be nonzero",
                self.b0
            )));
        }
        Ok(())
    }

    /// `b_j` for the 1-based index `j`.
    pub fn amplitude(&self, j: usize) -> f64 {
        self.b0 / j as f64
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        (1..=self.truncation).map(|j| self.amplitude(j)).collect()
    }

    /// `Σ_{j≤J} b_j²`.
    pub fn amplitude_sum_sq(&self) -> f64 {
        self.amplitudes().iter().map(|b| b * b).sum()
    }

    /// `E ‖η_k‖²_{L²(0,T; L²)} = 2π Σ b_j²`: two channels, each of `L²` norm
    /// `√π` in space.
    pub fn expected_energy(&self) -> f64 {
        2.0 * PI * self.amplitude_sum_sq()
    }

    /// `max |⟨e_i, e_j⟩ - δ_ij|` under a midpoint rule on `(0, T)`.
    pub fn gram_defect(&self) -> f64 {
        let n = 8 * self.truncation;
        let h = self.period / n as f64;
        let nodes: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
        let mut worst: f64 = 0.0;
        for i in 1..=self.truncation {
            for j in i..=self.truncation {
                let g: f64 = nodes
                    .iter()
                    .map(|&t| {
                        self.basis.eval(i, t, self.period) * self.basis.eval(j, t, self.period)
                    })
                    .sum::<f64>()
                    * h;
                worst = worst.max((g - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        worst
    }
}

/// The variates `ξ_{l,k,j}` for period `k`: channel `l = 0` (sine) then
/// `l = 1` (cosine), `j = 1..=J` within each, drawn from stream `k` of a
/// ChaCha generator keyed by `seed`.
pub fn noise_variates(model: &NoiseModel, k: u64, seed: u64) -> [Vec<f64>; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    let mut draw = || -> Vec<f64> {
        (0..model.truncation)
            .map(|_| rng.sample(StandardNormal))
            .collect()
    };
    let sin = draw();
    let cos = draw();
    [sin, cos]
}

/// Forcing for period `k`: coefficients `c_{l,j} = b_j ξ_{l,k,j}`.
pub fn sample_noise(model: &NoiseModel, k: u64, seed: u64) -> Result<ForcingInput> {
    model.validate()?;
    let [xi_sin, xi_cos] = noise_variates(model, k, seed);
    let b = model.amplitudes();
    let scale = |xi: Vec<f64>| xi.iter().zip(&b).map(|(x, b)| x * b).collect();
    ForcingInput::basis_series(model.period, model.basis, scale(xi_sin), scale(xi_cos))
}

/// `‖η‖²_{L²(0,T; L²)}` of a basis-series forcing, from its coefficients.
pub fn noise_energy(forcing: &ForcingInput) -> f64 {
    match forcing {
        ForcingInput::BasisSeries {
            sin_coeffs,
            cos_coeffs,
            ..
        } => {
            PI * sin_coeffs
                .iter()
                .chain(cos_coeffs)
                .map(|c| c * c)
                .sum::<f64>()
        }
        ForcingInput::PiecewiseConstant { segments } => segments
            .iter()
            .map(|s| s.duration * s.profile.l2_norm().powi(2))
            .sum(),
    }
}

/// One period of the chain: `R_T(u_k, η_k)`.
pub fn markov_step(
    solver: &Solver,
    u: &SpectralField,
    model: &NoiseModel,
    k: u64,
    seed: u64,
) -> Result<SpectralField> {
    let forcing = sample_noise(model, k, seed)?;
    solver.final_state(u, &forcing, model.period)
}

/// Norm record of one chain and its first exit from the ball of radius `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStats {
    /// `‖u_k‖_s` for `k = 0..`, up to and including the hitting period.
    pub norms: Vec<f64>,
    /// `τ_M = min{k : ‖u_k‖_s > M}`; `None` if not reached.
    pub hitting_time: Option<usize>,
    /// Period at which the solve stopped on non-finite values, if it did.
    pub censored_at: Option<usize>,
    pub seed: u64,
    pub s: f64,
    pub threshold: f64,
}

impl ChainStats {
    /// True when `τ_M ≤ n`.
    pub fn hit_by(&self, n: usize) -> bool {
        self.hitting_time.is_some_and(|t| t <= n)
    }
}

/// Iterate the period map from `u0` until `‖u_k‖_s > threshold` or
/// `n_periods` periods have passed. `noise(k)` supplies period `k`'s forcing.
pub fn run_chain_with(
    solver: &Solver,
    u0: &SpectralField,
    n_periods: usize,
    s: SobolevIndex,
    threshold: f64,
    seed: u64,
    mut noise: impl FnMut(u64) -> Result<ForcingInput>,
) -> Result<ChainStats> {
    if n_periods == 0 {
        return Err(Error::InvalidConfig("n_periods must be at least 1".into()));
    }
    let mut stats = ChainStats {
        norms: vec![u0.sobolev_norm(s)],
        hitting_time: None,
        censored_at: None,
        seed,
        s: s.value(),
        threshold,
    };
    if stats.norms[0] > threshold {
        stats.hitting_time = Some(0);
        return Ok(stats);
    }
    let mut u = u0.clone();
    for k in 0..n_periods {
        let forcing = noise(k as u64)?;
        match solver.final_state(&u, &forcing, forcing.duration()) {
            Ok(next) => u = next,
            Err(Error::NonFinite { partial, .. }) => {
                // Blow-up at finite resolution: a hit only if the last finite
                // state had already left the ball.
                stats.censored_at = Some(k + 1);
                let last = partial.as_ref().map(|p| p.final_state().sobolev_norm(s));
                if last.is_some_and(|n| n > threshold) {
                    stats.norms.push(last.unwrap_or(f64::INFINITY));
                    stats.hitting_time = Some(k + 1);
                }
                return Ok(stats);
            }
            Err(e) => return Err(e),
        }
        let norm = u.sobolev_norm(s);
        stats.norms.push(norm);
        if norm > threshold {
            stats.hitting_time = Some(k + 1);
            break;
        }
    }
    Ok(stats)
}

/// [`run_chain_with`] driven by the keyed noise of `model`.
pub fn run_chain(
    solver: &Solver,
    u0: &SpectralField,
    model: &NoiseModel,
    n_periods: usize,
    s: SobolevIndex,
    threshold: f64,
    seed: u64,
) -> Result<ChainStats> {
    model.validate()?;
    run_chain_with(solver, u0, n_periods, s, threshold, seed, |k| {
        sample_noise(model, k, seed)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::IntegratorConfig;
    use crate::spectral::TorusGrid;

    fn grid() -> TorusGrid {
        TorusGrid::new(16).unwrap()
    }

    fn solver() -> Solver {
        Solver::new(IntegratorConfig::default()).unwrap()
    }

    #[test]
    fn model_invariants() {
        assert!(NoiseModel::new(1.0, 16, 0.0).is_err());
        assert!(NoiseModel::new(1.0, 0, 0.5).is_err());
        assert!(NoiseModel::new(-1.0, 4, 0.5).is_err());
        let m = NoiseModel::new(1.0, 16, 0.5).unwrap();
        assert!(m.amplitudes().iter().all(|&b| b != 0.0));
        assert!(m.gram_defect() < 1e-10);
        assert!(NoiseModel::new(2.5, 5, 1.0).unwrap().gram_defect() < 1e-10);
        let basel: f64 = (1..=16).map(|j| 0.25 / (j * j) as f64).sum();
        assert!((m.amplitude_sum_sq() - basel).abs() < 1e-15);
    }

    #[test]
    fn keyed_streams() {
        let m = NoiseModel::new(1.0, 8, 0.5).unwrap();
        assert_eq!(
            sample_noise(&m, 3, 11).unwrap(),
            sample_noise(&m, 3, 11).unwrap()
        );
        assert_ne!(noise_variates(&m, 3, 11), noise_variates(&m, 4, 11));
        assert_ne!(noise_variates(&m, 3, 11), noise_variates(&m, 3, 12));
    }

    #[test]
    fn variates_have_unit_second_moment() {
        let m = NoiseModel::new(1.0, 10, 1.0).unwrap();
        let mut sum = 0.0;
        let mut n = 0;
        for k in 0..5000 {
            for xi in noise_variates(&m, k, 2024).iter().flatten() {
                sum += xi * xi;
                n += 1;
            }
        }
        assert_eq!(n, 100_000);
        let moment = sum / n as f64;
        assert!((0.99..=1.01).contains(&moment), "{moment}");
    }

    #[test]
    fn noise_energy_matches_model() {
        let m = NoiseModel::new(1.0, 16, 0.5).unwrap();
        let avg = (0..1000)
            .map(|k| noise_energy(&sample_noise(&m, k, 5).unwrap()))
            .sum::<f64>()
            / 1000.0;
        let rel = (avg - m.expected_energy()).abs() / m.expected_energy();
        assert!(rel < 0.05, "{rel}");
    }

    #[test]
    fn energy_from_coefficients_matches_quadrature() {
        let m = NoiseModel::new(1.0, 6, 0.5).unwrap();
        let f = sample_noise(&m, 0, 1).unwrap();
        let n = 4000;
        let quad: f64 = (0..n)
            .map(|i| {
                let (a, b) = f.channels_at((i as f64 + 0.5) / n as f64);
                PI * (a * a + b * b)
            })
            .sum::<f64>()
            / n as f64;
        assert!((quad - noise_energy(&f)).abs() < 1e-9);
    }

    #[test]
    fn zero_noise_keeps_rest() {
        let g = grid();
        let zero = SpectralField::zeros(g);
        let silent = |_k: u64| ForcingInput::zero(g, 1.0);
        let stats = run_chain_with(&solver(), &zero, 5, SobolevIndex::H1, 1e-3, 0, silent).unwrap();
        assert_eq!(stats.hitting_time, None);
        assert!(stats.norms.iter().all(|&n| n == 0.0));
        assert_eq!(stats.norms.len(), 6);
    }

    #[test]
    fn markov_step_is_deterministic() {
        let m = NoiseModel::new(1.0, 16, 0.5).unwrap();
        let u = SpectralField::sin(grid(), 1, 0.1);
        let a = markov_step(&solver(), &u, &m, 2, 9).unwrap();
        let b = markov_step(&solver(), &u, &m, 2, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.mean().abs() < 1e-12);
    }

    #[test]
    fn tiny_noise_gives_linear_response() {
        let m = NoiseModel::new(1.0, 16, 1e-6).unwrap();
        let u1 = markov_step(&solver(), &SpectralField::zeros(grid()), &m, 0, 3).unwrap();
        // Duhamel bound: ‖u₁‖ ≤ ∫‖η‖ ≤ √T ‖η‖_{L²(0,T;L²)}
        let bound = noise_energy(&sample_noise(&m, 0, 3).unwrap()).sqrt();
        assert!(u1.l2_norm() <= 1e-4);
        assert!(u1.l2_norm() <= bound * (1.0 + 1e-6));
    }

    #[test]
    fn hitting_bookkeeping() {
        let m = NoiseModel::new(1.0, 16, 0.5).unwrap();
        let u0 = SpectralField::sin(grid(), 1, 0.1);
        let s = SobolevIndex::H1;
        let at_zero = run_chain(&solver(), &u0, &m, 4, s, 0.0, 1).unwrap();
        assert_eq!(at_zero.hitting_time, Some(0));
        assert_eq!(at_zero.norms.len(), 1);
        for seed in 0..5 {
            let st = run_chain(&solver(), &u0, &m, 6, s, 0.6, seed).unwrap();
            let expected_len = st.hitting_time.unwrap_or(6).min(6) + 1;
            assert_eq!(st.norms.len(), expected_len);
            if let Some(t) = st.hitting_time {
                assert!(st.norms[t] > 0.6 && st.norms[..t].iter().all(|&n| n <= 0.6));
            }
        }
    }

    #[test]
    fn mean_stays_zero_over_many_periods() {
        let m = NoiseModel::new(1.0, 16, 0.3).unwrap();
        let mut u = SpectralField::sin(grid(), 1, 0.1);
        for k in 0..50 {
            u = markov_step(&solver(), &u, &m, k, 77).unwrap();
        }
        assert!(u.mean().abs() <= 1e-9);
    }

    #[test]
    fn blow_up_is_censored_not_fatal() {
        let u0 = SpectralField::sin(grid(), 1, 0.1);
        let overflow = |_k: u64| {
            ForcingInput::basis_series(1.0, TemporalBasis::Cosine, vec![f64::MAX], vec![f64::MAX])
        };
        let stats = run_chain_with(&solver(), &u0, 3, SobolevIndex::H1, 10.0, 0, overflow).unwrap();
        assert_eq!(stats.censored_at, Some(1));
        assert_eq!(stats.hitting_time, None);
        assert_eq!(stats.norms.len(), 1);
    }
}
