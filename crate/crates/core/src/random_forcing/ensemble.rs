//! Monte Carlo estimates of hitting probabilities `P{τ_M ≤ n}`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_chain_with, sample_noise, ChainStats, NoiseModel};
use crate::error::{Error, Result};
use crate::solver::{ForcingInput, Solver};
use crate::spectral::{SobolevIndex, SpectralField};

const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval at 95% for `successes` out of `n`.
pub fn wilson_interval(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// `P̂{τ_M ≤ n}` for `n = 1..=N` from one initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingCurve {
    pub p_hat: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub trials: usize,
    /// Trials stopped by blow-up without a recorded exit from the ball.
    pub censored: usize,
}

impl HittingCurve {
    pub fn from_chains(chains: &[ChainStats], n_periods: usize) -> Self {
        let trials = chains.len();
        let mut curve = Self {
            p_hat: Vec::with_capacity(n_periods),
            lower: Vec::with_capacity(n_periods),
            upper: Vec::with_capacity(n_periods),
            trials,
            censored: chains
                .iter()
                .filter(|c| c.censored_at.is_some() && c.hitting_time.is_none())
                .count(),
        };
        for n in 1..=n_periods {
            let hits = chains.iter().filter(|c| c.hit_by(n)).count();
            let (lo, hi) = wilson_interval(hits, trials);
            curve.p_hat.push(hits as f64 / trials as f64);
            curve.lower.push(lo);
            curve.upper.push(hi);
        }
        curve
    }

    pub fn is_monotone(&self) -> bool {
        self.p_hat.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn final_estimate(&self) -> f64 {
        self.p_hat.last().copied().unwrap_or(0.0)
    }
}

/// Aggregates over every initial state; `chains[i][t]` is trial `t` from `u0_set[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub threshold: f64,
    pub s: f64,
    pub n_periods: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub curves: Vec<HittingCurve>,
    /// `min_i P̂{τ_M ≤ 1}` over the initial states.
    pub p1_hat: f64,
    #[serde(skip)]
    pub chains: Vec<Vec<ChainStats>>,
}

impl EnsembleSummary {
    /// Rows `(u0 index, trial, period, norm, hit flag)`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "u0,trial,period,norm_s,tau_M_flag")?;
        for (i, chains) in self.chains.iter().enumerate() {
            for (t, c) in chains.iter().enumerate() {
                for (k, norm) in c.norms.iter().enumerate() {
                    let flag = u8::from(c.hitting_time == Some(k));
                    writeln!(out, "{i},{t},{k},{norm:.12e},{flag}")?;
                }
            }
        }
        Ok(())
    }
}

/// Seed of trial `t` from initial state `i`: word `t` of the ChaCha stream
/// `i` keyed by `base_seed`.
pub fn trial_seeds(base_seed: u64, i: usize, trials: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(i as u64);
    (0..trials).map(|_| rng.next_u64()).collect()
}

/// Run `trials` chains from each state in `u0_set`, in parallel on the
/// current rayon pool. Output does not depend on the pool size.
#[allow(clippy::too_many_arguments)]
pub fn ensemble_hitting(
    solver: &Solver,
    u0_set: &[SpectralField],
    model: &NoiseModel,
    threshold: f64,
    n_periods: usize,
    trials: usize,
    s: SobolevIndex,
    base_seed: u64,
) -> Result<EnsembleSummary> {
    model.validate()?;
    if trials < 30 {
        return Err(Error::InvalidConfig(format!(
            "trials = {trials}; need at least 30"
        )));
    }
    ensemble_with(
        solver,
        u0_set,
        threshold,
        n_periods,
        trials,
        s,
        base_seed,
        |seed, k| sample_noise(model, k, seed),
    )
}

/// [`ensemble_hitting`] with the period forcing supplied by
/// `noise(trial_seed, k)` and no lower bound on `trials`.
#[allow(clippy::too_many_arguments)]
pub fn ensemble_with<F>(
    solver: &Solver,
    u0_set: &[SpectralField],
    threshold: f64,
    n_periods: usize,
    trials: usize,
    s: SobolevIndex,
    base_seed: u64,
    noise: F,
) -> Result<EnsembleSummary>
where
    F: Fn(u64, u64) -> Result<ForcingInput> + Sync,
{
    if trials == 0 || u0_set.is_empty() {
        return Err(Error::InvalidConfig(
            "need at least one trial and one initial state".into(),
        ));
    }
    let jobs: Vec<(usize, u64)> = (0..u0_set.len())
        .flat_map(|i| {
            trial_seeds(base_seed, i, trials)
                .into_iter()
                .map(move |seed| (i, seed))
        })
        .collect();
    let results: Vec<ChainStats> = jobs
        .par_iter()
        .map(|&(i, seed)| {
            run_chain_with(solver, &u0_set[i], n_periods, s, threshold, seed, |k| {
                noise(seed, k)
            })
        })
        .collect::<Result<_>>()?;
    let chains: Vec<Vec<ChainStats>> = results.chunks(trials).map(<[_]>::to_vec).collect();
    let curves: Vec<HittingCurve> = chains
        .iter()
        .map(|c| HittingCurve::from_chains(c, n_periods))
        .collect();
    let p1_hat = curves
        .iter()
        .map(|c| c.p_hat[0])
        .fold(f64::INFINITY, f64::min);
    Ok(EnsembleSummary {
        threshold,
        s: s.value(),
        n_periods,
        trials,
        base_seed,
        curves,
        p1_hat,
        chains,
    })
}
