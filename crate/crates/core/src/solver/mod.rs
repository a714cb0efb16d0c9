//! Time integration of the forced Benjamin–Ono equation
//!
//! ```text
//! ∂ₜu + H∂ₓ²u + u∂ₓu = η(t, x)
//! ```
//!
//! The dispersive part has the purely imaginary symbol `-ik|k|` and is
//! integrated exactly through an integrating factor; the remaining
//! `-½∂ₓ(u²) + η` is advanced with classical fourth-order Runge–Kutta.

mod forcing;
mod limit;
mod trajectory;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{SpectralField, TorusGrid};

pub use forcing::{ForcingInput, ForcingSegment, TemporalBasis};
pub use limit::{asymptotic_limit_check, limit_flow};
pub use trajectory::{Diagnostics, Trajectory};

/// Step-size control and output cadence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub dt_max: f64,
    /// `dt ≤ cfl / (K (max|u| + max|η|))`
    pub cfl: f64,
    /// Largest accepted `‖u_dt - u_{dt/2}‖` in [`Solver::self_check`].
    pub self_check_tol: f64,
    /// Steps between stored snapshots.
    pub record_stride: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt_max: 1e-2,
            cfl: 0.5,
            self_check_tol: 1e-6,
            record_stride: 10,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "dt_max = {} must be positive",
                self.dt_max
            )));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "cfl = {} outside (0, 1]",
                self.cfl
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidConfig(
                "record_stride must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Same configuration with both step limits halved.
    pub fn refined(&self) -> Self {
        Self {
            dt_max: self.dt_max / 2.0,
            cfl: self.cfl / 2.0,
            ..*self
        }
    }
}

/// Outcome of a step-halving comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfCheck {
    pub difference: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// `S(t) f`: the exact linear flow, multiplier `e^{-ik|k|t}`.
pub fn linear_propagate(f: &SpectralField, t: f64) -> SpectralField {
    f.map_coeffs(|k, c| c * Complex64::from_polar(1.0, -((k * k.abs()) as f64) * t))
}

/// Integrating-factor RK4 integrator for the forced equation.
#[derive(Debug, Clone, Copy)]
pub struct Solver {
    cfg: IntegratorConfig,
    nonlinear: bool,
}

impl Solver {
    pub fn new(cfg: IntegratorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            nonlinear: true,
        })
    }

    /// Solver for `∂ₜu + H∂ₓ²u = η`, with the quadratic term switched off.
    pub fn linear(cfg: IntegratorConfig) -> Result<Self> {
        Ok(Self {
            nonlinear: false,
            ..Self::new(cfg)?
        })
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.cfg
    }

    pub fn refined(&self) -> Self {
        Self {
            cfg: self.cfg.refined(),
            ..*self
        }
    }

    /// Numerical solution on `[0, t_final]`.
    pub fn solve(
        &self,
        u0: &SpectralField,
        forcing: &ForcingInput,
        t_final: f64,
    ) -> Result<Trajectory> {
        self.integrate(u0, forcing, t_final, Record::Stride)
            .map(|(_, traj)| traj)
    }

    /// States at `t = 0` and at the end of every forcing piece only.
    pub fn solve_pieces(
        &self,
        u0: &SpectralField,
        forcing: &ForcingInput,
        t_final: f64,
    ) -> Result<Trajectory> {
        self.integrate(u0, forcing, t_final, Record::Pieces)
            .map(|(_, traj)| traj)
    }

    /// Final state only; nothing else is stored.
    pub fn final_state(
        &self,
        u0: &SpectralField,
        forcing: &ForcingInput,
        t_final: f64,
    ) -> Result<SpectralField> {
        self.integrate(u0, forcing, t_final, Record::Final)
            .map(|(u, _)| u)
    }

    /// Solution of the ζ-shifted problem, obtained as `R_t(u0 + ζ, η) - ζ`.
    pub fn solve_shifted(
        &self,
        u0: &SpectralField,
        zeta: &SpectralField,
        forcing: &ForcingInput,
        t_final: f64,
    ) -> Result<Trajectory> {
        zeta.require_mean_zero()?;
        let base = self.solve(&(u0 + zeta), forcing, t_final)?;
        Ok(base.shifted(zeta))
    }

    pub fn final_state_shifted(
        &self,
        u0: &SpectralField,
        zeta: &SpectralField,
        forcing: &ForcingInput,
        t_final: f64,
    ) -> Result<SpectralField> {
        zeta.require_mean_zero()?;
        Ok(&self.final_state(&(u0 + zeta), forcing, t_final)? - zeta)
    }

    /// Compare the final state at the configured step limits with the one at
    /// half of them.
    pub fn self_check(
        &self,
        u0: &SpectralField,
        forcing: &ForcingInput,
        t_final: f64,
    ) -> Result<SelfCheck> {
        let coarse = self.final_state(u0, forcing, t_final)?;
        let fine = self.refined().final_state(u0, forcing, t_final)?;
        let difference = coarse.distance(&fine);
        Ok(SelfCheck {
            difference,
            tolerance: self.cfg.self_check_tol,
            passed: difference <= self.cfg.self_check_tol,
        })
    }

    fn integrate(
        &self,
        u0: &SpectralField,
        forcing: &ForcingInput,
        t_final: f64,
        record: Record,
    ) -> Result<(SpectralField, Trajectory)> {
        u0.require_mean_zero()?;
        forcing.validate()?;
        let grid = u0.grid();
        if let ForcingInput::PiecewiseConstant { segments } = forcing {
            if segments.iter().any(|s| s.profile.grid() != grid) {
                return Err(Error::GridMismatch);
            }
        }
        let available = forcing.duration();
        if !(t_final >= 0.0) || t_final > available * (1.0 + 1e-12) {
            return Err(Error::DurationMismatch {
                available,
                requested: t_final,
            });
        }

        let mut traj = Trajectory::new();
        let mut u = u0.clone();
        let mut work = 0.0;
        traj.push(0.0, u.clone(), work);
        let mut stepper = Stepper::new(grid, forcing, self.nonlinear);
        let mut steps = 0usize;

        for (piece, &(start, end)) in forcing.pieces().iter().enumerate() {
            if start >= t_final {
                break;
            }
            let end = end.min(t_final);
            let amp = forcing.amplitude_bound(piece);
            let mut t = start;
            while t < end {
                let remaining = end - t;
                let max_u = stepper.prepare(u.coeffs());
                let rate = grid.cutoff() as f64 * (max_u + amp);
                if rate.is_infinite() {
                    return Err(Error::NonFinite {
                        time: t,
                        partial: Some(Box::new(traj)),
                    });
                }
                let dt_adapt = if rate > 0.0 {
                    self.cfg.dt_max.min(self.cfg.cfl / rate)
                } else {
                    self.cfg.dt_max
                };
                let n = (remaining / dt_adapt).ceil().max(1.0);
                let dt = remaining / n;
                work += stepper.step(u.coeffs_mut(), piece, t, dt);
                steps += 1;
                t = if n <= 1.0 { end } else { t + dt };

                if !u.is_finite() {
                    return Err(Error::NonFinite {
                        time: t,
                        partial: Some(Box::new(traj)),
                    });
                }
                if record == Record::Stride && steps.is_multiple_of(self.cfg.record_stride) {
                    traj.push(t, u.clone(), work);
                }
            }
            if record != Record::Final {
                traj.push(end, u.clone(), work);
            }
        }
        if record == Record::Final {
            traj = Trajectory::new();
        }
        traj.push(t_final, u.clone(), work);
        Ok((u, traj))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Record {
    Final,
    Stride,
    Pieces,
}

struct Stepper<'a> {
    grid: TorusGrid,
    forcing: &'a ForcingInput,
    nonlinear: bool,
    /// Grid values of the state passed to the last `prepare`.
    values: Vec<Complex64>,
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    stage: Vec<Complex64>,
    eta: Vec<Complex64>,
}

impl<'a> Stepper<'a> {
    fn new(grid: TorusGrid, forcing: &'a ForcingInput, nonlinear: bool) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); grid.n_modes()];
        Self {
            grid,
            forcing,
            nonlinear,
            values: Vec::new(),
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            stage: z.clone(),
            eta: z,
        }
    }

    /// Synthesize the state on the grid and return `max |u|`.
    fn prepare(&mut self, u: &[Complex64]) -> f64 {
        self.values = self.grid.synthesize(u);
        self.values.iter().map(|v| v.re.abs()).fold(0.0, f64::max)
    }

    /// `out = -½ ∂ₓ(u²) + η(t)`; returns `2⟨u, η(t)⟩`.
    fn rhs(
        &mut self,
        u: &[Complex64],
        values: Option<&[Complex64]>,
        piece: usize,
        t: f64,
        which: u8,
    ) -> f64 {
        let grid = self.grid;
        for e in self.eta.iter_mut() {
            *e = Complex64::new(0.0, 0.0);
        }
        self.forcing.add_profile(piece, t, grid, &mut self.eta);
        let out = match which {
            1 => &mut self.k1,
            2 => &mut self.k2,
            3 => &mut self.k3,
            _ => &mut self.k4,
        };
        if self.nonlinear {
            let vals = match values {
                Some(v) => v.to_vec(),
                None => grid.synthesize(u),
            };
            let sq = vals
                .into_iter()
                .map(|v| Complex64::new(v.re * v.re, 0.0))
                .collect();
            let sq_hat = grid.analyze(sq);
            for ((o, s), k) in out.iter_mut().zip(&sq_hat).zip(grid.wavenumbers()) {
                *o = Complex64::new(0.0, -0.5 * k as f64) * s;
            }
        } else {
            for o in out.iter_mut() {
                *o = Complex64::new(0.0, 0.0);
            }
        }
        let mut power = 0.0;
        for ((o, e), c) in out.iter_mut().zip(&self.eta).zip(u) {
            *o += e;
            power += (c * e.conj()).re;
        }
        2.0 * 2.0 * std::f64::consts::PI * power
    }

    /// One IF-RK4 step of size `h`. Returns the forcing work over the step.
    fn step(&mut self, u: &mut [Complex64], piece: usize, t: f64, h: f64) -> f64 {
        let half: Vec<Complex64> = self
            .grid
            .wavenumbers()
            .map(|k| Complex64::from_polar(1.0, -((k * k.abs()) as f64) * h / 2.0))
            .collect();
        let values = std::mem::take(&mut self.values);

        let w1 = self.rhs(u, Some(&values), piece, t, 1);
        // stage 2: E (u + h k1 / 2)
        let mut stage = std::mem::take(&mut self.stage);
        for i in 0..u.len() {
            stage[i] = half[i] * (u[i] + self.k1[i] * (h / 2.0));
        }
        let w2 = self.rhs(&stage, None, piece, t + h / 2.0, 2);
        // stage 3: E u + h k2 / 2
        for i in 0..u.len() {
            stage[i] = half[i] * u[i] + self.k2[i] * (h / 2.0);
        }
        let w3 = self.rhs(&stage, None, piece, t + h / 2.0, 3);
        // stage 4: E² u + E h k3
        for i in 0..u.len() {
            stage[i] = half[i] * (half[i] * u[i] + self.k3[i] * h);
        }
        let w4 = self.rhs(&stage, None, piece, t + h, 4);
        self.stage = stage;

        for i in 0..u.len() {
            let e = half[i];
            let e2 = e * e;
            u[i] = e2 * u[i]
                + (e2 * self.k1[i] + e * (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * (h / 6.0);
        }
        h / 6.0 * (w1 + 2.0 * w2 + 2.0 * w3 + w4)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SobolevIndex;

    fn grid() -> TorusGrid {
        TorusGrid::new(16).unwrap()
    }

    #[test]
    fn linear_propagate_travels() {
        let g = grid();
        let s = SpectralField::sin(g, 1, 1.0);
        for t in [0.0, 0.3, 1.7, -2.0] {
            let expected = SpectralField::from_fn(g, |x| (x - t).sin());
            assert!(linear_propagate(&s, t).distance(&expected) < 1e-13);
        }
        let f = SpectralField::trig(g, &[(2, 0.3, 0.1), (5, -0.2, 0.4)]);
        assert_eq!(linear_propagate(&f, 0.0), f);
        let s1 = SobolevIndex::H1;
        assert!((linear_propagate(&f, 0.77).sobolev_norm(s1) - f.sobolev_norm(s1)).abs() < 1e-14);
    }

    #[test]
    fn linear_propagate_solves_linear_equation() {
        // ∂ₜu = -H∂ₓ²u, checked with a centered difference in t.
        let g = grid();
        let f = SpectralField::trig(g, &[(1, 1.0, 0.0), (3, 0.2, -0.5)]);
        let t = 0.4;
        let h = 1e-5;
        let dudt = (&linear_propagate(&f, t + h) - &linear_propagate(&f, t - h)).scale(0.5 / h);
        let rhs = -linear_propagate(&f, t)
            .derivative()
            .derivative()
            .hilbert_transform();
        assert!(dudt.distance(&rhs) < 1e-7);
    }

    #[test]
    fn zero_stays_zero() {
        let g = grid();
        let solver = Solver::new(IntegratorConfig::default()).unwrap();
        let zero = SpectralField::zeros(g);
        let traj = solver
            .solve(&zero, &ForcingInput::zero(g, 1.0).unwrap(), 1.0)
            .unwrap();
        assert!(traj.states.iter().all(|s| s.l2_norm() == 0.0));
        assert_eq!(traj.final_time(), 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = grid();
        let solver = Solver::new(IntegratorConfig::default()).unwrap();
        let zero = SpectralField::zeros(g);
        let forcing = ForcingInput::zero(g, 1.0).unwrap();
        assert!(matches!(
            solver.solve(&zero, &forcing, 1.5),
            Err(Error::DurationMismatch { .. })
        ));
        let with_mean = SpectralField::trig(g, &[(0, 0.0, 0.1)]);
        assert!(matches!(
            solver.solve(&with_mean, &forcing, 0.5),
            Err(Error::NotMeanZero { .. })
        ));
        let other = ForcingInput::zero(TorusGrid::new(8).unwrap(), 1.0).unwrap();
        assert!(matches!(
            solver.solve(&zero, &other, 0.5),
            Err(Error::GridMismatch)
        ));
        assert!(Solver::new(IntegratorConfig {
            cfl: 0.0,
            ..Default::default()
        })
        .is_err());
        assert!(Solver::new(IntegratorConfig {
            cfl: 1.5,
            ..Default::default()
        })
        .is_err());
        assert!(Solver::new(IntegratorConfig {
            dt_max: -1.0,
            ..Default::default()
        })
        .is_err());
        assert!(Solver::new(IntegratorConfig {
            record_stride: 0,
            ..Default::default()
        })
        .is_err());
    }

    #[test]
    fn shorter_horizon_than_forcing() {
        let g = grid();
        let solver = Solver::new(IntegratorConfig::default()).unwrap();
        let u0 = SpectralField::sin(g, 1, 0.3);
        let forcing = ForcingInput::piecewise(vec![
            ForcingSegment {
                duration: 0.5,
                profile: SpectralField::cos(g, 1, 1.0),
            },
            ForcingSegment {
                duration: 0.5,
                profile: SpectralField::sin(g, 1, -1.0),
            },
        ])
        .unwrap();
        let traj = solver.solve(&u0, &forcing, 0.7).unwrap();
        assert!((traj.final_time() - 0.7).abs() < 1e-15);
        assert!(traj.times.contains(&0.5));
        assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn blow_up_reports_partial_trajectory() {
        let g = grid();
        let solver = Solver::new(IntegratorConfig::default()).unwrap();
        let mut u0 = SpectralField::sin(g, 1, 1.0);
        u0.coeffs_mut()[g.index(3)] = Complex64::new(f64::NAN, 0.0);
        let forcing = ForcingInput::zero(g, 1.0).unwrap();
        match solver.solve(&u0, &forcing, 1.0) {
            Err(Error::NonFinite {
                partial: Some(p), ..
            }) => assert_eq!(p.len(), 1),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }
}
