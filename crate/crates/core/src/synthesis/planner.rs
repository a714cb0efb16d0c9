use serde::{Deserialize, Serialize};

use super::{verify, ControlSchedule, ControlSegment, PlanReport};
use crate::error::{Error, Result};
use crate::saturation::{
    bilinear_drift, decompose_direction, DirectionDecomposition, Ladder, ModeSpan,
};
use crate::solver::{ForcingInput, IntegratorConfig, Solver};
use crate::spectral::{Projection, SpectralField, TorusGrid};

/// Ladder levels built by default; construction stops earlier on overflow.
const MAX_LADDER_LEVEL: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    /// First candidate for the short time `δ`.
    pub delta_start: f64,
    /// `δ` is never smaller than `delta_start · 2^{-max_halvings}`.
    pub max_halvings: u32,
    /// Fraction of `ε` given to projecting the target onto the ladder.
    pub projection_share: f64,
    /// Correction passes per displacement.
    pub max_rounds: usize,
    /// Each correction pass aims to shrink the residual by this factor.
    pub contraction: f64,
    /// Attempts at halving the parking radius in fixed-time steering.
    pub max_replans: usize,
    /// Supplied by the caller; not part of the serialized form.
    #[serde(skip)]
    pub integrator: IntegratorConfig,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            delta_start: 0.1,
            max_halvings: 20,
            projection_share: 0.5,
            max_rounds: 12,
            contraction: 0.3,
            max_replans: 4,
            integrator: IntegratorConfig::default(),
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        self.integrator.validate()?;
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.delta_start > 0.0 && self.delta_start.is_finite()) {
            return bad("delta_start must be positive");
        }
        if !(self.projection_share > 0.0 && self.projection_share < 1.0) {
            return bad("projection_share must lie in (0, 1)");
        }
        if !(self.contraction > 0.0 && self.contraction < 1.0) {
            return bad("contraction must lie in (0, 1)");
        }
        if self.max_rounds == 0 {
            return bad("max_rounds must be at least 1");
        }
        Ok(())
    }

    fn smallest_delta(&self) -> f64 {
        self.delta_start * 0.5f64.powi(self.max_halvings as i32)
    }
}

/// Error allowance for one piece of a plan: a bound on the whole error and
/// bounds on its components outside selected ladder levels.
#[derive(Debug, Clone, PartialEq)]
struct Budget {
    total: f64,
    outside: Vec<(usize, f64)>,
}

impl Budget {
    fn new(total: f64) -> Self {
        Self {
            total,
            outside: Vec::new(),
        }
    }

    fn scaled(&self, w: f64) -> Self {
        Self {
            total: self.total * w,
            outside: self.outside.iter().map(|&(l, t)| (l, t * w)).collect(),
        }
    }

    /// Tightest bound that applies to errors lying inside `H_level`.
    fn inner_tol(&self, level: usize) -> f64 {
        self.outside
            .iter()
            .filter(|&&(l, _)| l < level)
            .fold(self.total, |acc, &(_, t)| acc.min(t))
    }

    /// Budget of one block in a feedback round at `level`: a coarse total,
    /// since later rounds fix what stays inside `H_level`, and a fraction
    /// `w` of the whole allowance for the part outside it.
    fn for_block(&self, level: usize, coarse: f64, w: f64) -> Self {
        Self {
            total: coarse,
            outside: vec![(level, self.total * w)],
        }
    }
}

/// A planned piece of motion together with the state it reaches under the
/// planner's own solver.
#[derive(Debug, Clone)]
struct Move {
    schedule: ControlSchedule,
    state: SpectralField,
    depth: usize,
}

impl Move {
    fn stay(u: &SpectralField) -> Self {
        Self {
            schedule: ControlSchedule::empty(),
            state: u.clone(),
            depth: 0,
        }
    }

    fn then(&mut self, next: Move) {
        self.schedule.append(next.schedule);
        self.state = next.state;
        self.depth = self.depth.max(next.depth);
    }
}

/// Builds `sin x`/`cos x` control schedules by the large-control, short-time
/// construction over the saturating ladder, checking each piece by
/// simulation.
#[derive(Debug, Clone)]
pub struct Planner {
    cfg: PlannerConfig,
    solver: Solver,
    ladder: Ladder,
}

impl Planner {
    pub fn new(grid: TorusGrid, cfg: PlannerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            solver: Solver::new(cfg.integrator)?,
            ladder: Ladder::build(grid, MAX_LADDER_LEVEL),
            cfg,
        })
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.cfg
    }

    pub fn solver(&self) -> &Solver {
        &self.solver
    }

    pub fn ladder(&self) -> &Ladder {
        &self.ladder
    }

    pub fn grid(&self) -> TorusGrid {
        self.ladder.level(0).expect("level 0 always exists").grid()
    }

    fn h0(&self) -> &ModeSpan {
        &self.ladder.levels()[0]
    }

    fn run_segment(&self, u: &SpectralField, seg: &ControlSegment) -> Result<SpectralField> {
        let forcing = ForcingInput::constant(seg.profile(u.grid()), seg.duration)?;
        self.solver.final_state(u, &forcing, seg.duration)
    }

    /// Next halving count after a miss: one step, or more when the observed
    /// error is far above the goal and the error decays like `δ^order`.
    fn next_halving(&self, m: u32, err: f64, goal: f64, order: f64) -> u32 {
        let extra = ((err / goal).log2() / order).floor();
        let extra = if extra.is_finite() {
            extra.max(0.0) as u32
        } else {
            0
        };
        let next = m + 1 + extra.min(self.cfg.max_halvings);
        if m < self.cfg.max_halvings {
            next.min(self.cfg.max_halvings)
        } else {
            next
        }
    }

    /// One segment `(δ, δ⁻¹η)` with `η ∈ H₀`, `δ` halved from `delta_start`
    /// until the verified jump error is below `epsilon`.
    pub fn elementary_move(
        &self,
        u0: &SpectralField,
        eta: &SpectralField,
        epsilon: f64,
    ) -> Result<(ControlSchedule, PlanReport)> {
        self.check_grid(u0)?;
        if !self.h0().contains(eta, 1e-12 * eta.l2_norm().max(1.0)) {
            return Err(Error::InvalidForcing(
                "elementary moves need an η in span{sin x, cos x}".into(),
            ));
        }
        let target = u0 + eta;
        if eta.l2_norm() == 0.0 {
            let report = verify(
                &self.solver,
                &ControlSchedule::empty(),
                u0,
                &target,
                epsilon,
                0,
            )?;
            return Ok((ControlSchedule::empty(), report));
        }
        let mut m = 0;
        let mut best: Option<(ControlSchedule, PlanReport)> = None;
        while m <= self.cfg.max_halvings {
            let delta = self.cfg.delta_start * 0.5f64.powi(m as i32);
            let schedule = ControlSchedule::single(ControlSegment::from_profile(
                delta,
                &eta.scale(1.0 / delta),
            ));
            let report = verify(&self.solver, &schedule, u0, &target, epsilon, 0)?;
            let err = report.achieved_error;
            if report.succeeded() {
                return Ok((schedule, report));
            }
            if best.as_ref().is_none_or(|(_, r)| err < r.achieved_error) {
                best = Some((schedule, report));
            }
            m = self.next_halving(m, err, epsilon, 1.0);
        }
        Err(Error::BudgetExhausted {
            reason: format!(
                "elementary move missed ε = {epsilon:e} down to δ = {:e}",
                self.cfg.smallest_delta()
            ),
            partial: best.map(|(s, _)| Box::new(s)),
        })
    }

    /// `max(‖e‖ / total, ‖e - P_ℓ e‖ / tol_ℓ)`: below 1 when `e` fits.
    fn excess(&self, e: &SpectralField, budget: &Budget) -> f64 {
        budget
            .outside
            .iter()
            .fold(e.l2_norm() / budget.total, |acc, &(level, tol)| {
                let span = &self.ladder.levels()[level.min(self.ladder.height())];
                acc.max(e.distance(&span.project(e)) / tol)
            })
    }

    /// Jump by `d ∈ H₀` through one short segment.
    fn elementary(&self, u: &SpectralField, d: &SpectralField, budget: &Budget) -> Result<Move> {
        let target = u + d;
        self.halving_search(1.0, |delta| {
            let seg = ControlSegment::from_profile(delta, &d.scale(1.0 / delta));
            let state = self.run_segment(u, &seg)?;
            let excess = self.excess(&(&state - &target), budget);
            log::trace!(target: "planner", "kick |d|={:.3e} δ={delta:.3e} excess={excess:.3e}", d.l2_norm());
            let mv = Move {
                schedule: ControlSchedule::single(seg),
                state,
                depth: 0,
            };
            Ok((excess, mv))
        })
    }

    /// Halve `δ` from `delta_start` until `attempt(δ)` reports an excess
    /// below 1, skipping ahead when the excess is large and decays like
    /// `δ^order`. Returns the best candidate if none fits.
    fn halving_search<T>(
        &self,
        order: f64,
        mut attempt: impl FnMut(f64) -> Result<(f64, T)>,
    ) -> Result<T> {
        let mut m = 0;
        let mut best: Option<(f64, T)> = None;
        while m <= self.cfg.max_halvings {
            let delta = self.cfg.delta_start * 0.5f64.powi(m as i32);
            let (excess, value) = attempt(delta)?;
            if excess < 1.0 {
                return Ok(value);
            }
            if best.as_ref().is_none_or(|(e, _)| excess < *e) {
                best = Some((excess, value));
            }
            m = self.next_halving(m, excess, 1.0, order);
        }
        Ok(best.expect("at least one candidate").1)
    }

    /// Move `u` by `d ∈ H_level` within `budget`, as far as the halving
    /// limit allows. Feedback rounds correct the error inside `H_level`; the
    /// part outside it is kept small by the budgets handed to each block.
    fn displace(
        &self,
        u: &SpectralField,
        d: &SpectralField,
        level: usize,
        budget: &Budget,
    ) -> Result<Move> {
        if self.excess(d, budget) < 1.0 {
            return Ok(Move::stay(u));
        }
        let h0 = self.h0();
        if level == 0 {
            return self.elementary(u, &h0.project(d), budget);
        }
        let span = self.ladder.level(level)?;
        let below = self.ladder.level(level - 1)?;
        let target = u + d;
        // error inside H_level that the rounds must reach
        let inner_tol = budget.inner_tol(level);
        let mut mv = Move::stay(u);
        let mut last = f64::INFINITY;
        for round in 0..self.cfg.max_rounds {
            let error = &target - &mv.state;
            let residual = span.project(&error);
            let size = residual.l2_norm();
            if self.excess(&error, budget) < 1.0 || size < 0.5 * inner_tol || size >= last {
                break;
            }
            last = size;
            log::trace!(target: "planner", "level {level} round {round}: residual {size:.3e}, goal {inner_tol:.3e}");
            let dec = decompose_direction(&residual, below)?;
            let terms = (dec.zetas.len() + 1) as f64;
            let coarse = (self.cfg.contraction * size).max(0.5 * inner_tol);
            let block = budget.for_block(level, coarse, 0.5f64.powi(round as i32 + 1) / terms);
            let eta_low = h0.project(&dec.eta);
            let eta_high = &dec.eta - &eta_low;

            if dec.zetas.is_empty() {
                mv.then(self.elementary(&mv.state, &eta_low, &block)?);
            } else {
                let eta_share = eta_low.scale(1.0 / dec.zetas.len() as f64);
                for zeta in &dec.zetas {
                    mv.then(self.symmetric_lift(&mv.state, zeta, &eta_share, level, &block)?);
                }
            }
            let mut rest = self.displace(&mv.state, &eta_high, level - 1, &block)?;
            rest.depth += 1;
            mv.then(rest);
            mv.depth = mv.depth.max(level);
        }
        Ok(mv)
    }

    /// Realize `u + η - ζ∂ₓζ` by four sub-blocks of duration `δ`, each made
    /// of a lift `±(4δ)^{-1/2}ζ` and the constant control `η/(4δ)`, with
    /// signs `+ - - +`. The terms odd in `ζ` cancel, including those picked
    /// up from the drift of the background state, leaving an `O(δ)` error.
    ///
    /// On the first level the lifts are single segments of one common
    /// duration, so their cross terms with the background cancel as well.
    fn symmetric_lift(
        &self,
        u: &SpectralField,
        zeta: &SpectralField,
        eta: &SpectralField,
        level: usize,
        budget: &Budget,
    ) -> Result<Move> {
        let expected = &(u + eta) - &bilinear_drift(zeta, zeta)?;
        let ideal_budget = budget.scaled(0.25);
        let (lift, seg) = self.halving_search(1.0, |delta| {
            let lift = zeta.scale((4.0 * delta).powf(-0.5));
            let seg = ControlSegment::from_profile(delta, &eta.scale(0.25 / delta));
            let mut state = u.clone();
            for jump in lift_jumps(&lift) {
                state = &state + jump.size();
                if !matches!(jump, Jump::Last(_)) {
                    state = self.run_segment(&state, &seg)?;
                }
            }
            let excess = self.excess(&(&state - &expected), &ideal_budget);
            log::trace!(target: "planner", "level {level} lift δ={delta:.3e}: ideal excess {excess:.3e}");
            Ok((excess, (lift, seg)))
        })?;

        if level == 1 {
            let jump_budget = budget.scaled(0.75);
            return self.halving_search(1.0, |delta0| {
                let mut mv = Move::stay(u);
                for jump in lift_jumps(&lift) {
                    if jump.size().l2_norm() > 0.0 {
                        let kick = ControlSegment::from_profile(delta0, &jump.size().scale(1.0 / delta0));
                        mv.state = self.run_segment(&mv.state, &kick)?;
                        mv.schedule.push(kick);
                    }
                    if !matches!(jump, Jump::Last(_)) {
                        mv.state = self.run_segment(&mv.state, &seg)?;
                        mv.schedule.push(seg.clone());
                    }
                }
                mv.depth = 1;
                let excess = self.excess(&(&mv.state - &expected), &jump_budget);
                log::trace!(target: "planner", "level {level} kicks δ₀={delta0:.3e}: excess {excess:.3e}");
                Ok((excess, mv))
            });
        }

        let jump_budget = budget.scaled(0.75 / 4.0);
        let mut mv = Move::stay(u);
        for jump in lift_jumps(&lift) {
            let mut step = self.displace(&mv.state, jump.size(), level - 1, &jump_budget)?;
            step.depth += 1;
            mv.then(step);
            if !matches!(jump, Jump::Last(_)) {
                mv.state = self.run_segment(&mv.state, &seg)?;
                mv.schedule.push(seg.clone());
            }
        }
        Ok(mv)
    }

    /// Carry `u0` to `u0 + η - Σζᵢ∂ₓζᵢ` for a decomposition at level
    /// `depth`: one symmetric lift per `ζᵢ`, then feedback rounds inside
    /// `H_depth` for what the lifts leave behind.
    pub fn extended_move(
        &self,
        u0: &SpectralField,
        dec: &DirectionDecomposition,
        epsilon: f64,
        depth: usize,
    ) -> Result<(ControlSchedule, PlanReport)> {
        self.check_grid(u0)?;
        if !(epsilon > 0.0) {
            return Err(Error::InvalidConfig("ε must be positive".into()));
        }
        if depth > self.ladder.height() {
            return Err(Error::RecursionLimit {
                depth,
                height: self.ladder.height(),
            });
        }
        if dec.level != depth {
            return Err(Error::InvalidConfig(format!(
                "decomposition is for level {}, not depth {depth}",
                dec.level
            )));
        }
        let target = u0 + &dec.reconstruct()?;
        if dec.is_trivial() {
            let report = verify(
                &self.solver,
                &ControlSchedule::empty(),
                u0,
                &target,
                epsilon,
                0,
            )?;
            return Ok((ControlSchedule::empty(), report));
        }
        if dec.zetas.is_empty() && self.h0().contains(&dec.eta, 1e-12 * dec.eta.l2_norm()) {
            return self.elementary_move(u0, &dec.eta, epsilon);
        }

        let budget = Budget::new(0.5 * epsilon);
        let terms = (dec.zetas.len() + 1) as f64;
        let block = budget.for_block(depth, 0.5 * epsilon, 0.5 / terms);
        let eta_low = self.h0().project(&dec.eta);
        let eta_high = &dec.eta - &eta_low;
        let mut mv = Move::stay(u0);
        if dec.zetas.is_empty() {
            mv.then(self.elementary(u0, &eta_low, &block)?);
        } else {
            let eta_share = eta_low.scale(1.0 / dec.zetas.len() as f64);
            for zeta in &dec.zetas {
                mv.then(self.symmetric_lift(&mv.state, zeta, &eta_share, depth, &block)?);
            }
        }
        if depth > 0 {
            mv.then(self.displace(&mv.state, &eta_high, depth - 1, &block)?);
        }
        let residual = self.ladder.level(depth)?.project(&(&target - &mv.state));
        mv.then(self.displace(&mv.state, &residual, depth, &budget)?);
        mv.depth = mv.depth.max(depth);

        let report = verify(&self.solver, &mv.schedule, u0, &target, epsilon, mv.depth)?;
        if report.succeeded() {
            Ok((mv.schedule, report))
        } else {
            Err(Error::BudgetExhausted {
                reason: format!(
                    "verified error {:e} is not below ε = {epsilon:e}",
                    report.achieved_error
                ),
                partial: Some(Box::new(mv.schedule)),
            })
        }
    }

    fn check_grid(&self, u: &SpectralField) -> Result<()> {
        if u.grid() != self.grid() {
            return Err(Error::GridMismatch);
        }
        u.require_mean_zero()
    }

    /// Lowest ladder level reproducing `d` to within `tol`.
    fn level_for(&self, d: &SpectralField, tol: f64) -> Option<usize> {
        self.ladder
            .levels()
            .iter()
            .position(|span| d.distance(&span.project(d)) <= tol)
    }

    /// Admissible schedule carrying `u0` to within `ε` of `u1`, using the
    /// ladder level that covers the modes `≤ modes` of `u1 - u0`.
    pub fn steer(
        &self,
        u0: &SpectralField,
        u1: &SpectralField,
        epsilon: f64,
        modes: usize,
    ) -> Result<(ControlSchedule, PlanReport)> {
        self.check_grid(u0)?;
        self.check_grid(u1)?;
        if !(epsilon > 0.0) {
            return Err(Error::InvalidConfig("ε must be positive".into()));
        }
        let d = u1 - u0;
        let budget = self.cfg.projection_share * epsilon;
        let covered = d.project(Projection::Below(modes.min(self.grid().cutoff()) + 1));
        if d.distance(&covered) > budget {
            return Err(Error::BudgetExhausted {
                reason: format!("modes above {modes} carry more than the projection budget"),
                partial: None,
            });
        }
        let Some(first_level) = self.level_for(&covered, budget) else {
            return Err(Error::CutoffOverflow {
                mode: modes,
                cutoff: self.grid().cutoff(),
            });
        };

        let dyn_tol = epsilon - budget;
        let mut mv = Move::stay(u0);
        for level in first_level..self.ladder.height() + 1 {
            let remaining = u1 - &mv.state;
            if remaining.l2_norm() < dyn_tol {
                break;
            }
            let span = self.ladder.level(level)?;
            let step = self.displace(
                &mv.state,
                &span.project(&remaining),
                level,
                &Budget::new(0.5 * dyn_tol),
            )?;
            mv.then(step);
        }
        let report = verify(&self.solver, &mv.schedule, u0, u1, epsilon, mv.depth)?;
        if report.succeeded() {
            Ok((mv.schedule, report))
        } else {
            Err(Error::BudgetExhausted {
                reason: format!(
                    "verified error {:e} is not below ε = {epsilon:e}",
                    report.achieved_error
                ),
                partial: Some(Box::new(mv.schedule)),
            })
        }
    }

    /// Schedule of total duration exactly `horizon`: steer close to the
    /// equilibrium `0`, coast there with zero control, then steer to `u1`.
    pub fn steer_in_time(
        &self,
        u0: &SpectralField,
        u1: &SpectralField,
        horizon: f64,
        epsilon: f64,
        modes: usize,
    ) -> Result<(ControlSchedule, PlanReport)> {
        self.check_grid(u0)?;
        self.check_grid(u1)?;
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidConfig("horizon must be positive".into()));
        }
        let zero = SpectralField::zeros(self.grid());
        let (arrive, arrive_report) = self.steer(&zero, u1, 0.5 * epsilon, modes)?;

        let mut radius = 0.25 * epsilon;
        let mut best: Option<(ControlSchedule, PlanReport)> = None;
        for _ in 0..=self.cfg.max_replans {
            let (park, park_report) = self.steer(u0, &zero, radius, modes)?;
            let depth = park_report
                .recursion_depth
                .max(arrive_report.recursion_depth);
            let coast = horizon - park.total_duration() - arrive.total_duration();
            if coast < 0.0 {
                return Err(Error::BudgetExhausted {
                    reason: format!("steering phases need more than the horizon {horizon}"),
                    partial: Some(Box::new(park.concatenate(&arrive))),
                });
            }
            let mut schedule = park;
            let coast_at = schedule.len();
            if coast > 0.0 {
                schedule.push(ControlSegment::new(coast, 0.0, 0.0));
                schedule.append(arrive.clone());
                // absorb summation round-off so the durations add up to the horizon
                for _ in 0..4 {
                    let gap = horizon - schedule.total_duration();
                    if gap == 0.0 {
                        break;
                    }
                    schedule.segments[coast_at].duration += gap;
                }
            } else {
                schedule.append(arrive.clone());
            }
            let report = verify(&self.solver, &schedule, u0, u1, epsilon, depth)?;
            let done = report.succeeded();
            if best
                .as_ref()
                .is_none_or(|(_, r)| report.achieved_error <= r.achieved_error)
            {
                best = Some((schedule, report));
            }
            if done {
                break;
            }
            radius /= 2.0;
        }
        let (schedule, report) = best.expect("at least one attempt");
        if report.succeeded() {
            Ok((schedule, report))
        } else {
            Err(Error::BudgetExhausted {
                reason: format!(
                    "verified error {:e} is not below ε = {epsilon:e}",
                    report.achieved_error
                ),
                partial: Some(Box::new(schedule)),
            })
        }
    }
}

/// A jump between sub-blocks of a symmetric lift. `Last` closes the lift.
enum Jump {
    Inner(SpectralField),
    Last(SpectralField),
}

impl Jump {
    fn size(&self) -> &SpectralField {
        match self {
            Jump::Inner(f) | Jump::Last(f) => f,
        }
    }
}

/// Jumps for the sign pattern `+ - - +`: `+L, -2L, 0, +2L`, then `-L`.
fn lift_jumps(lift: &SpectralField) -> [Jump; 5] {
    let zero = SpectralField::zeros(lift.grid());
    [
        Jump::Inner(lift.clone()),
        Jump::Inner(lift.scale(-2.0)),
        Jump::Inner(zero),
        Jump::Inner(lift.scale(2.0)),
        Jump::Last(-lift),
    ]
}
