//! Piecewise-constant control schedules and the planner that builds them.

mod planner;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{ForcingInput, ForcingSegment, Solver, Trajectory};
use crate::spectral::{SpectralField, TorusGrid};

pub use planner::{Planner, PlannerConfig};

/// One constant piece `η = a sin x + b cos x + Σ (αₖ sin kx + βₖ cos kx)`.
///
/// The extra modes are only present in intermediate, non-admissible plans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSegment {
    pub duration: f64,
    pub a: f64,
    pub b: f64,
    /// `(k, αₖ, βₖ)` for `k ≥ 2`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub higher: Vec<(usize, f64, f64)>,
}

impl ControlSegment {
    pub fn new(duration: f64, a: f64, b: f64) -> Self {
        Self {
            duration,
            a,
            b,
            higher: Vec::new(),
        }
    }

    /// Segment with a general real profile. Coefficients below `1e-300` are
    /// dropped, so an `H₀` profile yields an admissible segment.
    pub fn from_profile(duration: f64, profile: &SpectralField) -> Self {
        let coords = profile.trig_coords();
        let higher = coords
            .chunks(2)
            .enumerate()
            .skip(1)
            .filter(|(_, c)| c[0] != 0.0 || c[1] != 0.0)
            .map(|(i, c)| (i + 1, c[0], c[1]))
            .collect();
        Self {
            duration,
            a: coords[0],
            b: coords[1],
            higher,
        }
    }

    pub fn is_admissible(&self) -> bool {
        self.higher.is_empty()
    }

    pub fn profile(&self, grid: TorusGrid) -> SpectralField {
        let mut terms = vec![(1, self.a, self.b)];
        terms.extend(self.higher.iter().filter(|(k, _, _)| *k <= grid.cutoff()));
        SpectralField::trig(grid, &terms)
    }

    /// `sup_x |η|` bound by the sum of coefficient magnitudes.
    pub fn amplitude(&self) -> f64 {
        self.a.hypot(self.b) + self.higher.iter().map(|(_, a, b)| a.hypot(*b)).sum::<f64>()
    }
}

/// Ordered list of constant control pieces.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ControlSchedule {
    pub segments: Vec<ControlSegment>,
}

impl ControlSchedule {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single(segment: ControlSegment) -> Self {
        Self {
            segments: vec![segment],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    /// True when every piece acts on `sin x` and `cos x` only.
    pub fn admissible(&self) -> bool {
        self.segments.iter().all(ControlSegment::is_admissible)
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn max_amplitude(&self) -> f64 {
        self.segments
            .iter()
            .map(ControlSegment::amplitude)
            .fold(0.0, f64::max)
    }

    /// `self` followed by `other`.
    pub fn concatenate(&self, other: &ControlSchedule) -> ControlSchedule {
        let mut out = self.clone();
        out.append(other.clone());
        out
    }

    pub fn append(&mut self, other: ControlSchedule) {
        self.segments.extend(other.segments);
    }

    pub fn push(&mut self, segment: ControlSegment) {
        self.segments.push(segment);
    }

    /// Forcing on `grid`; `None` for the empty schedule.
    pub fn to_forcing(&self, grid: TorusGrid) -> Result<Option<ForcingInput>> {
        if self.is_empty() {
            return Ok(None);
        }
        let segments = self
            .segments
            .iter()
            .map(|s| ForcingSegment {
                duration: s.duration,
                profile: s.profile(grid),
            })
            .collect();
        ForcingInput::piecewise(segments).map(Some)
    }

    /// State reached from `u0` at the end of the schedule.
    pub fn run(&self, solver: &Solver, u0: &SpectralField) -> Result<SpectralField> {
        match self.to_forcing(u0.grid())? {
            None => Ok(u0.clone()),
            Some(f) => solver.final_state(u0, &f, f.duration()),
        }
    }

    /// Check every segment, reporting the first bad one by index.
    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.segments.iter().enumerate() {
            let finite = s.a.is_finite()
                && s.b.is_finite()
                && s.higher
                    .iter()
                    .all(|(_, a, b)| a.is_finite() && b.is_finite());
            if !(s.duration > 0.0 && s.duration.is_finite()) || !finite {
                return Err(Error::Parse {
                    message: format!(
                        "segment {i}: duration must be positive and coefficients finite"
                    ),
                    segment: Some(i),
                });
            }
            if s.higher.iter().any(|(k, _, _)| *k < 2) {
                return Err(Error::Parse {
                    message: format!("segment {i}: extra modes must have k >= 2"),
                    segment: Some(i),
                });
            }
        }
        Ok(())
    }
}

/// Outcome of a plan, measured by an independent solve at refined steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub achieved_error: f64,
    pub requested_epsilon: f64,
    pub total_time: f64,
    pub segment_count: usize,
    pub max_amplitude: f64,
    pub recursion_depth: usize,
    pub admissible: bool,
    /// Refined-step states at `t = 0` and after every segment.
    #[serde(skip)]
    pub checkpoints: Trajectory,
}

impl PlanReport {
    pub fn succeeded(&self) -> bool {
        self.achieved_error < self.requested_epsilon
    }
}

/// Re-run `schedule` from `u0` with halved step limits and report the
/// distance to `u1`.
pub fn verify(
    solver: &Solver,
    schedule: &ControlSchedule,
    u0: &SpectralField,
    u1: &SpectralField,
    epsilon: f64,
    depth: usize,
) -> Result<PlanReport> {
    let checkpoints = match schedule.to_forcing(u0.grid())? {
        Some(f) => solver.refined().solve_pieces(u0, &f, f.duration())?,
        None => Trajectory::starting_at(u0),
    };
    Ok(PlanReport {
        achieved_error: checkpoints.final_state().distance(u1),
        requested_epsilon: epsilon,
        total_time: schedule.total_duration(),
        segment_count: schedule.len(),
        max_amplitude: schedule.max_amplitude(),
        recursion_depth: depth,
        admissible: schedule.admissible(),
        checkpoints,
    })
}

/// Schedule file: segments plus the run manifest that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFile {
    pub segments: ControlSchedule,
    #[serde(default)]
    pub manifest: serde_json::Value,
}

impl ScheduleFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: ScheduleFile = serde_json::from_str(text).map_err(|e| {
            let segment = locate_segment(text, e.line(), e.column());
            Error::Parse {
                message: e.to_string(),
                segment,
            }
        })?;
        file.segments.validate()?;
        Ok(file)
    }
}

/// Best-effort index of the segment enclosing a JSON error position: counts
/// objects opened inside the `segments` array before that point.
fn locate_segment(text: &str, line: usize, column: usize) -> Option<usize> {
    let offset: usize = text
        .lines()
        .take(line.saturating_sub(1))
        .map(|l| l.len() + 1)
        .sum::<usize>()
        + column;
    let head = &text[..offset.min(text.len())];
    let start = head.find("\"segments\"")?;
    let body = &head[start..];
    let mut depth = 0i32;
    let mut count = 0usize;
    for ch in body.chars() {
        match ch {
            '[' | '{' => {
                depth += 1;
                if ch == '{' && depth == 2 {
                    count += 1;
                }
            }
            ']' | '}' => depth -= 1,
            _ => {}
        }
    }
    count.checked_sub(1)
}
