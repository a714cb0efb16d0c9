use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::spectral::{SobolevIndex, SpectralField};

/// Scalar diagnostics of one stored state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `[u] = û(0)`
    pub mass: f64,
    /// `∫ u² dx`
    pub momentum: f64,
    pub h_half: f64,
    pub h_one: f64,
    /// Accumulated `2 ∫₀ᵗ ∫ u η dx dt` of the integrated variable.
    pub forcing_work: f64,
}

impl Diagnostics {
    pub fn of(u: &SpectralField, forcing_work: f64) -> Self {
        Self {
            mass: u.mean(),
            momentum: u.momentum(),
            h_half: u.sobolev_norm(SobolevIndex::new(0.5).expect("valid index")),
            h_one: u.sobolev_norm(SobolevIndex::H1),
            forcing_work,
        }
    }
}

/// Stored snapshots of a numerical solution.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
    pub diagnostics: Vec<Diagnostics>,
}

impl Trajectory {
    pub(crate) fn new() -> Self {
        Self {
            times: Vec::new(),
            states: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    /// The one-state trajectory `{(0, u0)}`.
    pub fn starting_at(u0: &SpectralField) -> Self {
        let mut traj = Self::new();
        traj.push(0.0, u0.clone(), 0.0);
        traj
    }

    pub(crate) fn push(&mut self, t: f64, state: SpectralField, forcing_work: f64) {
        if let Some(&last) = self.times.last() {
            if t <= last {
                return;
            }
        }
        self.diagnostics.push(Diagnostics::of(&state, forcing_work));
        self.times.push(t);
        self.states.push(state);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &SpectralField {
        self.states
            .last()
            .expect("trajectory holds at least the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self
            .times
            .last()
            .expect("trajectory holds at least the initial state")
    }

    /// Every state translated by `-offset`, diagnostics recomputed. The
    /// forcing work column is carried over unchanged.
    pub fn shifted(&self, offset: &SpectralField) -> Self {
        let states: Vec<SpectralField> = self.states.iter().map(|s| s - offset).collect();
        let diagnostics = states
            .iter()
            .zip(&self.diagnostics)
            .map(|(s, d)| Diagnostics::of(s, d.forcing_work))
            .collect();
        Self {
            times: self.times.clone(),
            states,
            diagnostics,
        }
    }

    /// CSV with header `time,mass,momentum,h_half,h_one,forcing_work`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "time,mass,momentum,h_half,h_one,forcing_work")?;
        for (t, d) in self.times.iter().zip(&self.diagnostics) {
            writeln!(
                out,
                "{t:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                d.mass, d.momentum, d.h_half, d.h_one, d.forcing_work
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}
