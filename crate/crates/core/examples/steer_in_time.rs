// Same steering problem, but the schedule must last exactly `T`.

use bo_control::spectral::{SpectralField, TorusGrid};
use bo_control::synthesis::{Planner, PlannerConfig};

pub fn run_example() -> bo_control::Result<()> {
    let grid = TorusGrid::new(8)?;
    let planner = Planner::new(grid, PlannerConfig::default())?;
    let u0 = SpectralField::sin(grid, 1, 0.3);
    let u1 = SpectralField::zeros(grid);

    for horizon in [1.0, 2.5] {
        let (schedule, report) = planner.steer_in_time(&u0, &u1, horizon, 0.05, grid.cutoff())?;
        println!(
            "T = {horizon}: duration {}, {} segments, error {:.4}",
            schedule.total_duration(),
            schedule.len(),
            report.achieved_error
        );
        assert_eq!(schedule.total_duration(), horizon);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> bo_control::Result<()> {
    run_example()
}
