// Plan a two-mode control that carries one state close to another.

use bo_control::spectral::{SpectralField, TorusGrid};
use bo_control::synthesis::{Planner, PlannerConfig};

pub fn run_example() -> bo_control::Result<()> {
    let grid = TorusGrid::new(8)?;
    let planner = Planner::new(grid, PlannerConfig::default())?;
    let u0 = SpectralField::cos(grid, 1, 0.2);
    let u1 = SpectralField::sin(grid, 2, 0.4);

    let (schedule, report) = planner.steer(&u0, &u1, 0.05, grid.cutoff())?;
    println!(
        "{} segments over t = {:.3}, max amplitude {:.2}, error {:.4}",
        schedule.len(),
        report.total_time,
        report.max_amplitude,
        report.achieved_error
    );
    for seg in schedule.segments.iter().take(5) {
        println!(
            "  dt {:.2e}  a = {:+.3e}  b = {:+.3e}",
            seg.duration, seg.a, seg.b
        );
    }
    assert!(report.succeeded() && schedule.admissible());
    Ok(())
}

#[allow(dead_code)]
fn main() -> bo_control::Result<()> {
    run_example()
}
