// Solve the unforced equation and watch the conserved quantities.

use bo_control::solver::{ForcingInput, IntegratorConfig, Solver};
use bo_control::spectral::{SpectralField, TorusGrid};

pub fn run_example() -> bo_control::Result<()> {
    let grid = TorusGrid::new(32)?;
    let u0 = SpectralField::trig(grid, &[(1, 0.4, -0.2), (3, 0.1, 0.0)]);
    let solver = Solver::new(IntegratorConfig::default())?;
    let t_final = 2.0;
    let traj = solver.solve(&u0, &ForcingInput::zero(grid, t_final)?, t_final)?;

    println!("{:>6} {:>12} {:>14} {:>10}", "t", "mass", "momentum", "H1");
    for (t, d) in traj
        .times
        .iter()
        .zip(&traj.diagnostics)
        .step_by((traj.len() / 8).max(1))
    {
        println!(
            "{t:>6.2} {:>12.2e} {:>14.10} {:>10.6}",
            d.mass, d.momentum, d.h_one
        );
    }
    let drift = (traj.diagnostics.last().unwrap().momentum - u0.momentum()).abs() / u0.momentum();
    println!("relative momentum drift {drift:.2e}");
    assert!(drift < 1e-8);

    let check = solver.self_check(&u0, &ForcingInput::zero(grid, t_final)?, t_final)?;
    println!(
        "half-step self check: difference {:.2e}, passed {}",
        check.difference, check.passed
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> bo_control::Result<()> {
    run_example()
}
