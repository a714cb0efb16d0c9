// How soon does periodic random forcing push a small state out of a ball?

use bo_control::random_forcing::{ensemble_hitting, NoiseModel};
use bo_control::solver::{IntegratorConfig, Solver};
use bo_control::spectral::{SobolevIndex, SpectralField, TorusGrid};

pub fn run_example() -> bo_control::Result<()> {
    let grid = TorusGrid::new(8)?;
    let solver = Solver::new(IntegratorConfig::default())?;
    let u0 = SpectralField::sin(grid, 1, 0.1);
    let threshold = 2.0 * u0.sobolev_norm(SobolevIndex::H1);

    let summary = ensemble_hitting(
        &solver,
        &[u0],
        &NoiseModel::default(),
        threshold,
        5,
        40,
        SobolevIndex::H1,
        7,
    )?;
    let curve = &summary.curves[0];
    println!("threshold {threshold:.3}");
    for n in 0..curve.p_hat.len() {
        println!(
            "P(exit by period {}) = {:.3}  [{:.3}, {:.3}]",
            n + 1,
            curve.p_hat[n],
            curve.lower[n],
            curve.upper[n]
        );
    }
    assert!(curve.is_monotone());
    Ok(())
}

#[allow(dead_code)]
fn main() -> bo_control::Result<()> {
    run_example()
}
