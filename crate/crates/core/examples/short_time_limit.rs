// A large, fast-oscillating control acts like the drift `-ζ ∂ₓζ` plus `η`.

use bo_control::solver::{asymptotic_limit_check, limit_flow, IntegratorConfig, Solver};
use bo_control::spectral::{SpectralField, TorusGrid};

pub fn run_example() -> bo_control::Result<()> {
    let grid = TorusGrid::new(8)?;
    let u0 = SpectralField::zeros(grid);
    let eta = SpectralField::sin(grid, 1, 1.0);
    let zeta = SpectralField::cos(grid, 1, 1.0);

    // At t = 1 the limit is sin x + ½ sin 2x.
    let limit = limit_flow(&u0, &eta, &zeta, 1.0)?;
    println!("limit coefficients {:?}", &limit.trig_coords()[..4]);

    let solver = Solver::new(IntegratorConfig::default())?;
    let deltas = [0.2, 0.1, 0.05, 0.025];
    let errors = asymptotic_limit_check(&solver, &u0, &eta, &zeta, &deltas)?;
    for (d, e) in deltas.iter().zip(&errors) {
        println!("delta {d:<6} error {e:.4}");
    }
    assert!(errors.windows(2).all(|w| w[1] < w[0]));
    Ok(())
}

#[allow(dead_code)]
fn main() -> bo_control::Result<()> {
    run_example()
}
