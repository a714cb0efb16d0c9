// Each ladder level doubles the band of reachable directions.

use bo_control::saturation::{
    certificate_csv, decompose_direction, saturation_certificate, Ladder,
};
use bo_control::spectral::{SpectralField, TorusGrid};

pub fn run_example() -> bo_control::Result<()> {
    let rows = saturation_certificate(12, 6)?;
    print!("{}", certificate_csv(&rows));

    // Split a level-1 direction into a level-0 part and drift terms.
    let grid = TorusGrid::new(8)?;
    let ladder = Ladder::build(grid, 3);
    let target = SpectralField::trig(grid, &[(1, 0.3, 0.0), (2, -0.5, 0.25)]);
    let level = ladder
        .lowest_containing(&target, 1e-10)
        .expect("inside the ladder");
    let parts = decompose_direction(&target, ladder.level(level - 1)?)?;
    println!(
        "level {level}: eta {:?}, {} drift terms, reconstruction error {:.1e}",
        &parts.eta.trig_coords()[..2],
        parts.zetas.len(),
        parts.reconstruction_error()?
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> bo_control::Result<()> {
    run_example()
}
