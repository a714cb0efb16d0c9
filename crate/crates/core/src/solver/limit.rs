use super::{ForcingInput, Solver};
use crate::error::{Error, Result};
use crate::spectral::SpectralField;

/// `u0 + t (η - ζ∂ₓζ)`: the flow reached by `δ⁻¹η`, `δ^{-1/2}ζ` as `δ → 0`.
pub fn limit_flow(
    u0: &SpectralField,
    eta: &SpectralField,
    zeta: &SpectralField,
    t: f64,
) -> Result<SpectralField> {
    let drift = zeta.dealiased_product(&zeta.derivative())?;
    Ok(u0.axpy(t, &(eta - &drift)))
}

/// `‖R_δ(u0, δ^{-1/2}ζ, δ⁻¹η) - (u0 + η - ζ∂ₓζ)‖` for each `δ`.
pub fn asymptotic_limit_check(
    solver: &Solver,
    u0: &SpectralField,
    eta: &SpectralField,
    zeta: &SpectralField,
    deltas: &[f64],
) -> Result<Vec<f64>> {
    if deltas.iter().any(|&d| !(d > 0.0)) || deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidConfig(
            "delta sequence must be positive and strictly decreasing".into(),
        ));
    }
    let target = limit_flow(u0, eta, zeta, 1.0)?;
    deltas
        .iter()
        .map(|&delta| {
            let forcing = ForcingInput::constant(eta.scale(1.0 / delta), delta)?;
            let state =
                solver.final_state_shifted(u0, &zeta.scale(delta.powf(-0.5)), &forcing, delta)?;
            Ok(state.distance(&target))
        })
        .collect()
}
