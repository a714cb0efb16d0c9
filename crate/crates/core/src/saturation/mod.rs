//! The subspace ladder `H₀ ⊂ H₁ ⊂ …` generated from `H₀ = span{sin x, cos x}`
//! by the quadratic drift of the equation, `Hⱼ = span{η - Σ ζᵢ∂ₓζᵢ : η, ζᵢ ∈ Hⱼ₋₁}`.
//!
//! Spans are stored as orthonormal vectors in the coordinates of the real
//! trigonometric basis `{sin kx, cos kx : 1 ≤ k ≤ K}`; the Euclidean inner
//! product there is the `L²` inner product divided by `π`.

mod decompose;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{SpectralField, TorusGrid};

pub use decompose::{decompose_direction, DirectionDecomposition};

/// Residual below which a vector counts as a member of a span.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-8;

/// Relative size below which transform round-off is treated as zero.
const CHOP: f64 = 1e-13;

/// `b(f, g) = ½ ∂ₓ(fg)`, so that `b(f, f) = f ∂ₓ f`.
pub fn bilinear_drift(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    let cutoff = f.cutoff();
    let top = f.max_mode(CHOP * f.l2_norm()) + g.max_mode(CHOP * g.l2_norm());
    if top > cutoff {
        return Err(Error::CutoffOverflow { mode: top, cutoff });
    }
    let mut out = f.dealiased_product(g)?.derivative().scale(0.5);
    out.symmetrize();
    let scale = out.l2_norm();
    out.chop(CHOP * scale);
    Ok(out)
}

/// Finite-dimensional span of mean-zero trigonometric polynomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpan {
    grid: TorusGrid,
    level: usize,
    basis: Vec<Vec<f64>>,
}

impl ModeSpan {
    /// `H₀ = span{sin x, cos x}`.
    pub fn level_zero(grid: TorusGrid) -> Self {
        let n = 2 * grid.cutoff();
        let mut s = vec![0.0; n];
        let mut c = vec![0.0; n];
        s[0] = 1.0;
        c[1] = 1.0;
        Self {
            grid,
            level: 0,
            basis: vec![s, c],
        }
    }

    /// Orthonormalize `generators` (modified Gram–Schmidt, two passes) and
    /// drop those already in the span.
    pub fn from_generators(grid: TorusGrid, level: usize, generators: &[SpectralField]) -> Self {
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for g in generators {
            let mut v = g.trig_coords();
            let norm0 = norm(&v);
            if norm0 == 0.0 {
                continue;
            }
            for _ in 0..2 {
                for b in &basis {
                    let p = dot(&v, b);
                    v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
                }
            }
            let r = norm(&v);
            if r > MEMBERSHIP_TOLERANCE * norm0.max(1.0) {
                v.iter_mut().for_each(|x| {
                    *x /= r;
                    if x.abs() < CHOP {
                        *x = 0.0;
                    }
                });
                basis.push(v);
            }
        }
        Self { grid, level, basis }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Orthonormal basis vectors in trig coordinates.
    pub fn basis_coords(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn basis_fields(&self) -> Vec<SpectralField> {
        self.basis
            .iter()
            .map(|v| SpectralField::from_trig_coords(self.grid, v))
            .collect()
    }

    /// Coordinates of the orthogonal projection on the basis.
    pub fn coordinates(&self, f: &SpectralField) -> Vec<f64> {
        let v = f.trig_coords();
        self.basis.iter().map(|b| dot(&v, b)).collect()
    }

    pub fn combine(&self, coords: &[f64]) -> SpectralField {
        let mut v = vec![0.0; 2 * self.grid.cutoff()];
        for (c, b) in coords.iter().zip(&self.basis) {
            v.iter_mut().zip(b).for_each(|(x, y)| *x += c * y);
        }
        SpectralField::from_trig_coords(self.grid, &v)
    }

    pub fn project(&self, f: &SpectralField) -> SpectralField {
        self.combine(&self.coordinates(f))
    }

    /// Trig-coordinate norm of the component of `f` orthogonal to the span.
    pub fn residual(&self, f: &SpectralField) -> f64 {
        let mut v = f.trig_coords();
        for _ in 0..2 {
            for b in &self.basis {
                let p = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        norm(&v)
    }

    pub fn contains(&self, f: &SpectralField, tol: f64) -> bool {
        self.residual(f) <= tol
    }

    /// Highest wavenumber present in any basis vector.
    pub fn max_mode(&self) -> usize {
        self.basis
            .iter()
            .flat_map(|v| {
                v.chunks_exact(2)
                    .enumerate()
                    .filter(|(_, ab)| ab[0] != 0.0 || ab[1] != 0.0)
            })
            .map(|(i, _)| i + 1)
            .max()
            .unwrap_or(0)
    }

    /// Largest `m` with `sin kx, cos kx` in the span for every `k ≤ m`.
    pub fn modes_covered(&self, tol: f64) -> usize {
        (1..=self.grid.cutoff())
            .take_while(|&k| {
                self.contains(&SpectralField::sin(self.grid, k, 1.0), tol)
                    && self.contains(&SpectralField::cos(self.grid, k, 1.0), tol)
            })
            .count()
    }

    /// Whether every basis vector of `other` lies in this span.
    pub fn includes(&self, other: &ModeSpan, tol: f64) -> bool {
        other.basis_fields().iter().all(|f| self.contains(f, tol))
    }
}

/// `Hⱼ` from `Hⱼ₋₁`: the span of the old basis and every `b(e_a, e_b)`.
pub fn ladder_step(span: &ModeSpan) -> Result<ModeSpan> {
    let cutoff = span.grid.cutoff();
    let top = 2 * span.max_mode();
    if top > cutoff {
        return Err(Error::CutoffOverflow { mode: top, cutoff });
    }
    let fields = span.basis_fields();
    let mut generators = fields.clone();
    for a in 0..fields.len() {
        for b in a..fields.len() {
            generators.push(bilinear_drift(&fields[a], &fields[b])?);
        }
    }
    Ok(ModeSpan::from_generators(
        span.grid,
        span.level + 1,
        &generators,
    ))
}

/// Levels `H₀, …, H_L` of the ladder on one grid.
#[derive(Debug, Clone)]
pub struct Ladder {
    levels: Vec<ModeSpan>,
}

impl Ladder {
    /// Build up to `max_level`, stopping early when the next level would
    /// overflow the grid cutoff or when the dimension stops growing.
    pub fn build(grid: TorusGrid, max_level: usize) -> Self {
        let mut levels = vec![ModeSpan::level_zero(grid)];
        while levels.len() <= max_level {
            let last = levels.last().expect("non-empty");
            match ladder_step(last) {
                Ok(next) if next.dim() > last.dim() => levels.push(next),
                _ => break,
            }
        }
        Self { levels }
    }

    pub fn height(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, j: usize) -> Result<&ModeSpan> {
        self.levels.get(j).ok_or(Error::RecursionLimit {
            depth: j,
            height: self.height(),
        })
    }

    pub fn levels(&self) -> &[ModeSpan] {
        &self.levels
    }

    /// Lowest level whose span holds `f` to within `tol` (trig coordinates).
    pub fn lowest_containing(&self, f: &SpectralField, tol: f64) -> Option<usize> {
        self.levels.iter().position(|l| l.contains(f, tol))
    }
}

/// One row of the saturation certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateRow {
    pub level: usize,
    pub dim: usize,
    pub modes_covered: usize,
}

/// Ladder dimensions and mode coverage for a target cutoff `K`.
///
/// The ladder is computed without truncation on a working grid whose
/// cutoff is the smallest power of two `≥ K` (at least 4), so no product
/// is ever cut off before coverage of `K` can be reached. `modes_covered`
/// is capped at `K`. Rows stop at `max_level`, at full coverage, when the
/// dimension stalls, or when the next level would overflow the working grid.
pub fn saturation_certificate(cutoff: usize, max_level: usize) -> Result<Vec<CertificateRow>> {
    if cutoff < 2 {
        return Err(Error::InvalidGrid(format!(
            "certificate cutoff {cutoff} below 2"
        )));
    }
    let working = cutoff.next_power_of_two().max(TorusGrid::MIN_CUTOFF);
    let grid = TorusGrid::new(working)?;
    let mut span = ModeSpan::level_zero(grid);
    let row = |s: &ModeSpan| CertificateRow {
        level: s.level(),
        dim: s.dim(),
        modes_covered: s.modes_covered(MEMBERSHIP_TOLERANCE).min(cutoff),
    };
    let mut rows = vec![row(&span)];
    while span.level() < max_level && rows.last().is_none_or(|r| r.modes_covered < cutoff) {
        let next = match ladder_step(&span) {
            Ok(next) => next,
            Err(Error::CutoffOverflow { .. }) => break,
            Err(e) => return Err(e),
        };
        let stalled = next.dim() == span.dim();
        rows.push(row(&next));
        span = next;
        if stalled {
            break;
        }
    }
    Ok(rows)
}

/// CSV table `j,dim,modes_covered`.
pub fn certificate_csv(rows: &[CertificateRow]) -> String {
    let mut out = String::from("j,dim,modes_covered\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.level, r.dim, r.modes_covered));
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Projection;
    use proptest::prelude::*;

    fn grid() -> TorusGrid {
        TorusGrid::new(8).unwrap()
    }

    #[test]
    fn drift_examples() {
        let g = grid();
        let s = SpectralField::sin(g, 1, 1.0);
        let c = SpectralField::cos(g, 1, 1.0);
        let b = |f: &SpectralField, h: &SpectralField| bilinear_drift(f, h).unwrap();
        assert!(b(&s, &s).distance(&SpectralField::sin(g, 2, 0.5)) < 1e-15);
        assert!(b(&c, &c).distance(&SpectralField::sin(g, 2, -0.5)) < 1e-15);
        assert!(b(&s, &c).distance(&SpectralField::cos(g, 2, 0.5)) < 1e-15);
    }

    #[test]
    fn drift_overflow() {
        let g = grid();
        let f = SpectralField::sin(g, 5, 1.0);
        assert!(matches!(
            bilinear_drift(&f, &f),
            Err(Error::CutoffOverflow {
                mode: 10,
                cutoff: 8
            })
        ));
    }

    #[test]
    fn level_zero_is_first_mode() {
        let h0 = ModeSpan::level_zero(grid());
        assert_eq!(h0.dim(), 2);
        assert_eq!(h0.max_mode(), 1);
        assert_eq!(h0.modes_covered(MEMBERSHIP_TOLERANCE), 1);
        assert!(h0.contains(&SpectralField::trig(grid(), &[(1, 0.3, -2.0)]), 1e-15));
        assert!(!h0.contains(&SpectralField::sin(grid(), 2, 1.0), 1e-3));
    }

    #[test]
    fn first_step_adds_second_mode() {
        let h0 = ModeSpan::level_zero(grid());
        let h1 = ladder_step(&h0).unwrap();
        assert_eq!(h1.dim(), 4);
        assert_eq!(h1.level(), 1);
        assert!(h1.contains(&SpectralField::sin(grid(), 2, 1.0), 1e-12));
        assert!(h1.contains(&SpectralField::cos(grid(), 2, 1.0), 1e-12));
        assert!(h1.includes(&h0, 1e-10));
    }

    #[test]
    fn ladder_monotone_and_orthonormal() {
        let ladder = Ladder::build(TorusGrid::new(16).unwrap(), 10);
        assert_eq!(ladder.height(), 4);
        for pair in ladder.levels().windows(2) {
            assert!(pair[1].dim() >= pair[0].dim());
            assert!(pair[1].includes(&pair[0], 1e-10));
        }
        for span in ladder.levels() {
            let b = span.basis_coords();
            for i in 0..b.len() {
                for j in 0..b.len() {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((dot(&b[i], &b[j]) - expected).abs() < 1e-10);
                }
            }
            for f in span.basis_fields() {
                assert!(f.mean().abs() < 1e-15);
            }
        }
        assert_eq!(ladder.levels()[4].modes_covered(MEMBERSHIP_TOLERANCE), 16);
    }

    #[test]
    fn ladder_step_overflow() {
        let g = TorusGrid::new(5).unwrap();
        let h2 = ladder_step(&ladder_step(&ModeSpan::level_zero(g)).unwrap()).unwrap();
        assert!(matches!(
            ladder_step(&h2),
            Err(Error::CutoffOverflow { mode: 8, cutoff: 5 })
        ));
    }

    #[test]
    fn certificate_rows() {
        let rows = saturation_certificate(5, 5).unwrap();
        assert_eq!(
            rows[0],
            CertificateRow {
                level: 0,
                dim: 2,
                modes_covered: 1
            }
        );
        assert!(rows.windows(2).all(|w| w[1].dim >= w[0].dim));
        let last = rows.last().unwrap();
        assert_eq!(last.modes_covered, 5);
        assert!(last.level <= 5);

        assert_eq!(
            saturation_certificate(2, 0).unwrap(),
            vec![CertificateRow {
                level: 0,
                dim: 2,
                modes_covered: 1
            }]
        );
        let k3 = saturation_certificate(3, 3).unwrap();
        assert!(k3.iter().any(|r| r.modes_covered == 3 && r.level <= 3));
        assert!(saturation_certificate(1, 3).is_err());
        assert!(certificate_csv(&rows).starts_with("j,dim,modes_covered\n0,2,1\n"));
    }

    proptest! {
        #[test]
        fn drift_symmetric_and_diagonal(
            a in proptest::collection::vec(-2.0f64..2.0, 8),
            b in proptest::collection::vec(-2.0f64..2.0, 8),
        ) {
            let g = grid();
            let pad = |v: &[f64]| { let mut w = v.to_vec(); w.resize(16, 0.0); SpectralField::from_trig_coords(g, &w) };
            let f = pad(&a);
            let h = pad(&b);
            prop_assert_eq!(bilinear_drift(&f, &h).unwrap(), bilinear_drift(&h, &f).unwrap());
            let diag = bilinear_drift(&f, &f).unwrap();
            let direct = f.dealiased_product(&f.derivative()).unwrap();
            prop_assert!(diag.distance(&direct) <= 1e-12 * direct.l2_norm().max(1.0));
            prop_assert!(diag.project(Projection::Mean).l2_norm() == 0.0);
        }
    }
}
