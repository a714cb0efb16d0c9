use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{bilinear_drift, ModeSpan, MEMBERSHIP_TOLERANCE};
use crate::error::{Error, Result};
use crate::spectral::SpectralField;

/// Singular values below this fraction of the largest are treated as zero.
const RANK_CUTOFF: f64 = 1e-10;

/// A target direction written as `η - Σᵢ ζᵢ ∂ₓζᵢ` with `η`, `ζᵢ` in the
/// source span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionDecomposition {
    /// Ladder level of the target; `η` and the `ζᵢ` live one level below.
    pub level: usize,
    pub eta: SpectralField,
    pub zetas: Vec<SpectralField>,
    pub target: SpectralField,
}

impl DirectionDecomposition {
    /// `η - Σ ζᵢ∂ₓζᵢ`.
    pub fn reconstruct(&self) -> Result<SpectralField> {
        let mut out = self.eta.clone();
        for z in &self.zetas {
            out -= &bilinear_drift(z, z)?;
        }
        Ok(out)
    }

    /// `‖reconstruct() - target‖`, in `L²`.
    pub fn reconstruction_error(&self) -> Result<f64> {
        Ok(self.reconstruct()?.distance(&self.target))
    }

    pub fn is_trivial(&self) -> bool {
        self.zetas.is_empty() && self.eta.l2_norm() == 0.0
    }
}

/// Write `target` as `η - Σ ζᵢ∂ₓζᵢ` with `η, ζᵢ ∈ source`.
///
/// The target is first fitted (minimum-norm least squares) by
/// `Σ βₐ eₐ - Σ_{a≤b} c_ab b(eₐ, e_b)` over the orthonormal source basis. The
/// symmetric coefficient matrix of the quadratic part is then diagonalized,
/// which is the polarization of the off-diagonal products into single
/// `ζ∂ₓζ` terms. Eigen-directions entering with a `+` sign are rewritten with
/// a minus sign through `f∂ₓf + (Hf)∂ₓ(Hf) = ½∂ₓ|f + iHf|²`, whose right
/// side only contains difference frequencies and is absorbed into `η`; if
/// that fails, the translation average `Σₘ f(x - 2πm/M)∂ₓf(x - 2πm/M) = 0`
/// is used instead. All terms are finally merged into at most `dim(source)`
/// mutually orthogonal `ζᵢ`, and `η` is recomputed exactly.
pub fn decompose_direction(
    target: &SpectralField,
    source: &ModeSpan,
) -> Result<DirectionDecomposition> {
    let grid = source.grid();
    if target.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let level = source.level() + 1;
    let basis = source.basis_fields();
    let n = basis.len();
    let rows = 2 * grid.cutoff();

    let mut pairs = Vec::with_capacity(n * (n + 1) / 2);
    let mut columns: Vec<Vec<f64>> = basis.iter().map(|e| e.trig_coords()).collect();
    for a in 0..n {
        for b in a..n {
            pairs.push((a, b));
            columns.push((-&bilinear_drift(&basis[a], &basis[b])?).trig_coords());
        }
    }
    let dictionary = DMatrix::from_fn(rows, columns.len(), |i, j| columns[j][i]);
    let rhs = DVector::from_vec(target.trig_coords());
    let scale = rhs.norm();
    let tol = MEMBERSHIP_TOLERANCE * scale.max(1.0);
    if scale == 0.0 {
        return Ok(DirectionDecomposition {
            level,
            eta: SpectralField::zeros(grid),
            zetas: Vec::new(),
            target: target.clone(),
        });
    }

    let svd = dictionary.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let coeffs = svd
        .solve(&rhs, RANK_CUTOFF * sigma_max)
        .map_err(|_| Error::NotInSpan {
            residual: f64::INFINITY,
        })?;
    let residual = (&dictionary * &coeffs - &rhs).norm();
    if residual > tol {
        return Err(Error::NotInSpan { residual });
    }

    // Quadratic part Σ S_ab b(eₐ, e_b) as a symmetric matrix.
    let mut quad = DMatrix::<f64>::zeros(n, n);
    for (&(a, b), c) in pairs.iter().zip(coeffs.iter().skip(n)) {
        if a == b {
            quad[(a, a)] += c;
        } else {
            quad[(a, b)] += c / 2.0;
            quad[(b, a)] += c / 2.0;
        }
    }
    let eig = SymmetricEigen::new(quad);
    let lambda_max = eig.eigenvalues.amax();
    let negligible = 1e-14 * lambda_max.max(1.0);

    // Gram matrix Σ ζζᵀ of the minus-signed terms, in source coordinates.
    let mut gram = DMatrix::<f64>::zeros(n, n);
    let mut flipped = Vec::new();
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(i).into_owned();
        if lambda > negligible {
            gram += &v * v.transpose() * lambda;
        } else if lambda < -negligible {
            flipped.push((lambda.abs(), v));
        }
    }

    if !flipped.is_empty() {
        let conj = hilbert_matrix(source, &basis);
        let attempt = conj.as_ref().and_then(|h| {
            let mut g = gram.clone();
            for (w, v) in &flipped {
                let hv = h * v;
                g += &hv * hv.transpose() * *w;
            }
            finish(target, source, level, &g, tol).ok()
        });
        match attempt {
            Some(dec) => return Ok(dec),
            None => {
                for (w, v) in &flipped {
                    for sv in translation_copies(source, v)? {
                        gram += &sv * sv.transpose() * *w;
                    }
                }
            }
        }
    }
    finish(target, source, level, &gram, tol)
}

/// Turn a Gram matrix of minus-signed terms into explicit `ζᵢ` and the
/// matching `η`.
fn finish(
    target: &SpectralField,
    source: &ModeSpan,
    level: usize,
    gram: &DMatrix<f64>,
    tol: f64,
) -> Result<DirectionDecomposition> {
    let eig = SymmetricEigen::new(gram.clone());
    let mu_max = eig.eigenvalues.amax();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut zetas = Vec::new();
    for i in order {
        let mu = eig.eigenvalues[i];
        if mu <= 1e-14 * mu_max.max(1.0) {
            continue;
        }
        let mut v: Vec<f64> = eig
            .eigenvectors
            .column(i)
            .iter()
            .map(|x| x * mu.sqrt())
            .collect();
        // fix the sign so identical inputs give identical output
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        zetas.push(source.combine(&v));
    }

    let mut eta = target.clone();
    for z in &zetas {
        eta += &bilinear_drift(z, z)?;
    }
    let off_span = source.residual(&eta);
    if off_span > tol {
        return Err(Error::NotInSpan { residual: off_span });
    }
    let dec = DirectionDecomposition {
        level,
        eta: source.project(&eta),
        zetas,
        target: target.clone(),
    };
    let err = dec.reconstruction_error()?;
    if err > tol * std::f64::consts::PI.sqrt() {
        return Err(Error::NotInSpan { residual: err });
    }
    Ok(dec)
}

/// Matrix of the Hilbert transform in source coordinates, when the source is
/// invariant under it.
fn hilbert_matrix(source: &ModeSpan, basis: &[SpectralField]) -> Option<DMatrix<f64>> {
    let n = basis.len();
    let mut h = DMatrix::<f64>::zeros(n, n);
    for (j, e) in basis.iter().enumerate() {
        let he = e.hilbert_transform();
        if source.residual(&he) > MEMBERSHIP_TOLERANCE {
            return None;
        }
        for (i, c) in source.coordinates(&he).into_iter().enumerate() {
            h[(i, j)] = c;
        }
    }
    Some(h)
}

/// Copies of `v` translated by `2πm/M`, `m = 1..M-1`, with `M` the smallest
/// integer dividing no frequency of `v∂ₓv`. Their drifts sum to `-v∂ₓv`.
fn translation_copies(source: &ModeSpan, v: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
    let field = source.combine(v.as_slice());
    let drift = bilinear_drift(&field, &field)?;
    let modes: Vec<usize> = (1..=drift.cutoff())
        .filter(|&k| drift.coeff(k as i64).norm() > 1e-14 * drift.l2_norm().max(1e-300))
        .collect();
    let m = (2..)
        .find(|m| modes.iter().all(|k| k % m != 0))
        .expect("some M exists");
    (1..m)
        .map(|i| {
            let shifted = field.galilean_shift(2.0 * std::f64::consts::PI * i as f64 / m as f64);
            if source.residual(&shifted) > MEMBERSHIP_TOLERANCE {
                return Err(Error::NotInSpan {
                    residual: source.residual(&shifted),
                });
            }
            Ok(DVector::from_vec(source.coordinates(&shifted)))
        })
        .collect()
}
