//! Horizontal submanifolds of the Heisenberg group `ℍⁿ`.
//!
//! A horizontal tangent frame is given by the matrices `α`, `β` (`m × n`)
//! with `E_j = Σ_i α_ji X_i + β_ji Y_i`. Controls are the horizontal
//! components `g_1..g_{2n}` of a normal field `V = Σ g_i X_i + g_{i+n} Y_i + f T`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::{numeric_rank, sorted_singular_values};

fn check_shapes(alpha: &DMatrix<f64>, beta: &DMatrix<f64>) -> Result<()> {
    if alpha.shape() != beta.shape() {
        return Err(Error::DimensionMismatch {
            expected: alpha.ncols(),
            found: beta.ncols(),
        });
    }
    Ok(())
}

/// Fails unless `(α | β)` has rank `m`.
pub fn check_full_rank(alpha: &DMatrix<f64>, beta: &DMatrix<f64>) -> Result<()> {
    check_shapes(alpha, beta)?;
    let (m, n) = alpha.shape();
    let mut ab = DMatrix::zeros(m, 2 * n);
    ab.columns_mut(0, n).copy_from(alpha);
    ab.columns_mut(n, n).copy_from(beta);
    let rank = numeric_rank(&sorted_singular_values(&ab), 1e-12);
    if rank < m {
        return Err(Error::RankDeficient { rank, expected: m });
    }
    Ok(())
}

/// `max_{j,ν} |Σ_i α_ji β_νi - β_ji α_νi|`, zero for horizontal frames.
pub fn horizontality_residual(alpha: &DMatrix<f64>, beta: &DMatrix<f64>) -> Result<f64> {
    check_full_rank(alpha, beta)?;
    let s = alpha * beta.transpose() - beta * alpha.transpose();
    Ok(s.amax())
}

/// Right-hand side `E_j(f) = Σ_i β_ji g_i - α_ji g_{i+n}` of the admissibility
/// system for the vertical component.
pub fn vertical_rhs(alpha: &DMatrix<f64>, beta: &DMatrix<f64>, g: &[f64]) -> Result<DVector<f64>> {
    check_shapes(alpha, beta)?;
    let n = alpha.ncols();
    if g.len() != 2 * n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            found: g.len(),
        });
    }
    let gx = DVector::from_column_slice(&g[..n]);
    let gy = DVector::from_column_slice(&g[n..]);
    Ok(beta * gx - alpha * gy)
}

/// Compatibility residuals `R_{jν}` of the admissibility system.
///
/// `dg` is `2n × 2n`: row `i` holds `(X_1..X_n, Y_1..Y_n)(g_i)`. The residual
/// is `Σ_i β_νi E_j(g_i) - β_ji E_ν(g_i) - α_νi E_j(g_{i+n}) + α_ji E_ν(g_{i+n})`
/// with `E_j(g) = Σ_k α_jk X_k(g) + β_jk Y_k(g)`, summed over all `i` and `k`.
pub fn compat_residual(alpha: &DMatrix<f64>, beta: &DMatrix<f64>, dg: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_shapes(alpha, beta)?;
    let (m, n) = alpha.shape();
    if dg.shape() != (2 * n, 2 * n) {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            found: dg.nrows(),
        });
    }
    let mut ab = DMatrix::zeros(m, 2 * n);
    ab.columns_mut(0, n).copy_from(alpha);
    ab.columns_mut(n, n).copy_from(beta);
    // eg[(j, i)] = E_j(g_i)
    let eg = &ab * dg.transpose();
    Ok(compat_from_tangential(alpha, beta, &eg))
}

/// Same residual from the derivatives `eg[(j, i)] = E_j(g_i)` directly.
pub fn compat_from_tangential(alpha: &DMatrix<f64>, beta: &DMatrix<f64>, eg: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = alpha.shape();
    DMatrix::from_fn(m, m, |j, nu| {
        (0..n)
            .map(|i| {
                beta[(nu, i)] * eg[(j, i)] - beta[(j, i)] * eg[(nu, i)]
                    - alpha[(nu, i)] * eg[(j, i + n)]
                    + alpha[(j, i)] * eg[(nu, i + n)]
            })
            .sum()
    })
}

/// Maximum compatibility residual over `points` for a flat chart on which
/// `E_j = ∂/∂u_j`, with `α`, `β` constant and `E_j(g)` by central
/// differences of step `h`.
pub fn compat_on_grid<G>(
    alpha: &DMatrix<f64>,
    beta: &DMatrix<f64>,
    controls: G,
    points: &[Vec<f64>],
    h: f64,
) -> Result<f64>
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    check_full_rank(alpha, beta)?;
    let (m, n) = alpha.shape();
    let mut worst: f64 = 0.0;
    for u in points {
        if u.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: u.len(),
            });
        }
        let mut eg = DMatrix::zeros(m, 2 * n);
        for j in 0..m {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[j] += h;
            dn[j] -= h;
            let (gp, gm) = (controls(&up), controls(&dn));
            for i in 0..2 * n {
                eg[(j, i)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        worst = worst.max(compat_from_tangential(alpha, beta, &eg).amax());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_plane_is_horizontal() {
        // In ℍ², E_1 = X_1 and E_2 = X_2.
        let alpha = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let beta = DMatrix::zeros(2, 2);
        assert_eq!(horizontality_residual(&alpha, &beta).unwrap(), 0.0);
        // E_1 = X_1, E_2 = Y_1 is not.
        let alpha = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let beta = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(horizontality_residual(&alpha, &beta).unwrap(), 1.0);
    }

    #[test]
    fn rank_deficient_frame() {
        let alpha = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        let beta = DMatrix::zeros(2, 2);
        assert!(matches!(
            horizontality_residual(&alpha, &beta),
            Err(Error::RankDeficient { rank: 1, expected: 2 })
        ));
    }

    #[test]
    fn curves_have_no_compatibility_conditions() {
        let alpha = DMatrix::from_row_slice(1, 1, &[0.6]);
        let beta = DMatrix::from_row_slice(1, 1, &[0.8]);
        let dg = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(compat_residual(&alpha, &beta, &dg).unwrap().amax(), 0.0);
    }

    #[test]
    fn residual_is_antisymmetric() {
        let alpha = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let beta = DMatrix::zeros(2, 2);
        let dg = DMatrix::from_fn(4, 4, |i, j| (i * 4 + j) as f64 * 0.1);
        let r = compat_residual(&alpha, &beta, &dg).unwrap();
        assert!((&r + r.transpose()).amax() < 1e-15);
    }

    #[test]
    fn vertical_equation() {
        let alpha = DMatrix::from_row_slice(1, 1, &[1.0]);
        let beta = DMatrix::from_row_slice(1, 1, &[0.0]);
        // E = X: E(f) = -g_2
        assert_eq!(vertical_rhs(&alpha, &beta, &[3.0, 5.0]).unwrap()[0], -5.0);
    }
}
