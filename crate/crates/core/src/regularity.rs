//! Linear fullness of `Ã = DA`, regularity verdicts and certificates of
//! singularity `Λ = ΓD` with `ΛA = 0`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::admissibility::AdmissibilitySystem;
use crate::error::Result;
use crate::numerics::{cumulative_simpson_fine, derivative4_vec, numeric_rank};

pub const DEFAULT_TOL_RANK: f64 = 1e-8;
pub const DEFAULT_TOL_CERT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Regular,
    Singular,
}

/// Rank data at one slice point.
#[derive(Debug, Clone, Serialize)]
pub struct PointRank {
    pub xhat: Vec<f64>,
    pub index: Vec<usize>,
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub full: bool,
}

/// Left null certificate along one characteristic.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub xhat: Vec<f64>,
    pub index: Vec<usize>,
    pub gamma: Vec<f64>,
    pub x1: Vec<f64>,
    pub lambda: Vec<Vec<f64>>,
    /// `max |Λ A|` over the nodes.
    pub residual_annihilation: f64,
    /// `max |∂₁Λ - ΛB|` over the nodes.
    pub residual_ode: f64,
    pub min_lambda_norm: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub schema: u32,
    pub verdict: Verdict,
    pub expected_rank: usize,
    pub tol_rank: f64,
    pub tol_cert: f64,
    pub eps: f64,
    pub steps: usize,
    /// The verdict covers the sampled slice points only.
    pub sampled_points: usize,
    pub points: Vec<PointRank>,
    pub certificates: Vec<Certificate>,
}

/// Columns of `D(x_i) A(x_i)` for every node, side by side.
pub fn stacked_columns(sys: &AdmissibilitySystem, line: usize) -> Result<DMatrix<f64>> {
    let d = sys.fundamental_matrix(line)?;
    let (r, k) = (sys.r, sys.k);
    let mut s = DMatrix::zeros(r, k * (sys.steps + 1));
    for (i, di) in d.iter().enumerate() {
        s.columns_mut(i * k, k).copy_from(&(di * sys.a_node(line, i)));
    }
    Ok(s)
}

/// Numeric rank and singular values of the stacked columns of `DA`.
pub fn linear_fullness(sys: &AdmissibilitySystem, line: usize, tol_rank: f64) -> Result<(usize, Vec<f64>)> {
    if sys.r == 0 {
        return Ok((0, Vec::new()));
    }
    let s = stacked_columns(sys, line)?;
    let mut sv: Vec<f64> = if s.ncols() == 0 {
        vec![0.0; sys.r]
    } else {
        s.singular_values().iter().cloned().collect()
    };
    sv.sort_by(|a, b| b.total_cmp(a));
    sv.resize(sys.r, 0.0);
    Ok((numeric_rank(&sv, tol_rank), sv))
}

/// Left singular vector of the smallest singular value of the stacked
/// columns, signed so its largest entry is positive, and `Λ = ΓD` with its
/// residuals. `None` when the line is linearly full.
pub fn singular_certificate(
    sys: &AdmissibilitySystem,
    line: usize,
    tol_rank: f64,
    tol_cert: f64,
) -> Result<Option<Certificate>> {
    let (rank, _) = linear_fullness(sys, line, tol_rank)?;
    if rank == sys.r {
        return Ok(None);
    }
    let s = stacked_columns(sys, line)?;
    let eig = (&s * s.transpose()).symmetric_eigen();
    let idx = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut gamma = eig.eigenvectors.column(idx).into_owned();
    gamma /= gamma.norm();
    let big = gamma.iter().cloned().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(1.0);
    if big < 0.0 {
        gamma = -gamma;
    }
    let d = sys.fundamental_matrix(line)?;
    let lambda: Vec<DVector<f64>> = d.iter().map(|di| (gamma.transpose() * di).transpose()).collect();
    let mut annihilation: f64 = 0.0;
    let mut min_norm = f64::INFINITY;
    for (i, l) in lambda.iter().enumerate() {
        annihilation = annihilation.max((l.transpose() * sys.a_node(line, i)).amax());
        min_norm = min_norm.min(l.norm());
    }
    let dl = derivative4_vec(&lambda, sys.h());
    let mut ode: f64 = 0.0;
    for (i, l) in lambda.iter().enumerate() {
        let lb = (l.transpose() * sys.b_node(line, i)).transpose();
        ode = ode.max((&dl[i] - lb).amax());
    }
    let ln = &sys.lines[line];
    Ok(Some(Certificate {
        xhat: ln.xhat.clone(),
        index: ln.index.clone(),
        gamma: gamma.iter().cloned().collect(),
        x1: (0..=sys.steps).map(|i| sys.node_x1(i)).collect(),
        lambda: lambda.iter().map(|l| l.iter().cloned().collect()).collect(),
        residual_annihilation: annihilation,
        residual_ode: ode,
        min_lambda_norm: min_norm,
        valid: annihilation < tol_cert && ode < tol_cert && min_norm > 0.0,
    }))
}

/// Linear fullness at every slice point; regular when full everywhere.
pub fn is_regular(sys: &AdmissibilitySystem, tol_rank: f64, tol_cert: f64) -> Result<RegularityReport> {
    let per_line = (0..sys.lines.len())
        .into_par_iter()
        .map(|l| {
            let (rank, sv) = linear_fullness(sys, l, tol_rank)?;
            let cert = if rank < sys.r {
                singular_certificate(sys, l, tol_rank, tol_cert)?
            } else {
                None
            };
            let ln = &sys.lines[l];
            Ok((
                PointRank {
                    xhat: ln.xhat.clone(),
                    index: ln.index.clone(),
                    rank,
                    singular_values: sv,
                    full: rank == sys.r,
                },
                cert,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let verdict = if per_line.iter().all(|(p, _)| p.full) {
        Verdict::Regular
    } else {
        Verdict::Singular
    };
    let (points, certs): (Vec<_>, Vec<_>) = per_line.into_iter().unzip();
    Ok(RegularityReport {
        schema: 1,
        verdict,
        expected_rank: sys.r,
        tol_rank,
        tol_cert,
        eps: sys.eps,
        steps: sys.steps,
        sampled_points: points.len(),
        points,
        certificates: certs.into_iter().flatten().collect(),
    })
}

/// Comparison of `det D(x_1)` with `exp ∫₀^{x_1} Tr B` on one line.
#[derive(Debug, Clone, Serialize)]
pub struct DetCheck {
    pub max_deviation: f64,
    pub min_det: f64,
}

pub fn det_identity_check(sys: &AdmissibilitySystem, line: usize) -> Result<DetCheck> {
    let d = sys.fundamental_matrix(line)?;
    let traces: Vec<f64> = sys.lines[line].b.iter().map(|b| b.trace()).collect();
    let integral = cumulative_simpson_fine(&traces, sys.h());
    let mut dev: f64 = 0.0;
    let mut min_det = f64::INFINITY;
    for (di, int) in d.iter().zip(integral) {
        let det = if sys.r == 0 { 1.0 } else { di.determinant() };
        dev = dev.max((det - int.exp()).abs());
        min_det = min_det.min(det);
    }
    Ok(DetCheck {
        max_deviation: dev,
        min_det,
    })
}
