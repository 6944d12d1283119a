//! Parametrized immersions: tangent frames, tangent flags, pointwise degree,
//! the adapted split of a ruled immersion and its characteristic grid.

mod characteristic;
mod split;

pub use characteristic::{characteristic_coords, check_steps, Characteristic, CylinderGrid, Sigma0};
pub use split::{adapted_split, AdaptedFrame, SplitPattern, TangentAnalysis};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graded::{GradedFrame, MultiVector};
use crate::numerics::{numeric_rank, sorted_singular_values};
use crate::symfield::Expr;

/// Relative singular-value cutoff for the immersion condition.
const IMMERSION_TOL: f64 = 1e-10;

/// Chart `Φ(u_1..u_m)` into the ambient coordinates.
#[derive(Debug, Clone)]
pub struct Immersion {
    params: Vec<String>,
    chart: Vec<Expr>,
    jacobian: Vec<Vec<Expr>>,
}

impl Immersion {
    pub fn new(params: Vec<String>, chart: Vec<Expr>) -> Result<Self> {
        let m = params.len();
        if m == 0 || m > chart.len() {
            return Err(Error::Invalid(format!(
                "{m} parameters for a chart with {} components",
                chart.len()
            )));
        }
        if let Some(v) = chart.iter().filter_map(Expr::max_var).max() {
            if v >= m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: v + 1,
                });
            }
        }
        let jacobian = chart
            .iter()
            .map(|c| (0..m).map(|j| c.diff(j)).collect())
            .collect();
        Ok(Self {
            params,
            chart,
            jacobian,
        })
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn chart(&self) -> &[Expr] {
        &self.chart
    }

    pub fn param_dim(&self) -> usize {
        self.params.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.chart.len()
    }

    pub fn point(&self, q: &[f64]) -> Result<Vec<f64>> {
        self.check_param(q)?;
        self.chart.iter().map(|c| c.eval(q)).collect()
    }

    /// Chart Jacobian at `q` without the rank check.
    pub fn jacobian_at(&self, q: &[f64]) -> Result<DMatrix<f64>> {
        self.check_param(q)?;
        let (n, m) = (self.ambient_dim(), self.param_dim());
        let mut j = DMatrix::zeros(n, m);
        for i in 0..n {
            for k in 0..m {
                j[(i, k)] = self.jacobian[i][k].eval(q)?;
            }
        }
        Ok(j)
    }

    /// Columns `∂Φ/∂u_j` at `q`; fails where the rank drops.
    pub fn tangent_frame(&self, q: &[f64]) -> Result<DMatrix<f64>> {
        let j = self.jacobian_at(q)?;
        let s = sorted_singular_values(&j);
        if numeric_rank(&s, IMMERSION_TOL) < self.param_dim() {
            return Err(Error::NotImmersion(q.to_vec()));
        }
        Ok(j)
    }

    pub fn tangent_vectors(&self, q: &[f64]) -> Result<Vec<Vec<f64>>> {
        let j = self.tangent_frame(q)?;
        Ok(j.column_iter().map(|c| c.iter().cloned().collect()).collect())
    }

    /// Ambient point and frame coordinates of the tangent vectors at `q`.
    pub fn tangent_coords(&self, frame: &GradedFrame, q: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        if frame.dim() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: frame.dim(),
                found: self.ambient_dim(),
            });
        }
        let p = self.point(q)?;
        let j = self.tangent_frame(q)?;
        let c = frame.coords_matrix(&j, &p)?;
        Ok((p, c))
    }

    /// Tangent flag dimensions `m̃_1..m̃_s` at `q`.
    pub fn flag_dims(&self, frame: &GradedFrame, q: &[f64], tol: f64) -> Result<Vec<usize>> {
        let (_, c) = self.tangent_coords(frame, q)?;
        Ok(flag_dims_from_coords(&c, frame.degrees(), tol))
    }

    pub fn wedge(&self, frame: &GradedFrame, q: &[f64]) -> Result<MultiVector> {
        let (_, c) = self.tangent_coords(frame, q)?;
        Ok(MultiVector::from_frame_coords(&c, frame.degrees()))
    }

    pub fn pointwise_degree(&self, frame: &GradedFrame, q: &[f64], tol: f64) -> Result<usize> {
        self.wedge(frame, q)?.degree(tol)
    }

    pub fn global_degree(&self, frame: &GradedFrame, grid: &[Vec<f64>], tol: f64) -> Result<usize> {
        let mut best = 0;
        for q in grid {
            best = best.max(self.pointwise_degree(frame, q, tol)?);
        }
        Ok(best)
    }

    /// Grid points whose pointwise degree is below the maximum over the grid.
    pub fn singular_scan(
        &self,
        frame: &GradedFrame,
        grid: &[Vec<f64>],
        tol: f64,
    ) -> Result<Vec<Vec<f64>>> {
        let degs = grid
            .iter()
            .map(|q| self.pointwise_degree(frame, q, tol))
            .collect::<Result<Vec<_>>>()?;
        let max = degs.iter().copied().max().unwrap_or(0);
        Ok(grid
            .iter()
            .zip(degs)
            .filter(|(_, d)| *d < max)
            .map(|(q, _)| q.clone())
            .collect())
    }

    /// Flag dimensions common to every grid point.
    pub fn constant_flag(&self, frame: &GradedFrame, grid: &[Vec<f64>], tol: f64) -> Result<Vec<usize>> {
        let mut flag: Option<Vec<usize>> = None;
        for q in grid {
            let f = self.flag_dims(frame, q, tol)?;
            match &flag {
                None => flag = Some(f),
                Some(g) if *g != f => {
                    return Err(Error::NonConstantFlag(format!(
                        "{g:?} at the first point, {f:?} at {q:?}"
                    )))
                }
                _ => {}
            }
        }
        flag.ok_or_else(|| Error::Invalid("empty parameter grid".into()))
    }

    /// `(ι₀, k)`: the lowest layer meeting the tangent space and the number
    /// of complementary fields of that degree or lower.
    pub fn iota_k(&self, frame: &GradedFrame, grid: &[Vec<f64>], tol: f64) -> Result<(usize, usize)> {
        let flag = self.constant_flag(frame, grid, tol)?;
        iota_k_from_flag(&flag, &frame.layer_dims())
    }

    /// Degree-`d` area over the box `lo..hi` with `cells` midpoint cells per
    /// parameter, Euclidean parameter measure.
    pub fn degree_area(
        &self,
        frame: &GradedFrame,
        lo: &[f64],
        hi: &[f64],
        cells: usize,
        d: usize,
    ) -> Result<f64> {
        let m = self.param_dim();
        if lo.len() != m || hi.len() != m || cells == 0 {
            return Err(Error::Invalid("degree area needs a box in parameter space".into()));
        }
        let widths: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| (b - a) / cells as f64).collect();
        let cell_volume: f64 = widths.iter().product();
        let total = cells.pow(m as u32);
        let mut sum = 0.0;
        let mut q = vec![0.0; m];
        for idx in 0..total {
            let mut rest = idx;
            for j in 0..m {
                q[j] = lo[j] + (rest % cells) as f64 * widths[j] + 0.5 * widths[j];
                rest /= cells;
            }
            sum += self.wedge(frame, &q)?.project_degree(d).norm();
        }
        Ok(sum * cell_volume)
    }

    fn check_param(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.param_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.param_dim(),
                found: q.len(),
            });
        }
        Ok(())
    }
}

/// `m̃_j = m - rank(rows of degree > j)` for `j = 1..s`.
pub fn flag_dims_from_coords(c: &DMatrix<f64>, degrees: &[usize], tol: f64) -> Vec<usize> {
    let m = c.ncols();
    let s = degrees.last().copied().unwrap_or(0);
    let scale = sorted_singular_values(c).first().copied().unwrap_or(0.0);
    (1..=s)
        .map(|j| {
            let rows: Vec<usize> = (0..c.nrows()).filter(|&i| degrees[i] > j).collect();
            if rows.is_empty() {
                return m;
            }
            let sub = DMatrix::from_fn(rows.len(), m, |a, b| c[(rows[a], b)]);
            let sv = sorted_singular_values(&sub);
            m - sv.iter().filter(|&&x| x > tol * scale).count()
        })
        .collect()
}

/// Homogeneous dimension `Σ j (m̃_j - m̃_{j-1})` of a tangent flag.
pub fn flag_degree(flag: &[usize]) -> usize {
    let mut prev = 0;
    let mut d = 0;
    for (j, &f) in flag.iter().enumerate() {
        d += (j + 1) * (f - prev);
        prev = f;
    }
    d
}

pub fn iota_k_from_flag(flag: &[usize], layer_dims: &[usize]) -> Result<(usize, usize)> {
    let iota = flag
        .iter()
        .position(|&f| f != 0)
        .map(|i| i + 1)
        .ok_or(Error::ZeroDegree)?;
    Ok((iota, layer_dims[iota - 1] - flag[iota - 1]))
}
