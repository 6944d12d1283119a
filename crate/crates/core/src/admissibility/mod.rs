//! The reduced admissibility system `∂₁F = -BF - AG` along characteristics,
//! its solver, fundamental matrix, holonomy formula and residuals.

mod fields;
pub mod heisenberg;

pub use fields::{ControlField, VerticalField};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graded::GradedFrame;
use crate::immersion::{check_steps, CylinderGrid, Immersion, SplitPattern};
use crate::numerics::{derivative4_vec, rk4_step, simpson_matrix};

/// Coefficients sampled along one characteristic, at nodes and half-nodes.
#[derive(Debug, Clone)]
pub struct Line {
    /// Slice coordinates of the starting point.
    pub xhat: Vec<f64>,
    /// Grid index of the starting point on the slice.
    pub index: Vec<usize>,
    pub a: Vec<DMatrix<f64>>,
    pub b: Vec<DMatrix<f64>>,
    /// Parameter points of the samples, when built from an immersion.
    pub params: Vec<Vec<f64>>,
}

/// Sampled `A(x)`, `B(x)` over the cylinder.
#[derive(Debug, Clone)]
pub struct AdmissibilitySystem {
    pub eps: f64,
    pub steps: usize,
    pub m: usize,
    pub k: usize,
    pub r: usize,
    pub slice_grid: usize,
    pub lines: Vec<Line>,
}

impl AdmissibilitySystem {
    /// Evaluates the coefficients on every sample of a characteristic grid.
    pub fn from_grid(
        frame: &GradedFrame,
        im: &Immersion,
        pattern: &SplitPattern,
        grid: &CylinderGrid,
        slice_grid: usize,
    ) -> Result<Self> {
        let slice_dim = pattern.m - 1;
        let lines = grid
            .lines
            .par_iter()
            .enumerate()
            .map(|(l, ch)| {
                let samples = ch
                    .params
                    .par_iter()
                    .zip(&ch.directions)
                    .map(|(q, w)| pattern.coefficients(frame, im, q, Some(w)).map(|(a, b, _)| (a, b)))
                    .collect::<Result<Vec<_>>>()?;
                let (a, b) = samples.into_iter().unzip();
                Ok(Line {
                    xhat: ch.xhat.clone(),
                    index: slice_index(l, slice_dim, slice_grid),
                    a,
                    b,
                    params: ch.params.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let sys = Self {
            eps: grid.eps,
            steps: grid.steps,
            m: pattern.m,
            k: pattern.k,
            r: pattern.vertical_count(),
            slice_grid,
            lines,
        };
        sys.check_finite()?;
        Ok(sys)
    }

    /// System with prescribed coefficient functions `a(x_1, xhat)` and
    /// `b(x_1, xhat)`, one line per entry of `xhats`.
    pub fn synthetic<FA, FB>(
        eps: f64,
        steps: usize,
        k: usize,
        r: usize,
        xhats: &[Vec<f64>],
        a: FA,
        b: FB,
    ) -> Result<Self>
    where
        FA: Fn(f64, &[f64]) -> DMatrix<f64>,
        FB: Fn(f64, &[f64]) -> DMatrix<f64>,
    {
        check_steps(steps)?;
        let h = eps / steps as f64;
        let lines = xhats
            .iter()
            .enumerate()
            .map(|(l, xhat)| {
                let xs: Vec<f64> = (0..=2 * steps).map(|i| i as f64 * h / 2.0).collect();
                let a: Vec<DMatrix<f64>> = xs.iter().map(|&x| a(x, xhat)).collect();
                let b: Vec<DMatrix<f64>> = xs.iter().map(|&x| b(x, xhat)).collect();
                if a.iter().any(|m| m.shape() != (r, k)) || b.iter().any(|m| m.shape() != (r, r)) {
                    return Err(Error::DimensionMismatch {
                        expected: r,
                        found: a[0].nrows(),
                    });
                }
                Ok(Line {
                    xhat: xhat.clone(),
                    index: vec![l],
                    a,
                    b,
                    params: Vec::new(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let sys = Self {
            eps,
            steps,
            m: 2,
            k,
            r,
            slice_grid: xhats.len(),
            lines,
        };
        sys.check_finite()?;
        Ok(sys)
    }

    pub fn h(&self) -> f64 {
        self.eps / self.steps as f64
    }

    pub fn fine_len(&self) -> usize {
        2 * self.steps + 1
    }

    pub fn fine_x1(&self, i: usize) -> f64 {
        i as f64 * self.h() / 2.0
    }

    pub fn node_x1(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }

    pub fn slice_dim(&self) -> usize {
        self.lines.first().map_or(0, |l| l.index.len())
    }

    pub fn line_of_index(&self, idx: &[usize]) -> Option<usize> {
        self.lines.iter().position(|l| l.index == idx)
    }

    /// `A` at node `i` of `line`.
    pub fn a_node(&self, line: usize, i: usize) -> &DMatrix<f64> {
        &self.lines[line].a[2 * i]
    }

    pub fn b_node(&self, line: usize, i: usize) -> &DMatrix<f64> {
        &self.lines[line].b[2 * i]
    }

    fn check_finite(&self) -> Result<()> {
        for (l, line) in self.lines.iter().enumerate() {
            if line
                .a
                .iter()
                .chain(&line.b)
                .any(|m| m.iter().any(|x| !x.is_finite()))
            {
                return Err(Error::Overflow(format!("non-finite coefficients on line {l}")));
            }
        }
        Ok(())
    }

    fn check_controls(&self, g: &ControlField) -> Result<()> {
        if g.k != self.k
            || g.lines.len() != self.lines.len()
            || g.lines.iter().any(|l| l.len() != self.fine_len())
        {
            return Err(Error::Invalid("controls do not match the system".into()));
        }
        Ok(())
    }

    /// RK4 along each characteristic with `F(0, x̂) = 0`.
    pub fn solve_ruled(&self, g: &ControlField) -> Result<VerticalField> {
        self.check_controls(g)?;
        let h = self.h();
        let lines = self
            .lines
            .par_iter()
            .zip(&g.lines)
            .enumerate()
            .map(|(l, (line, gl))| {
                let mut f = DVector::zeros(self.r);
                let mut out = Vec::with_capacity(self.steps + 1);
                out.push(DVector::zeros(self.r));
                for i in 0..self.steps {
                    f = rk4_step(&f, h, |j, y| {
                        let s = 2 * i + j;
                        -(&line.b[s] * y) - &line.a[s] * &gl[s]
                    });
                    if f.iter().any(|x| !x.is_finite()) {
                        return Err(Error::Overflow(format!("solution blows up on line {l}")));
                    }
                    out.push(f.clone());
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(VerticalField { r: self.r, lines })
    }

    /// `D(x_1)` at the nodes of `line`, from `D' = DB`, `D(0) = I`.
    pub fn fundamental_matrix(&self, line: usize) -> Result<Vec<DMatrix<f64>>> {
        let ln = &self.lines[line];
        let h = self.h();
        let mut d = DMatrix::identity(self.r, self.r);
        let mut out = Vec::with_capacity(self.steps + 1);
        out.push(d.clone());
        for i in 0..self.steps {
            d = rk4_step(&d, h, |j, y| y * &ln.b[2 * i + j]);
            if d.iter().any(|x| !x.is_finite()) {
                return Err(Error::Overflow(format!("fundamental matrix blows up on line {line}")));
            }
            out.push(d.clone());
        }
        Ok(out)
    }

    /// `F(ε, x̂) = -D(ε)^{-1} ∫₀^ε D A G dτ` for every line, Simpson on the nodes.
    pub fn holonomy(&self, g: &ControlField) -> Result<Vec<DVector<f64>>> {
        self.check_controls(g)?;
        (0..self.lines.len())
            .into_par_iter()
            .map(|l| {
                let d = self.fundamental_matrix(l)?;
                let integrand: Vec<DMatrix<f64>> = (0..=self.steps)
                    .map(|i| {
                        let v = &d[i] * self.a_node(l, i) * g.node(l, i);
                        DMatrix::from_column_slice(self.r, 1, v.as_slice())
                    })
                    .collect();
                let integral = simpson_matrix(&integrand, self.h());
                let end = d[self.steps].clone();
                let f = end
                    .lu()
                    .solve(&integral)
                    .ok_or(Error::SingularFundamental(self.eps))?;
                Ok(-f.column(0).into_owned())
            })
            .collect()
    }

    /// `∂₁F + BF + AG` at every node; `∂₁F` by fourth-order differences.
    pub fn general_residual(&self, f: &VerticalField, g: &ControlField) -> Result<Vec<Vec<DVector<f64>>>> {
        self.check_controls(g)?;
        if f.lines.len() != self.lines.len() || f.r != self.r {
            return Err(Error::Invalid("vertical field does not match the system".into()));
        }
        let h = self.h();
        Ok((0..self.lines.len())
            .map(|l| {
                let df = derivative4_vec(&f.lines[l], h);
                (0..=self.steps)
                    .map(|i| &df[i] + self.b_node(l, i) * &f.lines[l][i] + self.a_node(l, i) * g.node(l, i))
                    .collect()
            })
            .collect())
    }

    pub fn max_residual(&self, f: &VerticalField, g: &ControlField) -> Result<f64> {
        Ok(self
            .general_residual(f, g)?
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.amax())))
    }

    /// Checks `‖F‖∞ + ‖∂₁F‖∞ ≤ K ‖AG‖∞` with `K = C₁(1 + β) + 1`,
    /// `C₁ = ε e^{εβ}`, `β = sup ‖B‖₂`.
    pub fn norm_estimate(&self, f: &VerticalField, g: &ControlField) -> Result<NormEstimate> {
        self.check_controls(g)?;
        let beta = self
            .lines
            .iter()
            .flat_map(|l| &l.b)
            .map(|b| b.singular_values().max())
            .fold(0.0, f64::max);
        let c1 = self.eps * (self.eps * beta).exp();
        let k = c1 * (1.0 + beta) + 1.0;
        let mut sup_f: f64 = 0.0;
        let mut sup_df: f64 = 0.0;
        let mut sup_ag: f64 = 0.0;
        for (l, line) in self.lines.iter().enumerate() {
            for s in 0..self.fine_len() {
                sup_ag = sup_ag.max((&line.a[s] * &g.lines[l][s]).norm());
            }
            for i in 0..=self.steps {
                let fi = &f.lines[l][i];
                let df = -(self.b_node(l, i) * fi) - self.a_node(l, i) * g.node(l, i);
                sup_f = sup_f.max(fi.norm());
                sup_df = sup_df.max(df.norm());
            }
        }
        let lhs = sup_f + sup_df;
        let rhs = k * sup_ag;
        Ok(NormEstimate {
            sup_f,
            sup_df,
            sup_ag,
            beta,
            c1,
            k,
            holds: lhs <= rhs * (1.0 + ROUNDING_ALLOWANCE),
        })
    }
}

/// Relative allowance for rounding when the bound is attained exactly.
const ROUNDING_ALLOWANCE: f64 = 1e-12;

/// Outcome of [`AdmissibilitySystem::norm_estimate`].
#[derive(Debug, Clone, Serialize)]
pub struct NormEstimate {
    pub sup_f: f64,
    pub sup_df: f64,
    pub sup_ag: f64,
    pub beta: f64,
    pub c1: f64,
    pub k: f64,
    pub holds: bool,
}

/// Row-major multi-index of line `l` on a slice grid.
fn slice_index(l: usize, dim: usize, grid: usize) -> Vec<usize> {
    let mut idx = vec![0; dim];
    let mut rest = l;
    for j in (0..dim).rev() {
        idx[j] = rest % grid.max(1);
        rest /= grid.max(1);
    }
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(eps: f64, steps: usize, a: f64, b: f64) -> AdmissibilitySystem {
        AdmissibilitySystem::synthetic(
            eps,
            steps,
            1,
            1,
            &[vec![0.0]],
            |_, _| DMatrix::from_element(1, 1, a),
            |_, _| DMatrix::from_element(1, 1, b),
        )
        .unwrap()
    }

    #[test]
    fn zero_controls_give_zero() {
        let sys = scalar(1.0, 16, -1.0, 0.7);
        let g = ControlField::zeros(&sys);
        assert_eq!(sys.solve_ruled(&g).unwrap().max_abs(), 0.0);
        assert_eq!(sys.holonomy(&g).unwrap()[0][0], 0.0);
    }

    #[test]
    fn scalar_closed_form() {
        // F' = -bF + g  ⇒  F = (g/b)(1 - e^{-bx})
        let (b, gval) = (0.8, 1.7);
        let sys = scalar(1.0, 64, -1.0, b);
        let g = ControlField::from_fn(&sys, |_, _| Ok(DVector::from_element(1, gval))).unwrap();
        let f = sys.solve_ruled(&g).unwrap();
        for (i, v) in f.lines[0].iter().enumerate() {
            let x = sys.node_x1(i);
            assert!((v[0] - gval / b * (1.0 - (-b * x).exp())).abs() < 1e-8);
        }
    }

    #[test]
    fn scalar_fundamental_matrix() {
        let sys = scalar(1.0, 128, 0.0, 0.9);
        let d = sys.fundamental_matrix(0).unwrap();
        for (i, m) in d.iter().enumerate() {
            assert!((m[(0, 0)] - (0.9 * sys.node_x1(i)).exp()).abs() < 1e-9);
        }
        let sys = scalar(1.0, 32, 0.0, 0.0);
        assert!(sys.fundamental_matrix(0).unwrap().iter().all(|m| m[(0, 0)] == 1.0));
    }

    #[test]
    fn unit_control_on_unit_a() {
        let sys = scalar(0.5, 8, -1.0, 0.0);
        let g = ControlField::from_fn(&sys, |_, _| Ok(DVector::from_element(1, 1.0))).unwrap();
        assert!((sys.solve_ruled(&g).unwrap().endpoint()[0][0] - 0.5).abs() < 1e-14);
        assert!((sys.holonomy(&g).unwrap()[0][0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn residual_of_hand_made_fields() {
        let sys = scalar(1.0, 16, -1.0, 0.0);
        // f = x g with constant g solves ∂f = g.
        let g = ControlField::from_fn(&sys, |_, _| Ok(DVector::from_element(1, 2.0))).unwrap();
        let f = VerticalField::from_fn(&sys, |x, _| Ok(DVector::from_element(1, 2.0 * x))).unwrap();
        assert!(sys.max_residual(&f, &g).unwrap() < 1e-12);
        // f = x², g = 0 leaves 2x.
        let g = ControlField::zeros(&sys);
        let f = VerticalField::from_fn(&sys, |x, _| Ok(DVector::from_element(1, x * x))).unwrap();
        let r = sys.general_residual(&f, &g).unwrap();
        for (i, v) in r[0].iter().enumerate() {
            assert!((v[0] - 2.0 * sys.node_x1(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn cubic_midpoints() {
        let sys = scalar(1.0, 8, -1.0, 0.0);
        let nodes = vec![(0..=8)
            .map(|i| DVector::from_element(1, (sys.node_x1(i)).powi(3)))
            .collect()];
        let g = ControlField::from_nodes(&sys, nodes).unwrap();
        for (i, v) in g.lines[0].iter().enumerate() {
            assert!((v[0] - sys.fine_x1(i).powi(3)).abs() < 1e-14);
        }
    }

    #[test]
    fn slice_indices_are_row_major() {
        assert_eq!(slice_index(5, 2, 3), vec![1, 2]);
        assert_eq!(slice_index(0, 0, 3), Vec::<usize>::new());
    }
}
