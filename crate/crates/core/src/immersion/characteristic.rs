use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::{Immersion, SplitPattern};
use crate::error::{Error, Result};
use crate::graded::GradedFrame;
use crate::numerics::linspace;

/// Transversal slice `Σ₀ = {origin + Σ s_j d_j}` sampled on a product grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sigma0 {
    pub origin: Vec<f64>,
    pub dirs: Vec<Vec<f64>>,
    pub ranges: Vec<(f64, f64)>,
    pub grid: usize,
}

impl Sigma0 {
    /// `(x̂, q)` pairs: slice coordinates and the parameter point they map to.
    pub fn points(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        let axes: Vec<Vec<f64>> = self
            .ranges
            .iter()
            .map(|&(a, b)| linspace(a, b, self.grid))
            .collect();
        let mut out = vec![(Vec::new(), self.origin.clone())];
        for (axis, dir) in axes.iter().zip(&self.dirs) {
            let mut next = Vec::with_capacity(out.len() * axis.len());
            for (xhat, q) in &out {
                for &s in axis {
                    let mut x = xhat.clone();
                    x.push(s);
                    let q2: Vec<f64> = q.iter().zip(dir).map(|(a, d)| a + s * d).collect();
                    next.push((x, q2));
                }
            }
            out = next;
        }
        out
    }
}

/// One characteristic curve: parameter points at `x_1 = i h / 2`,
/// `i = 0..=2N`, with the flow direction at each.
#[derive(Debug, Clone)]
pub struct Characteristic {
    pub xhat: Vec<f64>,
    pub params: Vec<Vec<f64>>,
    pub directions: Vec<DVector<f64>>,
}

/// Characteristic coordinates over `Ω_ε = (0, ε) × Σ₀`.
#[derive(Debug, Clone)]
pub struct CylinderGrid {
    pub eps: f64,
    pub steps: usize,
    pub lines: Vec<Characteristic>,
}

impl CylinderGrid {
    pub fn h(&self) -> f64 {
        self.eps / self.steps as f64
    }

    /// Node parameter points (even fine indices) of line `l`.
    pub fn nodes(&self, l: usize) -> impl Iterator<Item = &Vec<f64>> {
        self.lines[l].params.iter().step_by(2)
    }
}

pub fn check_steps(steps: usize) -> Result<()> {
    if steps < 4 || !steps.is_multiple_of(2) {
        return Err(Error::Invalid(format!(
            "step count must be even and at least 4, got {steps}"
        )));
    }
    Ok(())
}

/// Flows `Ē₁` from every point of `Σ₀` for time `eps` with `steps` RK4 steps
/// of size `h / 2`, so each curve carries node and half-node samples.
pub fn characteristic_coords(
    frame: &GradedFrame,
    im: &Immersion,
    pattern: &SplitPattern,
    sigma0: &Sigma0,
    eps: f64,
    steps: usize,
) -> Result<CylinderGrid> {
    check_steps(steps)?;
    let m = im.param_dim();
    if sigma0.origin.len() != m || sigma0.dirs.len() != m - 1 || sigma0.ranges.len() != m - 1 {
        return Err(Error::InvalidCylinder(format!(
            "slice needs an origin in {m} parameters and {} directions with ranges",
            m - 1
        )));
    }
    if let Some(d) = sigma0.dirs.iter().find(|d| d.len() != m) {
        return Err(Error::InvalidCylinder(format!("direction {d:?} has wrong length")));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidCylinder(format!("bad length {eps}")));
    }
    let half = eps / steps as f64 / 2.0;
    let lines = sigma0
        .points()
        .into_par_iter()
        .map(|(xhat, q0)| {
            let w0 = pattern.direction_at(frame, im, &q0, None)?;
            check_transversal(&w0, &sigma0.dirs, &q0)?;
            let mut params = Vec::with_capacity(2 * steps + 1);
            let mut directions = Vec::with_capacity(2 * steps + 1);
            let mut q = DVector::from_vec(q0);
            let mut w = w0;
            params.push(q.as_slice().to_vec());
            directions.push(w.clone());
            for _ in 0..2 * steps {
                let field = |x: &DVector<f64>, o: &DVector<f64>| {
                    pattern.direction_at(frame, im, x.as_slice(), Some(o))
                };
                let k1 = w.clone();
                let k2 = field(&(&q + &k1 * (half / 2.0)), &w)?;
                let k3 = field(&(&q + &k2 * (half / 2.0)), &w)?;
                let k4 = field(&(&q + &k3 * half), &w)?;
                q += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (half / 6.0);
                w = field(&q, &w)?;
                params.push(q.as_slice().to_vec());
                directions.push(w.clone());
            }
            Ok(Characteristic {
                xhat,
                params,
                directions,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CylinderGrid { eps, steps, lines })
}

fn check_transversal(w1: &DVector<f64>, dirs: &[Vec<f64>], q: &[f64]) -> Result<()> {
    let m = w1.len();
    let mut mat = DMatrix::zeros(m, m);
    mat.set_column(0, w1);
    for (j, d) in dirs.iter().enumerate() {
        let v = DVector::from_column_slice(d);
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::InvalidCylinder("zero slice direction".into()));
        }
        mat.set_column(j + 1, &(v / norm));
    }
    if mat.determinant().abs() < 1e-8 {
        return Err(Error::InvalidCylinder(format!(
            "characteristic direction is tangent to the slice at {q:?}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slice_points_form_a_product_grid() {
        let s = Sigma0 {
            origin: vec![0.0, 1.0, 0.0],
            dirs: vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 2.0]],
            ranges: vec![(0.0, 1.0), (-1.0, 1.0)],
            grid: 3,
        };
        let pts = s.points();
        assert_eq!(pts.len(), 9);
        assert_eq!(pts[0], (vec![0.0, -1.0], vec![0.0, 1.0, -2.0]));
        assert_eq!(pts[8], (vec![1.0, 1.0], vec![0.0, 2.0, 2.0]));
    }

    #[test]
    fn curves_have_a_single_slice_point() {
        let s = Sigma0 {
            origin: vec![0.5],
            dirs: vec![],
            ranges: vec![],
            grid: 32,
        };
        assert_eq!(s.points(), vec![(vec![], vec![0.5])]);
    }

    #[test]
    fn odd_step_counts_are_rejected() {
        assert!(check_steps(7).is_err());
        assert!(check_steps(2).is_err());
        assert!(check_steps(8).is_ok());
    }
}
