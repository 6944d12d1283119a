//! First-order degree preservation of a normal variation.
//!
//! The probe `V = Σ g_h V_h + Σ f_r V_r` is written in frame coordinates
//! `c(q)` at each parameter point. Each point `Φ(q)` is pushed along the
//! field `Σ c_l(q) X_l` with the coefficients frozen, and the tangent vectors
//! are carried along by the variational equation. `ρ(t)` is the largest
//! component of degree above `deg M` in the pushed tangent m-vector.
//! Admissible probes give `ρ = O(t²)` or smaller, others `ρ ≍ t`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graded::{expand_wedge, GradedFrame};
use crate::immersion::{Immersion, SplitPattern};
use crate::numerics::{linear_fit_slope, rk4_step};
use crate::symfield::Expr;

/// RK4 steps used to push a point for time `t`.
const FLOW_STEPS: usize = 8;
/// Step of the five-point stencil for `∂c/∂q`.
const PARAM_STEP: f64 = 1e-3;
/// `ρ` below this is indistinguishable from rounding.
pub const NOISE_FLOOR: f64 = 1e-13;
pub const ADMISSIBLE_SLOPE: f64 = 1.8;
pub const NON_ADMISSIBLE_SLOPE: f64 = 1.2;

/// Normal probe field: `g[h]` multiplies `V_{m+1+h}`, `f[r]` multiplies
/// `V_{m+k+1+r}`; expressions in the parameters.
#[derive(Debug, Clone)]
pub struct Probe {
    pub g: Vec<Expr>,
    pub f: Vec<Expr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariationVerdict {
    Admissible,
    NotAdmissible,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct VariationReport {
    pub schema: u32,
    pub degree: usize,
    pub nodes: usize,
    pub t: Vec<f64>,
    pub rho: Vec<f64>,
    pub slope: Option<f64>,
    pub verdict: VariationVerdict,
}

impl VariationReport {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "rho"])?;
        for (t, r) in self.t.iter().zip(&self.rho) {
            w.write_record([format!("{t:?}"), format!("{r:?}")])?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }
}

/// Precomputed data for pushing tangent planes.
pub struct Variation<'a> {
    frame: &'a GradedFrame,
    im: &'a Immersion,
    pattern: &'a SplitPattern,
    probe: Probe,
    /// `∂X_l^a/∂x_b` for every frame field.
    jacobians: Vec<Vec<Vec<Expr>>>,
}

impl<'a> Variation<'a> {
    pub fn new(frame: &'a GradedFrame, im: &'a Immersion, pattern: &'a SplitPattern, probe: Probe) -> Result<Self> {
        if probe.g.len() != pattern.k || probe.f.len() != pattern.vertical_count() {
            return Err(Error::DimensionMismatch {
                expected: pattern.n - pattern.m,
                found: probe.g.len() + probe.f.len(),
            });
        }
        let jacobians = frame.fields().iter().map(|x| x.jacobian()).collect();
        Ok(Self {
            frame,
            im,
            pattern,
            probe,
            jacobians,
        })
    }

    /// Frame coordinates of the probe at `q`.
    pub fn coords_at(&self, q: &[f64]) -> Result<DVector<f64>> {
        let af = self.pattern.frame_at(self.frame, self.im, q, None)?;
        let weights = self
            .probe
            .g
            .iter()
            .chain(&self.probe.f)
            .map(|e| e.eval(q))
            .collect::<Result<Vec<_>>>()?;
        Ok(&af.v * DVector::from_vec(weights))
    }

    fn coords_gradient(&self, q: &[f64]) -> Result<DMatrix<f64>> {
        let m = q.len();
        let h = PARAM_STEP;
        let mut out = DMatrix::zeros(self.frame.dim(), m);
        for j in 0..m {
            let at = |s: f64| {
                let mut x = q.to_vec();
                x[j] += s;
                self.coords_at(&x)
            };
            let d = (at(-2.0 * h)? - at(-h)? * 8.0 + at(h)? * 8.0 - at(2.0 * h)?) / (12.0 * h);
            out.set_column(j, &d);
        }
        Ok(out)
    }

    /// Pushes `Φ(q)` and its tangent vectors for time `t`; returns the point
    /// and the `n × m` matrix of pushed tangents.
    pub fn push(&self, q: &[f64], t: f64) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let n = self.frame.dim();
        let m = q.len();
        let c = self.coords_at(q)?;
        let dc = self.coords_gradient(q)?;
        let mut state = DMatrix::zeros(n, m + 1);
        state.set_column(0, &DVector::from_vec(self.im.point(q)?));
        state.columns_mut(1, m).copy_from(&self.im.jacobian_at(q)?);
        let h = t / FLOW_STEPS as f64;
        let mut failure = None;
        for _ in 0..FLOW_STEPS {
            state = rk4_step(&state, h, |_, y| match self.rhs(y, &c, &dc) {
                Ok(v) => v,
                Err(e) => {
                    failure = Some(e);
                    DMatrix::zeros(n, m + 1)
                }
            });
            if let Some(e) = failure.take() {
                return Err(e);
            }
        }
        let p = state.column(0).iter().cloned().collect();
        Ok((p, state.columns(1, m).into_owned()))
    }

    fn rhs(&self, y: &DMatrix<f64>, c: &DVector<f64>, dc: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = self.frame.dim();
        let m = y.ncols() - 1;
        let p: Vec<f64> = y.column(0).iter().cloned().collect();
        let mat = self.frame.matrix_at(&p)?;
        let mut dv = DMatrix::zeros(n, n);
        for (l, jac) in self.jacobians.iter().enumerate() {
            if c[l] == 0.0 {
                continue;
            }
            for a in 0..n {
                for b in 0..n {
                    if !jac[a][b].is_zero() {
                        dv[(a, b)] += c[l] * jac[a][b].eval(&p)?;
                    }
                }
            }
        }
        let mut out = DMatrix::zeros(n, m + 1);
        out.set_column(0, &(&mat * c));
        out.columns_mut(1, m)
            .copy_from(&(&dv * y.columns(1, m) + &mat * dc));
        Ok(out)
    }

    /// `‖π_{>d}(pushed tangent m-vector)‖` at `q`.
    pub fn excess(&self, q: &[f64], t: f64) -> Result<f64> {
        let (p, tangents) = self.push(q, t)?;
        let vectors: Vec<Vec<f64>> = tangents.column_iter().map(|c| c.iter().cloned().collect()).collect();
        Ok(expand_wedge(&vectors, self.frame, &p)?
            .project_above(self.pattern.degree)
            .norm())
    }

    /// `ρ(t)`: the largest excess over `nodes`.
    pub fn rho(&self, nodes: &[Vec<f64>], t: f64) -> Result<f64> {
        let values = nodes
            .par_iter()
            .map(|q| self.excess(q, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(values.into_iter().fold(0.0, f64::max))
    }
}

/// `ρ(t)` at every `t`, the log–log slope and a verdict.
pub fn first_order_check(variation: &Variation<'_>, nodes: &[Vec<f64>], times: &[f64]) -> Result<VariationReport> {
    if times.len() < 2 || times.iter().any(|&t| t <= 0.0) {
        return Err(Error::Invalid("need at least two positive times".into()));
    }
    if nodes.is_empty() {
        return Err(Error::Invalid("no sample points".into()));
    }
    let rho = times
        .iter()
        .map(|&t| variation.rho(nodes, t))
        .collect::<Result<Vec<_>>>()?;
    let (slope, verdict) = if rho.iter().any(|&r| r < NOISE_FLOOR) {
        (None, VariationVerdict::Inconclusive)
    } else {
        let lt: Vec<f64> = times.iter().map(|t| t.ln()).collect();
        let lr: Vec<f64> = rho.iter().map(|r| r.ln()).collect();
        let s = linear_fit_slope(&lt, &lr);
        let v = if s >= ADMISSIBLE_SLOPE {
            VariationVerdict::Admissible
        } else if s <= NON_ADMISSIBLE_SLOPE {
            VariationVerdict::NotAdmissible
        } else {
            VariationVerdict::Inconclusive
        };
        (Some(s), v)
    };
    Ok(VariationReport {
        schema: 1,
        degree: variation.pattern.degree,
        nodes: nodes.len(),
        t: times.to_vec(),
        rho,
        slope,
        verdict,
    })
}
