//! From a parsed model to a sampled admissibility system.

use crate::admissibility::{AdmissibilitySystem, ControlField, VerticalField};
use crate::error::{Error, Result};
use crate::immersion::{characteristic_coords, CylinderGrid, SplitPattern};
use crate::model::Model;
use crate::symfield::Expr;

/// Split pattern, characteristic grid and sampled coefficients of a model.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub pattern: SplitPattern,
    pub grid: CylinderGrid,
    pub system: AdmissibilitySystem,
}

impl Model {
    /// Parameter points of the slice grid.
    pub fn slice_params(&self) -> Vec<Vec<f64>> {
        self.analysis.sigma0.points().into_iter().map(|(_, q)| q).collect()
    }

    /// Ruled structure detected on the slice grid.
    pub fn pattern(&self) -> Result<SplitPattern> {
        SplitPattern::detect(&self.frame, &self.immersion, &self.slice_params(), self.analysis.tol_deg)
    }

    pub fn cylinder(&self, pattern: &SplitPattern) -> Result<CylinderGrid> {
        characteristic_coords(
            &self.frame,
            &self.immersion,
            pattern,
            &self.analysis.sigma0,
            self.analysis.eps,
            self.analysis.steps,
        )
    }

    /// Full preparation. The tangent flag is checked on every node of the
    /// cylinder, not only on the slice.
    pub fn prepare(&self) -> Result<Prepared> {
        let pattern = self.pattern()?;
        let grid = self.cylinder(&pattern)?;
        let nodes: Vec<Vec<f64>> = (0..grid.lines.len())
            .flat_map(|l| grid.nodes(l).cloned().collect::<Vec<_>>())
            .collect();
        let flag = self
            .immersion
            .constant_flag(&self.frame, &nodes, self.analysis.tol_deg)?;
        if flag != pattern.flag {
            return Err(Error::NonConstantFlag(format!(
                "flag {flag:?} on the cylinder, {:?} on the slice",
                pattern.flag
            )));
        }
        let system = AdmissibilitySystem::from_grid(
            &self.frame,
            &self.immersion,
            &pattern,
            &grid,
            self.analysis.sigma0.grid,
        )?;
        Ok(Prepared {
            pattern,
            grid,
            system,
        })
    }

    /// Controls `g_{m+1}..g_{m+k}` from the expressions of the model,
    /// evaluated at the parameter point of every sample. Missing entries
    /// are zero.
    pub fn control_field(&self, prep: &Prepared) -> Result<ControlField> {
        let (m, k) = (prep.pattern.m, prep.pattern.k);
        if let Some(&i) = self.controls.g.keys().find(|&&i| i > m + k) {
            return Err(Error::Invalid(format!("g{i} is not a horizontal index (m + 1..={})", m + k)));
        }
        let exprs: Vec<Option<&Expr>> = (0..k).map(|h| self.controls.g.get(&(m + 1 + h))).collect();
        let sys = &prep.system;
        let mut g = ControlField::zeros(sys);
        for (l, line) in g.lines.iter_mut().enumerate() {
            for (i, v) in line.iter_mut().enumerate() {
                let q = &sys.lines[l].params[i];
                for (h, e) in exprs.iter().enumerate() {
                    if let Some(e) = e {
                        v[h] = e.eval(q)?;
                    }
                }
            }
        }
        Ok(g)
    }

    /// Vertical components `f_{m+k+1}..f_n` from the expressions of the
    /// model, at the nodes.
    pub fn vertical_field(&self, prep: &Prepared) -> Result<VerticalField> {
        let (m, k, r) = (prep.pattern.m, prep.pattern.k, prep.system.r);
        if let Some(&i) = self.controls.f.keys().find(|&&i| i <= m + k) {
            return Err(Error::Invalid(format!("f{i} is not a vertical index ({}..={})", m + k + 1, m + k + r)));
        }
        let sys = &prep.system;
        let mut f = VerticalField::zeros(sys);
        for (l, line) in f.lines.iter_mut().enumerate() {
            for (i, v) in line.iter_mut().enumerate() {
                let q = &sys.lines[l].params[2 * i];
                for (j, e) in &self.controls.f {
                    v[j - m - k - 1] = e.eval(q)?;
                }
            }
        }
        Ok(f)
    }
}
