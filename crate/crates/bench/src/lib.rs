//! Inputs shared by the benchmarks.

use holonomy_core::admissibility::{AdmissibilitySystem, ControlField};
use holonomy_core::Result;
use nalgebra::{DMatrix, DVector};

/// System with smooth trigonometric coefficients on `lines` characteristics.
pub fn trig_system(k: usize, r: usize, lines: usize, steps: usize) -> Result<AdmissibilitySystem> {
    let xhats: Vec<Vec<f64>> = (0..lines).map(|l| vec![l as f64 / lines.max(1) as f64]).collect();
    AdmissibilitySystem::synthetic(
        1.0,
        steps,
        k,
        r,
        &xhats,
        |x, xh| DMatrix::from_fn(r, k, |i, j| ((i + 2 * j + 1) as f64 * x + xh[0]).sin()),
        |x, xh| DMatrix::from_fn(r, r, |i, j| 0.3 * ((i + j) as f64 * x - xh[0]).cos()),
    )
}

pub fn trig_controls(sys: &AdmissibilitySystem) -> Result<ControlField> {
    ControlField::from_fn(sys, |x, l| Ok(DVector::from_fn(sys.k, |i, _| ((i + 1) as f64 * x + l as f64).cos())))
}
