use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{flag_degree, iota_k_from_flag, Immersion};
use crate::error::{Error, Result};
use crate::graded::GradedFrame;
use crate::numerics::smallest_right_singular;

/// Step of the five-point stencil used for derivatives along `E_1`.
const TANGENTIAL_STEP: f64 = 1e-3;
/// A complement field whose source coefficient falls below this degenerates.
const COMPLEMENT_TOL: f64 = 1e-8;

/// Structure of a ruled immersion fixed once on a reference point: flag,
/// degree, `(ι₀, k)` and which frame fields seed the complement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitPattern {
    pub flag: Vec<usize>,
    pub degree: usize,
    pub iota: usize,
    pub k: usize,
    pub step: usize,
    pub m: usize,
    pub n: usize,
    /// Frame index (0-based) seeding each complement field `V_{m+1}..V_n`.
    pub sources: Vec<usize>,
    /// Constant factor applied to each complement field.
    pub scales: Vec<f64>,
    pub tol: f64,
}

/// Adapted basis at one parameter point, in frame coordinates.
#[derive(Debug, Clone)]
pub struct AdaptedFrame {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    /// Parameter directions: `E_j = dΦ(w_j)` for column `j`.
    pub w: DMatrix<f64>,
    pub e: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

impl AdaptedFrame {
    /// The full basis `[E_1..E_m | V_{m+1}..V_n]`.
    pub fn basis(&self) -> DMatrix<f64> {
        let (n, m) = self.e.shape();
        let mut b = DMatrix::zeros(n, n);
        b.columns_mut(0, m).copy_from(&self.e);
        b.columns_mut(m, n - m).copy_from(&self.v);
        b
    }

    pub fn direction(&self) -> DVector<f64> {
        self.w.column(0).into_owned()
    }
}

/// Split data over a parameter grid.
#[derive(Debug, Clone)]
pub struct TangentAnalysis {
    pub pattern: SplitPattern,
    pub frames: Vec<AdaptedFrame>,
}

/// Detects the ruled structure on `grid` and builds the adapted basis at each
/// grid point. The complement sources are chosen on the first grid point.
pub fn adapted_split(
    frame: &GradedFrame,
    im: &Immersion,
    grid: &[Vec<f64>],
    tol: f64,
) -> Result<TangentAnalysis> {
    let pattern = SplitPattern::detect(frame, im, grid, tol)?;
    let frames = grid
        .iter()
        .map(|q| pattern.frame_at(frame, im, q, None))
        .collect::<Result<Vec<_>>>()?;
    Ok(TangentAnalysis { pattern, frames })
}

impl SplitPattern {
    pub fn detect(frame: &GradedFrame, im: &Immersion, grid: &[Vec<f64>], tol: f64) -> Result<Self> {
        let flag = im.constant_flag(frame, grid, tol)?;
        let degree = flag_degree(&flag);
        let (iota, k) = iota_k_from_flag(&flag, &frame.layer_dims())?;
        let (m, n, s) = (im.param_dim(), frame.dim(), frame.step());
        if flag[iota - 1] != 1 {
            return Err(Error::NotRuled(format!(
                "lowest tangent layer has dimension {}, expected 1",
                flag[iota - 1]
            )));
        }
        if degree != (m - 1) * s + iota {
            return Err(Error::NotRuled(format!(
                "degree {degree} differs from (m-1)s + ι₀ = {}",
                (m - 1) * s + iota
            )));
        }
        let mut pattern = SplitPattern {
            flag,
            degree,
            iota,
            k,
            step: s,
            m,
            n,
            sources: Vec::new(),
            scales: vec![1.0; n - m],
            tol,
        };
        pattern.sources = pattern.select_sources(frame, im, &grid[0])?;
        Ok(pattern)
    }

    pub fn vertical_count(&self) -> usize {
        self.n - self.m - self.k
    }

    /// Degrees of `E_1..E_m`.
    pub fn e_degrees(&self) -> Vec<usize> {
        let mut d = vec![self.step; self.m];
        d[0] = self.iota;
        d
    }

    /// Degrees of `V_{m+1}..V_n`.
    pub fn v_degrees(&self, frame: &GradedFrame) -> Vec<usize> {
        self.sources.iter().map(|&i| frame.degrees()[i]).collect()
    }

    /// Same pattern with complement field `V_{m+1+i}` multiplied by `scales[i]`.
    pub fn rescale_complement(&self, scales: &[f64]) -> Result<Self> {
        if scales.len() != self.n - self.m || scales.iter().any(|&c| c <= 0.0) {
            return Err(Error::Invalid("need one positive scale per complement field".into()));
        }
        let mut p = self.clone();
        p.scales = self.scales.iter().zip(scales).map(|(a, b)| a * b).collect();
        Ok(p)
    }

    /// Parameter directions `w_1..w_m`: `w_1` spans the kernel of the tangent
    /// rows above degree `ι₀`, the rest complete it to a positive orthonormal
    /// basis. `orient` fixes the sign of `w_1`; without it the first
    /// significant frame coordinate of `E_1` is made positive.
    pub fn directions(&self, c: &DMatrix<f64>, degrees: &[usize], orient: Option<&DVector<f64>>) -> DMatrix<f64> {
        let m = self.m;
        let rows: Vec<usize> = (0..c.nrows()).filter(|&i| degrees[i] > self.iota).collect();
        let r = DMatrix::from_fn(rows.len(), m, |a, b| c[(rows[a], b)]);
        let (mut w1, _) = smallest_right_singular(&r);
        let flip = match orient {
            Some(o) => w1.dot(o) < 0.0,
            None => {
                let e1 = c * &w1;
                let max = e1.amax();
                e1.iter().find(|x| x.abs() > 1e-9 * max).is_some_and(|x| *x < 0.0)
            }
        };
        if flip {
            w1 = -w1;
        }
        complete_positive_basis(&w1)
    }

    /// Adapted basis at `q`.
    pub fn frame_at(
        &self,
        frame: &GradedFrame,
        im: &Immersion,
        q: &[f64],
        orient: Option<&DVector<f64>>,
    ) -> Result<AdaptedFrame> {
        let (p, c) = im.tangent_coords(frame, q)?;
        let w = self.directions(&c, frame.degrees(), orient);
        let e = &c * &w;
        let v = self.complement(&e, frame.degrees(), q)?;
        Ok(AdaptedFrame {
            q: q.to_vec(),
            p,
            w,
            e,
            v,
        })
    }

    /// Only the characteristic direction `w_1` at `q`.
    pub fn direction_at(
        &self,
        frame: &GradedFrame,
        im: &Immersion,
        q: &[f64],
        orient: Option<&DVector<f64>>,
    ) -> Result<DVector<f64>> {
        let (_, c) = im.tangent_coords(frame, q)?;
        Ok(self.directions(&c, frame.degrees(), orient).column(0).into_owned())
    }

    fn complement(&self, e: &DMatrix<f64>, degrees: &[usize], q: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.n;
        let e_deg = self.e_degrees();
        let mut v = DMatrix::zeros(n, n - self.m);
        for (idx, &src) in self.sources.iter().enumerate() {
            let level = degrees[src];
            let mut span: Vec<DVector<f64>> = (0..self.m)
                .filter(|&j| e_deg[j] <= level)
                .map(|j| e.column(j).into_owned())
                .collect();
            span.extend((0..idx).map(|j| v.column(j).into_owned()));
            let r = residual(&unit(n, src), &span);
            if r[src].abs() < COMPLEMENT_TOL {
                return Err(Error::InvalidFrame(format!(
                    "complement seeded by frame field {} degenerates at {q:?}",
                    src + 1
                )));
            }
            let factor = self.scales[idx] / r[src];
            v.set_column(idx, &(r * factor));
        }
        Ok(v)
    }

    /// Greedy choice, per layer, of the frame fields farthest from the span
    /// of the tangent fields of that degree or lower.
    fn select_sources(&self, frame: &GradedFrame, im: &Immersion, q: &[f64]) -> Result<Vec<usize>> {
        let (_, c) = im.tangent_coords(frame, q)?;
        let degrees = frame.degrees();
        let w = self.directions(&c, degrees, None);
        let e = &c * &w;
        let e_deg = self.e_degrees();
        let n = self.n;
        let mut chosen: Vec<usize> = Vec::new();
        let mut chosen_vecs: Vec<DVector<f64>> = Vec::new();
        for level in 1..=self.step {
            let in_layer = degrees.iter().filter(|&&d| d == level).count();
            let tangent = e_deg.iter().filter(|&&d| d == level).count();
            let need = in_layer.checked_sub(tangent).ok_or_else(|| {
                Error::NotRuled(format!("layer {level} holds more tangent fields than frame fields"))
            })?;
            for _ in 0..need {
                let mut span: Vec<DVector<f64>> = (0..self.m)
                    .filter(|&j| e_deg[j] <= level)
                    .map(|j| e.column(j).into_owned())
                    .collect();
                span.extend(chosen_vecs.iter().cloned());
                // Ties go to the lowest frame index.
                let best = (0..n)
                    .filter(|&i| degrees[i] == level && !chosen.contains(&i))
                    .map(|i| (i, residual(&unit(n, i), &span)))
                    .reduce(|a, b| if b.1.norm() > a.1.norm() { b } else { a })
                    .ok_or_else(|| Error::NotRuled(format!("no complement field left in layer {level}")))?;
                if best.1.norm() < COMPLEMENT_TOL {
                    return Err(Error::NotRuled(format!("layer {level} cannot be completed")));
                }
                chosen.push(best.0);
                chosen_vecs.push(best.1);
            }
        }
        Ok(chosen)
    }

    /// Vertical rows of the coefficients of `[E_1, V_h]` in the adapted basis:
    /// `A` for horizontal `V_h`, `B` for vertical `V_h`.
    pub fn coefficients(
        &self,
        frame: &GradedFrame,
        im: &Immersion,
        q: &[f64],
        orient: Option<&DVector<f64>>,
    ) -> Result<(DMatrix<f64>, DMatrix<f64>, AdaptedFrame)> {
        let af = self.frame_at(frame, im, q, orient)?;
        let w1 = af.direction();
        let n = self.n;
        let nv = n - self.m;

        // E_1 applied to the coefficient functions of the complement fields.
        let h = TANGENTIAL_STEP;
        let shifted = |t: f64| -> Result<DMatrix<f64>> {
            let qs: Vec<f64> = q.iter().zip(w1.iter()).map(|(a, b)| a + t * b).collect();
            Ok(self.frame_at(frame, im, &qs, Some(&w1))?.v)
        };
        let dv = (shifted(-2.0 * h)? - shifted(-h)? * 8.0 + shifted(h)? * 8.0 - shifted(2.0 * h)?)
            / (12.0 * h);

        // Structure functions of the frame at p.
        let m_lu = frame.checked_matrix_at(&af.p)?.lu();
        let e1 = af.e.column(0);
        let mut brackets = DMatrix::zeros(n, nv);
        for i in 0..n {
            if e1[i] == 0.0 {
                continue;
            }
            for l in 0..n {
                let coeffs: Vec<f64> = (0..nv).map(|hh| af.v[(l, hh)]).collect();
                if coeffs.iter().all(|c| *c == 0.0) || i == l {
                    continue;
                }
                let g = DVector::from_vec(frame.bracket(i, l).eval(&af.p)?);
                let g = m_lu
                    .solve(&g)
                    .ok_or_else(|| Error::SingularFrame(af.p.clone()))?;
                for (hh, c) in coeffs.iter().enumerate() {
                    let scale = e1[i] * c;
                    if scale != 0.0 {
                        let mut col = brackets.column_mut(hh);
                        col.axpy(scale, &g, 1.0);
                    }
                }
            }
        }
        let w = dv + brackets;
        let y = af
            .basis()
            .lu()
            .solve(&w)
            .ok_or_else(|| Error::InvalidFrame(format!("adapted basis singular at {q:?}")))?;
        let (k, r, m) = (self.k, self.vertical_count(), self.m);
        let a = DMatrix::from_fn(r, k, |i, hh| y[(m + k + i, hh)]);
        let b = DMatrix::from_fn(r, r, |i, rr| y[(m + k + i, k + rr)]);
        Ok((a, b, af))
    }
}

fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

/// Component of `x` orthogonal to `span` (Euclidean in frame coordinates).
fn residual(x: &DVector<f64>, span: &[DVector<f64>]) -> DVector<f64> {
    let mut q: Vec<DVector<f64>> = Vec::new();
    for s in span {
        let mut u = s.clone();
        for b in &q {
            u -= b * b.dot(&u);
        }
        let norm = u.norm();
        if norm > 1e-12 {
            q.push(u / norm);
        }
    }
    let mut r = x.clone();
    for b in &q {
        r -= b * b.dot(&r);
    }
    for b in &q {
        r -= b * b.dot(&r);
    }
    r
}

/// Orthonormal basis with first column `w1` and determinant `+1`.
fn complete_positive_basis(w1: &DVector<f64>) -> DMatrix<f64> {
    let m = w1.len();
    let mut w = DMatrix::zeros(m, m);
    let w1 = w1 / w1.norm();
    w.set_column(0, &w1);
    if m == 2 {
        w[(0, 1)] = -w1[1];
        w[(1, 1)] = w1[0];
        return w;
    }
    let mut cols = vec![w1];
    for i in 0..m {
        if cols.len() == m {
            break;
        }
        let r = residual(&unit(m, i), &cols);
        if r.norm() > 1e-6 {
            cols.push(r.normalize());
        }
    }
    for (j, c) in cols.iter().enumerate() {
        w.set_column(j, c);
    }
    if m > 1 && w.determinant() < 0.0 {
        let last = -w.column(m - 1).into_owned();
        w.set_column(m - 1, &last);
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positive_orthonormal_completion() {
        for w1 in [vec![1.0, 0.0], vec![0.6, -0.8], vec![0.0, 0.0, 1.0], vec![1.0, 2.0, 2.0]] {
            let w = complete_positive_basis(&DVector::from_vec(w1));
            let m = w.nrows();
            assert!((w.transpose() * &w - DMatrix::identity(m, m)).amax() < 1e-12);
            assert!((w.determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn residual_is_orthogonal() {
        let span = vec![DVector::from_vec(vec![1.0, 1.0, 0.0])];
        let r = residual(&unit(3, 0), &span);
        assert!(r.dot(&span[0]).abs() < 1e-15);
        assert!((r - DVector::from_vec(vec![0.5, -0.5, 0.0])).amax() < 1e-15);
    }
}
