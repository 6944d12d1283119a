//! Adapted frames of equiregular graded manifolds and degrees of vectors and
//! multivectors.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{combinations, numeric_rank, sorted_singular_values};
use crate::symfield::VectorField;

/// Condition-number cutoff below which a frame matrix counts as singular.
const FRAME_COND_TOL: f64 = 1e-12;

/// Ordered adapted basis `X_1..X_n` with nondecreasing degrees.
#[derive(Debug, Clone)]
pub struct GradedFrame {
    coords: Vec<String>,
    names: Vec<String>,
    fields: Vec<VectorField>,
    degrees: Vec<usize>,
    brackets: Vec<Vec<VectorField>>,
}

impl GradedFrame {
    pub fn new(
        coords: Vec<String>,
        names: Vec<String>,
        fields: Vec<VectorField>,
        degrees: Vec<usize>,
    ) -> Result<Self> {
        let n = coords.len();
        if fields.len() != n || degrees.len() != n || names.len() != n {
            return Err(Error::InvalidFrame(format!(
                "{n} coordinates but {} fields, {} degrees, {} names",
                fields.len(),
                degrees.len(),
                names.len()
            )));
        }
        if let Some(f) = fields.iter().find(|f| f.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: f.dim(),
            });
        }
        if degrees.first() != Some(&1) && n > 0 {
            return Err(Error::InvalidFrame("lowest degree must be 1".into()));
        }
        if degrees.windows(2).any(|w| w[1] < w[0] || w[1] > w[0] + 1) {
            return Err(Error::InvalidFrame(
                "degrees must be nondecreasing without gaps".into(),
            ));
        }
        let mut brackets = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                row.push(if j > i {
                    fields[i].lie_bracket(&fields[j])?
                } else {
                    VectorField::zero(n)
                });
            }
            brackets.push(row);
        }
        for i in 0..n {
            for j in 0..i {
                let neg = brackets[j][i].scale(&crate::symfield::Expr::Const(-1.0));
                brackets[i][j] = neg;
            }
        }
        Ok(Self {
            coords,
            names,
            fields,
            degrees,
            brackets,
        })
    }

    pub fn dim(&self) -> usize {
        self.fields.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn fields(&self) -> &[VectorField] {
        &self.fields
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn step(&self) -> usize {
        self.degrees.last().copied().unwrap_or(0)
    }

    /// Cumulative layer dimensions `n_1 <= ... <= n_s = n`.
    pub fn layer_dims(&self) -> Vec<usize> {
        (1..=self.step())
            .map(|l| self.degrees.iter().filter(|&&d| d <= l).count())
            .collect()
    }

    /// Symbolic `[X_i, X_j]` (0-based).
    pub fn bracket(&self, i: usize, j: usize) -> &VectorField {
        &self.brackets[i][j]
    }

    /// Frame matrix with columns `X_i(p)`.
    pub fn matrix_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (j, f) in self.fields.iter().enumerate() {
            for (i, v) in f.eval(p)?.into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    /// Frame matrix together with a check that it is invertible.
    pub fn checked_matrix_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let m = self.matrix_at(p)?;
        let s = sorted_singular_values(&m);
        let max = s.first().copied().unwrap_or(0.0);
        let min = s.last().copied().unwrap_or(0.0);
        if max == 0.0 || min <= FRAME_COND_TOL * max {
            return Err(Error::SingularFrame(p.to_vec()));
        }
        Ok(m)
    }

    /// Coordinates `c` with `Σ c_i X_i(p) = v`.
    pub fn coords_in_frame(&self, v: &[f64], p: &[f64]) -> Result<DVector<f64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        let m = self.checked_matrix_at(p)?;
        m.lu()
            .solve(&DVector::from_column_slice(v))
            .ok_or_else(|| Error::SingularFrame(p.to_vec()))
    }

    /// Frame coordinates of each column of `vectors`.
    pub fn coords_matrix(&self, vectors: &DMatrix<f64>, p: &[f64]) -> Result<DMatrix<f64>> {
        let m = self.checked_matrix_at(p)?;
        m.lu()
            .solve(vectors)
            .ok_or_else(|| Error::SingularFrame(p.to_vec()))
    }

    /// Degree of the vector `v` at `p`.
    pub fn vector_degree(&self, v: &[f64], p: &[f64], tol: f64) -> Result<usize> {
        let c = self.coords_in_frame(v, p)?;
        degree_of_coords(c.as_slice(), &self.degrees, tol)
    }

    /// Checks invertibility, bracket compatibility and constancy of the
    /// layer dimensions at each sample.
    pub fn validate(&self, samples: &[Vec<f64>], tol: f64) -> Result<FrameReport> {
        if samples.is_empty() {
            return Err(Error::Invalid("no sample points".into()));
        }
        let n = self.dim();
        let layers = self.layer_dims();
        let mut report = FrameReport {
            samples: samples.len(),
            invertible: true,
            max_bracket_violation: 0.0,
            worst_bracket: None,
            layer_dims: layers.clone(),
            layer_dims_constant: true,
            min_condition: f64::INFINITY,
            passes: false,
        };
        for p in samples {
            let m = self.checked_matrix_at(p)?;
            let s = sorted_singular_values(&m);
            report.min_condition = report.min_condition.min(s[n - 1] / s[0]);
            for &nl in &layers {
                let sub = m.columns(0, nl).into_owned();
                if numeric_rank(&sorted_singular_values(&sub), FRAME_COND_TOL) != nl {
                    report.layer_dims_constant = false;
                }
            }
            let lu = m.lu();
            for a in 0..n {
                for b in a + 1..n {
                    let v = DVector::from_vec(self.brackets[a][b].eval(p)?);
                    let c = lu.solve(&v).ok_or_else(|| Error::SingularFrame(p.to_vec()))?;
                    let scale = tol * c.amax().max(1.0);
                    let bound = self.degrees[a] + self.degrees[b];
                    for (l, &cl) in c.iter().enumerate() {
                        if self.degrees[l] > bound {
                            let excess = cl.abs() - scale;
                            if cl.abs() > report.max_bracket_violation {
                                report.max_bracket_violation = cl.abs();
                            }
                            if excess > 0.0 && report.worst_bracket.is_none() {
                                report.worst_bracket =
                                    Some((self.names[a].clone(), self.names[b].clone()));
                            }
                        }
                    }
                }
            }
        }
        report.passes = report.invertible
            && report.layer_dims_constant
            && report.worst_bracket.is_none();
        Ok(report)
    }
}

/// Outcome of [`GradedFrame::validate`].
#[derive(Debug, Clone, Serialize)]
pub struct FrameReport {
    pub samples: usize,
    pub invertible: bool,
    pub max_bracket_violation: f64,
    pub worst_bracket: Option<(String, String)>,
    pub layer_dims: Vec<usize>,
    pub layer_dims_constant: bool,
    pub min_condition: f64,
    pub passes: bool,
}

/// Largest degree carrying a coefficient above `tol` relative to the largest.
pub fn degree_of_coords(c: &[f64], degrees: &[usize], tol: f64) -> Result<usize> {
    let max = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max <= tol || !max.is_finite() {
        return Err(Error::ZeroDegree);
    }
    Ok(c.iter()
        .zip(degrees)
        .filter(|(x, _)| x.abs() > tol * max)
        .map(|(_, &d)| d)
        .max()
        .unwrap_or(0))
}

/// Strictly increasing selection of frame fields, 0-based.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(idx: Vec<usize>) -> Result<Self> {
        if idx.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid(format!("multi-index {idx:?} not increasing")));
        }
        Ok(Self(idx))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn degree(&self, degrees: &[usize]) -> usize {
        self.0.iter().map(|&i| degrees[i]).sum()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| (i + 1).to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// `m`-vector `Σ λ_J X_J` in a graded frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiVector {
    order: usize,
    degrees: Vec<usize>,
    terms: BTreeMap<MultiIndex, f64>,
}

impl MultiVector {
    pub fn new(order: usize, degrees: Vec<usize>, terms: BTreeMap<MultiIndex, f64>) -> Result<Self> {
        if let Some(j) = terms.keys().find(|j| j.0.len() != order) {
            return Err(Error::Invalid(format!("index {j} has wrong order")));
        }
        Ok(Self {
            order,
            degrees,
            terms,
        })
    }

    /// Wedge of the columns of `coords`, the frame coordinates of `m` vectors:
    /// `λ_J` is the minor on rows `J`.
    pub fn from_frame_coords(coords: &DMatrix<f64>, degrees: &[usize]) -> Self {
        let (n, m) = coords.shape();
        let mut terms = BTreeMap::new();
        for rows in combinations(n, m) {
            let sub = DMatrix::from_fn(m, m, |a, b| coords[(rows[a], b)]);
            let det = if m == 0 { 1.0 } else { sub.determinant() };
            if det != 0.0 {
                terms.insert(MultiIndex(rows), det);
            }
        }
        Self {
            order: m,
            degrees: degrees.to_vec(),
            terms,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, f64> {
        &self.terms
    }

    pub fn coefficient(&self, idx: &[usize]) -> f64 {
        self.terms.get(&MultiIndex(idx.to_vec())).copied().unwrap_or(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.terms.values().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn max_abs(&self) -> f64 {
        self.terms.values().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Largest `deg(X_J)` with `|λ_J| > tol * max |λ|`.
    pub fn degree(&self, tol: f64) -> Result<usize> {
        let max = self.max_abs();
        if max == 0.0 || !max.is_finite() {
            return Err(Error::ZeroDegree);
        }
        Ok(self
            .terms
            .iter()
            .filter(|(_, v)| v.abs() > tol * max)
            .map(|(j, _)| j.degree(&self.degrees))
            .max()
            .unwrap_or(0))
    }

    fn filtered(&self, keep: impl Fn(usize) -> bool) -> Self {
        Self {
            order: self.order,
            degrees: self.degrees.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(j, _)| keep(j.degree(&self.degrees)))
                .map(|(j, v)| (j.clone(), *v))
                .collect(),
        }
    }

    /// Terms of degree exactly `d`.
    pub fn project_degree(&self, d: usize) -> Self {
        self.filtered(|deg| deg == d)
    }

    /// Terms of degree at least `d + 1`.
    pub fn project_above(&self, d: usize) -> Self {
        self.filtered(|deg| deg > d)
    }

    /// Terms of degree below `d`.
    pub fn project_below(&self, d: usize) -> Self {
        self.filtered(|deg| deg < d)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (j, v) in &other.terms {
            *terms.entry(j.clone()).or_insert(0.0) += v;
        }
        Self {
            order: self.order,
            degrees: self.degrees.clone(),
            terms,
        }
    }
}

/// Wedge of `vectors` (ambient components) expressed in the frame at `p`.
pub fn expand_wedge(vectors: &[Vec<f64>], frame: &GradedFrame, p: &[f64]) -> Result<MultiVector> {
    let n = frame.dim();
    if vectors.len() > n {
        return Err(Error::Invalid(format!("{} vectors in dimension {n}", vectors.len())));
    }
    let mut v = DMatrix::zeros(n, vectors.len());
    for (j, col) in vectors.iter().enumerate() {
        if col.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: col.len(),
            });
        }
        for (i, x) in col.iter().enumerate() {
            v[(i, j)] = *x;
        }
    }
    let c = frame.coords_matrix(&v, p)?;
    Ok(MultiVector::from_frame_coords(&c, frame.degrees()))
}

/// Sum of the `m` largest degrees.
pub fn d_max(frame: &GradedFrame, m: usize) -> usize {
    frame.degrees().iter().rev().take(m).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symfield::parse_field;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    pub(crate) fn engel() -> GradedFrame {
        let c = names(&["x1", "x2", "x3", "x4"]);
        let f = vec![
            parse_field(&["1", "0", "0", "0"], &c).unwrap(),
            parse_field(&["0", "1", "x1", "x1^2/2"], &c).unwrap(),
            parse_field(&["0", "0", "1", "x1"], &c).unwrap(),
            parse_field(&["0", "0", "0", "1"], &c).unwrap(),
        ];
        GradedFrame::new(c, names(&["X1", "X2", "X3", "X4"]), f, vec![1, 1, 2, 3]).unwrap()
    }

    fn heisenberg() -> GradedFrame {
        let c = names(&["x", "y", "t"]);
        let f = vec![
            parse_field(&["1", "0", "-y/2"], &c).unwrap(),
            parse_field(&["0", "1", "x/2"], &c).unwrap(),
            parse_field(&["0", "0", "1"], &c).unwrap(),
        ];
        GradedFrame::new(c, names(&["X", "Y", "T"]), f, vec![1, 1, 2]).unwrap()
    }

    #[test]
    fn standard_frames_validate() {
        let samples = vec![vec![0.0; 4], vec![1.0, -2.0, 0.5, 3.0], vec![-0.7, 0.1, 2.0, -1.0]];
        let r = engel().validate(&samples, 1e-9).unwrap();
        assert!(r.passes, "{r:?}");
        assert_eq!(r.layer_dims, vec![2, 3, 4]);
        let r = heisenberg()
            .validate(&[vec![0.0; 3], vec![1.0, 2.0, 3.0]], 1e-9)
            .unwrap();
        assert!(r.passes);
    }

    #[test]
    fn duplicated_field_is_singular() {
        let c = names(&["x", "y"]);
        let f = parse_field(&["1", "0"], &c).unwrap();
        let frame =
            GradedFrame::new(c, names(&["A", "B"]), vec![f.clone(), f], vec![1, 1]).unwrap();
        assert!(matches!(
            frame.validate(&[vec![0.0, 0.0]], 1e-9),
            Err(Error::SingularFrame(_))
        ));
    }

    #[test]
    fn misordered_frame_fails_bracket_check() {
        // [X1, X2] = X3 lands on a field declared of degree 3.
        let e = engel();
        let frame = GradedFrame::new(
            e.coords().to_vec(),
            e.names().to_vec(),
            vec![e.fields()[0].clone(), e.fields()[1].clone(), e.fields()[3].clone(), e.fields()[2].clone()],
            vec![1, 1, 2, 3],
        )
        .unwrap();
        let r = frame.validate(&[vec![0.3, 0.0, 0.0, 0.0]], 1e-9).unwrap();
        assert!(!r.passes);
    }

    #[test]
    fn coordinates_in_frame() {
        let e = engel();
        let p = [1.0, 0.0, 0.0, 0.0];
        let x2 = e.fields()[1].eval(&p).unwrap();
        let c = e.coords_in_frame(&x2, &p).unwrap();
        assert!((c - DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0])).amax() < 1e-14);
        // At x1 = 1 the fourth coordinate direction is X4 itself.
        let c = e.coords_in_frame(&[0.0, 0.0, 0.0, 1.0], &p).unwrap();
        assert!((c - DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0])).amax() < 1e-14);
        let c = e.coords_in_frame(&[0.0; 4], &p).unwrap();
        assert_eq!(c.amax(), 0.0);
    }

    #[test]
    fn vector_degrees() {
        let h = heisenberg();
        let p = [0.4, -1.0, 2.0];
        assert_eq!(h.vector_degree(&[0.0, 0.0, 1.0], &p, 1e-9).unwrap(), 2);
        let x = h.fields()[0].eval(&p).unwrap();
        let v: Vec<f64> = x.iter().zip([0.0, 0.0, 1e-15]).map(|(a, b)| a + b).collect();
        assert_eq!(h.vector_degree(&v, &p, 1e-9).unwrap(), 1);
        assert_eq!(h.vector_degree(&[0.0; 3], &p, 1e-9), Err(Error::ZeroDegree));
        let e = engel();
        let q = [0.8, 1.0, -3.0, 2.0];
        let x3 = e.fields()[2].eval(&q).unwrap();
        assert_eq!(e.vector_degree(&x3, &q, 1e-9).unwrap(), 2);
    }

    #[test]
    fn wedge_of_frame_fields() {
        let e = engel();
        let p = [0.5, 0.0, 0.0, 0.0];
        let f = e.fields();
        let mv = expand_wedge(&[f[0].eval(&p).unwrap(), f[1].eval(&p).unwrap()], &e, &p).unwrap();
        assert!((mv.coefficient(&[0, 1]) - 1.0).abs() < 1e-14);
        assert!(mv.norm() - 1.0 < 1e-14);
        let mv = expand_wedge(&[f[1].eval(&p).unwrap(), f[3].eval(&p).unwrap()], &e, &p).unwrap();
        assert!((mv.coefficient(&[1, 3]) - 1.0).abs() < 1e-14);
        assert_eq!(mv.degree(1e-9).unwrap(), 4);
        assert_eq!(mv.project_degree(4), mv);
    }

    #[test]
    fn maximal_degrees() {
        assert_eq!(d_max(&engel(), 2), 5);
        assert_eq!(d_max(&engel(), 4), 7);
        assert_eq!(d_max(&heisenberg(), 1), 2);
    }
}
