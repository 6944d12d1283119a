use super::expr::Expr;
use crate::error::{Error, Result};

/// Vector field given by its components in the coordinate frame.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: Vec<Expr>,
}

impl VectorField {
    pub fn new(components: Vec<Expr>) -> Self {
        Self { components }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(vec![Expr::zero(); dim])
    }

    /// Coordinate field `∂_i` in dimension `dim`.
    pub fn coordinate(i: usize, dim: usize) -> Self {
        let mut c = vec![Expr::zero(); dim];
        c[i] = Expr::one();
        Self::new(c)
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    /// Derivation `X(f) = Σ X^i ∂_i f`.
    pub fn apply(&self, f: &Expr) -> Expr {
        self.components
            .iter()
            .enumerate()
            .fold(Expr::zero(), |acc, (i, xi)| {
                Expr::add(acc, Expr::mul(xi.clone(), f.diff(i)))
            })
    }

    /// `[X, Y]^k = Σ_i X^i ∂_i Y^k - Y^i ∂_i X^k`.
    pub fn lie_bracket(&self, other: &VectorField) -> Result<VectorField> {
        self.check_dim(other)?;
        let comps = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(xk, yk)| Expr::sub(self.apply(yk), other.apply(xk)))
            .collect();
        Ok(VectorField::new(comps))
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: p.len(),
            });
        }
        self.components.iter().map(|c| c.eval(p)).collect()
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        self.check_dim(other)?;
        Ok(VectorField::new(
            self.components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| Expr::add(a.clone(), b.clone()))
                .collect(),
        ))
    }

    /// Multiplies every component by the function `f`.
    pub fn scale(&self, f: &Expr) -> VectorField {
        VectorField::new(
            self.components
                .iter()
                .map(|c| Expr::mul(f.clone(), c.clone()))
                .collect(),
        )
    }

    /// Jacobian `∂X^k/∂x_i`, row `k`, column `i`.
    pub fn jacobian(&self) -> Vec<Vec<Expr>> {
        let n = self.dim();
        self.components
            .iter()
            .map(|c| (0..n).map(|i| c.diff(i)).collect())
            .collect()
    }

    fn check_dim(&self, other: &VectorField) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse::parse;
    use super::*;

    fn field(src: &[&str], coords: &[String]) -> VectorField {
        VectorField::new(src.iter().map(|s| parse(s, coords).unwrap()).collect())
    }

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn coordinate_fields_commute() {
        let b = VectorField::coordinate(0, 3)
            .lie_bracket(&VectorField::coordinate(1, 3))
            .unwrap();
        assert!(b.components().iter().all(Expr::is_zero));
    }

    #[test]
    fn engel_first_bracket() {
        let c = names(&["x1", "x2", "x3", "x4"]);
        let x1 = field(&["1", "0", "0", "0"], &c);
        let x2 = field(&["0", "1", "x1", "x1^2/2"], &c);
        let b = x1.lie_bracket(&x2).unwrap();
        for p in [[0.0, 0.0, 0.0, 0.0], [1.5, -2.0, 3.0, 0.5]] {
            assert_eq!(b.eval(&p).unwrap(), vec![0.0, 0.0, 1.0, p[0]]);
        }
        assert_eq!(x2.eval(&[2.0, 0.0, 0.0, 0.0]).unwrap(), vec![0.0, 1.0, 2.0, 2.0]);
    }

    #[test]
    fn heisenberg_bracket_with_displayed_signs() {
        let c = names(&["x", "y", "t"]);
        let x = field(&["1", "0", "y/2"], &c);
        let y = field(&["0", "1", "-x/2"], &c);
        assert_eq!(x.eval(&[0.0, 4.0, 0.0]).unwrap(), vec![1.0, 0.0, 2.0]);
        let b = x.lie_bracket(&y).unwrap();
        assert_eq!(b.eval(&[0.3, -0.7, 2.0]).unwrap(), vec![0.0, 0.0, -1.0]);
    }

    #[test]
    fn zero_field_evaluates_to_zero() {
        assert_eq!(VectorField::zero(3).eval(&[1.0, 2.0, 3.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn dimension_mismatch() {
        let err = VectorField::zero(2).lie_bracket(&VectorField::zero(3));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }
}
