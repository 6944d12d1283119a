//! Symbolic expressions in the ambient coordinates and vector fields built
//! from them.

mod expr;
mod field;
mod parse;

pub use expr::{Expr, ExprDisplay};
pub use field::VectorField;
pub use parse::parse;

/// Parses each entry of `components` as a field component.
pub fn parse_field(components: &[&str], coords: &[String]) -> crate::Result<VectorField> {
    components
        .iter()
        .map(|s| parse(s, coords))
        .collect::<crate::Result<Vec<_>>>()
        .map(VectorField::new)
}
