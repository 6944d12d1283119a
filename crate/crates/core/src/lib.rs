//! Frame analysis, admissibility systems and holonomy maps for ruled
//! submanifolds of equiregular graded manifolds.

pub mod admissibility;
pub mod error;
pub mod graded;
pub mod immersion;
pub mod model;
pub mod models;
pub mod numerics;
pub mod pipeline;
pub mod regularity;
pub mod symfield;
pub mod variation;

pub use error::{Error, Result};
pub use model::Model;
pub use pipeline::Prepared;
