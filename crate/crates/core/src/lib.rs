// `!(a < b)` is how NaN is rejected throughout
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod admissibility;
pub mod error;
pub mod expr;
pub mod groups;
pub mod linalg;
pub mod orbits;
pub mod plancherel;
pub mod profile;
pub mod quadrature;
pub mod transform;
