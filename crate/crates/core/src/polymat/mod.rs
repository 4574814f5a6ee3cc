//! Complex matrices, univariate polynomials and polynomial matrices.

mod matrix;
mod poly;
mod polymatrix;

pub use matrix::*;
pub(crate) use poly::argmax_abs;
pub use poly::{Poly, TRIM_RELATIVE};
pub use polymatrix::{
    charpoly, combination_index, combinations, full_size_minors, full_size_poly_minors, poly_matrix_det, PolyMatrix,
    MAX_POLY_DET_SIZE,
};
